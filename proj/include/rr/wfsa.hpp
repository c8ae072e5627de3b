// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "rr/semiring.hpp"

namespace rr {

using StateId = std::int32_t;
using Symbol = std::int32_t;

/// Reserved label for transitions that consume no input.
inline constexpr Symbol kEpsilon = -1;

struct TransitionKey {
  StateId src = 0;
  StateId dst = 0;
  Symbol label = 0;

  friend auto operator<=>(const TransitionKey&, const TransitionKey&) = default;
};

struct Transition {
  TransitionKey key;
  double weight = 0.0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Weighted finite-state automaton <Sigma, Q, tau, lambda, rho> over a
/// runtime-selected semiring. Symbols are ids in [0, alphabet_size); the
/// epsilon label is kEpsilon. Weights that were never set are the semiring
/// zero. Mutators do not check bounds; validate() does.
class Wfsa {
 public:
  Wfsa() = default;
  Wfsa(Semiring semiring, std::size_t num_states, std::size_t alphabet_size);

  const Semiring& semiring() const { return semiring_; }
  std::size_t num_states() const { return num_states_; }
  std::size_t alphabet_size() const { return alphabet_size_; }
  std::size_t num_transitions() const { return arcs_.size(); }

  /// Sets tau(src, dst, label), replacing any earlier weight for that key.
  void set_transition(StateId src, StateId dst, Symbol label, double weight);
  void set_initial(StateId state, double weight);
  void set_final(StateId state, double weight);

  double transition(StateId src, StateId dst, Symbol label) const;
  double initial(StateId state) const;
  double final_weight(StateId state) const;

  /// Transitions in insertion order.
  std::span<const Transition> transitions() const { return arcs_; }
  /// Indices into transitions() of the arcs reading `label` (empty when
  /// the label is outside the alphabet).
  std::span<const std::size_t> arcs_reading(Symbol label) const;
  std::span<const std::size_t> epsilon_arcs() const { return epsilon_arcs_; }

  const std::map<StateId, double>& initial_weights() const { return initial_; }
  const std::map<StateId, double>& final_weights() const { return final_; }

  /// Structural equality: same semiring, sizes, and weight functions
  /// (transition insertion order is ignored).
  friend bool operator==(const Wfsa& a, const Wfsa& b);

 private:
  Semiring semiring_;
  std::size_t num_states_ = 0;
  std::size_t alphabet_size_ = 0;
  std::vector<Transition> arcs_;
  std::map<TransitionKey, std::size_t> arc_index_;
  std::vector<std::vector<std::size_t>> arcs_by_symbol_;
  std::vector<std::size_t> epsilon_arcs_;
  std::map<StateId, double> initial_;
  std::map<StateId, double> final_;
};

/// A sequence of adjacent transitions (dst of step i is src of step i+1).
struct Path {
  std::vector<TransitionKey> transitions;
};

/// Per-state prefix totals of the Forward recursion after `step` symbols.
struct ForwardState {
  std::vector<double> omega;
  std::size_t step = 0;
  // Epsilon-subgraph order, computed once by forward_begin.
  std::vector<StateId> closure_order;
};

/// Instrumentation for the linear-time guarantee.
struct ForwardStats {
  std::size_t arc_visits = 0;
};

/// Checks index bounds, carrier membership of every weight, and that the
/// epsilon subgraph is acyclic. Throws IndexOutOfBounds, NonMemberElement
/// or EpsilonCycle.
void validate(const Wfsa& a);

/// States of the epsilon subgraph in a topological order. Throws
/// EpsilonCycle when no such order exists.
std::vector<StateId> epsilon_topological_order(const Wfsa& a);

/// lambda(q_1) * prod tau(pi_i) * rho(q_{n+1}). Throws InvalidPath for an
/// empty or non-adjacent path.
double path_score(const Wfsa& a, const Path& p);

/// Oracle: semiring sum of path_score over every path deriving `x`, with at
/// most `max_eps` consecutive epsilon arcs between consumed symbols.
/// Exponential; limited to 8 states and |x| + max_eps <= 10.
double string_score_bruteforce(const Wfsa& a, std::span<const Symbol> x, std::size_t max_eps);

/// Streaming Forward recursion. forward_begin applies lambda and the epsilon
/// closure; forward_advance consumes one symbol and re-closes.
ForwardState forward_begin(const Wfsa& a);
void forward_advance(const Wfsa& a, ForwardState& state, Symbol symbol,
                     ForwardStats* stats = nullptr);
double forward_score(const Wfsa& a, const ForwardState& state);

/// Score of the whole string, linear in |x|.
double forward(const Wfsa& a, std::span<const Symbol> x, ForwardStats* stats = nullptr);

/// Element t-1 is forward(a, x[:t]) for t = 1..|x|, in a single pass.
std::vector<double> forward_prefixes(const Wfsa& a, std::span<const Symbol> x);

}  // namespace rr
