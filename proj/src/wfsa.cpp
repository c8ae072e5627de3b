// SPDX-License-Identifier: Apache-2.0
#include "rr/wfsa.hpp"

#include <algorithm>
#include <string>

#include "rr/error.hpp"

namespace rr {

Wfsa::Wfsa(Semiring semiring, std::size_t num_states, std::size_t alphabet_size)
    : semiring_(semiring),
      num_states_(num_states),
      alphabet_size_(alphabet_size),
      arcs_by_symbol_(alphabet_size) {}

void Wfsa::set_transition(StateId src, StateId dst, Symbol label, double weight) {
  const TransitionKey key{src, dst, label};
  if (auto it = arc_index_.find(key); it != arc_index_.end()) {
    arcs_[it->second].weight = weight;
    return;
  }
  const std::size_t idx = arcs_.size();
  arcs_.push_back({key, weight});
  arc_index_.emplace(key, idx);
  if (label == kEpsilon) {
    epsilon_arcs_.push_back(idx);
  } else if (label >= 0 && static_cast<std::size_t>(label) < alphabet_size_) {
    arcs_by_symbol_[label].push_back(idx);
  }
}

void Wfsa::set_initial(StateId state, double weight) { initial_[state] = weight; }
void Wfsa::set_final(StateId state, double weight) { final_[state] = weight; }

double Wfsa::transition(StateId src, StateId dst, Symbol label) const {
  auto it = arc_index_.find({src, dst, label});
  return it == arc_index_.end() ? semiring_.zero() : arcs_[it->second].weight;
}

double Wfsa::initial(StateId state) const {
  auto it = initial_.find(state);
  return it == initial_.end() ? semiring_.zero() : it->second;
}

double Wfsa::final_weight(StateId state) const {
  auto it = final_.find(state);
  return it == final_.end() ? semiring_.zero() : it->second;
}

std::span<const std::size_t> Wfsa::arcs_reading(Symbol label) const {
  if (label < 0 || static_cast<std::size_t>(label) >= alphabet_size_) return {};
  return arcs_by_symbol_[label];
}

bool operator==(const Wfsa& a, const Wfsa& b) {
  if (a.semiring_ != b.semiring_ || a.num_states_ != b.num_states_ ||
      a.alphabet_size_ != b.alphabet_size_ || a.initial_ != b.initial_ ||
      a.final_ != b.final_ || a.arcs_.size() != b.arcs_.size()) {
    return false;
  }
  for (const auto& arc : a.arcs_) {
    auto it = b.arc_index_.find(arc.key);
    if (it == b.arc_index_.end() || b.arcs_[it->second].weight != arc.weight) return false;
  }
  return true;
}

namespace {

bool state_in_range(const Wfsa& a, StateId q) {
  return q >= 0 && static_cast<std::size_t>(q) < a.num_states();
}

void check_weight(const Wfsa& a, double w, const char* what) {
  if (!a.semiring().is_member(w)) {
    throw Error(ErrorCode::kNonMemberElement,
                std::string(what) + " weight " + std::to_string(w) + " is not in the " +
                    std::string(a.semiring().name()) + " carrier");
  }
}

std::string describe(const TransitionKey& k) {
  return "(" + std::to_string(k.src) + ", " + std::to_string(k.dst) + ", " +
         (k.label == kEpsilon ? std::string("eps") : std::to_string(k.label)) + ")";
}

void require_symbol(const Wfsa& a, Symbol s) {
  if (s < 0 || static_cast<std::size_t>(s) >= a.alphabet_size()) {
    throw Error(ErrorCode::kUnknownSymbol,
                "symbol " + std::to_string(s) + " outside alphabet of size " +
                    std::to_string(a.alphabet_size()));
  }
}

void close_epsilon(const Wfsa& a, ForwardState& state, ForwardStats* stats) {
  if (a.epsilon_arcs().empty()) return;
  const Semiring& s = a.semiring();
  const auto arcs = a.transitions();
  // Arcs are visited grouped by source in topological order; every epsilon
  // path is then accounted for exactly once.
  for (StateId q : state.closure_order) {
    for (std::size_t idx : a.epsilon_arcs()) {
      const Transition& arc = arcs[idx];
      if (arc.key.src != q) continue;
      state.omega[arc.key.dst] = s.add(state.omega[arc.key.dst], s.mul(state.omega[q], arc.weight));
      if (stats) ++stats->arc_visits;
    }
  }
}

}  // namespace

std::vector<StateId> epsilon_topological_order(const Wfsa& a) {
  const std::size_t n = a.num_states();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<StateId>> succ(n);
  for (std::size_t idx : a.epsilon_arcs()) {
    const auto& k = a.transitions()[idx].key;
    if (!state_in_range(a, k.src) || !state_in_range(a, k.dst)) {
      throw Error(ErrorCode::kIndexOutOfBounds, "epsilon arc " + describe(k));
    }
    succ[k.src].push_back(k.dst);
    ++indegree[k.dst];
  }
  // Kahn's algorithm, always releasing the smallest ready state.
  std::vector<StateId> order;
  order.reserve(n);
  std::vector<bool> done(n, false);
  while (order.size() < n) {
    StateId next = -1;
    for (std::size_t q = 0; q < n; ++q) {
      if (!done[q] && indegree[q] == 0) {
        next = static_cast<StateId>(q);
        break;
      }
    }
    if (next < 0) throw Error(ErrorCode::kEpsilonCycle, "epsilon transitions form a cycle");
    done[next] = true;
    order.push_back(next);
    for (StateId d : succ[next]) --indegree[d];
  }
  return order;
}

void validate(const Wfsa& a) {
  for (const auto& arc : a.transitions()) {
    const auto& k = arc.key;
    if (!state_in_range(a, k.src) || !state_in_range(a, k.dst)) {
      throw Error(ErrorCode::kIndexOutOfBounds, "transition " + describe(k) + " references state >= " +
                                                    std::to_string(a.num_states()));
    }
    if (k.label != kEpsilon && (k.label < 0 || static_cast<std::size_t>(k.label) >= a.alphabet_size())) {
      throw Error(ErrorCode::kIndexOutOfBounds, "transition " + describe(k) + " reads symbol outside alphabet");
    }
    check_weight(a, arc.weight, "transition");
  }
  for (const auto& [q, w] : a.initial_weights()) {
    if (!state_in_range(a, q)) throw Error(ErrorCode::kIndexOutOfBounds, "initial state " + std::to_string(q));
    check_weight(a, w, "initial");
  }
  for (const auto& [q, w] : a.final_weights()) {
    if (!state_in_range(a, q)) throw Error(ErrorCode::kIndexOutOfBounds, "final state " + std::to_string(q));
    check_weight(a, w, "final");
  }
  for (std::size_t idx : a.epsilon_arcs()) {
    const auto& k = a.transitions()[idx].key;
    if (k.src == k.dst) throw Error(ErrorCode::kEpsilonCycle, "epsilon self-loop on state " + std::to_string(k.src));
  }
  (void)epsilon_topological_order(a);
}

double path_score(const Wfsa& a, const Path& p) {
  if (p.transitions.empty()) throw Error(ErrorCode::kInvalidPath, "empty path");
  for (std::size_t i = 1; i < p.transitions.size(); ++i) {
    if (p.transitions[i - 1].dst != p.transitions[i].src) {
      throw Error(ErrorCode::kInvalidPath, "transition " + std::to_string(i) + " is not adjacent to its predecessor");
    }
  }
  const Semiring& s = a.semiring();
  double score = a.initial(p.transitions.front().src);
  for (const auto& k : p.transitions) score = s.mul(score, a.transition(k.src, k.dst, k.label));
  return s.mul(score, a.final_weight(p.transitions.back().dst));
}

namespace {

struct Enumerator {
  const Wfsa& a;
  std::span<const Symbol> x;
  std::size_t max_eps;
  double total;

  void visit(StateId q, std::size_t pos, std::size_t eps_run, double weight) {
    const Semiring& s = a.semiring();
    if (pos == x.size()) total = s.add(total, s.mul(weight, a.final_weight(q)));
    const auto arcs = a.transitions();
    if (eps_run < max_eps) {
      for (std::size_t idx : a.epsilon_arcs()) {
        if (arcs[idx].key.src == q) visit(arcs[idx].key.dst, pos, eps_run + 1, s.mul(weight, arcs[idx].weight));
      }
    }
    if (pos < x.size()) {
      for (const auto& arc : arcs) {
        if (arc.key.src == q && arc.key.label == x[pos]) {
          visit(arc.key.dst, pos + 1, 0, s.mul(weight, arc.weight));
        }
      }
    }
  }
};

}  // namespace

double string_score_bruteforce(const Wfsa& a, std::span<const Symbol> x, std::size_t max_eps) {
  if (a.num_states() > 8 || x.size() + max_eps > 10) {
    throw Error(ErrorCode::kOracleTooLarge, "brute-force enumeration limited to 8 states and |x| + max_eps <= 10");
  }
  validate(a);
  for (Symbol sym : x) require_symbol(a, sym);
  Enumerator e{a, x, max_eps, a.semiring().zero()};
  for (std::size_t q = 0; q < a.num_states(); ++q) {
    e.visit(static_cast<StateId>(q), 0, 0, a.initial(static_cast<StateId>(q)));
  }
  return e.total;
}

ForwardState forward_begin(const Wfsa& a) {
  validate(a);
  ForwardState state;
  state.omega.assign(a.num_states(), a.semiring().zero());
  for (const auto& [q, w] : a.initial_weights()) state.omega[q] = w;
  state.closure_order = epsilon_topological_order(a);
  close_epsilon(a, state, nullptr);
  return state;
}

void forward_advance(const Wfsa& a, ForwardState& state, Symbol symbol, ForwardStats* stats) {
  require_symbol(a, symbol);
  const Semiring& s = a.semiring();
  const auto arcs = a.transitions();
  std::vector<double> next(a.num_states(), s.zero());
  for (std::size_t idx : a.arcs_reading(symbol)) {
    const Transition& arc = arcs[idx];
    next[arc.key.dst] = s.add(next[arc.key.dst], s.mul(state.omega[arc.key.src], arc.weight));
    if (stats) ++stats->arc_visits;
  }
  state.omega = std::move(next);
  ++state.step;
  close_epsilon(a, state, stats);
}

double forward_score(const Wfsa& a, const ForwardState& state) {
  const Semiring& s = a.semiring();
  double score = s.zero();
  for (const auto& [q, w] : a.final_weights()) score = s.add(score, s.mul(state.omega[q], w));
  return score;
}

double forward(const Wfsa& a, std::span<const Symbol> x, ForwardStats* stats) {
  ForwardState state = forward_begin(a);
  for (Symbol sym : x) forward_advance(a, state, sym, stats);
  return forward_score(a, state);
}

std::vector<double> forward_prefixes(const Wfsa& a, std::span<const Symbol> x) {
  std::vector<double> scores;
  scores.reserve(x.size());
  ForwardState state = forward_begin(a);
  for (Symbol sym : x) {
    forward_advance(a, state, sym);
    scores.push_back(forward_score(a, state));
  }
  return scores;
}

}  // namespace rr
