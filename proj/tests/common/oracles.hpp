// SPDX-License-Identifier: Apache-2.0
// Closed forms and hand-run dynamic programs, written independently of the
// library's automata and Forward implementation.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "rr/random.hpp"
#include "rr/wfsa.hpp"

namespace rr::oracle {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Real B score: sum_t mu_t * prod_{s > t} phi_s, with per-step weights.
inline double b_closed_form(std::span<const double> mu, std::span<const double> phi) {
  double total = 0.0;
  for (std::size_t t = 0; t < mu.size(); ++t) {
    double w = mu[t];
    for (std::size_t s = t + 1; s < mu.size(); ++s) w *= phi[s];
    total += w;
  }
  return total;
}

/// Max-plus B score: max_t mu_t + sum_{s > t} phi_s.
inline double b_closed_form_maxplus(std::span<const double> mu, std::span<const double> phi) {
  double best = kNegInf;
  for (std::size_t t = 0; t < mu.size(); ++t) {
    double w = mu[t];
    for (std::size_t s = t + 1; s < mu.size(); ++s) w += phi[s];
    best = std::max(best, w);
  }
  return best;
}

inline std::vector<double> per_step(const std::vector<double>& table, std::span<const Symbol> x) {
  std::vector<double> out;
  for (Symbol a : x) out.push_back(table[a]);
  return out;
}

/// B prefix scores from symbol tables.
inline std::vector<double> b_prefixes(const std::vector<double>& mu, const std::vector<double>& phi,
                                      std::span<const Symbol> x, bool max_plus = false) {
  std::vector<double> out;
  for (std::size_t t = 1; t <= x.size(); ++t) {
    const auto m = per_step(mu, x.first(t));
    const auto p = per_step(phi, x.first(t));
    out.push_back(max_plus ? b_closed_form_maxplus(m, p) : b_closed_form(m, p));
  }
  return out;
}

/// Bigram DP: c1_t = c1_{t-1} phi1 + mu1; c2_t = c2_{t-1} phi2 + c1_{t-1} mu2.
inline std::vector<double> c_prefixes(const std::vector<double>& mu1, const std::vector<double>& phi1,
                                      const std::vector<double>& mu2, const std::vector<double>& phi2,
                                      std::span<const Symbol> x) {
  double c1 = 0.0, c2 = 0.0;
  std::vector<double> out;
  for (Symbol a : x) {
    const double n2 = c2 * phi2[a] + c1 * mu2[a];
    c1 = c1 * phi1[a] + mu1[a];
    c2 = n2;
    out.push_back(c2);
  }
  return out;
}

/// F DP with the epsilon shortcut: z0 = 1 at every step, z3 = gamma z0,
/// z1_t = z1 phi1 + z0 mu1, z2_t = z2 phi2 + (z1 + z3) mu2,
/// score = rho1 z1 + rho2 z2.
inline std::vector<double> f_prefixes(const std::vector<double>& mu1, const std::vector<double>& phi1,
                                      const std::vector<double>& mu2, const std::vector<double>& phi2, double gamma,
                                      double rho1, double rho2, std::span<const Symbol> x) {
  double z1 = 0.0, z2 = 0.0;
  std::vector<double> out;
  for (Symbol a : x) {
    const double n2 = z2 * phi2[a] + (z1 + gamma) * mu2[a];
    z1 = z1 * phi1[a] + mu1[a];
    z2 = n2;
    out.push_back(rho1 * z1 + rho2 * z2);
  }
  return out;
}

/// n-gram RCNN DP with one decay table: c_j,t = c_j,t-1 phi + c_{j-1},t-1 mu_j
/// with c_0 = 1; the output is c_n.
inline std::vector<double> rcnn_prefixes(const std::vector<std::vector<double>>& mu, const std::vector<double>& phi,
                                         std::span<const Symbol> x) {
  const std::size_t n = mu.size();
  std::vector<double> c(n + 1, 0.0);
  c[0] = 1.0;
  std::vector<double> out;
  for (Symbol a : x) {
    std::vector<double> next(n + 1);
    next[0] = 1.0;
    for (std::size_t j = 1; j <= n; ++j) next[j] = c[j] * phi[a] + c[j - 1] * mu[j - 1][a];
    c = next;
    out.push_back(c[n]);
  }
  return out;
}

/// 2-window QRNN scalar recurrence c_t = f(x_{t-1}, x_t) c_{t-1} + u(x_{t-1}, x_t),
/// with u at t = 1 taken from the padding row `mu_start`.
inline std::vector<double> qrnn2_prefixes(const std::vector<double>& mu_start,
                                          const std::vector<std::vector<double>>& mu_by_prev,
                                          const std::vector<std::vector<double>>& phi_by_prev,
                                          std::span<const Symbol> x) {
  double c = 0.0;
  std::vector<double> out;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (t == 0) {
      c = mu_start[x[0]];
    } else {
      c = phi_by_prev[x[t - 1]][x[t]] * c + mu_by_prev[x[t - 1]][x[t]];
    }
    out.push_back(c);
  }
  return out;
}

/// ISAN: c_t = W_{x_t} c_{t-1} + b_{x_t}, c_0 = 0. w[a][j][i] multiplies c[i]
/// into c[j]. Returns the full state after each step.
inline std::vector<std::vector<double>> isan_states(const std::vector<std::vector<std::vector<double>>>& w,
                                                    const std::vector<std::vector<double>>& b,
                                                    std::span<const Symbol> x) {
  const std::size_t d = b.empty() ? 0 : b[0].size();
  std::vector<double> c(d, 0.0);
  std::vector<std::vector<double>> out;
  for (Symbol a : x) {
    std::vector<double> next(d);
    for (std::size_t j = 0; j < d; ++j) {
      double acc = b[a][j];
      for (std::size_t i = 0; i < d; ++i) acc += w[a][j][i] * c[i];
      next[j] = acc;
    }
    c = next;
    out.push_back(c);
  }
  return out;
}

/// Random automaton: each (src, dst, symbol) arc present with probability
/// `density`; epsilon arcs only from lower to higher state ids (acyclic), at
/// most one per ordered pair.
inline Wfsa random_wfsa(Rng& rng, Semiring s, std::size_t states, std::size_t sigma, bool with_eps,
                        double density = 0.5) {
  Wfsa a(s, states, sigma);
  auto weight = [&] { return rng.uniform(-1.5, 1.5); };
  for (std::size_t p = 0; p < states; ++p) {
    if (rng.bernoulli(0.6)) a.set_initial(static_cast<StateId>(p), weight());
    if (rng.bernoulli(0.6)) a.set_final(static_cast<StateId>(p), weight());
    for (std::size_t q = 0; q < states; ++q) {
      for (std::size_t c = 0; c < sigma; ++c)
        if (rng.bernoulli(density)) a.set_transition(static_cast<StateId>(p), static_cast<StateId>(q), static_cast<Symbol>(c), weight());
      if (with_eps && p < q && rng.bernoulli(0.4)) a.set_transition(static_cast<StateId>(p), static_cast<StateId>(q), kEpsilon, weight());
    }
  }
  return a;
}

inline std::vector<Symbol> random_string(Rng& rng, std::size_t sigma, std::size_t len) {
  std::vector<Symbol> x(len);
  for (auto& c : x) c = static_cast<Symbol>(rng.index(sigma));
  return x;
}

inline std::vector<double> random_table(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> t(n);
  for (auto& v : t) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace rr::oracle
