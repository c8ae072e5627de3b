// SPDX-License-Identifier: Apache-2.0
#include "rr/construct.hpp"

#include <json.hpp>

#include "rr/error.hpp"

namespace rr {

namespace {

void require_tables(const WeightTables& t, const std::vector<std::vector<double>>& tables,
                    std::size_t count, const char* name) {
  if (tables.size() != count) {
    throw Error(ErrorCode::kTableShape, std::string(name) + ": expected " + std::to_string(count) +
                                            " table(s), got " + std::to_string(tables.size()));
  }
  for (const auto& table : tables) {
    if (table.size() != t.alphabet_size) {
      throw Error(ErrorCode::kTableShape, std::string(name) + ": table has " + std::to_string(table.size()) +
                                              " entries for alphabet of size " + std::to_string(t.alphabet_size));
    }
  }
}

Symbol sym(std::size_t a) { return static_cast<Symbol>(a); }
StateId st(std::size_t q) { return static_cast<StateId>(q); }

}  // namespace

Wfsa build_b(const WeightTables& t, Semiring s) {
  require_tables(t, t.mu, 1, "mu");
  require_tables(t, t.phi, 1, "phi");
  Wfsa a(s, 2, t.alphabet_size);
  a.set_initial(0, s.one());
  a.set_final(1, s.one());
  for (std::size_t x = 0; x < t.alphabet_size; ++x) {
    a.set_transition(0, 0, sym(x), s.one());
    a.set_transition(0, 1, sym(x), t.mu[0][x]);
    a.set_transition(1, 1, sym(x), t.phi[0][x]);
  }
  validate(a);
  return a;
}

Wfsa build_c(const WeightTables& t, Semiring s) {
  require_tables(t, t.mu, 2, "mu");
  require_tables(t, t.phi, 2, "phi");
  Wfsa a(s, 3, t.alphabet_size);
  a.set_initial(0, s.one());
  a.set_final(2, s.one());
  for (std::size_t x = 0; x < t.alphabet_size; ++x) {
    a.set_transition(0, 0, sym(x), s.one());
    a.set_transition(0, 1, sym(x), t.mu[0][x]);
    a.set_transition(1, 1, sym(x), t.phi[0][x]);
    a.set_transition(1, 2, sym(x), t.mu[1][x]);
    a.set_transition(2, 2, sym(x), t.phi[1][x]);
  }
  validate(a);
  return a;
}

Wfsa build_f(const WeightTables& t, Semiring s) {
  require_tables(t, t.mu, 2, "mu");
  require_tables(t, t.phi, 2, "phi");
  if (!t.gamma) throw Error(ErrorCode::kMissingWeight, "F needs an epsilon weight gamma");
  if (t.rho.size() != 2) {
    throw Error(ErrorCode::kTableShape, "F needs two final weights, got " + std::to_string(t.rho.size()));
  }
  Wfsa a(s, 4, t.alphabet_size);
  a.set_initial(0, s.one());
  a.set_final(1, t.rho[0]);
  a.set_final(2, t.rho[1]);
  a.set_transition(0, 3, kEpsilon, *t.gamma);
  for (std::size_t x = 0; x < t.alphabet_size; ++x) {
    a.set_transition(0, 0, sym(x), s.one());
    a.set_transition(0, 1, sym(x), t.mu[0][x]);
    a.set_transition(1, 1, sym(x), t.phi[0][x]);
    a.set_transition(1, 2, sym(x), t.mu[1][x]);
    a.set_transition(3, 2, sym(x), t.mu[1][x]);
    a.set_transition(2, 2, sym(x), t.phi[1][x]);
  }
  validate(a);
  return a;
}

Wfsa build_qrnn2(const WeightTables& t, Semiring s) {
  const std::size_t sigma = t.alphabet_size;
  auto square = [&](const std::vector<std::vector<double>>& m, const char* name) {
    if (m.size() != sigma) {
      throw Error(ErrorCode::kTableShape, std::string(name) + " must be |Sigma| x |Sigma|");
    }
    for (const auto& row : m) {
      if (row.size() != sigma) throw Error(ErrorCode::kTableShape, std::string(name) + " must be |Sigma| x |Sigma|");
    }
  };
  square(t.mu_by_prev, "mu_by_prev");
  square(t.phi_by_prev, "phi_by_prev");
  if (t.mu.size() > 1) throw Error(ErrorCode::kTableShape, "qrnn2 takes at most one start-window mu table");
  if (t.mu.size() == 1) require_tables(t, t.mu, 1, "mu");

  auto p = [](std::size_t alpha) { return st(1 + alpha); };
  auto q = [sigma](std::size_t alpha) { return st(1 + sigma + alpha); };
  Wfsa a(s, 2 * sigma + 1, sigma);
  a.set_initial(0, s.one());
  for (std::size_t alpha = 0; alpha < sigma; ++alpha) a.set_final(q(alpha), s.one());
  for (std::size_t beta = 0; beta < sigma; ++beta) {
    a.set_transition(0, p(beta), sym(beta), s.one());
    // First window: the previous input is padding.
    if (!t.mu.empty()) a.set_transition(0, q(beta), sym(beta), t.mu[0][beta]);
    for (std::size_t alpha = 0; alpha < sigma; ++alpha) {
      a.set_transition(p(alpha), p(beta), sym(beta), s.one());
      a.set_transition(p(alpha), q(beta), sym(beta), t.mu_by_prev[alpha][beta]);
      a.set_transition(q(alpha), q(beta), sym(beta), t.phi_by_prev[alpha][beta]);
    }
  }
  validate(a);
  return a;
}

Wfsa build_rcnn_ngram(const WeightTables& t, Semiring s) {
  const std::size_t n = t.mu.size();
  if (n < 1) throw Error(ErrorCode::kTableShape, "rcnn needs n >= 1 mu tables");
  require_tables(t, t.mu, n, "mu");
  require_tables(t, t.phi, 1, "phi");
  Wfsa a(s, n + 1, t.alphabet_size);
  a.set_initial(0, s.one());
  a.set_final(st(n), s.one());
  for (std::size_t x = 0; x < t.alphabet_size; ++x) {
    a.set_transition(0, 0, sym(x), s.one());
    for (std::size_t j = 1; j <= n; ++j) {
      a.set_transition(st(j - 1), st(j), sym(x), t.mu[j - 1][x]);
      a.set_transition(st(j), st(j), sym(x), t.phi[0][x]);
    }
  }
  validate(a);
  return a;
}

Wfsa build_isan(const WeightTables& t, std::size_t output_dim, Semiring s) {
  const std::size_t sigma = t.alphabet_size;
  if (t.mu_matrix.size() != sigma || t.eta.size() != sigma) {
    throw Error(ErrorCode::kTableShape, "isan needs one matrix and one bias per symbol");
  }
  const std::size_t d = sigma == 0 ? 0 : t.eta[0].size();
  for (std::size_t x = 0; x < sigma; ++x) {
    if (t.eta[x].size() != d || t.mu_matrix[x].size() != d) {
      throw Error(ErrorCode::kTableShape, "isan tables must be d x d and d");
    }
    for (const auto& row : t.mu_matrix[x]) {
      if (row.size() != d) throw Error(ErrorCode::kTableShape, "isan matrices must be square");
    }
  }
  if (output_dim >= d) {
    throw Error(ErrorCode::kTableShape, "output dimension " + std::to_string(output_dim) + " >= d");
  }
  Wfsa a(s, 2 * d, sigma);
  for (std::size_t j = 0; j < d; ++j) a.set_initial(st(d + j), s.one());
  a.set_final(st(output_dim), s.one());
  for (std::size_t x = 0; x < sigma; ++x) {
    for (std::size_t j = 0; j < d; ++j) {
      a.set_transition(st(d + j), st(d + j), sym(x), s.one());
      a.set_transition(st(d + j), st(j), sym(x), t.eta[x][j]);
      for (std::size_t i = 0; i < d; ++i) {
        a.set_transition(st(i), st(j), sym(x), t.mu_matrix[x][j][i]);
      }
    }
  }
  validate(a);
  return a;
}

Wfsa build_family(std::string_view family, const WeightTables& t, Semiring s, std::size_t output_dim) {
  if (family == "B") return build_b(t, s);
  if (family == "C") return build_c(t, s);
  if (family == "F") return build_f(t, s);
  if (family == "qrnn2") return build_qrnn2(t, s);
  if (family == "rcnn") return build_rcnn_ngram(t, s);
  if (family == "isan") return build_isan(t, output_dim, s);
  throw Error(ErrorCode::kConfigError, "unknown automaton family '" + std::string(family) + "'");
}

WeightTables tables_from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  WeightTables t;
  try {
    t.alphabet_size = j.at("alphabet_size").get<std::size_t>();
    auto opt = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    opt("mu", t.mu);
    opt("phi", t.phi);
    opt("rho", t.rho);
    opt("mu_by_prev", t.mu_by_prev);
    opt("phi_by_prev", t.phi_by_prev);
    opt("mu_matrix", t.mu_matrix);
    opt("eta", t.eta);
    if (j.contains("gamma")) t.gamma = j.at("gamma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return t;
}

std::string tables_to_json(const WeightTables& t) {
  nlohmann::json j;
  j["alphabet_size"] = t.alphabet_size;
  if (!t.mu.empty()) j["mu"] = t.mu;
  if (!t.phi.empty()) j["phi"] = t.phi;
  if (t.gamma) j["gamma"] = *t.gamma;
  if (!t.rho.empty()) j["rho"] = t.rho;
  if (!t.mu_by_prev.empty()) j["mu_by_prev"] = t.mu_by_prev;
  if (!t.phi_by_prev.empty()) j["phi_by_prev"] = t.phi_by_prev;
  if (!t.mu_matrix.empty()) j["mu_matrix"] = t.mu_matrix;
  if (!t.eta.empty()) j["eta"] = t.eta;
  return j.dump(2);
}

}  // namespace rr
