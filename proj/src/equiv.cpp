// SPDX-License-Identifier: Apache-2.0
#include "rr/equiv.hpp"

#include <cmath>
#include <sstream>

#include "rr/error.hpp"
#include "rr/random.hpp"
#include "rr/wfsa_io.hpp"

namespace rr {

using ad::Tape;
using ad::Tensor;
using ad::Var;

std::string format_report(const EquivReport& r) {
  std::ostringstream out;
  out << "cell: " << r.cell << '\n'
      << "trials: " << r.trials << '\n'
      << "dims_checked: " << r.dims_checked << '\n'
      << "strings_checked: " << r.strings_checked << '\n'
      << "prefixes_checked: " << r.prefixes_checked << '\n'
      << "max_abs_diff: " << format_weight(r.max_abs_diff) << '\n'
      << "tolerance: " << format_weight(r.tolerance) << '\n'
      << "worst_case.dim: " << r.worst_case.dim << '\n'
      << "worst_case.t: " << r.worst_case.t << '\n'
      << "worst_case.string:";
  for (Symbol s : r.worst_case.string) out << ' ' << s;
  out << '\n' << "pass: " << (r.pass ? "true" : "false") << '\n';
  return out.str();
}

namespace {

std::vector<double> column(const Tensor& t, std::size_t col) {
  std::vector<double> out(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) out[r] = t(r, col);
  return out;
}

// Value of a readout at row r, column i; 1 x d readouts are input independent.
double at(const Tensor& t, std::size_t r, std::size_t i) { return t.rows() == 1 ? t(0, i) : t(r, i); }

}  // namespace

std::vector<WeightTables> tables_from_cell(const Cell& cell, const Tensor& embeddings) {
  const std::size_t d = cell.hidden();
  const CellKind kind = cell.kind();
  const std::size_t vocab = kind == CellKind::kIsan ? cell.config().vocab_size : embeddings.rows();
  if (vocab > kMaxEnumerableVocab) {
    throw Error(ErrorCode::kVocabTooLarge, std::to_string(vocab) + " symbols exceed the enumeration cap of " +
                                               std::to_string(kMaxEnumerableVocab));
  }
  std::vector<WeightTables> tables(d);
  for (auto& t : tables) t.alphabet_size = vocab;

  if (kind == CellKind::kIsan) {
    const Tensor& w = cell.param("W").value;
    const Tensor& b = cell.param("b").value;
    WeightTables t;
    t.alphabet_size = vocab;
    t.mu_matrix.assign(vocab, std::vector<std::vector<double>>(d, std::vector<double>(d)));
    t.eta.assign(vocab, std::vector<double>(d));
    for (std::size_t a = 0; a < vocab; ++a)
      for (std::size_t j = 0; j < d; ++j) {
        t.eta[a][j] = b(a, j);
        for (std::size_t i = 0; i < d; ++i) t.mu_matrix[a][j][i] = w(a, j * d + i);
      }
    return std::vector<WeightTables>(d, t);
  }

  Tape tape;
  const std::size_t e = embeddings.cols();
  if (kind == CellKind::kQrnn2) {
    // Rows alpha * vocab + beta hold (v_prev, v) = (E[alpha], E[beta]);
    // the last vocab rows use the zero padding as previous input.
    Tensor prev((vocab + 1) * vocab, e);
    Tensor cur((vocab + 1) * vocab, e);
    for (std::size_t a = 0; a <= vocab; ++a)
      for (std::size_t b = 0; b < vocab; ++b) {
        const std::size_t r = a * vocab + b;
        for (std::size_t k = 0; k < e; ++k) {
          prev(r, k) = a < vocab ? embeddings(a, k) : 0.0;
          cur(r, k) = embeddings(b, k);
        }
      }
    auto ro = cell.readouts(tape, tape.constant(prev), tape.constant(cur));
    const Tensor& f = ro.at("f").value();
    const Tensor& u = ro.at("u").value();
    for (std::size_t i = 0; i < d; ++i) {
      auto& t = tables[i];
      t.mu_by_prev.assign(vocab, std::vector<double>(vocab));
      t.phi_by_prev.assign(vocab, std::vector<double>(vocab));
      t.mu.assign(1, std::vector<double>(vocab));
      for (std::size_t a = 0; a <= vocab; ++a)
        for (std::size_t b = 0; b < vocab; ++b) {
          const std::size_t r = a * vocab + b;
          if (a < vocab) {
            t.mu_by_prev[a][b] = u(r, i);
            t.phi_by_prev[a][b] = f(r, i);
          } else {
            t.mu[0][b] = u(r, i);
          }
        }
    }
    return tables;
  }

  Var v = tape.constant(embeddings);
  auto ro = cell.readouts(tape, tape.constant(Tensor(vocab, e)), v);
  auto per_symbol = [&](const char* name, std::size_t i) {
    const Tensor& t = ro.at(name).value();
    std::vector<double> out(vocab);
    for (std::size_t a = 0; a < vocab; ++a) out[a] = at(t, a, i);
    return out;
  };
  for (std::size_t i = 0; i < d; ++i) {
    auto& t = tables[i];
    switch (kind) {
      case CellKind::kExample1:
      case CellKind::kRrnnB:
      case CellKind::kRrnnBMaxPlus:
        t.mu = {per_symbol("u", i)};
        t.phi = {per_symbol("f", i)};
        break;
      case CellKind::kRrnnC:
      case CellKind::kRrnnF:
        t.mu = {per_symbol("u1", i), per_symbol("u2", i)};
        t.phi = {per_symbol("f1", i), per_symbol("f2", i)};
        if (kind == CellKind::kRrnnF) {
          t.gamma = ro.at("r").value()(0, i);
          t.rho = {ro.at("p1").value()(0, i), ro.at("p2").value()(0, i)};
        }
        break;
      case CellKind::kRcnn:
        for (std::size_t j = 1; j <= cell.config().ngram; ++j) {
          t.mu.push_back(per_symbol(("u" + std::to_string(j)).c_str(), i));
        }
        t.phi = {per_symbol("lambda", i)};
        break;
      default:
        break;
    }
  }
  (void)column;
  return tables;
}

Wfsa automaton_for(const Cell& cell, const WeightTables& tables, std::size_t dim) {
  const Semiring s = cell_semiring(cell.kind());
  switch (cell.kind()) {
    case CellKind::kExample1:
    case CellKind::kRrnnB:
    case CellKind::kRrnnBMaxPlus: return build_b(tables, s);
    case CellKind::kRrnnC: return build_c(tables, s);
    case CellKind::kRrnnF: return build_f(tables, s);
    case CellKind::kQrnn2: return build_qrnn2(tables, s);
    case CellKind::kRcnn: return build_rcnn_ngram(tables, s);
    case CellKind::kIsan: return build_isan(tables, dim, s);
  }
  throw Error(ErrorCode::kConfigError, "cell has no automaton counterpart");
}

namespace {

void record_diff(EquivReport& r, double diff, const std::vector<Symbol>& x, std::size_t dim, std::size_t t) {
  ++r.prefixes_checked;
  // NaN compares false; treat it as an unbounded mismatch.
  if (std::isnan(diff)) diff = std::numeric_limits<double>::infinity();
  if (diff > r.max_abs_diff || (r.prefixes_checked == 1 && diff >= r.max_abs_diff)) {
    r.max_abs_diff = diff;
    r.worst_case = {x, dim, t};
  }
}

double abs_diff(double a, double b) {
  // -inf == -inf in the max-plus carrier
  if (a == b) return 0.0;
  return std::abs(a - b);
}

}  // namespace

EquivReport check_equivalence(const Cell& cell, const Tensor& embeddings,
                              std::span<const std::vector<Symbol>> strings, double tol, const AutomatonHook& hook) {
  EquivReport report;
  report.cell = std::string(cell_kind_name(cell.kind()));
  report.trials = 1;
  report.tolerance = tol;
  const std::size_t d = cell.hidden();
  const auto tables = tables_from_cell(cell, embeddings);
  std::vector<Wfsa> automata;
  automata.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    automata.push_back(automaton_for(cell, tables[i], i));
    if (hook) hook(automata.back(), i);
  }
  report.dims_checked = d;

  for (const auto& x : strings) {
    Tape tape;
    Var emb = tape.constant(embeddings);
    const auto states = unroll(cell, tape, emb, x);
    for (std::size_t i = 0; i < d; ++i) {
      const auto scores = forward_prefixes(automata[i], x);
      for (std::size_t t = 0; t < x.size(); ++t) {
        record_diff(report, abs_diff(states[t].c.value()(0, i), scores[t]), x, i, t + 1);
      }
    }
    ++report.strings_checked;
  }
  report.pass = report.max_abs_diff <= tol;
  return report;
}

double f_dp_score_step(const WeightTables& t, std::span<const Symbol> x, std::vector<double>& prefixes) {
  const double gamma = t.gamma.value_or(0.0);
  // z0: paths resting in q0 (weight one at every step); z3 = z0 * gamma.
  const double z0 = 1.0;
  double z1 = 0.0;
  double z2 = 0.0;
  double z3 = z0 * gamma;
  double score = 0.0;
  prefixes.clear();
  for (Symbol a : x) {
    const double z1_next = z1 * t.phi[0][a] + z0 * t.mu[0][a];
    const double z2_next = z2 * t.phi[1][a] + (z1 + z3) * t.mu[1][a];
    z1 = z1_next;
    z2 = z2_next;
    z3 = z0 * gamma;
    score = t.rho[0] * z1 + t.rho[1] * z2;
    prefixes.push_back(score);
  }
  return score;
}

EquivReport check_f_dp(std::span<const WeightTables> tables, std::span<const std::vector<Symbol>> strings,
                       double tol) {
  EquivReport report;
  report.cell = "rrnn_f/dp";
  report.trials = 1;
  report.tolerance = tol;
  report.dims_checked = tables.size();
  std::vector<double> dp;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const Wfsa f = build_f(tables[i], Semiring::real());
    for (const auto& x : strings) {
      f_dp_score_step(tables[i], x, dp);
      const auto scores = forward_prefixes(f, x);
      for (std::size_t t = 0; t < x.size(); ++t) record_diff(report, abs_diff(dp[t], scores[t]), x, i, t + 1);
    }
  }
  report.strings_checked = strings.size();
  report.pass = report.max_abs_diff <= tol;
  return report;
}

std::vector<std::vector<Symbol>> sample_strings(std::size_t vocab, const StringSampling& spec, Rng& rng) {
  std::vector<std::vector<Symbol>> out;
  if (vocab == 0) return out;
  auto random_string = [&](std::size_t len) {
    std::vector<Symbol> s(len);
    for (auto& a : s) a = static_cast<Symbol>(rng.index(vocab));
    return s;
  };
  out.push_back({});
  out.push_back({static_cast<Symbol>(rng.index(vocab))});
  out.push_back(std::vector<Symbol>(spec.max_len, static_cast<Symbol>(rng.index(vocab))));
  out.push_back(random_string(spec.max_len));
  while (out.size() < spec.count) out.push_back(random_string(rng.index(spec.max_len + 1)));
  if (out.size() > spec.count) out.resize(spec.count);
  return out;
}

void randomize_parameters(Cell& cell, Rng& rng) {
  const double d = static_cast<double>(cell.hidden());
  for (ad::Parameter* p : cell.parameters()) {
    // Keep the ISAN maps contractive so scores stay O(1) over long strings.
    const double scale = (cell.kind() == CellKind::kIsan && p->name == "W") ? 1.0 / std::sqrt(d) : 1.0;
    for (double& v : p->value.data()) v = rng.uniform(-scale, scale);
  }
}

double default_tolerance(CellKind kind) {
  switch (kind) {
    case CellKind::kRrnnBMaxPlus:
    case CellKind::kIsan:
    case CellKind::kQrnn2: return 1e-9;
    default: return 1e-6;
  }
}

EquivReport run_equivalence_suite(const EquivSuiteOptions& opts) {
  Rng rng(opts.seed);
  const double tol = opts.tol > 0.0 ? opts.tol : default_tolerance(opts.kind);
  EquivReport total;
  total.cell = std::string(cell_kind_name(opts.kind));
  total.tolerance = tol;
  CellConfig config;
  config.kind = opts.kind;
  config.input_dim = opts.input_dim;
  config.hidden = opts.hidden;
  config.vocab_size = opts.vocab;
  config.activation = opts.activation;
  config.ngram = opts.ngram;
  config.lambda_mode = opts.lambda_mode;
  bool first = true;
  for (std::size_t trial = 0; trial < opts.trials; ++trial) {
    Rng trial_rng = rng.split();
    auto cell = make_cell(config, trial_rng);
    randomize_parameters(*cell, trial_rng);
    Tensor embeddings(opts.vocab, opts.input_dim);
    for (double& v : embeddings.data()) v = trial_rng.normal();
    const auto strings = sample_strings(opts.vocab, opts.strings, trial_rng);
    const EquivReport r = check_equivalence(*cell, embeddings, strings, tol);
    total.trials += 1;
    total.dims_checked += r.dims_checked;
    total.strings_checked += r.strings_checked;
    total.prefixes_checked += r.prefixes_checked;
    if (first || r.max_abs_diff > total.max_abs_diff) {
      total.max_abs_diff = r.max_abs_diff;
      total.worst_case = r.worst_case;
      first = false;
    }
  }
  total.pass = total.max_abs_diff <= tol;
  return total;
}

}  // namespace rr
