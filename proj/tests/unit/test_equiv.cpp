// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "rr/equiv.hpp"
#include "rr/error.hpp"
#include "rr/random.hpp"

namespace rr {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no rr::Error thrown";
  return ErrorCode::kConfigError;
}

ad::Tensor random_embeddings(Rng& rng, std::size_t vocab, std::size_t dim) {
  ad::Tensor e(vocab, dim);
  for (auto& v : e.data()) v = rng.uniform(-1, 1);
  return e;
}

TEST(Equiv, EveryCellPasses) {
  for (CellKind k : {CellKind::kRrnnB, CellKind::kRrnnBMaxPlus, CellKind::kRrnnC, CellKind::kRrnnF, CellKind::kQrnn2,
                     CellKind::kRcnn, CellKind::kIsan}) {
    EquivSuiteOptions o;
    o.kind = k;
    o.trials = 10;
    o.seed = 3;
    if (k == CellKind::kQrnn2) o.vocab = 4;
    const EquivReport r = run_equivalence_suite(o);
    EXPECT_TRUE(r.pass) << format_report(r);
    EXPECT_EQ(r.trials, 10u);
    EXPECT_GT(r.prefixes_checked, 0u);
    EXPECT_LE(r.max_abs_diff, default_tolerance(k));
  }
}

TEST(Equiv, RcnnOrdersAndLambdaModes) {
  for (std::size_t n : {1, 2, 3})
    for (LambdaMode m : {LambdaMode::kConstant, LambdaMode::kInputDependent}) {
      EquivSuiteOptions o{.kind = CellKind::kRcnn, .trials = 5, .seed = n, .ngram = n, .lambda_mode = m};
      const EquivReport r = run_equivalence_suite(o);
      EXPECT_TRUE(r.pass) << "n=" << n << "\n" << format_report(r);
    }
}

TEST(Equiv, PerturbedArcFailsAndIsLocalised) {
  Rng rng(4);
  auto cell = make_cell({.kind = CellKind::kRrnnB, .input_dim = 3, .hidden = 3}, rng);
  const ad::Tensor emb = random_embeddings(rng, 4, 3);
  const auto strings = sample_strings(4, {.count = 30, .max_len = 8}, rng);
  EXPECT_TRUE(check_equivalence(*cell, emb, strings, 1e-6).pass);

  const EquivReport r = check_equivalence(*cell, emb, strings, 1e-6, [](Wfsa& a, std::size_t dim) {
    if (dim == 1) a.set_transition(0, 1, 2, a.transition(0, 1, 2) + 1e-3);
  });
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.max_abs_diff, 1e-4);
  EXPECT_EQ(r.worst_case.dim, 1u);
  ASSERT_GE(r.worst_case.t, 1u);
  const auto& w = r.worst_case.string;
  EXPECT_NE(std::find(w.begin(), w.begin() + r.worst_case.t, 2), w.begin() + r.worst_case.t);
  EXPECT_NE(format_report(r).find("pass: false"), std::string::npos);
}

TEST(Equiv, TablesForF) {
  Rng rng(5);
  auto cell = make_cell({.kind = CellKind::kRrnnF, .input_dim = 3, .hidden = 2}, rng);
  const auto tables = tables_from_cell(*cell, random_embeddings(rng, 5, 3));
  ASSERT_EQ(tables.size(), 2u);
  for (const auto& t : tables) {
    EXPECT_EQ(t.alphabet_size, 5u);
    ASSERT_TRUE(t.gamma.has_value());
    EXPECT_GT(*t.gamma, 0);
    EXPECT_LT(*t.gamma, 1);
    EXPECT_EQ(t.rho.size(), 2u);
    EXPECT_EQ(t.mu.size(), 2u);
  }
}

TEST(Equiv, IsanScalarTable) {
  Rng rng(6);
  auto cell = make_cell({.kind = CellKind::kIsan, .hidden = 1, .vocab_size = 1}, rng);
  cell->param("W").value[0] = 0.5;
  cell->param("b").value[0] = 1;
  const auto tables = tables_from_cell(*cell, ad::Tensor(1, 0));
  ASSERT_EQ(tables.size(), 1u);
  EXPECT_EQ(tables[0].mu_matrix[0][0][0], 0.5);
  EXPECT_EQ(tables[0].eta[0][0], 1.0);
  EXPECT_DOUBLE_EQ(forward(automaton_for(*cell, tables[0], 0), std::vector<Symbol>{0, 0, 0}), 1.75);
}

TEST(Equiv, VocabTooLarge) {
  Rng rng(7);
  auto cell = make_cell({.kind = CellKind::kRrnnB, .input_dim = 2, .hidden = 1}, rng);
  EXPECT_NO_THROW(tables_from_cell(*cell, random_embeddings(rng, 64, 2)));
  EXPECT_EQ(code_of([&] { tables_from_cell(*cell, random_embeddings(rng, 65, 2)); }), ErrorCode::kVocabTooLarge);
}

WeightTables random_f_tables(Rng& rng, std::size_t sigma) {
  WeightTables t;
  t.alphabet_size = sigma;
  for (int j = 0; j < 2; ++j) {
    t.mu.emplace_back();
    t.phi.emplace_back();
    for (std::size_t a = 0; a < sigma; ++a) {
      t.mu.back().push_back(rng.uniform(-1, 1));
      t.phi.back().push_back(rng.uniform(0, 1));
    }
  }
  t.gamma = rng.uniform(0, 1);
  t.rho = {rng.uniform(0, 1), rng.uniform(0, 1)};
  return t;
}

TEST(FDp, MatchesGenericForward) {
  Rng rng(8);
  std::vector<WeightTables> tables;
  for (int i = 0; i < 20; ++i) tables.push_back(random_f_tables(rng, 4));
  const auto strings = sample_strings(4, {}, rng);
  const EquivReport r = check_f_dp(tables, strings, 1e-9);
  EXPECT_TRUE(r.pass) << format_report(r);
}

TEST(FDp, DegenerateCasesExact) {
  Rng rng(9);
  WeightTables t = random_f_tables(rng, 3);
  const std::vector<Symbol> x{0, 2, 1, 1, 0, 2};
  std::vector<double> dp;

  t.gamma = 0;
  t.rho = {0, 1};
  f_dp_score_step(t, x, dp);
  const auto c = forward_prefixes(build_c(t, Semiring::real()), x);
  ASSERT_EQ(dp.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(dp[i], c[i]);

  t.rho = {0, 0};
  t.gamma = 0.4;
  f_dp_score_step(t, x, dp);
  for (double v : dp) EXPECT_EQ(v, 0.0);
}

TEST(Equiv, Deterministic) {
  EquivSuiteOptions o{.kind = CellKind::kRrnnF, .trials = 5, .seed = 42};
  EXPECT_EQ(format_report(run_equivalence_suite(o)), format_report(run_equivalence_suite(o)));
}

TEST(Equiv, SampleStringsIncludesAdversarialCases) {
  Rng rng(10);
  const auto s = sample_strings(3, {.count = 10, .max_len = 6}, rng);
  ASSERT_EQ(s.size(), 10u);
  EXPECT_TRUE(s[0].empty());
  EXPECT_EQ(s[1].size(), 1u);
  EXPECT_EQ(s[2].size(), 6u);
  EXPECT_TRUE(std::all_of(s[2].begin(), s[2].end(), [&](Symbol a) { return a == s[2][0]; }));
  for (const auto& x : s)
    for (Symbol a : x) EXPECT_LT(a, 3);
}

}  // namespace
}  // namespace rr
