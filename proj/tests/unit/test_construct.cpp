// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rr/construct.hpp"
#include "rr/error.hpp"
#include "rr/random.hpp"
#include "rr/wfsa.hpp"

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

WeightTables b_tables(std::vector<double> mu, std::vector<double> phi) {
  WeightTables t;
  t.alphabet_size = mu.size();
  t.mu = {std::move(mu)};
  t.phi = {std::move(phi)};
  return t;
}

WeightTables c_tables(double mu1, double phi1, double mu2, double phi2) {
  WeightTables t;
  t.alphabet_size = 1;
  t.mu = {{mu1}, {mu2}};
  t.phi = {{phi1}, {phi2}};
  return t;
}

const std::vector<Symbol> kA{0}, kAA{0, 0}, kAAA{0, 0, 0};

TEST(BuildB, StructureAndScores) {
  const Wfsa b = build_b(b_tables({2, 1, 3}, {0.5, 0.2, 0.1}), Semiring::real());
  EXPECT_EQ(b.num_states(), 2u);
  EXPECT_EQ(b.num_transitions(), 9u);
  const Wfsa b1 = build_b(b_tables({2}, {0.5}), Semiring::real());
  EXPECT_DOUBLE_EQ(forward(b1, kAA), 3);
  EXPECT_EQ(forward(b1, std::vector<Symbol>{}), 0);
}

TEST(BuildB, WiringIsExact) {
  Rng rng(1);
  const auto mu = oracle::random_table(rng, 4);
  const auto phi = oracle::random_table(rng, 4);
  const Wfsa b = build_b(b_tables(mu, phi), Semiring::real());
  for (Symbol a = 0; a < 4; ++a) {
    EXPECT_EQ(b.transition(0, 0, a), 1.0);
    EXPECT_EQ(b.transition(0, 1, a), mu[a]);
    EXPECT_EQ(b.transition(1, 1, a), phi[a]);
    EXPECT_EQ(b.transition(1, 0, a), 0.0);
  }
  EXPECT_EQ(b.initial(0), 1.0);
  EXPECT_EQ(b.final_weight(1), 1.0);
  EXPECT_EQ(b.final_weight(0), 0.0);
}

TEST(BuildB, TableShape) {
  WeightTables t = b_tables({1, 2}, {0.5});
  EXPECT_EQ(code_of([&] { build_b(t, Semiring::real()); }), ErrorCode::kTableShape);
  t = b_tables({1}, {0.5});
  t.mu.push_back({1});
  EXPECT_EQ(code_of([&] { build_b(t, Semiring::real()); }), ErrorCode::kTableShape);
}

TEST(BuildC, Examples) {
  const Wfsa c = build_c(c_tables(1, 0.5, 2, 0.5), Semiring::real());
  EXPECT_EQ(c.num_states(), 3u);
  const auto p = forward_prefixes(c, kAAA);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[0], 0);
  EXPECT_DOUBLE_EQ(p[1], 2);
  EXPECT_DOUBLE_EQ(p[2], 4);
  EXPECT_EQ(forward(c, kA), 0);
}

TEST(BuildC, BetaUnroll) {
  // Score of "aa" through q1 is beta_1 * mu2 with beta_1 = mu1; for "aaa",
  // (beta_1 phi2 + beta_2) mu2-ish terms: check beta_2 = mu1 phi1 + mu1 via
  // a C whose second hop is the identity (mu2 = 1, phi2 = 0).
  const double mu1 = 0.7, phi1 = 0.3;
  const Wfsa c = build_c(c_tables(mu1, phi1, 1, 0), Semiring::real());
  EXPECT_DOUBLE_EQ(forward(c, kAAA), mu1 * phi1 + mu1);
}

WeightTables f_tables(double gamma, double rho1, double rho2) {
  WeightTables t = c_tables(0, 0, 2, 0);
  t.gamma = gamma;
  t.rho = {rho1, rho2};
  return t;
}

TEST(BuildF, EpsilonShortcutExample) {
  const Wfsa f = build_f(f_tables(0.5, 0, 1), Semiring::real());
  EXPECT_EQ(f.num_states(), 4u);
  EXPECT_EQ(f.epsilon_arcs().size(), 1u);
  EXPECT_DOUBLE_EQ(forward(f, kA), 1.0);
}

TEST(BuildF, Degenerations) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    WeightTables t;
    t.alphabet_size = 3;
    t.mu = {oracle::random_table(rng, 3), oracle::random_table(rng, 3)};
    t.phi = {oracle::random_table(rng, 3), oracle::random_table(rng, 3)};
    const auto x = oracle::random_string(rng, 3, 7);

    // rho2 = 0 leaves B's paths through q1.
    t.gamma = rng.uniform(0, 1);
    t.rho = {1, 0};
    const auto fb = forward_prefixes(build_f(t, Semiring::real()), x);
    const auto b = forward_prefixes(build_b(b_tables(t.mu[0], t.phi[0]), Semiring::real()), x);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(fb[i], b[i]);

    // gamma = 0, rho = (0, 1) is C.
    t.gamma = 0;
    t.rho = {0, 1};
    const auto fc = forward_prefixes(build_f(t, Semiring::real()), x);
    const auto c = forward_prefixes(build_c(t, Semiring::real()), x);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(fc[i], c[i]);
  }
}

TEST(BuildF, Errors) {
  WeightTables t = f_tables(0.5, 0, 1);
  t.gamma.reset();
  EXPECT_EQ(code_of([&] { build_f(t, Semiring::real()); }), ErrorCode::kMissingWeight);
  t = f_tables(0.5, 0, 1);
  t.rho = {1};
  EXPECT_EQ(code_of([&] { build_f(t, Semiring::real()); }), ErrorCode::kTableShape);
}

WeightTables qrnn_tables(Rng& rng, std::size_t sigma) {
  WeightTables t;
  t.alphabet_size = sigma;
  t.mu = {oracle::random_table(rng, sigma)};
  for (std::size_t a = 0; a < sigma; ++a) {
    t.mu_by_prev.push_back(oracle::random_table(rng, sigma));
    t.phi_by_prev.push_back(oracle::random_table(rng, sigma, 0, 1));
  }
  return t;
}

TEST(BuildQrnn2, StateCount) {
  Rng rng(3);
  EXPECT_EQ(build_qrnn2(qrnn_tables(rng, 3), Semiring::real()).num_states(), 7u);
  EXPECT_EQ(build_qrnn2(qrnn_tables(rng, 1), Semiring::real()).num_states(), 3u);
}

TEST(BuildQrnn2, SingleSymbolReducesToB) {
  WeightTables t;
  t.alphabet_size = 1;
  t.mu = {{0.8}};
  t.mu_by_prev = {{0.8}};
  t.phi_by_prev = {{0.4}};
  const auto q = forward_prefixes(build_qrnn2(t, Semiring::real()), std::vector<Symbol>(5, 0));
  const auto b = forward_prefixes(build_b(b_tables({0.8}, {0.4}), Semiring::real()), std::vector<Symbol>(5, 0));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(q[i], b[i], 1e-15);
}

TEST(BuildRcnn, Structure) {
  WeightTables t = b_tables({0.3, 0.6}, {0.5, 0.9});
  EXPECT_EQ(build_rcnn_ngram(t, Semiring::real()), build_b(t, Semiring::real()));
  t.mu = {{1, 2}, {3, 4}, {5, 6}};
  EXPECT_EQ(build_rcnn_ngram(t, Semiring::real()).num_states(), 4u);
  t.mu.clear();
  EXPECT_EQ(code_of([&] { build_rcnn_ngram(t, Semiring::real()); }), ErrorCode::kTableShape);
}

TEST(BuildRcnn, BigramWithSharedDecayIsC) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    WeightTables t;
    t.alphabet_size = 3;
    t.mu = {oracle::random_table(rng, 3), oracle::random_table(rng, 3)};
    t.phi = {oracle::random_table(rng, 3)};
    WeightTables c = t;
    c.phi = {t.phi[0], t.phi[0]};
    const auto x = oracle::random_string(rng, 3, 8);
    const auto r = forward_prefixes(build_rcnn_ngram(t, Semiring::real()), x);
    const auto cc = forward_prefixes(build_c(c, Semiring::real()), x);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(r[i], cc[i], 1e-12);
  }
}

WeightTables isan_tables(Rng& rng, std::size_t sigma, std::size_t d) {
  WeightTables t;
  t.alphabet_size = sigma;
  t.mu_matrix.assign(sigma, std::vector<std::vector<double>>(d));
  t.eta.resize(sigma);
  for (std::size_t a = 0; a < sigma; ++a) {
    for (std::size_t j = 0; j < d; ++j) t.mu_matrix[a][j] = oracle::random_table(rng, d, -0.6, 0.6);
    t.eta[a] = oracle::random_table(rng, d);
  }
  return t;
}

TEST(BuildIsan, StructureAndScalarExample) {
  Rng rng(5);
  EXPECT_EQ(build_isan(isan_tables(rng, 2, 3), 0, Semiring::real()).num_states(), 6u);
  WeightTables t;
  t.alphabet_size = 1;
  t.mu_matrix = {{{0.5}}};
  t.eta = {{1.0}};
  const auto p = forward_prefixes(build_isan(t, 0, Semiring::real()), kAAA);
  EXPECT_DOUBLE_EQ(p[0], 1);
  EXPECT_DOUBLE_EQ(p[1], 1.5);
  EXPECT_DOUBLE_EQ(p[2], 1.75);
  EXPECT_EQ(code_of([&] { build_isan(t, 1, Semiring::real()); }), ErrorCode::kTableShape);
}

// Every builder against its independent DP on 100 random instantiations.
TEST(Builders, MatchClosedFormDps) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t sigma = 1 + rng.index(4);
    const auto x = oracle::random_string(rng, sigma, rng.index(9));
    WeightTables t;
    t.alphabet_size = sigma;
    t.mu = {oracle::random_table(rng, sigma), oracle::random_table(rng, sigma)};
    t.phi = {oracle::random_table(rng, sigma), oracle::random_table(rng, sigma)};
    t.gamma = rng.uniform(-1, 1);
    t.rho = {rng.uniform(-1, 1), rng.uniform(-1, 1)};

    auto expect_all = [&](const std::vector<double>& got, const std::vector<double>& want, const char* what) {
      ASSERT_EQ(got.size(), want.size()) << what;
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-9) << what << " t=" << i + 1;
    };
    expect_all(forward_prefixes(build_b(b_tables(t.mu[0], t.phi[0]), Semiring::real()), x),
               oracle::b_prefixes(t.mu[0], t.phi[0], x), "B");
    {
      const auto got = forward_prefixes(build_b(b_tables(t.mu[0], t.phi[0]), Semiring::max_plus()), x);
      const auto want = oracle::b_prefixes(t.mu[0], t.phi[0], x, true);
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], want[i]) << "B max-plus";
    }
    expect_all(forward_prefixes(build_c(t, Semiring::real()), x),
               oracle::c_prefixes(t.mu[0], t.phi[0], t.mu[1], t.phi[1], x), "C");
    expect_all(forward_prefixes(build_f(t, Semiring::real()), x),
               oracle::f_prefixes(t.mu[0], t.phi[0], t.mu[1], t.phi[1], *t.gamma, t.rho[0], t.rho[1], x), "F");

    WeightTables r = t;
    const std::size_t n = 1 + rng.index(3);
    r.mu.clear();
    for (std::size_t j = 0; j < n; ++j) r.mu.push_back(oracle::random_table(rng, sigma));
    r.phi = {oracle::random_table(rng, sigma)};
    expect_all(forward_prefixes(build_rcnn_ngram(r, Semiring::real()), x), oracle::rcnn_prefixes(r.mu, r.phi[0], x),
               "RCNN");

    const WeightTables q = qrnn_tables(rng, sigma);
    expect_all(forward_prefixes(build_qrnn2(q, Semiring::real()), x),
               oracle::qrnn2_prefixes(q.mu[0], q.mu_by_prev, q.phi_by_prev, x), "QRNN");

    const std::size_t d = 1 + rng.index(3);
    const WeightTables is = isan_tables(rng, sigma, d);
    const auto states = oracle::isan_states(is.mu_matrix, is.eta, x);
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<double> want;
      for (const auto& s : states) want.push_back(s[i]);
      expect_all(forward_prefixes(build_isan(is, i, Semiring::real()), x), want, "ISAN");
    }
  }
}

TEST(Builders, OutputsValidate) {
  Rng rng(7);
  WeightTables t;
  t.alphabet_size = 2;
  t.mu = {oracle::random_table(rng, 2), oracle::random_table(rng, 2)};
  t.phi = {oracle::random_table(rng, 2), oracle::random_table(rng, 2)};
  t.gamma = 0.3;
  t.rho = {0.2, 0.8};
  for (const char* fam : {"C", "F"}) EXPECT_NO_THROW(validate(build_family(fam, t, Semiring::real())));
  WeightTables one = b_tables(t.mu[0], t.phi[0]);
  EXPECT_NO_THROW(validate(build_family("B", one, Semiring::real())));
  one.mu.push_back(t.mu[1]);
  EXPECT_NO_THROW(validate(build_family("rcnn", one, Semiring::real())));
  EXPECT_EQ(code_of([&] { build_family("Z", t, Semiring::real()); }), ErrorCode::kConfigError);
}

TEST(Tables, JsonRoundTrip) {
  Rng rng(8);
  WeightTables t = qrnn_tables(rng, 2);
  t.phi = {oracle::random_table(rng, 2)};
  t.gamma = 0.25;
  t.rho = {0.5, 0.5};
  const WeightTables back = tables_from_json(tables_to_json(t));
  EXPECT_EQ(back.alphabet_size, t.alphabet_size);
  EXPECT_EQ(back.mu, t.mu);
  EXPECT_EQ(back.phi, t.phi);
  EXPECT_EQ(back.gamma, t.gamma);
  EXPECT_EQ(back.rho, t.rho);
  EXPECT_EQ(back.mu_by_prev, t.mu_by_prev);
  EXPECT_EQ(back.phi_by_prev, t.phi_by_prev);
  EXPECT_EQ(code_of([] { tables_from_json("{not json"); }), ErrorCode::kParseError);
}

}  // namespace
}  // namespace rr
