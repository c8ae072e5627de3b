// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "rr/cells.hpp"
#include "rr/error.hpp"
#include "rr/random.hpp"

namespace rr {
namespace {

using ad::Tape;
using ad::Tensor;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no rr::Error thrown";
  return ErrorCode::kConfigError;
}

std::unique_ptr<Cell> zeroed(CellConfig c) {
  Rng rng(1);
  auto cell = make_cell(c, rng);
  for (auto* p : cell->parameters()) p->value.fill(0);
  return cell;
}

Tensor random_embeddings(Rng& rng, std::size_t vocab, std::size_t dim) {
  Tensor e(vocab, dim);
  for (auto& v : e.data()) v = rng.uniform(-1, 1);
  return e;
}

std::vector<double> c_trace(const Cell& cell, const Tensor& emb, const std::vector<Symbol>& x, std::size_t dim = 0) {
  Tape tape;
  std::vector<double> out;
  for (const auto& s : unroll(cell, tape, tape.constant(emb), x)) out.push_back(s.c.value()[dim]);
  return out;
}

TEST(Example1, ConstantGateTrace) {
  auto cell = zeroed({.kind = CellKind::kExample1, .input_dim = 2, .hidden = 1});
  cell->param("b_u").value[0] = 2;
  const auto c = c_trace(*cell, Tensor(1, 2), {0, 0, 0});
  EXPECT_DOUBLE_EQ(c[0], 1);
  EXPECT_DOUBLE_EQ(c[1], 1.5);
  EXPECT_DOUBLE_EQ(c[2], 1.75);
}

TEST(Example1, ClosedForgetGateIsMemoryless) {
  auto cell = zeroed({.kind = CellKind::kExample1, .input_dim = 1, .hidden = 1});
  cell->param("b_f").value[0] = -50;  // f ~ 0
  cell->param("W_u").value[0] = 1;
  const Tensor emb(3, 1, std::vector<double>{0.3, -0.7, 0.9});
  const auto c = c_trace(*cell, emb, {0, 2, 1, 1});
  EXPECT_NEAR(c[0], 0.3, 1e-15);
  EXPECT_NEAR(c[1], 0.9, 1e-15);
  EXPECT_NEAR(c[2], -0.7, 1e-15);
}

TEST(RrnnB, MatchesClosedForm) {
  Rng rng(2);
  auto cell = make_cell({.kind = CellKind::kRrnnB, .input_dim = 3, .hidden = 2}, rng);
  const Tensor emb = random_embeddings(rng, 4, 3);
  const std::vector<Symbol> x{1, 3, 0, 0, 2};
  // Per-symbol forget and input values read off the cell.
  std::vector<double> mu(4), phi(4);
  Tape tape;
  for (Symbol a = 0; a < 4; ++a) {
    Tensor row(1, 3);
    for (std::size_t k = 0; k < 3; ++k) row[k] = emb(a, k);
    auto r = cell->readouts(tape, tape.constant(Tensor(1, 3)), tape.constant(row));
    phi[a] = r.at("f").value()[1];
    mu[a] = r.at("u").value()[1];
  }
  const auto want = oracle::b_prefixes(mu, phi, x);
  const auto got = c_trace(*cell, emb, x, 1);
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(got[t], want[t], 1e-12);
}

TEST(RrnnBMaxPlus, FirstStepAndMonotone) {
  Rng rng(3);
  auto cell = make_cell({.kind = CellKind::kRrnnBMaxPlus, .input_dim = 2, .hidden = 3}, rng);
  const Tensor emb = random_embeddings(rng, 3, 2);
  Tape tape;
  const auto states = unroll(*cell, tape, tape.constant(emb), std::vector<Symbol>{2, 0, 1, 1});
  Tensor row(1, 2, std::vector<double>{emb(2, 0), emb(2, 1)});
  const auto r = cell->readouts(tape, tape.constant(Tensor(1, 2)), tape.constant(row));
  EXPECT_EQ(states[0].c.value(), r.at("u").value());
  // c_t = max(log f_t + c_{t-1}, u_t), with log f_t < 0.
  const std::vector<Symbol> x{2, 0, 1, 1};
  for (std::size_t t = 1; t < states.size(); ++t) {
    Tensor v(1, 2, std::vector<double>{emb(x[t], 0), emb(x[t], 1)});
    const auto rt = cell->readouts(tape, tape.constant(Tensor(1, 2)), tape.constant(v));
    for (std::size_t i = 0; i < 3; ++i) {
      const double f = rt.at("f").value()[i];
      EXPECT_LT(f, 0);
      EXPECT_EQ(states[t].c.value()[i], std::max(f + states[t - 1].c.value()[i], rt.at("u").value()[i]));
    }
  }
  EXPECT_EQ(cell_semiring(CellKind::kRrnnBMaxPlus).kind(), Semiring::max_plus().kind());
  EXPECT_EQ(cell->initial_state(tape, 1).memory[0].value()[0], -std::numeric_limits<double>::infinity());
}

TEST(Qrnn2, ZeroWindowWeightsReduceToExample1) {
  Rng rng(4);
  auto q = make_cell({.kind = CellKind::kQrnn2, .input_dim = 2, .hidden = 2, .activation = Activation::kTanh}, rng);
  Rng rng2(5);
  auto e = make_cell({.kind = CellKind::kExample1, .input_dim = 2, .hidden = 2, .activation = Activation::kTanh}, rng2);
  q->param("V_f").value.fill(0);
  q->param("V_u").value.fill(0);
  for (const char* n : {"W_f", "b_f", "W_u", "b_u"}) e->param(n).value = q->param(n).value;
  const Tensor emb = random_embeddings(rng, 3, 2);
  const std::vector<Symbol> x{0, 2, 2, 1, 0};
  const auto a = c_trace(*q, emb, x);
  const auto b = c_trace(*e, emb, x);
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_DOUBLE_EQ(a[t], b[t]);
}

TEST(Rcnn, BigramConstantLambdaExample) {
  auto cell = zeroed({.kind = CellKind::kRcnn, .input_dim = 1, .hidden = 1, .ngram = 2,
                      .lambda_mode = LambdaMode::kConstant});
  cell->param("b_u1").value[0] = 2;
  cell->param("b_u2").value[0] = 4;
  const auto c = c_trace(*cell, Tensor(1, 1), {0, 0, 0});
  EXPECT_DOUBLE_EQ(c[0], 0);
  EXPECT_DOUBLE_EQ(c[1], 2);
  EXPECT_DOUBLE_EQ(c[2], 4);
}

TEST(Rcnn, StateDependentLambdaIsRejected) {
  Rng rng(6);
  EXPECT_EQ(code_of([&] {
              make_cell({.kind = CellKind::kRcnn, .input_dim = 1, .hidden = 1,
                         .lambda_mode = LambdaMode::kStateDependent},
                        rng);
            }),
            ErrorCode::kNotRational);
}

TEST(Isan, ScalarExampleAndIdentity) {
  auto cell = zeroed({.kind = CellKind::kIsan, .hidden = 1, .vocab_size = 1});
  cell->param("W").value[0] = 0.5;
  cell->param("b").value[0] = 1;
  const auto c = c_trace(*cell, Tensor(), {0, 0, 0});
  EXPECT_DOUBLE_EQ(c[2], 1.75);

  auto id = zeroed({.kind = CellKind::kIsan, .hidden = 2, .vocab_size = 2});
  for (std::size_t a = 0; a < 2; ++a) {
    id->param("W").value(a, 0) = 1;
    id->param("W").value(a, 3) = 1;
  }
  id->param("b").value(0, 0) = 0.25;
  Tape tape;
  const auto s = unroll(*id, tape, tape.constant(Tensor()), std::vector<Symbol>{0, 1, 1, 1});
  for (const auto& st : s) EXPECT_EQ(st.c.value()[0], 0.25);
  EXPECT_EQ(code_of([&] { unroll(*id, tape, tape.constant(Tensor()), std::vector<Symbol>{2}); }),
            ErrorCode::kUnknownSymbol);
}

TEST(Isan, MatchesOracle) {
  Rng rng(7);
  auto cell = make_cell({.kind = CellKind::kIsan, .hidden = 3, .vocab_size = 4}, rng);
  std::vector<std::vector<std::vector<double>>> w(4, std::vector<std::vector<double>>(3, std::vector<double>(3)));
  std::vector<std::vector<double>> b(4, std::vector<double>(3));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t j = 0; j < 3; ++j) {
      b[a][j] = cell->param("b").value(a, j);
      for (std::size_t i = 0; i < 3; ++i) w[a][j][i] = cell->param("W").value(a, j * 3 + i);
    }
  const std::vector<Symbol> x{3, 1, 0, 2, 2, 1};
  const auto want = oracle::isan_states(w, b, x);
  Tape tape;
  const auto got = unroll(*cell, tape, tape.constant(Tensor()), x);
  for (std::size_t t = 0; t < x.size(); ++t)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(got[t].c.value()[j], want[t][j], 1e-12);
}

// F with p2 -> 0 tracks B's c1 and with p1 -> 0, r -> 0 tracks C.
TEST(RrnnF, SaturatedMixturesRecoverBAndC) {
  Rng rng(8);
  const CellConfig base{.input_dim = 3, .hidden = 2};
  CellConfig fc = base;
  fc.kind = CellKind::kRrnnF;
  auto f = make_cell(fc, rng);
  CellConfig cc = base;
  cc.kind = CellKind::kRrnnC;
  auto c = make_cell(cc, rng);
  for (const char* n : {"W_f1", "b_f1", "W_u1", "W_f2", "b_f2", "W_u2"}) c->param(n).value = f->param(n).value;
  CellConfig bc = base;
  bc.kind = CellKind::kRrnnB;
  auto b = make_cell(bc, rng);
  b->param("W_f").value = f->param("W_f1").value;
  b->param("b_f").value = f->param("b_f1").value;
  b->param("W_u").value = f->param("W_u1").value;

  const Tensor emb = random_embeddings(rng, 5, 3);
  const std::vector<Symbol> x{4, 0, 2, 2, 3, 1};
  f->param("b_p1").value.fill(40);
  f->param("b_p2").value.fill(-40);
  auto fb = c_trace(*f, emb, x);
  auto bb = c_trace(*b, emb, x);
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(fb[t], bb[t], 1e-12);

  f->param("b_p1").value.fill(-40);
  f->param("b_p2").value.fill(40);
  f->param("b_r").value.fill(-40);
  auto fc2 = c_trace(*f, emb, x);
  auto cc2 = c_trace(*c, emb, x);
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(fc2[t], cc2[t], 1e-12);
}

TEST(Cells, CarriedStateContinuesExactly) {
  Rng rng(9);
  for (CellKind k : {CellKind::kRrnnB, CellKind::kRrnnBMaxPlus, CellKind::kRrnnC, CellKind::kRrnnF, CellKind::kQrnn2,
                     CellKind::kRcnn, CellKind::kIsan}) {
    auto cell = make_cell({.kind = k, .input_dim = 3, .hidden = 2, .vocab_size = 4, .ngram = 3}, rng);
    const Tensor emb = random_embeddings(rng, 4, 3);
    const std::vector<Symbol> x{1, 2, 0, 3, 3, 1, 0};
    Tape tape;
    const auto full = unroll(*cell, tape, tape.constant(emb), x);
    const std::span<const Symbol> xs(x);
    const auto head = unroll(*cell, tape, tape.constant(emb), xs.subspan(0, 3));
    const CarriedState carried = detach(head.back());
    const auto tail = unroll(*cell, tape, tape.constant(emb), xs.subspan(3), &carried);
    for (std::size_t t = 0; t < tail.size(); ++t)
      EXPECT_EQ(tail[t].c.value(), full[t + 3].c.value()) << cell_kind_name(k) << " t=" << t;
  }
}

TEST(Cells, StepIsPureAndGatesInRange) {
  Rng rng(10);
  auto cell = make_cell({.kind = CellKind::kRrnnF, .input_dim = 3, .hidden = 4, .output_gate = true}, rng);
  const Tensor emb = random_embeddings(rng, 3, 3);
  const std::vector<Symbol> x{0, 1, 2};
  EXPECT_EQ(c_trace(*cell, emb, x), c_trace(*cell, emb, x));
  Tape tape;
  Tensor row(1, 3, std::vector<double>{5, -5, 3});
  auto r = cell->readouts(tape, tape.constant(Tensor(1, 3)), tape.constant(row));
  for (const char* g : {"f1", "f2", "p1", "p2", "r"})
    for (double v : r.at(g).value().data()) {
      EXPECT_GT(v, 0);
      EXPECT_LT(v, 1);
    }
  const auto states = unroll(*cell, tape, tape.constant(emb), x);
  for (double v : states.back().h.value().data()) EXPECT_LT(std::abs(v), 1);
}

TEST(Cells, ShapeAndConfigErrors) {
  Rng rng(11);
  auto cell = make_cell({.kind = CellKind::kRrnnB, .input_dim = 3, .hidden = 2}, rng);
  Tape tape;
  EXPECT_EQ(code_of([&] { unroll(*cell, tape, tape.constant(Tensor(2, 4)), std::vector<Symbol>{0}); }),
            ErrorCode::kShapeError);
  EXPECT_TRUE(unroll(*cell, tape, tape.constant(Tensor(2, 3)), std::vector<Symbol>{}).empty());
  EXPECT_EQ(code_of([&] { make_cell({.kind = CellKind::kRrnnB, .input_dim = 3, .hidden = 0}, rng); }),
            ErrorCode::kConfigError);
  EXPECT_EQ(code_of([&] { make_cell({.kind = CellKind::kIsan, .hidden = 2}, rng); }), ErrorCode::kConfigError);
  EXPECT_EQ(code_of([&] { parse_cell_kind("lstm"); }), ErrorCode::kConfigError);
  EXPECT_EQ(parse_cell_kind("rrnn_f"), CellKind::kRrnnF);
}

}  // namespace
}  // namespace rr
