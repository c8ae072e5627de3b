// SPDX-License-Identifier: Apache-2.0
#include "rr/cells.hpp"

#include <cmath>
#include <limits>

#include "rr/error.hpp"
#include "rr/random.hpp"

namespace rr {

using ad::Tape;
using ad::Tensor;
using ad::Var;

CellKind parse_cell_kind(std::string_view name) {
  if (name == "example1") return CellKind::kExample1;
  if (name == "rrnn_b") return CellKind::kRrnnB;
  if (name == "rrnn_b_maxplus") return CellKind::kRrnnBMaxPlus;
  if (name == "rrnn_c") return CellKind::kRrnnC;
  if (name == "rrnn_f") return CellKind::kRrnnF;
  if (name == "qrnn2") return CellKind::kQrnn2;
  if (name == "rcnn") return CellKind::kRcnn;
  if (name == "isan") return CellKind::kIsan;
  throw Error(ErrorCode::kConfigError, "unknown cell '" + std::string(name) + "'");
}

std::string_view cell_kind_name(CellKind kind) {
  switch (kind) {
    case CellKind::kExample1: return "example1";
    case CellKind::kRrnnB: return "rrnn_b";
    case CellKind::kRrnnBMaxPlus: return "rrnn_b_maxplus";
    case CellKind::kRrnnC: return "rrnn_c";
    case CellKind::kRrnnF: return "rrnn_f";
    case CellKind::kQrnn2: return "qrnn2";
    case CellKind::kRcnn: return "rcnn";
    case CellKind::kIsan: return "isan";
  }
  return "?";
}

Semiring cell_semiring(CellKind kind) {
  return kind == CellKind::kRrnnBMaxPlus ? Semiring::max_plus() : Semiring::real();
}

CarriedState detach(const CellState& s) {
  CarriedState out;
  for (const Var& m : s.memory) out.memory.push_back(m.value());
  if (s.prev_input.valid()) out.prev_input = s.prev_input.value();
  out.t = s.t;
  return out;
}

CellState Cell::initial_state(Tape& tape, std::size_t batch, const CarriedState* carried) const {
  CellState s;
  const std::size_t d = config_.hidden;
  if (carried) {
    if (carried->memory.size() != memory_size()) {
      throw Error(ErrorCode::kShapeError, "carried state has " + std::to_string(carried->memory.size()) +
                                              " memories, cell expects " + std::to_string(memory_size()));
    }
    for (const Tensor& m : carried->memory) {
      if (m.rows() != batch || m.cols() != d) throw Error(ErrorCode::kShapeError, "carried state shape mismatch");
      s.memory.push_back(tape.constant(m));
    }
    s.t = carried->t;
  } else {
    const double zero = cell_semiring(config_.kind).zero();
    for (std::size_t k = 0; k < memory_size(); ++k) s.memory.push_back(tape.constant(Tensor(batch, d, zero)));
  }
  if (carried && carried->prev_input.rows() == batch && carried->prev_input.cols() == config_.input_dim) {
    s.prev_input = tape.constant(carried->prev_input);
  } else {
    s.prev_input = tape.constant(Tensor(batch, config_.input_dim));
  }
  s.c = s.memory.back();
  s.h = tape.constant(Tensor(batch, d));
  return s;
}

CellState Cell::step(Tape& tape, const CellState& prev, const StepInput& in) const {
  if (config_.kind != CellKind::kIsan && in.v.cols() != config_.input_dim) {
    throw Error(ErrorCode::kShapeError, "input has " + std::to_string(in.v.cols()) + " columns, cell expects " +
                                            std::to_string(config_.input_dim));
  }
  if (prev.memory.size() != memory_size()) throw Error(ErrorCode::kShapeError, "state does not belong to this cell");
  CellState next;
  recur(tape, prev, in, next);
  next.h = output(tape, next.c, in.v);
  next.prev_input = in.v;
  next.t = prev.t + 1;
  return next;
}

std::vector<ad::Parameter*> Cell::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& [name, p] : params_) out.push_back(&p);
  return out;
}

ad::Parameter& Cell::param(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::kConfigError, "cell has no parameter " + name);
  return it->second;
}

const ad::Parameter& Cell::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::kConfigError, "cell has no parameter " + name);
  return it->second;
}

ad::Parameter& Cell::add_param(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng,
                               double scale) {
  Tensor value(rows, cols);
  if (scale > 0.0)
    for (double& v : value.data()) v = rng.uniform(-scale, scale);
  auto [it, inserted] = params_.try_emplace(name, name, std::move(value));
  return it->second;
}

Var Cell::p(Tape& tape, const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::kConfigError, "cell has no parameter " + name);
  return tape.param(it->second);
}

Var Cell::linear(Tape& tape, Var v, const std::string& weight, const std::string& bias) const {
  Var y = ad::matmul(v, p(tape, weight));
  return bias.empty() ? y : ad::add(y, p(tape, bias));
}

Var Cell::output(Tape& tape, Var c, Var v) const {
  if (!config_.output_gate) return ad::tanh(c);
  Var o = ad::sigmoid(linear(tape, v, "W_o", "b_o"));
  return ad::tanh(ad::mul(o, c));
}

void Cell::add_output_gate(Rng& rng) {
  const double scale = std::sqrt(3.0 / static_cast<double>(config_.input_dim));
  add_param("W_o", config_.input_dim, config_.hidden, rng, scale);
  add_param("b_o", 1, config_.hidden, rng, 0.0);
}

namespace {

double input_scale(const CellConfig& c) { return std::sqrt(3.0 / static_cast<double>(c.input_dim)); }

Var apply(Activation g, Var x) { return g == Activation::kTanh ? ad::tanh(x) : x; }

// c_t = f * c_{t-1} + (1 - f) * g(v W_u + b_u), b_u and g configurable.
class Example1Cell : public Cell {
 public:
  Example1Cell(const CellConfig& c, Rng& rng, bool input_bias) : Cell(c), input_bias_(input_bias) {
    const double s = input_scale(c);
    add_param("W_f", c.input_dim, c.hidden, rng, s);
    add_param("b_f", 1, c.hidden, rng, 0.0);
    add_param("W_u", c.input_dim, c.hidden, rng, s);
    if (input_bias_) add_param("b_u", 1, c.hidden, rng, 0.0);
    if (c.output_gate) add_output_gate(rng);
  }

  std::map<std::string, Var> readouts(Tape& tape, Var, Var v) const override {
    Var f = ad::sigmoid(linear(tape, v, "W_f", "b_f"));
    Var g = apply(input_bias_ ? config_.activation : Activation::kIdentity,
                  linear(tape, v, "W_u", input_bias_ ? "b_u" : ""));
    return {{"f", f}, {"u", ad::mul(ad::one_minus(f), g)}};
  }

 protected:
  void recur(Tape& tape, const CellState& prev, const StepInput& in, CellState& next) const override {
    auto r = readouts(tape, prev.prev_input, in.v);
    Var c = ad::add(ad::mul(r.at("f"), prev.memory[0]), r.at("u"));
    next.memory = {c};
    next.c = c;
  }

 private:
  bool input_bias_;
};

// Max-plus B: c_t = max(log sigma(v W_f + b_f) + c_{t-1}, v W_u).
class MaxPlusCell : public Cell {
 public:
  MaxPlusCell(const CellConfig& c, Rng& rng) : Cell(c) {
    const double s = input_scale(c);
    add_param("W_f", c.input_dim, c.hidden, rng, s);
    add_param("b_f", 1, c.hidden, rng, 0.0);
    add_param("W_u", c.input_dim, c.hidden, rng, s);
    if (c.output_gate) add_output_gate(rng);
  }

  std::map<std::string, Var> readouts(Tape& tape, Var, Var v) const override {
    return {{"f", ad::log_sigmoid(linear(tape, v, "W_f", "b_f"))}, {"u", linear(tape, v, "W_u", "")}};
  }

 protected:
  void recur(Tape& tape, const CellState& prev, const StepInput& in, CellState& next) const override {
    auto r = readouts(tape, prev.prev_input, in.v);
    Var c = ad::maximum(ad::add(r.at("f"), prev.memory[0]), r.at("u"));
    next.memory = {c};
    next.c = c;
  }

  Var output(Tape& tape, Var c, Var v) const override {
    if (!config_.output_gate) return ad::tanh(c);
    Var o = ad::log_sigmoid(linear(tape, v, "W_o", "b_o"));
    return ad::tanh(ad::add(o, c));
  }
};

// Two-stage (bigram) cells. C: c2 = c2 f2 + c1_{t-1} u2.
// F additionally: c2 = c2 f2 + (c1_{t-1} + r) u2 and c = p1 c1 + p2 c2.
class BigramCell : public Cell {
 public:
  BigramCell(const CellConfig& c, Rng& rng, bool interpolate) : Cell(c), interpolate_(interpolate) {
    const double s = input_scale(c);
    for (const char* j : {"1", "2"}) {
      add_param(std::string("W_f") + j, c.input_dim, c.hidden, rng, s);
      add_param(std::string("b_f") + j, 1, c.hidden, rng, 0.0);
      add_param(std::string("W_u") + j, c.input_dim, c.hidden, rng, s);
    }
    if (interpolate_) {
      add_param("b_p1", 1, c.hidden, rng, 0.0);
      add_param("b_p2", 1, c.hidden, rng, 0.0);
      add_param("b_r", 1, c.hidden, rng, 0.0);
    }
    if (c.output_gate) add_output_gate(rng);
  }

  std::map<std::string, Var> readouts(Tape& tape, Var, Var v) const override {
    std::map<std::string, Var> r;
    for (const char* j : {"1", "2"}) {
      Var f = ad::sigmoid(linear(tape, v, std::string("W_f") + j, std::string("b_f") + j));
      r[std::string("f") + j] = f;
      r[std::string("u") + j] = ad::mul(ad::one_minus(f), linear(tape, v, std::string("W_u") + j, ""));
    }
    if (interpolate_) {
      r["p1"] = ad::sigmoid(p(tape, "b_p1"));
      r["p2"] = ad::sigmoid(p(tape, "b_p2"));
      r["r"] = ad::sigmoid(p(tape, "b_r"));
    }
    return r;
  }

 protected:
  std::size_t memory_size() const override { return 2; }

  void recur(Tape& tape, const CellState& prev, const StepInput& in, CellState& next) const override {
    auto r = readouts(tape, prev.prev_input, in.v);
    const Var c1_prev = prev.memory[0];
    const Var c2_prev = prev.memory[1];
    Var c1 = ad::add(ad::mul(c1_prev, r.at("f1")), r.at("u1"));
    Var carry = interpolate_ ? ad::add(c1_prev, r.at("r")) : c1_prev;
    Var c2 = ad::add(ad::mul(c2_prev, r.at("f2")), ad::mul(carry, r.at("u2")));
    next.memory = {c1, c2};
    next.c = interpolate_ ? ad::add(ad::mul(c1, r.at("p1")), ad::mul(c2, r.at("p2"))) : c2;
  }

 private:
  bool interpolate_;
};

// f = sigma(v_{t-1} V_f + v_t W_f + b_f), u = (1 - f) g(v_{t-1} V_u + v_t W_u + b_u).
class Qrnn2Cell : public Cell {
 public:
  Qrnn2Cell(const CellConfig& c, Rng& rng) : Cell(c) {
    const double s = input_scale(c);
    add_param("V_f", c.input_dim, c.hidden, rng, s);
    add_param("W_f", c.input_dim, c.hidden, rng, s);
    add_param("b_f", 1, c.hidden, rng, 0.0);
    add_param("V_u", c.input_dim, c.hidden, rng, s);
    add_param("W_u", c.input_dim, c.hidden, rng, s);
    add_param("b_u", 1, c.hidden, rng, 0.0);
    if (c.output_gate) add_output_gate(rng);
  }

  std::map<std::string, Var> readouts(Tape& tape, Var v_prev, Var v) const override {
    Var f = ad::sigmoid(ad::add(ad::matmul(v_prev, p(tape, "V_f")), linear(tape, v, "W_f", "b_f")));
    Var g = apply(config_.activation, ad::add(ad::matmul(v_prev, p(tape, "V_u")), linear(tape, v, "W_u", "b_u")));
    return {{"f", f}, {"u", ad::mul(ad::one_minus(f), g)}};
  }

 protected:
  void recur(Tape& tape, const CellState& prev, const StepInput& in, CellState& next) const override {
    auto r = readouts(tape, prev.prev_input, in.v);
    Var c = ad::add(ad::mul(r.at("f"), prev.memory[0]), r.at("u"));
    next.memory = {c};
    next.c = c;
  }
};

// n-gram RCNN: c1 = c1 lambda + u1; cj = cj lambda + c(j-1)_{t-1} uj.
class RcnnCell : public Cell {
 public:
  RcnnCell(const CellConfig& c, Rng& rng) : Cell(c) {
    if (c.lambda_mode == LambdaMode::kStateDependent) {
      throw Error(ErrorCode::kNotRational, "a lambda gate that reads c_{t-1} is outside the rational class");
    }
    if (c.ngram < 1) throw Error(ErrorCode::kConfigError, "rcnn needs ngram >= 1");
    const double s = input_scale(c);
    if (c.lambda_mode == LambdaMode::kInputDependent) add_param("W_lambda", c.input_dim, c.hidden, rng, s);
    add_param("b_lambda", 1, c.hidden, rng, 0.0);
    for (std::size_t j = 1; j <= c.ngram; ++j) {
      add_param("W_u" + std::to_string(j), c.input_dim, c.hidden, rng, s);
      add_param("b_u" + std::to_string(j), 1, c.hidden, rng, 0.0);
    }
    if (c.output_gate) add_output_gate(rng);
  }

  std::map<std::string, Var> readouts(Tape& tape, Var, Var v) const override {
    Var lambda = config_.lambda_mode == LambdaMode::kConstant ? ad::sigmoid(p(tape, "b_lambda"))
                                                               : ad::sigmoid(linear(tape, v, "W_lambda", "b_lambda"));
    std::map<std::string, Var> r{{"lambda", lambda}};
    for (std::size_t j = 1; j <= config_.ngram; ++j) {
      const std::string k = std::to_string(j);
      Var g = apply(config_.activation, linear(tape, v, "W_u" + k, "b_u" + k));
      // (1 - lambda) broadcasts as the second operand.
      r["u" + k] = ad::mul(g, ad::one_minus(lambda));
    }
    return r;
  }

 protected:
  std::size_t memory_size() const override { return config_.ngram; }

  void recur(Tape& tape, const CellState& prev, const StepInput& in, CellState& next) const override {
    auto r = readouts(tape, prev.prev_input, in.v);
    const Var lambda = r.at("lambda");
    next.memory.resize(config_.ngram);
    for (std::size_t j = 0; j < config_.ngram; ++j) {
      Var decayed = ad::mul(prev.memory[j], lambda);
      Var fresh = r.at("u" + std::to_string(j + 1));
      if (j > 0) fresh = ad::mul(prev.memory[j - 1], fresh);
      next.memory[j] = ad::add(decayed, fresh);
    }
    next.c = next.memory.back();
  }
};

// c_t = W_{x_t} c_{t-1} + b_{x_t}, one affine map per symbol.
class IsanCell : public Cell {
 public:
  IsanCell(const CellConfig& c, Rng& rng) : Cell(c) {
    if (c.vocab_size == 0) throw Error(ErrorCode::kConfigError, "isan needs vocab_size");
    if (c.output_gate) throw Error(ErrorCode::kConfigError, "isan has no input embedding to gate on");
    const double d = static_cast<double>(c.hidden);
    add_param("W", c.vocab_size, c.hidden * c.hidden, rng, 1.0 / d);
    add_param("b", c.vocab_size, c.hidden, rng, 0.5);
  }

  std::map<std::string, Var> readouts(Tape&, Var, Var) const override { return {}; }

 protected:
  void recur(Tape& tape, const CellState& prev, const StepInput& in, CellState& next) const override {
    if (in.symbols.size() != prev.memory[0].rows()) {
      throw Error(ErrorCode::kShapeError, "isan step needs one symbol per batch row");
    }
    for (Symbol s : in.symbols) {
      if (s < 0 || static_cast<std::size_t>(s) >= config_.vocab_size) {
        throw Error(ErrorCode::kUnknownSymbol, "symbol " + std::to_string(s) + " has no affine map");
      }
    }
    Var w = ad::embedding_lookup(p(tape, "W"), in.symbols);
    Var b = ad::embedding_lookup(p(tape, "b"), in.symbols);
    Var c = ad::add(ad::rowwise_matvec(w, prev.memory[0]), b);
    next.memory = {c};
    next.c = c;
  }
};

}  // namespace

std::unique_ptr<Cell> make_cell(const CellConfig& config, Rng& rng) {
  if (config.hidden == 0) throw Error(ErrorCode::kConfigError, "hidden size must be positive");
  if (config.kind != CellKind::kIsan && config.input_dim == 0) {
    throw Error(ErrorCode::kConfigError, "input_dim must be positive");
  }
  switch (config.kind) {
    case CellKind::kExample1: return std::make_unique<Example1Cell>(config, rng, true);
    case CellKind::kRrnnB: return std::make_unique<Example1Cell>(config, rng, false);
    case CellKind::kRrnnBMaxPlus: return std::make_unique<MaxPlusCell>(config, rng);
    case CellKind::kRrnnC: return std::make_unique<BigramCell>(config, rng, false);
    case CellKind::kRrnnF: return std::make_unique<BigramCell>(config, rng, true);
    case CellKind::kQrnn2: return std::make_unique<Qrnn2Cell>(config, rng);
    case CellKind::kRcnn: return std::make_unique<RcnnCell>(config, rng);
    case CellKind::kIsan: return std::make_unique<IsanCell>(config, rng);
  }
  throw Error(ErrorCode::kConfigError, "unknown cell kind");
}

std::vector<CellState> unroll(const Cell& cell, Tape& tape, Var embeddings, std::span<const Symbol> x,
                              const CarriedState* carried) {
  std::vector<CellState> states;
  states.reserve(x.size());
  CellState s = cell.initial_state(tape, 1, carried);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::int32_t id = x[t];
    Var v = cell.kind() == CellKind::kIsan ? tape.constant(Tensor(1, 1))
                                           : ad::embedding_lookup(embeddings, std::span<const std::int32_t>(&id, 1));
    s = cell.step(tape, s, StepInput{v, x.subspan(t, 1)});
    states.push_back(s);
  }
  return states;
}

}  // namespace rr
