// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rr {
class Rng;
}

namespace rr::ad {

/// Dense row-major matrix of doubles. Vectors are 1 x n rows; a batch of
/// vectors is one row per example.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const double& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  void fill(double v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Learned tensor with its accumulated gradient. Modules hold Parameters by
/// stable address; sharing one Parameter between two uses ties them.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad = Tensor(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient tape. Nodes are appended in evaluation order, which
/// is a topological order; backward() visits each node once in reverse.
/// Single owner: not to be shared across threads while recording.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; backward() accumulates into param.grad.
  Var param(Parameter& p);
  Var record(Tensor value, std::vector<std::size_t> inputs, Backprop backprop);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  Tensor& grad(std::size_t id) { return nodes_[id].grad; }
  const Tensor& grad(Var v) const { return nodes_[v.id()].grad; }
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_[id].inputs; }

  /// Seeds d loss / d loss = 1 and propagates. Throws ShapeError unless the
  /// loss is 1 x 1.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    Backprop backprop;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

// Primitive operations. Binary elementwise ops accept a second operand of
// the same shape or a 1 x cols row that is broadcast over rows.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// scale * a + shift.
Var affine(Var a, double scale, double shift);
Var one_minus(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
/// log(sigmoid(a)) = -softplus(-a), evaluated without overflow.
Var log_sigmoid(Var a);
/// Elementwise max; ties go to `a`, and the gradient follows the winner.
Var maximum(Var a, Var b);
/// Rows of `table` selected by ids.
Var embedding_lookup(Var table, std::span<const std::int32_t> ids);
/// Column-wise concatenation of equally tall operands.
Var concat(std::span<const Var> parts);
/// out[b][j] = sum_i m[b][j*d + i] * x[b][i]: a per-row d x d matrix
/// (stored flattened) applied to a per-row vector.
Var rowwise_matvec(Var m, Var x);
Var sum(Var a);
Var mean(Var a);
/// Mean over rows of -log softmax(logits)[target]. Targets < 0 are ignored
/// (padding) and excluded from the mean.
Var softmax_cross_entropy(Var logits, std::span<const std::int32_t> targets);

/// Inverted-dropout mask: entries are 0 with probability p, else 1/(1-p).
Tensor dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng);

/// Numerically stable scalar helpers shared with non-tape code.
double stable_sigmoid(double x);
double stable_log_sigmoid(double x);
double softplus(double x);

}  // namespace rr::ad
