// SPDX-License-Identifier: Apache-2.0
#include "rr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rr/error.hpp"
#include "rr/random.hpp"

namespace rr::ad {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::kShapeError, "tensor data length " + std::to_string(data_.size()) +
                                            " != " + std::to_string(rows) + " x " + std::to_string(cols));
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  // log(1 + e^x)
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double stable_log_sigmoid(double x) { return -softplus(-x); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, nullptr, &p});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, Backprop backprop) {
  nodes_.push_back(Node{std::move(value), {}, std::move(inputs), std::move(backprop), nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.value().rows() != 1 || loss.value().cols() != 1) {
    throw Error(ErrorCode::kShapeError, "backward needs a scalar loss");
  }
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    nodes_[i].grad = Tensor(nodes_[i].value.rows(), nodes_[i].value.cols());
  }
  nodes_[loss.id()].grad[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.backprop) node.backprop(*this, i);
    if (node.param) {
      auto& pg = node.param->grad;
      if (!pg.same_shape(node.value)) pg = Tensor(node.value.rows(), node.value.cols());
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += node.grad[k];
    }
  }
}

namespace {

std::string shape_str(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::kShapeError, std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

void same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error(ErrorCode::kShapeError, "operands recorded on different tapes");
}

// True when b is broadcast over the rows of a.
bool broadcast_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return false;
  if (b.rows() == 1 && b.cols() == a.cols()) return true;
  shape_error(op, a, b);
}

template <typename F, typename DF>
Var unary(Var a, F f, DF df_from_value) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia, df_from_value](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ia);
    const Tensor& yv = t.value(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df_from_value(xv[i], yv[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) shape_error("matmul", A, B);
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor C(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* c = &C(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A(i, p);
      if (av == 0.0) continue;
      const double* brow = &B(p, 0);
      for (std::size_t j = 0; j < m; ++j) c[j] += av * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(C), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    const Tensor& Av = t.value(ia);
    const Tensor& Bv = t.value(ib);
    const std::size_t n = Av.rows(), k = Av.cols(), m = Bv.cols();
    Tensor& GA = t.grad(ia);
    for (std::size_t i = 0; i < n; ++i) {
      const double* g = &G(i, 0);
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = &Bv(p, 0);
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += g[j] * brow[j];
        GA(i, p) += acc;
      }
    }
    Tensor& GB = t.grad(ib);
    for (std::size_t i = 0; i < n; ++i) {
      const double* g = &G(i, 0);
      for (std::size_t p = 0; p < k; ++p) {
        const double av = Av(i, p);
        if (av == 0.0) continue;
        double* gb = &GB(p, 0);
        for (std::size_t j = 0; j < m; ++j) gb[j] += av * g[j];
      }
    }
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) y(c, r) = x(r, c);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(y), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(c, r);
  });
}

namespace {

// Shared body of add/sub/mul with optional row broadcast of b.
enum class Binary { kAdd, kSub, kMul };

Var binary(Var a, Var b, Binary kind, const char* name) {
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool bcast = broadcast_shape(name, A, B);
  const std::size_t cols = A.cols();
  Tensor C(A.rows(), cols);
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double bv = bcast ? B[i % cols] : B[i];
    switch (kind) {
      case Binary::kAdd: C[i] = A[i] + bv; break;
      case Binary::kSub: C[i] = A[i] - bv; break;
      case Binary::kMul: C[i] = A[i] * bv; break;
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(C), {ia, ib}, [ia, ib, bcast, cols, kind](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& Av = t.value(ia);
    const Tensor& Bv = t.value(ib);
    Tensor& ga = t.grad(ia);
    Tensor& gb = t.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t j = bcast ? i % cols : i;
      switch (kind) {
        case Binary::kAdd:
          ga[i] += g[i];
          gb[j] += g[i];
          break;
        case Binary::kSub:
          ga[i] += g[i];
          gb[j] -= g[i];
          break;
        case Binary::kMul:
          ga[i] += g[i] * Bv[j];
          gb[j] += g[i] * Av[i];
          break;
      }
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, Binary::kAdd, "add"); }
Var sub(Var a, Var b) { return binary(a, b, Binary::kSub, "sub"); }
Var mul(Var a, Var b) { return binary(a, b, Binary::kMul, "mul"); }

Var affine(Var a, double scale, double shift) {
  return unary(a, [scale, shift](double x) { return scale * x + shift; },
               [scale](double, double) { return scale; });
}

Var one_minus(Var a) { return affine(a, -1.0, 1.0); }

Var sigmoid(Var a) {
  return unary(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var log_sigmoid(Var a) {
  // d/dx log sigma(x) = 1 - sigma(x) = sigma(-x)
  return unary(a, stable_log_sigmoid, [](double x, double) { return stable_sigmoid(-x); });
}

Var maximum(Var a, Var b) {
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error("maximum", A, B);
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] >= B[i] ? A[i] : B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(C), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& Av = t.value(ia);
    const Tensor& Bv = t.value(ib);
    Tensor& ga = t.grad(ia);
    Tensor& gb = t.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (Av[i] >= Bv[i]) {
        ga[i] += g[i];
      } else {
        gb[i] += g[i];
      }
    }
  });
}

Var embedding_lookup(Var table, std::span<const std::int32_t> ids) {
  const Tensor& E = table.value();
  Tensor out(ids.size(), E.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= E.rows()) {
      throw Error(ErrorCode::kShapeError, "embedding id " + std::to_string(ids[r]) + " outside table of " +
                                              std::to_string(E.rows()) + " rows");
    }
    std::copy_n(&E(ids[r], 0), E.cols(), &out(r, 0));
  }
  const std::size_t it = table.id();
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  return table.tape().record(std::move(out), {it}, [it, saved = std::move(saved)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ge = t.grad(it);
    for (std::size_t r = 0; r < saved.size(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) ge(saved[r], c) += g(r, c);
    }
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeError, "concat of nothing");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  std::vector<std::size_t> inputs;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    if (p.rows() != rows) shape_error("concat", parts[0].value(), p.value());
    cols += p.cols();
    inputs.push_back(p.id());
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(&v(r, 0), v.cols(), &out(r, offset));
    offset += v.cols();
  }
  auto ids = inputs;
  return parts[0].tape().record(std::move(out), std::move(inputs), [ids](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t id : ids) {
      Tensor& gi = t.grad(id);
      for (std::size_t r = 0; r < gi.rows(); ++r)
        for (std::size_t c = 0; c < gi.cols(); ++c) gi(r, c) += g(r, off + c);
      off += gi.cols();
    }
  });
}

Var rowwise_matvec(Var m, Var x) {
  same_tape(m, x);
  const Tensor& M = m.value();
  const Tensor& X = x.value();
  const std::size_t d = X.cols();
  if (M.rows() != X.rows() || M.cols() != d * d) shape_error("rowwise_matvec", M, X);
  Tensor out(X.rows(), d);
  for (std::size_t b = 0; b < X.rows(); ++b)
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) acc += M(b, j * d + i) * X(b, i);
      out(b, j) = acc;
    }
  const std::size_t im = m.id(), ix = x.id();
  return m.tape().record(std::move(out), {im, ix}, [im, ix, d](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& Mv = t.value(im);
    const Tensor& Xv = t.value(ix);
    Tensor& gm = t.grad(im);
    Tensor& gx = t.grad(ix);
    for (std::size_t b = 0; b < Xv.rows(); ++b)
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < d; ++i) {
          gm(b, j * d + i) += g(b, j) * Xv(b, i);
          gx(b, i) += g(b, j) * Mv(b, j * d + i);
        }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return a.tape().record(Tensor::scalar(s), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return affine(sum(a), 1.0 / n, 0.0);
}

Var softmax_cross_entropy(Var logits, std::span<const std::int32_t> targets) {
  const Tensor& L = logits.value();
  if (targets.size() != L.rows()) {
    throw Error(ErrorCode::kShapeError, "softmax_cross_entropy: " + std::to_string(targets.size()) +
                                            " targets for " + std::to_string(L.rows()) + " rows");
  }
  Tensor probs(L.rows(), L.cols());
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < L.rows(); ++r) {
    const auto row = L.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t c = 0; c < L.cols(); ++c) z += std::exp(row[c] - mx);
    const double log_z = mx + std::log(z);
    for (std::size_t c = 0; c < L.cols(); ++c) probs(r, c) = std::exp(row[c] - log_z);
    if (targets[r] < 0) continue;
    if (static_cast<std::size_t>(targets[r]) >= L.cols()) {
      throw Error(ErrorCode::kShapeError, "target " + std::to_string(targets[r]) + " outside " +
                                              std::to_string(L.cols()) + " classes");
    }
    total += log_z - row[targets[r]];
    ++count;
  }
  const double denom = count == 0 ? 1.0 : static_cast<double>(count);
  const std::size_t il = logits.id();
  std::vector<std::int32_t> saved(targets.begin(), targets.end());
  return logits.tape().record(
      Tensor::scalar(total / denom), {il},
      [il, probs = std::move(probs), saved = std::move(saved), denom](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] / denom;
        Tensor& gl = t.grad(il);
        for (std::size_t r = 0; r < probs.rows(); ++r) {
          if (saved[r] < 0) continue;
          for (std::size_t c = 0; c < probs.cols(); ++c) gl(r, c) += g * probs(r, c);
          gl(r, saved[r]) -= g;
        }
      });
}

Tensor dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
  Tensor mask(rows, cols, 1.0);
  if (p <= 0.0) return mask;
  const double keep = 1.0 / (1.0 - p);
  for (double& v : mask.data()) v = rng.bernoulli(p) ? 0.0 : keep;
  return mask;
}

}  // namespace rr::ad
