// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "rr/autodiff.hpp"

namespace rr::ad {

/// Scales all gradients so their joint L2 norm is at most max_norm
/// (max_norm <= 0 disables). Returns the norm before clipping. Throws
/// NumericalError on a non-finite gradient.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Clips, then updates every parameter in place from its gradient.
  virtual void step(std::span<Parameter* const> params) = 0;
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 protected:
  explicit Optimizer(double lr) : lr_(lr) {}
  double lr_;
};

class Sgd final : public Optimizer {
 public:
  Sgd(double lr, double clip = 0.0, double l2 = 0.0) : Optimizer(lr), clip_(clip), l2_(l2) {}
  void step(std::span<Parameter* const> params) override;

 private:
  double clip_;
  double l2_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 0.0;
  double l2 = 0.0;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(AdamOptions opts = {}) : Optimizer(opts.lr), opts_(opts) {}
  void step(std::span<Parameter* const> params) override;

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamOptions opts_;
  long step_count_ = 0;
  std::map<const Parameter*, Moments> moments_;
};

/// Result of comparing analytic gradients with central differences.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Relative error between an analytic and a numeric derivative; the
/// denominator is floored at 1e-6 so derivatives that are both ~0 compare
/// absolutely.
double relative_error(double analytic, double numeric);

/// Central finite differences with step h on every entry of `params`
/// (or at most `max_entries` per parameter, evenly strided).
GradCheckResult gradcheck(const std::function<Var(Tape&)>& loss_fn, std::span<Parameter* const> params,
                          double h = 1e-5, std::size_t max_entries = 0);

}  // namespace rr::ad
