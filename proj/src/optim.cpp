// SPDX-License-Identifier: Apache-2.0
#include "rr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rr/error.hpp"

namespace rr::ad {

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.data()) {
      if (!std::isfinite(g)) throw Error(ErrorCode::kNumericalError, "non-finite gradient in " + p->name);
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Parameter* p : params)
      for (double& g : p->grad.data()) g *= scale;
  }
  return norm;
}

void Sgd::step(std::span<Parameter* const> params) {
  clip_grad_norm(params, clip_);
  for (Parameter* p : params) {
    auto value = p->value.data();
    auto grad = p->grad.data();
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr_ * (grad[i] + l2_ * value[i]);
  }
}

void Adam::step(std::span<Parameter* const> params) {
  clip_grad_norm(params, opts_.clip);
  ++step_count_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_count_));
  for (Parameter* p : params) {
    auto [it, inserted] = moments_.try_emplace(p);
    if (inserted) {
      it->second.m = Tensor(p->value.rows(), p->value.cols());
      it->second.v = Tensor(p->value.rows(), p->value.cols());
    }
    Tensor& m = it->second.m;
    Tensor& v = it->second.v;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i] + opts_.l2 * p->value[i];
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p->value[i] -= lr_ * mhat / (std::sqrt(vhat) + opts_.eps);
    }
  }
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult gradcheck(const std::function<Var(Tape&)>& loss_fn, std::span<Parameter* const> params,
                          double h, std::size_t max_entries) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(loss_fn(tape));
  }
  auto evaluate = [&] {
    Tape tape;
    return loss_fn(tape).value()[0];
  };
  GradCheckResult result;
  for (Parameter* p : params) {
    const std::size_t n = p->value.size();
    const std::size_t stride = (max_entries == 0 || n <= max_entries) ? 1 : n / max_entries;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = evaluate();
      p->value[i] = saved - h;
      const double down = evaluate();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      result.max_rel_error = std::max(result.max_rel_error, relative_error(p->grad[i], numeric));
      ++result.checked;
    }
  }
  return result;
}

}  // namespace rr::ad
