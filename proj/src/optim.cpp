#include "eog/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eog {

void AdamState::step(std::span<NamedParam> params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].tensor.size(), 0.0);
      v_[i].assign(params[i].tensor.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter count changed from " +
                                std::to_string(m_.size()) + " to " +
                                std::to_string(params.size()));
  }
  for (const NamedParam& p : params) {
    if (!p.tensor.has_grad()) {
      throw std::runtime_error("adam_step: missing grad for parameter " + p.name);
    }
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].tensor.values();
    const auto& g = params[i].tensor.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

double clip_global_norm(std::span<NamedParam> params, double max_norm) {
  if (max_norm <= 0.0) {
    throw std::invalid_argument("clip_global_norm: max_norm must be positive");
  }
  double sq = 0.0;
  for (NamedParam& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  // the tolerance band absorbs rescaling round-off, making clipping idempotent
  if (norm > max_norm * (1.0 + 1e-9)) {
    const double s = max_norm / norm;
    for (NamedParam& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.grad()) g *= s;
    }
  }
  return norm;
}

double finite_difference_check(const std::function<Tensor()>& f,
                               std::span<NamedParam> params, double eps) {
  if (eps <= 0.0) {
    throw std::invalid_argument("finite_difference_check: eps must be positive");
  }
  std::vector<std::vector<double>> analytic(params.size());
  {
    Tape tape;
    Tensor loss = f();
    tape.backward(loss);
    for (std::size_t i = 0; i < params.size(); ++i) {
      analytic[i] = params[i].tensor.grad();
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].tensor.values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double saved = w[j];
      w[j] = saved + eps;
      const double up = f().value();
      w[j] = saved - eps;
      const double down = f().value();
      w[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[i][j];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace eog
