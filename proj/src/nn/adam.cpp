#include "avmig/nn/adam.hpp"

#include <cmath>

namespace avmig::nn {

Adam::Adam(std::vector<Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

StepReport Adam::step() {
  double norm2 = 0.0;
  for (const Parameter* p : params_) {
    if (!p->grad.allFinite()) {
      return {false, "non-finite gradient in " + p->name};
    }
    norm2 += p->grad.squaredNorm();
  }
  double scale = 1.0;
  if (config_.max_grad_norm > 0.0) {
    const double norm = std::sqrt(norm2);
    if (norm > config_.max_grad_norm) scale = config_.max_grad_norm / norm;
  }

  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    const Matrix g = scale * p.grad;
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * g;
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    const auto m_hat = m_[k].array() / c1;
    const auto v_hat = v_[k].array() / c2;
    p.value.array() -= config_.learning_rate * m_hat / (v_hat.sqrt() + config_.epsilon);
  }
  return {};
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

}  // namespace avmig::nn
