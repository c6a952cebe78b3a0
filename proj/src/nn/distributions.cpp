#include "avmig/nn/distributions.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <limits>

#include "avmig/errors.hpp"

namespace avmig::nn {

Vector log_softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  if (!std::isfinite(mx)) throw ContractViolation("log_softmax: no finite logit");
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (std::isfinite(logits[i])) total += std::exp(logits[i] - mx);
  }
  const double lse = mx + std::log(total);
  Vector out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    out[i] = std::isfinite(logits[i]) ? logits[i] - lse
                                      : -std::numeric_limits<double>::infinity();
  }
  return out;
}

CategoricalDraw categorical_sample(const Vector& logits, Rng& rng) {
  const Vector lp = log_softmax(logits);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  int last_valid = 0;
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    if (!std::isfinite(lp[i])) continue;
    last_valid = static_cast<int>(i);
    cumulative += std::exp(lp[i]);
    if (u < cumulative) return {static_cast<int>(i), lp[i]};
  }
  return {last_valid, lp[last_valid]};
}

double beta_log_density(double x, double alpha, double beta) {
  return (alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x) -
         (std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta));
}

double beta_entropy(double alpha, double beta) {
  using boost::math::digamma;
  const double log_b = std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
  return log_b - (alpha - 1.0) * digamma(alpha) - (beta - 1.0) * digamma(beta) +
         (alpha + beta - 2.0) * digamma(alpha + beta);
}

BoundedDraw bounded_sample(double alpha, double beta, Rng& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw ContractViolation("bounded_sample: concentrations must be positive");
  }
  const double x = std::gamma_distribution<double>(alpha, 1.0)(rng);
  const double y = std::gamma_distribution<double>(beta, 1.0)(rng);
  double v = (x + y) > 0.0 ? x / (x + y) : 0.5;
  v = std::clamp(v, kBetaEdge, 1.0 - kBetaEdge);
  return {v, beta_log_density(v, alpha, beta)};
}

Var beta_log_density(Var x, Var alpha, Var beta) {
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  Var log_x = t.constant(xv.array().log().matrix());
  Var log_1mx = t.constant(xv.unaryExpr([](double v) { return std::log1p(-v); }));
  Var a1 = alpha + (-1.0);
  Var b1 = beta + (-1.0);
  Var log_norm = lgamma(alpha) + lgamma(beta) - lgamma(alpha + beta);
  return hadamard(a1, log_x) + hadamard(b1, log_1mx) - log_norm;
}

Var beta_entropy(Var alpha, Var beta) {
  Var ab = alpha + beta;
  Var log_b = lgamma(alpha) + lgamma(beta) - lgamma(ab);
  return log_b - hadamard(alpha + (-1.0), digamma(alpha)) -
         hadamard(beta + (-1.0), digamma(beta)) + hadamard(ab + (-2.0), digamma(ab));
}

}  // namespace avmig::nn
