#ifndef AVMIG_NN_GRADCHECK_HPP_
#define AVMIG_NN_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>

#include "avmig/nn/tape.hpp"

namespace avmig::nn {

// Central finite differences of `loss` with respect to every entry of `p`.
inline Matrix numeric_gradient(Parameter& p, const std::function<double()>& loss,
                               double step = 1e-5) {
  Matrix g(p.value.rows(), p.value.cols());
  for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      const double saved = p.value(i, j);
      p.value(i, j) = saved + step;
      const double up = loss();
      p.value(i, j) = saved - step;
      const double down = loss();
      p.value(i, j) = saved;
      g(i, j) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

struct GradientComparison {
  double max_relative = 0.0;  // over entries that exceed the absolute floor
  double max_absolute = 0.0;
  bool ok = true;
};

// An entry passes when |a - n| <= abs_floor or |a - n| / max(|a|, |n|) <= rel_tol.
inline GradientComparison compare_gradients(const Matrix& analytic, const Matrix& numeric,
                                            double rel_tol = 1e-4, double abs_floor = 1e-7) {
  GradientComparison out;
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    const double a = analytic(k);
    const double n = numeric(k);
    const double diff = std::abs(a - n);
    out.max_absolute = std::max(out.max_absolute, diff);
    if (diff <= abs_floor) continue;
    const double rel = diff / std::max(std::abs(a), std::abs(n));
    out.max_relative = std::max(out.max_relative, rel);
    if (rel > rel_tol) out.ok = false;
  }
  return out;
}

}  // namespace avmig::nn

#endif  // AVMIG_NN_GRADCHECK_HPP_
