#ifndef AVMIG_NN_DISTRIBUTIONS_HPP_
#define AVMIG_NN_DISTRIBUTIONS_HPP_

#include <random>

#include "avmig/nn/tape.hpp"

namespace avmig::nn {

using Rng = std::mt19937_64;

// Samples are kept this far from the ends of [0,1] so log-densities stay finite.
inline constexpr double kBetaEdge = 1e-9;

// Log-softmax of one logit vector; -inf logits stay -inf (masked).
Vector log_softmax(const Vector& logits);

struct CategoricalDraw {
  int index = 0;
  double log_prob = 0.0;
};

// Draws from softmax(logits). Masked (-inf) entries are never drawn.
CategoricalDraw categorical_sample(const Vector& logits, Rng& rng);

struct BoundedDraw {
  double value = 0.0;
  double log_density = 0.0;
};

// Draws from Beta(alpha, beta) and returns the exact log-density there.
BoundedDraw bounded_sample(double alpha, double beta, Rng& rng);

double beta_log_density(double x, double alpha, double beta);
double beta_entropy(double alpha, double beta);

// Taped counterparts for policy losses; x is a constant row of samples,
// alpha/beta rows of concentrations (all 1 x batch).
Var beta_log_density(Var x, Var alpha, Var beta);
Var beta_entropy(Var alpha, Var beta);

}  // namespace avmig::nn

#endif  // AVMIG_NN_DISTRIBUTIONS_HPP_
