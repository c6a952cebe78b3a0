#ifndef AVMIG_NN_LAYERS_HPP_
#define AVMIG_NN_LAYERS_HPP_

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "avmig/nn/tape.hpp"

namespace avmig::nn {

using Rng = std::mt19937_64;

// y = W x + b. Weights are out x in, bias out x 1.
struct DenseLayer {
  Parameter weight;
  Parameter bias;

  DenseLayer() = default;
  DenseLayer(const std::string& name, Eigen::Index in, Eigen::Index out);

  Eigen::Index in() const { return weight.value.cols(); }
  Eigen::Index out() const { return weight.value.rows(); }

  // Uniform(-1/sqrt(in), 1/sqrt(in)) weights and biases.
  void init_uniform(Rng& rng);
  std::vector<Parameter*> parameters() { return {&weight, &bias}; }
};

// Eager forward over a batch (one sample per column).
Matrix dense_forward(const DenseLayer& layer, const Matrix& x);
Var dense_forward(Tape& tape, DenseLayer& layer, Var x);

// One LSTM step. Every gate weight is hidden x (hidden + input) and acts on
// the stacked [h_prev; x_t].
struct LstmCell {
  Parameter w_forget, w_input, w_candidate, w_output;
  Parameter b_forget, b_input, b_candidate, b_output;

  LstmCell() = default;
  LstmCell(const std::string& name, Eigen::Index input, Eigen::Index hidden);

  Eigen::Index hidden() const { return w_forget.value.rows(); }
  Eigen::Index input() const { return w_forget.value.cols() - hidden(); }

  // Uniform(+-1/sqrt(hidden + input)); forget-gate bias set to 1.
  void init_uniform(Rng& rng);
  std::vector<Parameter*> parameters() {
    return {&w_forget, &w_input, &w_candidate, &w_output,
            &b_forget, &b_input, &b_candidate, &b_output};
  }
};

struct LstmState {
  Matrix h;
  Matrix c;
};

LstmState lstm_cell(const LstmCell& cell, const Matrix& x, const Matrix& h_prev,
                    const Matrix& c_prev);

struct LstmVars {
  Var h;
  Var c;
};

LstmVars lstm_cell(Tape& tape, LstmCell& cell, Var x, Var h_prev, Var c_prev);

}  // namespace avmig::nn

#endif  // AVMIG_NN_LAYERS_HPP_
