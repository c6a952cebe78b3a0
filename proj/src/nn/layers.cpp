#include "avmig/nn/layers.hpp"

#include <cmath>

#include "avmig/errors.hpp"

namespace avmig::nn {

namespace {

void fill_uniform(Matrix& m, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  }
}

Matrix logistic(const Matrix& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

void check_batch(const Matrix& a, const Matrix& b, const char* what) {
  if (a.cols() != b.cols()) throw ContractViolation(std::string(what) + ": batch sizes differ");
}

}  // namespace

DenseLayer::DenseLayer(const std::string& name, Eigen::Index in, Eigen::Index out)
    : weight(name + ".weight", Matrix::Zero(out, in)),
      bias(name + ".bias", Matrix::Zero(out, 1)) {}

void DenseLayer::init_uniform(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in()));
  fill_uniform(weight.value, bound, rng);
  fill_uniform(bias.value, bound, rng);
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
  if (x.rows() != layer.in()) {
    throw ContractViolation("dense_forward: expected " + std::to_string(layer.in()) +
                            " inputs, got " + std::to_string(x.rows()));
  }
  return (layer.weight.value * x).colwise() + layer.bias.value.col(0);
}

Var dense_forward(Tape& tape, DenseLayer& layer, Var x) {
  if (x.rows() != layer.in()) {
    throw ContractViolation("dense_forward: expected " + std::to_string(layer.in()) +
                            " inputs, got " + std::to_string(x.rows()));
  }
  return matmul(tape.param(layer.weight), x) + tape.param(layer.bias);
}

LstmCell::LstmCell(const std::string& name, Eigen::Index input, Eigen::Index hidden) {
  const Eigen::Index cols = hidden + input;
  w_forget = Parameter(name + ".w_forget", Matrix::Zero(hidden, cols));
  w_input = Parameter(name + ".w_input", Matrix::Zero(hidden, cols));
  w_candidate = Parameter(name + ".w_candidate", Matrix::Zero(hidden, cols));
  w_output = Parameter(name + ".w_output", Matrix::Zero(hidden, cols));
  b_forget = Parameter(name + ".b_forget", Matrix::Zero(hidden, 1));
  b_input = Parameter(name + ".b_input", Matrix::Zero(hidden, 1));
  b_candidate = Parameter(name + ".b_candidate", Matrix::Zero(hidden, 1));
  b_output = Parameter(name + ".b_output", Matrix::Zero(hidden, 1));
}

void LstmCell::init_uniform(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(w_forget.value.cols()));
  for (Parameter* p : parameters()) fill_uniform(p->value, bound, rng);
  b_forget.value.setOnes();
}

LstmState lstm_cell(const LstmCell& cell, const Matrix& x, const Matrix& h_prev,
                    const Matrix& c_prev) {
  if (x.rows() != cell.input() || h_prev.rows() != cell.hidden() ||
      c_prev.rows() != cell.hidden()) {
    throw ContractViolation("lstm_cell: shape mismatch");
  }
  check_batch(x, h_prev, "lstm_cell");
  check_batch(x, c_prev, "lstm_cell");
  Matrix z(h_prev.rows() + x.rows(), x.cols());
  z << h_prev, x;
  auto affine = [&z](const Parameter& w, const Parameter& b) -> Matrix {
    return (w.value * z).colwise() + b.value.col(0);
  };
  const Matrix f = logistic(affine(cell.w_forget, cell.b_forget));
  const Matrix i = logistic(affine(cell.w_input, cell.b_input));
  const Matrix o = logistic(affine(cell.w_output, cell.b_output));
  const Matrix c_tilde = affine(cell.w_candidate, cell.b_candidate).array().tanh().matrix();
  LstmState out;
  out.c = f.cwiseProduct(c_prev) + i.cwiseProduct(c_tilde);
  out.h = o.cwiseProduct(out.c.array().tanh().matrix());
  return out;
}

LstmVars lstm_cell(Tape& tape, LstmCell& cell, Var x, Var h_prev, Var c_prev) {
  if (x.rows() != cell.input() || h_prev.rows() != cell.hidden() ||
      c_prev.rows() != cell.hidden()) {
    throw ContractViolation("lstm_cell: shape mismatch");
  }
  Var z = vconcat(h_prev, x);
  auto affine = [&](Parameter& w, Parameter& b) {
    return matmul(tape.param(w), z) + tape.param(b);
  };
  Var f = sigmoid(affine(cell.w_forget, cell.b_forget));
  Var i = sigmoid(affine(cell.w_input, cell.b_input));
  Var o = sigmoid(affine(cell.w_output, cell.b_output));
  Var c_tilde = tanh(affine(cell.w_candidate, cell.b_candidate));
  Var c = hadamard(f, c_prev) + hadamard(i, c_tilde);
  Var h = hadamard(o, tanh(c));
  return {h, c};
}

}  // namespace avmig::nn
