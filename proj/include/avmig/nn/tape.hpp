#ifndef AVMIG_NN_TAPE_HPP_
#define AVMIG_NN_TAPE_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

// Reverse-mode differentiation over dense Eigen matrices.
//
// A Tape records every operation applied to its Vars. backward() walks the
// record in reverse and accumulates d(loss)/d(param) into Parameter::grad.
// Batches are laid out one sample per column.
namespace avmig::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Matrix& grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Gradients reaching this node are added into p.grad by backward().
  // Repeated calls with the same parameter return the same node.
  Var param(Parameter& p);

  // Records a node computed from `parents`; `backprop` receives the node's
  // gradient and must push contributions with accumulate().
  Var record(Matrix value, std::initializer_list<Var> parents, Backprop backprop);

  // Loss must be 1x1. Parameter grads are accumulated, not overwritten.
  void backward(Var loss);

  void accumulate(Var target, const Matrix& contribution);
  bool needs_grad(Var v) const { return nodes_[v.id_].needs_grad; }
  const Matrix& value(Var v) const { return nodes_[v.id_].value; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    Backprop backprop;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// Elementwise arithmetic. `a + b` also accepts a column vector `b`
// (rows x 1) broadcast across the columns of `a`.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double s);
Var operator*(double s, Var a);
Var hadamard(Var a, Var b);
Var matmul(Var a, Var b);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var lgamma(Var a);
Var digamma(Var a);
Var clamp(Var a, double lo, double hi);
Var minimum(Var a, Var b);

// Stacks `top` over `bottom` (same column count).
Var vconcat(Var top, Var bottom);
Var row_block(Var a, Eigen::Index start, Eigen::Index count);

Var sum(Var a);
Var mean(Var a);

// Column-wise log-softmax. Rows >= valid_rows[j] of column j are excluded
// (log-probability -inf, no gradient). Empty `valid_rows` means all rows.
Var log_softmax(Var logits, std::span<const int> valid_rows = {});
// Picks a(index[j], j) for every column j; result is 1 x cols.
Var pick(Var a, std::span<const int> index);
// Column-wise entropy of a log-probability matrix; -inf entries count as 0.
Var categorical_entropy(Var log_probs);

}  // namespace avmig::nn

#endif  // AVMIG_NN_TAPE_HPP_
