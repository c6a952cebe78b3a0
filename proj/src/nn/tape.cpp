#include "avmig/nn/tape.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <limits>

#include "avmig/errors.hpp"

namespace avmig::nn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ContractViolation("Vars belong to different tapes");
  }
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation(std::string(op) + ": shape mismatch");
  }
}

template <typename F, typename D>
Var unary(Var a, F f, D dfdx_from_x_and_y) {
  Matrix y = a.value().unaryExpr(f);
  Tape& t = *a.tape();
  return t.record(std::move(y), {a}, [a, dfdx_from_x_and_y](Tape& tape, const Matrix& g) {
    const Matrix& x = tape.value(a);
    tape.accumulate(a, g.cwiseProduct(dfdx_from_x_and_y(x)));
  });
}

}  // namespace

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractViolation("unbound Var");
  return tape_->value(*this);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ContractViolation("Var is not a scalar");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, false, nullptr, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  param_nodes_.emplace(&p, nodes_.size());
  nodes_.push_back(Node{p.value, Matrix(), true, false, &p, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backprop backprop) {
  bool needs = false;
  for (Var p : parents) {
    if (p.tape_ != this) throw ContractViolation("Vars belong to different tapes");
    needs = needs || nodes_[p.id_].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), Matrix(), needs, false, nullptr,
                        needs ? std::move(backprop) : Backprop()});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(Var target, const Matrix& contribution) {
  Node& n = nodes_[target.id_];
  if (!n.needs_grad) return;
  if (!n.has_grad) {
    n.grad = contribution;
    n.has_grad = true;
  } else {
    n.grad += contribution;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractViolation("loss belongs to another tape");
  if (nodes_[loss.id_].value.size() != 1) {
    throw ContractViolation("backward needs a scalar loss");
  }
  for (Node& n : nodes_) n.has_grad = false;
  accumulate(loss, Matrix::Ones(1, 1));
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backprop) n.backprop(*this, n.grad);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

Var operator+(Var a, Var b) {
  require_same_tape(a, b);
  Tape& t = *a.tape();
  if (b.cols() == 1 && a.cols() != 1 && b.rows() == a.rows()) {
    Matrix y = a.value().colwise() + b.value().col(0);
    return t.record(std::move(y), {a, b}, [a, b](Tape& tape, const Matrix& g) {
      tape.accumulate(a, g);
      tape.accumulate(b, g.rowwise().sum());
    });
  }
  require_same_shape(a, b, "add");
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Var operator-(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "sub");
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, -g);
  });
}

Var operator-(Var a) { return -1.0 * a; }

Var operator+(Var a, double s) {
  Matrix y = a.value().array() + s;
  return a.tape()->record(std::move(y), {a}, [a](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
  });
}

Var operator*(double s, Var a) {
  return a.tape()->record(s * a.value(), {a}, [a, s](Tape& tape, const Matrix& g) {
    tape.accumulate(a, s * g);
  });
}

Var hadamard(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "hadamard");
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b},
                          [a, b](Tape& tape, const Matrix& g) {
                            tape.accumulate(a, g.cwiseProduct(tape.value(b)));
                            tape.accumulate(b, g.cwiseProduct(tape.value(a)));
                          });
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) throw ContractViolation("matmul: inner dimensions differ");
  return a.tape()->record(a.value() * b.value(), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (tape.needs_grad(a)) tape.accumulate(a, g * tape.value(b).transpose());
    if (tape.needs_grad(b)) tape.accumulate(b, tape.value(a).transpose() * g);
  });
}

Var sigmoid(Var a) {
  Matrix y = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return a.tape()->record(std::move(y), {a}, [a](Tape& tape, const Matrix& g) {
    const Matrix s = tape.value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    tape.accumulate(a, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double v) {
          const double th = std::tanh(v);
          return 1.0 - th * th;
        });
      });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
      });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](const Matrix& x) -> Matrix { return x.array().exp().matrix(); });
}

Var log(Var a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](const Matrix& x) -> Matrix { return x.cwiseInverse(); });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; },
      [](const Matrix& x) -> Matrix { return 2.0 * x; });
}

Var lgamma(Var a) {
  return unary(
      a, [](double x) { return std::lgamma(x); },
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double v) { return boost::math::digamma(v); });
      });
}

Var digamma(Var a) {
  return unary(
      a, [](double x) { return boost::math::digamma(x); },
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double v) { return boost::math::trigamma(v); });
      });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](const Matrix& x) -> Matrix {
        return x.unaryExpr([lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
      });
}

Var minimum(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "minimum");
  Matrix y = a.value().cwiseMin(b.value());
  return a.tape()->record(std::move(y), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    const Matrix& av = tape.value(a);
    const Matrix& bv = tape.value(b);
    Matrix ga = Matrix::Zero(g.rows(), g.cols());
    Matrix gb = Matrix::Zero(g.rows(), g.cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        if (av(i, j) <= bv(i, j)) {
          ga(i, j) = g(i, j);
        } else {
          gb(i, j) = g(i, j);
        }
      }
    }
    tape.accumulate(a, ga);
    tape.accumulate(b, gb);
  });
}

Var vconcat(Var top, Var bottom) {
  require_same_tape(top, bottom);
  if (top.cols() != bottom.cols()) throw ContractViolation("vconcat: column counts differ");
  const Eigen::Index rt = top.rows();
  const Eigen::Index rb = bottom.rows();
  Matrix y(rt + rb, top.cols());
  y << top.value(), bottom.value();
  return top.tape()->record(std::move(y), {top, bottom},
                            [top, bottom, rt, rb](Tape& tape, const Matrix& g) {
                              tape.accumulate(top, g.topRows(rt));
                              tape.accumulate(bottom, g.bottomRows(rb));
                            });
}

Var row_block(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ContractViolation("row_block: out of range");
  }
  const Eigen::Index rows = a.rows();
  Matrix y = a.value().middleRows(start, count);
  return a.tape()->record(std::move(y), {a}, [a, start, count, rows](Tape& tape, const Matrix& g) {
    Matrix full = Matrix::Zero(rows, g.cols());
    full.middleRows(start, count) = g;
    tape.accumulate(a, full);
  });
}

Var sum(Var a) {
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  return a.tape()->record(std::move(y), {a}, [a, r, c](Tape& tape, const Matrix& g) {
    tape.accumulate(a, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0.0) throw ContractViolation("mean of empty Var");
  return (1.0 / n) * sum(a);
}

Var log_softmax(Var logits, std::span<const int> valid_rows) {
  const Matrix& x = logits.value();
  const Eigen::Index k = x.rows();
  const Eigen::Index n = x.cols();
  if (!valid_rows.empty() && static_cast<Eigen::Index>(valid_rows.size()) != n) {
    throw ContractViolation("log_softmax: one valid-row count per column expected");
  }
  std::vector<int> valid(static_cast<std::size_t>(n), static_cast<int>(k));
  for (Eigen::Index j = 0; j < n && !valid_rows.empty(); ++j) {
    valid[j] = std::clamp(valid_rows[j], 1, static_cast<int>(k));
  }
  Matrix y = Matrix::Constant(k, n, kNegInf);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index m = valid[j];
    const double mx = x.col(j).head(m).maxCoeff();
    const double lse = mx + std::log((x.col(j).head(m).array() - mx).exp().sum());
    y.col(j).head(m) = x.col(j).head(m).array() - lse;
  }
  return logits.tape()->record(std::move(y), {logits},
                  [logits, valid, k, n](Tape& tape, const Matrix& g) {
                    const Matrix& x = tape.value(logits);
                    Matrix gx = Matrix::Zero(k, n);
                    for (Eigen::Index j = 0; j < n; ++j) {
                      const Eigen::Index m = valid[j];
                      const double mx = x.col(j).head(m).maxCoeff();
                      Eigen::ArrayXd p = (x.col(j).head(m).array() - mx).exp();
                      p /= p.sum();
                      const double gs = g.col(j).head(m).sum();
                      gx.col(j).head(m) = g.col(j).head(m).array() - p * gs;
                    }
                    tape.accumulate(logits, gx);
                  });
}

Var pick(Var a, std::span<const int> index) {
  const Eigen::Index n = a.cols();
  const Eigen::Index r = a.rows();
  if (static_cast<Eigen::Index>(index.size()) != n) {
    throw ContractViolation("pick: one index per column expected");
  }
  std::vector<int> idx(index.begin(), index.end());
  Matrix y(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (idx[j] < 0 || idx[j] >= r) throw ContractViolation("pick: index out of range");
    y(0, j) = a.value()(idx[j], j);
  }
  return a.tape()->record(std::move(y), {a}, [a, idx, r, n](Tape& tape, const Matrix& g) {
    Matrix full = Matrix::Zero(r, n);
    for (Eigen::Index j = 0; j < n; ++j) full(idx[j], j) = g(0, j);
    tape.accumulate(a, full);
  });
}

Var categorical_entropy(Var log_probs) {
  const Matrix& l = log_probs.value();
  Matrix y = Matrix::Zero(1, l.cols());
  for (Eigen::Index j = 0; j < l.cols(); ++j) {
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      if (std::isfinite(l(i, j))) y(0, j) -= std::exp(l(i, j)) * l(i, j);
    }
  }
  return log_probs.tape()->record(std::move(y), {log_probs},
                                  [log_probs](Tape& tape, const Matrix& g) {
                                    const Matrix& l = tape.value(log_probs);
                                    Matrix gl = Matrix::Zero(l.rows(), l.cols());
                                    for (Eigen::Index j = 0; j < l.cols(); ++j) {
                                      for (Eigen::Index i = 0; i < l.rows(); ++i) {
                                        if (std::isfinite(l(i, j))) {
                                          gl(i, j) = -g(0, j) * std::exp(l(i, j)) * (l(i, j) + 1.0);
                                        }
                                      }
                                    }
                                    tape.accumulate(log_probs, gl);
                                  });
}

}  // namespace avmig::nn
