#ifndef AVMIG_NN_ADAM_HPP_
#define AVMIG_NN_ADAM_HPP_

#include <string>
#include <vector>

#include "avmig/nn/tape.hpp"

namespace avmig::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip; 0 disables it.
  double max_grad_norm = 0.0;
};

struct StepReport {
  bool applied = true;
  std::string diagnostic;
};

// Bias-corrected adaptive moment estimation over a fixed parameter set.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamConfig config);

  // Applies one update from the current Parameter::grad values. A
  // non-finite gradient skips the update and reports which parameter.
  StepReport step();
  void zero_grad();

  long step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long steps_ = 0;
};

}  // namespace avmig::nn

#endif  // AVMIG_NN_ADAM_HPP_
