#ifndef AVMIG_MAPPO_HPP_
#define AVMIG_MAPPO_HPP_

#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "avmig/env.hpp"
#include "avmig/nn/adam.hpp"
#include "avmig/nn/layers.hpp"

// Multi-agent PPO over a hybrid action: each agent's actor emits masked
// logits for the pre-migration target and a Beta law for the fraction.
// Centralized critics see every agent's observation (CTDE).
namespace avmig {

struct MappoConfig {
  double learning_rate = 1e-3;
  double gamma = 0.95;
  double lambda = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.01;
  int epochs = 5;               // K per round
  int minibatch = 50;           // G
  int episodes = 500;           // E
  int episodes_per_round = 2;
  int hidden = 64;
  std::size_t buffer_capacity = 20000;  // D, in slots
  double max_grad_norm = 1.0;   // 0 disables clipping
  // Multiplies rewards before critic fitting; when unset it is derived from
  // the first round so that returns are of unit scale.
  std::optional<double> reward_scale;
  bool shared_parameters = false;
  bool counterfactual = false;
  std::uint64_t seed = 0;
};

// 2 x hidden tanh trunk, discrete head (num_discrete logits) and continuous
// head (Beta concentrations softplus(.) + 1).
struct ActorNet {
  nn::DenseLayer l1, l2, head_d, head_c;

  ActorNet() = default;
  ActorNet(const std::string& name, int obs_dim, int num_discrete, int hidden);
  void init_uniform(nn::Rng& rng);
  std::vector<nn::Parameter*> parameters();

  struct Heads {
    nn::Matrix logits;  // num_discrete x B
    nn::Matrix alpha;   // 1 x B
    nn::Matrix beta;    // 1 x B
  };
  Heads forward(const nn::Matrix& obs) const;

  struct HeadVars {
    nn::Var logits, alpha, beta;
  };
  HeadVars forward(nn::Tape& tape, nn::Var obs);
};

// 2 x hidden tanh MLP to one scalar.
struct CriticNet {
  nn::DenseLayer l1, l2, out;

  CriticNet() = default;
  CriticNet(const std::string& name, int input_dim, int hidden);
  void init_uniform(nn::Rng& rng);
  std::vector<nn::Parameter*> parameters();
  nn::Matrix forward(const nn::Matrix& x) const;  // 1 x B
  nn::Var forward(nn::Tape& tape, nn::Var x);
};

// One agent's samples for an actor update, one column per slot.
struct ActorBatch {
  nn::Matrix obs;                 // obs_dim x B (already scaled)
  std::vector<int> valid;         // usable discrete indices per sample
  std::vector<int> action_d;
  nn::Matrix action_c;            // 1 x B, sampled fractions
  nn::Matrix logp_d_old;          // 1 x B
  nn::Matrix logp_c_old;          // 1 x B
  nn::Matrix adv_d;               // 1 x B
  nn::Matrix adv_c;               // 1 x B
  // 1 where the fraction mattered (a target was chosen), else 0.
  nn::Matrix continuous_mask;     // 1 x B
};

struct ActorLosses {
  nn::Var discrete;
  nn::Var continuous;
};

// Clipped-surrogate losses with entropy bonus. The continuous surrogate is
// averaged over masked-in samples only.
ActorLosses actor_losses(nn::Tape& tape, ActorNet& actor, const ActorBatch& batch,
                         double clip, double entropy_coef);

// Mean squared error between critic outputs and `targets` (1 x B).
nn::Var critic_loss(nn::Tape& tape, CriticNet& critic, const nn::Matrix& input,
                    const nn::Matrix& targets);

// Q_t = V_t + sum_k (gamma lambda)^k delta_{t+k}, with V after the last
// slot taken as 0.
std::vector<double> gae_returns(std::span<const double> rewards,
                                std::span<const double> values, double gamma,
                                double lambda);

// In-place shift to mean 0 and scale to std 1 (left unscaled if std is 0).
void normalize_advantages(std::vector<double>& adv);

// sum_a pi(a) Q(a).
double counterfactual_baseline(std::span<const double> probs, std::span<const double> q);

struct CurvePoint {
  int episode = 0;
  double mean_return = 0.0;
  double actor_loss_d = 0.0;
  double actor_loss_c = 0.0;
  double critic_loss_d = 0.0;
  double critic_loss_c = 0.0;
  double infeasibility_rate = 0.0;
};

struct UpdateReport {
  bool aborted = false;
  std::string diagnostic;
  double actor_loss_d = 0.0;
  double actor_loss_c = 0.0;
  double critic_loss_d = 0.0;
  double critic_loss_c = 0.0;
};

// Per-slot experience of every agent.
struct SlotRecord {
  std::vector<Eigen::VectorXd> obs;  // scaled
  std::vector<int> valid;
  std::vector<int> action_d;
  std::vector<double> action_c;
  std::vector<double> logp_d;
  std::vector<double> logp_c;
  std::vector<double> rewards;       // scaled
  bool last = false;                 // final slot of its episode
};

class HybridMappo {
 public:
  HybridMappo(int num_agents, int obs_dim, int num_discrete,
              Eigen::VectorXd obs_scale, MappoConfig config);

  int num_agents() const { return num_agents_; }
  int obs_dim() const { return obs_dim_; }
  int num_discrete() const { return num_discrete_; }
  const MappoConfig& config() const { return config_; }
  double reward_scale() const { return reward_scale_.value_or(1.0); }

  struct Sampled {
    std::vector<HybridAction> actions;
    std::vector<double> logp_d;
    std::vector<double> logp_c;
  };
  // Samples from the old (behaviour) policies. `valid[v]` is the number of
  // usable discrete indices of agent v (1 + its candidate count).
  Sampled act(const std::vector<Eigen::VectorXd>& obs, std::span<const int> valid,
              nn::Rng& rng) const;
  // Argmax target and Beta-mean fraction under the current policies.
  std::vector<HybridAction> act_deterministic(const std::vector<Eigen::VectorXd>& obs,
                                              std::span<const int> valid) const;
  // Probability of each discrete index under the current policy.
  Eigen::VectorXd discrete_probs(std::size_t agent, const Eigen::VectorXd& obs,
                                 int valid) const;

  // Rollout of one episode with the old policies; appends to `buffer`.
  // Returns the unscaled mean-over-agents episode return and the share of
  // flagged agent-slots.
  std::pair<double, double> collect_episode(Environment& env, std::uint64_t seed,
                                            nn::Rng& rng, std::vector<SlotRecord>& buffer);

  // K epochs of minibatch updates, then old <- new and target <- critic.
  // A non-finite loss restores the parameters held at entry.
  UpdateReport update(std::vector<SlotRecord>& buffer, nn::Rng& rng);

  // E episodes of rollout and update. `on_point` is called per curve point.
  std::vector<CurvePoint> train(Environment& env,
                                const std::function<void(const CurvePoint&)>& on_point = {});

  // Mean-over-agents return of a deterministic episode.
  double evaluate_episode(Environment& env, std::uint64_t seed) const;

  void save(std::ostream& out) const;
  static HybridMappo load(std::istream& in);

  // Direct access for tests.
  ActorNet& actor(std::size_t agent) { return *actors_[agent]; }
  CriticNet& critic_d(std::size_t agent) { return *critics_d_[agent]; }
  CriticNet& critic_c(std::size_t agent) { return *critics_c_[agent]; }
  const ActorNet& old_actor(std::size_t agent) const { return *old_actors_[agent]; }

  // Critic inputs for one slot: the concatenated observation, plus agent v's
  // one-hot discrete action in counterfactual mode.
  Eigen::VectorXd critic_input(std::span<const Eigen::VectorXd> obs, int agent,
                               int action_d) const;

 private:
  std::vector<nn::Parameter*> all_parameters();
  void sync_old_and_targets();

  int num_agents_;
  int obs_dim_;
  int num_discrete_;
  Eigen::VectorXd obs_scale_;
  MappoConfig config_;
  std::optional<double> reward_scale_;

  // Entries alias the same object in shared mode.
  std::vector<std::shared_ptr<ActorNet>> actors_, old_actors_;
  std::vector<std::shared_ptr<CriticNet>> critics_d_, critics_c_, targets_d_, targets_c_;
  std::vector<nn::Adam> actor_opt_, critic_opt_;  // one per distinct network
  std::vector<std::size_t> net_of_agent_;
};

}  // namespace avmig

#endif  // AVMIG_MAPPO_HPP_
