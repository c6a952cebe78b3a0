#include "avmig/mappo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "avmig/errors.hpp"
#include "avmig/nn/checkpoint.hpp"
#include "avmig/nn/distributions.hpp"

namespace avmig {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

nn::Matrix tanh_m(const nn::Matrix& x) { return x.array().tanh().matrix(); }

nn::Matrix softplus_m(const nn::Matrix& x) {
  return x.unaryExpr([](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); });
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::VectorXd masked(const Eigen::VectorXd& logits, int valid) {
  Eigen::VectorXd out = logits;
  for (Eigen::Index i = std::max(valid, 1); i < out.size(); ++i) out[i] = kNegInf;
  return out;
}

}  // namespace

ActorNet::ActorNet(const std::string& name, int obs_dim, int num_discrete, int hidden)
    : l1(name + ".l1", obs_dim, hidden),
      l2(name + ".l2", hidden, hidden),
      head_d(name + ".head_d", hidden, num_discrete),
      head_c(name + ".head_c", hidden, 2) {}

void ActorNet::init_uniform(nn::Rng& rng) {
  l1.init_uniform(rng);
  l2.init_uniform(rng);
  head_d.init_uniform(rng);
  head_c.init_uniform(rng);
}

std::vector<nn::Parameter*> ActorNet::parameters() {
  return {&l1.weight, &l1.bias, &l2.weight, &l2.bias,
          &head_d.weight, &head_d.bias, &head_c.weight, &head_c.bias};
}

ActorNet::Heads ActorNet::forward(const nn::Matrix& obs) const {
  const nn::Matrix h = tanh_m(nn::dense_forward(l2, tanh_m(nn::dense_forward(l1, obs))));
  const nn::Matrix conc = softplus_m(nn::dense_forward(head_c, h)).array() + 1.0;
  return {nn::dense_forward(head_d, h), conc.row(0), conc.row(1)};
}

ActorNet::HeadVars ActorNet::forward(nn::Tape& tape, nn::Var obs) {
  nn::Var h = nn::tanh(nn::dense_forward(tape, l1, obs));
  h = nn::tanh(nn::dense_forward(tape, l2, h));
  nn::Var conc = nn::softplus(nn::dense_forward(tape, head_c, h)) + 1.0;
  return {nn::dense_forward(tape, head_d, h), nn::row_block(conc, 0, 1), nn::row_block(conc, 1, 1)};
}

CriticNet::CriticNet(const std::string& name, int input_dim, int hidden)
    : l1(name + ".l1", input_dim, hidden), l2(name + ".l2", hidden, hidden), out(name + ".out", hidden, 1) {}

void CriticNet::init_uniform(nn::Rng& rng) {
  l1.init_uniform(rng);
  l2.init_uniform(rng);
  out.init_uniform(rng);
}

std::vector<nn::Parameter*> CriticNet::parameters() {
  return {&l1.weight, &l1.bias, &l2.weight, &l2.bias, &out.weight, &out.bias};
}

nn::Matrix CriticNet::forward(const nn::Matrix& x) const {
  return nn::dense_forward(out, tanh_m(nn::dense_forward(l2, tanh_m(nn::dense_forward(l1, x)))));
}

nn::Var CriticNet::forward(nn::Tape& tape, nn::Var x) {
  nn::Var h = nn::tanh(nn::dense_forward(tape, l1, x));
  h = nn::tanh(nn::dense_forward(tape, l2, h));
  return nn::dense_forward(tape, out, h);
}

ActorLosses actor_losses(nn::Tape& tape, ActorNet& actor, const ActorBatch& batch,
                         double clip, double entropy_coef) {
  auto heads = actor.forward(tape, tape.constant(batch.obs));

  nn::Var logp_all = nn::log_softmax(heads.logits, batch.valid);
  nn::Var logp_d = nn::pick(logp_all, batch.action_d);
  nn::Var ratio_d = nn::exp(logp_d - tape.constant(batch.logp_d_old));
  nn::Var adv_d = tape.constant(batch.adv_d);
  nn::Var surr_d = nn::minimum(nn::hadamard(ratio_d, adv_d),
                               nn::hadamard(nn::clamp(ratio_d, 1.0 - clip, 1.0 + clip), adv_d));
  nn::Var loss_d = -nn::mean(surr_d) - entropy_coef * nn::mean(nn::categorical_entropy(logp_all));

  nn::Var logp_c = nn::beta_log_density(tape.constant(batch.action_c), heads.alpha, heads.beta);
  nn::Var ratio_c = nn::exp(logp_c - tape.constant(batch.logp_c_old));
  nn::Var adv_c = tape.constant(batch.adv_c);
  nn::Var surr_c = nn::minimum(nn::hadamard(ratio_c, adv_c),
                               nn::hadamard(nn::clamp(ratio_c, 1.0 - clip, 1.0 + clip), adv_c));
  const double active = std::max(1.0, batch.continuous_mask.sum());
  nn::Var loss_c = -(1.0 / active) * nn::sum(nn::hadamard(surr_c, tape.constant(batch.continuous_mask))) -
                   entropy_coef * nn::mean(nn::beta_entropy(heads.alpha, heads.beta));
  return {loss_d, loss_c};
}

nn::Var critic_loss(nn::Tape& tape, CriticNet& critic, const nn::Matrix& input,
                    const nn::Matrix& targets) {
  return nn::mean(nn::square(critic.forward(tape, tape.constant(input)) - tape.constant(targets)));
}

std::vector<double> gae_returns(std::span<const double> rewards, std::span<const double> values,
                                double gamma, double lambda) {
  if (rewards.size() != values.size()) throw ContractViolation("gae_returns: length mismatch");
  std::vector<double> q(rewards.size());
  double acc = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    const double next = k + 1 < values.size() ? values[k + 1] : 0.0;
    const double delta = rewards[k] + gamma * next - values[k];
    acc = delta + gamma * lambda * acc;
    q[k] = values[k] + acc;
  }
  return q;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : adv) a = sd > 0.0 ? (a - mean) / sd : a - mean;
}

double counterfactual_baseline(std::span<const double> probs, std::span<const double> q) {
  if (probs.size() != q.size()) throw ContractViolation("counterfactual_baseline: length mismatch");
  double b = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) b += probs[a] * q[a];
  return b;
}

HybridMappo::HybridMappo(int num_agents, int obs_dim, int num_discrete,
                         Eigen::VectorXd obs_scale, MappoConfig config)
    : num_agents_(num_agents),
      obs_dim_(obs_dim),
      num_discrete_(num_discrete),
      obs_scale_(std::move(obs_scale)),
      config_(config),
      reward_scale_(config.reward_scale) {
  if (num_agents < 1 || obs_dim < 1 || num_discrete < 1) throw ConfigError("invalid policy dimensions");
  if (obs_scale_.size() != obs_dim) throw ConfigError("observation scale has the wrong length");
  if (!(config_.clip > 0.0 && config_.clip < 1.0)) throw ConfigError("clip must lie in (0,1)");
  if (!(config_.gamma > 0.0 && config_.gamma <= 1.0) || !(config_.lambda > 0.0 && config_.lambda <= 1.0)) {
    throw ConfigError("gamma and lambda must lie in (0,1]");
  }
  if (config_.epochs < 1 || config_.minibatch < 1 || config_.episodes < 0 ||
      config_.episodes_per_round < 1 || config_.hidden < 1) {
    throw ConfigError("invalid training schedule");
  }
  if (reward_scale_ && !(*reward_scale_ > 0.0)) throw ConfigError("reward_scale must be positive");

  const int nets = config_.shared_parameters ? 1 : num_agents;
  const int critic_in = num_agents * obs_dim + (config_.counterfactual ? num_discrete : 0);
  nn::Rng rng(splitmix(config_.seed));
  for (int i = 0; i < nets; ++i) {
    const std::string prefix = "agent" + std::to_string(i);
    auto actor = std::make_shared<ActorNet>(prefix + ".actor", obs_dim, num_discrete, config_.hidden);
    auto cd = std::make_shared<CriticNet>(prefix + ".critic_d", critic_in, config_.hidden);
    auto cc = std::make_shared<CriticNet>(prefix + ".critic_c", num_agents * obs_dim, config_.hidden);
    actor->init_uniform(rng);
    cd->init_uniform(rng);
    cc->init_uniform(rng);
    actors_.push_back(actor);
    critics_d_.push_back(cd);
    critics_c_.push_back(cc);
    old_actors_.push_back(std::make_shared<ActorNet>(*actor));
    targets_d_.push_back(std::make_shared<CriticNet>(*cd));
    targets_c_.push_back(std::make_shared<CriticNet>(*cc));
    nn::AdamConfig opt{.learning_rate = config_.learning_rate, .max_grad_norm = config_.max_grad_norm};
    actor_opt_.emplace_back(actor->parameters(), opt);
    auto cp = cd->parameters();
    for (auto* p : cc->parameters()) cp.push_back(p);
    critic_opt_.emplace_back(cp, opt);
  }
  for (int v = 0; v < num_agents; ++v) net_of_agent_.push_back(config_.shared_parameters ? 0 : v);
  if (config_.shared_parameters) {
    for (int v = 1; v < num_agents; ++v) {
      actors_.push_back(actors_[0]);
      critics_d_.push_back(critics_d_[0]);
      critics_c_.push_back(critics_c_[0]);
      old_actors_.push_back(old_actors_[0]);
      targets_d_.push_back(targets_d_[0]);
      targets_c_.push_back(targets_c_[0]);
    }
  }
}

std::vector<nn::Parameter*> HybridMappo::all_parameters() {
  std::vector<nn::Parameter*> out;
  const std::size_t nets = config_.shared_parameters ? 1 : actors_.size();
  for (std::size_t i = 0; i < nets; ++i) {
    for (auto* p : actors_[i]->parameters()) out.push_back(p);
    for (auto* p : critics_d_[i]->parameters()) out.push_back(p);
    for (auto* p : critics_c_[i]->parameters()) out.push_back(p);
  }
  return out;
}

void HybridMappo::sync_old_and_targets() {
  const std::size_t nets = config_.shared_parameters ? 1 : actors_.size();
  for (std::size_t i = 0; i < nets; ++i) {
    *old_actors_[i] = *actors_[i];
    *targets_d_[i] = *critics_d_[i];
    *targets_c_[i] = *critics_c_[i];
  }
}

Eigen::VectorXd HybridMappo::critic_input(std::span<const Eigen::VectorXd> obs, int agent,
                                          int action_d) const {
  const int extra = config_.counterfactual && agent >= 0 ? num_discrete_ : 0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(num_agents_ * obs_dim_ + extra);
  for (int v = 0; v < num_agents_; ++v) x.segment(v * obs_dim_, obs_dim_) = obs[v];
  if (extra > 0) x[num_agents_ * obs_dim_ + action_d] = 1.0;
  return x;
}

HybridMappo::Sampled HybridMappo::act(const std::vector<Eigen::VectorXd>& obs,
                                      std::span<const int> valid, nn::Rng& rng) const {
  Sampled s;
  for (int v = 0; v < num_agents_; ++v) {
    const auto heads = old_actors_[v]->forward(obs[v].cwiseQuotient(obs_scale_));
    const auto d = nn::categorical_sample(masked(heads.logits.col(0), valid[v]), rng);
    const auto c = nn::bounded_sample(heads.alpha(0, 0), heads.beta(0, 0), rng);
    s.actions.push_back({d.index, c.value});
    s.logp_d.push_back(d.log_prob);
    s.logp_c.push_back(c.log_density);
  }
  return s;
}

std::vector<HybridAction> HybridMappo::act_deterministic(const std::vector<Eigen::VectorXd>& obs,
                                                         std::span<const int> valid) const {
  std::vector<HybridAction> out;
  for (int v = 0; v < num_agents_; ++v) {
    const auto heads = actors_[v]->forward(obs[v].cwiseQuotient(obs_scale_));
    Eigen::Index best = 0;
    masked(heads.logits.col(0), valid[v]).maxCoeff(&best);
    const double a = heads.alpha(0, 0);
    const double b = heads.beta(0, 0);
    out.push_back({static_cast<int>(best), a / (a + b)});
  }
  return out;
}

Eigen::VectorXd HybridMappo::discrete_probs(std::size_t agent, const Eigen::VectorXd& obs,
                                            int valid) const {
  const auto heads = actors_[agent]->forward(obs.cwiseQuotient(obs_scale_));
  return nn::log_softmax(masked(heads.logits.col(0), valid)).array().exp();
}

std::pair<double, double> HybridMappo::collect_episode(Environment& env, std::uint64_t seed,
                                                       nn::Rng& rng,
                                                       std::vector<SlotRecord>& buffer) {
  std::vector<Eigen::VectorXd> obs = env.reset(seed);
  double total = 0.0;
  std::size_t flagged = 0;
  std::size_t decisions = 0;
  while (!env.done()) {
    SlotRecord rec;
    for (int v = 0; v < num_agents_; ++v) {
      rec.valid.push_back(1 + static_cast<int>(env.candidates(v).size()));
      rec.obs.push_back(obs[v].cwiseQuotient(obs_scale_));
    }
    const Sampled s = act(obs, rec.valid, rng);
    const StepResult r = env.step(s.actions);
    for (int v = 0; v < num_agents_; ++v) {
      rec.action_d.push_back(s.actions[v].discrete);
      rec.action_c.push_back(s.actions[v].continuous);
      total += r.rewards[v];
      flagged += r.infeasible[v] ? 1 : 0;
      ++decisions;
    }
    rec.logp_d = s.logp_d;
    rec.logp_c = s.logp_c;
    rec.rewards = r.rewards;
    rec.last = r.done;
    if (buffer.size() >= config_.buffer_capacity) throw ContractViolation("rollout buffer is full");
    buffer.push_back(std::move(rec));
    obs = r.observations;
  }
  return {total / num_agents_, decisions ? static_cast<double>(flagged) / decisions : 0.0};
}

UpdateReport HybridMappo::update(std::vector<SlotRecord>& buffer, nn::Rng& rng) {
  UpdateReport report;
  const std::size_t n = buffer.size();
  if (n == 0) return report;
  const auto cols = static_cast<Eigen::Index>(n);

  if (!reward_scale_) {
    double mag = 0.0;
    for (const auto& r : buffer) {
      for (double x : r.rewards) mag += std::abs(x);
    }
    mag /= static_cast<double>(n * num_agents_);
    reward_scale_ = mag > 0.0 ? (1.0 - config_.gamma * config_.lambda) / mag : 1.0;
  }
  const double scale = *reward_scale_;

  // Critic inputs and returns per agent.
  nn::Matrix global(num_agents_ * obs_dim_, cols);
  for (std::size_t t = 0; t < n; ++t) global.col(t) = critic_input(buffer[t].obs, -1, 0);
  std::vector<nn::Matrix> xd(num_agents_);
  std::vector<nn::Matrix> qd(num_agents_), qc(num_agents_);
  std::vector<std::vector<double>> ad(num_agents_), ac(num_agents_);
  for (int v = 0; v < num_agents_; ++v) {
    if (config_.counterfactual) {
      xd[v].resize(global.rows() + num_discrete_, cols);
      for (std::size_t t = 0; t < n; ++t) xd[v].col(t) = critic_input(buffer[t].obs, v, buffer[t].action_d[v]);
    } else {
      xd[v] = global;
    }
    const nn::Matrix vt_d = targets_d_[v]->forward(xd[v]);
    const nn::Matrix vt_c = targets_c_[v]->forward(global);
    const nn::Matrix v_d = critics_d_[v]->forward(xd[v]);
    const nn::Matrix v_c = critics_c_[v]->forward(global);
    qd[v].resize(1, cols);
    qc[v].resize(1, cols);
    std::size_t start = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (!buffer[t].last && t + 1 < n) continue;
      std::vector<double> r, vd, vc;
      for (std::size_t k = start; k <= t; ++k) {
        r.push_back(scale * buffer[k].rewards[v]);
        vd.push_back(vt_d(0, k));
        vc.push_back(vt_c(0, k));
      }
      const auto gd = gae_returns(r, vd, config_.gamma, config_.lambda);
      const auto gc = gae_returns(r, vc, config_.gamma, config_.lambda);
      for (std::size_t k = start; k <= t; ++k) {
        qd[v](0, k) = gd[k - start];
        qc[v](0, k) = gc[k - start];
      }
      start = t + 1;
    }
    ad[v].resize(n);
    ac[v].resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      double base = v_d(0, t);
      if (config_.counterfactual) {
        const int valid = buffer[t].valid[v];
        const Eigen::VectorXd probs = discrete_probs(v, buffer[t].obs[v].cwiseProduct(obs_scale_), valid);
        std::vector<double> p(valid), q(valid);
        for (int a = 0; a < valid; ++a) {
          p[a] = probs[a];
          q[a] = critics_d_[v]->forward(critic_input(buffer[t].obs, v, a))(0, 0);
        }
        base = counterfactual_baseline(p, q);
      }
      ad[v][t] = qd[v](0, t) - base;
      ac[v][t] = qc[v](0, t) - v_c(0, t);
    }
    normalize_advantages(ad[v]);
    normalize_advantages(ac[v]);
  }

  // Snapshot for rollback.
  std::vector<nn::Parameter*> params = all_parameters();
  std::vector<nn::Matrix> saved;
  for (auto* p : params) saved.push_back(p->value);
  const auto saved_actor_opt = actor_opt_;
  const auto saved_critic_opt = critic_opt_;
  auto rollback = [&](const std::string& why) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      params[k]->value = saved[k];
      params[k]->zero_grad();
    }
    actor_opt_ = saved_actor_opt;
    critic_opt_ = saved_critic_opt;
    report.aborted = true;
    report.diagnostic = why;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum_ad = 0, sum_ac = 0, sum_cd = 0, sum_cc = 0;
    int count = 0;
    for (std::size_t start = 0; start < n; start += config_.minibatch) {
      const std::size_t end = std::min(n, start + config_.minibatch);
      const auto b = static_cast<Eigen::Index>(end - start);
      for (int v = 0; v < num_agents_; ++v) {
        ActorBatch batch;
        batch.obs.resize(obs_dim_, b);
        batch.action_c.resize(1, b);
        batch.logp_d_old.resize(1, b);
        batch.logp_c_old.resize(1, b);
        batch.adv_d.resize(1, b);
        batch.adv_c.resize(1, b);
        batch.continuous_mask.resize(1, b);
        nn::Matrix xin_d(xd[v].rows(), b), xin_c(global.rows(), b), tq_d(1, b), tq_c(1, b);
        for (Eigen::Index j = 0; j < b; ++j) {
          const std::size_t t = order[start + j];
          const SlotRecord& rec = buffer[t];
          batch.obs.col(j) = rec.obs[v];
          batch.valid.push_back(rec.valid[v]);
          batch.action_d.push_back(rec.action_d[v]);
          batch.action_c(0, j) = rec.action_c[v];
          batch.logp_d_old(0, j) = rec.logp_d[v];
          batch.logp_c_old(0, j) = rec.logp_c[v];
          batch.adv_d(0, j) = ad[v][t];
          batch.adv_c(0, j) = ac[v][t];
          batch.continuous_mask(0, j) = rec.action_d[v] > 0 ? 1.0 : 0.0;
          xin_d.col(j) = xd[v].col(t);
          xin_c.col(j) = global.col(t);
          tq_d(0, j) = qd[v](0, t);
          tq_c(0, j) = qc[v](0, t);
        }
        const std::size_t net = net_of_agent_[v];
        {
          nn::Tape tape;
          const ActorLosses l = actor_losses(tape, *actors_[v], batch, config_.clip, config_.entropy_coef);
          const double ld = l.discrete.scalar();
          const double lc = l.continuous.scalar();
          if (!std::isfinite(ld) || !std::isfinite(lc)) {
            rollback("non-finite actor loss for agent " + std::to_string(v));
            return report;
          }
          actor_opt_[net].zero_grad();
          tape.backward(l.discrete + l.continuous);
          actor_opt_[net].step();
          sum_ad += ld;
          sum_ac += lc;
        }
        {
          nn::Tape tape;
          nn::Var cd = critic_loss(tape, *critics_d_[v], xin_d, tq_d);
          nn::Var cc = critic_loss(tape, *critics_c_[v], xin_c, tq_c);
          if (!std::isfinite(cd.scalar()) || !std::isfinite(cc.scalar())) {
            rollback("non-finite critic loss for agent " + std::to_string(v));
            return report;
          }
          critic_opt_[net].zero_grad();
          tape.backward(cd + cc);
          critic_opt_[net].step();
          sum_cd += cd.scalar();
          sum_cc += cc.scalar();
        }
        ++count;
      }
    }
    report.actor_loss_d = sum_ad / count;
    report.actor_loss_c = sum_ac / count;
    report.critic_loss_d = sum_cd / count;
    report.critic_loss_c = sum_cc / count;
  }
  sync_old_and_targets();
  buffer.clear();
  return report;
}

std::vector<CurvePoint> HybridMappo::train(Environment& env,
                                           const std::function<void(const CurvePoint&)>& on_point) {
  if (static_cast<int>(env.num_agents()) != num_agents_ || env.obs_dim() != obs_dim_ ||
      env.num_discrete() != num_discrete_) {
    throw ConfigError("policy dimensions do not match the environment");
  }
  if (static_cast<std::size_t>(config_.episodes_per_round) *
          static_cast<std::size_t>(env.config().horizon) > config_.buffer_capacity) {
    throw ConfigError("episodes_per_round * horizon exceeds the rollout buffer capacity");
  }
  nn::Rng rng(splitmix(config_.seed ^ 0x5eedULL));
  std::vector<SlotRecord> buffer;
  std::vector<CurvePoint> curve;
  std::vector<CurvePoint> pending;
  for (int e = 0; e < config_.episodes; ++e) {
    const auto [ret, infeasible] = collect_episode(env, splitmix(config_.seed * 1000003ULL + e), rng, buffer);
    CurvePoint p;
    p.episode = e + 1;
    p.mean_return = ret;
    p.infeasibility_rate = infeasible;
    pending.push_back(p);
    if (static_cast<int>(pending.size()) == config_.episodes_per_round || e + 1 == config_.episodes) {
      const UpdateReport r = update(buffer, rng);
      buffer.clear();
      for (auto& q : pending) {
        q.actor_loss_d = r.actor_loss_d;
        q.actor_loss_c = r.actor_loss_c;
        q.critic_loss_d = r.critic_loss_d;
        q.critic_loss_c = r.critic_loss_c;
        curve.push_back(q);
        if (on_point) on_point(q);
      }
      pending.clear();
    }
  }
  return curve;
}

double HybridMappo::evaluate_episode(Environment& env, std::uint64_t seed) const {
  std::vector<Eigen::VectorXd> obs = env.reset(seed);
  double total = 0.0;
  std::vector<int> valid(num_agents_);
  while (!env.done()) {
    for (int v = 0; v < num_agents_; ++v) valid[v] = 1 + static_cast<int>(env.candidates(v).size());
    const StepResult r = env.step(act_deterministic(obs, valid));
    for (double x : r.rewards) total += x;
    obs = r.observations;
  }
  return total / num_agents_;
}

void HybridMappo::save(std::ostream& out) const {
  nlohmann::json meta;
  meta["num_agents"] = num_agents_;
  meta["obs_dim"] = obs_dim_;
  meta["num_discrete"] = num_discrete_;
  meta["obs_scale"] = std::vector<double>(obs_scale_.data(), obs_scale_.data() + obs_scale_.size());
  meta["hidden"] = config_.hidden;
  meta["shared_parameters"] = config_.shared_parameters;
  meta["counterfactual"] = config_.counterfactual;
  meta["reward_scale"] = reward_scale_ ? nlohmann::json(*reward_scale_) : nlohmann::json();
  auto params = const_cast<HybridMappo*>(this)->all_parameters();
  nn::write_checkpoint(out, "hybrid-mappo", meta, params);
}

HybridMappo HybridMappo::load(std::istream& in) {
  const nn::Checkpoint ckpt = nn::read_checkpoint(in);
  if (ckpt.kind != "hybrid-mappo") throw ValidationError("checkpoint is not a hybrid-mappo policy");
  try {
    const auto& m = ckpt.meta;
    MappoConfig cfg;
    cfg.hidden = m.at("hidden").get<int>();
    cfg.shared_parameters = m.at("shared_parameters").get<bool>();
    cfg.counterfactual = m.at("counterfactual").get<bool>();
    if (!m.at("reward_scale").is_null()) cfg.reward_scale = m.at("reward_scale").get<double>();
    const auto scale = m.at("obs_scale").get<std::vector<double>>();
    HybridMappo policy(m.at("num_agents").get<int>(), m.at("obs_dim").get<int>(),
                       m.at("num_discrete").get<int>(),
                       Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size())),
                       cfg);
    nn::restore(ckpt, policy.all_parameters());
    policy.sync_old_and_targets();
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("policy checkpoint metadata: ") + e.what());
  }
}

}  // namespace avmig
