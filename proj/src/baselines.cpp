#include "avmig/baselines.hpp"

#include <algorithm>
#include <limits>

#include "avmig/errors.hpp"

namespace avmig {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kHybridMappo: return "hybrid-mappo";
    case PolicyKind::kGreedy: return "greedy";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kFpm: return "fpm";
    case PolicyKind::kNpm: return "npm";
    case PolicyKind::kOracle: return "oracle";
  }
  return "unknown";
}

PolicyKind parse_policy(const std::string& name) {
  for (PolicyKind k : {PolicyKind::kHybridMappo, PolicyKind::kGreedy, PolicyKind::kRandom,
                       PolicyKind::kFpm, PolicyKind::kNpm, PolicyKind::kOracle}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown policy '" + name + "'");
}

std::vector<double> default_fraction_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 10; ++k) g.push_back(k / 10.0);
  return g;
}

void validate_grid(std::span<const double> grid) {
  if (grid.empty() || grid.front() != 0.0 || grid.back() != 1.0 ||
      !std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw ConfigError("fraction grid must be strictly increasing from 0 to 1");
  }
}

HybridAction npm_policy() { return {0, 0.0}; }

HybridAction fpm_policy(std::span<const int> candidates) {
  if (candidates.empty()) return {0, 0.0};
  return {1, 1.0};
}

HybridAction random_policy(std::size_t num_candidates, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(num_candidates));
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  HybridAction a;
  a.discrete = pick(rng);
  a.continuous = frac(rng);
  return a;
}

namespace {

// Options in tie-break order: no-migrate, then each candidate by grid.
std::vector<HybridAction> options(std::size_t num_candidates, std::span<const double> grid) {
  std::vector<HybridAction> out{{0, 0.0}};
  for (std::size_t k = 1; k <= num_candidates; ++k) {
    for (double f : grid) out.push_back({static_cast<int>(k), f});
  }
  return out;
}

}  // namespace

HybridAction greedy_policy(const Environment& env, std::size_t agent,
                           std::span<const double> grid) {
  validate_grid(grid);
  HybridAction best{0, 0.0};
  double best_total = std::numeric_limits<double>::infinity();
  for (const HybridAction& a : options(env.candidates(agent).size(), grid)) {
    Eigen::VectorXd w = env.state().rsu_workloads;
    const double t = env.apply_agent(agent, a, w).total;
    if (t < best_total) {
      best_total = t;
      best = a;
    }
  }
  return best;
}

namespace {

struct OracleSearch {
  const Environment& env;
  std::vector<std::vector<HybridAction>> choices;
  std::vector<HybridAction> current;
  OracleResult best;

  void run(std::size_t agent, const Eigen::VectorXd& workloads, double acc) {
    if (agent == choices.size()) {
      if (acc < best.total) {
        best.total = acc;
        best.actions = current;
      }
      return;
    }
    for (const HybridAction& a : choices[agent]) {
      Eigen::VectorXd w = workloads;
      const double t = env.apply_agent(agent, a, w).total;
      current[agent] = a;
      run(agent + 1, w, acc + t);
    }
  }
};

}  // namespace

OracleResult exhaustive_slot_oracle(const Environment& env, std::span<const double> grid) {
  validate_grid(grid);
  if (env.num_agents() > kOracleMaxAgents) {
    throw ContractViolation("oracle: more than " + std::to_string(kOracleMaxAgents) + " agents");
  }
  if (grid.size() > kOracleMaxGrid) {
    throw ContractViolation("oracle: fraction grid larger than " + std::to_string(kOracleMaxGrid));
  }
  OracleSearch search{env, {}, std::vector<HybridAction>(env.num_agents()), {}};
  search.best.total = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < env.num_agents(); ++v) {
    if (env.candidates(v).size() > kOracleMaxCandidates) {
      throw ContractViolation("oracle: more than " + std::to_string(kOracleMaxCandidates) +
                              " candidates for an agent");
    }
    search.choices.push_back(options(env.candidates(v).size(), grid));
  }
  search.run(0, env.state().rsu_workloads, 0.0);
  return search.best;
}

std::vector<HybridAction> baseline_actions(PolicyKind kind, const Environment& env,
                                           std::mt19937_64& rng,
                                           std::span<const double> grid) {
  if (kind == PolicyKind::kOracle) return exhaustive_slot_oracle(env, grid).actions;
  std::vector<HybridAction> out;
  out.reserve(env.num_agents());
  for (std::size_t v = 0; v < env.num_agents(); ++v) {
    switch (kind) {
      case PolicyKind::kNpm: out.push_back(npm_policy()); break;
      case PolicyKind::kFpm: out.push_back(fpm_policy(env.candidates(v))); break;
      case PolicyKind::kRandom: out.push_back(random_policy(env.candidates(v).size(), rng)); break;
      case PolicyKind::kGreedy: out.push_back(greedy_policy(env, v, grid)); break;
      default: throw ContractViolation("baseline_actions: " + to_string(kind) + " is not a baseline");
    }
  }
  return out;
}

}  // namespace avmig
