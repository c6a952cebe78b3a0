#ifndef AVMIG_BASELINES_HPP_
#define AVMIG_BASELINES_HPP_

#include <random>
#include <span>
#include <string>
#include <vector>

#include "avmig/env.hpp"

namespace avmig {

enum class PolicyKind { kHybridMappo, kGreedy, kRandom, kFpm, kNpm, kOracle };

std::string to_string(PolicyKind kind);
// Throws ConfigError for unknown names.
PolicyKind parse_policy(const std::string& name);

// {0, 0.1, ..., 1}.
std::vector<double> default_fraction_grid();
// Sorted, within [0,1], containing both 0 and 1; throws ConfigError otherwise.
void validate_grid(std::span<const double> grid);

HybridAction npm_policy();
HybridAction fpm_policy(std::span<const int> candidates);
// Uniform over {no-migrate} and the candidates; fraction uniform on [0,1].
HybridAction random_policy(std::size_t num_candidates, std::mt19937_64& rng);

// Best single-agent action against the slot-start workloads, ignoring what
// other agents do this slot. Ties go to the smaller discrete index, then the
// smaller fraction.
HybridAction greedy_policy(const Environment& env, std::size_t agent,
                           std::span<const double> grid);

struct OracleResult {
  std::vector<HybridAction> actions;
  double total = 0.0;  // sum of per-agent latencies
};

inline constexpr std::size_t kOracleMaxAgents = 4;
inline constexpr std::size_t kOracleMaxCandidates = 3;
inline constexpr std::size_t kOracleMaxGrid = 11;

// Joint enumeration of the current slot under the ascending-id arrival
// order. Throws ContractViolation when an enumeration bound is exceeded.
OracleResult exhaustive_slot_oracle(const Environment& env, std::span<const double> grid);

// Joint action of a non-learning policy for the environment's current slot.
std::vector<HybridAction> baseline_actions(PolicyKind kind, const Environment& env,
                                           std::mt19937_64& rng,
                                           std::span<const double> grid);

}  // namespace avmig

#endif  // AVMIG_BASELINES_HPP_
