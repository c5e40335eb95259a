#pragma once

#include <cstdint>
#include <memory>

#include "dynasto/ga.hpp"
#include "dynasto/rl.hpp"

namespace dynasto::baselines {

/// Observation-independent policy, uniform over the action set.
sim::Policy random_adversary(std::uint64_t seed);

/// Equal-width binning of one [0,1] component to an action index.
MetaAction decode_action_component(double x);

/// Per-step reward variant that pays the terminal bonus for any collision,
/// valid or not. The shaping term is unchanged.
double base_reward(const Trace& trace, const safety::SafeDistanceParams& p,
                   const reward::RewardConfig& rc);

struct RolloutResult {
  std::vector<analytics::FailureRecord> failures;  // valid only
  long env_steps = 0;
  long evaluations = 0;
  int episodes = 0;
  int collisions = 0;
  std::vector<long> found_at;  // budget tick per valid failure
};

/// Random adversary rolled out against the SUT for a fixed number of
/// environment steps, with Step-1 style initial conditions.
RolloutResult run_random_adversary(const sim::Policy& sut_policy,
                                   long budget_env_steps,
                                   const rl::AdversaryTrainOptions& opt,
                                   std::uint64_t seed);

/// GA over fixed open-loop action sequences (one gene per episode step),
/// evaluated from a fixed Step-1 initial configuration. Budget counts
/// candidate evaluations.
RolloutResult ga_action_search(const sim::Policy& sut_policy, long budget,
                               const ga::GaConfig& cfg,
                               const rl::AdversaryTrainOptions& opt,
                               std::uint64_t seed);

enum class ProposerMode { Ga, Random };

/// Co-evolution: adversary RL training where every episode's initial
/// conditions come from a 10-gene search component evolving on episode
/// fitness (or uniform random proposals). Budget counts environment steps.
RolloutResult coevolve(const sim::Policy& sut_policy, ProposerMode mode,
                       long budget_env_steps,
                       const rl::AdversaryTrainOptions& opt,
                       const ga::GaConfig& cfg, std::uint64_t seed);

}  // namespace dynasto::baselines
