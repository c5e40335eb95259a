#pragma once

#include "dynasto/safety.hpp"
#include "dynasto/types.hpp"

namespace dynasto::reward {

struct RewardConfig {
  double valid_bonus = 30.0;
  double invalid_divisor = 5.0;
  int max_steps = 40;
};

/// Closeness below the safe distance, in [0, 1]. Zero at or beyond the
/// safe distance, one at contact.
double collision_likelihood(double d_c, double d_safe);

/// Shaping term for one recorded step.
double shaping_at(const StepRecord& r, const safety::SafeDistanceParams& p);

/// Terminal term: +bonus for a valid failure, a distance-violation penalty
/// at the maneuver onset for an invalid one, zero without a collision.
double terminal_bonus(const safety::Classification& cls, const Trace& trace,
                      const safety::SafeDistanceParams& p,
                      const RewardConfig& rc);

struct RewardBreakdown {
  double shaping_sum = 0.0;
  double terminal = 0.0;
  double total = 0.0;
};

/// Shaping accumulated over every policy step (the initial record carries
/// no action and is excluded) plus the terminal term.
RewardBreakdown episode_breakdown(const Trace& trace,
                                  const safety::SafeDistanceParams& p,
                                  const RewardConfig& rc);
double episode_reward(const Trace& trace, const safety::SafeDistanceParams& p,
                      const RewardConfig& rc);

/// Minimization convention for the search components.
double fitness(const Trace& trace, const safety::SafeDistanceParams& p,
               const RewardConfig& rc);

json to_json(const RewardBreakdown& b);

}  // namespace dynasto::reward
