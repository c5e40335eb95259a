#include "dynasto/reward.hpp"

#include <stdexcept>

namespace dynasto::reward {

double collision_likelihood(double d_c, double d_safe) {
  if (d_safe <= 0.0)
    throw std::invalid_argument("collision_likelihood: d_safe must be > 0");
  if (d_c >= d_safe) return 0.0;
  return (d_safe - d_c) / d_safe;
}

double shaping_at(const StepRecord& r, const safety::SafeDistanceParams& p) {
  const double d_c = safety::current_distance(r.ego, r.adv);
  const double d_safe = safety::required_safe_distance(r.ego, r.adv, p);
  return collision_likelihood(d_c, d_safe);
}

double terminal_bonus(const safety::Classification& cls, const Trace& trace,
                      const safety::SafeDistanceParams& p,
                      const RewardConfig& rc) {
  switch (cls.label) {
    case safety::Label::Valid:
      return rc.valid_bonus;
    case safety::Label::NoCollision:
      return 0.0;
    case safety::Label::Invalid: {
      if (!cls.onset_step)
        throw std::invalid_argument("invalid classification without onset");
      const auto& r = trace.steps.at(*cls.onset_step);
      const double d_c = safety::current_distance(r.ego, r.adv);
      const double d_safe = safety::required_safe_distance(r.ego, r.adv, p);
      return -(d_safe - d_c) / rc.invalid_divisor;
    }
  }
  return 0.0;
}

RewardBreakdown episode_breakdown(const Trace& trace,
                                  const safety::SafeDistanceParams& p,
                                  const RewardConfig& rc) {
  RewardBreakdown b;
  for (std::size_t t = 1; t < trace.steps.size(); ++t)
    b.shaping_sum += shaping_at(trace.steps[t], p);
  b.terminal = terminal_bonus(safety::classify_failure(trace, p), trace, p, rc);
  b.total = b.shaping_sum + b.terminal;
  return b;
}

double episode_reward(const Trace& trace, const safety::SafeDistanceParams& p,
                      const RewardConfig& rc) {
  return episode_breakdown(trace, p, rc).total;
}

double fitness(const Trace& trace, const safety::SafeDistanceParams& p,
               const RewardConfig& rc) {
  return -episode_reward(trace, p, rc);
}

json to_json(const RewardBreakdown& b) {
  return json{{"shaping_sum", b.shaping_sum},
              {"terminal", b.terminal},
              {"total", b.total}};
}

}  // namespace dynasto::reward
