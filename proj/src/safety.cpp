#include "dynasto/safety.hpp"

#include <algorithm>
#include <cmath>

namespace dynasto::safety {

double safe_lon_distance(double v_lead, double v_follow,
                         const SafeDistanceParams& p) {
  const double stopping_diff =
      0.5 * (v_follow * v_follow / p.a_follow - v_lead * v_lead / p.a_lead);
  const double d = stopping_diff + v_follow * p.tau_r + p.d_min_lon;
  return std::max(d, p.d_min_lon);
}

double safe_lat_distance(double v_lat, const SafeDistanceParams& p) {
  const double v = std::abs(v_lat);
  const double v_peak = v + p.a_lat * p.tau_r;
  return v * p.tau_r + 0.5 * p.a_lat * p.tau_r * p.tau_r +
         v_peak * v_peak / (2.0 * p.b_lat) + p.d_min_lat;
}

double current_distance(const VehicleState& ego, const VehicleState& adv) {
  return std::hypot(ego.x - adv.x, ego.y - adv.y);
}

double required_safe_distance(const VehicleState& ego, const VehicleState& adv,
                              const SafeDistanceParams& p) {
  if (std::abs(adv.y - ego.y) < p.delta_lat) {
    const VehicleState& front = ego.x >= adv.x ? ego : adv;
    const VehicleState& rear = ego.x >= adv.x ? adv : ego;
    return safe_lon_distance(front.vx, rear.vx, p);
  }
  return safe_lat_distance(adv.vy, p);
}

bool same_lane_at(const StepRecord& r, const SafeDistanceParams& p) {
  return std::abs(r.adv.y - r.ego.y) < p.delta_lat;
}

bool lane_changed_adv(const Trace& t, int step) {
  if (step < 1 || step >= static_cast<int>(t.steps.size())) return false;
  const auto& prev = t.steps[step - 1];
  const auto& cur = t.steps[step];
  return prev.adv.lane_index != cur.adv.lane_index &&
         prev.ego.lane_index == cur.ego.lane_index;
}

bool lane_changed_ego(const Trace& t, int step) {
  if (step < 1 || step >= static_cast<int>(t.steps.size())) return false;
  const auto& prev = t.steps[step - 1];
  const auto& cur = t.steps[step];
  return prev.ego.lane_index != cur.ego.lane_index &&
         prev.adv.lane_index == cur.adv.lane_index;
}

namespace {

bool mu_unsafe_at(const StepRecord& r, const SafeDistanceParams& p) {
  const double d_lon = std::abs(r.adv.x - r.ego.x);
  const double d_lat = std::abs(r.adv.y - r.ego.y);
  if (same_lane_at(r, p)) {
    const VehicleState& front = r.ego.x >= r.adv.x ? r.ego : r.adv;
    const VehicleState& rear = r.ego.x >= r.adv.x ? r.adv : r.ego;
    return d_lon < safe_lon_distance(front.vx, rear.vx, p);
  }
  return d_lat < safe_lat_distance(r.adv.vy, p);
}

// A lane change at `step` that moves the adversary into the ego's lane
// ahead of it. Lane indices pin the outcome to the adversary's own motion;
// the ego following into the adversary's lane is not a cut-in.
bool cut_in_result_adv(const Trace& t, int step, const SafeDistanceParams& p) {
  (void)p;
  const auto& r = t.steps[step];
  return r.adv.lane_index == r.ego.lane_index && r.adv.x > r.ego.x;
}

}  // namespace

std::vector<PredicateVector> evaluate_predicates(const Trace& trace,
                                                 const SafeDistanceParams& p) {
  const int n = static_cast<int>(trace.steps.size());
  std::vector<PredicateVector> out(n);
  std::vector<bool> cut_in_event(n, false);
  for (int t = 0; t < n; ++t)
    cut_in_event[t] = lane_changed_adv(trace, t) && cut_in_result_adv(trace, t, p);

  for (int t = 0; t < n; ++t) {
    const auto& r = trace.steps[t];
    auto& v = out[t];
    v.ahead_adv = r.adv.x > r.ego.x;
    v.ahead_ego = r.ego.x > r.adv.x;
    v.same_lane = same_lane_at(r, p);
    v.lane_change_adv = lane_changed_adv(trace, t);
    v.brake_adv = r.a_adv <= -p.a_min;
    v.accel_adv = r.a_adv >= p.a_min;
    v.mu_unsafe = mu_unsafe_at(r, p);
    const int end = std::min(t + p.dt_window, n - 1);
    for (int u = t; u <= end && !v.cut_in_adv; ++u)
      if (cut_in_event[u]) v.cut_in_adv = true;
  }
  return out;
}

Classification classify_failure(const Trace& trace,
                                const SafeDistanceParams& p) {
  Classification out;
  if (!trace.collided) {
    out.label = Label::NoCollision;
    return out;
  }
  const int t_c = trace.collision_step.value();

  std::optional<int> cut_in_onset;
  std::optional<int> brake_onset;
  std::optional<int> rear_hit_onset;

  for (int u = 1; u <= t_c; ++u) {
    const auto& r = trace.steps[u];
    const double d_lon = std::abs(r.adv.x - r.ego.x);
    const VehicleState& front = r.ego.x >= r.adv.x ? r.ego : r.adv;
    const VehicleState& rear = r.ego.x >= r.adv.x ? r.adv : r.ego;
    const double d_safe_lon = safe_lon_distance(front.vx, rear.vx, p);

    // Cut-in: the post-change configuration is same-lane, so the
    // longitudinal model applies at the onset.
    if (!cut_in_onset && lane_changed_adv(trace, u) &&
        cut_in_result_adv(trace, u, p) && d_lon < d_safe_lon)
      cut_in_onset = u;

    const bool braking = r.a_adv <= -p.a_min;
    const bool brake_start =
        braking && (u == 1 || !(trace.steps[u - 1].a_adv <= -p.a_min));
    if (!brake_onset && brake_start && r.adv.x > r.ego.x &&
        same_lane_at(r, p) && d_lon < d_safe_lon)
      brake_onset = u;

    if (!rear_hit_onset && r.ego.x > r.adv.x && r.a_adv >= p.a_min &&
        same_lane_at(r, p))
      rear_hit_onset = u;
  }

  if (cut_in_onset) {
    out.label = Label::Invalid;
    out.rule = Rule::UnsafeCutIn;
    out.onset_step = cut_in_onset;
  } else if (brake_onset) {
    out.label = Label::Invalid;
    out.rule = Rule::UnsafeBrake;
    out.onset_step = brake_onset;
  } else if (rear_hit_onset) {
    out.label = Label::Invalid;
    out.rule = Rule::RearHit;
    out.onset_step = rear_hit_onset;
  } else {
    out.label = Label::Valid;
  }
  return out;
}

const char* label_name(Label l) {
  switch (l) {
    case Label::Valid: return "valid";
    case Label::Invalid: return "invalid";
    case Label::NoCollision: return "no-collision";
  }
  return "?";
}

const char* rule_name(Rule r) {
  switch (r) {
    case Rule::UnsafeCutIn: return "unsafe-cut-in";
    case Rule::UnsafeBrake: return "unsafe-brake";
    case Rule::RearHit: return "rear-hit";
  }
  return "?";
}

json to_json(const Classification& c) {
  json j{{"label", label_name(c.label)}};
  if (c.rule) j["rule"] = rule_name(*c.rule);
  if (c.onset_step) j["t_m"] = *c.onset_step;
  return j;
}

}  // namespace dynasto::safety
