#pragma once

#include <optional>
#include <vector>

#include "dynasto/types.hpp"

namespace dynasto::safety {

struct SafeDistanceParams {
  double a_lead = 5.0;       // lead max deceleration magnitude, m/s^2
  double a_follow = 5.0;     // follower max deceleration magnitude, m/s^2
  double tau_r = 0.2;        // reaction time, s
  double d_min_lon = 5.0;    // minimum longitudinal separation, m
  double a_lat = 5.0;        // lateral acceleration, m/s^2
  double b_lat = 5.0;        // lateral deceleration magnitude, m/s^2
  double d_min_lat = 2.0;    // minimum lateral separation, m
  double delta_lat = 2.0;    // same-lane lateral threshold, m
  double a_min = 1.0;        // brake/accel event threshold, m/s^2
  int dt_window = 2;         // event lookahead window, policy steps
};

/// Safe longitudinal gap for a follower behind a leader: difference of
/// stopping distances plus reaction headway, never below d_min_lon.
double safe_lon_distance(double v_lead, double v_follow,
                         const SafeDistanceParams& p);

/// Safe lateral gap given the other vehicle's lateral speed.
double safe_lat_distance(double v_lat, const SafeDistanceParams& p);

/// Euclidean distance between vehicle centers.
double current_distance(const VehicleState& ego, const VehicleState& adv);

/// Same-lane -> longitudinal model (rear vehicle is the follower),
/// different lanes -> lateral model on the adversary's lateral speed.
double required_safe_distance(const VehicleState& ego, const VehicleState& adv,
                              const SafeDistanceParams& p);

struct PredicateVector {
  bool mu_unsafe = false;
  bool ahead_adv = false;
  bool ahead_ego = false;
  bool lane_change_adv = false;
  bool same_lane = false;
  bool brake_adv = false;
  bool accel_adv = false;
  bool cut_in_adv = false;
};

std::vector<PredicateVector> evaluate_predicates(const Trace& trace,
                                                 const SafeDistanceParams& p);

enum class Label { Valid, Invalid, NoCollision };
enum class Rule { UnsafeCutIn, UnsafeBrake, RearHit };

struct Classification {
  Label label = Label::NoCollision;
  std::optional<Rule> rule;      // present iff Invalid
  std::optional<int> onset_step; // maneuver onset t_m, present iff Invalid
};

const char* label_name(Label l);
const char* rule_name(Rule r);

/// Rules over a collision trace, evaluated at maneuver onsets:
///  - unsafe-cut-in: the adversary enters the ego's lane with a longitudinal
///    gap below the safe distance at the lane-change step.
///  - unsafe-brake: the adversary starts braking while ahead of the ego in
///    the same lane with the gap already below the safe distance.
///  - rear-hit: the adversary accelerates behind the ego in the same lane.
/// Any match -> Invalid (rule precedence as listed, earliest onset);
/// no match -> Valid; non-collision traces -> NoCollision.
Classification classify_failure(const Trace& trace,
                                const SafeDistanceParams& p);

// Low-level per-step helpers shared with the event-extraction pipeline.
bool same_lane_at(const StepRecord& r, const SafeDistanceParams& p);
bool lane_changed_adv(const Trace& t, int step);
bool lane_changed_ego(const Trace& t, int step);

json to_json(const Classification& c);

}  // namespace dynasto::safety
