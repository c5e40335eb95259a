#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace dynasto {

using json = nlohmann::json;

/// High-level driving intentions. Integer encoding is part of the trace
/// format and must stay stable.
enum class MetaAction : int {
  LaneLeft = 0,
  Idle = 1,
  LaneRight = 2,
  Faster = 3,
  Slower = 4,
};

inline constexpr int kNumActions = 5;

inline MetaAction action_from_int(int code) {
  if (code < 0 || code >= kNumActions)
    throw std::invalid_argument("invalid action code " + std::to_string(code));
  return static_cast<MetaAction>(code);
}

struct RoadConfig {
  int lane_count = 2;
  double lane_width = 4.0;
  double road_length = 10000.0;

  double lane_center(int lane) const { return lane * lane_width; }
  /// Lane whose centerline is nearest to y, clamped to the road.
  int lane_at(double y) const {
    int idx = static_cast<int>(std::lround(y / lane_width));
    if (idx < 0) idx = 0;
    if (idx >= lane_count) idx = lane_count - 1;
    return idx;
  }
};

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double heading = 0.0;
  int lane_index = 0;
  int target_lane = 0;
  double length = 5.0;
  double width = 2.0;

  double speed() const { return std::hypot(vx, vy); }
};

/// Static initial conditions for one two-vehicle scenario.
struct ScenarioConfig {
  double x_ego = 250.0;
  double x_adv = 310.0;
  int l_ego = 0;
  int l_adv = 0;
  int tl_ego = 0;
  int tl_adv = 0;
  double h_ego = 0.0;
  double h_adv = 0.0;
  double s_ego = 25.0;
  double s_adv = 25.0;
};

struct StepRecord {
  int t = 0;
  VehicleState ego;
  VehicleState adv;
  MetaAction ego_action = MetaAction::Idle;
  MetaAction adv_action = MetaAction::Idle;
  double a_ego = 0.0;  // realized mean longitudinal acceleration over the step
  double a_adv = 0.0;
};

struct Trace {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;  // steps[0] is the initial state
  bool collided = false;
  std::optional<int> collision_step;  // present iff collided

  /// Number of policy steps executed (the initial record does not count).
  int step_count() const { return static_cast<int>(steps.size()) - 1; }
};

/// What policies observe: the raw joint state in a fixed ego-first order.
struct JointState {
  VehicleState ego;
  VehicleState adv;
};

// Trace wire format: field names are fixed, one JSON object per episode.
json to_json(const VehicleState& v);
json to_json(const ScenarioConfig& c);
json to_json(const StepRecord& r);
json to_json(const Trace& t);
VehicleState vehicle_from_json(const json& j);
ScenarioConfig scenario_from_json(const json& j);
Trace trace_from_json(const json& j);

std::string dump_trace(const Trace& t);
Trace parse_trace(const std::string& line);

/// Deterministic child-seed derivation (splitmix64 finalizer over a mix).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Adversary actions applied over the policy steps of a trace.
inline std::vector<MetaAction> adv_actions_of(const Trace& t) {
  std::vector<MetaAction> out;
  for (std::size_t i = 1; i < t.steps.size(); ++i)
    out.push_back(t.steps[i].adv_action);
  return out;
}

}  // namespace dynasto
