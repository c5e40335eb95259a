#pragma once

#include <functional>
#include <optional>
#include <random>

#include "dynasto/types.hpp"

namespace dynasto::sim {

/// Low-level control constants behind the meta-action interface.
/// Policy decisions happen at 1 Hz; kinematics integrate at 5 Hz.
struct DynamicsParams {
  double policy_period = 1.0;  // s between meta-actions
  int substeps = 5;            // integration substeps per policy period
  double speed_increment = 2.5;  // m/s per FASTER/SLOWER
  double v_min = 15.0;
  double v_max = 30.0;
  double a_limit = 5.0;        // |longitudinal accel| saturation, m/s^2
  double kp_speed = 1.0 / 0.6;   // proportional speed-tracking gain, 1/s
  double kp_lat = 1.5;           // lateral position gain, 1/s
  double kp_heading = 5.0;       // heading-tracking gain, 1/s
  double heading_max = 0.1745;   // ~10 deg steering envelope

  double dt() const { return policy_period / substeps; }
};

/// Oriented-rectangle overlap via the separating-axis test.
bool collision_check(const VehicleState& a, const VehicleState& b);

struct IdmParams {
  double desired_speed = 25.0;
  double time_headway = 1.5;
  double min_gap = 10.0;
  double max_accel = 3.0;
  double comfort_decel = 5.0;
  double delta = 4.0;
};

/// Defensive variant: larger headway, gentler acceleration.
IdmParams defensive_idm();

/// Intelligent Driver Model acceleration. The gap is measured bumper to
/// bumper: (leader.x - follower.x) - (lengths averaged). Without a leader
/// only the free-road term applies.
double idm_acceleration(const VehicleState& follower,
                        const std::optional<VehicleState>& leader,
                        const IdmParams& p);

using Policy = std::function<MetaAction(const JointState&)>;

/// One two-vehicle episode environment. Deterministic given the seed;
/// single-threaded, one owner. All state lives in the session.
class SimulatorSession {
 public:
  SimulatorSession(const ScenarioConfig& config, const RoadConfig& road,
                   std::uint64_t seed, DynamicsParams dyn = {});

  /// Applies both meta-actions, integrates one policy period and records
  /// the resulting step. Throws std::logic_error after termination.
  const StepRecord& step(MetaAction ego_action, MetaAction adv_action);

  bool terminated() const { return terminated_; }
  int current_step() const { return static_cast<int>(trace_.steps.size()) - 1; }
  const Trace& trace() const { return trace_; }
  const VehicleState& ego() const { return ego_; }
  const VehicleState& adv() const { return adv_; }
  JointState joint_state() const { return {ego_, adv_}; }
  const RoadConfig& road() const { return road_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  RoadConfig road_;
  DynamicsParams dyn_;
  VehicleState ego_;
  VehicleState adv_;
  double ego_target_speed_ = 0.0;
  double adv_target_speed_ = 0.0;
  Trace trace_;
  bool terminated_ = false;
  std::mt19937_64 rng_;

  void apply_action(VehicleState& v, double& target_speed, MetaAction a) const;
};

/// Runs policies until collision or max_steps and returns the full trace.
Trace run_episode(SimulatorSession& session, const Policy& ego_policy,
                  const Policy& adv_policy, int max_steps = 40);

/// Ego plus IDM-controlled background traffic; used only to train ego
/// policies. Background vehicles hold their lanes.
class TrafficEnv {
 public:
  TrafficEnv(const RoadConfig& road, int n_background, const IdmParams& idm,
             std::uint64_t seed, DynamicsParams dyn = {});

  void reset();
  /// Returns (collided, ego state after step). Episode owners track length.
  bool step(MetaAction ego_action);

  const VehicleState& ego() const { return ego_; }
  /// Nearest background vehicle fills the "other vehicle" slot.
  JointState joint_state() const;
  bool terminated() const { return terminated_; }
  int rightmost_lane() const { return road_.lane_count - 1; }
  const DynamicsParams& dynamics() const { return dyn_; }

 private:
  RoadConfig road_;
  DynamicsParams dyn_;
  IdmParams idm_;
  int n_background_;
  VehicleState ego_;
  double ego_target_speed_ = 25.0;
  std::vector<VehicleState> background_;
  bool terminated_ = false;
  std::mt19937_64 rng_;

  std::optional<VehicleState> leader_of(const VehicleState& v) const;
};

/// Shared vehicle integration used by both environments.
void integrate_vehicle(VehicleState& v, double target_speed,
                       const RoadConfig& road, const DynamicsParams& dyn,
                       double dt);

}  // namespace dynasto::sim
