#include "dynasto/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dynasto::sim {

namespace {

std::array<std::pair<double, double>, 4> rect_corners(const VehicleState& v) {
  const double c = std::cos(v.heading), s = std::sin(v.heading);
  const double hl = v.length / 2.0, hw = v.width / 2.0;
  std::array<std::pair<double, double>, 4> out;
  const double dx[4] = {hl, hl, -hl, -hl};
  const double dy[4] = {hw, -hw, -hw, hw};
  for (int i = 0; i < 4; ++i)
    out[i] = {v.x + c * dx[i] - s * dy[i], v.y + s * dx[i] + c * dy[i]};
  return out;
}

bool separated_on_axis(const std::array<std::pair<double, double>, 4>& a,
                       const std::array<std::pair<double, double>, 4>& b,
                       double ax, double ay) {
  double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
  for (const auto& [x, y] : a) {
    double p = x * ax + y * ay;
    amin = std::min(amin, p);
    amax = std::max(amax, p);
  }
  for (const auto& [x, y] : b) {
    double p = x * ax + y * ay;
    bmin = std::min(bmin, p);
    bmax = std::max(bmax, p);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

bool collision_check(const VehicleState& a, const VehicleState& b) {
  const auto ca = rect_corners(a);
  const auto cb = rect_corners(b);
  const double axes[4][2] = {
      {std::cos(a.heading), std::sin(a.heading)},
      {-std::sin(a.heading), std::cos(a.heading)},
      {std::cos(b.heading), std::sin(b.heading)},
      {-std::sin(b.heading), std::cos(b.heading)},
  };
  for (const auto& ax : axes)
    if (separated_on_axis(ca, cb, ax[0], ax[1])) return false;
  return true;
}

IdmParams defensive_idm() {
  IdmParams p;
  p.desired_speed = 23.0;
  p.time_headway = 2.5;
  p.min_gap = 12.0;
  p.max_accel = 1.5;
  p.comfort_decel = 3.0;
  return p;
}

double idm_acceleration(const VehicleState& follower,
                        const std::optional<VehicleState>& leader,
                        const IdmParams& p) {
  const double v = follower.vx;
  double a = p.max_accel *
             (1.0 - std::pow(std::max(v, 0.0) / p.desired_speed, p.delta));
  if (leader) {
    const double gap = (leader->x - follower.x) -
                       (leader->length + follower.length) / 2.0;
    const double s = std::max(gap, 0.01);
    const double dv = v - leader->vx;
    const double s_star =
        p.min_gap +
        std::max(0.0, v * p.time_headway +
                          v * dv / (2.0 * std::sqrt(p.max_accel *
                                                    p.comfort_decel)));
    a -= p.max_accel * (s_star / s) * (s_star / s);
  }
  return a;
}

void integrate_vehicle(VehicleState& v, double target_speed,
                       const RoadConfig& road, const DynamicsParams& dyn,
                       double dt) {
  double speed = v.speed();
  const double accel =
      std::clamp(dyn.kp_speed * (target_speed - speed), -dyn.a_limit,
                 dyn.a_limit);
  speed = std::max(0.0, speed + accel * dt);

  const double y_ref = road.lane_center(v.target_lane);
  const double v_lat_cmd = dyn.kp_lat * (y_ref - v.y);
  const double ratio =
      std::clamp(v_lat_cmd / std::max(speed, 1.0), -1.0, 1.0);
  const double heading_ref =
      std::clamp(std::asin(ratio), -dyn.heading_max, dyn.heading_max);
  v.heading += dyn.kp_heading * (heading_ref - v.heading) * dt;

  v.x += speed * std::cos(v.heading) * dt;
  v.y += speed * std::sin(v.heading) * dt;
  v.vx = speed * std::cos(v.heading);
  v.vy = speed * std::sin(v.heading);
  v.lane_index = road.lane_at(v.y);
}

namespace {

void validate_config(const ScenarioConfig& c, const RoadConfig& road) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("scenario parameter " + field + " " + why);
  };
  auto check_lane = [&](int lane, const char* field) {
    if (lane < 0 || lane >= road.lane_count)
      fail(field, "outside lane range [0, " +
                      std::to_string(road.lane_count - 1) + "]");
  };
  check_lane(c.l_ego, "l_ego");
  check_lane(c.l_adv, "l_adv");
  check_lane(c.tl_ego, "tl_ego");
  check_lane(c.tl_adv, "tl_adv");
  if (c.x_ego < 0.0 || c.x_ego > road.road_length) fail("x_ego", "off road");
  if (c.x_adv < 0.0 || c.x_adv > road.road_length) fail("x_adv", "off road");
  if (c.s_ego < 0.0) fail("s_ego", "negative");
  if (c.s_adv < 0.0) fail("s_adv", "negative");
  if (std::abs(c.h_ego) > 0.5) fail("h_ego", "implausible heading");
  if (std::abs(c.h_adv) > 0.5) fail("h_adv", "implausible heading");
}

VehicleState make_vehicle(double x, int lane, int target_lane, double heading,
                          double speed, const RoadConfig& road) {
  VehicleState v;
  v.x = x;
  v.y = road.lane_center(lane);
  v.lane_index = lane;
  v.target_lane = target_lane;
  v.heading = heading;
  v.vx = speed * std::cos(heading);
  v.vy = speed * std::sin(heading);
  return v;
}

}  // namespace

SimulatorSession::SimulatorSession(const ScenarioConfig& config,
                                   const RoadConfig& road, std::uint64_t seed,
                                   DynamicsParams dyn)
    : road_(road), dyn_(dyn), rng_(seed) {
  validate_config(config, road);
  ego_ = make_vehicle(config.x_ego, config.l_ego, config.tl_ego, config.h_ego,
                      config.s_ego, road);
  adv_ = make_vehicle(config.x_adv, config.l_adv, config.tl_adv, config.h_adv,
                      config.s_adv, road);
  ego_target_speed_ = config.s_ego;
  adv_target_speed_ = config.s_adv;
  trace_.config = config;
  trace_.seed = seed;
  trace_.steps.push_back(StepRecord{0, ego_, adv_, MetaAction::Idle,
                                    MetaAction::Idle, 0.0, 0.0});
  if (collision_check(ego_, adv_)) {
    trace_.collided = true;
    trace_.collision_step = 0;
    terminated_ = true;
  }
}

void SimulatorSession::apply_action(VehicleState& v, double& target_speed,
                                    MetaAction a) const {
  switch (a) {
    case MetaAction::Faster:
      target_speed = std::min(target_speed + dyn_.speed_increment, dyn_.v_max);
      break;
    case MetaAction::Slower:
      target_speed = std::max(target_speed - dyn_.speed_increment, dyn_.v_min);
      break;
    case MetaAction::LaneLeft:
      if (v.lane_index > 0) v.target_lane = v.lane_index - 1;
      break;
    case MetaAction::LaneRight:
      if (v.lane_index < road_.lane_count - 1) v.target_lane = v.lane_index + 1;
      break;
    case MetaAction::Idle:
      break;
  }
}

const StepRecord& SimulatorSession::step(MetaAction ego_action,
                                         MetaAction adv_action) {
  if (terminated_) throw std::logic_error("step() after episode termination");

  apply_action(ego_, ego_target_speed_, ego_action);
  apply_action(adv_, adv_target_speed_, adv_action);

  const double ego_v0 = ego_.speed();
  const double adv_v0 = adv_.speed();
  const double dt = dyn_.dt();
  bool hit = false;
  double elapsed = 0.0;
  for (int i = 0; i < dyn_.substeps; ++i) {
    integrate_vehicle(ego_, ego_target_speed_, road_, dyn_, dt);
    integrate_vehicle(adv_, adv_target_speed_, road_, dyn_, dt);
    elapsed += dt;
    if (collision_check(ego_, adv_)) {
      hit = true;
      break;
    }
  }

  StepRecord rec;
  rec.t = current_step() + 1;
  rec.ego = ego_;
  rec.adv = adv_;
  rec.ego_action = ego_action;
  rec.adv_action = adv_action;
  rec.a_ego = (ego_.speed() - ego_v0) / elapsed;
  rec.a_adv = (adv_.speed() - adv_v0) / elapsed;
  trace_.steps.push_back(rec);
  if (hit) {
    trace_.collided = true;
    trace_.collision_step = rec.t;
    terminated_ = true;
  }
  return trace_.steps.back();
}

Trace run_episode(SimulatorSession& session, const Policy& ego_policy,
                  const Policy& adv_policy, int max_steps) {
  while (!session.terminated() && session.current_step() < max_steps) {
    const JointState js = session.joint_state();
    session.step(ego_policy(js), adv_policy(js));
  }
  return session.trace();
}

TrafficEnv::TrafficEnv(const RoadConfig& road, int n_background,
                       const IdmParams& idm, std::uint64_t seed,
                       DynamicsParams dyn)
    : road_(road), dyn_(dyn), idm_(idm), n_background_(n_background),
      rng_(seed) {
  reset();
}

void TrafficEnv::reset() {
  std::uniform_int_distribution<int> lane_dist(0, road_.lane_count - 1);
  std::uniform_real_distribution<double> jitter(0.0, 15.0);
  std::uniform_real_distribution<double> speed_dist(23.0, 26.0);

  const int ego_lane = lane_dist(rng_);
  ego_ = make_vehicle(250.0, ego_lane, ego_lane, 0.0, 25.0, road_);
  ego_target_speed_ = 25.0;

  background_.clear();
  double x = ego_.x + 30.0;
  for (int i = 0; i < n_background_; ++i) {
    const int lane = lane_dist(rng_);
    const double speed = speed_dist(rng_);
    background_.push_back(
        make_vehicle(x + jitter(rng_), lane, lane, 0.0, speed, road_));
    x += 30.0;
  }
  terminated_ = false;
}

std::optional<VehicleState> TrafficEnv::leader_of(
    const VehicleState& v) const {
  std::optional<VehicleState> best;
  auto consider = [&](const VehicleState& other) {
    if (&other == &v) return;
    if (other.lane_index != v.lane_index || other.x <= v.x) return;
    if (!best || other.x < best->x) best = other;
  };
  consider(ego_);
  for (const auto& b : background_) consider(b);
  return best;
}

bool TrafficEnv::step(MetaAction ego_action) {
  if (terminated_) throw std::logic_error("step() after episode termination");

  // reuse the meta-action translation from the two-vehicle session
  switch (ego_action) {
    case MetaAction::Faster:
      ego_target_speed_ =
          std::min(ego_target_speed_ + dyn_.speed_increment, dyn_.v_max);
      break;
    case MetaAction::Slower:
      ego_target_speed_ =
          std::max(ego_target_speed_ - dyn_.speed_increment, dyn_.v_min);
      break;
    case MetaAction::LaneLeft:
      if (ego_.lane_index > 0) ego_.target_lane = ego_.lane_index - 1;
      break;
    case MetaAction::LaneRight:
      if (ego_.lane_index < road_.lane_count - 1)
        ego_.target_lane = ego_.lane_index + 1;
      break;
    case MetaAction::Idle:
      break;
  }

  const double dt = dyn_.dt();
  bool hit = false;
  for (int i = 0; i < dyn_.substeps && !hit; ++i) {
    std::vector<double> accels(background_.size());
    for (std::size_t k = 0; k < background_.size(); ++k)
      accels[k] = std::clamp(
          idm_acceleration(background_[k], leader_of(background_[k]), idm_),
          -2.0 * idm_.comfort_decel, idm_.max_accel);

    integrate_vehicle(ego_, ego_target_speed_, road_, dyn_, dt);
    for (std::size_t k = 0; k < background_.size(); ++k) {
      auto& b = background_[k];
      b.vx = std::max(0.0, b.vx + accels[k] * dt);
      b.x += b.vx * dt;
    }
    for (const auto& b : background_)
      if (collision_check(ego_, b)) hit = true;
  }
  if (hit) terminated_ = true;
  return hit;
}

JointState TrafficEnv::joint_state() const {
  const VehicleState* nearest = nullptr;
  double best = 1e300;
  for (const auto& b : background_) {
    const double d = std::abs(b.x - ego_.x);
    if (d < best) {
      best = d;
      nearest = &b;
    }
  }
  return {ego_, nearest ? *nearest : ego_};
}

}  // namespace dynasto::sim
