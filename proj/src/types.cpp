#include "dynasto/types.hpp"

namespace dynasto {

json to_json(const VehicleState& v) {
  return json{{"x", v.x},   {"y", v.y},           {"vx", v.vx},
              {"vy", v.vy}, {"heading", v.heading}, {"lane", v.lane_index}};
}

json to_json(const ScenarioConfig& c) {
  return json{{"x_ego", c.x_ego},   {"x_adv", c.x_adv}, {"l_ego", c.l_ego},
              {"l_adv", c.l_adv},   {"tl_ego", c.tl_ego}, {"tl_adv", c.tl_adv},
              {"h_ego", c.h_ego},   {"h_adv", c.h_adv}, {"s_ego", c.s_ego},
              {"s_adv", c.s_adv}};
}

json to_json(const StepRecord& r) {
  return json{{"t", r.t},
              {"ego", to_json(r.ego)},
              {"adv", to_json(r.adv)},
              {"ego_action", static_cast<int>(r.ego_action)},
              {"adv_action", static_cast<int>(r.adv_action)},
              {"a_ego", r.a_ego},
              {"a_adv", r.a_adv}};
}

json to_json(const Trace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s));
  json out{{"seed", t.seed},
           {"config", to_json(t.config)},
           {"steps", std::move(steps)},
           {"collided", t.collided}};
  if (t.collision_step) out["T_c"] = *t.collision_step;
  return out;
}

VehicleState vehicle_from_json(const json& j) {
  VehicleState v;
  v.x = j.at("x").get<double>();
  v.y = j.at("y").get<double>();
  v.vx = j.at("vx").get<double>();
  v.vy = j.at("vy").get<double>();
  v.heading = j.at("heading").get<double>();
  v.lane_index = j.at("lane").get<int>();
  v.target_lane = v.lane_index;
  return v;
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig c;
  c.x_ego = j.at("x_ego").get<double>();
  c.x_adv = j.at("x_adv").get<double>();
  c.l_ego = j.at("l_ego").get<int>();
  c.l_adv = j.at("l_adv").get<int>();
  c.tl_ego = j.at("tl_ego").get<int>();
  c.tl_adv = j.at("tl_adv").get<int>();
  c.h_ego = j.at("h_ego").get<double>();
  c.h_adv = j.at("h_adv").get<double>();
  c.s_ego = j.at("s_ego").get<double>();
  c.s_adv = j.at("s_adv").get<double>();
  return c;
}

Trace trace_from_json(const json& j) {
  Trace t;
  t.seed = j.at("seed").get<std::uint64_t>();
  t.config = scenario_from_json(j.at("config"));
  for (const auto& js : j.at("steps")) {
    StepRecord r;
    r.t = js.at("t").get<int>();
    r.ego = vehicle_from_json(js.at("ego"));
    r.adv = vehicle_from_json(js.at("adv"));
    r.ego_action = action_from_int(js.at("ego_action").get<int>());
    r.adv_action = action_from_int(js.at("adv_action").get<int>());
    r.a_ego = js.at("a_ego").get<double>();
    r.a_adv = js.at("a_adv").get<double>();
    t.steps.push_back(std::move(r));
  }
  t.collided = j.at("collided").get<bool>();
  if (j.contains("T_c")) t.collision_step = j.at("T_c").get<int>();
  return t;
}

std::string dump_trace(const Trace& t) { return to_json(t).dump(); }

Trace parse_trace(const std::string& line) {
  return trace_from_json(json::parse(line));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dynasto
