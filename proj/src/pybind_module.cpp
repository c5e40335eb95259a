#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "dynasto/analytics.hpp"
#include "dynasto/ga.hpp"
#include "dynasto/rl.hpp"
#include "dynasto/stats.hpp"

namespace py = pybind11;
using namespace dynasto;

namespace {

Trace simulate(const std::string& config_json,
               const std::vector<int>& ego_actions,
               const std::vector<int>& adv_actions, std::uint64_t seed,
               int max_steps) {
  const ScenarioConfig config =
      scenario_from_json(json::parse(config_json));
  sim::SimulatorSession session(config, RoadConfig{}, seed);
  const auto scripted = [&session](const std::vector<int>& actions) {
    return [&actions, &session](const JointState&) {
      const std::size_t t = static_cast<std::size_t>(session.current_step());
      return t < actions.size() ? action_from_int(actions[t])
                                : MetaAction::Idle;
    };
  };
  return sim::run_episode(session, scripted(ego_actions),
                          scripted(adv_actions), max_steps);
}

}  // namespace

PYBIND11_MODULE(_dynasto, m) {
  m.doc() = "validity-aware adversarial scenario generation core";

  py::class_<safety::SafeDistanceParams>(m, "SafeDistanceParams")
      .def(py::init<>())
      .def_readwrite("a_lead", &safety::SafeDistanceParams::a_lead)
      .def_readwrite("a_follow", &safety::SafeDistanceParams::a_follow)
      .def_readwrite("tau_r", &safety::SafeDistanceParams::tau_r)
      .def_readwrite("d_min_lon", &safety::SafeDistanceParams::d_min_lon)
      .def_readwrite("a_lat", &safety::SafeDistanceParams::a_lat)
      .def_readwrite("b_lat", &safety::SafeDistanceParams::b_lat)
      .def_readwrite("d_min_lat", &safety::SafeDistanceParams::d_min_lat)
      .def_readwrite("delta_lat", &safety::SafeDistanceParams::delta_lat)
      .def_readwrite("a_min", &safety::SafeDistanceParams::a_min)
      .def_readwrite("dt_window", &safety::SafeDistanceParams::dt_window);

  m.def("safe_lon_distance", &safety::safe_lon_distance, py::arg("v_lead"),
        py::arg("v_follow"), py::arg("params") = safety::SafeDistanceParams{});
  m.def("safe_lat_distance", &safety::safe_lat_distance, py::arg("v_lat"),
        py::arg("params") = safety::SafeDistanceParams{});
  m.def("collision_likelihood", &reward::collision_likelihood, py::arg("d_c"),
        py::arg("d_safe"));

  m.def(
      "classify_trace",
      [](const std::string& trace_json, const safety::SafeDistanceParams& p) {
        const Trace t = parse_trace(trace_json);
        return safety::to_json(safety::classify_failure(t, p)).dump();
      },
      py::arg("trace_json"), py::arg("params") = safety::SafeDistanceParams{},
      "classify one trace (JSON in, JSON out)");
  m.def(
      "extract_events",
      [](const std::string& trace_json, const safety::SafeDistanceParams& p) {
        return analytics::extract_events(parse_trace(trace_json), p);
      },
      py::arg("trace_json"), py::arg("params") = safety::SafeDistanceParams{});
  m.def(
      "episode_reward",
      [](const std::string& trace_json, const safety::SafeDistanceParams& p) {
        return reward::episode_reward(parse_trace(trace_json), p, {});
      },
      py::arg("trace_json"), py::arg("params") = safety::SafeDistanceParams{});

  m.def("levenshtein", &analytics::levenshtein, py::arg("a"), py::arg("b"));
  m.def(
      "cluster_event_vectors",
      [](const std::vector<std::vector<int>>& events, int k,
         std::uint64_t seed) {
        const auto dist = analytics::pairwise_levenshtein(events);
        const auto graph = analytics::knn_graph(
            dist, std::min<int>(k, static_cast<int>(events.size()) - 1));
        const auto part = analytics::leiden_cluster(graph, 1.0, seed);
        return py::make_tuple(part.community, part.modularity);
      },
      py::arg("events"), py::arg("k") = 10, py::arg("seed") = 0,
      "kNN graph + community detection over event vectors");
  m.def("adjusted_rand_index", &analytics::adjusted_rand_index, py::arg("a"),
        py::arg("b"));

  m.def(
      "sbx_crossover",
      [](const ga::Genotype& p1, const ga::Genotype& p2, double eta_c,
         std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return ga::sbx_crossover(p1, p2, eta_c, rng);
      },
      py::arg("p1"), py::arg("p2"), py::arg("eta_c") = 15.0,
      py::arg("seed") = 0);
  m.def(
      "polynomial_mutation",
      [](const ga::Genotype& x, double eta_m, double rate,
         std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return ga::polynomial_mutation(x, eta_m, rate, rng);
      },
      py::arg("x"), py::arg("eta_m") = 20.0, py::arg("rate") = 0.9,
      py::arg("seed") = 0);
  m.def(
      "decode_scenario",
      [](const ga::Genotype& x, int archive_size) {
        const auto bounds = ga::ParamBounds::defaults(archive_size);
        const auto [config, failure_id] = bounds.decode(x);
        json j = to_json(config);
        j["failure_id"] = failure_id;
        return j.dump();
      },
      py::arg("x"), py::arg("archive_size") = 0);

  m.def(
      "mann_whitney_u",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = stats::mann_whitney_u(a, b);
        return py::make_tuple(r.u, r.p);
      },
      py::arg("a"), py::arg("b"));
  m.def("cliffs_delta", &stats::cliffs_delta, py::arg("a"), py::arg("b"));

  m.def(
      "simulate_json",
      [](const std::string& config_json, const std::vector<int>& ego_actions,
         const std::vector<int>& adv_actions, std::uint64_t seed,
         int max_steps) {
        return dump_trace(
            simulate(config_json, ego_actions, adv_actions, seed, max_steps));
      },
      py::arg("config_json"), py::arg("ego_actions"), py::arg("adv_actions"),
      py::arg("seed") = 0, py::arg("max_steps") = 40,
      "roll out scripted meta-actions and return the trace as JSON");

  m.attr("__version__") = "0.1.0";
}
