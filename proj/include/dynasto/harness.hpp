#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynasto/baselines.hpp"
#include "dynasto/ga.hpp"
#include "dynasto/rl.hpp"
#include "dynasto/stats.hpp"

namespace dynasto::harness {

enum class Method {
  Rs,
  GaActions,
  BaseDqn,
  Varl,
  VarlGa,
  VarlRs,
  DynastoGa,
  DynastoRs,
};

Method method_from_string(const std::string& s);
std::string method_to_string(Method m);
std::vector<Method> all_methods();

struct ExperimentConfig {
  Method method = Method::DynastoGa;
  long total_budget = 4000;  // env steps for RL methods, evals for searches
  long step1_budget = 3000;  // adversary training, env steps
  long step2_budget = 1000;  // initial-condition search, evaluations
  int n_seeds = 10;
  std::uint64_t base_seed = 1;
  std::string sut_id = "SUT1";  // SUT1 or SUT2
  std::string sut_checkpoint;   // empty: train in process
  std::uint64_t sut_train_seed = 7;
  std::string out_dir = "runs";
  int jobs = 1;
  int cluster_k = 9;  // calibrated on the labeled fixture set

  safety::SafeDistanceParams safe;
  reward::RewardConfig rconfig;
  analytics::DescriptiveParams desc;
  ga::GaConfig ga_cfg;
  rl::DqnHyperparams hyper;
  RoadConfig road;
  json bounds_override;  // optional per-parameter [min, max] pairs
};

ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& c);

struct RunResult {
  int seed_index = 0;
  std::uint64_t seed = 0;
  long budget_ticks = 0;
  long all_collisions = 0;
  long valid_failures = 0;
  long unique_valid = 0;
  int clusters = 0;
  double wall_seconds = 0.0;
  std::vector<long> curve;  // cumulative unique valid failures per tick
};

json to_json(const RunResult& r);

struct SeedOutcome {
  RunResult result;
  std::vector<analytics::FailureRecord> pool;    // valid, discovery order
  std::vector<analytics::FailureRecord> unique;  // after de-duplication
  analytics::ClusterReport report;
};

rl::QNetwork resolve_sut(const ExperimentConfig& cfg);

/// One seeded run of the configured method against the SUT policy.
SeedOutcome run_method(const ExperimentConfig& cfg, const sim::Policy& sut,
                       int seed_index);

/// All seeds (optionally in parallel), artifacts persisted under
/// out_dir/<method>/seed_<i>/ plus a manifest.
std::vector<RunResult> run_pipeline(const ExperimentConfig& cfg);

struct PairStat {
  std::string method_a;
  std::string method_b;
  double u = 0.0;
  double p = 1.0;
  double delta = 0.0;
  std::string stars;
  std::string effect;
  std::string effect_band;
};

PairStat compare_methods(const std::string& name_a,
                         const std::vector<double>& a,
                         const std::string& name_b,
                         const std::vector<double>& b);

/// Curve CSV, per-method summary JSON and pairwise StatReport JSON.
void emit_report(
    const std::vector<std::pair<std::string, std::vector<RunResult>>>& results,
    const std::string& out_dir);

/// Greedy online de-duplication in discovery order; returns the ticks of
/// the retained failures.
std::vector<long> unique_ticks(const std::vector<analytics::FailureRecord>& pool,
                               double s_th);
std::vector<long> cumulative_curve(const std::vector<long>& retained_ticks,
                                   long total_ticks);

}  // namespace dynasto::harness
