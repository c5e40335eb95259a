#include "dynasto/harness.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <stdexcept>

namespace dynasto::harness {

namespace fs = std::filesystem;

Method method_from_string(const std::string& s) {
  static const std::map<std::string, Method> table{
      {"rs", Method::Rs},
      {"ga-actions", Method::GaActions},
      {"base-dqn", Method::BaseDqn},
      {"varl", Method::Varl},
      {"varl-ga", Method::VarlGa},
      {"varl-rs", Method::VarlRs},
      {"dynasto-ga", Method::DynastoGa},
      {"dynasto-rs", Method::DynastoRs}};
  auto it = table.find(s);
  if (it == table.end())
    throw std::invalid_argument("unknown method '" + s + "'");
  return it->second;
}

std::string method_to_string(Method m) {
  switch (m) {
    case Method::Rs: return "rs";
    case Method::GaActions: return "ga-actions";
    case Method::BaseDqn: return "base-dqn";
    case Method::Varl: return "varl";
    case Method::VarlGa: return "varl-ga";
    case Method::VarlRs: return "varl-rs";
    case Method::DynastoGa: return "dynasto-ga";
    case Method::DynastoRs: return "dynasto-rs";
  }
  return "?";
}

std::vector<Method> all_methods() {
  return {Method::Rs,     Method::GaActions, Method::BaseDqn,
          Method::Varl,   Method::VarlGa,    Method::VarlRs,
          Method::DynastoGa, Method::DynastoRs};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("method"))
    c.method = method_from_string(j.at("method").get<std::string>());
  c.total_budget = j.value("total_budget", c.total_budget);
  c.step1_budget = j.value("step1_budget", c.step1_budget);
  c.step2_budget = j.value("step2_budget", c.step2_budget);
  c.n_seeds = j.value("seeds", c.n_seeds);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.sut_id = j.value("sut", c.sut_id);
  c.sut_checkpoint = j.value("sut_checkpoint", c.sut_checkpoint);
  c.sut_train_seed = j.value("sut_train_seed", c.sut_train_seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.jobs = j.value("jobs", c.jobs);
  c.cluster_k = j.value("cluster_k", c.cluster_k);
  if (j.contains("safe")) {
    const auto& s = j.at("safe");
    c.safe.a_lead = s.value("a_lead", c.safe.a_lead);
    c.safe.a_follow = s.value("a_follow", c.safe.a_follow);
    c.safe.tau_r = s.value("tau_r", c.safe.tau_r);
    c.safe.d_min_lon = s.value("d_min_lon", c.safe.d_min_lon);
    c.safe.a_lat = s.value("a_lat", c.safe.a_lat);
    c.safe.b_lat = s.value("b_lat", c.safe.b_lat);
    c.safe.d_min_lat = s.value("d_min_lat", c.safe.d_min_lat);
    c.safe.delta_lat = s.value("delta_lat", c.safe.delta_lat);
    c.safe.a_min = s.value("a_min", c.safe.a_min);
    c.safe.dt_window = s.value("dt_window", c.safe.dt_window);
  }
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    c.rconfig.valid_bonus = r.value("valid_bonus", c.rconfig.valid_bonus);
    c.rconfig.invalid_divisor =
        r.value("invalid_divisor", c.rconfig.invalid_divisor);
    c.rconfig.max_steps = r.value("max_steps", c.rconfig.max_steps);
  }
  if (j.contains("dedup")) {
    const auto& d = j.at("dedup");
    c.desc.n_steps = d.value("n_steps", c.desc.n_steps);
    c.desc.s_th = d.value("s_th", c.desc.s_th);
  }
  if (j.contains("ga")) {
    const auto& g = j.at("ga");
    c.ga_cfg.pop_size = g.value("pop_size", c.ga_cfg.pop_size);
    c.ga_cfg.crossover_prob = g.value("crossover_prob", c.ga_cfg.crossover_prob);
    c.ga_cfg.mutation_prob = g.value("mutation_prob", c.ga_cfg.mutation_prob);
    c.ga_cfg.eta_c = g.value("eta_c", c.ga_cfg.eta_c);
    c.ga_cfg.eta_m = g.value("eta_m", c.ga_cfg.eta_m);
    c.ga_cfg.duplicate_threshold =
        g.value("duplicate_threshold", c.ga_cfg.duplicate_threshold);
  }
  if (j.contains("dqn")) {
    const auto& d = j.at("dqn");
    c.hyper.lr = d.value("lr", c.hyper.lr);
    c.hyper.batch_size = d.value("batch_size", c.hyper.batch_size);
    c.hyper.gamma = d.value("gamma", c.hyper.gamma);
    c.hyper.buffer_capacity = d.value("buffer_capacity", c.hyper.buffer_capacity);
    c.hyper.warmup_steps = d.value("warmup_steps", c.hyper.warmup_steps);
    c.hyper.target_sync = d.value("target_sync", c.hyper.target_sync);
    c.hyper.hidden = d.value("hidden", c.hyper.hidden);
  }
  if (j.contains("bounds")) c.bounds_override = j.at("bounds");
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"method", method_to_string(c.method)},
         {"total_budget", c.total_budget},
         {"step1_budget", c.step1_budget},
         {"step2_budget", c.step2_budget},
         {"seeds", c.n_seeds},
         {"base_seed", c.base_seed},
         {"sut", c.sut_id},
         {"sut_checkpoint", c.sut_checkpoint},
         {"sut_train_seed", c.sut_train_seed},
         {"out_dir", c.out_dir},
         {"jobs", c.jobs},
         {"cluster_k", c.cluster_k}};
  if (!c.bounds_override.is_null()) j["bounds"] = c.bounds_override;
  return j;
}

json to_json(const RunResult& r) {
  return json{{"seed_index", r.seed_index},
              {"seed", r.seed},
              {"budget_ticks", r.budget_ticks},
              {"all_collisions", r.all_collisions},
              {"valid_failures", r.valid_failures},
              {"unique_valid", r.unique_valid},
              {"clusters", r.clusters},
              {"wall_seconds", r.wall_seconds},
              {"curve", r.curve}};
}

rl::QNetwork resolve_sut(const ExperimentConfig& cfg) {
  if (!cfg.sut_checkpoint.empty())
    return rl::load_checkpoint(cfg.sut_checkpoint).first;
  rl::SutTrainOptions opt;
  opt.road = cfg.road;
  if (cfg.sut_id == "SUT2") {
    opt.n_background = 4;
    opt.defensive_traffic = true;
  }
  return rl::train_sut(opt, cfg.sut_train_seed);
}

std::vector<long> unique_ticks(const std::vector<analytics::FailureRecord>& pool,
                               double s_th) {
  std::vector<const std::vector<double>*> kept;
  std::vector<long> ticks;
  for (const auto& r : pool) {
    bool dup = false;
    for (const auto* k : kept)
      if (analytics::is_duplicate(r.descriptive, *k, s_th)) {
        dup = true;
        break;
      }
    if (!dup) {
      kept.push_back(&r.descriptive);
      ticks.push_back(r.discovered_at);
    }
  }
  return ticks;
}

std::vector<long> cumulative_curve(const std::vector<long>& retained_ticks,
                                   long total_ticks) {
  std::vector<long> curve(total_ticks, 0);
  for (long tick : retained_ticks) {
    const long idx = std::clamp(tick - 1, 0L, total_ticks - 1);
    for (long t = idx; t < total_ticks; ++t) ++curve[t];
  }
  return curve;
}

namespace {

ga::SearchContext make_search_context(const ExperimentConfig& cfg,
                                      const sim::Policy& sut,
                                      const std::vector<analytics::FailureRecord>*
                                          archive) {
  ga::SearchContext ctx;
  ctx.archive = archive;
  ctx.sut_policy = sut;
  ctx.bounds = cfg.bounds_override.is_null()
                   ? ga::ParamBounds::defaults(
                         archive ? static_cast<int>(archive->size()) : 0)
                   : ga::ParamBounds::from_json(
                         cfg.bounds_override,
                         archive ? static_cast<int>(archive->size()) : 0);
  ctx.road = cfg.road;
  ctx.safe = cfg.safe;
  ctx.rconfig = cfg.rconfig;
  ctx.desc = cfg.desc;
  ctx.max_steps = cfg.hyper.max_episode_steps;
  return ctx;
}

rl::AdversaryTrainOptions make_train_options(const ExperimentConfig& cfg,
                                             long budget,
                                             bool validity_aware) {
  rl::AdversaryTrainOptions opt;
  opt.budget_env_steps = budget;
  opt.hyper = cfg.hyper;
  opt.safe = cfg.safe;
  opt.rconfig = cfg.rconfig;
  opt.road = cfg.road;
  opt.desc = cfg.desc;
  opt.validity_aware = validity_aware;
  return opt;
}

}  // namespace

SeedOutcome run_method(const ExperimentConfig& cfg, const sim::Policy& sut,
                       int seed_index) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = derive_seed(cfg.base_seed, 100 + seed_index);
  SeedOutcome out;
  out.result.seed_index = seed_index;
  out.result.seed = seed;

  long ticks = cfg.total_budget;
  long collisions = 0;

  switch (cfg.method) {
    case Method::Rs: {
      const auto opt = make_train_options(cfg, cfg.total_budget, true);
      auto res = baselines::run_random_adversary(sut, cfg.total_budget, opt, seed);
      out.pool = std::move(res.failures);
      collisions = res.collisions;
      break;
    }
    case Method::GaActions: {
      const auto opt = make_train_options(cfg, cfg.total_budget, true);
      auto res = baselines::ga_action_search(sut, cfg.total_budget, cfg.ga_cfg,
                                             opt, seed);
      out.pool = std::move(res.failures);
      collisions = res.collisions;
      break;
    }
    case Method::BaseDqn:
    case Method::Varl: {
      const auto opt = make_train_options(cfg, cfg.total_budget,
                                          cfg.method == Method::Varl);
      auto res = rl::train_adversary(sut, opt, seed);
      out.pool = std::move(res.archive);
      collisions = res.collisions;
      break;
    }
    case Method::VarlGa:
    case Method::VarlRs: {
      const auto opt = make_train_options(cfg, cfg.total_budget, true);
      auto res = baselines::coevolve(
          sut,
          cfg.method == Method::VarlGa ? baselines::ProposerMode::Ga
                                       : baselines::ProposerMode::Random,
          cfg.total_budget, opt, cfg.ga_cfg, seed);
      out.pool = std::move(res.failures);
      collisions = res.collisions;
      break;
    }
    case Method::DynastoGa:
    case Method::DynastoRs: {
      const auto opt = make_train_options(cfg, cfg.step1_budget, true);
      auto step1 = rl::train_adversary(sut, opt, seed);
      collisions = step1.collisions;
      if (step1.archive.empty())
        throw std::runtime_error(
            "dynasto: adversary training produced an empty failure archive; "
            "increase the step-1 budget");
      const auto ctx = make_search_context(cfg, sut, &step1.archive);
      auto step2 =
          cfg.method == Method::DynastoGa
              ? ga::run_search(ctx, cfg.ga_cfg, cfg.step2_budget, seed)
              : ga::run_random_search(ctx, cfg.step2_budget, seed);
      collisions += step2.collisions;
      out.pool = step1.archive;
      for (auto& f : step2.failures) {
        f.discovered_at += cfg.step1_budget;
        out.pool.push_back(std::move(f));
      }
      ticks = cfg.step1_budget + cfg.step2_budget;
      break;
    }
  }

  out.result.budget_ticks = ticks;
  out.result.all_collisions = collisions;
  out.result.valid_failures = static_cast<long>(out.pool.size());
  out.unique = analytics::dedup_records(out.pool, cfg.desc.s_th);
  out.result.unique_valid = static_cast<long>(out.unique.size());
  out.result.curve =
      cumulative_curve(unique_ticks(out.pool, cfg.desc.s_th), ticks);
  out.report = analytics::cluster_failures(out.unique, cfg.cluster_k, seed,
                                           cfg.safe);
  out.result.clusters = out.report.partition.community_count();
  out.result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

namespace {

void write_text_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
  }
  fs::rename(tmp, path);
}

void persist_seed(const ExperimentConfig& cfg, const SeedOutcome& outcome) {
  const fs::path dir = fs::path(cfg.out_dir) / method_to_string(cfg.method) /
                       ("seed_" + std::to_string(outcome.result.seed_index));
  fs::create_directories(dir);

  std::string failures;
  for (const auto& r : outcome.pool) failures += to_json(r).dump() + "\n";
  write_text_atomic(dir / "failures.jsonl", failures);

  std::string unique;
  for (const auto& r : outcome.unique) unique += to_json(r).dump() + "\n";
  write_text_atomic(dir / "unique_failures.jsonl", unique);

  write_text_atomic(dir / "clusters.json",
                    analytics::to_json(outcome.report).dump(2) + "\n");
  write_text_atomic(dir / "result.json",
                    to_json(outcome.result).dump(2) + "\n");
}

}  // namespace

std::vector<RunResult> run_pipeline(const ExperimentConfig& cfg) {
  auto net = std::make_shared<rl::QNetwork>(resolve_sut(cfg));
  const sim::Policy sut = rl::make_greedy_policy(net);

  std::vector<RunResult> results(cfg.n_seeds);
  const int jobs = std::max(1, cfg.jobs);
  for (int base = 0; base < cfg.n_seeds; base += jobs) {
    std::vector<std::future<SeedOutcome>> futures;
    const int end = std::min(cfg.n_seeds, base + jobs);
    for (int i = base; i < end; ++i)
      futures.push_back(std::async(std::launch::async, [&cfg, &sut, i] {
        return run_method(cfg, sut, i);
      }));
    for (int i = base; i < end; ++i) {
      SeedOutcome outcome = futures[i - base].get();
      persist_seed(cfg, outcome);
      results[i] = std::move(outcome.result);
    }
  }

  json manifest{{"config", config_to_json(cfg)},
                {"config_hash", std::to_string(std::hash<std::string>{}(
                                    config_to_json(cfg).dump()))},
                {"tool_version", "0.1.0"},
                {"format_version", 1}};
  json seeds = json::array();
  for (const auto& r : results) seeds.push_back(r.seed);
  manifest["seeds"] = std::move(seeds);
  const fs::path dir = fs::path(cfg.out_dir) / method_to_string(cfg.method);
  fs::create_directories(dir);
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return results;
}

PairStat compare_methods(const std::string& name_a,
                         const std::vector<double>& a,
                         const std::string& name_b,
                         const std::vector<double>& b) {
  PairStat s;
  s.method_a = name_a;
  s.method_b = name_b;
  const auto mw = stats::mann_whitney_u(a, b);
  s.u = mw.u;
  s.p = mw.p;
  s.delta = stats::cliffs_delta(a, b);
  s.stars = stats::significance_stars(s.p);
  s.effect = stats::effect_dots(s.delta);
  s.effect_band = stats::effect_size_band(s.delta);
  return s;
}

void emit_report(
    const std::vector<std::pair<std::string, std::vector<RunResult>>>& results,
    const std::string& out_dir) {
  fs::create_directories(out_dir);

  std::string csv = "method,seed,tick,unique_valid\n";
  for (const auto& [method, runs] : results)
    for (const auto& r : runs)
      for (std::size_t t = 0; t < r.curve.size(); ++t)
        csv += method + "," + std::to_string(r.seed_index) + "," +
               std::to_string(t + 1) + "," + std::to_string(r.curve[t]) + "\n";
  write_text_atomic(fs::path(out_dir) / "curves.csv", csv);

  auto quantile = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
  };

  json summary = json::object();
  for (const auto& [method, runs] : results) {
    std::vector<double> unique, clusters;
    for (const auto& r : runs) {
      unique.push_back(static_cast<double>(r.unique_valid));
      clusters.push_back(static_cast<double>(r.clusters));
    }
    summary[method] = json{
        {"seeds", runs.size()},
        {"unique_valid",
         {{"median", quantile(unique, 0.5)},
          {"iqr", {quantile(unique, 0.25), quantile(unique, 0.75)}}}},
        {"clusters",
         {{"median", quantile(clusters, 0.5)},
          {"iqr", {quantile(clusters, 0.25), quantile(clusters, 0.75)}}}}};
  }
  write_text_atomic(fs::path(out_dir) / "summary.json",
                    summary.dump(2) + "\n");

  json pairs = json::array();
  for (std::size_t i = 0; i < results.size(); ++i)
    for (std::size_t j = i + 1; j < results.size(); ++j) {
      std::vector<double> a, b;
      for (const auto& r : results[i].second)
        a.push_back(static_cast<double>(r.unique_valid));
      for (const auto& r : results[j].second)
        b.push_back(static_cast<double>(r.unique_valid));
      const PairStat s =
          compare_methods(results[i].first, a, results[j].first, b);
      pairs.push_back(json{{"method_a", s.method_a},
                           {"method_b", s.method_b},
                           {"U", s.u},
                           {"p", s.p},
                           {"delta", s.delta},
                           {"significance", s.stars},
                           {"effect", s.effect},
                           {"effect_band", s.effect_band}});
    }
  write_text_atomic(fs::path(out_dir) / "stats.json", pairs.dump(2) + "\n");
}

}  // namespace dynasto::harness
