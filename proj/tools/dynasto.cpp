// Command-line front end: training, search, classification and reporting.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "dynasto/harness.hpp"

namespace fs = std::filesystem;
using namespace dynasto;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

void write_file(const std::string& path, const std::string& content) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

harness::ExperimentConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return {};
  return harness::config_from_json(read_json_file(config_path));
}

std::vector<analytics::FailureRecord> read_failures(const std::string& path) {
  std::vector<analytics::FailureRecord> out;
  for (const auto& line : read_lines(path))
    out.push_back(analytics::failure_record_from_json(json::parse(line)));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynasto: validity-aware scenario generation for highway "
               "driving policies"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "experiment config (JSON)")
      ->envname("DYNASTO_CONFIG");

  // train-sut
  auto* train_sut = app.add_subcommand("train-sut", "train an ego policy");
  std::string sut_id = "SUT1";
  long sut_budget = 8000;
  std::uint64_t sut_seed = 7;
  std::string sut_out = "sut.json";
  train_sut->add_option("--sut", sut_id, "SUT1 | SUT2");
  train_sut->add_option("--budget", sut_budget, "environment steps");
  train_sut->add_option("--seed", sut_seed);
  train_sut->add_option("--out", sut_out, "checkpoint path");

  // train-adversary
  auto* train_adv = app.add_subcommand(
      "train-adversary", "step 1: train the validity-aware adversary");
  std::string adv_sut_path;
  long adv_budget = 3000;
  std::uint64_t adv_seed = 1;
  std::string adv_out = "step1";
  train_adv->add_option("--sut", adv_sut_path, "SUT checkpoint")->required();
  train_adv->add_option("--budget", adv_budget, "environment steps");
  train_adv->add_option("--seed", adv_seed);
  train_adv->add_option("--out", adv_out, "output directory");

  // search-init
  auto* search = app.add_subcommand(
      "search-init", "step 2: GA over initial conditions, replaying step-1 "
                     "behaviors");
  std::string search_archive, search_sut, search_out = "step2";
  long search_budget = 1000;
  int search_pop = 100;
  std::uint64_t search_seed = 1;
  search->add_option("--archive", search_archive, "step-1 failures.jsonl")
      ->required();
  search->add_option("--sut", search_sut, "SUT checkpoint")->required();
  search->add_option("--budget", search_budget, "candidate evaluations");
  search->add_option("--pop", search_pop, "population size");
  search->add_option("--seed", search_seed);
  search->add_option("--out", search_out, "output directory");

  // run-method
  auto* run = app.add_subcommand("run-method", "seeded runs of one method");
  std::string run_method_name = "dynasto-ga";
  run->add_option("--method", run_method_name,
                  "rs | ga-actions | base-dqn | varl | varl-ga | varl-rs | "
                  "dynasto-ga | dynasto-rs");
  std::string run_out, run_sut_ckpt, run_sut_id;
  int run_seeds = 0, run_jobs = 0;
  long run_budget = 0;
  std::uint64_t run_base_seed = 0;
  run->add_option("--out", run_out);
  run->add_option("--sut-checkpoint", run_sut_ckpt);
  run->add_option("--sut", run_sut_id, "SUT1 | SUT2");
  run->add_option("--seeds", run_seeds, "number of repeated runs");
  run->add_option("--seed", run_base_seed, "base seed");
  run->add_option("--budget", run_budget, "total budget");
  run->add_option("--jobs", run_jobs, "parallel seed jobs");

  // run-pipeline
  auto* pipeline = app.add_subcommand(
      "run-pipeline", "full two-step pipeline with de-dup and clustering");
  std::string pipe_out, pipe_sut_ckpt, pipe_sut_id;
  int pipe_seeds = 0, pipe_jobs = 0;
  std::uint64_t pipe_base_seed = 0;
  pipeline->add_option("--out", pipe_out);
  pipeline->add_option("--sut-checkpoint", pipe_sut_ckpt);
  pipeline->add_option("--sut", pipe_sut_id);
  pipeline->add_option("--seeds", pipe_seeds);
  pipeline->add_option("--seed", pipe_base_seed);
  pipeline->add_option("--jobs", pipe_jobs);

  // classify
  auto* classify = app.add_subcommand("classify",
                                      "label collision traces (JSON lines)");
  std::string cls_in, cls_out;
  classify->add_option("--in", cls_in, "trace JSONL")->required();
  classify->add_option("--out", cls_out, "classification JSONL (default "
                                         "stdout)");

  // dedup
  auto* dedup = app.add_subcommand("dedup", "drop near-duplicate failures");
  std::string dd_in, dd_out;
  double dd_sth = 0.5;
  dedup->add_option("--in", dd_in, "failures JSONL")->required();
  dedup->add_option("--out", dd_out, "retained failures JSONL")->required();
  dedup->add_option("--s-th", dd_sth, "duplicate threshold");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "failure-mode clustering");
  std::string cl_in, cl_out = "clusters";
  int cl_k = 9;
  std::uint64_t cl_seed = 0;
  cluster->add_option("--in", cl_in, "failures JSONL")->required();
  cluster->add_option("--k", cl_k, "nearest neighbours");
  cluster->add_option("--seed", cl_seed);
  cluster->add_option("--out", cl_out, "output prefix");

  // stats / report
  auto* stats_cmd = app.add_subcommand("stats", "pairwise method comparison");
  std::string stats_dir, stats_out;
  stats_cmd->add_option("--results", stats_dir, "run-pipeline output dir")
      ->required();
  stats_cmd->add_option("--out", stats_out, "stats JSON (default stdout)");

  auto* report = app.add_subcommand("report",
                                    "curves CSV + summary + stat report");
  std::string report_dir, report_out = "report";
  report->add_option("--results", report_dir)->required();
  report->add_option("--out", report_out);

  CLI11_PARSE(app, argc, argv);

  try {
    harness::ExperimentConfig cfg = load_config(config_path);

    if (*train_sut) {
      rl::SutTrainOptions opt;
      opt.budget_env_steps = sut_budget;
      if (sut_id == "SUT2") {
        opt.n_background = 4;
        opt.defensive_traffic = true;
      } else if (sut_id != "SUT1") {
        throw std::runtime_error("unknown SUT id " + sut_id);
      }
      const auto net = rl::train_sut(opt, sut_seed);
      rl::save_checkpoint(net, {}, sut_out);
      std::cout << "wrote " << sut_out << "\n";
    }

    if (*train_adv) {
      auto [net, scales] = rl::load_checkpoint(adv_sut_path);
      const auto sut = rl::make_greedy_policy(
          std::make_shared<rl::QNetwork>(std::move(net)), scales);
      rl::AdversaryTrainOptions opt;
      opt.budget_env_steps = adv_budget;
      opt.hyper = cfg.hyper;
      opt.safe = cfg.safe;
      opt.rconfig = cfg.rconfig;
      opt.desc = cfg.desc;
      const auto res = rl::train_adversary(sut, opt, adv_seed);
      fs::create_directories(adv_out);
      rl::save_checkpoint(res.net, {}, adv_out + "/adversary.json");
      std::string lines;
      for (const auto& r : res.archive)
        lines += analytics::to_json(r).dump() + "\n";
      write_file(adv_out + "/failures.jsonl", lines);
      std::cout << "episodes=" << res.episodes
                << " collisions=" << res.collisions
                << " valid=" << res.archive.size() << "\n";
    }

    if (*search) {
      auto [net, scales] = rl::load_checkpoint(search_sut);
      const auto sut = rl::make_greedy_policy(
          std::make_shared<rl::QNetwork>(std::move(net)), scales);
      const auto archive = read_failures(search_archive);
      ga::SearchContext ctx;
      ctx.archive = &archive;
      ctx.sut_policy = sut;
      ctx.bounds = cfg.bounds_override.is_null()
                       ? ga::ParamBounds::defaults(
                             static_cast<int>(archive.size()))
                       : ga::ParamBounds::from_json(
                             cfg.bounds_override,
                             static_cast<int>(archive.size()));
      ctx.safe = cfg.safe;
      ctx.rconfig = cfg.rconfig;
      ctx.desc = cfg.desc;
      ga::GaConfig gcfg = cfg.ga_cfg;
      gcfg.pop_size = search_pop;
      const auto res = ga::run_search(ctx, gcfg, search_budget, search_seed);
      fs::create_directories(search_out);
      std::string lines;
      for (const auto& r : res.failures)
        lines += analytics::to_json(r).dump() + "\n";
      write_file(search_out + "/failures.jsonl", lines);
      std::cout << "evaluations=" << res.evaluations
                << " collisions=" << res.collisions
                << " valid=" << res.failures.size() << "\n";
    }

    if (*run || *pipeline) {
      const bool is_run = static_cast<bool>(*run);
      if (is_run) cfg.method = harness::method_from_string(run_method_name);
      const std::string out = is_run ? run_out : pipe_out;
      const std::string ckpt = is_run ? run_sut_ckpt : pipe_sut_ckpt;
      const std::string sid = is_run ? run_sut_id : pipe_sut_id;
      const int n_seeds = is_run ? run_seeds : pipe_seeds;
      const int jobs = is_run ? run_jobs : pipe_jobs;
      const std::uint64_t base = is_run ? run_base_seed : pipe_base_seed;
      if (!out.empty()) cfg.out_dir = out;
      if (!ckpt.empty()) cfg.sut_checkpoint = ckpt;
      if (!sid.empty()) cfg.sut_id = sid;
      if (n_seeds > 0) cfg.n_seeds = n_seeds;
      if (jobs > 0) cfg.jobs = jobs;
      if (base > 0) cfg.base_seed = base;
      if (is_run && run_budget > 0) cfg.total_budget = run_budget;
      const auto results = harness::run_pipeline(cfg);
      for (const auto& r : results)
        std::cout << harness::method_to_string(cfg.method) << " seed "
                  << r.seed_index << ": collisions=" << r.all_collisions
                  << " valid=" << r.valid_failures
                  << " unique=" << r.unique_valid << " clusters=" << r.clusters
                  << "\n";
    }

    if (*classify) {
      std::string outbuf;
      long id = 0;
      for (const auto& line : read_lines(cls_in)) {
        const Trace trace = parse_trace(line);
        const auto cls = safety::classify_failure(trace, cfg.safe);
        json rec{{"trace_id", id++}, {"label", safety::label_name(cls.label)}};
        if (cls.rule) rec["rule"] = safety::rule_name(*cls.rule);
        if (cls.onset_step) rec["t_m"] = *cls.onset_step;
        outbuf += rec.dump() + "\n";
      }
      if (cls_out.empty()) std::cout << outbuf;
      else write_file(cls_out, outbuf);
    }

    if (*dedup) {
      const auto records = read_failures(dd_in);
      const auto kept = analytics::dedup_records(records, dd_sth);
      std::string lines;
      for (const auto& r : kept) lines += analytics::to_json(r).dump() + "\n";
      write_file(dd_out, lines);
      std::cout << "kept " << kept.size() << " of " << records.size() << "\n";
    }

    if (*cluster) {
      const auto records = read_failures(cl_in);
      const auto rep =
          analytics::cluster_failures(records, cl_k, cl_seed, cfg.safe);
      write_file(cl_out + ".json", analytics::to_json(rep).dump(2) + "\n");
      std::string csv = "node,cluster\n";
      for (std::size_t i = 0; i < rep.partition.community.size(); ++i)
        csv += std::to_string(i) + "," +
               std::to_string(rep.partition.community[i]) + "\n";
      write_file(cl_out + ".csv", csv);
      std::cout << "clusters=" << rep.partition.community_count()
                << " modularity=" << rep.partition.modularity << "\n";
    }

    if (*stats_cmd || *report) {
      const std::string dir = *stats_cmd ? stats_dir : report_dir;
      std::vector<std::pair<std::string, std::vector<harness::RunResult>>>
          results;
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        std::vector<harness::RunResult> runs;
        for (const auto& seed_dir : fs::directory_iterator(entry.path())) {
          const fs::path res_file = seed_dir.path() / "result.json";
          if (!fs::exists(res_file)) continue;
          const json j = read_json_file(res_file.string());
          harness::RunResult r;
          r.seed_index = j.at("seed_index").get<int>();
          r.seed = j.at("seed").get<std::uint64_t>();
          r.budget_ticks = j.at("budget_ticks").get<long>();
          r.all_collisions = j.at("all_collisions").get<long>();
          r.valid_failures = j.at("valid_failures").get<long>();
          r.unique_valid = j.at("unique_valid").get<long>();
          r.clusters = j.at("clusters").get<int>();
          r.wall_seconds = j.at("wall_seconds").get<double>();
          r.curve = j.at("curve").get<std::vector<long>>();
          runs.push_back(std::move(r));
        }
        if (runs.empty()) continue;
        std::sort(runs.begin(), runs.end(),
                  [](const auto& a, const auto& b) {
                    return a.seed_index < b.seed_index;
                  });
        results.emplace_back(entry.path().filename().string(),
                             std::move(runs));
      }
      std::sort(results.begin(), results.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (results.empty()) throw std::runtime_error("no results under " + dir);

      if (*report) {
        harness::emit_report(results, report_out);
        std::cout << "wrote " << report_out << "/curves.csv, summary.json, "
                  << "stats.json\n";
      } else {
        json pairs = json::array();
        for (std::size_t i = 0; i < results.size(); ++i)
          for (std::size_t j2 = i + 1; j2 < results.size(); ++j2) {
            std::vector<double> a, b;
            for (const auto& r : results[i].second)
              a.push_back(static_cast<double>(r.unique_valid));
            for (const auto& r : results[j2].second)
              b.push_back(static_cast<double>(r.unique_valid));
            const auto s = harness::compare_methods(results[i].first, a,
                                                    results[j2].first, b);
            pairs.push_back(json{{"method_a", s.method_a},
                                 {"method_b", s.method_b},
                                 {"U", s.u},
                                 {"p", s.p},
                                 {"delta", s.delta},
                                 {"significance", s.stars},
                                 {"effect", s.effect},
                                 {"effect_band", s.effect_band}});
          }
        if (stats_out.empty()) std::cout << pairs.dump(2) << "\n";
        else write_file(stats_out, pairs.dump(2) + "\n");
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
