#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dynasto/analytics.hpp"
#include "dynasto/reward.hpp"
#include "dynasto/sim.hpp"
#include "dynasto/types.hpp"

namespace dynasto::ga {

using Genotype = std::vector<double>;  // components in [0, 1]

struct ParamSpec {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  bool integer = false;
};

/// Box bounds over the ten scenario parameters, optionally followed by the
/// failure-selection gene. Inverted (min > max) entries are swapped at
/// construction.
class ParamBounds {
 public:
  /// Default scenario ranges; archive_size adds the failure gene when > 0.
  static ParamBounds defaults(int archive_size);
  /// warn_on_swap reports canonicalized (min > max) entries on stderr.
  static ParamBounds from_specs(std::vector<ParamSpec> specs,
                                bool warn_on_swap = false);
  static ParamBounds from_json(const json& j, int archive_size);

  int dimension() const { return static_cast<int>(specs_.size()); }
  bool has_failure_gene() const { return has_failure_gene_; }
  const std::vector<ParamSpec>& specs() const { return specs_; }

  /// Affine de-normalization; integer parameters round half-up and clamp.
  std::pair<ScenarioConfig, int> decode(const Genotype& x) const;
  /// Inverse of decode for continuous parameters; exact for integers.
  Genotype encode(const ScenarioConfig& c, int failure_id) const;

  /// Uniform per-parameter sample, already normalized.
  Genotype sample(std::mt19937_64& rng) const;

 private:
  std::vector<ParamSpec> specs_;
  bool has_failure_gene_ = false;

  double decode_component(double x, const ParamSpec& s) const;
};

/// SBX with distribution index eta_c; children are clipped to [0, 1].
/// Identical parents yield identical children.
std::pair<Genotype, Genotype> sbx_crossover(const Genotype& p1,
                                            const Genotype& p2, double eta_c,
                                            std::mt19937_64& rng);

/// Bounded polynomial mutation; each component is perturbed independently
/// with probability rate.
Genotype polynomial_mutation(const Genotype& x, double eta_m, double rate,
                             std::mt19937_64& rng);

double genotype_distance(const Genotype& a, const Genotype& b);

struct Individual {
  Genotype genotype;
  std::optional<double> fitness;
};

/// Keeps the first of any pair closer than d_th (strict).
std::vector<Individual> remove_duplicates(const std::vector<Individual>& pop,
                                          double d_th);

struct GaConfig {
  int pop_size = 100;
  double crossover_prob = 0.9;
  double mutation_prob = 0.9;  // per component
  double eta_c = 15.0;
  double eta_m = 20.0;
  double duplicate_threshold = 0.05;
};

/// Generational ask/tell optimizer (minimization): uniform initial
/// population, then binary-tournament selection, SBX, polynomial mutation
/// and duplicate removal, with the best individual re-injected each
/// generation.
class GaState {
 public:
  using InitSampler = std::function<Genotype(std::mt19937_64&)>;

  /// init_sampler draws the initial population (uniform per parameter);
  /// defaults to uniform [0,1] per component.
  GaState(int dimension, GaConfig config, std::uint64_t seed,
          InitSampler init_sampler = nullptr);

  /// Next batch of unevaluated genotypes (at most max_count).
  std::vector<Genotype> ask(int max_count);
  /// Fitnesses for exactly the genotypes last asked.
  void tell(const std::vector<double>& fitnesses);

  int generation() const { return generation_; }
  std::optional<double> best_fitness() const { return best_fitness_; }
  const std::optional<Genotype>& best_genotype() const { return best_; }

 private:
  int dim_;
  GaConfig cfg_;
  InitSampler init_;
  std::mt19937_64 rng_;
  std::vector<Individual> evaluated_;
  std::vector<Genotype> pending_;
  bool awaiting_tell_ = false;
  int generation_ = 0;
  std::optional<Genotype> best_;
  std::optional<double> best_fitness_;

  std::vector<Genotype> next_generation();
  const Individual& tournament();
};

struct EvalResult {
  double fitness = 0.0;
  Trace trace;
  safety::Classification classification;
};

struct SearchContext {
  const std::vector<analytics::FailureRecord>* archive = nullptr;
  sim::Policy sut_policy;
  ParamBounds bounds = ParamBounds::defaults(0);
  RoadConfig road;
  safety::SafeDistanceParams safe;
  reward::RewardConfig rconfig;
  analytics::DescriptiveParams desc;
  int max_steps = 40;
};

/// Replays the archived adversary actions of the decoded failure id from
/// the decoded initial conditions, with the SUT acting online. Sequences
/// shorter than the episode pad with IDLE; longer ones truncate.
EvalResult evaluate_candidate(const Genotype& x, const SearchContext& ctx,
                              std::uint64_t seed);

struct SearchResult {
  std::vector<analytics::FailureRecord> failures;  // valid, discovery order
  long evaluations = 0;
  int collisions = 0;
  /// Budget tick (1-based evaluation index) of each valid failure.
  std::vector<long> found_at;
};

/// Ask/tell generations until the evaluation budget is spent exactly.
SearchResult run_search(const SearchContext& ctx, const GaConfig& cfg,
                        long budget, std::uint64_t seed);

/// Same evaluation loop with uniform random proposals instead of the GA.
SearchResult run_random_search(const SearchContext& ctx, long budget,
                               std::uint64_t seed);

}  // namespace dynasto::ga
