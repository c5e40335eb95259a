#include "dynasto/ga.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynasto::ga {

ParamBounds ParamBounds::defaults(int archive_size) {
  std::vector<ParamSpec> specs{
      {"x_ego", 247.0, 304.0, false}, {"x_adv", 395.0, 364.0, false},
      {"l_ego", 0.0, 1.0, true},      {"l_adv", 0.0, 1.0, true},
      {"tl_ego", 0.0, 1.0, true},     {"tl_adv", 0.0, 1.0, true},
      {"h_ego", -0.08, 0.08, false},  {"h_adv", -0.08, 0.08, false},
      {"s_ego", 20.0, 29.0, false},   {"s_adv", 20.0, 29.0, false}};
  if (archive_size > 0)
    specs.push_back(
        {"failure_id", 0.0, static_cast<double>(archive_size - 1), true});
  return from_specs(std::move(specs));
}

ParamBounds ParamBounds::from_specs(std::vector<ParamSpec> specs,
                                    bool warn_on_swap) {
  ParamBounds b;
  for (auto& s : specs)
    if (s.min > s.max) {
      if (warn_on_swap)
        std::cerr << "bounds: swapping inverted range for " << s.name << " ("
                  << s.min << " > " << s.max << ")\n";
      std::swap(s.min, s.max);
    }
  b.has_failure_gene_ =
      !specs.empty() && specs.back().name == "failure_id";
  b.specs_ = std::move(specs);
  return b;
}

ParamBounds ParamBounds::from_json(const json& j, int archive_size) {
  auto base = defaults(archive_size);
  std::vector<ParamSpec> specs = base.specs_;
  for (auto& s : specs) {
    if (!j.contains(s.name)) continue;
    const auto& e = j.at(s.name);
    s.min = e.at(0).get<double>();
    s.max = e.at(1).get<double>();
  }
  return from_specs(std::move(specs), true);
}

double ParamBounds::decode_component(double x, const ParamSpec& s) const {
  double p = s.min + x * (s.max - s.min);
  if (s.integer) {
    p = std::floor(p + 0.5);  // round half-up
    p = std::clamp(p, s.min, s.max);
  }
  return p;
}

std::pair<ScenarioConfig, int> ParamBounds::decode(const Genotype& x) const {
  if (static_cast<int>(x.size()) != dimension())
    throw std::invalid_argument("decode: genotype dimension mismatch");
  ScenarioConfig c;
  c.x_ego = decode_component(x[0], specs_[0]);
  c.x_adv = decode_component(x[1], specs_[1]);
  c.l_ego = static_cast<int>(decode_component(x[2], specs_[2]));
  c.l_adv = static_cast<int>(decode_component(x[3], specs_[3]));
  c.tl_ego = static_cast<int>(decode_component(x[4], specs_[4]));
  c.tl_adv = static_cast<int>(decode_component(x[5], specs_[5]));
  c.h_ego = decode_component(x[6], specs_[6]);
  c.h_adv = decode_component(x[7], specs_[7]);
  c.s_ego = decode_component(x[8], specs_[8]);
  c.s_adv = decode_component(x[9], specs_[9]);
  int failure_id = 0;
  if (has_failure_gene_)
    failure_id = static_cast<int>(decode_component(x[10], specs_[10]));
  return {c, failure_id};
}

Genotype ParamBounds::encode(const ScenarioConfig& c, int failure_id) const {
  std::vector<double> raw{c.x_ego,
                          c.x_adv,
                          static_cast<double>(c.l_ego),
                          static_cast<double>(c.l_adv),
                          static_cast<double>(c.tl_ego),
                          static_cast<double>(c.tl_adv),
                          c.h_ego,
                          c.h_adv,
                          c.s_ego,
                          c.s_adv};
  if (has_failure_gene_) raw.push_back(static_cast<double>(failure_id));
  Genotype x(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& s = specs_[i];
    if (raw[i] < s.min || raw[i] > s.max)
      throw std::invalid_argument("encode: parameter " + s.name +
                                  " out of range");
    const double width = s.max - s.min;
    x[i] = width == 0.0 ? 0.0 : (raw[i] - s.min) / width;
  }
  return x;
}

Genotype ParamBounds::sample(std::mt19937_64& rng) const {
  Genotype x(dimension());
  for (int i = 0; i < dimension(); ++i) {
    const auto& s = specs_[i];
    double p;
    if (s.integer) {
      std::uniform_int_distribution<long> d(static_cast<long>(s.min),
                                            static_cast<long>(s.max));
      p = static_cast<double>(d(rng));
    } else {
      std::uniform_real_distribution<double> d(s.min, s.max);
      p = d(rng);
    }
    const double width = s.max - s.min;
    x[i] = width == 0.0 ? 0.0 : (p - s.min) / width;
  }
  return x;
}

std::pair<Genotype, Genotype> sbx_crossover(const Genotype& p1,
                                            const Genotype& p2, double eta_c,
                                            std::mt19937_64& rng) {
  if (p1.size() != p2.size())
    throw std::invalid_argument("sbx_crossover: dimension mismatch");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Genotype c1 = p1, c2 = p2;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    if (unit(rng) > 0.5) continue;
    if (std::abs(p1[i] - p2[i]) <= 1e-14) continue;
    const double y1 = std::min(p1[i], p2[i]);
    const double y2 = std::max(p1[i], p2[i]);
    const double u = unit(rng);
    const double exponent = 1.0 / (eta_c + 1.0);
    const double betaq = u <= 0.5 ? std::pow(2.0 * u, exponent)
                                  : std::pow(1.0 / (2.0 * (1.0 - u)), exponent);
    double a = 0.5 * ((1.0 + betaq) * y1 + (1.0 - betaq) * y2);
    double b = 0.5 * ((1.0 - betaq) * y1 + (1.0 + betaq) * y2);
    a = std::clamp(a, 0.0, 1.0);
    b = std::clamp(b, 0.0, 1.0);
    if (unit(rng) <= 0.5) std::swap(a, b);
    c1[i] = a;
    c2[i] = b;
  }
  return {std::move(c1), std::move(c2)};
}

Genotype polynomial_mutation(const Genotype& x, double eta_m, double rate,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Genotype out = x;
  const double mut_pow = 1.0 / (eta_m + 1.0);
  for (double& y : out) {
    if (unit(rng) > rate) continue;
    const double u = unit(rng);
    double deltaq;
    if (u <= 0.5) {
      const double xy = 1.0 - y;  // distance to the lower bound is y
      deltaq = std::pow(2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta_m + 1.0),
                        mut_pow) -
               1.0;
    } else {
      const double xy = y;  // distance to the upper bound is 1 - y
      deltaq = 1.0 - std::pow(2.0 * (1.0 - u) +
                                  2.0 * (u - 0.5) * std::pow(xy, eta_m + 1.0),
                              mut_pow);
    }
    y = std::clamp(y + deltaq, 0.0, 1.0);
  }
  return out;
}

double genotype_distance(const Genotype& a, const Genotype& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<Individual> remove_duplicates(const std::vector<Individual>& pop,
                                          double d_th) {
  std::vector<Individual> kept;
  for (const auto& ind : pop) {
    bool dup = false;
    for (const auto& k : kept)
      if (genotype_distance(ind.genotype, k.genotype) < d_th) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(ind);
  }
  return kept;
}

GaState::GaState(int dimension, GaConfig config, std::uint64_t seed,
                 InitSampler init_sampler)
    : dim_(dimension), cfg_(config), init_(std::move(init_sampler)),
      rng_(seed) {
  if (dim_ < 1) throw std::invalid_argument("GaState: dimension < 1");
  if (!init_)
    init_ = [dimension](std::mt19937_64& rng) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Genotype g(dimension);
      for (double& v : g) v = unit(rng);
      return g;
    };
}

const Individual& GaState::tournament() {
  std::uniform_int_distribution<std::size_t> pick(0, evaluated_.size() - 1);
  const Individual& a = evaluated_[pick(rng_)];
  const Individual& b = evaluated_[pick(rng_)];
  return *a.fitness <= *b.fitness ? a : b;
}

std::vector<Genotype> GaState::next_generation() {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Genotype> batch;
  if (best_) batch.push_back(*best_);

  auto accept = [&](Genotype g, bool check_duplicates) {
    if (check_duplicates)
      for (const auto& k : batch)
        if (genotype_distance(g, k) < cfg_.duplicate_threshold) return;
    if (static_cast<int>(batch.size()) < cfg_.pop_size)
      batch.push_back(std::move(g));
  };

  long tries = 0;
  const long max_tries = 200L * cfg_.pop_size;
  while (static_cast<int>(batch.size()) < cfg_.pop_size && tries < max_tries) {
    ++tries;
    Genotype a = tournament().genotype;
    Genotype b = tournament().genotype;
    if (unit(rng_) <= cfg_.crossover_prob)
      std::tie(a, b) = sbx_crossover(a, b, cfg_.eta_c, rng_);
    accept(polynomial_mutation(a, cfg_.eta_m, cfg_.mutation_prob, rng_), true);
    if (static_cast<int>(batch.size()) < cfg_.pop_size)
      accept(polynomial_mutation(b, cfg_.eta_m, cfg_.mutation_prob, rng_),
             true);
  }
  // Pathological duplicate-dense case: top up with uniform randoms.
  while (static_cast<int>(batch.size()) < cfg_.pop_size) {
    Genotype g(dim_);
    for (double& v : g) v = unit(rng_);
    accept(std::move(g), false);
  }
  return batch;
}

std::vector<Genotype> GaState::ask(int max_count) {
  if (awaiting_tell_)
    throw std::logic_error("ga protocol: ask() while a tell() is pending");
  if (max_count < 1) throw std::invalid_argument("ask: max_count < 1");

  if (generation_ == 0) {
    pending_.clear();
    const int n = std::min(max_count, cfg_.pop_size);
    for (int i = 0; i < n; ++i) pending_.push_back(init_(rng_));
  } else {
    pending_ = next_generation();
    if (static_cast<int>(pending_.size()) > max_count)
      pending_.resize(max_count);
  }
  awaiting_tell_ = true;
  return pending_;
}

void GaState::tell(const std::vector<double>& fitnesses) {
  if (!awaiting_tell_)
    throw std::logic_error("ga protocol: tell() without a preceding ask()");
  if (fitnesses.size() != pending_.size())
    throw std::logic_error("ga protocol: fitness count does not match ask()");
  evaluated_.clear();
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    evaluated_.push_back(Individual{pending_[i], fitnesses[i]});
    if (!best_fitness_ || fitnesses[i] < *best_fitness_) {
      best_fitness_ = fitnesses[i];
      best_ = pending_[i];
    }
  }
  pending_.clear();
  awaiting_tell_ = false;
  ++generation_;
}

EvalResult evaluate_candidate(const Genotype& x, const SearchContext& ctx,
                              std::uint64_t seed) {
  if (!ctx.archive || ctx.archive->empty())
    throw std::invalid_argument(
        "evaluate_candidate: empty failure archive; run adversary training "
        "first");
  const auto [config, failure_id] = ctx.bounds.decode(x);
  const auto& actions = (*ctx.archive)[failure_id].adv_actions;

  sim::SimulatorSession session(config, ctx.road, seed);
  const sim::Policy replay = [&actions, &session](const JointState&) {
    const std::size_t t = static_cast<std::size_t>(session.current_step());
    return t < actions.size() ? actions[t] : MetaAction::Idle;
  };
  const Trace trace =
      sim::run_episode(session, ctx.sut_policy, replay, ctx.max_steps);

  EvalResult res;
  res.trace = trace;
  res.classification = safety::classify_failure(trace, ctx.safe);
  res.fitness = reward::fitness(trace, ctx.safe, ctx.rconfig);
  return res;
}

SearchResult run_search(const SearchContext& ctx, const GaConfig& cfg,
                        long budget, std::uint64_t seed) {
  SearchResult out;
  if (budget <= 0) return out;
  const ParamBounds& bounds = ctx.bounds;
  GaState ga(bounds.dimension(), cfg, derive_seed(seed, 50),
             [&bounds](std::mt19937_64& rng) { return bounds.sample(rng); });
  while (out.evaluations < budget) {
    const int want =
        static_cast<int>(std::min<long>(cfg.pop_size, budget - out.evaluations));
    const auto batch = ga.ask(want);
    std::vector<double> fitnesses;
    fitnesses.reserve(batch.size());
    for (const auto& genotype : batch) {
      const std::uint64_t eval_seed =
          derive_seed(seed, 10000 + out.evaluations);
      const EvalResult res = evaluate_candidate(genotype, ctx, eval_seed);
      ++out.evaluations;
      fitnesses.push_back(res.fitness);
      if (res.trace.collided) ++out.collisions;
      if (res.classification.label == safety::Label::Valid) {
        out.failures.push_back(analytics::make_failure_record(
            res.trace, adv_actions_of(res.trace), res.classification, ctx.safe,
            ctx.desc, out.evaluations, ctx.rconfig));
        out.found_at.push_back(out.evaluations);
      }
    }
    ga.tell(fitnesses);
  }
  return out;
}

SearchResult run_random_search(const SearchContext& ctx, long budget,
                               std::uint64_t seed) {
  SearchResult out;
  std::mt19937_64 rng(derive_seed(seed, 51));
  while (out.evaluations < budget) {
    const Genotype x = ctx.bounds.sample(rng);
    const std::uint64_t eval_seed = derive_seed(seed, 10000 + out.evaluations);
    const EvalResult res = evaluate_candidate(x, ctx, eval_seed);
    ++out.evaluations;
    if (res.trace.collided) ++out.collisions;
    if (res.classification.label == safety::Label::Valid) {
      out.failures.push_back(analytics::make_failure_record(
          res.trace, adv_actions_of(res.trace), res.classification, ctx.safe,
          ctx.desc, out.evaluations, ctx.rconfig));
      out.found_at.push_back(out.evaluations);
    }
  }
  return out;
}

}  // namespace dynasto::ga
