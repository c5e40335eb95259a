#include "dynasto/baselines.hpp"

#include <cmath>

namespace dynasto::baselines {

sim::Policy random_adversary(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const JointState&) {
    std::uniform_int_distribution<int> dist(0, kNumActions - 1);
    return action_from_int(dist(*rng));
  };
}

MetaAction decode_action_component(double x) {
  int bin = static_cast<int>(std::floor(x * kNumActions));
  bin = std::clamp(bin, 0, kNumActions - 1);
  return action_from_int(bin);
}

double base_reward(const Trace& trace, const safety::SafeDistanceParams& p,
                   const reward::RewardConfig& rc) {
  double r = 0.0;
  for (std::size_t t = 1; t < trace.steps.size(); ++t)
    r += reward::shaping_at(trace.steps[t], p);
  if (trace.collided) r += rc.valid_bonus;
  return r;
}

RolloutResult run_random_adversary(const sim::Policy& sut_policy,
                                   long budget_env_steps,
                                   const rl::AdversaryTrainOptions& opt,
                                   std::uint64_t seed) {
  RolloutResult out;
  std::mt19937_64 rng(derive_seed(seed, 3));
  auto sampler = opt.config_sampler;
  if (!sampler)
    sampler = [](std::mt19937_64& r) { return rl::ScenarioSampler{}.sample(r); };
  std::uniform_int_distribution<int> action_dist(0, kNumActions - 1);

  while (out.env_steps < budget_env_steps) {
    const ScenarioConfig config = sampler(rng);
    sim::SimulatorSession session(config, opt.road,
                                  derive_seed(seed, 4000 + out.episodes));
    while (!session.terminated() &&
           session.current_step() < opt.hyper.max_episode_steps &&
           out.env_steps < budget_env_steps) {
      const MetaAction ego_action = sut_policy(session.joint_state());
      const MetaAction adv_action = action_from_int(action_dist(rng));
      session.step(ego_action, adv_action);
      ++out.env_steps;
    }
    ++out.episodes;
    const Trace& trace = session.trace();
    if (trace.collided) {
      ++out.collisions;
      const auto cls = safety::classify_failure(trace, opt.safe);
      if (cls.label == safety::Label::Valid) {
        out.failures.push_back(analytics::make_failure_record(
            trace, adv_actions_of(trace), cls, opt.safe, opt.desc,
            out.env_steps, opt.rconfig));
        out.found_at.push_back(out.env_steps);
      }
    }
  }
  return out;
}

RolloutResult ga_action_search(const sim::Policy& sut_policy, long budget,
                               const ga::GaConfig& cfg,
                               const rl::AdversaryTrainOptions& opt,
                               std::uint64_t seed) {
  RolloutResult out;
  if (budget <= 0) return out;

  // One fixed Step-1 style configuration; only the action sequence evolves.
  ScenarioConfig config;
  config.x_ego = 255.0;
  config.x_adv = 311.0;
  config.l_ego = config.tl_ego = 1;
  config.l_adv = config.tl_adv = 1;
  config.s_ego = config.s_adv = 25.0;

  ga::GaState state(opt.hyper.max_episode_steps, cfg, derive_seed(seed, 60));
  while (out.evaluations < budget) {
    const int want = static_cast<int>(
        std::min<long>(cfg.pop_size, budget - out.evaluations));
    const auto batch = state.ask(want);
    std::vector<double> fitnesses;
    for (const auto& genotype : batch) {
      sim::SimulatorSession session(
          config, opt.road, derive_seed(seed, 5000 + out.evaluations));
      const sim::Policy open_loop = [&genotype, &session](const JointState&) {
        const std::size_t t = static_cast<std::size_t>(session.current_step());
        return t < genotype.size() ? decode_action_component(genotype[t])
                                   : MetaAction::Idle;
      };
      const Trace trace = sim::run_episode(session, sut_policy, open_loop,
                                           opt.hyper.max_episode_steps);
      ++out.evaluations;
      out.env_steps += trace.step_count();
      ++out.episodes;
      fitnesses.push_back(reward::fitness(trace, opt.safe, opt.rconfig));
      if (trace.collided) {
        ++out.collisions;
        const auto cls = safety::classify_failure(trace, opt.safe);
        if (cls.label == safety::Label::Valid) {
          out.failures.push_back(analytics::make_failure_record(
              trace, adv_actions_of(trace), cls, opt.safe, opt.desc,
              out.evaluations, opt.rconfig));
          out.found_at.push_back(out.evaluations);
        }
      }
    }
    state.tell(fitnesses);
  }
  return out;
}

RolloutResult coevolve(const sim::Policy& sut_policy, ProposerMode mode,
                       long budget_env_steps,
                       const rl::AdversaryTrainOptions& opt,
                       const ga::GaConfig& cfg, std::uint64_t seed) {
  // Chromosome omits the failure-selection gene: ten scenario parameters.
  const ga::ParamBounds bounds = ga::ParamBounds::defaults(0);

  struct Proposer {
    ga::ParamBounds bounds;
    std::unique_ptr<ga::GaState> state;
    std::vector<ga::Genotype> batch;
    std::vector<double> fitnesses;
    std::size_t next = 0;
  };
  auto prop = std::make_shared<Proposer>();
  prop->bounds = bounds;
  if (mode == ProposerMode::Ga) {
    const ga::ParamBounds b = bounds;
    prop->state = std::make_unique<ga::GaState>(
        bounds.dimension(), cfg, derive_seed(seed, 70),
        [b](std::mt19937_64& rng) { return b.sample(rng); });
  }

  rl::AdversaryTrainOptions copt = opt;
  copt.budget_env_steps = budget_env_steps;
  if (mode == ProposerMode::Random) {
    copt.config_sampler = [prop](std::mt19937_64& rng) {
      return prop->bounds.decode(prop->bounds.sample(rng)).first;
    };
  } else {
    copt.config_sampler = [prop, &cfg](std::mt19937_64&) {
      if (prop->next >= prop->batch.size()) {
        if (!prop->batch.empty()) prop->state->tell(prop->fitnesses);
        prop->batch = prop->state->ask(cfg.pop_size);
        prop->fitnesses.clear();
        prop->next = 0;
      }
      return prop->bounds.decode(prop->batch[prop->next]).first;
    };
    copt.on_episode = [prop](const Trace&, double episode_return) {
      prop->fitnesses.push_back(-episode_return);
      ++prop->next;
    };
  }

  const auto train = rl::train_adversary(sut_policy, copt, seed);
  RolloutResult out;
  out.failures = train.archive;
  out.env_steps = train.env_steps;
  out.episodes = train.episodes;
  out.collisions = train.collisions;
  for (const auto& f : out.failures) out.found_at.push_back(f.discovered_at);
  return out;
}

}  // namespace dynasto::baselines
