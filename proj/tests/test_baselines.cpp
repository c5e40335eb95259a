#include <doctest.h>

#include <cmath>

#include "dynasto/baselines.hpp"
#include "support/fixtures.hpp"

using namespace dynasto;
using namespace dynasto::baselines;

TEST_CASE("random adversary is uniform, seeded and observation-independent") {
  auto policy = random_adversary(5);
  JointState near, far;
  far.adv.x = 1000.0;
  std::array<long, 5> counts{};
  const long n = 100000;
  for (long i = 0; i < n; ++i)
    ++counts[static_cast<int>(policy(i % 2 ? near : far))];
  const double sigma = std::sqrt(n * 0.2 * 0.8);
  for (long c : counts) CHECK(std::abs(c - n / 5.0) <= 3.0 * sigma);

  auto a = random_adversary(17);
  auto b = random_adversary(17);
  for (int i = 0; i < 200; ++i) CHECK(a(near) == b(far));
}

TEST_CASE("action components bin into five equal slots") {
  CHECK(decode_action_component(0.05) == MetaAction::LaneLeft);
  CHECK(decode_action_component(0.99) == MetaAction::Slower);
  CHECK(decode_action_component(0.21) == MetaAction::Idle);
  CHECK(decode_action_component(0.41) == MetaAction::LaneRight);
  CHECK(decode_action_component(0.61) == MetaAction::Faster);
  CHECK(decode_action_component(1.0) == MetaAction::Slower);
}

TEST_CASE("base reward differs from the validity-aware reward only on "
          "invalid collisions") {
  const safety::SafeDistanceParams p;
  const reward::RewardConfig rc;
  for (const auto& f : testsupport::classification_fixtures()) {
    const double base = base_reward(f.trace, p, rc);
    const double aware = reward::episode_reward(f.trace, p, rc);
    const auto cls = safety::classify_failure(f.trace, p);
    if (cls.label == safety::Label::Invalid) {
      CHECK(base > aware);
    } else {
      CHECK(base == doctest::Approx(aware));
    }
  }
}

TEST_CASE("random rollouts consume the step budget exactly") {
  rl::AdversaryTrainOptions opt;
  const sim::Policy idle = [](const JointState&) { return MetaAction::Idle; };
  const auto res = run_random_adversary(idle, 333, opt, 2);
  CHECK(res.env_steps == 333);
  for (const auto& f : res.failures)
    CHECK(safety::classify_failure(f.trace, opt.safe).label ==
          safety::Label::Valid);

  const auto res2 = run_random_adversary(idle, 333, opt, 2);
  CHECK(res2.failures.size() == res.failures.size());
  CHECK(res2.collisions == res.collisions);
}

TEST_CASE("ga over action sequences consumes the evaluation budget") {
  rl::AdversaryTrainOptions opt;
  ga::GaConfig cfg;
  cfg.pop_size = 10;
  const sim::Policy idle = [](const JointState&) { return MetaAction::Idle; };
  const auto res = ga_action_search(idle, 37, cfg, opt, 6);
  CHECK(res.evaluations == 37);
  CHECK(res.episodes == 37);
  for (const auto& f : res.failures) {
    CHECK(f.classification.label == safety::Label::Valid);
    CHECK(f.adv_actions.size() ==
          static_cast<std::size_t>(f.trace.step_count()));
  }
}

TEST_CASE("co-evolution consumes the environment-step budget exactly") {
  rl::AdversaryTrainOptions opt;
  opt.hyper.warmup_steps = 50;
  ga::GaConfig cfg;
  cfg.pop_size = 10;
  const sim::Policy idle = [](const JointState&) { return MetaAction::Idle; };

  const auto rs = coevolve(idle, ProposerMode::Random, 240, opt, cfg, 4);
  CHECK(rs.env_steps == 240);
  const auto gam = coevolve(idle, ProposerMode::Ga, 240, opt, cfg, 4);
  CHECK(gam.env_steps == 240);
  for (const auto& f : gam.failures)
    CHECK(f.classification.label == safety::Label::Valid);
}

TEST_CASE("co-evolution proposals stay within the scenario bounds") {
  // the proposer draws uniformly from the canonicalized parameter table
  const auto bounds = ga::ParamBounds::defaults(0);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 2000; ++i) {
    const auto [c, id] = bounds.decode(bounds.sample(rng));
    CHECK(c.x_ego >= 247.0);
    CHECK(c.x_ego <= 304.0);
    CHECK(c.x_adv >= 364.0);
    CHECK(c.x_adv <= 395.0);
    CHECK(c.l_ego >= 0);
    CHECK(c.l_ego <= 1);
    CHECK(std::abs(c.h_adv) <= 0.08);
    CHECK(c.s_adv >= 20.0);
    CHECK(c.s_adv <= 29.0);
    CHECK(id == 0);
  }
}
