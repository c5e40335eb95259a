#include <doctest.h>

#include <algorithm>
#include <random>

#include "dynasto/reward.hpp"
#include "support/fixtures.hpp"

using namespace dynasto;
using namespace dynasto::reward;
using testsupport::Way;

TEST_CASE("collision likelihood: boundary, contact, midpoint") {
  CHECK(collision_likelihood(10.0, 10.0) == doctest::Approx(0.0));
  CHECK(collision_likelihood(0.0, 10.0) == doctest::Approx(1.0));
  CHECK(collision_likelihood(5.0, 10.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(collision_likelihood(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("collision likelihood is in [0,1] and non-increasing in d_c") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(0.0, 60.0);
  std::uniform_real_distribution<double> s(0.1, 60.0);
  for (int i = 0; i < 20000; ++i) {
    const double d_safe = s(rng);
    const double a = d(rng), b = d(rng);
    const double la = collision_likelihood(a, d_safe);
    const double lb = collision_likelihood(b, d_safe);
    CHECK(la >= 0.0);
    CHECK(la <= 1.0);
    if (a <= b) CHECK(la >= lb - 1e-12);
  }
}

namespace {

Trace invalid_brake_trace() {
  return testsupport::classification_fixtures()[4].trace;  // unsafe-brake
}

}  // namespace

TEST_CASE("terminal bonus per classification") {
  const safety::SafeDistanceParams p;
  const RewardConfig rc;
  const auto fixtures = testsupport::classification_fixtures();

  SUBCASE("valid failure pays the full bonus") {
    const auto& valid = fixtures[0];
    const auto cls = safety::classify_failure(valid.trace, p);
    REQUIRE(cls.label == safety::Label::Valid);
    CHECK(terminal_bonus(cls, valid.trace, p, rc) == doctest::Approx(30.0));
  }
  SUBCASE("invalid failure pays the onset violation penalty") {
    const Trace t = invalid_brake_trace();
    const auto cls = safety::classify_failure(t, p);
    REQUIRE(cls.label == safety::Label::Invalid);
    const auto& r = t.steps.at(*cls.onset_step);
    const double d_c = safety::current_distance(r.ego, r.adv);
    const double d_safe = safety::required_safe_distance(r.ego, r.adv, p);
    CHECK(terminal_bonus(cls, t, p, rc) ==
          doctest::Approx(-(d_safe - d_c) / 5.0));
    CHECK(terminal_bonus(cls, t, p, rc) < 0.0);
  }
  SUBCASE("hand-evaluated invalid penalty: d_safe 10, d_c 4 gives -1.2") {
    // synthetic one-step trace matching those distances at the onset
    std::vector<Way> pts(2);
    pts[0].ego_x = 0.0;
    pts[0].adv_x = 20.0;
    pts[1].ego_x = 25.0;
    pts[1].adv_x = 29.0;  // gap 4, same lane, both at 25 m/s
    Trace t = testsupport::make_trace(pts, true);
    safety::Classification cls;
    cls.label = safety::Label::Invalid;
    cls.rule = safety::Rule::UnsafeBrake;
    cls.onset_step = 1;
    CHECK(terminal_bonus(cls, t, p, rc) ==
          doctest::Approx(-1.2).epsilon(1e-9));
  }
  SUBCASE("no collision earns nothing") {
    const auto& none = fixtures[6];
    const auto cls = safety::classify_failure(none.trace, p);
    REQUIRE(cls.label == safety::Label::NoCollision);
    CHECK(terminal_bonus(cls, none.trace, p, rc) == doctest::Approx(0.0));
  }
  SUBCASE("invalid without onset is a contract error") {
    safety::Classification broken;
    broken.label = safety::Label::Invalid;
    CHECK_THROWS_AS(terminal_bonus(broken, fixtures[0].trace, p, rc),
                    std::invalid_argument);
  }
}

TEST_CASE("episode reward composition and bounds") {
  const safety::SafeDistanceParams p;
  const RewardConfig rc;
  for (const auto& f : testsupport::classification_fixtures()) {
    const auto b = episode_breakdown(f.trace, p, rc);
    CHECK(b.total == doctest::Approx(b.shaping_sum + b.terminal));
    CHECK(b.shaping_sum >= 0.0);
    CHECK(b.shaping_sum <=
          static_cast<double>(f.trace.step_count()) + 1e-9);
    CHECK(episode_reward(f.trace, p, rc) <= rc.max_steps + rc.valid_bonus);
    CHECK(fitness(f.trace, p, rc) ==
          doctest::Approx(-episode_reward(f.trace, p, rc)));
  }
}

TEST_CASE("all-zero shaping for a far-apart no-collision trace") {
  std::vector<Way> pts;
  for (int t = 0; t <= 10; ++t) {
    Way w;
    w.ego_x = 25.0 * t;
    w.adv_x = 500.0 + 25.0 * t;
    pts.push_back(w);
  }
  const Trace t = testsupport::make_trace(pts, false);
  CHECK(episode_reward(t, {}, {}) == doctest::Approx(0.0));
}

TEST_CASE("fitness ranks more rewarding traces first under minimization") {
  std::vector<double> fits{-31.7, -5.0, 0.0};
  std::sort(fits.begin(), fits.end());
  CHECK(fits.front() == doctest::Approx(-31.7));
}
