#include "support/fixtures.hpp"

#include <cmath>
#include <random>

namespace testsupport {

using namespace dynasto;

Trace make_trace(const std::vector<Way>& pts, bool collided) {
  const RoadConfig road;
  Trace t;
  t.seed = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& w = pts[i];
    StepRecord r;
    r.t = static_cast<int>(i);
    r.ego.x = w.ego_x;
    r.ego.y = w.ego_y;
    r.ego.vx = w.ego_vx;
    r.ego.lane_index = road.lane_at(w.ego_y);
    r.ego.target_lane = r.ego.lane_index;
    r.adv.x = w.adv_x;
    r.adv.y = w.adv_y;
    r.adv.vx = w.adv_vx;
    r.adv.vy = w.adv_vy;
    r.adv.lane_index = road.lane_at(w.adv_y);
    r.adv.target_lane = r.adv.lane_index;
    if (i > 0) {
      r.a_ego = r.ego.speed() - t.steps[i - 1].ego.speed();
      r.a_adv = r.adv.speed() - t.steps[i - 1].adv.speed();
    }
    t.steps.push_back(r);
  }
  t.config.x_ego = pts.front().ego_x;
  t.config.x_adv = pts.front().adv_x;
  t.config.l_ego = road.lane_at(pts.front().ego_y);
  t.config.l_adv = road.lane_at(pts.front().adv_y);
  t.config.tl_ego = t.config.l_ego;
  t.config.tl_adv = t.config.l_adv;
  t.config.s_ego = pts.front().ego_vx;
  t.config.s_adv = pts.front().adv_vx;
  if (collided) {
    t.collided = true;
    t.collision_step = static_cast<int>(pts.size()) - 1;
  }
  return t;
}

namespace {

using safety::Label;
using safety::Rule;

// Straight-line cut-in: the adversary starts `gap0` ahead in lane 1 and
// merges into the ego's lane at step 2; speeds stay constant.
std::vector<Way> cut_in_waypoints(double gap0, double ego_v, double adv_v,
                                  int last_step) {
  std::vector<Way> pts;
  for (int t = 0; t <= last_step; ++t) {
    Way w;
    w.ego_x = ego_v * t;
    w.ego_vx = ego_v;
    w.adv_x = gap0 + adv_v * t;
    w.adv_vx = adv_v;
    w.adv_y = t == 0 ? 4.0 : (t == 1 ? 3.0 : (t == 2 ? 1.5 : 0.0));
    pts.push_back(w);
  }
  return pts;
}

// Same-lane lead vehicle braking at a fixed rate from step 2 on.
std::vector<Way> brake_waypoints(double gap0, double decel, int last_step) {
  std::vector<Way> pts;
  double adv_v = 25.0, adv_x = gap0;
  for (int t = 0; t <= last_step; ++t) {
    if (t >= 2) adv_v = std::max(5.0, adv_v - decel);
    if (t > 0) adv_x += adv_v;
    Way w;
    w.ego_x = 25.0 * t;
    w.adv_x = adv_x;
    w.adv_vx = adv_v;
    pts.push_back(w);
  }
  return pts;
}

}  // namespace

std::vector<ClassificationFixture> classification_fixtures() {
  std::vector<ClassificationFixture> out;

  // Cut-in from a safe longitudinal gap, ego tailgates into the collision.
  out.push_back({"safe-cut-in",
                 make_trace(cut_in_waypoints(40.0, 28.0, 25.0, 12), true),
                 Label::Valid, std::nullopt, std::nullopt});

  // Cut-in below the safe gap.
  out.push_back({"unsafe-cut-in",
                 make_trace(cut_in_waypoints(14.0, 28.0, 25.0, 4), true),
                 Label::Invalid, Rule::UnsafeCutIn, 2});

  // Side-by-side merge into the ego (always below the minimum gap).
  {
    std::vector<Way> pts;
    for (int t = 0; t <= 2; ++t) {
      Way w;
      w.ego_x = 25.0 * t;
      w.adv_x = 2.0 + 25.0 * t;
      w.adv_y = t == 2 ? 1.5 : 4.0 - t;
      pts.push_back(w);
    }
    out.push_back({"side-cut-in", make_trace(pts, true), Label::Invalid,
                   Rule::UnsafeCutIn, 2});
  }

  // Lead vehicle brakes from a safe headway; the ego never reacts.
  out.push_back({"safe-brake",
                 make_trace(brake_waypoints(45.0, 3.0, 6), true), Label::Valid,
                 std::nullopt, std::nullopt});

  // Lead vehicle brakes with the gap already unsafe.
  out.push_back({"unsafe-brake",
                 make_trace(brake_waypoints(12.0, 3.0, 3), true),
                 Label::Invalid, Rule::UnsafeBrake, 2});

  // Adversary accelerates into the ego's rear.
  {
    std::vector<Way> pts;
    double adv_v = 25.0, adv_x = -10.0;
    for (int t = 0; t <= 3; ++t) {
      if (t >= 2) adv_v += 2.0;
      if (t > 0) adv_x += adv_v;
      Way w;
      w.ego_x = 25.0 * t;
      w.adv_x = adv_x;
      w.adv_vx = adv_v;
      pts.push_back(w);
    }
    out.push_back({"rear-hit", make_trace(pts, true), Label::Invalid,
                   Rule::RearHit, 2});
  }

  // Parallel motion, no contact.
  {
    std::vector<Way> pts;
    for (int t = 0; t <= 10; ++t) {
      Way w;
      w.ego_x = 25.0 * t;
      w.adv_x = 30.0 + 25.0 * t;
      w.adv_y = 4.0;
      pts.push_back(w);
    }
    out.push_back({"no-collision", make_trace(pts, false), Label::NoCollision,
                   std::nullopt, std::nullopt});
  }

  // Cut-in exactly at the safe boundary, a hair above and below.
  // d_safe_lon(25, 26) = 15.3 for the default parameters; the gap at the
  // lane-change step is gap0 - 2 (ego closes 1 m/s).
  out.push_back({"cut-in-boundary-above",
                 make_trace(cut_in_waypoints(17.301, 26.0, 25.0, 13), true),
                 Label::Valid, std::nullopt, std::nullopt});
  out.push_back({"cut-in-boundary-below",
                 make_trace(cut_in_waypoints(17.299, 26.0, 25.0, 13), true),
                 Label::Invalid, Rule::UnsafeCutIn, 2});

  // Brake onset exactly at the boundary: d_safe_lon(22, 25) = 24.1 and the
  // onset gap is gap0 - 3.
  out.push_back({"brake-boundary-above",
                 make_trace(brake_waypoints(27.101, 3.0, 5), true),
                 Label::Valid, std::nullopt, std::nullopt});
  out.push_back({"brake-boundary-below",
                 make_trace(brake_waypoints(27.099, 3.0, 5), true),
                 Label::Invalid, Rule::UnsafeBrake, 2});

  // Ego side-swipes the adversary during its own lane change.
  {
    std::vector<Way> pts;
    for (int t = 0; t <= 2; ++t) {
      Way w;
      w.ego_x = 25.0 * t;
      w.ego_y = t == 2 ? 2.5 : static_cast<double>(t);
      w.adv_x = 2.0 + 25.0 * t;
      w.adv_y = 4.0;
      pts.push_back(w);
    }
    out.push_back({"ego-side-swipe", make_trace(pts, true), Label::Valid,
                   std::nullopt, std::nullopt});
  }

  // Adversary merges from behind the ego: no rule covers it.
  {
    std::vector<Way> pts;
    for (int t = 0; t <= 2; ++t) {
      Way w;
      w.ego_x = 25.0 * t;
      w.adv_x = -2.0 + 25.0 * t;
      w.adv_y = t == 2 ? 1.5 : 4.0 - t;
      pts.push_back(w);
    }
    out.push_back({"behind-side-merge", make_trace(pts, true), Label::Valid,
                   std::nullopt, std::nullopt});
  }

  // Both vehicles swap lanes in the same step; neither lane-change
  // predicate holds.
  {
    std::vector<Way> pts;
    for (int t = 0; t <= 2; ++t) {
      Way w;
      w.ego_x = 25.0 * t;
      w.ego_y = t == 2 ? 2.5 : static_cast<double>(t);
      w.adv_x = 2.0 + 25.0 * t;
      w.adv_y = t == 2 ? 1.5 : 4.0 - t;
      pts.push_back(w);
    }
    out.push_back({"simultaneous-swap", make_trace(pts, true), Label::Valid,
                   std::nullopt, std::nullopt});
  }

  return out;
}

LabeledEvents labeled_event_fixture() {
  // Class sizes and trace lengths mirror the pools the pipeline produces:
  // a few dominant modes, a couple of rare ones, lengths from immediate
  // side contacts to long quiet approaches.
  LabeledEvents out;
  auto add = [&](int label, std::vector<int> v) {
    out.events.push_back(std::move(v));
    out.labels.push_back(label);
  };
  auto repeated = [](int code, int n) { return std::vector<int>(n, code); };
  auto concat = [](std::initializer_list<std::vector<int>> parts) {
    std::vector<int> v;
    for (const auto& p : parts) v.insert(v.end(), p.begin(), p.end());
    return v;
  };

  for (int i = 0; i < 25; ++i) {  // long quiet approach into the collision
    const int j = i % 3;
    add(0, concat({repeated(0, 21 + j), {999}}));
  }
  for (int i = 0; i < 20; ++i) {  // late same-lane braking
    const int j = i % 3;
    add(1, concat({repeated(0, 13 + j), repeated(7, 3 + i % 2), {999}}));
  }
  for (int i = 0; i < 15; ++i) {  // early cut-in, then a free run
    const int j = i % 3;
    add(2, concat({{0, 0, 6}, repeated(0, 9 + j), {999}}));
  }
  for (int i = 0; i < 15; ++i) {  // cut-in followed by braking
    const int j = i % 2;
    add(3, concat({{0, 0, 6, 0, 0}, repeated(7, 3 + j), {999}}));
  }
  for (int i = 0; i < 10; ++i) {  // different-lane braking harassment
    const int j = i % 3;
    add(4, concat({repeated(0, 5 + j), repeated(8, 5 + i % 2), {999}}));
  }
  for (int i = 0; i < 9; ++i) {  // cut-out, then braking in the other lane
    const int j = i % 2;
    add(5, concat({{0, 0, 5, 0}, repeated(8, 3 + j), {999}}));
  }
  for (int i = 0; i < 6; ++i) {  // immediate side cut-in
    add(6, concat({repeated(0, 2 + i % 2), {4, 999}}));
  }
  return out;
}

DedupFixture dedup_fixture(std::uint64_t seed) {
  DedupFixture out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> close(0.05, 0.45);
  std::uniform_real_distribution<double> far(0.55, 3.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int dim = 24;
  auto random_vec = [&] {
    std::vector<double> v(dim);
    for (double& x : v) x = coord(rng);
    return v;
  };
  auto at_distance = [&](const std::vector<double>& base, double d) {
    std::vector<double> dir(dim);
    double norm = 0.0;
    for (double& x : dir) {
      x = gauss(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<double> v = base;
    for (int i = 0; i < dim; ++i) v[i] += d * dir[i] / norm;
    return v;
  };

  for (int i = 0; i < 50; ++i) {
    const auto base = random_vec();
    out.pairs.emplace_back(base, at_distance(base, close(rng)));
    out.similar.push_back(true);
  }
  for (int i = 0; i < 50; ++i) {
    const auto base = random_vec();
    out.pairs.emplace_back(base, at_distance(base, far(rng)));
    out.similar.push_back(false);
  }
  return out;
}

}  // namespace testsupport
