#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dynasto/analytics.hpp"
#include "support/fixtures.hpp"

using namespace dynasto;
using namespace dynasto::analytics;
using testsupport::Way;

namespace {

// Full-matrix dynamic-programming edit distance, kept independent of the
// implementation under test.
int levenshtein_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  return d[n][m];
}

std::vector<int> random_events(std::mt19937_64& rng, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> code(0, 8);
  std::vector<int> v(len(rng));
  for (int& c : v) c = code(rng);
  return v;
}

FailureRecord record_with_events(std::vector<int> events) {
  FailureRecord r;
  r.events = std::move(events);
  r.classification.label = safety::Label::Valid;
  return r;
}

SimilarityGraph two_cliques(int size) {
  SimilarityGraph g;
  g.n = 2 * size;
  g.adj.resize(g.n);
  for (int i = 0; i < size; ++i)
    for (int j = i + 1; j < size; ++j) {
      g.add_edge(i, j, 1.0);
      g.add_edge(size + i, size + j, 1.0);
    }
  return g;
}

}  // namespace

TEST_CASE("descriptive vector: stationary relative motion repeats a triple") {
  std::vector<Way> pts;
  for (int t = 0; t <= 12; ++t) {
    Way w;
    w.ego_x = 25.0 * t;
    w.adv_x = 20.0 + 25.0 * t;
    pts.push_back(w);
  }
  const Trace trace = testsupport::make_trace(pts, true);
  const auto v = descriptive_vector(trace);
  REQUIRE(v.size() == 24);
  for (int k = 1; k < 8; ++k) {
    CHECK(v[3 * k] == doctest::Approx(v[0]));
    CHECK(v[3 * k + 1] == doctest::Approx(v[1]));
    CHECK(v[3 * k + 2] == doctest::Approx(v[2]));
  }
}

TEST_CASE("descriptive vector pads short traces with the first record") {
  std::vector<Way> pts(3);
  for (int t = 0; t < 3; ++t) {
    pts[t].ego_x = 25.0 * t;
    pts[t].adv_x = 8.0 + 20.0 * t;  // distinct relative motion per step
    pts[t].adv_vx = 20.0;
  }
  const Trace trace = testsupport::make_trace(pts, true);
  const auto v = descriptive_vector(trace);
  REQUIRE(v.size() == 24);
  const double first_dx = (pts[0].adv_x - pts[0].ego_x) / DescriptiveParams{}.x_scale;
  for (int k = 0; k < 6; ++k)
    CHECK(v[3 * k] == doctest::Approx(first_dx));
  CHECK(v[18] == doctest::Approx((pts[1].adv_x - pts[1].ego_x) / DescriptiveParams{}.x_scale));
  CHECK(v[21] == doctest::Approx((pts[2].adv_x - pts[2].ego_x) / DescriptiveParams{}.x_scale));
}

TEST_CASE("descriptive vector on a hand-built eight-step trace") {
  std::vector<Way> pts;
  for (int t = 0; t <= 8; ++t) {
    Way w;
    w.ego_x = 25.0 * t;
    w.adv_x = 40.0 + 22.0 * t;
    w.adv_y = 4.0;
    w.adv_vx = 22.0;
    pts.push_back(w);
  }
  const Trace trace = testsupport::make_trace(pts, true);
  const DescriptiveParams p;
  const auto v = descriptive_vector(trace, p);
  for (int k = 0; k < 8; ++k) {
    const int t = k + 1;
    CHECK(v[3 * k] ==
          doctest::Approx((40.0 - 3.0 * t) / p.x_scale).epsilon(1e-12));
    CHECK(v[3 * k + 1] == doctest::Approx(4.0 / p.y_scale));
    CHECK(v[3 * k + 2] == doctest::Approx(-3.0 / p.v_scale));
  }
}

TEST_CASE("descriptive vector requires a collision") {
  std::vector<Way> pts(3);
  CHECK_THROWS_AS(descriptive_vector(testsupport::make_trace(pts, false)),
                  std::invalid_argument);
}

TEST_CASE("duplicate test is strict at the threshold") {
  const std::vector<double> a(24, 0.0);
  std::vector<double> b = a;
  CHECK(is_duplicate(a, b, 0.5));
  b[0] = 0.5;  // distance exactly 0.5
  CHECK_FALSE(is_duplicate(a, b, 0.5));
  b[0] = 0.499;
  CHECK(is_duplicate(a, b, 0.5));
}

TEST_CASE("event extraction reproduces the cut-in-then-brake sequence") {
  std::vector<Way> pts;
  double adv_v = 25.0, adv_x = 30.0;
  for (int t = 0; t <= 8; ++t) {
    if (t == 6 || t == 7) adv_v -= 8.0;  // hard braking
    if (t > 0) adv_x += adv_v;
    Way w;
    w.ego_x = 25.0 * t;
    w.adv_x = adv_x;
    w.adv_vx = adv_v;
    w.adv_y = t < 3 ? 4.0 : (t == 3 ? 1.5 : 0.0);
    pts.push_back(w);
  }
  const Trace trace = testsupport::make_trace(pts, true);
  const auto events = extract_events(trace, {});
  CHECK(events == std::vector<int>{0, 0, 0, 6, 0, 0, 7, 7, 999});
}

TEST_CASE("no events and no collision give an all-zero vector") {
  std::vector<Way> pts;
  for (int t = 0; t <= 6; ++t) {
    Way w;
    w.ego_x = 25.0 * t;
    w.adv_x = 200.0 + 25.0 * t;
    w.adv_y = 4.0;
    pts.push_back(w);
  }
  const auto events =
      extract_events(testsupport::make_trace(pts, false), {});
  CHECK(events == std::vector<int>(7, 0));
}

TEST_CASE("simultaneous cut-in and brake sum their codes") {
  std::vector<Way> pts;
  double adv_v = 25.0, adv_x = 30.0;
  for (int t = 0; t <= 5; ++t) {
    if (t == 3) adv_v -= 2.0;  // brake exactly at the lane change
    if (t > 0) adv_x += adv_v;
    Way w;
    w.ego_x = 25.0 * t;
    w.adv_x = adv_x;
    w.adv_vx = adv_v;
    w.adv_y = t < 3 ? 4.0 : (t == 3 ? 1.5 : 0.0);
    pts.push_back(w);
  }
  const auto events =
      extract_events(testsupport::make_trace(pts, true), {});
  CHECK(events[3] == 13);
  CHECK(events.back() == 999);
}

TEST_CASE("ego lane changes map to ego event codes") {
  std::vector<Way> pts;
  for (int t = 0; t <= 5; ++t) {
    Way w;
    w.ego_x = 25.0 * t;
    w.ego_y = t < 3 ? 0.0 : (t == 3 ? 2.5 : 4.0);
    w.adv_x = -20.0 + 25.0 * t;  // adversary behind in lane 1
    w.adv_y = 4.0;
    pts.push_back(w);
  }
  const auto events =
      extract_events(testsupport::make_trace(pts, true), {});
  CHECK(events[3] == kEventCutInEgo);
}

TEST_CASE("levenshtein basics and the classic example") {
  CHECK(levenshtein({}, {}) == 0);
  CHECK(levenshtein({0, 6, 999}, {0, 6, 999}) == 0);
  CHECK(levenshtein({0, 6, 999}, {0, 7, 999}) == 1);
  // "kitten" / "sitting" with letters mapped to codes
  const std::vector<int> kitten{10, 1, 2, 2, 3, 4};
  const std::vector<int> sitting{5, 1, 2, 2, 1, 4, 6};
  CHECK(levenshtein(kitten, sitting) == 3);
}

TEST_CASE("levenshtein equals the DP oracle and is a metric") {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_events(rng, 18);
    const auto b = random_events(rng, 18);
    CHECK(levenshtein(a, b) == levenshtein_oracle(a, b));
  }
  for (int i = 0; i < 300; ++i) {
    const auto a = random_events(rng, 10);
    const auto b = random_events(rng, 10);
    const auto c = random_events(rng, 10);
    const int ab = levenshtein(a, b);
    const int ba = levenshtein(b, a);
    CHECK(ab == ba);
    CHECK(levenshtein(a, c) <= ab + levenshtein(b, c));
    CHECK((levenshtein(a, b) == 0) == (a == b));
  }
}

TEST_CASE("knn graph on a three-node example") {
  std::vector<std::vector<double>> d{{0, 1, 5}, {1, 0, 6}, {5, 6, 0}};
  const auto g = knn_graph(d, 1);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(0, 2));
  CHECK_FALSE(g.has_edge(1, 2));
  // weights are 1/(1+d)
  for (const auto& [j, w] : g.adj[0]) {
    if (j == 1) CHECK(w == doctest::Approx(0.5));
    if (j == 2) CHECK(w == doctest::Approx(1.0 / 6.0));
  }
}

TEST_CASE("knn graph: duplicate items get weight one, degree >= k") {
  std::vector<std::vector<double>> d(6, std::vector<double>(6, 2.0));
  for (int i = 0; i < 6; ++i) d[i][i] = 0.0;
  d[0][1] = d[1][0] = 0.0;  // exact duplicates
  const auto g = knn_graph(d, 2);
  bool found = false;
  for (const auto& [j, w] : g.adj[0])
    if (j == 1) {
      found = true;
      CHECK(w == doctest::Approx(1.0));
    }
  CHECK(found);
  for (int i = 0; i < g.n; ++i) CHECK(g.adj[i].size() >= 2);
  CHECK_THROWS_AS(knn_graph(d, 6), std::invalid_argument);
}

TEST_CASE("modularity closed forms") {
  const auto g = two_cliques(5);
  std::vector<int> split(10, 0);
  for (int i = 5; i < 10; ++i) split[i] = 1;
  CHECK(modularity(g, split) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(modularity(g, std::vector<int>(10, 0)) ==
        doctest::Approx(0.0).epsilon(1e-15));

  // two disconnected single edges with the crossed partition
  SimilarityGraph pairs;
  pairs.n = 4;
  pairs.adj.resize(4);
  pairs.add_edge(0, 1, 1.0);
  pairs.add_edge(2, 3, 1.0);
  CHECK(modularity(pairs, {0, 0, 1, 1}) == doctest::Approx(0.5));
  CHECK(modularity(pairs, {0, 1, 0, 1}) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(modularity(pairs, {0, 1, 0}), std::invalid_argument);
}

TEST_CASE("leiden separates two disconnected cliques") {
  const auto g = two_cliques(5);
  const auto part = leiden_cluster(g, 1.0, 3);
  CHECK(part.community_count() == 2);
  CHECK(part.modularity == doctest::Approx(0.5));
  for (int i = 0; i < 5; ++i) {
    CHECK(part.community[i] == part.community[0]);
    CHECK(part.community[5 + i] == part.community[5]);
  }
  CHECK(part.community[0] != part.community[5]);
}

TEST_CASE("leiden on a single node") {
  SimilarityGraph g;
  g.n = 1;
  g.adj.resize(1);
  const auto part = leiden_cluster(g, 1.0, 0);
  CHECK(part.community == std::vector<int>{0});
  CHECK(part.modularity == doctest::Approx(0.0));
}

TEST_CASE("leiden never loses to the singleton partition and is "
          "deterministic with connected communities") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 24;
    SimilarityGraph g;
    g.n = n;
    g.adj.resize(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (unit(rng) < 0.15) g.add_edge(i, j, 0.2 + unit(rng));

    std::vector<int> singleton(n);
    std::iota(singleton.begin(), singleton.end(), 0);
    const auto part = leiden_cluster(g, 1.0, 7);
    CHECK(part.modularity >= modularity(g, singleton) - 1e-12);
    CHECK(part.modularity ==
          doctest::Approx(modularity(g, part.community)).epsilon(1e-12));

    const auto again = leiden_cluster(g, 1.0, 7);
    CHECK(again.community == part.community);

    // every community induces a connected subgraph
    const int n_comm = part.community_count();
    for (int c = 0; c < n_comm; ++c) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i)
        if (part.community[i] == c) members.push_back(i);
      REQUIRE(!members.empty());
      std::vector<char> seen(n, 0);
      std::vector<int> stack{members[0]};
      seen[members[0]] = 1;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (const auto& [j, w] : g.adj[v])
          if (!seen[j] && part.community[j] == c) {
            seen[j] = 1;
            stack.push_back(j);
          }
      }
      for (int m : members) CHECK(seen[m] == 1);
    }
  }
}

TEST_CASE("cluster_failures: duplicates collapse to one mode") {
  std::vector<FailureRecord> pool;
  for (int i = 0; i < 10; ++i)
    pool.push_back(record_with_events({0, 0, 6, 0, 999}));
  const auto rep = cluster_failures(pool, 10, 1, {});
  CHECK(rep.partition.community_count() == 1);
  CHECK(rep.exemplar.size() == 1);
}

TEST_CASE("cluster_failures separates cut-in and brake pools purely") {
  std::vector<FailureRecord> pool;
  for (int i = 0; i < 30; ++i)
    pool.push_back(record_with_events({0, 0, 6, 0, 0, 0, 999}));
  for (int i = 0; i < 30; ++i)
    pool.push_back(record_with_events({0, 0, 7, 7, 7, 7, 7, 999}));
  const auto rep = cluster_failures(pool, 10, 2, {});
  REQUIRE(rep.partition.community_count() == 2);
  for (int i = 1; i < 30; ++i)
    CHECK(rep.partition.community[i] == rep.partition.community[0]);
  for (int i = 31; i < 60; ++i)
    CHECK(rep.partition.community[i] == rep.partition.community[30]);
  CHECK(rep.partition.community[0] != rep.partition.community[30]);

  // exemplars are medoids of their community
  const auto dist = pairwise_levenshtein([&] {
    std::vector<std::vector<int>> ev;
    for (const auto& r : pool) ev.push_back(r.events);
    return ev;
  }());
  for (int c = 0; c < 2; ++c) {
    const int ex = rep.exemplar[c];
    double best = 1e300;
    int best_i = -1;
    for (int i = 0; i < 60; ++i) {
      if (rep.partition.community[i] != c) continue;
      double total = 0.0;
      for (int j = 0; j < 60; ++j)
        if (rep.partition.community[j] == c) total += dist[i][j];
      if (total < best) {
        best = total;
        best_i = i;
      }
    }
    double ex_total = 0.0;
    for (int j = 0; j < 60; ++j)
      if (rep.partition.community[j] == c) ex_total += dist[ex][j];
    CHECK(ex_total == doctest::Approx(best));
    CHECK(rep.partition.community[ex] == c);
    (void)best_i;
  }
}

TEST_CASE("jittered class pools may refine but never mix classes") {
  std::vector<FailureRecord> pool;
  for (int i = 0; i < 30; ++i) {
    std::vector<int> v{0, 0, 6, 0, 0, 0, 999};
    if (i % 4 == 1) v.insert(v.begin() + 5, 0);
    if (i % 4 == 2) v.insert(v.begin() + 2, 0);
    if (i % 4 == 3) v.erase(v.begin() + 4);
    pool.push_back(record_with_events(std::move(v)));
  }
  for (int i = 0; i < 30; ++i) {
    std::vector<int> v{0, 0, 7, 7, 7, 7, 7, 999};
    if (i % 4 == 1) v.insert(v.begin() + 2, 7);
    if (i % 4 == 2) v.insert(v.begin(), 0);
    if (i % 4 == 3) v.erase(v.begin() + 3);
    pool.push_back(record_with_events(std::move(v)));
  }
  const auto rep = cluster_failures(pool, 10, 2, {});
  CHECK(rep.partition.community_count() >= 2);
  for (int c = 0; c < rep.partition.community_count(); ++c) {
    bool has_cut_in = false, has_brake = false;
    for (int i = 0; i < 60; ++i)
      if (rep.partition.community[i] == c)
        (i < 30 ? has_cut_in : has_brake) = true;
    CHECK_FALSE((has_cut_in && has_brake));
  }
}

TEST_CASE("seven-class labeled fixture clusters with high agreement") {
  const auto fixture = testsupport::labeled_event_fixture();
  std::vector<FailureRecord> pool;
  for (const auto& ev : fixture.events) pool.push_back(record_with_events(ev));

  double best_ari = -1.0;
  for (int k : {5, 9, 15}) {
    const auto rep = cluster_failures(pool, k, 11, {});
    best_ari = std::max(
        best_ari, adjusted_rand_index(rep.partition.community, fixture.labels));
  }
  CHECK(best_ari >= 0.8);
}

TEST_CASE("dedup of failure records keeps the first of each duplicate set") {
  std::vector<FailureRecord> pool;
  for (int i = 0; i < 6; ++i) {
    FailureRecord r;
    r.descriptive.assign(24, i < 3 ? 0.0 : 1.0);
    r.descriptive[0] += 0.01 * i;
    r.discovered_at = i + 1;
    pool.push_back(std::move(r));
  }
  const auto kept = dedup_records(pool, 0.5);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].discovered_at == 1);
  CHECK(kept[1].discovered_at == 4);
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t j = i + 1; j < kept.size(); ++j)
      CHECK_FALSE(is_duplicate(kept[i].descriptive, kept[j].descriptive, 0.5));
}

TEST_CASE("duplicate-threshold calibration recovers the plateau") {
  const auto fixture = testsupport::dedup_fixture(3);
  std::vector<double> grid;
  for (double th = 0.05; th <= 1.5001; th += 0.05) grid.push_back(th);
  const auto [th, acc] =
      calibrate_duplicate_threshold(fixture.pairs, fixture.similar, grid);
  CHECK(acc >= 0.95);
  CHECK(th > 0.4);
  CHECK(th < 0.6);
}

TEST_CASE("adjusted rand index sanity") {
  const std::vector<int> a{0, 0, 1, 1, 2, 2};
  CHECK(adjusted_rand_index(a, a) == doctest::Approx(1.0));
  const std::vector<int> relabeled{2, 2, 0, 0, 1, 1};
  CHECK(adjusted_rand_index(a, relabeled) == doctest::Approx(1.0));
  std::mt19937_64 rng(1);
  std::vector<int> x(600), y(600);
  std::uniform_int_distribution<int> lab(0, 4);
  for (int i = 0; i < 600; ++i) {
    x[i] = lab(rng);
    y[i] = lab(rng);
  }
  CHECK(std::abs(adjusted_rand_index(x, y)) < 0.1);
}

TEST_CASE("failure records round-trip through json") {
  auto fixtures = testsupport::classification_fixtures();
  const auto& valid = fixtures[0];
  const auto cls = safety::classify_failure(valid.trace, {});
  const auto rec = make_failure_record(valid.trace, adv_actions_of(valid.trace),
                                       cls, {}, {}, 17);
  const json j = to_json(rec);
  const auto back = failure_record_from_json(j);
  CHECK(to_json(back).dump() == j.dump());
  CHECK(back.discovered_at == 17);
  CHECK(back.events == rec.events);

  // the reward breakdown rides along with the record
  CHECK(j.contains("reward"));
  CHECK(j["reward"]["total"].get<double>() ==
        doctest::Approx(j["reward"]["shaping_sum"].get<double>() +
                        j["reward"]["terminal"].get<double>()));
  CHECK(back.reward.terminal == doctest::Approx(30.0));
}
