#include "dynasto/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dynasto::analytics {

std::vector<double> descriptive_vector(const Trace& trace,
                                       const DescriptiveParams& p) {
  if (!trace.collided)
    throw std::invalid_argument("descriptive_vector: trace has no collision");
  const int t_c = trace.collision_step.value();
  const int first = std::max(1, t_c - p.n_steps + 1);
  const int have = t_c - first + 1;

  std::vector<double> out;
  out.reserve(3 * p.n_steps);
  auto push = [&](const StepRecord& r) {
    out.push_back((r.adv.x - r.ego.x) / p.x_scale);
    out.push_back((r.adv.y - r.ego.y) / p.y_scale);
    out.push_back((r.adv.speed() - r.ego.speed()) / p.v_scale);
  };
  for (int i = 0; i < p.n_steps - have; ++i) push(trace.steps.front());
  for (int t = first; t <= t_c; ++t) push(trace.steps[t]);
  return out;
}

double euclidean_distance(const std::vector<double>& a,
                          const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("euclidean_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

bool is_duplicate(const std::vector<double>& v1, const std::vector<double>& v2,
                  double s_th) {
  return euclidean_distance(v1, v2) < s_th;
}

namespace {

bool side_by_side(const StepRecord& r) {
  const double v_l = (r.ego.length + r.adv.length) / 2.0;
  return std::abs(r.adv.x - r.ego.x) < v_l;
}

// Outcome of one lane change at `step`, decided by the lane indices of the
// changing vehicle. Outcomes are mutually exclusive; side configurations
// take precedence over plain cut-ins.
int lane_change_code(const Trace& trace, int step, bool adv,
                     const safety::SafeDistanceParams& p) {
  (void)p;
  const auto& prev = trace.steps[step - 1];
  const auto& r = trace.steps[step];
  const int mover_lane = adv ? r.adv.lane_index : r.ego.lane_index;
  const int other_lane = adv ? r.ego.lane_index : r.adv.lane_index;
  const bool ahead = adv ? r.adv.x > r.ego.x : r.ego.x > r.adv.x;
  if (mover_lane == other_lane) {
    if (side_by_side(r)) return adv ? kEventCutInSideAdv : kEventCutInSideEgo;
    if (ahead) return adv ? kEventCutInAdv : kEventCutInEgo;
    return kEventNone;
  }
  const int prev_mover = adv ? prev.adv.lane_index : prev.ego.lane_index;
  const int prev_other = adv ? prev.ego.lane_index : prev.adv.lane_index;
  if (prev_mover == prev_other && ahead)
    return adv ? kEventCutOutAdv : kEventCutOutEgo;
  return kEventNone;
}

}  // namespace

std::vector<int> extract_events(const Trace& trace,
                                const safety::SafeDistanceParams& p) {
  const int n = static_cast<int>(trace.steps.size());
  std::vector<int> codes(n, kEventNone);
  for (int t = 1; t < n; ++t) {
    const auto& r = trace.steps[t];
    int code = 0;
    if (safety::lane_changed_adv(trace, t))
      code += lane_change_code(trace, t, true, p);
    else if (safety::lane_changed_ego(trace, t))
      code += lane_change_code(trace, t, false, p);
    if (r.a_adv <= -p.a_min && r.adv.x > r.ego.x)
      code += safety::same_lane_at(r, p) ? kEventBrakeSameLaneAdv
                                         : kEventBrakeDiffLaneAdv;
    codes[t] = code;
  }
  if (trace.collided) {
    const int t_c = trace.collision_step.value();
    codes.resize(t_c);  // keep steps 0..t_c-1
    codes.push_back(kEventCollision);
  }
  return codes;
}

int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = b.size();
  std::vector<int> costs(n + 1);
  std::iota(costs.begin(), costs.end(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    int corner = costs[0];
    costs[0] = static_cast<int>(i) + 1;
    for (std::size_t j = 0; j < n; ++j) {
      const int upper = costs[j + 1];
      if (a[i] == b[j]) {
        costs[j + 1] = corner;
      } else {
        costs[j + 1] = std::min({upper, corner, costs[j]}) + 1;
      }
      corner = upper;
    }
  }
  return costs[n];
}

FailureRecord make_failure_record(const Trace& trace,
                                  std::vector<MetaAction> adv_actions,
                                  const safety::Classification& cls,
                                  const safety::SafeDistanceParams& sp,
                                  const DescriptiveParams& dp,
                                  long discovered_at,
                                  const reward::RewardConfig& rc) {
  FailureRecord rec;
  rec.config = trace.config;
  rec.seed = trace.seed;
  rec.adv_actions = std::move(adv_actions);
  rec.trace = trace;
  rec.classification = cls;
  rec.reward = reward::episode_breakdown(trace, sp, rc);
  rec.descriptive = descriptive_vector(trace, dp);
  rec.events = extract_events(trace, sp);
  rec.discovered_at = discovered_at;
  return rec;
}

std::vector<FailureRecord> dedup_records(const std::vector<FailureRecord>& in,
                                         double s_th) {
  std::vector<FailureRecord> kept;
  for (const auto& r : in) {
    bool dup = false;
    for (const auto& k : kept)
      if (is_duplicate(r.descriptive, k.descriptive, s_th)) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(r);
  }
  return kept;
}

json to_json(const FailureRecord& r) {
  json actions = json::array();
  for (auto a : r.adv_actions) actions.push_back(static_cast<int>(a));
  return json{{"config", dynasto::to_json(r.config)},
              {"seed", r.seed},
              {"actions", std::move(actions)},
              {"trace", dynasto::to_json(r.trace)},
              {"classification", safety::to_json(r.classification)},
              {"reward", reward::to_json(r.reward)},
              {"descriptive", r.descriptive},
              {"events", r.events},
              {"discovered_at", r.discovered_at}};
}

FailureRecord failure_record_from_json(const json& j) {
  FailureRecord r;
  r.config = scenario_from_json(j.at("config"));
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& a : j.at("actions"))
    r.adv_actions.push_back(action_from_int(a.get<int>()));
  r.trace = trace_from_json(j.at("trace"));
  const auto& jc = j.at("classification");
  const std::string label = jc.at("label").get<std::string>();
  if (label == "valid") r.classification.label = safety::Label::Valid;
  else if (label == "invalid") r.classification.label = safety::Label::Invalid;
  else r.classification.label = safety::Label::NoCollision;
  if (jc.contains("rule")) {
    const std::string rule = jc.at("rule").get<std::string>();
    if (rule == "unsafe-cut-in") r.classification.rule = safety::Rule::UnsafeCutIn;
    else if (rule == "unsafe-brake") r.classification.rule = safety::Rule::UnsafeBrake;
    else r.classification.rule = safety::Rule::RearHit;
  }
  if (jc.contains("t_m")) r.classification.onset_step = jc.at("t_m").get<int>();
  if (j.contains("reward")) {
    const auto& jr = j.at("reward");
    r.reward.shaping_sum = jr.at("shaping_sum").get<double>();
    r.reward.terminal = jr.at("terminal").get<double>();
    r.reward.total = jr.at("total").get<double>();
  }
  r.descriptive = j.at("descriptive").get<std::vector<double>>();
  r.events = j.at("events").get<std::vector<int>>();
  r.discovered_at = j.value("discovered_at", 0L);
  return r;
}

void SimilarityGraph::add_edge(int a, int b, double w) {
  if (a == b) return;
  adj[a].emplace_back(b, w);
  adj[b].emplace_back(a, w);
}

bool SimilarityGraph::has_edge(int a, int b) const {
  for (const auto& [j, w] : adj[a])
    if (j == b) return true;
  return false;
}

double SimilarityGraph::total_weight() const {
  double s = 0.0;
  for (const auto& nb : adj)
    for (const auto& [j, w] : nb) s += w;
  return s / 2.0;
}

std::vector<std::vector<double>> pairwise_levenshtein(
    const std::vector<std::vector<int>>& events) {
  const std::size_t n = events.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d[i][j] = d[j][i] = levenshtein(events[i], events[j]);
  return d;
}

std::vector<std::vector<double>> pairwise_euclidean(
    const std::vector<std::vector<double>>& features) {
  const std::size_t n = features.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d[i][j] = d[j][i] = euclidean_distance(features[i], features[j]);
  return d;
}

SimilarityGraph knn_graph(const std::vector<std::vector<double>>& distances,
                          int k) {
  const int n = static_cast<int>(distances.size());
  if (k < 1 || k >= n)
    throw std::invalid_argument("knn_graph: need 1 <= k < node count");
  SimilarityGraph g;
  g.n = n;
  g.adj.resize(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> order;
    order.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return distances[i][a] != distances[i][b] ? distances[i][a] < distances[i][b]
                                                : a < b;
    });
    for (int j = 0; j < k; ++j) {
      const int nb = order[j];
      if (!g.has_edge(i, nb))
        g.add_edge(i, nb, 1.0 / (1.0 + distances[i][nb]));
    }
  }
  return g;
}

int ClusterPartition::community_count() const {
  int mx = -1;
  for (int c : community) mx = std::max(mx, c);
  return mx + 1;
}

double modularity(const SimilarityGraph& g, const std::vector<int>& community) {
  if (static_cast<int>(community.size()) != g.n)
    throw std::invalid_argument("modularity: partition does not cover graph");
  int n_comm = 0;
  for (int c : community) {
    if (c < 0) throw std::invalid_argument("modularity: uncovered node");
    n_comm = std::max(n_comm, c + 1);
  }
  const double m = g.total_weight();
  if (m <= 0.0) return 0.0;
  std::vector<double> intra(n_comm, 0.0), degree(n_comm, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (const auto& [j, w] : g.adj[i]) {
      degree[community[i]] += w;
      if (community[i] == community[j] && i < j) intra[community[i]] += w;
    }
  double q = 0.0;
  for (int c = 0; c < n_comm; ++c) {
    const double frac = degree[c] / (2.0 * m);
    q += intra[c] / m - frac * frac;
  }
  return q;
}

namespace {

// Aggregated multilevel graph; self-loops hold intra-supernode weight.
struct AggGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<double> self_loop;
  std::vector<double> strength;  // incident weight + 2 * self_loop
  double m2 = 0.0;               // total strength
};

AggGraph to_agg(const SimilarityGraph& g) {
  AggGraph a;
  a.n = g.n;
  a.adj = g.adj;
  a.self_loop.assign(g.n, 0.0);
  a.strength.assign(g.n, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (const auto& [j, w] : g.adj[i]) a.strength[i] += w;
  a.m2 = std::accumulate(a.strength.begin(), a.strength.end(), 0.0);
  return a;
}

// Queue-based greedy moving. Candidate communities are restricted by
// `allowed` when given (refinement phase). Returns whether any node moved.
bool local_move(const AggGraph& g, std::vector<int>& comm, double gamma,
                std::mt19937_64& rng, const std::vector<int>* allowed) {
  std::vector<double> comm_strength(g.n, 0.0);
  for (int i = 0; i < g.n; ++i) comm_strength[comm[i]] += g.strength[i];

  std::vector<int> order(g.n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::deque<int> queue(order.begin(), order.end());
  std::vector<char> queued(g.n, 1);
  bool any_moved = false;

  std::vector<double> w_to(g.n, 0.0);
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    queued[i] = 0;

    const int from = comm[i];
    comm_strength[from] -= g.strength[i];

    std::vector<int> cands;
    for (const auto& [j, w] : g.adj[i]) {
      if (allowed && (*allowed)[j] != (*allowed)[i]) continue;
      const int c = comm[j];
      if (w_to[c] == 0.0) cands.push_back(c);
      w_to[c] += w;
    }
    if (std::find(cands.begin(), cands.end(), from) == cands.end())
      cands.push_back(from);

    int best = from;
    double best_score = w_to[from] -
                        gamma * g.strength[i] * comm_strength[from] / g.m2;
    for (int c : cands) {
      if (c == from) continue;
      const double score =
          w_to[c] - gamma * g.strength[i] * comm_strength[c] / g.m2;
      if (score > best_score + 1e-12) {
        best = c;
        best_score = score;
      } else if (best != from && std::abs(score - best_score) <= 1e-12 &&
                 c < best) {
        best = c;
      }
    }
    for (int c : cands) w_to[c] = 0.0;

    comm[i] = best;
    comm_strength[best] += g.strength[i];
    if (best != from) {
      any_moved = true;
      for (const auto& [j, w] : g.adj[i])
        if (!queued[j] && comm[j] != best) {
          queue.push_back(j);
          queued[j] = 1;
        }
    }
  }
  return any_moved;
}

// Splits communities that are not internally connected into components.
// Never lowers modularity. Relabels contiguously by first occurrence.
void split_components(const AggGraph& g, std::vector<int>& comm) {
  std::vector<int> out(g.n, -1);
  int next = 0;
  for (int start = 0; start < g.n; ++start) {
    if (out[start] != -1) continue;
    const int label = next++;
    std::deque<int> q{start};
    out[start] = label;
    while (!q.empty()) {
      const int v = q.front();
      q.pop_front();
      for (const auto& [j, w] : g.adj[v])
        if (out[j] == -1 && comm[j] == comm[v]) {
          out[j] = label;
          q.push_back(j);
        }
    }
  }
  comm = std::move(out);
}

void relabel_contiguous(std::vector<int>& comm) {
  std::map<int, int> remap;
  for (int& c : comm) {
    auto [it, inserted] = remap.emplace(c, static_cast<int>(remap.size()));
    c = it->second;
  }
}

AggGraph aggregate(const AggGraph& g, const std::vector<int>& sub, int n_sub) {
  AggGraph out;
  out.n = n_sub;
  out.adj.resize(n_sub);
  out.self_loop.assign(n_sub, 0.0);
  out.strength.assign(n_sub, 0.0);
  std::vector<std::map<int, double>> acc(n_sub);
  for (int i = 0; i < g.n; ++i) {
    out.self_loop[sub[i]] += g.self_loop[i];
    for (const auto& [j, w] : g.adj[i]) {
      if (sub[i] == sub[j]) {
        if (i < j) out.self_loop[sub[i]] += w;
      } else {
        acc[sub[i]][sub[j]] += w;
      }
    }
  }
  for (int s = 0; s < n_sub; ++s)
    for (const auto& [t, w] : acc[s]) out.adj[s].emplace_back(t, w);
  for (int s = 0; s < n_sub; ++s) {
    out.strength[s] = 2.0 * out.self_loop[s];
    for (const auto& [t, w] : out.adj[s]) out.strength[s] += w;
  }
  out.m2 = std::accumulate(out.strength.begin(), out.strength.end(), 0.0);
  return out;
}

}  // namespace

ClusterPartition leiden_cluster(const SimilarityGraph& g, double resolution,
                                std::uint64_t seed) {
  ClusterPartition out;
  out.community.assign(g.n, 0);
  if (g.n == 0) return out;
  if (g.total_weight() <= 0.0) {
    std::iota(out.community.begin(), out.community.end(), 0);
    out.modularity = 0.0;
    return out;
  }

  std::mt19937_64 rng(seed);
  AggGraph cur = to_agg(g);
  std::vector<int> node2agg(g.n);
  std::iota(node2agg.begin(), node2agg.end(), 0);
  std::vector<int> comm(cur.n);
  std::iota(comm.begin(), comm.end(), 0);

  for (int level = 0; level < 64; ++level) {
    const bool moved = local_move(cur, comm, resolution, rng, nullptr);
    if (!moved && level > 0) break;

    relabel_contiguous(comm);
    int n_comm = *std::max_element(comm.begin(), comm.end()) + 1;
    if (n_comm == cur.n) break;  // nothing merged, a fixed point

    // Refinement: rebuild each community from singletons, moving only
    // within it, so aggregated units stay internally connected.
    std::vector<int> refined(cur.n);
    std::iota(refined.begin(), refined.end(), 0);
    while (local_move(cur, refined, resolution, rng, &comm)) {
    }
    relabel_contiguous(refined);
    const int n_ref = *std::max_element(refined.begin(), refined.end()) + 1;
    if (n_ref == cur.n && n_comm == cur.n) break;

    std::vector<int> agg_comm(n_ref, -1);
    for (int i = 0; i < cur.n; ++i) agg_comm[refined[i]] = comm[i];
    cur = aggregate(cur, refined, n_ref);
    for (int& a : node2agg) a = refined[a];
    comm = std::move(agg_comm);
    if (cur.n == 1) break;
  }

  out.community.resize(g.n);
  for (int v = 0; v < g.n; ++v) out.community[v] = comm[node2agg[v]];
  AggGraph flat = to_agg(g);
  split_components(flat, out.community);
  relabel_contiguous(out.community);
  out.modularity = modularity(g, out.community);
  return out;
}

ClusterReport cluster_failures(const std::vector<FailureRecord>& pool, int k,
                               std::uint64_t seed,
                               const safety::SafeDistanceParams& sp) {
  (void)sp;  // event vectors are already cached on the records
  ClusterReport rep;
  rep.metric = "levenshtein";
  const int n = static_cast<int>(pool.size());
  if (n == 0) return rep;
  if (n == 1) {
    rep.partition.community = {0};
    rep.partition.modularity = 0.0;
    rep.exemplar = {0};
    rep.event_signature = {pool[0].events};
    rep.k = 0;
    return rep;
  }

  std::vector<std::vector<int>> events;
  events.reserve(n);
  for (const auto& r : pool) events.push_back(r.events);
  const auto dist = pairwise_levenshtein(events);
  rep.k = std::clamp(k, 1, n - 1);
  const auto graph = knn_graph(dist, rep.k);
  rep.partition = leiden_cluster(graph, 1.0, seed);

  const int n_comm = rep.partition.community_count();
  rep.exemplar.assign(n_comm, -1);
  rep.event_signature.resize(n_comm);
  for (int c = 0; c < n_comm; ++c) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (rep.partition.community[i] == c) members.push_back(i);
    double best = 1e300;
    for (int i : members) {
      double total = 0.0;
      for (int j : members) total += dist[i][j];
      if (total < best) {
        best = total;
        rep.exemplar[c] = i;
      }
    }
    rep.event_signature[c] = pool[rep.exemplar[c]].events;
  }
  return rep;
}

json to_json(const ClusterReport& r) {
  json clusters = json::array();
  const int n_comm = r.partition.community_count();
  for (int c = 0; c < n_comm; ++c) {
    int size = 0;
    for (int v : r.partition.community)
      if (v == c) ++size;
    clusters.push_back(json{{"id", c},
                            {"size", size},
                            {"exemplar_trace_id", r.exemplar[c]},
                            {"event_signature", r.event_signature[c]}});
  }
  return json{{"clusters", std::move(clusters)},
              {"modularity", r.partition.modularity},
              {"k", r.k},
              {"metric", r.metric}};
}

std::pair<double, double> calibrate_duplicate_threshold(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>&
        pairs,
    const std::vector<bool>& similar, const std::vector<double>& grid) {
  if (pairs.size() != similar.size() || pairs.empty() || grid.empty())
    throw std::invalid_argument("calibrate_duplicate_threshold: bad inputs");
  std::vector<double> d(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    d[i] = euclidean_distance(pairs[i].first, pairs[i].second);
  double best_th = grid.front();
  double best_acc = -1.0;
  for (double th : grid) {
    int correct = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if ((d[i] < th) == similar[i]) ++correct;
    const double acc = static_cast<double>(correct) / d.size();
    if (acc > best_acc) {
      best_acc = acc;
      best_th = th;
    }
  }
  return {best_th, best_acc};
}

double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("adjusted_rand_index: size mismatch");
  std::map<std::pair<int, int>, long> cell;
  std::map<int, long> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++cell[{a[i], b[i]}];
    ++ra[a[i]];
    ++rb[b[i]];
  }
  auto choose2 = [](long x) { return 0.5 * x * (x - 1); };
  double sum_cell = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [k, v] : cell) sum_cell += choose2(v);
  for (const auto& [k, v] : ra) sum_a += choose2(v);
  for (const auto& [k, v] : rb) sum_b += choose2(v);
  const double n2 = choose2(static_cast<long>(a.size()));
  const double expected = sum_a * sum_b / n2;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;
  return (sum_cell - expected) / (maximum - expected);
}

}  // namespace dynasto::analytics
