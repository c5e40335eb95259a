#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynasto/reward.hpp"
#include "dynasto/safety.hpp"
#include "dynasto/types.hpp"

namespace dynasto::analytics {

struct DescriptiveParams {
  int n_steps = 8;       // pre-collision steps kept in the embedding
  double x_scale = 20.0;  // interaction-zone scale, of the order of d_safe
  double y_scale = 4.0;   // one lane width
  double v_scale = 8.0;
  double s_th = 0.5;      // duplicate threshold in normalized units
};

/// Normalized (dx, dy, dspeed) triples over the last n_steps policy steps
/// up to the collision; shorter traces are front-padded with the initial
/// record. Throws for non-collision traces.
std::vector<double> descriptive_vector(const Trace& trace,
                                       const DescriptiveParams& p = {});

double euclidean_distance(const std::vector<double>& a,
                          const std::vector<double>& b);

/// Strictly-below-threshold Euclidean similarity.
bool is_duplicate(const std::vector<double>& v1, const std::vector<double>& v2,
                  double s_th);

// Event taxonomy. Simultaneous events at one step are summed; the
// collision step is encoded as 999.
inline constexpr int kEventNone = 0;
inline constexpr int kEventCutInSideEgo = 1;
inline constexpr int kEventCutInEgo = 2;
inline constexpr int kEventCutOutEgo = 3;
inline constexpr int kEventCutInSideAdv = 4;
inline constexpr int kEventCutOutAdv = 5;
inline constexpr int kEventCutInAdv = 6;
inline constexpr int kEventBrakeSameLaneAdv = 7;
inline constexpr int kEventBrakeDiffLaneAdv = 8;
inline constexpr int kEventCollision = 999;

std::vector<int> extract_events(const Trace& trace,
                                const safety::SafeDistanceParams& p);

/// Unit-cost edit distance over event codes (codes are categorical).
int levenshtein(const std::vector<int>& a, const std::vector<int>& b);

/// One valid failure with everything later stages need.
struct FailureRecord {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  std::vector<MetaAction> adv_actions;
  Trace trace;
  safety::Classification classification;
  reward::RewardBreakdown reward;
  std::vector<double> descriptive;
  std::vector<int> events;
  long discovered_at = 0;  // budget tick at which the failure was found
};

FailureRecord make_failure_record(const Trace& trace,
                                  std::vector<MetaAction> adv_actions,
                                  const safety::Classification& cls,
                                  const safety::SafeDistanceParams& sp,
                                  const DescriptiveParams& dp,
                                  long discovered_at,
                                  const reward::RewardConfig& rc = {});

/// Greedy first-seen de-duplication on descriptive vectors.
std::vector<FailureRecord> dedup_records(const std::vector<FailureRecord>& in,
                                         double s_th);

json to_json(const FailureRecord& r);
FailureRecord failure_record_from_json(const json& j);

/// Undirected weighted similarity graph, weights w = 1/(1+d).
struct SimilarityGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> adj;  // symmetric

  void add_edge(int a, int b, double w);
  bool has_edge(int a, int b) const;
  double total_weight() const;  // each edge counted once
};

enum class Metric { Levenshtein, Euclidean };

std::vector<std::vector<double>> pairwise_levenshtein(
    const std::vector<std::vector<int>>& events);
std::vector<std::vector<double>> pairwise_euclidean(
    const std::vector<std::vector<double>>& features);

/// Each node is connected to its k nearest neighbours (union over
/// directions); ties break toward the lower node id.
SimilarityGraph knn_graph(const std::vector<std::vector<double>>& distances,
                          int k);

struct ClusterPartition {
  std::vector<int> community;  // node -> community id, contiguous from 0
  double modularity = 0.0;

  int community_count() const;
};

/// Weighted Newman modularity of a partition.
double modularity(const SimilarityGraph& g, const std::vector<int>& community);

/// Community detection by local moving, refinement and aggregation until
/// modularity stops improving. Deterministic given the seed; every
/// community is internally connected.
ClusterPartition leiden_cluster(const SimilarityGraph& g,
                                double resolution = 1.0,
                                std::uint64_t seed = 0);

struct ClusterReport {
  ClusterPartition partition;
  std::vector<int> exemplar;  // per community: medoid record index
  std::vector<std::vector<int>> event_signature;  // per community
  int k = 0;
  std::string metric;
};

/// Full failure-mode pipeline: events -> Levenshtein -> kNN -> communities.
/// k is clamped to pool_size - 1.
ClusterReport cluster_failures(const std::vector<FailureRecord>& pool, int k,
                               std::uint64_t seed,
                               const safety::SafeDistanceParams& sp);

json to_json(const ClusterReport& r);

/// Grid-searches the duplicate threshold on labeled similar/distinct pairs
/// and returns (best threshold, its accuracy).
std::pair<double, double> calibrate_duplicate_threshold(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>&
        pairs,
    const std::vector<bool>& similar, const std::vector<double>& grid);

/// Chance-adjusted agreement between two labelings.
double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b);

}  // namespace dynasto::analytics
