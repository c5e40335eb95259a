#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "dynasto/analytics.hpp"
#include "dynasto/reward.hpp"
#include "dynasto/safety.hpp"
#include "dynasto/sim.hpp"
#include "dynasto/types.hpp"

namespace dynasto::rl {

struct ObsScales {
  double position = 500.0;
  double lateral = 8.0;  // road width; 1/500 would flatten the lane signal
  double velocity = 30.0;
};

/// Absolute positions and velocities of both vehicles, ego first.
std::array<double, 8> observe(const JointState& js, const ObsScales& s);

struct Transition {
  std::vector<double> obs;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
};

/// Feed-forward action-value network with tanh hidden layers. Parameters
/// are stored flat (per layer: row-major weights, then biases).
class QNetwork {
 public:
  QNetwork() = default;
  QNetwork(std::vector<int> layer_sizes, std::uint64_t seed);

  std::vector<double> forward(std::span<const double> input) const;
  int greedy_action(std::span<const double> input) const;

  /// Mean squared TD error of the batch against a frozen target network.
  /// When grad is non-null it receives dLoss/dParams (same layout).
  double td_loss(const std::vector<Transition>& batch, const QNetwork& target,
                 double gamma, std::vector<double>* grad) const;

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }

 private:
  std::vector<int> sizes_;
  std::vector<double> params_;
};

class Adam {
 public:
  Adam(std::size_t n_params, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void apply(std::vector<double>& params, const std::vector<double>& grad,
             double lr);

 private:
  std::vector<double> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Fixed-capacity ring store; oldest entries are evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Uniform sample without replacement within the batch.
  std::vector<Transition> sample(std::size_t batch, std::mt19937_64& rng) const;
  /// Insertion order, oldest first (test support; O(n)).
  std::vector<Transition> snapshot() const;

 private:
  std::size_t capacity_;
  std::vector<Transition> store_;
  std::size_t head_ = 0;  // next write position once full
};

/// Linear decay from eps_start to eps_end over the first `frac` of the
/// budget, constant afterwards.
double epsilon_at(long step, long total, double eps_start = 1.0,
                  double eps_end = 0.05, double frac = 0.2);

/// Epsilon-greedy; greedy ties break toward the lowest action index.
MetaAction select_action(const QNetwork& q, std::span<const double> obs,
                         double epsilon, std::mt19937_64& rng);

/// One Adam step on the batch TD loss; returns the pre-step loss.
/// Throws on a non-finite loss.
double td_update(QNetwork& q, const QNetwork& target,
                 const std::vector<Transition>& batch, Adam& opt,
                 double lr = 5e-4, double gamma = 0.95);

struct DqnHyperparams {
  double lr = 5e-4;
  int batch_size = 64;
  double gamma = 0.95;
  std::size_t buffer_capacity = 150000;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_frac = 0.2;
  long warmup_steps = 200;  // short budgets cannot afford a long warmup
  long target_sync = 500;
  int hidden = 64;
  int max_episode_steps = 40;
};

sim::Policy make_greedy_policy(std::shared_ptr<const QNetwork> net,
                               ObsScales scales = {});

/// Uniform per-parameter scenario distribution used during adversary
/// training (both vehicles at 25 m/s, heading 0, lanes drawn uniformly).
struct ScenarioSampler {
  double x_ego_min = 247.0, x_ego_max = 263.0;
  double x_adv_min = 295.0, x_adv_max = 327.0;
  double speed = 25.0;
  int lane_count = 2;
  ScenarioConfig sample(std::mt19937_64& rng) const;
};

struct AdversaryTrainOptions {
  long budget_env_steps = 3000;
  DqnHyperparams hyper;
  safety::SafeDistanceParams safe;
  reward::RewardConfig rconfig;
  RoadConfig road;
  analytics::DescriptiveParams desc;
  bool validity_aware = true;  // false: any collision earns the bonus
  /// Episode initial conditions; defaults to ScenarioSampler.
  std::function<ScenarioConfig(std::mt19937_64&)> config_sampler;
  /// Called after every finished episode with its trace and total reward.
  std::function<void(const Trace&, double)> on_episode;
};

struct AdversaryTrainResult {
  QNetwork net;
  std::vector<analytics::FailureRecord> archive;  // valid failures only
  long env_steps = 0;
  int episodes = 0;
  int collisions = 0;
  int invalid_collisions = 0;
};

AdversaryTrainResult train_adversary(const sim::Policy& sut_policy,
                                     const AdversaryTrainOptions& opt,
                                     std::uint64_t seed);

struct SutTrainOptions {
  long budget_env_steps = 8000;
  int n_background = 1;             // 1 standard (SUT1), 4 defensive (SUT2)
  bool defensive_traffic = false;
  double w_speed = 0.4;
  double w_right_lane = 0.1;
  double w_collision = 1.0;
  DqnHyperparams hyper{.warmup_steps = 500};  // the longer budget affords it
  RoadConfig road;
};

QNetwork train_sut(const SutTrainOptions& opt, std::uint64_t seed);

/// Per-step ego reward used for SUT training.
double sut_step_reward(const VehicleState& ego, bool collided,
                       int rightmost_lane, const SutTrainOptions& opt,
                       const sim::DynamicsParams& dyn);

// Checkpoints: a flat list of named parameter arrays with shape metadata.
json checkpoint_to_json(const QNetwork& net, const ObsScales& scales);
std::pair<QNetwork, ObsScales> checkpoint_from_json(const json& j);
void save_checkpoint(const QNetwork& net, const ObsScales& scales,
                     const std::string& path);
std::pair<QNetwork, ObsScales> load_checkpoint(const std::string& path);

}  // namespace dynasto::rl
