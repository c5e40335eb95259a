#include "dynasto/rl.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace dynasto::rl {

std::array<double, 8> observe(const JointState& js, const ObsScales& s) {
  return {js.ego.x / s.position, js.ego.y / s.lateral,
          js.ego.vx / s.velocity, js.ego.vy / s.velocity,
          js.adv.x / s.position, js.adv.y / s.lateral,
          js.adv.vx / s.velocity, js.adv.vy / s.velocity};
}

QNetwork::QNetwork(std::vector<int> layer_sizes, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("QNetwork: need >=2 layers");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
    total += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
  params_.resize(total);
  std::mt19937_64 rng(seed);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t n = static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l] +
                          sizes_[l + 1];
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = dist(rng);
    off += n;
  }
}

namespace {

// Forward pass keeping post-activation values per layer for backprop.
void forward_cached(const std::vector<int>& sizes,
                    const std::vector<double>& params,
                    std::span<const double> input,
                    std::vector<std::vector<double>>& acts) {
  acts.assign(sizes.size(), {});
  acts[0].assign(input.begin(), input.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int rows = sizes[l + 1], cols = sizes[l];
    const double* w = params.data() + off;
    const double* b = params.data() + off + static_cast<std::size_t>(rows) * cols;
    auto& out = acts[l + 1];
    out.resize(rows);
    const bool last = (l + 2 == sizes.size());
    for (int r = 0; r < rows; ++r) {
      double z = b[r];
      const double* wr = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) z += wr[c] * acts[l][c];
      out[r] = last ? z : std::tanh(z);
    }
    off += static_cast<std::size_t>(rows) * cols + rows;
  }
}

}  // namespace

std::vector<double> QNetwork::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim())
    throw std::invalid_argument("QNetwork::forward: bad input size");
  std::vector<std::vector<double>> acts;
  forward_cached(sizes_, params_, input, acts);
  return acts.back();
}

int QNetwork::greedy_action(std::span<const double> input) const {
  const auto q = forward(input);
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

double QNetwork::td_loss(const std::vector<Transition>& batch,
                         const QNetwork& target, double gamma,
                         std::vector<double>* grad) const {
  if (batch.empty()) throw std::invalid_argument("td_loss: empty batch");
  if (grad) grad->assign(params_.size(), 0.0);

  const double inv_b = 1.0 / batch.size();
  double loss = 0.0;
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, next_delta;
  for (const auto& tr : batch) {
    double y = tr.reward;
    if (!tr.done) {
      const auto qn = target.forward(tr.next_obs);
      y += gamma * *std::max_element(qn.begin(), qn.end());
    }
    forward_cached(sizes_, params_, tr.obs, acts);
    const double err = acts.back()[tr.action] - y;
    loss += err * err * inv_b;
    if (!grad) continue;

    // Backward pass: gradient flows only through the taken action.
    delta.assign(sizes_.back(), 0.0);
    delta[tr.action] = 2.0 * err * inv_b;
    std::size_t off_end = params_.size();
    for (int l = static_cast<int>(sizes_.size()) - 2; l >= 0; --l) {
      const int rows = sizes_[l + 1], cols = sizes_[l];
      const std::size_t n = static_cast<std::size_t>(rows) * cols + rows;
      const std::size_t off = off_end - n;
      const double* w = params_.data() + off;
      double* gw = grad->data() + off;
      double* gb = gw + static_cast<std::size_t>(rows) * cols;
      next_delta.assign(cols, 0.0);
      for (int r = 0; r < rows; ++r) {
        const double d = delta[r];
        if (d != 0.0) {
          double* gwr = gw + static_cast<std::size_t>(r) * cols;
          const double* wr = w + static_cast<std::size_t>(r) * cols;
          for (int c = 0; c < cols; ++c) {
            gwr[c] += d * acts[l][c];
            next_delta[c] += d * wr[c];
          }
          gb[r] += d;
        }
      }
      if (l > 0)
        for (int c = 0; c < cols; ++c)
          next_delta[c] *= 1.0 - acts[l][c] * acts[l][c];
      delta = next_delta;
      off_end = off;
    }
  }
  return loss;
}

Adam::Adam(std::size_t n_params, double beta1, double beta2, double eps)
    : m_(n_params, 0.0), v_(n_params, 0.0), beta1_(beta1), beta2_(beta2),
      eps_(eps) {}

void Adam::apply(std::vector<double>& params, const std::vector<double>& grad,
                 double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("Adam::apply: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity 0");
  store_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (store_.size() < capacity_) {
    store_.push_back(std::move(t));
  } else {
    store_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch,
                                             std::mt19937_64& rng) const {
  if (batch > store_.size())
    throw std::invalid_argument("ReplayBuffer::sample: batch > size");
  // Floyd's sampling: k distinct indices without materializing the range.
  std::set<std::size_t> picked;
  for (std::size_t j = store_.size() - batch; j < store_.size(); ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng);
    if (!picked.insert(t).second) picked.insert(j);
  }
  std::vector<Transition> out;
  out.reserve(batch);
  for (std::size_t i : picked) out.push_back(store_[i]);
  return out;
}

std::vector<Transition> ReplayBuffer::snapshot() const {
  std::vector<Transition> out;
  out.reserve(store_.size());
  if (store_.size() < capacity_) return store_;
  for (std::size_t i = 0; i < store_.size(); ++i)
    out.push_back(store_[(head_ + i) % capacity_]);
  return out;
}

double epsilon_at(long step, long total, double eps_start, double eps_end,
                  double frac) {
  const double decay_steps = std::max(1.0, frac * static_cast<double>(total));
  const double progress = std::min(1.0, static_cast<double>(step) / decay_steps);
  return eps_start + (eps_end - eps_start) * progress;
}

MetaAction select_action(const QNetwork& q, std::span<const double> obs,
                         double epsilon, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> uniform(0, q.output_dim() - 1);
    return action_from_int(uniform(rng));
  }
  return action_from_int(q.greedy_action(obs));
}

double td_update(QNetwork& q, const QNetwork& target,
                 const std::vector<Transition>& batch, Adam& opt, double lr,
                 double gamma) {
  std::vector<double> grad;
  const double loss = q.td_loss(batch, target, gamma, &grad);
  if (!std::isfinite(loss)) {
    std::string dump = "td_update: non-finite loss; q(s0) = [";
    for (double v : q.forward(batch.front().obs)) dump += std::to_string(v) + " ";
    throw std::runtime_error(dump + "]");
  }
  opt.apply(q.params(), grad, lr);
  return loss;
}

sim::Policy make_greedy_policy(std::shared_ptr<const QNetwork> net,
                               ObsScales scales) {
  return [net, scales](const JointState& js) {
    const auto obs = observe(js, scales);
    return action_from_int(net->greedy_action(obs));
  };
}

ScenarioConfig ScenarioSampler::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> ego_x(x_ego_min, x_ego_max);
  std::uniform_real_distribution<double> adv_x(x_adv_min, x_adv_max);
  std::uniform_int_distribution<int> lane(0, lane_count - 1);
  ScenarioConfig c;
  c.x_ego = ego_x(rng);
  c.x_adv = adv_x(rng);
  c.l_ego = lane(rng);
  c.l_adv = lane(rng);
  c.tl_ego = c.l_ego;
  c.tl_adv = c.l_adv;
  c.h_ego = 0.0;
  c.h_adv = 0.0;
  c.s_ego = speed;
  c.s_adv = speed;
  return c;
}

AdversaryTrainResult train_adversary(const sim::Policy& sut_policy,
                                     const AdversaryTrainOptions& opt,
                                     std::uint64_t seed) {
  AdversaryTrainResult res;
  res.net = QNetwork({8, opt.hyper.hidden, opt.hyper.hidden, kNumActions},
                     derive_seed(seed, 1));
  QNetwork target = res.net;
  Adam adam(res.net.params().size());
  ReplayBuffer buffer(opt.hyper.buffer_capacity);
  std::mt19937_64 rng(derive_seed(seed, 2));
  ObsScales scales;

  auto sampler = opt.config_sampler;
  if (!sampler)
    sampler = [](std::mt19937_64& r) { return ScenarioSampler{}.sample(r); };

  long step_count = 0;
  while (step_count < opt.budget_env_steps) {
    const ScenarioConfig config = sampler(rng);
    const std::uint64_t episode_seed = derive_seed(seed, 1000 + res.episodes);
    sim::SimulatorSession session(config, opt.road, episode_seed);
    std::vector<MetaAction> adv_actions;
    double episode_return = 0.0;

    while (!session.terminated() &&
           session.current_step() < opt.hyper.max_episode_steps &&
           step_count < opt.budget_env_steps) {
      const auto obs = observe(session.joint_state(), scales);
      const double eps = epsilon_at(step_count, opt.budget_env_steps,
                                    opt.hyper.eps_start, opt.hyper.eps_end,
                                    opt.hyper.eps_frac);
      const MetaAction adv_action =
          select_action(res.net, obs, eps, rng);
      const MetaAction ego_action = sut_policy(session.joint_state());
      const StepRecord& rec = session.step(ego_action, adv_action);
      adv_actions.push_back(adv_action);
      ++step_count;

      double r = reward::shaping_at(rec, opt.safe);
      bool done = false;
      if (session.trace().collided) {
        done = true;
        ++res.collisions;
        const auto cls = safety::classify_failure(session.trace(), opt.safe);
        if (opt.validity_aware) {
          r += reward::terminal_bonus(cls, session.trace(), opt.safe,
                                      opt.rconfig);
        } else {
          r += opt.rconfig.valid_bonus;
        }
        if (cls.label == safety::Label::Valid) {
          res.archive.push_back(analytics::make_failure_record(
              session.trace(), adv_actions, cls, opt.safe, opt.desc,
              step_count, opt.rconfig));
        } else {
          ++res.invalid_collisions;
        }
      }
      episode_return += r;

      Transition tr;
      tr.obs.assign(obs.begin(), obs.end());
      tr.action = static_cast<int>(adv_action);
      tr.reward = r;
      const auto next = observe(session.joint_state(), scales);
      tr.next_obs.assign(next.begin(), next.end());
      tr.done = done;
      buffer.push(std::move(tr));

      if (step_count > opt.hyper.warmup_steps &&
          buffer.size() >= static_cast<std::size_t>(opt.hyper.batch_size)) {
        const auto batch = buffer.sample(opt.hyper.batch_size, rng);
        td_update(res.net, target, batch, adam, opt.hyper.lr, opt.hyper.gamma);
      }
      if (step_count % opt.hyper.target_sync == 0)
        target.params() = res.net.params();
    }
    ++res.episodes;
    if (opt.on_episode) opt.on_episode(session.trace(), episode_return);
  }
  res.env_steps = step_count;
  return res;
}

double sut_step_reward(const VehicleState& ego, bool collided,
                       int rightmost_lane, const SutTrainOptions& opt,
                       const sim::DynamicsParams& dyn) {
  double r = opt.w_speed * (ego.speed() - dyn.v_min) / (dyn.v_max - dyn.v_min);
  if (ego.lane_index == rightmost_lane) r += opt.w_right_lane;
  if (collided) r -= opt.w_collision;
  return r;
}

QNetwork train_sut(const SutTrainOptions& opt, std::uint64_t seed) {
  QNetwork net({8, opt.hyper.hidden, opt.hyper.hidden, kNumActions},
               derive_seed(seed, 11));
  QNetwork target = net;
  Adam adam(net.params().size());
  ReplayBuffer buffer(opt.hyper.buffer_capacity);
  std::mt19937_64 rng(derive_seed(seed, 12));
  ObsScales scales;
  sim::DynamicsParams dyn;

  const sim::IdmParams idm =
      opt.defensive_traffic ? sim::defensive_idm() : sim::IdmParams{};

  long step_count = 0;
  long episode_idx = 0;
  while (step_count < opt.budget_env_steps) {
    sim::TrafficEnv env(opt.road, opt.n_background, idm,
                        derive_seed(seed, 2000 + episode_idx));
    int t = 0;
    while (!env.terminated() && t < opt.hyper.max_episode_steps &&
           step_count < opt.budget_env_steps) {
      const auto obs = observe(env.joint_state(), scales);
      const double eps = epsilon_at(step_count, opt.budget_env_steps,
                                    opt.hyper.eps_start, opt.hyper.eps_end,
                                    opt.hyper.eps_frac);
      const MetaAction action = select_action(net, obs, eps, rng);
      const bool collided = env.step(action);
      ++t;
      ++step_count;
      const double r =
          sut_step_reward(env.ego(), collided, env.rightmost_lane(), opt, dyn);

      Transition tr;
      tr.obs.assign(obs.begin(), obs.end());
      tr.action = static_cast<int>(action);
      tr.reward = r;
      const auto next = observe(env.joint_state(), scales);
      tr.next_obs.assign(next.begin(), next.end());
      tr.done = collided;
      buffer.push(std::move(tr));

      if (step_count > opt.hyper.warmup_steps &&
          buffer.size() >= static_cast<std::size_t>(opt.hyper.batch_size)) {
        const auto batch = buffer.sample(opt.hyper.batch_size, rng);
        td_update(net, target, batch, adam, opt.hyper.lr, opt.hyper.gamma);
      }
      if (step_count % opt.hyper.target_sync == 0)
        target.params() = net.params();
    }
    ++episode_idx;
  }
  return net;
}

json checkpoint_to_json(const QNetwork& net, const ObsScales& scales) {
  json layers = json::array();
  const auto& sizes = net.layer_sizes();
  std::size_t off = 0;
  const auto& p = net.params();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int rows = sizes[l + 1], cols = sizes[l];
    const std::size_t wn = static_cast<std::size_t>(rows) * cols;
    layers.push_back(json{
        {"name", "W" + std::to_string(l + 1)},
        {"shape", {rows, cols}},
        {"data", std::vector<double>(p.begin() + off, p.begin() + off + wn)}});
    layers.push_back(json{{"name", "b" + std::to_string(l + 1)},
                          {"shape", {rows}},
                          {"data", std::vector<double>(p.begin() + off + wn,
                                                       p.begin() + off + wn +
                                                           rows)}});
    off += wn + rows;
  }
  return json{{"sizes", sizes},
              {"layers", std::move(layers)},
              {"obs_scales",
               {{"position", scales.position},
                {"lateral", scales.lateral},
                {"velocity", scales.velocity}}}};
}

std::pair<QNetwork, ObsScales> checkpoint_from_json(const json& j) {
  QNetwork net(j.at("sizes").get<std::vector<int>>(), 0);
  std::vector<double> params;
  for (const auto& layer : j.at("layers")) {
    const auto data = layer.at("data").get<std::vector<double>>();
    params.insert(params.end(), data.begin(), data.end());
  }
  if (params.size() != net.params().size())
    throw std::invalid_argument("checkpoint: parameter count mismatch");
  net.params() = std::move(params);
  ObsScales scales;
  scales.position = j.at("obs_scales").at("position").get<double>();
  scales.lateral = j.at("obs_scales").value("lateral", scales.lateral);
  scales.velocity = j.at("obs_scales").at("velocity").get<double>();
  return {std::move(net), scales};
}

void save_checkpoint(const QNetwork& net, const ObsScales& scales,
                     const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << checkpoint_to_json(net, scales).dump(2) << "\n";
}

std::pair<QNetwork, ObsScales> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  json j;
  in >> j;
  return checkpoint_from_json(j);
}

}  // namespace dynasto::rl
