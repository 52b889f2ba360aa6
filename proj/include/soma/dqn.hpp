#pragma once

#include "soma/env.hpp"
#include "soma/network.hpp"
#include "soma/random.hpp"

#include <cmath>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace soma {

struct Transition {
  StateVector<float> state;
  ActionIndex action;
  double reward = 0.0;
  StateVector<float> next_state;
  LegalMask next_mask;
  bool terminal = false;
};

/// Fixed-capacity ring with FIFO eviction.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 50'000);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// i-th stored transition, oldest first.
  const Transition& at(std::size_t i) const;

  /// `n` distinct transitions drawn uniformly (Floyd's algorithm).
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> data_;
};

struct EpsilonSchedule {
  enum class Kind { Exponential, Linear };
  enum class Clock { Episode, Step };

  Kind kind = Kind::Exponential;
  Clock clock = Clock::Episode;
  double start = 0.9;
  double rate = 0.995;      // exponential
  double floor = 0.05;      // exponential
  double end = 0.1;         // linear
  long long steps = 40'000;  // linear

  static EpsilonSchedule exponential() { return {}; }
  static EpsilonSchedule linear() {
    EpsilonSchedule s;
    s.kind = Kind::Linear;
    s.clock = Clock::Step;
    return s;
  }

  double value(long long t) const;
};

struct TrainConfig {
  double lr = 1e-4;
  double gamma = 0.99;
  int batch = 512;
  int target_update_every = 20;  // episodes
  int warmup = 1'000;            // stored transitions before training starts
  double grad_clip = 1.0;
  std::size_t replay_capacity = 50'000;
  double dropout = 0.3;
  int train_every = 1;  // environment steps per gradient step
  HeadLayout layout = HeadLayout::Factored;
  EpsilonSchedule epsilon;
  std::uint64_t seed = 42;

  void validate() const;
};

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Greedy-or-uniform choice over mask-true actions. Draws one uniform for the
/// exploration coin on every call; ties in Q go to the lowest action id.
template <typename Scalar>
ActionIndex select_action(const QNetwork<Scalar>& net, const StateVector<Scalar>& state,
                          const LegalMask& mask, double epsilon, Rng& rng) {
  const std::size_t legal = mask.count();
  if (legal == 0) throw EmptyMask("select_action: no legal action");
  if (rng.uniform() < epsilon) {
    std::size_t k = rng.below(legal);
    for (int a = 0; a < kNumActions; ++a)
      if (mask.test(a) && k-- == 0) return ActionIndex::from_id(a);
  }
  const auto q = net.q_values(state);
  int best = -1;
  for (int a = 0; a < kNumActions; ++a)
    if (mask.test(a) && (best < 0 || q[a] > q[best])) best = a;
  return ActionIndex::from_id(best);
}

template <typename Scalar>
struct TdResult {
  double loss = 0.0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad;
  std::vector<double> targets;
};

/// Mean squared TD error of the online network on the batch against
/// masked Bellman targets from `target`, and its parameter gradient.
template <typename Scalar>
TdResult<Scalar> td_loss(const QNetwork<Scalar>& online, const QNetwork<Scalar>& target,
                         std::span<const Transition* const> batch, double gamma, Mode mode,
                         Rng* dropout_rng) {
  using Matrix = typename QNetwork<Scalar>::Matrix;
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw std::invalid_argument("td_loss: empty batch");

  Matrix states(kStateDim, n), next(kStateDim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    states.col(i) = batch[i]->state.template cast<Scalar>();
    next.col(i) = batch[i]->next_state.template cast<Scalar>();
  }

  TdResult<Scalar> out;
  const auto next_heads = target.forward(next, Mode::Eval);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    if (t.terminal) {
      out.targets.push_back(t.reward);
      continue;
    }
    const auto q_next = target.layout() == HeadLayout::Factored
                            ? combine(next_heads[0].col(i), next_heads[1].col(i))
                            : Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(next_heads[0].col(i));
    out.targets.push_back(bellman_target(t.reward, gamma, q_next, t.next_mask, false));
  }

  typename QNetwork<Scalar>::Cache cache;
  const auto heads = online.forward(states, mode, dropout_rng, &cache);
  std::vector<Matrix> d_heads;
  for (const auto& h : heads) d_heads.push_back(Matrix::Zero(h.rows(), h.cols()));

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const ActionIndex a = batch[i]->action;
    double q;
    if (online.layout() == HeadLayout::Factored)
      q = static_cast<double>(heads[0](a.orientation, i)) + static_cast<double>(heads[1](a.position, i));
    else
      q = static_cast<double>(heads[0](a.id(), i));
    const double err = q - out.targets[i];
    loss += err * err;
    const Scalar d = static_cast<Scalar>(2.0 * err / static_cast<double>(n));
    if (online.layout() == HeadLayout::Factored) {
      d_heads[0](a.orientation, i) += d;
      d_heads[1](a.position, i) += d;
    } else {
      d_heads[0](a.id(), i) += d;
    }
  }
  out.loss = loss / static_cast<double>(n);
  out.grad = online.backward(cache, d_heads);
  return out;
}

/// One clipped Adam step on the TD loss; returns the pre-update loss.
/// Throws NonFiniteLoss when the loss or the updated weights are not finite.
template <typename Scalar>
double train_step(QNetwork<Scalar>& online, const QNetwork<Scalar>& target, Adam<Scalar>& opt,
                  std::span<const Transition* const> batch, const TrainConfig& cfg,
                  Rng& dropout_rng) {
  auto td = td_loss(online, target, batch, cfg.gamma, Mode::Train, &dropout_rng);
  if (!std::isfinite(td.loss) || !td.grad.allFinite())
    throw NonFiniteLoss("train_step: loss " + std::to_string(td.loss) + " over a batch of " +
                        std::to_string(batch.size()));
  clip_global_norm(td.grad, static_cast<Scalar>(cfg.grad_clip));
  opt.lr = static_cast<Scalar>(cfg.lr);
  opt.step(online.parameters(), td.grad);
  if (!online.all_finite()) throw NonFiniteLoss("train_step: weights became non-finite");
  return td.loss;
}

/// Hard copy of the online weights.
template <typename Scalar>
void sync_target(const QNetwork<Scalar>& online, QNetwork<Scalar>& target) {
  target = online;
}

/// Online/target pair, optimiser, replay and the named RNG streams that
/// drive training (epsilon coin, dropout, replay sampling).
class DqnAgent {
 public:
  explicit DqnAgent(const TrainConfig& cfg);

  const TrainConfig& config() const { return cfg_; }
  const QNetwork<float>& online() const { return online_; }
  QNetwork<float>& online() { return online_; }
  const QNetwork<float>& target() const { return target_; }
  const ReplayBuffer& replay() const { return replay_; }

  ActionIndex act(const EnvState& s, const LegalMask& mask, double epsilon);
  /// Stores the transition and, past warmup, trains on a sampled batch.
  /// Returns the loss when a gradient step ran.
  std::optional<double> observe(Transition t);
  void sync_target();
  long long gradient_steps() const { return updates_; }

  /// Fresh weights (curriculum re-initialisation ablation). Replay is kept.
  void reinitialize();

 private:
  TrainConfig cfg_;
  QNetwork<float> online_;
  QNetwork<float> target_;
  Adam<float> opt_;
  ReplayBuffer replay_;
  Rng init_rng_;
  Rng act_rng_;
  Rng dropout_rng_;
  Rng replay_rng_;
  long long observed_ = 0;
  long long updates_ = 0;
};

// Checkpoint file: "SOMAQNET", u32 version, u32 layout, u32 layer count,
// per layer u32 out and u32 in, then every parameter as little-endian float32.

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagic : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct ShapeMismatch : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct TruncatedFile : CheckpointError {
  using CheckpointError::CheckpointError;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const QNetwork<float>& net, const std::filesystem::path& path);
QNetwork<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace soma
