#pragma once

// Property checks shared by the unit tests and the acceptance binary.

#include "soma/dqn.hpp"
#include "soma/env.hpp"
#include "soma/random.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace checks {

/// Uniform random rotation from a normalised Gaussian quaternion.
inline Eigen::Matrix3d random_rotation(soma::Rng& rng) {
  Eigen::Vector4d q;
  for (int i = 0; i < 4; i += 2) {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    q[i] = r * std::cos(2 * std::numbers::pi * u2);
    q[i + 1] = r * std::sin(2 * std::numbers::pi * u2);
  }
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
}

struct Sample {
  soma::Transition transition;
  soma::LegalMask mask;  // legal actions of the transition's state
};

/// Transitions from uniformly random legal play on `level`, with the mask of
/// each pre-step state.
inline std::vector<Sample> random_samples(int count, int level, std::uint64_t seed,
                                          const soma::Environment& env = soma::Environment{}) {
  using namespace soma;
  Rng rng(seed);
  std::vector<Sample> out;
  while (static_cast<int>(out.size()) < count) {
    EnvState s = env.reset(level, rng.next(), OrderPolicy::Shuffled);
    LegalMask mask = env.legal_mask(s);
    while (mask.any() && static_cast<int>(out.size()) < count) {
      std::size_t k = rng.below(mask.count());
      int id = 0;
      for (; id < kNumActions; ++id)
        if (mask.test(id) && k-- == 0) break;
      const StepResult r = env.step(s, ActionIndex::from_id(id));
      out.push_back({{encode_state<float>(s), ActionIndex::from_id(id), r.reward.total(),
                      encode_state<float>(r.state), r.next_mask, r.done != Done::Running},
                     mask});
      s = r.state;
      mask = r.next_mask;
    }
  }
  return out;
}

inline std::vector<soma::Transition> random_transitions(int count, int level, std::uint64_t seed) {
  std::vector<soma::Transition> out;
  for (auto& s : random_samples(count, level, seed)) out.push_back(std::move(s.transition));
  return out;
}

struct GradientReport {
  int compared = 0;
  double worst_relative = 0.0;
};

/// Central finite differences of the TD loss against the analytic gradient
/// on `params` random parameters per batch, eval mode. Runs in long double and
/// re-evaluates the loss from forward passes alone, so cancellation noise in
/// the difference stays far below the tolerance.
inline GradientReport gradient_check(soma::HeadLayout layout, int batches, int params, int batch_size,
                                     std::uint64_t seed) {
  using namespace soma;
  using Real = long double;
  using Net = QNetwork<Real>;
  GradientReport rep;
  Rng rng(seed);
  for (int b = 0; b < batches; ++b) {
    Net online(layout, 0.0L), target(layout, 0.0L);
    Rng init(rng.next());
    online.initialize(init);
    target.initialize(init);
    const auto data = random_transitions(batch_size, 1 + static_cast<int>(rng.below(3)), rng.next());
    std::vector<const Transition*> batch;
    for (const auto& t : data) batch.push_back(&t);
    const auto span = std::span<const Transition* const>(batch);
    const auto td = td_loss(online, target, span, 0.99, Mode::Eval, nullptr);

    Net::Matrix states(kStateDim, batch_size);
    for (int i = 0; i < batch_size; ++i) states.col(i) = data[i].state.cast<Real>();
    auto loss = [&] {
      const auto heads = online.forward(states, Mode::Eval);
      Real sum = 0;
      for (int i = 0; i < batch_size; ++i) {
        const ActionIndex a = data[i].action;
        const Real q = layout == HeadLayout::Factored ? heads[0](a.orientation, i) + heads[1](a.position, i)
                                                      : heads[0](a.id(), i);
        const Real err = q - static_cast<Real>(td.targets[i]);
        sum += err * err;
      }
      return sum / batch_size;
    };

    // Parameters on live units; dead ReLU units have exactly zero gradient.
    std::vector<Eigen::Index> live;
    for (Eigen::Index i = 0; i < td.grad.size(); ++i)
      if (td.grad[i] != 0) live.push_back(i);
    for (int k = 0; k < params && !live.empty(); ++k) {
      const Eigen::Index i = live[rng.below(live.size())];
      const Real h = 1e-5L;
      const Real saved = online.parameters()[i];
      online.parameters()[i] = saved + h;
      const Real up = loss();
      online.parameters()[i] = saved - h;
      const Real down = loss();
      online.parameters()[i] = saved;
      const double numeric = static_cast<double>((up - down) / (2 * h));
      const double analytic = static_cast<double>(td.grad[i]);
      const double rel = std::abs(numeric - analytic) / std::max(std::abs(numeric), std::abs(analytic));
      rep.worst_relative = std::max(rep.worst_relative, rel);
      ++rep.compared;
    }
  }
  return rep;
}

/// Index of the largest mask-true entry, lowest id on ties.
template <typename Vec>
int masked_argmax(const Vec& q, const soma::LegalMask& mask) {
  int best = -1;
  for (int a = 0; a < soma::kNumActions; ++a)
    if (mask.test(a) && (best < 0 || q[a] > q[best])) best = a;
  return best;
}

struct IsolationReport {
  int transitions = 0;
  int selection_changes = 0;
  int target_changes = 0;
};

/// Shifts every illegal Q entry by +-1e6 and checks that greedy selection
/// (current mask) and masked Bellman targets (successor mask) are unchanged.
inline IsolationReport isolation_check(const soma::QNetwork<float>& net, const std::vector<Sample>& data,
                                       double gamma, std::uint64_t seed) {
  using namespace soma;
  IsolationReport rep;
  Rng rng(seed);
  for (const Sample& sample : data) {
    const Transition& t = sample.transition;
    ++rep.transitions;
    const auto q = net.q_values(t.state);
    Eigen::VectorXf shifted = q;
    for (int a = 0; a < kNumActions; ++a)
      if (!sample.mask.test(a)) shifted[a] += rng.bernoulli(0.5) ? 1e6f : -1e6f;
    Rng coin(1);
    const ActionIndex chosen = select_action(net, t.state, sample.mask, 0.0, coin);
    if (chosen.id() != masked_argmax(shifted, sample.mask)) ++rep.selection_changes;

    if (t.terminal) continue;
    const Eigen::VectorXd next = net.q_values(t.next_state).cast<double>();
    Eigen::VectorXd next_shifted = next;
    for (int a = 0; a < kNumActions; ++a)
      if (!t.next_mask.test(a)) next_shifted[a] += rng.bernoulli(0.5) ? 1e6 : -1e6;
    const double base = bellman_target(t.reward, gamma, next, t.next_mask, false);
    const double moved = bellman_target(t.reward, gamma, next_shifted, t.next_mask, false);
    const Transition* one[] = {&t};
    const double used = td_loss(net, net, std::span<const Transition* const>(one), gamma, Mode::Eval, nullptr)
                            .targets[0];
    if (base != moved || used != base) ++rep.target_changes;
  }
  return rep;
}

}  // namespace checks
