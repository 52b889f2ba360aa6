#include "soma/dqn.hpp"

#include <algorithm>

namespace soma {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("ReplayBuffer::at");
  return data_[(head_ + i) % data_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (n > data_.size()) throw std::invalid_argument("ReplayBuffer::sample: batch exceeds size");
  std::vector<std::size_t> picked;
  picked.reserve(n);
  for (std::size_t j = data_.size() - n; j < data_.size(); ++j) {
    const std::size_t r = rng.below(j + 1);
    const bool seen = std::find(picked.begin(), picked.end(), r) != picked.end();
    picked.push_back(seen ? j : r);
  }
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i : picked) out.push_back(&data_[i]);
  return out;
}

double EpsilonSchedule::value(long long t) const {
  if (t < 0) t = 0;
  if (kind == Kind::Exponential) return std::max(floor, start * std::pow(rate, static_cast<double>(t)));
  if (t >= steps) return end;
  return start + (end - start) * static_cast<double>(t) / static_cast<double>(steps);
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("train config: ") + what);
  };
  require(lr > 0, "lr must be positive");
  require(gamma > 0 && gamma < 1, "gamma must lie in (0, 1)");
  require(batch > 0, "batch must be positive");
  require(target_update_every > 0, "target_update_every must be positive");
  require(warmup >= batch, "warmup must be at least one batch");
  require(grad_clip > 0, "grad_clip must be positive");
  require(replay_capacity >= static_cast<std::size_t>(warmup), "replay must hold the warmup");
  require(dropout >= 0 && dropout < 1, "dropout must lie in [0, 1)");
  require(train_every > 0, "train_every must be positive");
  require(epsilon.start >= 0 && epsilon.start <= 1, "epsilon start must lie in [0, 1]");
  require(epsilon.floor >= 0 && epsilon.floor <= epsilon.start, "epsilon floor must lie in [0, start]");
  require(epsilon.end >= 0 && epsilon.end <= epsilon.start, "epsilon end must lie in [0, start]");
  require(epsilon.rate > 0 && epsilon.rate <= 1, "epsilon rate must lie in (0, 1]");
  require(epsilon.steps > 0, "epsilon steps must be positive");
}

DqnAgent::DqnAgent(const TrainConfig& cfg)
    : cfg_(cfg),
      online_(cfg.layout, static_cast<float>(cfg.dropout)),
      target_(cfg.layout, static_cast<float>(cfg.dropout)),
      replay_(cfg.replay_capacity),
      init_rng_(cfg.seed, "init"),
      act_rng_(cfg.seed, "epsilon"),
      dropout_rng_(cfg.seed, "dropout"),
      replay_rng_(cfg.seed, "replay-sampling") {
  cfg_.validate();
  opt_.lr = static_cast<float>(cfg.lr);
  online_.initialize(init_rng_);
  target_ = online_;
}

ActionIndex DqnAgent::act(const EnvState& s, const LegalMask& mask, double epsilon) {
  return select_action(online_, encode_state<float>(s), mask, epsilon, act_rng_);
}

std::optional<double> DqnAgent::observe(Transition t) {
  replay_.push(std::move(t));
  ++observed_;
  if (replay_.size() < static_cast<std::size_t>(cfg_.warmup) || observed_ % cfg_.train_every != 0)
    return std::nullopt;
  const auto batch = replay_.sample(static_cast<std::size_t>(cfg_.batch), replay_rng_);
  const double loss = train_step(online_, target_, opt_, batch, cfg_, dropout_rng_);
  ++updates_;
  return loss;
}

void DqnAgent::sync_target() { soma::sync_target(online_, target_); }

void DqnAgent::reinitialize() {
  online_.initialize(init_rng_);
  target_ = online_;
  opt_ = Adam<float>{};
  opt_.lr = static_cast<float>(cfg_.lr);
}

}  // namespace soma
