#include "soma/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace soma {

std::vector<LevelConfig> default_levels() {
  return {{1, 5'000, 0.95, 1'000}, {2, 30'000, 0.80, 1'000}, {3, 10'000, 2.0, 1'000}};
}

std::vector<LevelConfig> reference_levels() {
  return {{1, 500, 0.95, 1'000}, {2, 1'600, 0.80, 1'000}, {3, 102'100, 2.0, 1'000}};
}

void CurriculumConfig::validate() const {
  train.validate();
  if (levels.empty()) throw std::invalid_argument("curriculum: no levels configured");
  for (const auto& l : levels) {
    if (l.level < 1 || l.level > 3) throw std::invalid_argument("curriculum: level must be 1, 2 or 3");
    if (l.budget < 0) throw std::invalid_argument("curriculum: budget must be non-negative");
    if (l.max_steps <= 0) throw std::invalid_argument("curriculum: max_steps must be positive");
  }
  if (window <= 0) throw std::invalid_argument("curriculum: window must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("curriculum: checkpoint_every must be non-negative");
}

double rolling_success(const std::vector<bool>& flags, int window) {
  if (flags.empty()) return 0.0;
  const std::size_t n = std::min(flags.size(), static_cast<std::size_t>(window));
  const auto hits = std::count(flags.end() - static_cast<std::ptrdiff_t>(n), flags.end(), true);
  return static_cast<double>(hits) / static_cast<double>(n);
}

RunMetrics run_curriculum(const CurriculumConfig& cfg, std::uint64_t seed, const CurriculumHooks& hooks,
                          DqnAgent* external) {
  cfg.validate();
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  std::optional<DqnAgent> owned;
  if (!external) owned.emplace(tc);
  DqnAgent& agent = external ? *external : *owned;

  EnvConfig ec;
  ec.reward = cfg.reward;
  ec.mask = cfg.mask;
  const Environment env(ec);
  const EpsilonSchedule& schedule = tc.epsilon;

  auto emit = [&](std::string kind, int level, int episode) {
    if (hooks.on_event) hooks.on_event({std::move(kind), level, episode});
  };

  RunMetrics run;
  long long global = 0;
  long long global_steps = 0;
  for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
    const LevelConfig& lc = cfg.levels[li];
    if (li > 0 && cfg.reinit_per_level) agent.reinitialize();
    emit("level_start", lc.level, 0);

    LevelMetrics lm;
    lm.level = lc.level;
    std::vector<bool> flags;
    long long level_steps = 0;
    for (int e = 0; e < lc.budget; ++e, ++global) {
      const long long episode_clock = cfg.reset_epsilon_per_level ? e : global;
      auto epsilon_now = [&] {
        if (schedule.clock == EpsilonSchedule::Clock::Episode) return schedule.value(episode_clock);
        return schedule.value(cfg.reset_epsilon_per_level ? level_steps : global_steps);
      };

      EnvState s = env.reset(lc.level, stream_seed(seed, "env", static_cast<std::uint64_t>(global)), cfg.order);
      LegalMask mask = env.legal_mask(s);
      EpisodeRecord rec;
      rec.level = lc.level;
      rec.episode = e;
      rec.global = global;
      rec.epsilon = epsilon_now();
      double loss_sum = 0.0;
      int loss_count = 0;
      Done done = mask.none() ? Done::DeadEnd : Done::Running;

      for (int t = 0; t < lc.max_steps && done == Done::Running; ++t) {
        const double eps = epsilon_now();
        const ActionIndex a = agent.act(s, mask, eps);
        const StepResult r = env.step(s, a);
        const double reward = r.reward.total();
        Transition tr{encode_state<float>(s), a, reward, encode_state<float>(r.state), r.next_mask,
                      r.done != Done::Running};
        const auto loss = agent.observe(std::move(tr));
        if (loss) {
          loss_sum += *loss;
          ++loss_count;
        }
        if (hooks.on_step) hooks.on_step({lc.level, e, t, eps, loss, reward, r.next_legal});
        rec.reward += reward;
        rec.length += 1;
        ++level_steps;
        ++global_steps;
        s = r.state;
        mask = r.next_mask;
        done = r.done;
      }

      rec.done = done;
      rec.success = done == Done::Complete;
      if (loss_count > 0) rec.mean_loss = loss_sum / loss_count;
      flags.push_back(rec.success);
      rec.rolling_success = rolling_success(flags, cfg.window);
      lm.episodes.push_back(rec);
      if (hooks.on_episode) hooks.on_episode(rec);

      if ((global + 1) % tc.target_update_every == 0) {
        agent.sync_target();
        emit("sync_target", lc.level, e);
      }
      if (cfg.checkpoint_every > 0 && (global + 1) % cfg.checkpoint_every == 0) {
        emit("checkpoint", lc.level, e);
        if (hooks.on_checkpoint) hooks.on_checkpoint(lc.level, e, agent.online());
      }
      if (static_cast<int>(flags.size()) >= cfg.window && rec.rolling_success >= lc.threshold) {
        lm.promoted = true;
        lm.promoted_after = e + 1;
        emit("promote", lc.level, e);
        ++global;
        break;
      }
    }
    if (!lm.promoted) emit("budget_exhausted", lc.level, lc.budget);
    run.levels.push_back(std::move(lm));
  }
  return run;
}

EvalResult evaluate_policy(const QNetwork<float>& net, int level, int episodes, std::uint64_t seed,
                           const Environment& env, OrderPolicy order, const EvalStepHook& on_step) {
  EvalResult out;
  out.episodes = episodes;
  if (episodes <= 0) return out;
  Rng coin(seed, "eval-coin");
  int successes = 0;
  double reward = 0.0, length = 0.0;
  for (int i = 0; i < episodes; ++i) {
    EnvState s = env.reset(level, stream_seed(seed, "eval", static_cast<std::uint64_t>(i)), order);
    LegalMask mask = env.legal_mask(s);
    Done done = mask.none() ? Done::DeadEnd : Done::Running;
    for (int t = 0; t < 1'000 && done == Done::Running; ++t) {
      const ActionIndex a = select_action(net, encode_state<float>(s), mask, 0.0, coin);
      const auto r = env.step(s, a);
      if (on_step) on_step(i, t, s, a, r);
      reward += r.reward.total();
      length += 1;
      s = r.state;
      mask = r.next_mask;
      done = r.done;
    }
    successes += done == Done::Complete;
  }
  out.success_rate = static_cast<double>(successes) / episodes;
  out.mean_reward = reward / episodes;
  out.mean_length = length / episodes;
  return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

Histogram histogram(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0)) throw std::invalid_argument("histogram: bin width must be positive");
  Histogram h;
  h.bin_width = bin_width;
  if (values.empty()) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.origin = std::floor(*lo / bin_width) * bin_width;
  const auto bins = static_cast<std::size_t>(std::floor((*hi - h.origin) / bin_width)) + 1;
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>(std::floor((v - h.origin) / bin_width));
    h.counts[std::min(b, bins - 1)] += 1;
  }
  return h;
}

std::vector<Peak> top_peaks(const Histogram& h, std::size_t k) {
  std::vector<std::size_t> maxima;
  const std::size_t n = h.counts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const int c = h.counts[i];
    if (c == 0) continue;
    const bool left_lower = i == 0 || h.counts[i - 1] < c;
    const bool right_not_higher = i + 1 == n || h.counts[i + 1] <= c;
    if (left_lower && right_not_higher) maxima.push_back(i);
  }
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&](std::size_t a, std::size_t b) { return h.counts[a] > h.counts[b]; });
  std::vector<Peak> out;
  for (std::size_t i = 0; i < std::min(k, maxima.size()); ++i)
    out.push_back({h.centre(maxima[i]), h.counts[maxima[i]]});
  return out;
}

Report summarize(const RunMetrics& metrics, int window) {
  Report r;
  std::vector<double> rewards, lengths;
  for (const auto& lm : metrics.levels) {
    LevelSummary ls;
    ls.level = lm.level;
    ls.episodes = static_cast<int>(lm.episodes.size());
    ls.promoted = lm.promoted;
    ls.promoted_after = lm.promoted_after;
    std::vector<bool> flags;
    double reward = 0.0;
    for (const auto& e : lm.episodes) {
      flags.push_back(e.success);
      rewards.push_back(e.reward);
      lengths.push_back(static_cast<double>(e.length));
      reward += e.reward;
    }
    if (!flags.empty()) {
      ls.success_rate = static_cast<double>(std::count(flags.begin(), flags.end(), true)) /
                        static_cast<double>(flags.size());
      ls.trailing_success_rate = rolling_success(flags, window);
      ls.mean_reward = reward / static_cast<double>(flags.size());
    }
    r.levels.push_back(ls);
  }
  r.reward_histogram = histogram(rewards);
  r.peaks = top_peaks(r.reward_histogram);
  r.reward_length_correlation = pearson(rewards, lengths);
  return r;
}

}  // namespace soma
