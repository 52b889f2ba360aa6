#pragma once

#include "soma/dqn.hpp"
#include "soma/env.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace soma {

struct LevelConfig {
  int level = 1;
  int budget = 5'000;        // episodes
  double threshold = 0.95;   // rolling success needed for promotion; > 1 never promotes
  int max_steps = 1'000;     // per-episode action cap
};

/// Desk-scale defaults: level 1 5,000 / 0.95, level 2 30,000 / 0.80, level 3 10,000 without promotion.
std::vector<LevelConfig> default_levels();
/// Episode totals of the reference run: 500 / 1,600 / 102,100.
std::vector<LevelConfig> reference_levels();

struct CurriculumConfig {
  std::vector<LevelConfig> levels = default_levels();
  TrainConfig train;
  RewardProfile reward = RewardProfile::Shaped;
  MaskMode mask = MaskMode::Full;
  OrderPolicy order = OrderPolicy::Shuffled;
  int window = 100;
  bool reset_epsilon_per_level = true;
  bool reinit_per_level = false;
  int checkpoint_every = 1'000;  // episodes; 0 disables

  void validate() const;
};

struct EpisodeRecord {
  int level = 0;
  int episode = 0;         // within the level
  long long global = 0;    // across the run
  double reward = 0.0;
  int length = 0;
  bool success = false;
  Done done = Done::Running;
  std::optional<double> mean_loss;  // absent before training starts
  double epsilon = 0.0;
  double rolling_success = 0.0;
};

struct StepRecord {
  int level = 0;
  int episode = 0;
  int step = 0;
  double epsilon = 0.0;
  std::optional<double> loss;
  double reward = 0.0;
  int legal_count = 0;
};

struct Event {
  std::string kind;  // sync_target, promote, budget_exhausted, checkpoint, level_start
  int level = 0;
  int episode = 0;
};

struct LevelMetrics {
  int level = 0;
  std::vector<EpisodeRecord> episodes;
  bool promoted = false;
  std::optional<int> promoted_after;  // episode count at promotion
};

struct RunMetrics {
  std::vector<LevelMetrics> levels;
};

struct CurriculumHooks {
  std::function<void(const EpisodeRecord&)> on_episode;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const Event&)> on_event;
  std::function<void(int level, int episode, const QNetwork<float>&)> on_checkpoint;
};

/// Trains the configured levels in order on one continuing agent.
RunMetrics run_curriculum(const CurriculumConfig& cfg, std::uint64_t seed,
                          const CurriculumHooks& hooks = {}, DqnAgent* agent = nullptr);

/// Mean of the last `window` flags (all of them when fewer).
double rolling_success(const std::vector<bool>& flags, int window);

struct EvalResult {
  int episodes = 0;
  double success_rate = 0.0;
  double mean_reward = 0.0;
  double mean_length = 0.0;
};

using EvalStepHook =
    std::function<void(int episode, int step, const EnvState& before, ActionIndex, const StepResult&)>;

/// Greedy rollouts (epsilon 0) with frozen weights.
EvalResult evaluate_policy(const QNetwork<float>& net, int level, int episodes, std::uint64_t seed,
                           const Environment& env, OrderPolicy order = OrderPolicy::Shuffled,
                           const EvalStepHook& on_step = {});

/// Pearson correlation; nullopt for fewer than two points or zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct Histogram {
  double bin_width = 20.0;
  double origin = 0.0;       // left edge of bin 0, a multiple of the width
  std::vector<int> counts;

  double centre(std::size_t bin) const { return origin + (static_cast<double>(bin) + 0.5) * bin_width; }
};

Histogram histogram(std::span<const double> values, double bin_width = 20.0);

struct Peak {
  double centre = 0.0;
  int count = 0;
};

/// Local maxima of the bin counts, highest first (ties by position), at most `k`.
std::vector<Peak> top_peaks(const Histogram& h, std::size_t k = 3);

struct LevelSummary {
  int level = 0;
  int episodes = 0;
  double success_rate = 0.0;           // over all episodes
  double trailing_success_rate = 0.0;  // over the last window
  bool promoted = false;
  std::optional<int> promoted_after;
  double mean_reward = 0.0;
};

struct Report {
  Histogram reward_histogram;
  std::vector<Peak> peaks;
  std::optional<double> reward_length_correlation;
  std::vector<LevelSummary> levels;
};

/// Reference figures from the source run, reported next to ours without being asserted.
struct ReferenceFigures {
  std::array<double, 3> reward_peaks{580.0, 600.0, 1180.0};
  double reward_length_correlation = 0.495;
  std::array<double, 3> level_success{1.0, 0.929, 0.399};
};

Report summarize(const RunMetrics& metrics, int window = 100);

}  // namespace soma
