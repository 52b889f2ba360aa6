// soma: command-line driver for the solver, trainer, evaluator, mask audit
// and ZYZ planner. Exit codes: 0 ok, 2 config/precondition, 3 numerical
// failure, 4 I/O or checkpoint.

#include "soma/curriculum.hpp"
#include "soma/dqn.hpp"
#include "soma/io.hpp"
#include "soma/solver.hpp"
#include "soma/zyz.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace soma;
using io::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumeric = 3, kIo = 4 };

struct Common {
  std::string out = "out";
  std::uint64_t seed = 42;
  bool no_timestamps = false;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void stamp(json& j, const Common& c) {
  if (!c.no_timestamps) j["created_at"] = timestamp();
}

fs::path prepare_out(const Common& c, const CLI::App& root) {
  const fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw io::IoError("cannot create output directory " + out.string() + ": " + ec.message());
  io::TextFile(out / "config.toml").line(root.config_to_str(true, false));
  return out;
}

// Doubles echo their defaults in shortest round-trip form so the written
// config reloads exactly.
CLI::Option* exact_default(CLI::Option* opt, double value) { return opt->default_str(io::fmt(value)); }

template <typename T>
T choose(const std::map<std::string, T>& options, const std::string& value, const char* what) {
  const auto it = options.find(value);
  if (it == options.end()) throw ConfigError(std::string("unknown ") + what + ": " + value);
  return it->second;
}

const std::map<std::string, RewardProfile> kRewards{{"shaped", RewardProfile::Shaped},
                                                    {"sparse", RewardProfile::Sparse}};
const std::map<std::string, OrderPolicy> kOrders{{"fixed", OrderPolicy::Fixed},
                                                 {"shuffled", OrderPolicy::Shuffled}};
const std::map<std::string, MaskMode> kMasks{{"full", MaskMode::Full},
                                             {"no-vertical-access", MaskMode::NoVerticalAccess}};
const std::map<std::string, HeadLayout> kLayouts{{"factored", HeadLayout::Factored},
                                                 {"flat", HeadLayout::Flat}};

// --- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string pieces = "all";
  std::string target = "auto";
  std::string search = "cell-major";
};

std::vector<PieceId> parse_pieces(const std::string& spec) {
  if (spec == "all") return {kAllPieces.begin(), kAllPieces.end()};
  std::vector<PieceId> out;
  std::stringstream ss(spec);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const auto p = parse_piece(name);
    if (!p) throw ConfigError("unknown piece: " + name);
    out.push_back(*p);
  }
  if (out.empty()) throw ConfigError("no pieces given");
  return out;
}

int cmd_solve(const SolveArgs& a, const Common& c, const CLI::App& root) {
  const auto pieces = parse_pieces(a.pieces);
  GridMask target = GridMask::full();
  if (a.target == "level1") target = level_spec(1).region;
  else if (a.target == "level2") target = level_spec(2).region;
  else if (a.target != "auto" && a.target != "full") throw ConfigError("unknown target: " + a.target);
  const SearchOrder order = choose<SearchOrder>(
      {{"cell-major", SearchOrder::CellMajor}, {"piece-major", SearchOrder::PieceMajor}}, a.search, "search");

  const auto solutions = solve_all(pieces, target, order);
  const fs::path out = prepare_out(c, root);

  json list = json::array();
  int orderable = 0;
  for (const auto& s : solutions) {
    json entry = {{"placements", io::to_json(s)}, {"order", nullptr}};
    try {
      const auto ordered = order_robot_friendly(s);
      json seq = json::array();
      for (const auto& p : ordered.sequence) seq.push_back(std::string(piece_name(p.piece)));
      entry["order"] = seq;
      ++orderable;
    } catch (const Unorderable&) {
    }
    list.push_back(entry);
  }
  const std::size_t distinct = target == GridMask::full() ? count_rotation_distinct(solutions) : 0;
  json summary = {{"pieces", a.pieces},
                  {"target_cells", target.count()},
                  {"search", a.search},
                  {"solutions", solutions.size()},
                  {"rotation_distinct", target == GridMask::full() ? json(distinct) : json(nullptr)},
                  {"robot_orderable", orderable}};
  io::write_json(out / "solutions.json", {{"summary", summary}, {"solutions", list}});
  stamp(summary, c);
  io::write_json(out / "solve_summary.json", summary);
  std::cout << "solutions " << solutions.size() << " rotation_distinct "
            << (target == GridMask::full() ? std::to_string(distinct) : "n/a") << " robot_orderable "
            << orderable << "\n";
  return kOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  int level = 0;  // 0 = full curriculum
  int episodes = -1;
  std::string budgets = "desk";
  double threshold = -1;
  std::string epsilon = "exp";
  std::string epsilon_clock = "";
  std::string reward = "shaped";
  std::string mask = "full";
  std::string order = "shuffled";
  std::string layout = "factored";
  int batch = 512;
  double lr = 1e-4;
  double gamma = 0.99;
  int warmup = 1'000;
  int target_update = 20;
  double grad_clip = 1.0;
  double dropout = 0.3;
  std::size_t replay = 50'000;
  int train_every = 1;
  int checkpoint_every = 1'000;
  int window = 100;
  bool reinit_per_level = false;
  bool keep_epsilon = false;
  bool no_step_log = false;
};

CurriculumConfig curriculum_config(const TrainArgs& a, std::uint64_t seed) {
  CurriculumConfig cfg;
  if (a.budgets == "reference") cfg.levels = reference_levels();
  else if (a.budgets != "desk") throw ConfigError("unknown budgets preset: " + a.budgets);
  if (a.level != 0) {
    if (a.level < 1 || a.level > 3) throw ConfigError("level must be 1, 2 or 3");
    cfg.levels = {cfg.levels[a.level - 1]};
  }
  for (auto& l : cfg.levels) {
    if (a.episodes >= 0) l.budget = a.episodes;
    if (a.threshold >= 0) l.threshold = a.threshold;
  }
  TrainConfig& t = cfg.train;
  t.lr = a.lr;
  t.gamma = a.gamma;
  t.batch = a.batch;
  t.warmup = a.warmup;
  t.target_update_every = a.target_update;
  t.grad_clip = a.grad_clip;
  t.dropout = a.dropout;
  t.replay_capacity = a.replay;
  t.train_every = a.train_every;
  t.layout = choose(kLayouts, a.layout, "layout");
  t.seed = seed;
  if (a.epsilon == "linear") t.epsilon = EpsilonSchedule::linear();
  else if (a.epsilon != "exp") throw ConfigError("unknown epsilon schedule: " + a.epsilon);
  if (!a.epsilon_clock.empty())
    t.epsilon.clock = choose<EpsilonSchedule::Clock>(
        {{"episode", EpsilonSchedule::Clock::Episode}, {"step", EpsilonSchedule::Clock::Step}},
        a.epsilon_clock, "epsilon clock");
  cfg.reward = choose(kRewards, a.reward, "reward profile");
  cfg.mask = choose(kMasks, a.mask, "mask mode");
  cfg.order = choose(kOrders, a.order, "order policy");
  cfg.window = a.window;
  cfg.checkpoint_every = a.checkpoint_every;
  cfg.reinit_per_level = a.reinit_per_level;
  cfg.reset_epsilon_per_level = !a.keep_epsilon;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void write_report_files(const fs::path& out, const RunMetrics& metrics, const Report& report) {
  io::TextFile hist(out / "histogram.csv");
  hist.line("bin_left,bin_right,centre,count");
  const auto& h = report.reward_histogram;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double left = h.origin + static_cast<double>(i) * h.bin_width;
    hist.line(io::fmt(left) + "," + io::fmt(left + h.bin_width) + "," + io::fmt(h.centre(i)) + "," +
              std::to_string(h.counts[i]));
  }
  io::TextFile scatter(out / "reward_length.csv");
  scatter.line("level,episode,reward,length,success");
  for (const auto& lm : metrics.levels)
    for (const auto& e : lm.episodes)
      scatter.line(std::to_string(e.level) + "," + std::to_string(e.episode) + "," + io::fmt(e.reward) +
                   "," + std::to_string(e.length) + "," + (e.success ? "1" : "0"));
}

int cmd_train(const TrainArgs& a, const Common& c, const CLI::App& root) {
  const CurriculumConfig cfg = curriculum_config(a, c.seed);
  const fs::path out = prepare_out(c, root);
  fs::create_directories(out / "checkpoints");

  io::TextFile metrics_file(out / "metrics.jsonl");
  io::TextFile episodes_csv(out / "episodes.csv");
  io::TextFile events_file(out / "events.jsonl");
  std::optional<io::TextFile> steps_csv;
  episodes_csv.line("level,episode,global,reward,length,success,mean_loss,epsilon,rolling_success");
  if (!a.no_step_log) {
    steps_csv.emplace(out / "steps.csv");
    steps_csv->line("episode,step,epsilon,loss,reward,legal_count");
  }

  long long global = 0;
  CurriculumHooks hooks;
  hooks.on_episode = [&](const EpisodeRecord& r) {
    metrics_file.line(io::to_json(r).dump());
    episodes_csv.line(std::to_string(r.level) + "," + std::to_string(r.episode) + "," + std::to_string(r.global) +
                      "," + io::fmt(r.reward) + "," + std::to_string(r.length) + "," + (r.success ? "1" : "0") +
                      "," + (r.mean_loss ? io::fmt(*r.mean_loss) : "") + "," + io::fmt(r.epsilon) + "," +
                      io::fmt(r.rolling_success));
    global = r.global + 1;
  };
  if (steps_csv)
    hooks.on_step = [&](const StepRecord& s) {
      steps_csv->line(std::to_string(global) + "," + std::to_string(s.step) + "," + io::fmt(s.epsilon) + "," +
                      (s.loss ? io::fmt(*s.loss) : "") + "," + io::fmt(s.reward) + "," +
                      std::to_string(s.legal_count));
    };
  hooks.on_event = [&](const Event& e) { events_file.line(io::to_json(e).dump()); };
  hooks.on_checkpoint = [&](int, int, const QNetwork<float>& net) {
    save_checkpoint(net, out / "checkpoints" / ("episode_" + std::to_string(global) + ".bin"));
  };

  DqnAgent agent(cfg.train);
  RunMetrics metrics;
  try {
    metrics = run_curriculum(cfg, c.seed, hooks, &agent);
  } catch (const NonFiniteLoss&) {
    metrics_file.flush();
    events_file.line(json{{"event", "non_finite_loss"}, {"episode", global}}.dump());
    throw;
  }
  save_checkpoint(agent.online(), out / "final.bin");

  const Report report = summarize(metrics, cfg.window);
  write_report_files(out, metrics, report);
  json summary = io::to_json(report);
  summary["seed"] = c.seed;
  summary["gradient_steps"] = agent.gradient_steps();
  stamp(summary, c);
  io::write_json(out / "summary.json", summary);
  for (const auto& l : report.levels)
    std::cout << "level " << l.level << " episodes " << l.episodes << " success " << l.success_rate
              << " trailing " << l.trailing_success_rate << (l.promoted ? " promoted" : "") << "\n";
  return kOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  int level = 1;
  int episodes = 10;
  std::string order = "shuffled";
  std::string reward = "shaped";
  bool trace = false;
};

int cmd_eval(const EvalArgs& a, const Common& c, const CLI::App& root) {
  if (a.level < 1 || a.level > 3) throw ConfigError("level must be 1, 2 or 3");
  if (a.episodes <= 0) throw ConfigError("episodes must be positive");
  EnvConfig ec;
  ec.reward = choose(kRewards, a.reward, "reward profile");
  const OrderPolicy order = choose(kOrders, a.order, "order policy");
  const QNetwork<float> net = load_checkpoint(a.checkpoint);
  const fs::path out = prepare_out(c, root);
  const Environment env(ec);

  std::optional<io::TextFile> trace;
  if (a.trace) trace.emplace(out / "trace.jsonl");
  EvalStepHook hook;
  if (trace)
    hook = [&](int episode, int step, const EnvState& s, ActionIndex act, const StepResult& r) {
      trace->line(json{{"episode", episode},
                       {"step", step},
                       {"state_hash", s.hash()},
                       {"action", act.id()},
                       {"reward", io::to_json(r.reward)},
                       {"done", done_name(r.done)}}
                      .dump());
    };
  const EvalResult res = evaluate_policy(net, a.level, a.episodes, c.seed, env, order, hook);
  json j = {{"checkpoint", a.checkpoint},   {"level", a.level},
            {"episodes", res.episodes},     {"success_rate", res.success_rate},
            {"mean_reward", res.mean_reward}, {"mean_length", res.mean_length}};
  stamp(j, c);
  io::write_json(out / "eval.json", j);
  std::cout << "success_rate " << res.success_rate << " mean_reward " << res.mean_reward << " mean_length "
            << res.mean_length << "\n";
  return kOk;
}

// --- mask-audit --------------------------------------------------------------

struct AuditArgs {
  int samples = 1'000;
  std::string mask = "full";
};

int cmd_mask_audit(const AuditArgs& a, const Common& c, const CLI::App& root) {
  if (a.samples <= 0) throw ConfigError("samples must be positive");
  EnvConfig ec;
  ec.mask = choose(kMasks, a.mask, "mask mode");
  const MaskRatioReport r = mask_ratio_report(a.samples, c.seed, Environment(ec));
  const fs::path out = prepare_out(c, root);
  io::TextFile csv(out / "mask_audit.csv");
  csv.line(
      "samples,mean_legal,min_legal,max_legal,action_space,ratio,paper_ref_ratio,reference_action_space,"
      "undeduplicated_action_space,empty_grid_legal");
  csv.line(std::to_string(r.samples) + "," + io::fmt(r.mean_legal) + "," + std::to_string(r.min_legal) + "," +
           std::to_string(r.max_legal) + "," + std::to_string(kNumActions) + "," + io::fmt(r.ratio) + "," +
           io::fmt(kReferenceMaskRatio) + "," + std::to_string(kReferenceActionSpace) + "," +
           std::to_string(kUndeduplicatedOrientations * kNumPositions) + "," + io::fmt(r.empty_grid_legal));
  io::TextFile counts(out / "mask_counts.csv");
  counts.line("sample,legal_count");
  for (std::size_t i = 0; i < r.legal_counts.size(); ++i)
    counts.line(std::to_string(i) + "," + std::to_string(r.legal_counts[i]));
  std::cout << "mean_legal " << r.mean_legal << " ratio " << r.ratio << " (reference " << kReferenceMaskRatio
            << ")\n";
  return kOk;
}

// --- zyz-sim / make-suite ------------------------------------------------------

struct ZyzArgs {
  std::string targets = SOMA_DATA_DIR "/near_singular_suite.json";
  std::string oracle = "all";
  std::string roll_frame = "tool";
  double band_deg = zyz::to_deg(std::asin(0.1));
  double beta_threshold_deg = 180.0;
};

int cmd_zyz_sim(const ZyzArgs& a, const Common& c, const CLI::App& root) {
  zyz::GuardOptions opts;
  opts.band = zyz::deg(a.band_deg);
  opts.beta_threshold = zyz::deg(a.beta_threshold_deg);
  opts.roll_frame = choose<zyz::RollFrame>({{"tool", zyz::RollFrame::Tool}, {"base", zyz::RollFrame::Base}},
                                           a.roll_frame, "roll frame");
  const zyz::KinematicModel model;
  std::vector<std::string> names{a.oracle};
  if (a.oracle == "all") names = {"geometric", "always-true", "always-false", "clamp-sensitive"};
  std::vector<zyz::FeasibilityOracle> oracles;
  for (const auto& n : names) {
    try {
      oracles.push_back(zyz::oracle_by_name(n, model));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  const json list = io::read_json(a.targets);
  if (!list.is_array() || list.empty()) throw io::IoError(a.targets + ": expected a nonempty JSON list of poses");
  std::vector<zyz::Pose> targets;
  for (const auto& p : list) targets.push_back(io::pose_from_json(p));

  const fs::path out = prepare_out(c, root);
  io::TextFile csv(out / "zyz_summary.csv");
  io::TextFile traces(out / "zyz_traces.jsonl");
  csv.line("oracle,targets,success_with_guard,success_without,mean_steps_with_guard");
  for (const auto& oracle : oracles) {
    const auto res = zyz::guard_benchmark(targets, zyz::home_pose(), model, oracle, opts);
    csv.line(oracle.name + "," + std::to_string(targets.size()) + "," + io::fmt(res.success_with_guard) + "," +
             io::fmt(res.success_without) + "," + io::fmt(res.mean_steps_with_guard));
    for (std::size_t i = 0; i < res.traces.size(); ++i)
      traces.line(json{{"oracle", oracle.name},
                       {"target", i},
                       {"direct_ok", res.traces[i].direct_ok},
                       {"plan", io::to_json(res.traces[i].plan)}}
                      .dump());
    std::cout << oracle.name << ": with guard " << res.success_with_guard << ", without "
              << res.success_without << "\n";
  }
  return kOk;
}

struct SuiteArgs {
  int count = 100;
  std::string file = "near_singular_suite.json";
};

int cmd_make_suite(const SuiteArgs& a, const Common& c) {
  if (a.count <= 0) throw ConfigError("count must be positive");
  json list = json::array();
  for (const auto& p : zyz::near_singular_suite(a.count, c.seed, zyz::KinematicModel{})) list.push_back(io::to_json(p));
  io::write_json(a.file, list);
  return kOk;
}

// --- report / orientations -----------------------------------------------------

struct ReportArgs {
  std::string metrics = "out/metrics.jsonl";
  int window = 100;
};

int cmd_report(const ReportArgs& a, const Common& c, const CLI::App& root) {
  const RunMetrics metrics = io::metrics_from_jsonl(a.metrics);
  std::size_t episodes = 0;
  for (const auto& l : metrics.levels) episodes += l.episodes.size();
  if (episodes == 0) throw ConfigError("report: no episodes in " + a.metrics);
  const fs::path out = prepare_out(c, root);
  const Report report = summarize(metrics, a.window);
  write_report_files(out, metrics, report);
  json j = io::to_json(report);
  stamp(j, c);
  io::write_json(out / "report.json", j);
  return kOk;
}

int cmd_orientations(const Common& c, const CLI::App& root) {
  const fs::path out = prepare_out(c, root);
  const auto& table = OrientationTable::instance();
  io::TextFile csv(out / "orientations.csv");
  csv.line("orientation,piece,local,cells");
  for (int o = 0; o < table.size(); ++o) {
    const PieceId p = table.piece_of(o);
    std::string cells;
    for (const Cell& cell : table.cells(o)) {
      if (!cells.empty()) cells += ';';
      cells += std::to_string(cell.x) + " " + std::to_string(cell.y) + " " + std::to_string(cell.z);
    }
    csv.line(std::to_string(o) + "," + std::string(piece_name(p)) + "," + std::to_string(o - table.first(p)) +
             "," + cells);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soma cube assembly: solver, masked DQN curriculum and ZYZ planner"};
  app.set_config("--config", "", "TOML/INI configuration file; flags override it");
  app.require_subcommand(1);
  Common common;
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_option("--seed", common.seed, "Run seed")->capture_default_str();
  app.add_flag("--no-timestamps", common.no_timestamps, "Omit wall-clock fields from outputs");

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Enumerate exact covers and robot-friendly orders");
  s->add_option("--pieces", solve.pieces, "all, or comma-separated piece names")->capture_default_str();
  s->add_option("--target", solve.target, "auto|full|level1|level2")->capture_default_str();
  s->add_option("--search", solve.search, "cell-major|piece-major")->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Run the curriculum");
  t->add_option("--level", train.level, "Train a single level (0 = full curriculum)")->capture_default_str();
  t->add_option("--episodes", train.episodes, "Episode budget per level (overrides preset)");
  t->add_option("--budgets", train.budgets, "desk|reference")->capture_default_str();
  t->add_option("--threshold", train.threshold, "Promotion threshold for every level");
  t->add_option("--epsilon", train.epsilon, "exp|linear")->capture_default_str();
  t->add_option("--epsilon-clock", train.epsilon_clock, "episode|step (default per schedule)");
  t->add_option("--reward", train.reward, "shaped|sparse")->capture_default_str();
  t->add_option("--mask", train.mask, "full|no-vertical-access")->capture_default_str();
  t->add_option("--order", train.order, "fixed|shuffled")->capture_default_str();
  t->add_option("--layout", train.layout, "factored|flat")->capture_default_str();
  t->add_option("--batch", train.batch)->capture_default_str();
  exact_default(t->add_option("--lr", train.lr), train.lr);
  exact_default(t->add_option("--gamma", train.gamma), train.gamma);
  t->add_option("--warmup", train.warmup)->capture_default_str();
  t->add_option("--target-update", train.target_update, "Episodes between target syncs")->capture_default_str();
  exact_default(t->add_option("--grad-clip", train.grad_clip), train.grad_clip);
  exact_default(t->add_option("--dropout", train.dropout), train.dropout);
  t->add_option("--replay", train.replay)->capture_default_str();
  t->add_option("--train-every", train.train_every)->capture_default_str();
  t->add_option("--checkpoint-every", train.checkpoint_every)->capture_default_str();
  t->add_option("--window", train.window)->capture_default_str();
  t->add_flag("--reinit-per-level", train.reinit_per_level);
  t->add_flag("--keep-epsilon", train.keep_epsilon, "Continue epsilon across levels");
  t->add_flag("--no-step-log", train.no_step_log, "Skip steps.csv");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  e->add_option("--checkpoint", eval.checkpoint)->required();
  e->add_option("--level", eval.level)->capture_default_str();
  e->add_option("--episodes", eval.episodes)->capture_default_str();
  e->add_option("--order", eval.order)->capture_default_str();
  e->add_option("--reward", eval.reward)->capture_default_str();
  e->add_flag("--trace", eval.trace, "Write per-step trace.jsonl");

  AuditArgs audit;
  auto* m = app.add_subcommand("mask-audit", "Legal-action statistics over sampled states");
  m->add_option("--samples", audit.samples)->capture_default_str();
  m->add_option("--mask", audit.mask)->capture_default_str();

  ZyzArgs zargs;
  auto* z = app.add_subcommand("zyz-sim", "Singularity guard benchmark over a pose list");
  z->add_option("--targets", zargs.targets, "JSON list of poses")->capture_default_str();
  z->add_option("--oracle", zargs.oracle, "geometric|always-true|always-false|clamp-sensitive|all")
      ->capture_default_str();
  z->add_option("--roll-frame", zargs.roll_frame, "tool|base")->capture_default_str();
  exact_default(z->add_option("--band-deg", zargs.band_deg), zargs.band_deg);
  exact_default(z->add_option("--beta-threshold-deg", zargs.beta_threshold_deg), zargs.beta_threshold_deg);

  SuiteArgs suite;
  auto* g = app.add_subcommand("make-suite", "Write a near-singular pose suite");
  g->add_option("--count", suite.count)->capture_default_str();
  g->add_option("--file", suite.file)->capture_default_str();

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Summary statistics from a metrics stream");
  r->add_option("--metrics", report.metrics)->capture_default_str();
  r->add_option("--window", report.window)->capture_default_str();

  auto* o = app.add_subcommand("orientations", "Export the orientation table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kConfig;
  }

  try {
    if (*s) return cmd_solve(solve, common, app);
    if (*t) return cmd_train(train, common, app);
    if (*e) return cmd_eval(eval, common, app);
    if (*m) return cmd_mask_audit(audit, common, app);
    if (*z) return cmd_zyz_sim(zargs, common, app);
    if (*g) return cmd_make_suite(suite, common);
    if (*r) return cmd_report(report, common, app);
    if (*o) return cmd_orientations(common, app);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kConfig;
  } catch (const PreconditionViolation& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kConfig;
  } catch (const NonFiniteLoss& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kNumeric;
  } catch (const CheckpointError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kIo;
  } catch (const io::IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kConfig;
  }
  return kOk;
}
