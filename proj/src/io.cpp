#include "soma/io.hpp"

#include <charconv>
#include <map>

namespace soma::io {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

TextFile::TextFile(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
}

TextFile& TextFile::line(const std::string& s) {
  out_ << s << '\n';
  if (!out_) throw IoError("write failed: " + path_.string());
  return *this;
}

void TextFile::flush() {
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_.string());
}

void write_json(const std::filesystem::path& path, const json& j) { TextFile(path).line(j.dump(2)); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

Done done_from_name(const std::string& s) {
  if (s == "complete") return Done::Complete;
  if (s == "dead_end") return Done::DeadEnd;
  return Done::Running;
}

}  // namespace

json to_json(const EpisodeRecord& r) {
  return {{"level", r.level},
          {"episode", r.episode},
          {"global", r.global},
          {"reward", r.reward},
          {"length", r.length},
          {"success", r.success},
          {"done", done_name(r.done)},
          {"mean_loss", optional_number(r.mean_loss)},
          {"epsilon", r.epsilon},
          {"rolling_success", r.rolling_success}};
}

EpisodeRecord episode_from_json(const json& j) {
  EpisodeRecord r;
  r.level = j.at("level").get<int>();
  r.episode = j.at("episode").get<int>();
  r.global = j.at("global").get<long long>();
  r.reward = j.at("reward").get<double>();
  r.length = j.at("length").get<int>();
  r.success = j.at("success").get<bool>();
  r.done = done_from_name(j.at("done").get<std::string>());
  if (!j.at("mean_loss").is_null()) r.mean_loss = j.at("mean_loss").get<double>();
  r.epsilon = j.at("epsilon").get<double>();
  r.rolling_success = j.at("rolling_success").get<double>();
  return r;
}

json to_json(const Event& e) { return {{"event", e.kind}, {"level", e.level}, {"episode", e.episode}}; }

json to_json(const Report& r, const ReferenceFigures& ref) {
  json peaks = json::array();
  for (const auto& p : r.peaks) peaks.push_back({{"centre", p.centre}, {"count", p.count}});
  json levels = json::array();
  for (const auto& l : r.levels)
    levels.push_back({{"level", l.level},
                      {"episodes", l.episodes},
                      {"success_rate", l.success_rate},
                      {"trailing_success_rate", l.trailing_success_rate},
                      {"promoted", l.promoted},
                      {"promoted_after", l.promoted_after ? json(*l.promoted_after) : json(nullptr)},
                      {"mean_reward", l.mean_reward}});
  return {{"reward_histogram",
           {{"bin_width", r.reward_histogram.bin_width},
            {"origin", r.reward_histogram.origin},
            {"counts", r.reward_histogram.counts}}},
          {"peaks", peaks},
          {"reward_length_correlation", optional_number(r.reward_length_correlation)},
          {"levels", levels},
          {"reference",
           {{"reward_peaks", ref.reward_peaks},
            {"reward_length_correlation", ref.reward_length_correlation},
            {"level_success", ref.level_success}}}};
}

json to_json(const Solution& s) {
  json out = json::array();
  for (const auto& p : s.placements) {
    const Cell anchor = Cell::from_index(p.position);
    out.push_back({{"piece", std::string(piece_name(p.piece))},
                   {"orientation", p.orientation},
                   {"anchor", {anchor.x, anchor.y, anchor.z}},
                   {"action", p.action().id()}});
  }
  return out;
}

json to_json(const RewardBreakdown& r) {
  return {{"base", r.base},     {"ground", r.ground},   {"access", r.access},
          {"height", r.height}, {"logic", r.logic},     {"structure", r.structure},
          {"total", r.total()}};
}

zyz::Pose pose_from_json(const json& j) {
  zyz::Pose p;
  const auto& pos = j.at("position");
  if (!pos.is_array() || pos.size() != 3) throw IoError("pose: position must be a 3-array");
  p.position = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
  if (j.contains("zyz_deg")) {
    const auto& a = j.at("zyz_deg");
    if (!a.is_array() || a.size() != 3) throw IoError("pose: zyz_deg must be a 3-array");
    p.rotation = zyz::rot_from_zyz(zyz::ZyzAngles<double>{zyz::deg(a[0].get<double>()),
                                                          zyz::deg(a[1].get<double>()),
                                                          zyz::deg(a[2].get<double>())});
  } else if (j.contains("rotation")) {
    const auto& m = j.at("rotation");
    if (!m.is_array() || m.size() != 3) throw IoError("pose: rotation must be 3x3");
    for (int r = 0; r < 3; ++r) {
      if (!m[r].is_array() || m[r].size() != 3) throw IoError("pose: rotation must be 3x3");
      for (int c = 0; c < 3; ++c) p.rotation(r, c) = m[r][c].get<double>();
    }
    if (!zyz::is_rotation(p.rotation, 1e-6)) throw IoError("pose: rotation is not orthonormal");
  } else {
    throw IoError("pose: needs zyz_deg or rotation");
  }
  return p;
}

json to_json(const zyz::Pose& p) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) rot.push_back({p.rotation(r, 0), p.rotation(r, 1), p.rotation(r, 2)});
  return {{"position", {p.position.x(), p.position.y(), p.position.z()}}, {"rotation", rot}};
}

json to_json(const zyz::RegraspPlan& plan) {
  json steps = json::array();
  for (const auto& s : plan.steps) {
    const auto a = zyz::zyz_from_rot(s.pose.rotation).angles;
    const char* grip = s.gripper == zyz::Gripper::Open ? "open" : s.gripper == zyz::Gripper::Close ? "close" : "unchanged";
    steps.push_back({{"step", zyz::step_name(s.kind)},
                     {"accepted", s.accepted},
                     {"gripper", grip},
                     {"wrist_sign", s.wrist_sign},
                     {"position", {s.pose.position.x(), s.pose.position.y(), s.pose.position.z()}},
                     {"zyz_deg", {zyz::to_deg(a.alpha), zyz::to_deg(a.beta), zyz::to_deg(a.gamma)}}});
  }
  const auto f = zyz::zyz_from_rot(plan.final_pose.rotation).angles;
  return {{"outcome", zyz::outcome_name(plan.outcome)},
          {"steps", steps},
          {"final_zyz_deg", {zyz::to_deg(f.alpha), zyz::to_deg(f.beta), zyz::to_deg(f.gamma)}}};
}

RunMetrics metrics_from_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  RunMetrics m;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    EpisodeRecord r;
    try {
      r = episode_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    if (m.levels.empty() || m.levels.back().level != r.level) m.levels.push_back({r.level, {}, false, {}});
    m.levels.back().episodes.push_back(r);
  }
  return m;
}

}  // namespace soma::io
