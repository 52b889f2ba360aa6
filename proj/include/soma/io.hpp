#pragma once

#include "soma/curriculum.hpp"
#include "soma/solver.hpp"
#include "soma/zyz.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace soma::io {

using nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form.
std::string fmt(double v);

/// Writes with LF line endings; throws IoError on failure.
class TextFile {
 public:
  explicit TextFile(const std::filesystem::path& path);
  TextFile& line(const std::string& s);
  void flush();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

json to_json(const EpisodeRecord& r);
EpisodeRecord episode_from_json(const json& j);
json to_json(const Event& e);
json to_json(const Report& r, const ReferenceFigures& ref = {});
json to_json(const Solution& s);
json to_json(const RewardBreakdown& r);

/// Accepts {"position":[x,y,z], "zyz_deg":[a,b,g]} or {"position":..., "rotation":[[...],[...],[...]]}.
zyz::Pose pose_from_json(const json& j);
json to_json(const zyz::Pose& p);
json to_json(const zyz::RegraspPlan& plan);

/// Level metrics rebuilt from an episode JSONL stream.
RunMetrics metrics_from_jsonl(const std::filesystem::path& path);

}  // namespace soma::io
