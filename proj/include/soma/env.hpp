#pragma once

#include "soma/geometry.hpp"
#include "soma/zyz.hpp"

#include <Eigen/Core>

#include <bitset>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace soma {

inline constexpr int kStateDim = kNumCells + kNumPieces + 2;

template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, kStateDim, 1>;

using LegalMask = std::bitset<kNumActions>;

/// Flat action id = orientation * 27 + position. The position is the grid cell
/// that receives the orientation's min corner.
struct ActionIndex {
  int orientation = 0;
  int position = 0;

  constexpr int id() const { return orientation * kNumPositions + position; }
  static constexpr ActionIndex from_id(int id) {
    return {id / kNumPositions, id % kNumPositions};
  }
  constexpr bool operator==(const ActionIndex&) const = default;
};

enum class OrderPolicy { Fixed, Shuffled };
enum class RewardProfile { Shaped, Sparse };
/// NoVerticalAccess drops the vertical-access predicate from the mask
/// (ablation); the shaped reward then charges the access penalty.
enum class MaskMode { Full, NoVerticalAccess };
enum class Done { Running, Complete, DeadEnd };

const char* done_name(Done d);

struct LevelSpec {
  int level = 3;
  std::vector<PieceId> pieces;  // canonical order
  GridMask region;              // cells the level must fill
};

/// Levels 1-3: two pieces into an 8-cell floor, three pieces into an 11-cell
/// two-layer block, and the full cube.
const LevelSpec& level_spec(int level);

class EnvState {
 public:
  EnvState() = default;
  EnvState(int level, std::vector<PieceId> order);

  int level() const { return level_; }
  GridMask region() const { return region_; }
  GridMask occupancy() const { return occupancy_; }
  const std::vector<PieceId>& piece_order() const { return order_; }
  int cursor() const { return cursor_; }
  int num_pieces() const { return static_cast<int>(order_.size()); }
  bool finished() const { return cursor_ >= num_pieces(); }
  std::optional<PieceId> current_piece() const;
  bool placed(PieceId p) const { return placed_.test(static_cast<int>(p)); }
  /// Piece owning a cell, or nullopt when empty.
  std::optional<PieceId> owner(int cell) const;
  int placements() const { return cursor_; }
  bool all_ground_so_far() const { return all_ground_; }
  int ground_placements() const { return ground_count_; }
  /// Previous placement's mean z as (sum of z, cell count); nullopt before the first.
  std::optional<std::pair<int, int>> prev_height() const { return prev_height_; }

  /// FNV-1a over occupancy, owners and cursor.
  std::uint64_t hash() const;

 private:
  friend class Environment;

  int level_ = 3;
  GridMask region_ = GridMask::full();
  GridMask occupancy_;
  std::vector<PieceId> order_;
  int cursor_ = 0;
  std::bitset<kNumPieces> placed_;
  std::array<std::int8_t, kNumCells> owner_{};
  std::optional<std::pair<int, int>> prev_height_;
  bool all_ground_ = true;
  int ground_count_ = 0;
};

struct RewardBreakdown {
  double base = 0;
  double ground = 0;
  double access = 0;
  double height = 0;
  double logic = 0;
  double structure = 0;

  double total() const { return base + ground + access + height + logic + structure; }
  bool operator==(const RewardBreakdown&) const = default;
};

struct StepResult {
  EnvState state;
  RewardBreakdown reward;
  Done done = Done::Running;
  GridMask cells;       // cells written by this step
  int next_legal = 0;   // legal-action count of the successor state
  LegalMask next_mask;  // legal mask of the successor (empty when terminal)
};

struct IllegalAction : std::logic_error {
  using std::logic_error::logic_error;
};
struct EmptyMask : std::logic_error {
  using std::logic_error::logic_error;
};

/// Maps grid cells to robot-base poses (mm) for the reachability check.
struct GridFrame {
  Eigen::Vector3d origin{355.0, -45.0, 0.0};  // outer corner of cell (0,0,0)
  double pitch_mm = 30.0;

  /// Top-down approach pose over the centroid of the placed cells.
  zyz::Pose placement_pose(GridMask cells) const;
};

/// Reachability verdict per action, evaluated once from a feasibility oracle.
class ReachabilityTable {
 public:
  ReachabilityTable(const zyz::FeasibilityOracle& oracle, const GridFrame& frame = {});
  static std::shared_ptr<const ReachabilityTable> default_table();

  bool reachable(ActionIndex a) const { return table_.test(a.id()); }
  const LegalMask& bits() const { return table_; }

 private:
  LegalMask table_;
};

struct EnvConfig {
  RewardProfile reward = RewardProfile::Shaped;
  MaskMode mask = MaskMode::Full;
  std::shared_ptr<const ReachabilityTable> reach = ReachabilityTable::default_table();
};

/// Placement predicates against an occupancy set. check_support: every cell
/// above the floor rests on an occupied cell or on the piece itself.
/// check_vertical_access: nothing occupied above any cell of the piece.
bool check_collision(GridMask occupied, GridMask cells);
bool check_support(GridMask occupied, GridMask cells);
bool check_vertical_access(GridMask occupied, GridMask cells);

inline bool check_collision(const EnvState& s, GridMask cells) {
  return check_collision(s.occupancy(), cells);
}
inline bool check_support(const EnvState& s, GridMask cells) {
  return check_support(s.occupancy(), cells);
}
inline bool check_vertical_access(const EnvState& s, GridMask cells) {
  return check_vertical_access(s.occupancy(), cells);
}

class Environment {
 public:
  explicit Environment(EnvConfig config = {});

  const EnvConfig& config() const { return config_; }

  EnvState reset(int level, std::uint64_t seed, OrderPolicy policy) const;
  EnvState reset_with_order(int level, std::vector<PieceId> order) const;

  bool check_reachable(ActionIndex a) const { return config_.reach->reachable(a); }
  bool is_legal(const EnvState& s, ActionIndex a) const;
  LegalMask legal_mask(const EnvState& s) const;

  /// Throws IllegalAction when the mask rejects `a`.
  StepResult step(const EnvState& s, ActionIndex a) const;

  /// Reward of placing `cells` in `s`, without legality checks.
  RewardBreakdown reward(const EnvState& s, GridMask cells, bool completes) const;

 private:
  EnvConfig config_;
};

template <typename Scalar = float>
StateVector<Scalar> encode_state(const EnvState& s) {
  StateVector<Scalar> v = StateVector<Scalar>::Zero();
  for (int i = 0; i < kNumCells; ++i) v[i] = s.occupancy().test(i) ? Scalar(1) : Scalar(0);
  if (auto p = s.current_piece()) v[kNumCells + static_cast<int>(*p)] = Scalar(1);
  const Scalar n = static_cast<Scalar>(s.num_pieces());
  v[kNumCells + kNumPieces] = static_cast<Scalar>(s.placements()) / n;
  v[kNumCells + kNumPieces + 1] = static_cast<Scalar>(s.cursor()) / n;
  return v;
}

/// r if terminal, else r + gamma * max over legal a' of q_next[a'].
/// Throws EmptyMask for a non-terminal transition with no legal successor.
template <typename Derived>
double bellman_target(double reward, double gamma, const Eigen::MatrixBase<Derived>& q_next,
                      const LegalMask& mask_next, bool terminal) {
  if (terminal) return reward;
  double best = 0.0;
  bool any = false;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask_next.test(a)) continue;
    const double q = static_cast<double>(q_next[a]);
    if (!any || q > best) best = q;
    any = true;
  }
  if (!any) throw EmptyMask("bellman_target: non-terminal transition with an empty mask");
  return reward + gamma * best;
}

}  // namespace soma
