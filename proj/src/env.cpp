#include "soma/env.hpp"

#include "soma/random.hpp"

#include <algorithm>

namespace soma {

namespace {

GridMask cells_of(std::initializer_list<Cell> cells) {
  return GridMask::of(std::span<const Cell>(cells.begin(), cells.size()));
}

int sum_z(GridMask cells) {
  int s = 0;
  for (int i = 0; i < kNumCells; ++i)
    if (cells.test(i)) s += i / 9;
  return s;
}

int max_z(GridMask cells) {
  if (cells.intersects(GridMask::layer(2))) return 2;
  if (cells.intersects(GridMask::layer(1))) return 1;
  return 0;
}

}  // namespace

const char* done_name(Done d) {
  switch (d) {
    case Done::Running: return "running";
    case Done::Complete: return "complete";
    case Done::DeadEnd: return "dead_end";
  }
  return "?";
}

const LevelSpec& level_spec(int level) {
  static const std::array<LevelSpec, 3> levels = [] {
    std::array<LevelSpec, 3> out;
    const GridMask floor = GridMask::layer(0);
    out[0] = {1, {PieceId::Tee, PieceId::Ell}, floor & ~cells_of({{1, 2, 0}})};
    out[1] = {2,
              {PieceId::Corner, PieceId::Ell, PieceId::Three},
              floor | cells_of({{0, 0, 1}, {2, 2, 1}})};
    out[2] = {3, {kAllPieces.begin(), kAllPieces.end()}, GridMask::full()};
    return out;
  }();
  if (level < 1 || level > 3) throw std::out_of_range("level must be 1, 2 or 3");
  return levels[level - 1];
}

EnvState::EnvState(int level, std::vector<PieceId> order)
    : level_(level), region_(level_spec(level).region), order_(std::move(order)) {
  owner_.fill(-1);
}

std::optional<PieceId> EnvState::current_piece() const {
  if (finished()) return std::nullopt;
  return order_[cursor_];
}

std::optional<PieceId> EnvState::owner(int cell) const {
  if (owner_[cell] < 0) return std::nullopt;
  return static_cast<PieceId>(owner_[cell]);
}

std::uint64_t EnvState::hash() const {
  std::uint64_t h = 0xCBF29CE484222325ull;
  auto feed = [&h](std::uint64_t byte) { h = (h ^ (byte & 0xFF)) * 0x100000001B3ull; };
  const std::uint32_t occ = occupancy_.bits();
  for (int i = 0; i < 4; ++i) feed(occ >> (8 * i));
  for (std::int8_t o : owner_) feed(static_cast<std::uint8_t>(o));
  feed(static_cast<std::uint64_t>(cursor_));
  feed(static_cast<std::uint64_t>(level_));
  return h;
}

zyz::Pose GridFrame::placement_pose(GridMask cells) const {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  int n = 0;
  for (const Cell& c : cells.cells()) {
    sum += Eigen::Vector3d(c.x + 0.5, c.y + 0.5, c.z + 1.0);
    ++n;
  }
  zyz::Pose p;
  p.position = origin + pitch_mm * sum / std::max(n, 1);
  p.rotation = zyz::rot_from_zyz(zyz::ZyzAngles<double>{0.0, zyz::deg(180.0), 0.0});
  return p;
}

ReachabilityTable::ReachabilityTable(const zyz::FeasibilityOracle& oracle, const GridFrame& frame) {
  const auto& table = OrientationTable::instance();
  for (int o = 0; o < kNumOrientations; ++o)
    for (int p = 0; p < kNumPositions; ++p)
      if (auto cells = table.placement(o, p))
        table_.set(ActionIndex{o, p}.id(), oracle(frame.placement_pose(*cells)));
}

std::shared_ptr<const ReachabilityTable> ReachabilityTable::default_table() {
  static const auto table =
      std::make_shared<const ReachabilityTable>(zyz::geometric_oracle(zyz::KinematicModel{}));
  return table;
}

bool check_collision(GridMask occupied, GridMask cells) { return !cells.intersects(occupied); }

bool check_support(GridMask occupied, GridMask cells) {
  const GridMask raised = cells & ~GridMask::layer(0);
  return raised.shifted_down().subset_of(occupied | cells);
}

bool check_vertical_access(GridMask occupied, GridMask cells) {
  const GridMask shadow = cells.shifted_up() | cells.shifted_up().shifted_up();
  return !shadow.intersects(occupied);
}

Environment::Environment(EnvConfig config) : config_(std::move(config)) {
  if (!config_.reach) config_.reach = ReachabilityTable::default_table();
}

EnvState Environment::reset(int level, std::uint64_t seed, OrderPolicy policy) const {
  std::vector<PieceId> order = level_spec(level).pieces;
  if (policy == OrderPolicy::Shuffled) {
    Rng rng(seed, "env-order");
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }
  return EnvState(level, std::move(order));
}

EnvState Environment::reset_with_order(int level, std::vector<PieceId> order) const {
  auto expected = level_spec(level).pieces;
  auto given = order;
  std::sort(expected.begin(), expected.end());
  std::sort(given.begin(), given.end());
  if (expected != given) throw std::invalid_argument("piece order does not match the level's pieces");
  return EnvState(level, std::move(order));
}

bool Environment::is_legal(const EnvState& s, ActionIndex a) const {
  const auto piece = s.current_piece();
  if (!piece || a.orientation < 0 || a.orientation >= kNumOrientations || a.position < 0 ||
      a.position >= kNumPositions)
    return false;
  const auto& table = OrientationTable::instance();
  if (table.piece_of(a.orientation) != *piece) return false;
  const auto cells = table.placement(a.orientation, a.position);
  if (!cells || !cells->subset_of(s.region())) return false;
  if (!check_collision(s, *cells) || !check_support(s, *cells) || !check_reachable(a)) return false;
  return config_.mask == MaskMode::NoVerticalAccess || check_vertical_access(s, *cells);
}

LegalMask Environment::legal_mask(const EnvState& s) const {
  LegalMask mask;
  const auto piece = s.current_piece();
  if (!piece) return mask;
  const auto& table = OrientationTable::instance();
  const int first = table.first(*piece);
  const int last = first + table.count(*piece);
  for (int o = first; o < last; ++o)
    for (int p = 0; p < kNumPositions; ++p)
      if (is_legal(s, {o, p})) mask.set(ActionIndex{o, p}.id());
  return mask;
}

RewardBreakdown Environment::reward(const EnvState& s, GridMask cells, bool completes) const {
  RewardBreakdown r;
  const bool accessible = check_vertical_access(s, cells);
  if (config_.reward == RewardProfile::Sparse) {
    r.base = !accessible ? -5.0 : completes ? 100.0 : 10.0;
    return r;
  }

  const int placement = s.placements() + 1;  // 1-based index of this placement
  const bool touches_floor = cells.intersects(GridMask::layer(0));
  r.base = 10.0;
  if (touches_floor && s.ground_placements() == 0)
    r.ground = 30.0;
  else if (touches_floor && s.all_ground_so_far() && placement <= 6)
    r.ground = 25.0;
  r.access = accessible ? 8.0 : -30.0;
  r.height = static_cast<double>(-8 * max_z(cells));
  if (const auto prev = s.prev_height()) {
    // mean_now <= mean_prev, compared without division.
    const bool not_higher = sum_z(cells) * prev->second <= prev->first * cells.count();
    r.logic = not_higher ? 15.0 : -15.0;
  }
  const GridMask touching = cells.face_neighbours() & s.occupancy() & ~cells;
  r.structure = 2.0 * touching.count();
  return r;
}

StepResult Environment::step(const EnvState& s, ActionIndex a) const {
  if (!is_legal(s, a))
    throw IllegalAction("step: action " + std::to_string(a.id()) + " is not legal in this state");

  const auto& table = OrientationTable::instance();
  const GridMask cells = *table.placement(a.orientation, a.position);
  const PieceId piece = *s.current_piece();

  StepResult out;
  EnvState& n = out.state;
  n = s;
  n.occupancy_ |= cells;
  for (int i = 0; i < kNumCells; ++i)
    if (cells.test(i)) n.owner_[i] = static_cast<std::int8_t>(piece);
  n.placed_.set(static_cast<int>(piece));
  n.cursor_ += 1;
  const bool touches_floor = cells.intersects(GridMask::layer(0));
  n.all_ground_ = s.all_ground_ && touches_floor;
  n.ground_count_ = s.ground_count_ + (touches_floor ? 1 : 0);
  n.prev_height_ = std::pair{sum_z(cells), cells.count()};

  const bool complete = n.finished() && n.occupancy_ == n.region_;
  out.reward = reward(s, cells, complete);
  out.cells = cells;
  if (n.finished()) {
    out.done = complete ? Done::Complete : Done::DeadEnd;
  } else {
    out.next_mask = legal_mask(n);
    out.next_legal = static_cast<int>(out.next_mask.count());
    out.done = out.next_legal == 0 ? Done::DeadEnd : Done::Running;
  }
  return out;
}

}  // namespace soma
