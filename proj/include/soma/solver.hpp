#pragma once

#include "soma/env.hpp"
#include "soma/geometry.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace soma {

struct PiecePlacement {
  PieceId piece;
  int orientation;  // global orientation id
  int position;     // flat index of the anchor (min-corner) cell

  ActionIndex action() const { return {orientation, position}; }
  GridMask cells() const;
  bool operator==(const PiecePlacement&) const = default;
};

/// Cell -> piece index (PieceId value), -1 for cells outside the target.
using OwnerMap = std::array<std::int8_t, kNumCells>;

struct Solution {
  std::vector<PiecePlacement> placements;  // sorted by PieceId

  OwnerMap owner_map() const;
};

struct PreconditionViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class SearchOrder {
  PieceMajor,  // place pieces in the given order, forward checking
  CellMajor,   // always cover the lowest-index empty target cell
};

/// Every exact cover of `target` by `pieces` (each used once), sorted by owner
/// map. Throws PreconditionViolation when cell counts do not add up.
std::vector<Solution> solve_all(std::span<const PieceId> pieces, GridMask target,
                                SearchOrder order = SearchOrder::CellMajor);

/// Number of classes under the 24 rotations of the grid about its centre.
std::size_t count_rotation_distinct(const std::vector<Solution>& solutions);

/// Completeness over `target` and pairwise non-overlap; also rejects
/// orientations that do not belong to their piece or leave the grid.
bool verify(const Solution& sol, GridMask target = GridMask::full());

struct OrderedSolution {
  Solution solution;
  std::vector<PiecePlacement> sequence;  // placement order
};

struct Unorderable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Placement order in which every prefix is supported and every piece can
/// descend vertically onto the prefix. Greedy on mean height with
/// backtracking; throws Unorderable when no order exists.
OrderedSolution order_robot_friendly(const Solution& sol);

struct MaskRatioReport {
  int samples = 0;
  double mean_legal = 0.0;
  int min_legal = 0;
  int max_legal = 0;
  double ratio = 0.0;               // action count / mean legal count
  double empty_grid_legal = 0.0;    // mean legal count over the 7 empty-grid states
  std::vector<int> legal_counts;    // per sample
};

inline constexpr double kReferenceMaskRatio = 1.26;
inline constexpr int kReferenceActionSpace = 3132;

/// Samples `samples` non-terminal level-3 states reached by uniformly random
/// legal play and reports legal-action statistics.
MaskRatioReport mask_ratio_report(int samples, std::uint64_t seed, const Environment& env);

}  // namespace soma
