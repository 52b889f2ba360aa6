#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace soma {

inline constexpr int kGridSize = 3;
inline constexpr int kNumCells = kGridSize * kGridSize * kGridSize;
inline constexpr int kNumPieces = 7;
inline constexpr int kNumRotations = 24;

struct Cell {
  int x = 0;
  int y = 0;
  int z = 0;

  constexpr bool in_grid() const {
    return x >= 0 && x < kGridSize && y >= 0 && y < kGridSize && z >= 0 && z < kGridSize;
  }
  /// Flat index x + 3y + 9z. Only meaningful for in-grid cells.
  constexpr int index() const { return x + kGridSize * y + kGridSize * kGridSize * z; }
  static constexpr Cell from_index(int i) {
    return {i % kGridSize, (i / kGridSize) % kGridSize, i / (kGridSize * kGridSize)};
  }

  constexpr Cell operator+(const Cell& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Cell operator-(const Cell& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr auto operator<=>(const Cell&) const = default;
};

using CellSet = std::vector<Cell>;

/// 27-bit occupancy set over the assembly grid, bit i = Cell::from_index(i).
class GridMask {
 public:
  static constexpr std::uint32_t kFullBits = (1u << kNumCells) - 1u;

  constexpr GridMask() = default;
  constexpr explicit GridMask(std::uint32_t bits) : bits_(bits & kFullBits) {}

  static constexpr GridMask full() { return GridMask(kFullBits); }
  static constexpr GridMask layer(int z) { return GridMask(0x1FFu << (9 * z)); }
  static GridMask of(std::span<const Cell> cells);

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr int count() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool test(int i) const { return (bits_ >> i) & 1u; }
  constexpr bool test(const Cell& c) const { return c.in_grid() && test(c.index()); }
  constexpr void set(int i) { bits_ |= (1u << i); }
  constexpr bool intersects(GridMask o) const { return (bits_ & o.bits_) != 0; }
  constexpr bool subset_of(GridMask o) const { return (bits_ & ~o.bits_) == 0; }

  constexpr GridMask operator&(GridMask o) const { return GridMask(bits_ & o.bits_); }
  constexpr GridMask operator|(GridMask o) const { return GridMask(bits_ | o.bits_); }
  constexpr GridMask operator~() const { return GridMask(~bits_); }
  constexpr GridMask& operator|=(GridMask o) { bits_ |= o.bits_; return *this; }
  constexpr GridMask& operator&=(GridMask o) { bits_ &= o.bits_; return *this; }
  constexpr bool operator==(const GridMask&) const = default;

  /// Cells one layer up (z+1) / down (z-1); cells shifted out of the grid vanish.
  constexpr GridMask shifted_up() const { return GridMask(bits_ << 9); }
  constexpr GridMask shifted_down() const { return GridMask(bits_ >> 9); }
  /// Union of all face neighbours of the set (may include the set itself).
  GridMask face_neighbours() const;

  CellSet cells() const;

 private:
  std::uint32_t bits_ = 0;
};

enum class PieceId : std::uint8_t { Corner, Positive, Negative, Zee, Tee, Ell, Three };

inline constexpr std::array<PieceId, kNumPieces> kAllPieces = {
    PieceId::Corner, PieceId::Positive, PieceId::Negative, PieceId::Zee,
    PieceId::Tee,    PieceId::Ell,      PieceId::Three};

std::string_view piece_name(PieceId id);
std::optional<PieceId> parse_piece(std::string_view name);

struct PieceShape {
  PieceId id;
  CellSet cells;  // canonical local frame, min corner at origin
};

const PieceShape& piece_shape(PieceId id);

/// Proper rotation of the cube as a signed axis permutation:
/// out[i] = sign[i] * in[perm[i]].
struct Rotation {
  std::array<int, 3> perm{0, 1, 2};
  std::array<int, 3> sign{1, 1, 1};

  constexpr Cell apply(const Cell& c) const {
    const std::array<int, 3> in{c.x, c.y, c.z};
    return {sign[0] * in[perm[0]], sign[1] * in[perm[1]], sign[2] * in[perm[2]]};
  }
  /// (this ∘ other)(c) = this(other(c)).
  constexpr Rotation compose(const Rotation& other) const {
    Rotation r;
    for (int i = 0; i < 3; ++i) {
      r.perm[i] = other.perm[perm[i]];
      r.sign[i] = sign[i] * other.sign[perm[i]];
    }
    return r;
  }
  constexpr Rotation inverse() const {
    Rotation r;
    for (int i = 0; i < 3; ++i) {
      r.perm[perm[i]] = i;
      r.sign[perm[i]] = sign[i];
    }
    return r;
  }
  constexpr int determinant() const {
    int inversions = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if (perm[i] > perm[j]) ++inversions;
    const int parity = (inversions % 2 == 0) ? 1 : -1;
    return parity * sign[0] * sign[1] * sign[2];
  }
  constexpr bool operator==(const Rotation&) const = default;
};

/// All 24 proper rotations. Order: permutations lexicographically, then sign
/// patterns from (+,+,+) to (-,-,-); the identity comes first.
constexpr std::array<Rotation, kNumRotations> enumerate_rotations() {
  std::array<Rotation, kNumRotations> out{};
  std::array<int, 3> perm{0, 1, 2};
  int n = 0;
  do {
    for (int s = 0; s < 8; ++s) {
      Rotation r;
      r.perm = perm;
      r.sign = {(s & 4) ? -1 : 1, (s & 2) ? -1 : 1, (s & 1) ? -1 : 1};
      if (r.determinant() == 1) out[n++] = r;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

namespace detail {

struct CanonicalCells {
  std::array<Cell, 4> cells;
  int size;
};

// Standard Soma set: tripod, right and left screws, S, T, L tetracubes and
// the V tricube.
inline constexpr std::array<CanonicalCells, kNumPieces> kCanonicalCells = {{
    {{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}, 4},
    {{{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 1, 1}}}, 4},
    {{{{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {1, 1, 0}}}, 4},
    {{{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {2, 1, 0}}}, 4},
    {{{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {1, 1, 0}}}, 4},
    {{{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {2, 1, 0}}}, 4},
    {{{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {}}}, 3},
}};

constexpr std::uint32_t normalized_mask(const CanonicalCells& piece, const Rotation& r) {
  std::array<Cell, 4> rotated{};
  Cell lo{1 << 20, 1 << 20, 1 << 20};
  for (int i = 0; i < piece.size; ++i) {
    rotated[i] = r.apply(piece.cells[i]);
    lo = {std::min(lo.x, rotated[i].x), std::min(lo.y, rotated[i].y),
          std::min(lo.z, rotated[i].z)};
  }
  std::uint32_t m = 0;
  for (int i = 0; i < piece.size; ++i) m |= 1u << (rotated[i] - lo).index();
  return m;
}

constexpr int orientation_count(const CanonicalCells& piece) {
  const auto rots = enumerate_rotations();
  std::array<std::uint32_t, kNumRotations> seen{};
  int n = 0;
  for (const auto& r : rots) {
    const std::uint32_t m = normalized_mask(piece, r);
    bool dup = false;
    for (int i = 0; i < n; ++i) dup = dup || seen[i] == m;
    if (!dup) seen[n++] = m;
  }
  return n;
}

constexpr int total_orientations() {
  int n = 0;
  for (const auto& p : kCanonicalCells) n += orientation_count(p);
  return n;
}

}  // namespace detail

/// Applies every rotation, translates each image so its min corner is at the
/// origin, and removes duplicate cell sets. Order follows enumerate_rotations();
/// cells within an orientation are sorted by flat index.
std::vector<CellSet> canonical_orientations(std::span<const Cell> cells);

/// Translates a normalised orientation so its min corner lands on `anchor`.
/// Returns nullopt when any cell leaves the grid.
std::optional<CellSet> place(std::span<const Cell> orientation_cells, const Cell& anchor);

/// Flat orientation index over all pieces, piece-major in PieceId order.
class OrientationTable {
 public:
  static const OrientationTable& instance();

  int size() const { return static_cast<int>(piece_of_.size()); }
  int count(PieceId p) const { return counts_[static_cast<int>(p)]; }
  int first(PieceId p) const { return offsets_[static_cast<int>(p)]; }
  PieceId piece_of(int orientation) const { return piece_of_[orientation]; }
  int global_id(PieceId p, int local) const { return first(p) + local; }
  const CellSet& cells(int orientation) const { return cells_[orientation]; }
  /// Cells of an orientation placed with its min corner at the given grid cell;
  /// nullopt when the placement leaves the grid.
  std::optional<GridMask> placement(int orientation, int position) const {
    const std::uint32_t m = placements_[orientation * kNumCells + position];
    if (m == 0) return std::nullopt;
    return GridMask(m);
  }

 private:
  OrientationTable();

  std::array<int, kNumPieces> counts_{};
  std::array<int, kNumPieces> offsets_{};
  std::vector<PieceId> piece_of_;
  std::vector<CellSet> cells_;
  std::vector<std::uint32_t> placements_;
};

inline constexpr int kNumPositions = kNumCells;
inline constexpr int kNumOrientations = detail::total_orientations();
inline constexpr int kNumActions = kNumOrientations * kNumPositions;
/// Orientation count before deduplication: 7 pieces x 24 rotations.
inline constexpr int kUndeduplicatedOrientations = kNumPieces * kNumRotations;

}  // namespace soma
