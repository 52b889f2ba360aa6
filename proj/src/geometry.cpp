#include "soma/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace soma {

namespace {

constexpr std::array<std::string_view, kNumPieces> kPieceNames = {
    "corner", "positive", "negative", "zee", "tee", "ell", "three"};

CellSet normalize(CellSet cells) {
  Cell lo = cells.front();
  for (const Cell& c : cells) lo = {std::min(lo.x, c.x), std::min(lo.y, c.y), std::min(lo.z, c.z)};
  for (Cell& c : cells) c = c - lo;
  std::sort(cells.begin(), cells.end(),
            [](const Cell& a, const Cell& b) { return a.index() < b.index(); });
  return cells;
}

}  // namespace

GridMask GridMask::of(std::span<const Cell> cells) {
  GridMask m;
  for (const Cell& c : cells) {
    if (!c.in_grid()) throw std::out_of_range("GridMask::of: cell outside the grid");
    m.set(c.index());
  }
  return m;
}

GridMask GridMask::face_neighbours() const {
  // Bit masks of cells that have a neighbour in +x / -x (resp. y) direction.
  constexpr std::uint32_t kNotLastX = 0b011'011'011 * (1u | 1u << 9 | 1u << 18);
  constexpr std::uint32_t kNotFirstX = 0b110'110'110 * (1u | 1u << 9 | 1u << 18);
  constexpr std::uint32_t kNotLastY = 0b000'111'111 * (1u | 1u << 9 | 1u << 18);
  constexpr std::uint32_t kNotFirstY = 0b111'111'000 * (1u | 1u << 9 | 1u << 18);
  const std::uint32_t b = bits_;
  std::uint32_t n = 0;
  n |= (b & kNotLastX) << 1;
  n |= (b & kNotFirstX) >> 1;
  n |= (b & kNotLastY) << 3;
  n |= (b & kNotFirstY) >> 3;
  n |= b << 9;
  n |= b >> 9;
  return GridMask(n);
}

CellSet GridMask::cells() const {
  CellSet out;
  for (int i = 0; i < kNumCells; ++i)
    if (test(i)) out.push_back(Cell::from_index(i));
  return out;
}

std::string_view piece_name(PieceId id) { return kPieceNames[static_cast<int>(id)]; }

std::optional<PieceId> parse_piece(std::string_view name) {
  for (int i = 0; i < kNumPieces; ++i)
    if (kPieceNames[i] == name) return static_cast<PieceId>(i);
  return std::nullopt;
}

const PieceShape& piece_shape(PieceId id) {
  static const std::array<PieceShape, kNumPieces> shapes = [] {
    std::array<PieceShape, kNumPieces> out{};
    for (int i = 0; i < kNumPieces; ++i) {
      const auto& canon = detail::kCanonicalCells[i];
      out[i].id = static_cast<PieceId>(i);
      out[i].cells.assign(canon.cells.begin(), canon.cells.begin() + canon.size);
      out[i].cells = normalize(out[i].cells);
    }
    return out;
  }();
  return shapes[static_cast<int>(id)];
}

std::vector<CellSet> canonical_orientations(std::span<const Cell> cells) {
  std::vector<CellSet> out;
  if (cells.empty()) return out;
  for (const Rotation& r : enumerate_rotations()) {
    CellSet rotated;
    rotated.reserve(cells.size());
    for (const Cell& c : cells) rotated.push_back(r.apply(c));
    rotated = normalize(std::move(rotated));
    if (std::find(out.begin(), out.end(), rotated) == out.end()) out.push_back(std::move(rotated));
  }
  return out;
}

std::optional<CellSet> place(std::span<const Cell> orientation_cells, const Cell& anchor) {
  CellSet out;
  out.reserve(orientation_cells.size());
  for (const Cell& c : orientation_cells) {
    const Cell p = c + anchor;
    if (!p.in_grid()) return std::nullopt;
    out.push_back(p);
  }
  return out;
}

const OrientationTable& OrientationTable::instance() {
  static const OrientationTable table;
  return table;
}

OrientationTable::OrientationTable() {
  int offset = 0;
  for (PieceId p : kAllPieces) {
    const auto orientations = canonical_orientations(piece_shape(p).cells);
    counts_[static_cast<int>(p)] = static_cast<int>(orientations.size());
    offsets_[static_cast<int>(p)] = offset;
    offset += static_cast<int>(orientations.size());
    for (const auto& o : orientations) {
      piece_of_.push_back(p);
      cells_.push_back(o);
    }
  }
  if (offset != kNumOrientations)
    throw std::logic_error("orientation table disagrees with the compile-time count");

  placements_.assign(static_cast<std::size_t>(offset) * kNumCells, 0u);
  for (int o = 0; o < offset; ++o) {
    for (int pos = 0; pos < kNumCells; ++pos) {
      if (auto placed = place(cells_[o], Cell::from_index(pos)))
        placements_[o * kNumCells + pos] = GridMask::of(*placed).bits();
    }
  }
}

}  // namespace soma
