#include "oracles.hpp"
#include "soma/geometry.hpp"

#include <doctest.h>

#include <set>

using namespace soma;

namespace {

std::vector<oracle::Point> points(const CellSet& cells) {
  std::vector<oracle::Point> out;
  for (const Cell& c : cells) out.push_back({c.x, c.y, c.z});
  return out;
}

std::set<oracle::Point> point_set(const CellSet& cells) {
  const auto p = points(cells);
  return {p.begin(), p.end()};
}

}  // namespace

TEST_CASE("cell index is a bijection on the grid") {
  for (int i = 0; i < kNumCells; ++i) {
    const Cell c = Cell::from_index(i);
    CHECK(c.in_grid());
    CHECK(c.index() == i);
    CHECK(c.index() == c.x + 3 * c.y + 9 * c.z);
  }
}

TEST_CASE("rotation group: 24 distinct proper rotations, identity first") {
  const auto rots = enumerate_rotations();
  CHECK(rots.size() == 24);
  CHECK(rots[0] == Rotation{});
  std::set<oracle::Mat3> seen;
  for (const auto& r : rots) {
    CHECK(r.determinant() == 1);
    seen.insert(oracle::matrix_of(r));
  }
  CHECK(seen.size() == 24);
  CHECK(seen == oracle::rotation_group());
}

TEST_CASE("rotation group is closed under composition and inverse (all 576 pairs)") {
  const auto rots = enumerate_rotations();
  auto member = [&](const Rotation& x) { return std::find(rots.begin(), rots.end(), x) != rots.end(); };
  for (const auto& a : rots) {
    CHECK(member(a.inverse()));
    CHECK(a.compose(a.inverse()) == Rotation{});
    for (const auto& b : rots) {
      const Rotation ab = a.compose(b);
      REQUIRE(member(ab));
      CHECK(oracle::matrix_of(ab) == oracle::mul(oracle::matrix_of(a), oracle::matrix_of(b)));
    }
  }
}

TEST_CASE("pieces: standard set, face-connected, 27 cells in total") {
  int total = 0;
  for (PieceId p : kAllPieces) {
    const auto& cells = piece_shape(p).cells;
    total += static_cast<int>(cells.size());
    CHECK(cells.size() == (p == PieceId::Three ? 3u : 4u));
    // Connectivity by flood fill over face neighbours.
    std::set<oracle::Point> all = point_set(cells), reached{points(cells).front()};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& a : all)
        for (const auto& b : std::set<oracle::Point>(reached))
          if (std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]) == 1)
            grew |= reached.insert(a).second;
    }
    CHECK(reached == all);
  }
  CHECK(total == 27);
}

TEST_CASE("orientation counts match an independent matrix-group enumeration") {
  const std::array<int, kNumPieces> expected = {8, 12, 12, 12, 12, 24, 12};
  int sum = 0;
  for (PieceId p : kAllPieces) {
    const auto ours = canonical_orientations(piece_shape(p).cells);
    const auto ref = oracle::orientations(points(piece_shape(p).cells));
    CAPTURE(piece_name(p));
    CHECK(ours.size() == ref.size());
    CHECK(static_cast<int>(ours.size()) == expected[static_cast<int>(p)]);
    std::set<std::set<oracle::Point>> as_sets;
    for (const auto& o : ours) as_sets.insert(point_set(o));
    CHECK(as_sets == ref);
    CHECK(OrientationTable::instance().count(p) == static_cast<int>(ours.size()));
    sum += static_cast<int>(ours.size());
  }
  CHECK(sum == kNumOrientations);
  CHECK(kNumOrientations == 92);
  CHECK(kNumActions == 92 * 27);
  CHECK(kUndeduplicatedOrientations * kNumPositions == 4536);
}

TEST_CASE("the two screw pieces are mirror images with disjoint orientation sets") {
  auto mirror = [](const CellSet& cells) {
    std::vector<oracle::Point> out;
    for (const Cell& c : cells) out.push_back({-c.x, c.y, c.z});
    return oracle::normalised(out);
  };
  std::set<std::set<oracle::Point>> pos, neg, mirrored;
  for (const auto& o : canonical_orientations(piece_shape(PieceId::Positive).cells)) {
    pos.insert(point_set(o));
    mirrored.insert(mirror(o));
  }
  for (const auto& o : canonical_orientations(piece_shape(PieceId::Negative).cells)) neg.insert(point_set(o));
  CHECK(mirrored == neg);
  for (const auto& o : pos) CHECK(neg.count(o) == 0);
}

TEST_CASE("dedup is idempotent on every output") {
  for (PieceId p : kAllPieces)
    for (const auto& o : canonical_orientations(piece_shape(p).cells))
      CHECK(canonical_orientations(o).size() == canonical_orientations(piece_shape(p).cells).size());
}

TEST_CASE("orientation table ids are contiguous and unique per piece") {
  const auto& t = OrientationTable::instance();
  CHECK(t.size() == kNumOrientations);
  int next = 0;
  for (PieceId p : kAllPieces) {
    CHECK(t.first(p) == next);
    std::set<std::set<oracle::Point>> seen;
    for (int l = 0; l < t.count(p); ++l) {
      const int g = t.global_id(p, l);
      CHECK(g == next + l);
      CHECK(t.piece_of(g) == p);
      CHECK(seen.insert(point_set(t.cells(g))).second);
    }
    next += t.count(p);
  }
  CHECK(next == kNumOrientations);
}

TEST_CASE("place examples") {
  const Cell unit[] = {{0, 0, 0}};
  const auto single = place(unit, {2, 2, 2});
  REQUIRE(single);
  CHECK(*single == CellSet{{2, 2, 2}});

  const Cell bar[] = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK_FALSE(place(bar, {0, 0, 0}));

  const Cell vee[] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}};
  const auto moved = place(vee, {1, 1, 0});
  REQUIRE(moved);
  CHECK(*moved == CellSet{{1, 1, 0}, {2, 1, 0}, {2, 2, 0}});
}

TEST_CASE("place stays in the grid and preserves size; table placements agree") {
  const auto& t = OrientationTable::instance();
  for (int o = 0; o < t.size(); ++o)
    for (int p = 0; p < kNumPositions; ++p) {
      const auto placed = place(t.cells(o), Cell::from_index(p));
      const auto mask = t.placement(o, p);
      CHECK(placed.has_value() == mask.has_value());
      if (!placed) continue;
      CHECK(placed->size() == t.cells(o).size());
      for (const Cell& c : *placed) CHECK(c.in_grid());
      CHECK(GridMask::of(*placed) == *mask);
    }
}

TEST_CASE("GridMask shifts and neighbours agree with coordinates") {
  for (int i = 0; i < kNumCells; ++i) {
    GridMask m;
    m.set(i);
    const Cell c = Cell::from_index(i);
    int expected = 0;
    for (const Cell& d : {Cell{1, 0, 0}, Cell{-1, 0, 0}, Cell{0, 1, 0}, Cell{0, -1, 0}, Cell{0, 0, 1}, Cell{0, 0, -1}}) {
      const Cell n = c + d;
      if (!n.in_grid()) continue;
      ++expected;
      CHECK(m.face_neighbours().test(n.index()));
    }
    CHECK(m.face_neighbours().count() == expected);
    CHECK(m.shifted_up().test(c + Cell{0, 0, 1}) == (c.z < 2));
    CHECK(m.shifted_down().test(c - Cell{0, 0, 1}) == (c.z > 0));
  }
  const Cell off[] = {{3, 0, 0}};
  CHECK_THROWS_AS(GridMask::of(off), std::out_of_range);
}
