#include "soma/solver.hpp"

#include "soma/random.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

namespace soma {

GridMask PiecePlacement::cells() const {
  const auto m = OrientationTable::instance().placement(orientation, position);
  return m.value_or(GridMask{});
}

OwnerMap Solution::owner_map() const {
  OwnerMap m;
  m.fill(-1);
  for (const auto& p : placements) {
    const GridMask cells = p.cells();
    for (int i = 0; i < kNumCells; ++i)
      if (cells.test(i)) m[i] = static_cast<std::int8_t>(p.piece);
  }
  return m;
}

namespace {

struct Candidate {
  GridMask cells;
  int orientation;
  int position;
};

std::vector<Candidate> candidates_in(PieceId piece, GridMask target) {
  const auto& table = OrientationTable::instance();
  std::vector<Candidate> out;
  for (int o = table.first(piece); o < table.first(piece) + table.count(piece); ++o)
    for (int p = 0; p < kNumPositions; ++p)
      if (auto cells = table.placement(o, p); cells && cells->subset_of(target))
        out.push_back({*cells, o, p});
  return out;
}

Solution make_solution(std::span<const PieceId> pieces, std::span<const Candidate* const> chosen) {
  Solution s;
  for (std::size_t i = 0; i < pieces.size(); ++i)
    s.placements.push_back({pieces[i], chosen[i]->orientation, chosen[i]->position});
  std::sort(s.placements.begin(), s.placements.end(),
            [](const auto& a, const auto& b) { return a.piece < b.piece; });
  return s;
}

class PieceMajorSearch {
 public:
  PieceMajorSearch(std::span<const PieceId> pieces, GridMask target)
      : pieces_(pieces), target_(target), chosen_(pieces.size(), nullptr) {
    for (PieceId p : pieces) candidates_.push_back(candidates_in(p, target));
  }

  std::vector<Solution> run() {
    recurse(0, GridMask{});
    return std::move(out_);
  }

 private:
  // Every remaining piece must still fit somewhere, and together they must be
  // able to reach every free target cell.
  bool viable(std::size_t next, GridMask occ) const {
    GridMask reach = occ;
    for (std::size_t i = next; i < pieces_.size(); ++i) {
      bool any = false;
      for (const auto& c : candidates_[i])
        if (!c.cells.intersects(occ)) {
          reach |= c.cells;
          any = true;
        }
      if (!any) return false;
    }
    return target_.subset_of(reach);
  }

  void recurse(std::size_t i, GridMask occ) {
    if (i == pieces_.size()) {
      if (occ == target_) out_.push_back(make_solution(pieces_, chosen_));
      return;
    }
    for (const auto& c : candidates_[i]) {
      if (c.cells.intersects(occ)) continue;
      const GridMask next = occ | c.cells;
      if (!viable(i + 1, next)) continue;
      chosen_[i] = &c;
      recurse(i + 1, next);
    }
  }

  std::span<const PieceId> pieces_;
  GridMask target_;
  std::vector<std::vector<Candidate>> candidates_;
  std::vector<const Candidate*> chosen_;
  std::vector<Solution> out_;
};

class CellMajorSearch {
 public:
  CellMajorSearch(std::span<const PieceId> pieces, GridMask target)
      : pieces_(pieces), target_(target), chosen_(pieces.size(), nullptr) {
    by_cell_.resize(pieces.size());
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      all_.push_back(candidates_in(pieces[i], target));
      for (const auto& c : all_.back())
        for (int cell = 0; cell < kNumCells; ++cell)
          if (c.cells.test(cell)) by_cell_[i][cell].push_back(&c);
    }
  }

  std::vector<Solution> run() {
    recurse(GridMask{}, 0);
    return std::move(out_);
  }

 private:
  void recurse(GridMask occ, std::uint32_t used) {
    const GridMask free = target_ & ~occ;
    if (free.empty()) {
      if (used == (1u << pieces_.size()) - 1u) out_.push_back(make_solution(pieces_, chosen_));
      return;
    }
    const int cell = std::countr_zero(free.bits());
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (used & (1u << i)) continue;
      for (const Candidate* c : by_cell_[i][cell]) {
        if (c->cells.intersects(occ)) continue;
        chosen_[i] = c;
        recurse(occ | c->cells, used | (1u << i));
      }
    }
  }

  std::span<const PieceId> pieces_;
  GridMask target_;
  std::vector<std::vector<Candidate>> all_;
  std::vector<std::array<std::vector<const Candidate*>, kNumCells>> by_cell_;
  std::vector<const Candidate*> chosen_;
  std::vector<Solution> out_;
};

Cell rotate_about_centre(const Rotation& r, const Cell& c) {
  const Cell centre{1, 1, 1};
  return r.apply(c - centre) + centre;
}

}  // namespace

std::vector<Solution> solve_all(std::span<const PieceId> pieces, GridMask target,
                                SearchOrder order) {
  std::set<PieceId> distinct(pieces.begin(), pieces.end());
  if (distinct.size() != pieces.size())
    throw PreconditionViolation("solve_all: each piece may be used at most once");
  int cells = 0;
  for (PieceId p : pieces) cells += static_cast<int>(piece_shape(p).cells.size());
  if (cells != target.count())
    throw PreconditionViolation("solve_all: pieces cover " + std::to_string(cells) +
                                " cells but the target has " + std::to_string(target.count()));

  std::vector<Solution> out = order == SearchOrder::PieceMajor
                                  ? PieceMajorSearch(pieces, target).run()
                                  : CellMajorSearch(pieces, target).run();
  std::sort(out.begin(), out.end(),
            [](const Solution& a, const Solution& b) { return a.owner_map() < b.owner_map(); });
  return out;
}

std::size_t count_rotation_distinct(const std::vector<Solution>& solutions) {
  const auto rotations = enumerate_rotations();
  std::set<OwnerMap> classes;
  for (const auto& s : solutions) {
    const OwnerMap m = s.owner_map();
    OwnerMap best;
    best.fill(std::numeric_limits<std::int8_t>::max());
    for (const Rotation& r : rotations) {
      OwnerMap rotated;
      for (int i = 0; i < kNumCells; ++i)
        rotated[rotate_about_centre(r, Cell::from_index(i)).index()] = m[i];
      best = std::min(best, rotated);
    }
    classes.insert(best);
  }
  return classes.size();
}

bool verify(const Solution& sol, GridMask target) {
  const auto& table = OrientationTable::instance();
  GridMask covered;
  std::set<PieceId> seen;
  for (const auto& p : sol.placements) {
    if (p.orientation < 0 || p.orientation >= table.size() || p.position < 0 ||
        p.position >= kNumPositions)
      return false;
    if (table.piece_of(p.orientation) != p.piece || !seen.insert(p.piece).second) return false;
    const auto cells = table.placement(p.orientation, p.position);
    if (!cells || cells->intersects(covered)) return false;
    covered |= *cells;
  }
  return covered == target;
}

namespace {

bool order_from(const std::vector<PiecePlacement>& remaining_in, GridMask occ,
                std::vector<PiecePlacement>& sequence) {
  if (remaining_in.empty()) return true;
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < remaining_in.size(); ++i) {
    const GridMask cells = remaining_in[i].cells();
    int sum = 0;
    for (int c = 0; c < kNumCells; ++c)
      if (cells.test(c)) sum += c / 9;
    ranked.push_back({static_cast<double>(sum) / cells.count(), i});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  for (const auto& [height, i] : ranked) {
    const GridMask cells = remaining_in[i].cells();
    if (!check_support(occ, cells) || !check_vertical_access(occ, cells)) continue;
    auto remaining = remaining_in;
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(i));
    sequence.push_back(remaining_in[i]);
    if (order_from(remaining, occ | cells, sequence)) return true;
    sequence.pop_back();
  }
  return false;
}

}  // namespace

OrderedSolution order_robot_friendly(const Solution& sol) {
  OrderedSolution out{sol, {}};
  if (!order_from(sol.placements, GridMask{}, out.sequence))
    throw Unorderable("order_robot_friendly: no supported, vertically accessible order exists");
  return out;
}

MaskRatioReport mask_ratio_report(int samples, std::uint64_t seed, const Environment& env) {
  if (samples <= 0) throw std::invalid_argument("mask_ratio_report: samples must be positive");
  MaskRatioReport r;
  r.samples = samples;
  r.min_legal = std::numeric_limits<int>::max();

  for (int i = 0; i < samples; ++i) {
    Rng rng(seed, "mask-audit", static_cast<std::uint64_t>(i));
    EnvState s = env.reset(3, rng.next(), OrderPolicy::Shuffled);
    LegalMask mask = env.legal_mask(s);
    const int depth = static_cast<int>(rng.below(kNumPieces));
    for (int d = 0; d < depth; ++d) {
      std::vector<int> legal;
      for (int a = 0; a < kNumActions; ++a)
        if (mask.test(a)) legal.push_back(a);
      const auto next = env.step(s, ActionIndex::from_id(legal[rng.below(legal.size())]));
      if (next.done != Done::Running) break;  // keep the last non-terminal state
      s = next.state;
      mask = next.next_mask;
    }
    const int count = static_cast<int>(mask.count());
    r.legal_counts.push_back(count);
    r.min_legal = std::min(r.min_legal, count);
    r.max_legal = std::max(r.max_legal, count);
  }
  r.mean_legal = std::accumulate(r.legal_counts.begin(), r.legal_counts.end(), 0.0) / samples;
  r.ratio = r.mean_legal > 0 ? kNumActions / r.mean_legal : std::numeric_limits<double>::infinity();

  double empty = 0;
  for (PieceId first : kAllPieces) {
    std::vector<PieceId> order{first};
    for (PieceId p : kAllPieces)
      if (p != first) order.push_back(p);
    empty += static_cast<double>(env.legal_mask(env.reset_with_order(3, order)).count());
  }
  r.empty_grid_legal = empty / kNumPieces;
  return r;
}

}  // namespace soma
