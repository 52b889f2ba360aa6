#pragma once

// Shared fixtures: action lookup by cell set and the hand-traced reward cases.

#include "soma/env.hpp"
#include "soma/geometry.hpp"

#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace fixture {

inline soma::GridMask cells(std::initializer_list<soma::Cell> list) {
  return soma::GridMask::of(std::span<const soma::Cell>(list.begin(), list.size()));
}

/// Action of `piece` whose placement covers exactly `target`.
inline soma::ActionIndex find_action(soma::PieceId piece, soma::GridMask target) {
  const auto& t = soma::OrientationTable::instance();
  for (int o = t.first(piece); o < t.first(piece) + t.count(piece); ++o)
    for (int p = 0; p < soma::kNumPositions; ++p)
      if (t.placement(o, p) == target) return {o, p};
  throw std::logic_error("no placement of " + std::string(soma::piece_name(piece)) + " covers the cells");
}

struct RewardCase {
  std::string name;
  double expected_total;
  soma::RewardBreakdown expected;
  soma::RewardBreakdown actual;
};

/// Ten placements traced by hand on small sequences. Components listed as
/// (base, ground, access, height, logic, structure).
inline std::vector<RewardCase> hand_reward_cases() {
  using namespace soma;
  using P = PieceId;
  std::vector<RewardCase> out;
  auto add = [&](std::string name, RewardBreakdown expected, RewardBreakdown actual) {
    out.push_back({std::move(name), expected.total(), expected, actual});
  };

  // Full cube, shaped: Three, Ell, Tee, Corner, Zee, then the screws dead-end.
  {
    const Environment env;
    EnvState s = env.reset_with_order(
        3, {P::Three, P::Ell, P::Tee, P::Corner, P::Zee, P::Positive, P::Negative});
    auto put = [&](P piece, GridMask c) {
      auto r = env.step(s, find_action(piece, c));
      s = r.state;
      return r;
    };
    add("first flat tricube on the floor", {10, 30, 8, 0, 0, 0},
        put(P::Three, cells({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}})).reward);
    add("second floor piece, one neighbour", {10, 25, 8, 0, 15, 2},
        put(P::Ell, cells({{0, 2, 0}, {1, 2, 0}, {2, 2, 0}, {2, 1, 0}})).reward);
    add("tee on the second layer", {10, 0, 8, -8, -15, 8},
        put(P::Tee, cells({{0, 2, 1}, {1, 2, 1}, {2, 2, 1}, {1, 1, 1}})).reward);
    add("corner spanning two layers after a raised piece", {10, 0, 8, -8, 15, 8},
        put(P::Corner, cells({{2, 0, 0}, {2, 0, 1}, {1, 0, 1}, {2, 1, 1}})).reward);
    add("zee reaching the top layer", {10, 0, 8, -16, -15, 12},
        put(P::Zee, cells({{0, 1, 0}, {0, 1, 1}, {0, 0, 1}, {0, 0, 2}})).reward);
  }

  // Two-piece floor: Tee then Ell completes it.
  for (RewardProfile profile : {RewardProfile::Shaped, RewardProfile::Sparse}) {
    EnvConfig cfg;
    cfg.reward = profile;
    const Environment env(cfg);
    EnvState s = env.reset_with_order(1, {P::Tee, P::Ell});
    auto first = env.step(s, find_action(P::Tee, cells({{0, 0, 0}, {0, 1, 0}, {0, 2, 0}, {1, 1, 0}})));
    auto last = env.step(first.state, find_action(P::Ell, cells({{1, 0, 0}, {2, 0, 0}, {2, 1, 0}, {2, 2, 0}})));
    if (profile == RewardProfile::Shaped) {
      add("floor tee, first placement", {10, 30, 8, 0, 0, 0}, first.reward);
      add("floor ell completing the floor", {10, 25, 8, 0, 15, 4}, last.reward);
    } else {
      add("sparse valid placement", {10, 0, 0, 0, 0, 0}, first.reward);
      add("sparse completing placement", {100, 0, 0, 0, 0, 0}, last.reward);
    }
  }

  // Cells under an occupied column: only reachable through the unchecked
  // reward entry point, since supported occupancy is filled from the floor up.
  {
    const Environment env;
    EnvState s = env.reset_with_order(
        3, {P::Corner, P::Three, P::Positive, P::Negative, P::Zee, P::Tee, P::Ell});
    s = env.step(s, find_action(P::Corner, cells({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}))).state;
    // (0,0,0) lies under the corner's (0,0,1). Occupied neighbours outside
    // the cells: (0,1,0) and (0,0,1).
    add("blocked column charges the access penalty", {10, 25, -30, 0, 15, 4},
        env.reward(s, cells({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}}), false));
  }
  return out;
}

}  // namespace fixture
