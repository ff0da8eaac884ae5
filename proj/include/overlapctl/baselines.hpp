#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "overlapctl/dataset.hpp"
#include "overlapctl/distance.hpp"
#include "overlapctl/errors.hpp"
#include "overlapctl/parallel.hpp"
#include "overlapctl/rng.hpp"

namespace overlapctl {

/// Opposite-class pair with no strictly closer third instance (plain
/// Euclidean). Equidistant third instances do not disqualify a pair.
struct TomekPair {
  Eigen::Index minority_index = -1;
  Eigen::Index majority_index = -1;
  double distance = 0.0;
};

/// All Tomek-Link pairs, each reported once, sorted by (minority, majority)
/// index. Uses per-instance nearest-neighbor distances: a pair qualifies iff
/// its distance does not exceed either member's nearest-neighbor distance.
inline std::vector<TomekPair> tomek_link_pairs(const Dataset& ds) {
  const Eigen::Index n = ds.size();
  std::vector<double> nn_sq(static_cast<std::size_t>(n),
                            std::numeric_limits<double>::infinity());
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index p = 0; p < n; ++p) {
      if (p == i) continue;
      best = std::min(best, squared_euclidean(ds.features.row(i), ds.features.row(p)));
    }
    nn_sq[iu] = best;
  });

  std::vector<TomekPair> pairs;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!ds.is_minority(i)) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (ds.is_minority(j)) continue;
      const double d2 = squared_euclidean(ds.features.row(i), ds.features.row(j));
      if (d2 <= nn_sq[static_cast<std::size_t>(i)] &&
          d2 <= nn_sq[static_cast<std::size_t>(j)])
        pairs.push_back({i, j, std::sqrt(d2)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const TomekPair& a, const TomekPair& b) {
    if (a.minority_index != b.minority_index) return a.minority_index < b.minority_index;
    return a.majority_index < b.majority_index;
  });
  return pairs;
}

/// Single pass: drop the majority member of every Tomek-Link pair. Not
/// idempotent; removal can create new mutual-nearest pairs, and a second
/// application may remove more.
inline Dataset tomek_undersample(const Dataset& ds) {
  const auto pairs = tomek_link_pairs(ds);
  std::vector<std::uint8_t> drop(static_cast<std::size_t>(ds.size()), 0);
  for (const auto& p : pairs) drop[static_cast<std::size_t>(p.majority_index)] = 1;

  std::vector<Eigen::Index> keep;
  bool majority_left = false;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (drop[static_cast<std::size_t>(i)]) continue;
    if (!ds.is_minority(i)) majority_left = true;
    keep.push_back(i);
  }
  if (!majority_left)
    throw ExhaustionError("Tomek removal would delete every majority instance");
  Dataset out = ds.subset(keep);
  out.check();
  return out;
}

/// Modified UCBSS: per feature, instances are sorted by value (equal values
/// in seeded-shuffle order) and majority instances adjacent to an unstable
/// cut-point (opposite-label neighbor) are flagged. Minority instances and
/// the union of flagged majority instances survive; unflagged majority
/// instances are redundant and removed. With distinct feature values the
/// result is seed-independent.
inline Dataset ucbss_undersample(const Dataset& ds, std::uint64_t seed) {
  const Eigen::Index n = ds.size();
  const Eigen::Index m = ds.dim();
  std::vector<std::uint8_t> flagged(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<std::uint8_t>> per_feature(
      static_cast<std::size_t>(m),
      std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0));

  parallel_for(static_cast<std::size_t>(m), [&](std::size_t f) {
    std::mt19937_64 gen(mix_seed(seed, 0x75636273ULL + f));
    std::vector<Eigen::Index> tie_rank(static_cast<std::size_t>(n));
    std::iota(tie_rank.begin(), tie_rank.end(), Eigen::Index{0});
    seeded_shuffle(tie_rank, gen);
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < tie_rank.size(); ++r)
      pos[static_cast<std::size_t>(tie_rank[r])] = static_cast<Eigen::Index>(r);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto col = ds.features.col(static_cast<Eigen::Index>(f));
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (col(a) != col(b)) return col(a) < col(b);
      return pos[static_cast<std::size_t>(a)] < pos[static_cast<std::size_t>(b)];
    });

    auto& flags = per_feature[f];
    for (std::size_t p = 0; p + 1 < order.size(); ++p) {
      const Eigen::Index a = order[p];
      const Eigen::Index b = order[p + 1];
      if (ds.is_minority(a) == ds.is_minority(b)) continue;  // stable cut-point
      const Eigen::Index maj = ds.is_minority(a) ? b : a;
      flags[static_cast<std::size_t>(maj)] = 1;
    }
  });
  for (const auto& flags : per_feature)
    for (std::size_t i = 0; i < flags.size(); ++i)
      if (flags[i]) flagged[i] = 1;

  std::vector<Eigen::Index> keep;
  bool majority_left = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!ds.is_minority(i) && !flagged[static_cast<std::size_t>(i)]) continue;
    if (!ds.is_minority(i)) majority_left = true;
    keep.push_back(i);
  }
  if (!majority_left)
    throw ExhaustionError("UCBSS would delete every majority instance");
  Dataset out = ds.subset(keep);
  out.check();
  return out;
}

/// Uniformly removes majority instances until |N_maj| / |N_min| <= target_ir.
inline Dataset random_undersample(const Dataset& ds, double target_ir,
                                  std::uint64_t seed) {
  if (!(target_ir >= 1.0)) throw ConfigError("target imbalance ratio must be >= 1");
  const double current = imbalance_ratio(ds);
  if (target_ir > current)
    throw ConfigError("target imbalance ratio exceeds the current ratio");

  const auto nmin = static_cast<double>(ds.minority_count());
  const auto target_maj = static_cast<Eigen::Index>(std::floor(target_ir * nmin));
  auto majority = ds.class_indices(Label::majority);
  if (target_maj >= static_cast<Eigen::Index>(majority.size())) return ds;

  std::mt19937_64 gen(mix_seed(seed, 0x727573ULL));  // "rus"
  seeded_shuffle(majority, gen);
  majority.resize(static_cast<std::size_t>(target_maj));

  std::vector<std::uint8_t> keep_majority(static_cast<std::size_t>(ds.size()), 0);
  for (Eigen::Index i : majority) keep_majority[static_cast<std::size_t>(i)] = 1;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (ds.is_minority(i) || keep_majority[static_cast<std::size_t>(i)]) keep.push_back(i);
  Dataset out = ds.subset(keep);
  out.check();
  return out;
}

}  // namespace overlapctl
