#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "overlapctl/dataset.hpp"
#include "overlapctl/distance.hpp"
#include "overlapctl/parallel.hpp"

namespace overlapctl {

/// Euclidean distance from instance i to its nearest opposite-class instance:
/// the radius of the largest ball around i that stays pure.
inline double pure_radius(const Dataset& ds, Eigen::Index i) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < ds.size(); ++j) {
    if (ds.is_minority(j) == ds.is_minority(i)) continue;
    best = std::min(best, squared_euclidean(ds.features.row(i), ds.features.row(j)));
  }
  return std::sqrt(best);
}

struct ClassCover {
  std::string class_id;
  std::size_t ball_count = 0;
  std::size_t class_size = 0;
  std::vector<Eigen::Index> centers;
};

struct BallCoverResult {
  std::vector<ClassCover> per_class;  // minority first, then majority
  double onb_avg = 0.0;
};

namespace detail {

/// Greedy pure-ball cover of one class. Ball i covers the same-class
/// instances strictly inside its pure radius, plus its own center (so a
/// zero-radius ball from a cross-class duplicate still covers itself).
/// Selection: most uncovered members, then smaller radius, then smaller
/// center index.
inline ClassCover cover_class(const Dataset& ds, Label which,
                              const std::vector<double>& radius) {
  const auto members = ds.class_indices(which);
  const std::size_t nc = members.size();
  std::vector<std::vector<std::uint32_t>> covers(nc);
  parallel_for(nc, [&](std::size_t a) {
    const Eigen::Index i = members[a];
    const double r = radius[static_cast<std::size_t>(i)];
    const double r2 = r * r;
    for (std::size_t b = 0; b < nc; ++b) {
      if (b == a) {
        covers[a].push_back(static_cast<std::uint32_t>(b));
        continue;
      }
      const double d2 =
          squared_euclidean(ds.features.row(i), ds.features.row(members[b]));
      if (d2 < r2) covers[a].push_back(static_cast<std::uint32_t>(b));
    }
  });

  ClassCover out;
  out.class_id = which == Label::minority ? ds.minority_label : ds.majority_label;
  out.class_size = nc;
  std::vector<std::uint8_t> covered(nc, 0);
  std::size_t remaining = nc;
  while (remaining > 0) {
    std::size_t best = nc;
    std::size_t best_gain = 0;
    for (std::size_t a = 0; a < nc; ++a) {
      std::size_t gain = 0;
      for (std::uint32_t b : covers[a]) gain += covered[b] ? 0 : 1;
      if (gain == 0) continue;
      if (best == nc || gain > best_gain) {
        best = a;
        best_gain = gain;
        continue;
      }
      if (gain == best_gain) {
        const double ra = radius[static_cast<std::size_t>(members[a])];
        const double rb = radius[static_cast<std::size_t>(members[best])];
        if (ra < rb || (ra == rb && members[a] < members[best])) {
          best = a;
        }
      }
    }
    for (std::uint32_t b : covers[best]) {
      if (!covered[b]) {
        covered[b] = 1;
        --remaining;
      }
    }
    out.centers.push_back(members[best]);
  }
  out.ball_count = out.centers.size();
  return out;
}

}  // namespace detail

/// ONB_avg: mean over the two classes of (balls needed to cover the class) /
/// (class size). Higher means more class overlap; 1.0 means every pure ball
/// covers only its own center.
inline BallCoverResult onb_avg(const Dataset& ds) {
  std::vector<double> radius(static_cast<std::size_t>(ds.size()), 0.0);
  parallel_for(static_cast<std::size_t>(ds.size()), [&](std::size_t i) {
    radius[i] = pure_radius(ds, static_cast<Eigen::Index>(i));
  });

  BallCoverResult res;
  res.per_class.push_back(detail::cover_class(ds, Label::minority, radius));
  res.per_class.push_back(detail::cover_class(ds, Label::majority, radius));
  double acc = 0.0;
  for (const auto& c : res.per_class)
    acc += static_cast<double>(c.ball_count) / static_cast<double>(c.class_size);
  res.onb_avg = acc / static_cast<double>(res.per_class.size());
  return res;
}

}  // namespace overlapctl
