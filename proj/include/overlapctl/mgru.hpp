#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "overlapctl/dataset.hpp"
#include "overlapctl/distance.hpp"
#include "overlapctl/errors.hpp"
#include "overlapctl/parallel.hpp"

namespace overlapctl {

enum class Metric { mahalanobis, std_euclidean };

inline const char* metric_name(Metric m) {
  return m == Metric::mahalanobis ? "mahalanobis" : "std_euclidean";
}

/// The dataset with one feature removed. Column indices are the retained
/// ones, ascending.
struct SubspaceView {
  Eigen::Index removed_feature = -1;
  std::vector<Eigen::Index> columns;
  const Dataset* parent = nullptr;

  Eigen::MatrixXd materialize() const {
    Eigen::MatrixXd out(parent->size(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c)
      out.col(static_cast<Eigen::Index>(c)) = parent->features.col(columns[c]);
    return out;
  }
};

/// The m leave-one-feature-out views, in removed-feature order.
inline std::vector<SubspaceView> local_subspaces(const Dataset& ds) {
  const Eigen::Index m = ds.dim();
  std::vector<SubspaceView> views;
  views.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index tau = 0; tau < m; ++tau) {
    SubspaceView v;
    v.removed_feature = tau;
    v.parent = &ds;
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != tau) v.columns.push_back(j);
    views.push_back(std::move(v));
  }
  return views;
}

/// Per-subspace relabel flags: instances are ranked by their distance to the
/// view mean (ties by original index), and for every adjacent opposite-class
/// pair in that ranking the majority member is flagged. A majority instance
/// adjacent to minority neighbors on both sides is still flagged once.
/// Minority instances are never flagged.
inline std::vector<std::uint8_t> subspace_indicator(const SubspaceView& view,
                                                    Metric metric) {
  const Dataset& ds = *view.parent;
  const Eigen::Index n = ds.size();
  const Eigen::MatrixXd sub = view.materialize();
  const DistanceContext ctx = build_context(sub);

  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    dist[static_cast<std::size_t>(j)] =
        metric == Metric::mahalanobis
            ? mahalanobis(sub.row(j).transpose(), ctx.mean, ctx.cov_inverse)
            : std_euclidean(sub.row(j).transpose(), ctx.mean, ctx.stds);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double da = dist[static_cast<std::size_t>(a)];
    const double db = dist[static_cast<std::size_t>(b)];
    if (da != db) return da < db;
    return a < b;
  });

  std::vector<std::uint8_t> flags(static_cast<std::size_t>(n), 0);
  for (std::size_t p = 0; p + 1 < order.size(); ++p) {
    const Eigen::Index a = order[p];
    const Eigen::Index b = order[p + 1];
    if (ds.is_minority(a) == ds.is_minority(b)) continue;
    const Eigen::Index maj = ds.is_minority(a) ? b : a;
    flags[static_cast<std::size_t>(maj)] = 1;
  }
  return flags;
}

/// n x m binary relabel matrix; column tau is the indicator vector of the
/// subspace that removes feature tau.
struct IndicatorMatrix {
  std::vector<std::uint8_t> flags;  // row-major n x m
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Metric metric = Metric::std_euclidean;

  std::uint8_t at(Eigen::Index j, Eigen::Index tau) const {
    return flags[static_cast<std::size_t>(j * cols + tau)];
  }
};

inline IndicatorMatrix build_indicator_matrix(const Dataset& ds, Metric metric) {
  const auto views = local_subspaces(ds);
  IndicatorMatrix mat;
  mat.rows = ds.size();
  mat.cols = ds.dim();
  mat.metric = metric;
  mat.flags.assign(static_cast<std::size_t>(mat.rows * mat.cols), 0);
  parallel_for(views.size(), [&](std::size_t tau) {
    const auto column = subspace_indicator(views[tau], metric);
    for (Eigen::Index j = 0; j < mat.rows; ++j)
      mat.flags[static_cast<std::size_t>(j) * static_cast<std::size_t>(mat.cols) + tau] =
          column[static_cast<std::size_t>(j)];
  });
  return mat;
}

/// Global relabeled index K(x_j) per instance: the row sums of the indicator
/// matrix, each in [0, m].
struct RelabeledIndexVector {
  std::vector<int> values;

  int max_value() const {
    int best = 0;
    for (int v : values) best = std::max(best, v);
    return best;
  }
  /// Distinct positive index values, ascending.
  std::vector<int> positive_values() const {
    std::vector<int> out(values.begin(), values.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    while (!out.empty() && out.front() <= 0) out.erase(out.begin());
    return out;
  }
};

inline RelabeledIndexVector global_index(const IndicatorMatrix& mat) {
  RelabeledIndexVector phi;
  phi.values.assign(static_cast<std::size_t>(mat.rows), 0);
  for (Eigen::Index j = 0; j < mat.rows; ++j) {
    int sum = 0;
    for (Eigen::Index tau = 0; tau < mat.cols; ++tau) sum += mat.at(j, tau);
    phi.values[static_cast<std::size_t>(j)] = sum;
  }
  return phi;
}

/// Removes every majority instance whose global relabeled index is >= the
/// threshold. Minority instances are always kept and survivor order is the
/// input order. Emptying the majority class is an error, not a clamp.
inline Dataset undersample(const Dataset& ds, const RelabeledIndexVector& phi,
                           int threshold) {
  if (static_cast<Eigen::Index>(phi.values.size()) != ds.size())
    throw DimensionError("relabeled index length does not match dataset");
  if (threshold < 1 || static_cast<Eigen::Index>(threshold) > ds.dim())
    throw ConfigError("threshold must lie in [1, " + std::to_string(ds.dim()) + "]");

  std::vector<Eigen::Index> keep;
  bool majority_left = false;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (!ds.is_minority(i) && phi.values[static_cast<std::size_t>(i)] >= threshold)
      continue;
    if (!ds.is_minority(i)) majority_left = true;
    keep.push_back(i);
  }
  if (!majority_left)
    throw ExhaustionError("threshold " + std::to_string(threshold) +
                          " would delete every majority instance");
  Dataset out = ds.subset(keep);
  out.check();
  return out;
}

struct MgruFit {
  IndicatorMatrix indicator;
  RelabeledIndexVector phi;
};

/// The full relabeling pass: indicator matrix plus global index vector.
/// Under-sampling at a chosen threshold is a separate, cheap step so callers
/// can re-threshold without recomputing.
inline MgruFit mgru_fit(const Dataset& ds, Metric metric) {
  MgruFit fit;
  fit.indicator = build_indicator_matrix(ds, metric);
  fit.phi = global_index(fit.indicator);
  return fit;
}

}  // namespace overlapctl
