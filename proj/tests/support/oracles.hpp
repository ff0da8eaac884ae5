#pragma once

// Brute-force reference implementations, coded from the definitions with
// plain loops. They intentionally share no computation path with the library
// kernels they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "overlapctl/dataset.hpp"

namespace oracles {

using overlapctl::Dataset;
using overlapctl::Label;

inline double euclid(const Dataset& ds, Eigen::Index a, Eigen::Index b) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < ds.dim(); ++k) {
    const double t = ds.features(a, k) - ds.features(b, k);
    acc += t * t;
  }
  return std::sqrt(acc);
}

/// Definition-literal Tomek pair scan: a pair of opposite-class instances
/// qualifies unless some third instance is strictly closer to either member.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> naive_tomek_pairs(
    const Dataset& ds) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // (minority, majority)
  const Eigen::Index n = ds.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!ds.is_minority(i)) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (ds.is_minority(j)) continue;
      const double dij = euclid(ds, i, j);
      bool blocked = false;
      for (Eigen::Index p = 0; p < n && !blocked; ++p) {
        if (p == i || p == j) continue;
        if (euclid(ds, i, p) < dij || euclid(ds, j, p) < dij) blocked = true;
      }
      if (!blocked) pairs.emplace_back(i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

// ---------------------------------------------------------------------------
// Naive MGRU
// ---------------------------------------------------------------------------

struct NaiveMgru {
  std::vector<std::vector<std::uint8_t>> columns;  // [tau][j]
  std::vector<int> phi;
};

namespace detail {

inline std::vector<std::vector<double>> strip_feature(const Dataset& ds,
                                                      Eigen::Index tau) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(ds.size()));
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    for (Eigen::Index j = 0; j < ds.dim(); ++j)
      if (j != tau)
        rows[static_cast<std::size_t>(i)].push_back(ds.features(i, j));
  return rows;
}

inline std::vector<double> column_means(const std::vector<std::vector<double>>& rows) {
  const std::size_t d = rows.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < d; ++k) mean[k] += r[k];
  for (double& m : mean) m /= static_cast<double>(rows.size());
  return mean;
}

inline std::vector<std::vector<double>> covariance(
    const std::vector<std::vector<double>>& rows, const std::vector<double>& mean) {
  const std::size_t n = rows.size();
  const std::size_t d = mean.size();
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += (rows[i][a] - mean[a]) * (rows[i][b] - mean[b]);
      cov[a][b] = acc / static_cast<double>(n - 1);
    }
  return cov;
}

/// Gauss-Jordan with partial pivoting. The oracle datasets are built to keep
/// the covariance comfortably nonsingular.
inline std::vector<std::vector<double>> invert(std::vector<std::vector<double>> a) {
  const std::size_t d = a.size();
  std::vector<std::vector<double>> inv(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == 0.0) throw std::runtime_error("oracle: singular covariance");
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double scale = a[col][col];
    for (std::size_t c = 0; c < d; ++c) {
      a[col][c] /= scale;
      inv[col][c] /= scale;
    }
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) {
        a[r][c] -= f * a[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

}  // namespace detail

/// Re-runs the relabeling from scratch for one metric ("md" or "sed").
inline NaiveMgru naive_mgru(const Dataset& ds, bool mahalanobis) {
  const auto n = static_cast<std::size_t>(ds.size());
  const auto m = static_cast<std::size_t>(ds.dim());
  NaiveMgru out;
  out.columns.assign(m, std::vector<std::uint8_t>(n, 0));
  out.phi.assign(n, 0);

  for (std::size_t tau = 0; tau < m; ++tau) {
    const auto rows = detail::strip_feature(ds, static_cast<Eigen::Index>(tau));
    const auto mean = detail::column_means(rows);
    const auto cov = detail::covariance(rows, mean);
    const std::size_t d = mean.size();

    std::vector<double> dist(n, 0.0);
    if (mahalanobis) {
      const auto inv = detail::invert(cov);
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> diff(d);
        for (std::size_t k = 0; k < d; ++k) diff[k] = rows[j][k] - mean[k];
        double q = 0.0;
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b < d; ++b) q += diff[a] * inv[a][b] * diff[b];
        dist[j] = std::sqrt(q < 0.0 ? 0.0 : q);
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        double q = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double s = std::sqrt(cov[k][k]);
          if (s < 1e-12) continue;
          const double t = (rows[j][k] - mean[k]) / s;
          q += t * t;
        }
        dist[j] = std::sqrt(q);
      }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

    for (std::size_t p = 0; p + 1 < n; ++p) {
      const auto a = static_cast<Eigen::Index>(order[p]);
      const auto b = static_cast<Eigen::Index>(order[p + 1]);
      if (ds.is_minority(a) == ds.is_minority(b)) continue;
      const auto maj = ds.is_minority(a) ? order[p + 1] : order[p];
      out.columns[tau][maj] = 1;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    int sum = 0;
    for (std::size_t tau = 0; tau < m; ++tau) sum += out.columns[tau][j];
    out.phi[j] = sum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ranking-metric oracles (exhaustive threshold enumeration)
// ---------------------------------------------------------------------------

struct RatePoint {
  double fpr;
  double tpr;
};

inline double exhaustive_auc(const std::vector<double>& scores,
                             const std::vector<Label>& labels) {
  std::size_t pos = 0, neg = 0;
  for (Label l : labels) (l == Label::minority ? pos : neg) += 1;

  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<RatePoint> points;
  points.push_back({0.0, 0.0});  // threshold above every score
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= *it) (labels[i] == Label::minority ? tp : fp) += 1;
    }
    points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                      static_cast<double>(tp) / static_cast<double>(pos)});
  }
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  return area;
}

inline double exhaustive_aupr(const std::vector<double>& scores,
                              const std::vector<Label>& labels) {
  std::size_t pos = 0;
  for (Label l : labels) pos += l == Label::minority ? 1 : 0;

  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  double ap = 0.0;
  double recall_prev = 0.0;
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= *it) (labels[i] == Label::minority ? tp : fp) += 1;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
  }
  return ap;
}

}  // namespace oracles
