#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Cholesky>

#include <cmath>

#include "overlapctl/errors.hpp"

namespace overlapctl {

/// View statistics shared by the distance kernels: column means, standard
/// deviations, the sample covariance, and its (possibly ridge-regularized)
/// inverse.
struct DistanceContext {
  Eigen::VectorXd mean;
  Eigen::VectorXd stds;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd cov_inverse;
  bool regularized = false;
};

inline constexpr double kConditionLimit = 1e12;
inline constexpr double kZeroStd = 1e-12;

/// Builds the context for an n x d view. Covariance uses the unbiased (n-1)
/// estimator. A singular or ill-conditioned covariance (condition estimate
/// above 1e12, or a non-positive eigenvalue) is inverted as (Sigma + lambda*I)
/// with lambda = 1e-6 * trace(Sigma)/d, and the context is flagged.
inline DistanceContext build_context(const Eigen::MatrixXd& view) {
  const Eigen::Index n = view.rows();
  const Eigen::Index d = view.cols();
  if (n < 2) throw DegenerateError("context needs at least 2 instances");
  if (d < 1) throw DegenerateError("context needs at least 1 feature");

  DistanceContext ctx;
  ctx.mean = view.colwise().mean();
  const Eigen::MatrixXd centered = view.rowwise() - ctx.mean.transpose();
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = ((cov + cov.transpose()) * 0.5).eval();
  ctx.covariance = cov;

  ctx.stds.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) ctx.stds[k] = std::sqrt(cov(k, k));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  bool singular = es.info() != Eigen::Success;
  if (!singular) {
    const double ev_min = es.eigenvalues().minCoeff();
    const double ev_max = es.eigenvalues().maxCoeff();
    singular = !(ev_min > 0.0) || !std::isfinite(ev_min) || !std::isfinite(ev_max) ||
               ev_max > kConditionLimit * ev_min;
  }

  Eigen::MatrixXd base = cov;
  if (singular) {
    double lambda = 1e-6 * cov.trace() / static_cast<double>(d);
    if (!(lambda > 0.0)) lambda = 1e-12;  // all-constant view: any finite inverse works
    base += lambda * Eigen::MatrixXd::Identity(d, d);
    ctx.regularized = true;
  }
  Eigen::MatrixXd inv = base.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
  ctx.cov_inverse = ((inv + inv.transpose()) * 0.5).eval();
  return ctx;
}

/// sqrt(sum_k ((a_k - b_k)/s_k)^2). Components with s_k below 1e-12 contribute
/// zero: a constant in-sample feature means a_k == b_k for in-sample points.
template <typename DA, typename DB, typename DS>
double std_euclidean(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                     const Eigen::MatrixBase<DS>& stds) {
  if (a.size() != b.size() || a.size() != stds.size())
    throw DimensionError("std_euclidean: length mismatch");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double s = stds(k);
    if (s < kZeroStd) continue;
    const double t = (a(k) - b(k)) / s;
    acc += t * t;
  }
  return std::sqrt(acc);
}

/// sqrt((a-b)^T Sigma^-1 (a-b)); round-off can push the quadratic form
/// slightly negative, which is clamped to zero before the root.
template <typename DA, typename DB>
double mahalanobis(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                   const Eigen::MatrixXd& cov_inverse) {
  if (a.size() != b.size())
    throw DimensionError("mahalanobis: length mismatch");
  if (cov_inverse.rows() != a.size() || cov_inverse.cols() != a.size())
    throw DimensionError("mahalanobis: inverse covariance shape mismatch");
  Eigen::VectorXd diff(a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) diff[k] = a(k) - b(k);
  const double q = diff.dot(cov_inverse * diff);
  return std::sqrt(q < 0.0 ? 0.0 : q);
}

/// Plain Euclidean distance (Tomek pairs, pure balls, the k-NN scorer).
template <typename DA, typename DB>
double euclidean(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.size() != b.size()) throw DimensionError("euclidean: length mismatch");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double t = a(k) - b(k);
    acc += t * t;
  }
  return std::sqrt(acc);
}

template <typename DA, typename DB>
double squared_euclidean(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double t = a(k) - b(k);
    acc += t * t;
  }
  return acc;
}

}  // namespace overlapctl
