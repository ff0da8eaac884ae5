#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "overlapctl/baselines.hpp"
#include "overlapctl/dataset.hpp"
#include "overlapctl/errors.hpp"
#include "overlapctl/mgru.hpp"
#include "overlapctl/parallel.hpp"

namespace overlapctl {

// ---------------------------------------------------------------------------
// Scorers
// ---------------------------------------------------------------------------

/// Axis-aligned binary decision tree: Gini impurity, exhaustive midpoint
/// splits, ties to the lowest feature index then lowest threshold. Leaf score
/// is the minority fraction in the leaf.
struct TreeModel {
  struct Node {
    Eigen::Index feature = -1;   // -1 for leaves
    double threshold = 0.0;      // left: value < threshold
    int left = -1;
    int right = -1;
    double score = 0.0;
  };
  std::vector<Node> nodes;

  template <typename Row>
  double score(const Eigen::MatrixBase<Row>& x) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
      const Node& nd = nodes[static_cast<std::size_t>(at)];
      at = x(nd.feature) < nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(at)].score;
  }
};

namespace detail {

inline double gini(std::size_t minority, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(minority) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

inline int grow_tree(TreeModel& model, const Dataset& ds,
                     const std::vector<Eigen::Index>& rows, int depth,
                     int max_depth, int min_leaf) {
  std::size_t n_min = 0;
  for (Eigen::Index r : rows) n_min += ds.is_minority(r) ? 1 : 0;
  const std::size_t n = rows.size();
  const double node_impurity = gini(n_min, n);

  const int id = static_cast<int>(model.nodes.size());
  model.nodes.emplace_back();
  model.nodes[static_cast<std::size_t>(id)].score =
      static_cast<double>(n_min) / static_cast<double>(n);

  if (depth >= max_depth || n_min == 0 || n_min == n ||
      n < 2 * static_cast<std::size_t>(min_leaf))
    return id;

  Eigen::Index best_feature = -1;
  double best_threshold = 0.0;
  double best_impurity = node_impurity;  // must strictly improve

  std::vector<std::pair<double, bool>> column(n);  // (value, is_minority)
  for (Eigen::Index f = 0; f < ds.dim(); ++f) {
    for (std::size_t i = 0; i < n; ++i)
      column[i] = {ds.features(rows[i], f), ds.is_minority(rows[i])};
    std::sort(column.begin(), column.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::size_t left_n = 0, left_min = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left_n;
      left_min += column[i].second ? 1 : 0;
      if (column[i].first == column[i + 1].first) continue;  // not a boundary
      if (left_n < static_cast<std::size_t>(min_leaf) ||
          n - left_n < static_cast<std::size_t>(min_leaf))
        continue;
      const double t = column[i].first / 2.0 + column[i + 1].first / 2.0;
      const double w =
          (static_cast<double>(left_n) * gini(left_min, left_n) +
           static_cast<double>(n - left_n) * gini(n_min - left_min, n - left_n)) /
          static_cast<double>(n);
      if (w < best_impurity) {
        best_impurity = w;
        best_feature = f;
        best_threshold = t;
      }
    }
  }

  if (best_feature < 0) return id;

  std::vector<Eigen::Index> left_rows, right_rows;
  for (Eigen::Index r : rows)
    (ds.features(r, best_feature) < best_threshold ? left_rows : right_rows)
        .push_back(r);
  // Midpoint rounding can in principle land on the boundary value itself;
  // refuse the degenerate split rather than recurse on an empty side.
  if (left_rows.empty() || right_rows.empty()) return id;

  const int left = grow_tree(model, ds, left_rows, depth + 1, max_depth, min_leaf);
  const int right = grow_tree(model, ds, right_rows, depth + 1, max_depth, min_leaf);
  model.nodes[static_cast<std::size_t>(id)].feature = best_feature;
  model.nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
  model.nodes[static_cast<std::size_t>(id)].left = left;
  model.nodes[static_cast<std::size_t>(id)].right = right;
  return id;
}

}  // namespace detail

inline TreeModel fit_tree(const Dataset& train, int max_depth = 25, int min_leaf = 1) {
  if (max_depth < 0 || min_leaf < 1) throw ConfigError("bad tree parameters");
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(train.size()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  TreeModel model;
  detail::grow_tree(model, train, rows, 0, max_depth, min_leaf);
  return model;
}

/// k-NN minority-fraction scorer; distance ties at rank k go to the lower
/// training index.
struct KnnModel {
  Eigen::MatrixXd points;
  std::vector<Label> labels;
  int k = 5;

  template <typename Row>
  double score(const Eigen::MatrixBase<Row>& x) const {
    const Eigen::Index n = points.rows();
    std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      dist[static_cast<std::size_t>(i)] = {squared_euclidean(points.row(i), x.transpose()), i};
    std::sort(dist.begin(), dist.end());
    std::size_t minority = 0;
    for (int i = 0; i < k; ++i)
      minority += labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)] ==
                          Label::minority
                      ? 1
                      : 0;
    return static_cast<double>(minority) / static_cast<double>(k);
  }
};

inline KnnModel fit_knn(const Dataset& train, int k = 5) {
  if (k < 1 || static_cast<Eigen::Index>(k) > train.size())
    throw ConfigError("k must lie in [1, n]");
  KnnModel model;
  model.points = train.features;
  model.labels = train.labels;
  model.k = k;
  return model;
}

// ---------------------------------------------------------------------------
// Ranking metrics
// ---------------------------------------------------------------------------

struct ScoredPredictions {
  std::vector<double> scores;  // minority-class affinity in [0, 1]
  std::vector<Label> labels;
};

/// ROC area via the Mann-Whitney rank statistic with midrank tie correction.
inline double auc(const ScoredPredictions& p) {
  if (p.scores.size() != p.labels.size())
    throw DimensionError("auc: score/label length mismatch");
  const std::size_t t = p.scores.size();
  std::size_t n_min = 0;
  for (Label l : p.labels) n_min += l == Label::minority ? 1 : 0;
  const std::size_t n_maj = t - n_min;
  if (n_min == 0 || n_maj == 0) throw LabelError("auc needs both classes");
  for (double s : p.scores)
    if (!std::isfinite(s)) throw Error("auc: non-finite score");

  std::vector<std::size_t> order(t);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p.scores[a] < p.scores[b];
  });

  double rank_sum_min = 0.0;
  std::size_t i = 0;
  while (i < t) {
    std::size_t j = i;
    while (j + 1 < t && p.scores[order[j + 1]] == p.scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t q = i; q <= j; ++q)
      if (p.labels[order[q]] == Label::minority) rank_sum_min += midrank;
    i = j + 1;
  }
  const double u = rank_sum_min -
                   static_cast<double>(n_min) * (static_cast<double>(n_min) + 1.0) / 2.0;
  return u / (static_cast<double>(n_min) * static_cast<double>(n_maj));
}

/// Average-precision form of the PR area: sum of (R_k - R_{k-1}) * P_k over
/// descending unique score thresholds.
inline double aupr(const ScoredPredictions& p) {
  if (p.scores.size() != p.labels.size())
    throw DimensionError("aupr: score/label length mismatch");
  const std::size_t t = p.scores.size();
  std::size_t n_min = 0;
  for (Label l : p.labels) n_min += l == Label::minority ? 1 : 0;
  if (n_min == 0) throw LabelError("aupr needs at least one minority label");
  for (double s : p.scores)
    if (!std::isfinite(s)) throw Error("aupr: non-finite score");

  std::vector<std::size_t> order(t);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p.scores[a] > p.scores[b];
  });

  double ap = 0.0;
  double recall_prev = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < t) {
    std::size_t j = i;
    while (j + 1 < t && p.scores[order[j + 1]] == p.scores[order[i]]) ++j;
    for (std::size_t q = i; q <= j; ++q) {
      if (p.labels[order[q]] == Label::minority)
        ++tp;
      else
        ++fp;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_min);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j + 1;
  }
  return ap;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

enum class SamplerMethod { null_sampler, mgru_md, mgru_sed, tomek, ucbss, rus };

inline const char* sampler_name(SamplerMethod m) {
  switch (m) {
    case SamplerMethod::null_sampler: return "null";
    case SamplerMethod::mgru_md: return "mgru-md";
    case SamplerMethod::mgru_sed: return "mgru-sed";
    case SamplerMethod::tomek: return "tomek";
    case SamplerMethod::ucbss: return "ucbss";
    case SamplerMethod::rus: return "rus";
  }
  return "?";
}

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::null_sampler;
  std::optional<int> threshold;     // mgru-* fixed threshold
  std::optional<double> target_ir;  // rus
};

struct ScorerConfig {
  enum class Kind { tree, knn } kind = Kind::tree;
  int max_depth = 25;
  int min_leaf = 1;
  int k = 5;
};

inline const char* scorer_name(const ScorerConfig& s) {
  return s.kind == ScorerConfig::Kind::tree ? "tree" : "knn";
}

enum class ScoreMetric { auc, aupr };

inline const char* score_metric_name(ScoreMetric m) {
  return m == ScoreMetric::auc ? "auc" : "aupr";
}

namespace detail {

inline double fit_and_score(const Dataset& train, const Dataset& test,
                            const ScorerConfig& scorer, ScoreMetric metric) {
  ScoredPredictions pred;
  pred.labels = test.labels;
  pred.scores.resize(test.labels.size());
  if (scorer.kind == ScorerConfig::Kind::tree) {
    const TreeModel model = fit_tree(train, scorer.max_depth, scorer.min_leaf);
    for (Eigen::Index i = 0; i < test.size(); ++i)
      pred.scores[static_cast<std::size_t>(i)] = model.score(test.features.row(i).transpose());
  } else {
    const KnnModel model = fit_knn(train, scorer.k);
    for (Eigen::Index i = 0; i < test.size(); ++i)
      pred.scores[static_cast<std::size_t>(i)] = model.score(test.features.row(i).transpose());
  }
  return metric == ScoreMetric::auc ? auc(pred) : aupr(pred);
}

inline Dataset apply_sampler(const Dataset& train, const SamplerConfig& cfg,
                             std::uint64_t fold_seed) {
  switch (cfg.method) {
    case SamplerMethod::null_sampler:
      return train;
    case SamplerMethod::mgru_md:
    case SamplerMethod::mgru_sed: {
      if (!cfg.threshold) throw ConfigError("mgru sampler needs a threshold");
      const Metric metric = cfg.method == SamplerMethod::mgru_md
                                ? Metric::mahalanobis
                                : Metric::std_euclidean;
      const MgruFit fit = mgru_fit(train, metric);
      return undersample(train, fit.phi, *cfg.threshold);
    }
    case SamplerMethod::tomek:
      return tomek_undersample(train);
    case SamplerMethod::ucbss:
      return ucbss_undersample(train, fold_seed);
    case SamplerMethod::rus: {
      if (!cfg.target_ir) throw ConfigError("rus sampler needs a target imbalance ratio");
      const double current = imbalance_ratio(train);
      return random_undersample(train, std::min(*cfg.target_ir, current), fold_seed);
    }
  }
  throw ConfigError("unknown sampler");
}

inline double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace detail

struct CvResult {
  double mean = 0.0;
  double stdev = 0.0;
  std::vector<double> per_fold;  // contributing folds only, in fold order
  int skipped_folds = 0;         // sampler exhausted on these folds
};

/// Per fold: the sampler rebalances the training portion only, the scorer is
/// fit on the sampled portion, and the metric is computed on the untouched
/// test fold. A fold is skipped (and counted) only when the sampler errors
/// out with exhaustion. Fold seeds derive as seed xor fold-id.
inline CvResult cross_validate(const Dataset& ds, const SamplerConfig& sampler,
                               const ScorerConfig& scorer, int folds,
                               ScoreMetric metric, std::uint64_t seed) {
  const FoldPlan plan = stratified_folds(ds, folds, seed);
  std::vector<std::optional<double>> scores(static_cast<std::size_t>(folds));
  parallel_for(static_cast<std::size_t>(folds), [&](std::size_t f) {
    const Dataset train = ds.subset(plan.complement_rows(static_cast<int>(f)));
    const Dataset test = ds.subset(plan.fold_rows(static_cast<int>(f)));
    const std::uint64_t fold_seed = seed ^ static_cast<std::uint64_t>(f);
    try {
      const Dataset sampled = detail::apply_sampler(train, sampler, fold_seed);
      scores[f] = detail::fit_and_score(sampled, test, scorer, metric);
    } catch (const ExhaustionError&) {
      scores[f] = std::nullopt;
    }
  });

  CvResult res;
  for (const auto& s : scores) {
    if (s)
      res.per_fold.push_back(*s);
    else
      ++res.skipped_folds;
  }
  if (res.per_fold.empty()) throw ExhaustionError("sampler exhausted on every fold");
  res.mean = detail::mean_of(res.per_fold);
  res.stdev = detail::sample_std(res.per_fold);
  return res;
}

// ---------------------------------------------------------------------------
// Greedy threshold sweep
// ---------------------------------------------------------------------------

struct ThresholdScore {
  int k = 0;
  double mean = 0.0;
  double stdev = 0.0;
  int missing_folds = 0;  // folds whose Phi lacks this exact value
  int skipped_folds = 0;  // sampler exhaustion
};

struct SweepReport {
  ScoreMetric metric = ScoreMetric::auc;
  Metric distance = Metric::std_euclidean;
  std::vector<ThresholdScore> per_threshold;  // ascending K
  std::optional<int> best_k;                  // empty when no candidate exists
  double best_score = 0.0;
  double null_score = 0.0;  // no-deletion baseline on the same folds
  double null_std = 0.0;
  ScorerConfig scorer;
  int folds = 0;
  std::uint64_t seed = 0;
};

/// Largest K attaining the maximum mean (ties keep more of the majority).
/// Candidates whose every fold was skipped carry no evidence and are passed
/// over.
inline std::optional<int> pick_best_threshold(const std::vector<ThresholdScore>& scores,
                                              int folds) {
  std::optional<int> best;
  double best_mean = 0.0;
  for (const auto& s : scores) {
    if (s.skipped_folds >= folds) continue;
    if (!best || s.mean > best_mean || (s.mean == best_mean && s.k > *best)) {
      best = s.k;
      best_mean = s.mean;
    }
  }
  return best;
}

/// The threshold sweep: Phi is computed per training fold; the candidate set
/// is the union of the folds' distinct positive index values; every candidate
/// is scored on every fold. Deleting at a K a fold has never seen removes the
/// same instances as the fold's nearest larger present value (and nothing at
/// all when no larger value exists), which is exactly the fallback the
/// ranking needs, so folds only need their missing-K count recorded. The
/// report is the argmax over candidates.
inline SweepReport greedy_threshold_search(const Dataset& ds, Metric distance,
                                           const ScorerConfig& scorer, int folds,
                                           ScoreMetric metric, std::uint64_t seed) {
  const FoldPlan plan = stratified_folds(ds, folds, seed);

  struct FoldState {
    Dataset train;
    Dataset test;
    RelabeledIndexVector phi;
    std::vector<int> present;  // distinct positive Phi values
    double null_score = 0.0;
  };
  std::vector<FoldState> fold_state(static_cast<std::size_t>(folds));
  parallel_for(static_cast<std::size_t>(folds), [&](std::size_t f) {
    FoldState st;
    st.train = ds.subset(plan.complement_rows(static_cast<int>(f)));
    st.test = ds.subset(plan.fold_rows(static_cast<int>(f)));
    st.phi = mgru_fit(st.train, distance).phi;
    st.present = st.phi.positive_values();
    st.null_score = detail::fit_and_score(st.train, st.test, scorer, metric);
    fold_state[f] = std::move(st);
  });

  std::set<int> candidate_set;
  for (const auto& st : fold_state)
    candidate_set.insert(st.present.begin(), st.present.end());
  const std::vector<int> candidates(candidate_set.begin(), candidate_set.end());

  std::vector<double> null_scores;
  for (const auto& st : fold_state) null_scores.push_back(st.null_score);

  SweepReport report;
  report.metric = metric;
  report.distance = distance;
  report.scorer = scorer;
  report.folds = folds;
  report.seed = seed;
  report.null_score = detail::mean_of(null_scores);
  report.null_std = detail::sample_std(null_scores);

  report.per_threshold.resize(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t c) {
    const int k = candidates[c];
    ThresholdScore ts;
    ts.k = k;
    std::vector<double> scores;
    for (int f = 0; f < folds; ++f) {
      const FoldState& st = fold_state[static_cast<std::size_t>(f)];
      if (!std::binary_search(st.present.begin(), st.present.end(), k)) ++ts.missing_folds;
      if (st.present.empty() || k > st.present.back()) {
        scores.push_back(st.null_score);  // nothing to delete at or above k
        continue;
      }
      try {
        const Dataset sampled = undersample(st.train, st.phi, k);
        scores.push_back(detail::fit_and_score(sampled, st.test, scorer, metric));
      } catch (const ExhaustionError&) {
        ++ts.skipped_folds;
      }
    }
    if (!scores.empty()) {
      ts.mean = detail::mean_of(scores);
      ts.stdev = detail::sample_std(scores);
    }
    report.per_threshold[c] = ts;
  });

  report.best_k = pick_best_threshold(report.per_threshold, folds);
  if (report.best_k) {
    for (const auto& ts : report.per_threshold)
      if (ts.k == *report.best_k) report.best_score = ts.mean;
  } else {
    report.best_score = report.null_score;
  }
  return report;
}

}  // namespace overlapctl
