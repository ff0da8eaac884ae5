#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <string>

#include "overlapctl/dataset.hpp"
#include "overlapctl/evaluate.hpp"
#include "overlapctl/overlap.hpp"
#include "overlapctl/version.hpp"

namespace overlapctl {

using Json = nlohmann::ordered_json;

inline std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Row/column counts, imbalance ratio, and a content hash; enough to
/// reproduce a run from the report alone.
inline Json dataset_block(const Dataset& ds) {
  return Json{{"n", ds.size()},
              {"m", ds.dim()},
              {"ir", imbalance_ratio(ds)},
              {"hash", dataset_fingerprint(ds)}};
}

inline Json report_envelope(const std::string& command, Json config, const Dataset& ds) {
  Json j;
  j["version"] = kVersion;
  j["timestamp"] = utc_timestamp();
  j["command"] = command;
  j["config"] = std::move(config);
  j["dataset"] = dataset_block(ds);
  return j;
}

inline Json to_json(const SweepReport& r) {
  Json j;
  j["per_threshold"] = Json::array();
  for (const auto& ts : r.per_threshold)
    j["per_threshold"].push_back(Json{{"k", ts.k},
                                      {"mean", ts.mean},
                                      {"std", ts.stdev},
                                      {"missing_folds", ts.missing_folds},
                                      {"skipped_folds", ts.skipped_folds}});
  if (r.best_k)
    j["best_k"] = *r.best_k;
  else
    j["best_k"] = nullptr;
  j["best_score"] = r.best_k ? r.best_score : r.null_score;
  j["null_score"] = r.null_score;
  j["null_std"] = r.null_std;
  return j;
}

inline Json to_json(const CvResult& r) {
  Json j;
  j["mean"] = r.mean;
  j["std"] = r.stdev;
  j["per_fold"] = r.per_fold;
  j["skipped_folds"] = r.skipped_folds;
  return j;
}

inline Json to_json(const BallCoverResult& r) {
  Json j;
  j["onb_avg"] = r.onb_avg;
  j["per_class"] = Json::array();
  for (const auto& c : r.per_class)
    j["per_class"].push_back(
        Json{{"class", c.class_id}, {"balls", c.ball_count}, {"size", c.class_size}});
  return j;
}

}  // namespace overlapctl
