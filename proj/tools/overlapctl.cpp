// overlapctl: class-overlap under-sampling toolkit.
//
// Subcommands:
//   resample    rebalance a dataset with one sampler and write the result CSV
//   sweep       cross-validated greedy threshold search for the mgru samplers
//   complexity  ONB_avg class-overlap complexity of a dataset
//   evaluate    cross-validated AUC/auPR of a sampler + classifier pipeline
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 sampler exhaustion.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "overlapctl/baselines.hpp"
#include "overlapctl/dataset.hpp"
#include "overlapctl/evaluate.hpp"
#include "overlapctl/mgru.hpp"
#include "overlapctl/overlap.hpp"
#include "overlapctl/parallel.hpp"
#include "overlapctl/report.hpp"
#include "overlapctl/version.hpp"

namespace {

using namespace overlapctl;

struct CommonOpts {
  std::string input;
  std::string format = "csv";
  std::string label = "last";
  std::string positive_label;
  std::uint64_t seed = 42;
  int threads = -1;  // -1: flag absent, fall back to OVERLAPCTL_THREADS
  std::string output;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool output_required) {
  cmd->add_option("--input", o.input, "input dataset file")->required();
  cmd->add_option("--format", o.format, "input format")
      ->check(CLI::IsMember({"csv", "keel"}))
      ->capture_default_str();
  cmd->add_option("--label", o.label, "label column name, or 'last'")
      ->capture_default_str();
  cmd->add_option("--positive-label", o.positive_label,
                  "explicit minority label (required on class-count ties)");
  cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker thread cap (0 = auto)");
  auto* out = cmd->add_option("--output", o.output, "output path (reports default to stdout)");
  if (output_required) out->required();
}

void apply_threads(const CommonOpts& o) {
  int threads = o.threads;
  if (threads < 0) {
    threads = 0;
    if (const char* env = std::getenv("OVERLAPCTL_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end && *end == '\0' && v >= 0) threads = static_cast<int>(v);
    }
  }
  set_max_threads(threads);
}

Dataset load(const CommonOpts& o) {
  std::optional<std::string> positive;
  if (!o.positive_label.empty()) positive = o.positive_label;
  const Format format = o.format == "keel" ? Format::keel_dat : Format::csv;
  return load_dataset(o.input, format, o.label, positive);
}

Json common_config(const CommonOpts& o) {
  Json j;
  j["input"] = o.input;
  j["format"] = o.format;
  j["label"] = o.label;
  j["positive_label"] = o.positive_label.empty() ? Json(nullptr) : Json(o.positive_label);
  j["seed"] = o.seed;
  return j;
}

/// Writes via a temp file + rename so readers never observe a partial file.
void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw ParseError("failed writing " + tmp.string());
  }
  fs::rename(tmp, target);
}

void emit(const CommonOpts& o, const std::string& content) {
  if (o.output.empty())
    std::cout << content;
  else
    write_atomically(o.output, content);
}

SamplerMethod parse_method(const std::string& name) {
  if (name == "mgru-md") return SamplerMethod::mgru_md;
  if (name == "mgru-sed") return SamplerMethod::mgru_sed;
  if (name == "tomek") return SamplerMethod::tomek;
  if (name == "ucbss") return SamplerMethod::ucbss;
  if (name == "rus") return SamplerMethod::rus;
  return SamplerMethod::null_sampler;
}

ScorerConfig make_scorer(const std::string& classifier, int knn_k) {
  ScorerConfig s;
  s.kind = classifier == "knn" ? ScorerConfig::Kind::knn : ScorerConfig::Kind::tree;
  s.k = knn_k;
  return s;
}

Json scorer_config_json(const ScorerConfig& s) {
  Json j;
  j["classifier"] = scorer_name(s);
  if (s.kind == ScorerConfig::Kind::tree) {
    j["max_depth"] = s.max_depth;
    j["min_leaf"] = s.min_leaf;
  } else {
    j["k"] = s.k;
  }
  return j;
}

int run_resample(const CommonOpts& o, const std::string& method, std::optional<int> threshold,
                 std::optional<double> target_ir) {
  const Dataset ds = load(o);
  const SamplerMethod m = parse_method(method);

  if (m == SamplerMethod::mgru_md || m == SamplerMethod::mgru_sed) {
    if (!threshold)
      throw CLI::RequiredError("--threshold (required for " + method + ")");
    const Metric metric =
        m == SamplerMethod::mgru_md ? Metric::mahalanobis : Metric::std_euclidean;
    const MgruFit fit = mgru_fit(ds, metric);
    const Dataset out = undersample(ds, fit.phi, *threshold);
    // carry the surviving rows' global relabeled index along for re-thresholding
    std::vector<int> index;
    index.reserve(static_cast<std::size_t>(out.size()));
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      const bool deleted = !ds.is_minority(i) &&
                           fit.phi.values[static_cast<std::size_t>(i)] >= *threshold;
      if (!deleted) index.push_back(fit.phi.values[static_cast<std::size_t>(i)]);
    }
    std::ostringstream csv;
    write_csv(csv, out, &index);
    emit(o, csv.str());
    return 0;
  }

  Dataset out = ds;
  switch (m) {
    case SamplerMethod::null_sampler:
      break;
    case SamplerMethod::tomek:
      out = tomek_undersample(ds);
      break;
    case SamplerMethod::ucbss:
      out = ucbss_undersample(ds, o.seed);
      break;
    case SamplerMethod::rus:
      if (!target_ir) throw CLI::RequiredError("--target-ir (required for rus)");
      out = random_undersample(ds, *target_ir, o.seed);
      break;
    default:
      break;
  }
  std::ostringstream csv;
  write_csv(csv, out);
  emit(o, csv.str());
  return 0;
}

int run_sweep(const CommonOpts& o, const std::string& method, const std::string& classifier,
              int knn_k, int folds, const std::string& metric) {
  const Dataset ds = load(o);
  const Metric distance =
      method == "mgru-md" ? Metric::mahalanobis : Metric::std_euclidean;
  const ScoreMetric sm = metric == "aupr" ? ScoreMetric::aupr : ScoreMetric::auc;
  const ScorerConfig scorer = make_scorer(classifier, knn_k);

  const SweepReport report = greedy_threshold_search(ds, distance, scorer, folds, sm, o.seed);

  Json config = common_config(o);
  config["method"] = method;
  config.update(scorer_config_json(scorer));
  config["folds"] = folds;
  config["stratified"] = true;
  config["metric"] = metric;
  config["sampling"] = "in-fold";

  Json j = report_envelope("sweep", std::move(config), ds);
  j.update(to_json(report));
  emit(o, j.dump(2) + "\n");
  return 0;
}

int run_complexity(const CommonOpts& o) {
  const Dataset ds = load(o);
  const BallCoverResult res = onb_avg(ds);
  Json j = report_envelope("complexity", common_config(o), ds);
  j.update(to_json(res));
  emit(o, j.dump() + "\n");  // single-line record
  return 0;
}

int run_evaluate(const CommonOpts& o, const std::string& method, std::optional<int> threshold,
                 std::optional<double> target_ir, const std::string& classifier, int knn_k,
                 int folds, const std::string& metric) {
  const Dataset ds = load(o);
  const SamplerMethod m = parse_method(method);
  const ScoreMetric sm = metric == "aupr" ? ScoreMetric::aupr : ScoreMetric::auc;
  const ScorerConfig scorer = make_scorer(classifier, knn_k);

  Json config = common_config(o);
  config["method"] = method;
  if (threshold) config["threshold"] = *threshold;
  if (target_ir) config["target_ir"] = *target_ir;
  config.update(scorer_config_json(scorer));
  config["folds"] = folds;
  config["stratified"] = true;
  config["metric"] = metric;
  config["sampling"] = "in-fold";

  Json j;
  const bool mgru = m == SamplerMethod::mgru_md || m == SamplerMethod::mgru_sed;
  if (mgru && !threshold) {
    // No fixed threshold given: pick it with the greedy sweep, report the
    // cross-validated score at the chosen value.
    const Metric distance =
        m == SamplerMethod::mgru_md ? Metric::mahalanobis : Metric::std_euclidean;
    const SweepReport sweep = greedy_threshold_search(ds, distance, scorer, folds, sm, o.seed);
    config["threshold"] = "sweep-best";
    j = report_envelope("evaluate", std::move(config), ds);
    if (sweep.best_k)
      j["chosen_k"] = *sweep.best_k;
    else
      j["chosen_k"] = nullptr;
    for (const auto& ts : sweep.per_threshold) {
      if (sweep.best_k && ts.k == *sweep.best_k) {
        j["mean"] = ts.mean;
        j["std"] = ts.stdev;
        j["skipped_folds"] = ts.skipped_folds;
      }
    }
    if (!sweep.best_k) {
      j["mean"] = sweep.null_score;
      j["std"] = sweep.null_std;
      j["skipped_folds"] = 0;
    }
    j["null_score"] = sweep.null_score;
  } else {
    SamplerConfig sampler;
    sampler.method = m;
    sampler.threshold = threshold;
    sampler.target_ir = target_ir;
    if (m == SamplerMethod::rus && !target_ir)
      throw CLI::RequiredError("--target-ir (required for rus)");
    const CvResult res = cross_validate(ds, sampler, scorer, folds, sm, o.seed);
    j = report_envelope("evaluate", std::move(config), ds);
    j.update(to_json(res));
  }
  emit(o, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"class-overlap under-sampling toolkit"};
  app.set_version_flag("--version", overlapctl::kVersion);
  app.require_subcommand(1);

  const std::vector<std::string> all_methods = {"mgru-md", "mgru-sed", "tomek",
                                                "ucbss",   "rus",      "null"};

  CommonOpts rs_opts;
  std::string rs_method;
  std::optional<int> rs_threshold;
  std::optional<double> rs_target_ir;
  auto* rs = app.add_subcommand("resample", "under-sample a dataset and write the result");
  add_common(rs, rs_opts, /*output_required=*/false);
  rs->add_option("--method", rs_method, "sampler")->required()->check(CLI::IsMember(all_methods));
  rs->add_option("--threshold", rs_threshold, "global relabeled index threshold K (mgru-*)");
  rs->add_option("--target-ir", rs_target_ir, "target imbalance ratio (rus)");

  CommonOpts sw_opts;
  std::string sw_method = "mgru-sed";
  std::string sw_classifier = "tree";
  int sw_knn_k = 5;
  int sw_folds = 10;
  std::string sw_metric = "auc";
  auto* sw = app.add_subcommand("sweep", "greedy threshold search with cross-validation");
  add_common(sw, sw_opts, /*output_required=*/false);
  sw->add_option("--method", sw_method, "mgru distance variant")
      ->check(CLI::IsMember({"mgru-md", "mgru-sed"}))
      ->capture_default_str();
  sw->add_option("--classifier", sw_classifier, "built-in scorer")
      ->check(CLI::IsMember({"tree", "knn"}))
      ->capture_default_str();
  sw->add_option("--knn-k", sw_knn_k, "neighbor count for the knn scorer")->capture_default_str();
  sw->add_option("--folds", sw_folds, "cross-validation folds")->capture_default_str();
  sw->add_option("--metric", sw_metric, "score metric")
      ->check(CLI::IsMember({"auc", "aupr"}))
      ->capture_default_str();

  CommonOpts cx_opts;
  auto* cx = app.add_subcommand("complexity", "ONB_avg class-overlap complexity");
  add_common(cx, cx_opts, /*output_required=*/false);

  CommonOpts ev_opts;
  std::string ev_method = "null";
  std::optional<int> ev_threshold;
  std::optional<double> ev_target_ir;
  std::string ev_classifier = "tree";
  int ev_knn_k = 5;
  int ev_folds = 10;
  std::string ev_metric = "auc";
  auto* ev = app.add_subcommand("evaluate", "cross-validated sampler + classifier score");
  add_common(ev, ev_opts, /*output_required=*/false);
  ev->add_option("--method", ev_method, "sampler")
      ->check(CLI::IsMember(all_methods))
      ->capture_default_str();
  ev->add_option("--threshold", ev_threshold,
                 "fixed K for mgru-* (omit to pick via the sweep)");
  ev->add_option("--target-ir", ev_target_ir, "target imbalance ratio (rus)");
  ev->add_option("--classifier", ev_classifier, "built-in scorer")
      ->check(CLI::IsMember({"tree", "knn"}))
      ->capture_default_str();
  ev->add_option("--knn-k", ev_knn_k, "neighbor count for the knn scorer")->capture_default_str();
  ev->add_option("--folds", ev_folds, "cross-validation folds")->capture_default_str();
  ev->add_option("--metric", ev_metric, "score metric")
      ->check(CLI::IsMember({"auc", "aupr"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (rs->parsed()) {
      apply_threads(rs_opts);
      return run_resample(rs_opts, rs_method, rs_threshold, rs_target_ir);
    }
    if (sw->parsed()) {
      apply_threads(sw_opts);
      return run_sweep(sw_opts, sw_method, sw_classifier, sw_knn_k, sw_folds, sw_metric);
    }
    if (cx->parsed()) {
      apply_threads(cx_opts);
      return run_complexity(cx_opts);
    }
    if (ev->parsed()) {
      apply_threads(ev_opts);
      return run_evaluate(ev_opts, ev_method, ev_threshold, ev_target_ir, ev_classifier,
                          ev_knn_k, ev_folds, ev_metric);
    }
  } catch (const CLI::RequiredError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const overlapctl::ExhaustionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const overlapctl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
