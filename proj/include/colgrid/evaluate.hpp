#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "colgrid/features.hpp"
#include "colgrid/metrics.hpp"
#include "colgrid/model.hpp"
#include "colgrid/scene.hpp"

namespace colgrid {

struct EvalConfig {
  int k = 20;
  std::uint64_t seed = 0;
  MhdMode mhd_mode = MhdMode::Dubuisson;
  bool joint_best_by_ade = false;
  bool oracle_vehicles = false;
  int threads = 1;  // window-level parallelism; results are thread-count invariant
  FeatureConfig features;
};

/// Test-set means over (pedestrian, window) pairs of the best-of-k metrics.
struct MetricMeans {
  double ade = 0.0;
  double fde = 0.0;
  double mhd = 0.0;
  double se = 0.0;
  std::optional<double> he;  // mean over pairs with a defined heading error
  int pairs = 0;
  int windows = 0;
};

MetricMeans evaluate_model(std::span<const SceneWindow> windows, const ModelParams& model,
                           const EvalConfig& config);

/// Same aggregation for the deterministic line-fit baseline (k is ignored).
MetricMeans evaluate_linear_regression(std::span<const SceneWindow> windows,
                                       const EvalConfig& config);

/// Published results on the HBS shared-space dataset, for side-by-side
/// comparison when evaluating on user-supplied data of that schema.
struct ReferenceRow {
  const char* model;
  double ade, fde, mhd, se, he;
};
std::span<const ReferenceRow> hbs_reference_table();

/// Results document {model, variant, dataset, k, seed, mode flags, metrics}.
std::string results_json(const std::string& model_label, const std::string& variant,
                         const std::string& dataset, const EvalConfig& config,
                         const MetricMeans& means);

/// Writes the JSON document and a one-row CSV mirror of the same fields.
void save_results(const std::string& json_path, const std::string& csv_path,
                  const std::string& model_label, const std::string& variant,
                  const std::string& dataset, const EvalConfig& config,
                  const MetricMeans& means);

}  // namespace colgrid
