#include "colgrid/evaluate.hpp"

#include <array>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "colgrid/baselines.hpp"
#include "colgrid/errors.hpp"
#include "colgrid/format.hpp"
#include "colgrid/predictor.hpp"

namespace colgrid {

namespace {

using PerWindow = std::vector<TrajectoryMetrics>;

MetricMeans reduce(const std::vector<PerWindow>& per_window) {
  MetricMeans means;
  double he_sum = 0.0;
  int he_count = 0;
  for (const PerWindow& window_results : per_window) {
    if (!window_results.empty()) ++means.windows;
    for (const TrajectoryMetrics& m : window_results) {
      means.ade += m.ade;
      means.fde += m.fde;
      means.mhd += m.mhd;
      means.se += m.se;
      if (m.he.has_value()) {
        he_sum += *m.he;
        ++he_count;
      }
      ++means.pairs;
    }
  }
  if (means.pairs > 0) {
    means.ade /= means.pairs;
    means.fde /= means.pairs;
    means.mhd /= means.pairs;
    means.se /= means.pairs;
  }
  if (he_count > 0) means.he = he_sum / he_count;
  return means;
}

void validate_eval(std::span<const SceneWindow> windows, const EvalConfig& config) {
  if (windows.empty()) {
    throw DataError(DataError::Kind::EmptyDataset, "no evaluation windows");
  }
  if (config.k < 1) {
    throw DataError(DataError::Kind::InvalidConfig, "sample count must be at least 1");
  }
  if (config.threads < 1) {
    throw DataError(DataError::Kind::InvalidConfig, "thread count must be at least 1");
  }
}

/// Runs `body(i)` for every window index, split contiguously over threads.
/// Each index writes only its own output slot, so the aggregate is
/// independent of the thread count.
template <typename Body>
void parallel_over(std::size_t count, int threads, const Body& body) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi]() {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace

MetricMeans evaluate_model(std::span<const SceneWindow> windows, const ModelParams& model,
                           const EvalConfig& config) {
  validate_eval(windows, config);
  RolloutOptions options;
  options.oracle_vehicles = config.oracle_vehicles;
  options.features = config.features;

  std::vector<PerWindow> per_window(windows.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_over(windows.size(), config.threads, [&](std::size_t i) {
    try {
      const SceneWindow& window = windows[i];
      const RolloutResult rolled =
          rollout(window, model, config.k, config.seed, options);
      for (std::size_t j = 0; j < rolled.pedestrian_ids.size(); ++j) {
        const std::vector<Vec2> gt = window.ground_truth(rolled.pedestrian_ids[j]);
        std::vector<std::vector<Vec2>> samples;
        samples.reserve(rolled.samples.size());
        for (const auto& sample : rolled.samples) samples.push_back(sample[j]);
        per_window[i].push_back(
            best_of_k(samples, gt, window.dt, config.mhd_mode, config.joint_best_by_ade));
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  return reduce(per_window);
}

MetricMeans evaluate_linear_regression(std::span<const SceneWindow> windows,
                                       const EvalConfig& config) {
  validate_eval(windows, config);
  std::vector<PerWindow> per_window(windows.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_over(windows.size(), config.threads, [&](std::size_t i) {
    try {
      const SceneWindow& window = windows[i];
      for (std::int64_t id : window.target_ids) {
        const std::vector<Vec2> track = window.target_positions(id);
        const std::span<const Vec2> observed(track.data(),
                                             static_cast<std::size_t>(window.t_obs));
        const std::vector<Vec2> pred = linear_regression_predict(observed, window.t_pred);
        per_window[i].push_back(
            all_metrics(pred, window.ground_truth(id), window.dt, config.mhd_mode));
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  return reduce(per_window);
}

std::span<const ReferenceRow> hbs_reference_table() {
  static constexpr std::array<ReferenceRow, 7> kRows{{
      {"Linear regression", 0.696, 1.238, 2.995, 0.390, 44.0},
      {"Vanilla LSTM", 0.305, 0.676, 2.855, 0.240, 32.7},
      {"Social LSTM", 0.309, 0.677, 2.852, 0.244, 31.5},
      {"Social LSTM + filtering", 0.298, 0.658, 2.827, 0.234, 32.3},
      {"P-CollisionGrid", 0.304, 0.664, 2.811, 0.235, 32.6},
      {"V-CollisionGrid", 0.305, 0.669, 2.827, 0.232, 32.9},
      {"PV-CollisionGrid", 0.295, 0.648, 2.791, 0.235, 31.7},
  }};
  return kRows;
}

std::string results_json(const std::string& model_label, const std::string& variant,
                         const std::string& dataset, const EvalConfig& config,
                         const MetricMeans& means) {
  nlohmann::json doc;
  doc["model"] = model_label;
  doc["variant"] = variant;
  doc["dataset"] = dataset;
  doc["k"] = config.k;
  doc["seed"] = config.seed;
  doc["mhd_mode"] = config.mhd_mode == MhdMode::Dubuisson ? "dubuisson" : "hausdorff";
  doc["joint_best_by_ade"] = config.joint_best_by_ade;
  doc["oracle_vehicles"] = config.oracle_vehicles;
  doc["metrics"] = {{"ade", means.ade},
                    {"fde", means.fde},
                    {"mhd", means.mhd},
                    {"se", means.se},
                    {"he", means.he.has_value() ? nlohmann::json(*means.he)
                                                : nlohmann::json(nullptr)}};
  doc["pairs"] = means.pairs;
  doc["windows"] = means.windows;
  return doc.dump(1) + "\n";
}

void save_results(const std::string& json_path, const std::string& csv_path,
                  const std::string& model_label, const std::string& variant,
                  const std::string& dataset, const EvalConfig& config,
                  const MetricMeans& means) {
  std::ofstream json_out(json_path, std::ios::binary);
  if (!json_out) {
    throw DataError(DataError::Kind::MissingFile, "cannot write results: " + json_path);
  }
  json_out << results_json(model_label, variant, dataset, config, means);

  std::ofstream csv_out(csv_path, std::ios::binary);
  if (!csv_out) {
    throw DataError(DataError::Kind::MissingFile, "cannot write results: " + csv_path);
  }
  csv_out << "model,variant,dataset,k,seed,mhd_mode,joint_best_by_ade,oracle_vehicles,"
             "ade,fde,mhd,se,he,pairs,windows\n";
  csv_out << model_label << ',' << variant << ',' << dataset << ',' << config.k << ','
          << config.seed << ','
          << (config.mhd_mode == MhdMode::Dubuisson ? "dubuisson" : "hausdorff") << ','
          << (config.joint_best_by_ade ? 1 : 0) << ',' << (config.oracle_vehicles ? 1 : 0)
          << ',' << format_double(means.ade) << ',' << format_double(means.fde) << ','
          << format_double(means.mhd) << ',' << format_double(means.se) << ','
          << (means.he.has_value() ? format_double(*means.he) : std::string()) << ','
          << means.pairs << ',' << means.windows << '\n';
}

}  // namespace colgrid
