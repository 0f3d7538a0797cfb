// Command-line front end: synthesize scenario data, train model variants,
// evaluate checkpoints with best-of-k sampling, and export prediction CSVs.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "colgrid/checkpoint.hpp"
#include "colgrid/errors.hpp"
#include "colgrid/evaluate.hpp"
#include "colgrid/model.hpp"
#include "colgrid/predictor.hpp"
#include "colgrid/scene.hpp"
#include "colgrid/synth.hpp"
#include "colgrid/trainer.hpp"

namespace {

using namespace colgrid;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct DataOptions {
  std::string path;
  double frame_rate_hz = 2.0;
  std::string cyclist = "vehicle";
  int t_obs = 6;
  int t_pred = 6;
  int stride = 1;
};

void add_data_options(CLI::App& cmd, DataOptions& o, bool stride_defaults_to_window) {
  cmd.add_option("--data", o.path, "Scene CSV (frame_id,agent_id,agent_type,x_m,y_m)")
      ->required();
  cmd.add_option("--rate", o.frame_rate_hz, "Recording frame rate in Hz")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--cyclist", o.cyclist, "How to treat cyclist rows")
      ->check(CLI::IsMember({"vehicle", "pedestrian", "drop"}))
      ->capture_default_str();
  cmd.add_option("--t-obs", o.t_obs, "Observed steps per window")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  cmd.add_option("--t-pred", o.t_pred, "Predicted steps per window")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  auto* stride = cmd.add_option("--stride", o.stride, "Frames between window starts")
                     ->check(CLI::PositiveNumber);
  if (stride_defaults_to_window) {
    stride->description("Frames between window starts (default: t-obs + t-pred)");
  } else {
    stride->capture_default_str();
  }
}

CyclistPolicy cyclist_policy(const std::string& name) {
  if (name == "pedestrian") return CyclistPolicy::Pedestrian;
  if (name == "drop") return CyclistPolicy::Drop;
  return CyclistPolicy::Vehicle;
}

std::vector<SceneWindow> load_windows(const DataOptions& o) {
  Scene scene = load_scene(o.path, SceneFormat::CanonicalCsv, cyclist_policy(o.cyclist),
                           o.frame_rate_hz);
  scene = derive_velocities(scene);
  return make_windows(scene, o.t_obs, o.t_pred, o.stride);
}

struct FeatureOptions {
  double ped_ttc = kPedPedParams.ttc_threshold;
  double ped_dmin = kPedPedParams.d_min;
  double veh_ttc = kPedVehParams.ttc_threshold;
  double veh_dmin = kPedVehParams.d_min;
  int sectors = 8;
  double heading_eps = kHeadingEps;
};

void add_feature_options(CLI::App& cmd, FeatureOptions& o) {
  cmd.add_option("--ped-ttc", o.ped_ttc, "Pedestrian-pedestrian TTC threshold in seconds")
      ->capture_default_str();
  cmd.add_option("--ped-dmin", o.ped_dmin, "Pedestrian-pedestrian collision distance in meters")
      ->capture_default_str();
  cmd.add_option("--veh-ttc", o.veh_ttc, "Pedestrian-vehicle TTC threshold in seconds")
      ->capture_default_str();
  cmd.add_option("--veh-dmin", o.veh_dmin, "Pedestrian-vehicle collision distance in meters")
      ->capture_default_str();
  cmd.add_option("--sectors", o.sectors, "Polar grid sector count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--heading-eps", o.heading_eps, "Minimum speed for a usable heading in m/s")
      ->capture_default_str();
}

FeatureConfig to_feature_config(const FeatureOptions& o) {
  FeatureConfig f;
  f.ped_params = {o.ped_ttc, o.ped_dmin};
  f.veh_params = {o.veh_ttc, o.veh_dmin};
  f.n_sector = o.sectors;
  f.heading_eps = o.heading_eps;
  return f;
}

json features_to_json(const FeatureConfig& f) {
  return json{{"ped_ttc_threshold_s", f.ped_params.ttc_threshold},
              {"ped_d_min_m", f.ped_params.d_min},
              {"veh_ttc_threshold_s", f.veh_params.ttc_threshold},
              {"veh_d_min_m", f.veh_params.d_min},
              {"n_sector", f.n_sector},
              {"heading_eps_mps", f.heading_eps}};
}

void features_from_json(const json& j, FeatureOptions& o) {
  if (!j.is_object()) return;
  if (j.contains("ped_ttc_threshold_s")) o.ped_ttc = j.at("ped_ttc_threshold_s").get<double>();
  if (j.contains("ped_d_min_m")) o.ped_dmin = j.at("ped_d_min_m").get<double>();
  if (j.contains("veh_ttc_threshold_s")) o.veh_ttc = j.at("veh_ttc_threshold_s").get<double>();
  if (j.contains("veh_d_min_m")) o.veh_dmin = j.at("veh_d_min_m").get<double>();
  if (j.contains("n_sector")) o.sectors = j.at("n_sector").get<int>();
  if (j.contains("heading_eps_mps")) o.heading_eps = j.at("heading_eps_mps").get<double>();
}

// Layers checkpoint-echoed settings under explicitly passed flags: a flag the
// user typed wins, anything else falls back to how the model was trained.
void resolve_from_echo(const CLI::App& cmd, const json& echo, DataOptions& data,
                       FeatureOptions& feats) {
  if (!echo.is_object()) return;
  auto keep_int = [&](const char* flag, const char* key, int& value) {
    if (cmd.count(flag) == 0 && echo.contains(key)) value = echo.at(key).get<int>();
  };
  auto keep_double = [&](const char* flag, const char* key, double& value) {
    if (cmd.count(flag) == 0 && echo.contains(key)) value = echo.at(key).get<double>();
  };
  keep_int("--t-obs", "t_obs", data.t_obs);
  keep_int("--t-pred", "t_pred", data.t_pred);
  keep_double("--rate", "frame_rate_hz", data.frame_rate_hz);
  if (cmd.count("--cyclist") == 0 && echo.contains("cyclist")) {
    data.cyclist = echo.at("cyclist").get<std::string>();
  }
  if (echo.contains("features")) {
    FeatureOptions trained;
    features_from_json(echo.at("features"), trained);
    if (cmd.count("--ped-ttc") == 0) feats.ped_ttc = trained.ped_ttc;
    if (cmd.count("--ped-dmin") == 0) feats.ped_dmin = trained.ped_dmin;
    if (cmd.count("--veh-ttc") == 0) feats.veh_ttc = trained.veh_ttc;
    if (cmd.count("--veh-dmin") == 0) feats.veh_dmin = trained.veh_dmin;
    if (cmd.count("--heading-eps") == 0) feats.heading_eps = trained.heading_eps;
  }
}

std::string default_sibling(const std::string& base, const char* suffix) {
  std::filesystem::path p(base);
  p.replace_extension();
  return p.string() + suffix;
}

void print_metrics(const std::string& label, const MetricMeans& m) {
  std::cout << std::fixed << std::setprecision(3);
  std::cout << label << ": ade " << m.ade << " m, fde " << m.fde << " m, mhd " << m.mhd
            << " m, se " << m.se << " m/s, he ";
  if (m.he) {
    std::cout << std::setprecision(1) << *m.he << " deg";
  } else {
    std::cout << "n/a";
  }
  std::cout << std::setprecision(3) << " (" << m.pairs << " pedestrian-window pairs, "
            << m.windows << " windows)\n";
  std::cout.unsetf(std::ios::fixed);
  std::cout << std::setprecision(6);
}

void print_reference_table() {
  std::cout << "\nReference: best-of-20 results on the HBS shared-space dataset\n";
  std::cout << std::left << std::setw(28) << "  model" << std::right << std::setw(8) << "ade"
            << std::setw(8) << "fde" << std::setw(8) << "mhd" << std::setw(8) << "se"
            << std::setw(8) << "he" << "\n";
  std::cout << std::fixed << std::setprecision(3);
  for (const ReferenceRow& row : hbs_reference_table()) {
    std::cout << "  " << std::left << std::setw(26) << row.model << std::right << std::setw(8)
              << row.ade << std::setw(8) << row.fde << std::setw(8) << row.mhd << std::setw(8)
              << row.se << std::setw(8) << std::setprecision(1) << row.he << std::setprecision(3)
              << "\n";
  }
  std::cout.unsetf(std::ios::fixed);
  std::cout << std::setprecision(6);
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
};

int run_synth(const SynthOptions& o) {
  SynthConfig config;
  if (!o.config_path.empty()) config = load_synth_config(o.config_path);
  validate(config);
  Scene scene = synthesize_scenarios(config, o.seed);
  save_scene(scene, o.out);

  std::set<std::int64_t> ids;
  for (const Frame& frame : scene.frames) {
    for (const AgentState& agent : frame.agents) ids.insert(agent.agent_id);
  }
  std::cout << "wrote " << o.out << ": " << scene.frames.size() << " frames, " << ids.size()
            << " agents, " << scene.state_count() << " agent states\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string variant = "pv";
  int epochs = 200;
  int batch_size = 10;
  double learning_rate = 0.001;
  double rmsprop_decay = 0.99;
  double rmsprop_epsilon = 1e-8;
  double grad_clip_norm = 10.0;
  std::uint64_t seed = 0;
  double holdout_frac = 0.0;
  bool autoregressive = false;
  int hidden = 128;
  int embed = 64;
  double social_size = 4.0;
  int social_cells = 4;
  int checkpoint_every = 0;
  std::string out;
  std::string loss_csv;
};

int run_train(const DataOptions& data, const FeatureOptions& feats, const TrainOptions& o) {
  TrainConfig config;
  config.variant = variant_from_string(o.variant);
  config.dims.embed_dim = o.embed;
  config.dims.hidden_dim = o.hidden;
  config.dims.n_sector = feats.sectors;
  config.dims.social.neighborhood_m = o.social_size;
  config.dims.social.grid_cells = o.social_cells;
  config.features = to_feature_config(feats);
  config.epochs = o.epochs;
  config.batch_size = o.batch_size;
  config.learning_rate = o.learning_rate;
  config.rmsprop_decay = o.rmsprop_decay;
  config.rmsprop_epsilon = o.rmsprop_epsilon;
  config.grad_clip_norm = o.grad_clip_norm;
  config.seed = o.seed;
  config.holdout_frac = o.holdout_frac;
  config.autoregressive_training = o.autoregressive;
  config.validate();

  std::vector<SceneWindow> windows = load_windows(data);
  std::cout << "loaded " << windows.size() << " windows from " << data.path << "\n";

  json echo{{"command", "train"},
            {"data", data.path},
            {"frame_rate_hz", data.frame_rate_hz},
            {"cyclist", data.cyclist},
            {"t_obs", data.t_obs},
            {"t_pred", data.t_pred},
            {"stride", data.stride},
            {"variant", o.variant},
            {"dims",
             {{"embed_dim", o.embed},
              {"hidden_dim", o.hidden},
              {"n_sector", feats.sectors},
              {"social_neighborhood_m", o.social_size},
              {"social_grid_cells", o.social_cells}}},
            {"features", features_to_json(config.features)},
            {"epochs", o.epochs},
            {"batch_size", o.batch_size},
            {"learning_rate", o.learning_rate},
            {"rmsprop_decay", o.rmsprop_decay},
            {"rmsprop_epsilon", o.rmsprop_epsilon},
            {"grad_clip_norm", o.grad_clip_norm},
            {"seed", o.seed},
            {"holdout_frac", o.holdout_frac},
            {"autoregressive_training", o.autoregressive}};

  std::string loss_csv = o.loss_csv.empty() ? default_sibling(o.out, "_loss.csv") : o.loss_csv;

  EpochCallback per_epoch = [&](const ModelParams& model, const EpochStats& stats) {
    std::cout << "epoch " << stats.epoch << "/" << o.epochs << "  train_nll " << stats.train_nll;
    if (stats.holdout_nll) std::cout << "  holdout_nll " << *stats.holdout_nll;
    std::cout << "\n";
    if (o.checkpoint_every > 0 && stats.epoch % o.checkpoint_every == 0 &&
        stats.epoch < o.epochs) {
      save_checkpoint(o.out, model, echo);
    }
  };

  TrainResult result = train(windows, config, per_epoch);
  save_checkpoint(o.out, result.model, echo);
  save_loss_curve(loss_csv, result.curve, echo.dump());
  std::cout << "wrote " << o.out << " and " << loss_csv << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
  std::string checkpoint;
  std::string baseline;
  std::string out;
  std::string out_csv;
  int k = 20;
  std::uint64_t seed = 0;
  std::string mhd = "dubuisson";
  bool joint_by_ade = false;
  bool oracle_vehicles = false;
  int threads = 1;
};

int run_eval(const CLI::App& cmd, DataOptions data, FeatureOptions feats, const EvalOptions& o) {
  std::optional<LoadedCheckpoint> loaded;
  if (!o.checkpoint.empty()) {
    loaded = load_checkpoint(o.checkpoint);
    resolve_from_echo(cmd, loaded->config, data, feats);
    if (cmd.count("--sectors") == 0) feats.sectors = loaded->model.dims.n_sector;
  }
  if (cmd.count("--stride") == 0) data.stride = data.t_obs + data.t_pred;

  std::vector<SceneWindow> windows = load_windows(data);
  std::cout << "loaded " << windows.size() << " windows from " << data.path << "\n";

  EvalConfig config;
  config.k = o.k;
  config.seed = o.seed;
  config.mhd_mode = o.mhd == "hausdorff" ? MhdMode::Hausdorff : MhdMode::Dubuisson;
  config.joint_best_by_ade = o.joint_by_ade;
  config.oracle_vehicles = o.oracle_vehicles;
  config.threads = o.threads;
  config.features = to_feature_config(feats);

  std::string label, variant;
  MetricMeans means;
  if (loaded) {
    label = "collision_grid_lstm";
    variant = to_string(loaded->model.variant);
    means = evaluate_model(windows, loaded->model, config);
  } else {
    label = "linear_regression";
    variant = "lr";
    means = evaluate_linear_regression(windows, config);
  }

  print_metrics(label + " (" + variant + ", best-of-" + std::to_string(config.k) + ")", means);
  print_reference_table();

  std::string csv = o.out_csv.empty() ? default_sibling(o.out, ".csv") : o.out_csv;
  save_results(o.out, csv, label, variant, data.path, config, means);
  std::cout << "\nwrote " << o.out << " and " << csv << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictOptions {
  std::string checkpoint;
  std::string out;
  std::int64_t window_id = 0;
  int k = 20;
  std::uint64_t seed = 0;
  bool oracle_vehicles = false;
};

int run_predict(const CLI::App& cmd, DataOptions data, FeatureOptions feats,
                const PredictOptions& o) {
  LoadedCheckpoint loaded = load_checkpoint(o.checkpoint);
  resolve_from_echo(cmd, loaded.config, data, feats);
  if (cmd.count("--sectors") == 0) feats.sectors = loaded.model.dims.n_sector;

  std::vector<SceneWindow> windows = load_windows(data);
  const SceneWindow* window = nullptr;
  for (const SceneWindow& w : windows) {
    if (w.window_id == o.window_id) {
      window = &w;
      break;
    }
  }
  if (window == nullptr) {
    throw DataError(DataError::Kind::WindowNotFound,
                    "no window starts at frame " + std::to_string(o.window_id) + " in " +
                        data.path + " (" + std::to_string(windows.size()) + " windows)");
  }

  RolloutOptions options;
  options.oracle_vehicles = o.oracle_vehicles;
  options.features = to_feature_config(feats);
  RolloutResult result = rollout(*window, loaded.model, o.k, o.seed, options);
  save_predictions(o.out, *window, result);
  std::cout << "wrote " << o.out << ": window " << window->window_id << ", "
            << result.pedestrian_ids.size() << " pedestrians, " << o.k << " samples\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian trajectory prediction with polar collision grids"};
  app.require_subcommand(1);

  SynthOptions synth_opts;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "Generate a scripted avoidance-scenario scene CSV");
  synth_cmd->add_option("--config", synth_opts.config_path, "Scenario-mix JSON (defaults used if omitted)");
  synth_cmd->add_option("--seed", synth_opts.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_opts.out, "Output scene CSV")->required();

  DataOptions train_data;
  FeatureOptions train_feats;
  TrainOptions train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model variant on a scene CSV");
  add_data_options(*train_cmd, train_data, false);
  add_feature_options(*train_cmd, train_feats);
  train_cmd->add_option("--variant", train_opts.variant, "Model variant")
      ->check(CLI::IsMember({"vanilla", "p", "v", "pv", "social", "social_filtered"}))
      ->capture_default_str();
  train_cmd->add_option("--epochs", train_opts.epochs, "Training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--batch-size", train_opts.batch_size, "Windows per gradient step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--lr", train_opts.learning_rate, "RMSProp learning rate")
      ->capture_default_str();
  train_cmd->add_option("--rmsprop-decay", train_opts.rmsprop_decay, "RMSProp decay")
      ->capture_default_str();
  train_cmd->add_option("--rmsprop-eps", train_opts.rmsprop_epsilon, "RMSProp epsilon")
      ->capture_default_str();
  train_cmd->add_option("--clip", train_opts.grad_clip_norm, "Global gradient clip norm")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_opts.seed, "Training seed")->capture_default_str();
  train_cmd->add_option("--holdout-frac", train_opts.holdout_frac,
                        "Fraction of windows held out for a per-epoch loss readout")
      ->capture_default_str();
  train_cmd->add_flag("--autoregressive", train_opts.autoregressive,
                      "Feed predicted displacements back during the horizon");
  train_cmd->add_option("--hidden", train_opts.hidden, "LSTM hidden size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--embed", train_opts.embed, "Per-stream embedding size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--social-size", train_opts.social_size,
                        "Social pooling neighborhood edge in meters")
      ->capture_default_str();
  train_cmd->add_option("--social-cells", train_opts.social_cells,
                        "Social pooling cells per side")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--checkpoint-every", train_opts.checkpoint_every,
                        "Also save the checkpoint every N epochs (0 = only at the end)")
      ->capture_default_str();
  train_cmd->add_option("--out", train_opts.out, "Checkpoint JSON path")->required();
  train_cmd->add_option("--loss-csv", train_opts.loss_csv,
                        "Loss curve CSV path (default: <out>_loss.csv)");

  DataOptions eval_data;
  FeatureOptions eval_feats;
  EvalOptions eval_opts;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint or baseline with best-of-k metrics");
  add_data_options(*eval_cmd, eval_data, true);
  add_feature_options(*eval_cmd, eval_feats);
  auto* ckpt_opt = eval_cmd->add_option("--checkpoint", eval_opts.checkpoint, "Checkpoint JSON");
  auto* base_opt = eval_cmd->add_option("--baseline", eval_opts.baseline,
                                        "Closed-form baseline instead of a checkpoint")
                       ->check(CLI::IsMember({"lr"}));
  ckpt_opt->excludes(base_opt);
  base_opt->excludes(ckpt_opt);
  eval_cmd->add_option("--k", eval_opts.k, "Samples per pedestrian")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_opts.seed, "Sampling seed")->capture_default_str();
  eval_cmd->add_option("--mhd", eval_opts.mhd, "Trajectory set distance mode")
      ->check(CLI::IsMember({"dubuisson", "hausdorff"}))
      ->capture_default_str();
  eval_cmd->add_flag("--joint-by-ade", eval_opts.joint_by_ade,
                     "Pick one best sample by ADE and report all metrics from it");
  eval_cmd->add_flag("--oracle-vehicles", eval_opts.oracle_vehicles,
                     "Use ground-truth vehicle futures during rollout");
  eval_cmd->add_option("--threads", eval_opts.threads, "Worker threads over windows")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_opts.out, "Results JSON path")->required();
  eval_cmd->add_option("--out-csv", eval_opts.out_csv,
                       "Results CSV mirror path (default: <out>.csv)");

  DataOptions predict_data;
  FeatureOptions predict_feats;
  PredictOptions predict_opts;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Export sampled futures for one window as plot data");
  add_data_options(*predict_cmd, predict_data, false);
  add_feature_options(*predict_cmd, predict_feats);
  predict_cmd->add_option("--checkpoint", predict_opts.checkpoint, "Checkpoint JSON")->required();
  predict_cmd->add_option("--window", predict_opts.window_id,
                          "Window id (frame id of the first observed frame)")
      ->required();
  predict_cmd->add_option("--k", predict_opts.k, "Samples per pedestrian")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  predict_cmd->add_option("--seed", predict_opts.seed, "Sampling seed")->capture_default_str();
  predict_cmd->add_flag("--oracle-vehicles", predict_opts.oracle_vehicles,
                        "Use ground-truth vehicle futures during rollout");
  predict_cmd->add_option("--out", predict_opts.out, "Prediction CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth_opts);
    if (train_cmd->parsed()) return run_train(train_data, train_feats, train_opts);
    if (eval_cmd->parsed()) {
      if (eval_opts.checkpoint.empty() && eval_opts.baseline.empty()) {
        std::cerr << "eval requires --checkpoint or --baseline\n";
        return 1;
      }
      return run_eval(*eval_cmd, eval_data, eval_feats, eval_opts);
    }
    if (predict_cmd->parsed()) return run_predict(*predict_cmd, predict_data, predict_feats,
                                                  predict_opts);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const ShapeMismatch& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
