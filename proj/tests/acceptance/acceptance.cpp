// End-to-end acceptance checks. Each criterion prints exactly one PASS/FAIL
// line; the exit code is the number of failures. Tolerances and runtime
// budgets are pinned here, next to the checks they gate.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "colgrid/errors.hpp"
#include "colgrid/evaluate.hpp"
#include "colgrid/features.hpp"
#include "colgrid/geometry.hpp"
#include "colgrid/metrics.hpp"
#include "colgrid/model.hpp"
#include "colgrid/predictor.hpp"
#include "colgrid/rng.hpp"
#include "colgrid/scene.hpp"
#include "colgrid/synth.hpp"
#include "colgrid/trainer.hpp"

using namespace colgrid;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void run_criterion(int criterion, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [pass, detail] = body();
    report(criterion, pass, detail);
  } catch (const std::exception& e) {
    report(criterion, false, std::string("unexpected exception: ") + e.what());
  }
}

std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buffer[512];
  std::vsnprintf(buffer, sizeof buffer, format, args);
  va_end(args);
  return buffer;
}

AgentState agent(std::int64_t id, Vec2 pos, Vec2 vel, AgentKind kind = AgentKind::Pedestrian) {
  return AgentState{id, kind, pos, vel};
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic time-to-collision vs brute-force simulation.

std::pair<bool, std::string> check_ttc_oracle() {
  const auto start = clock_type::now();
  constexpr double kDmin = 0.7;
  constexpr double kHorizon = 60.0;
  constexpr double kStep = 1e-3;
  constexpr double kTol = 2e-3;  // one simulation step of slack either way

  Rng rng(2026);
  int checked = 0;
  int collisions = 0;
  int attempts = 0;
  double worst = 0.0;
  while (checked < 1000) {
    if (++attempts > 20000) return {false, "pair generation failed to converge"};
    AgentState a = agent(1, {rng.uniform(-15, 15), rng.uniform(-15, 15)},
                         {rng.uniform(-2, 2), rng.uniform(-2, 2)});
    AgentState b;
    if (checked % 2 == 0) {
      b = agent(2, {rng.uniform(-15, 15), rng.uniform(-15, 15)},
                {rng.uniform(-2, 2), rng.uniform(-2, 2)});
    } else {
      // Aim b at a point on a's future path so collisions are well represented.
      const double t_cross = rng.uniform(2.0, 30.0);
      const double speed = rng.uniform(0.3, 2.0);
      const double angle = rng.uniform(0.0, 6.283185307179586);
      const Vec2 vb{speed * std::cos(angle), speed * std::sin(angle)};
      const Vec2 cross = a.position + t_cross * a.velocity;
      const Vec2 jitter{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
      b = agent(2, cross - t_cross * vb + jitter, vb);
    }

    // Existence is ill-conditioned when the paths graze the d_min circle or
    // the crossing sits on the simulation horizon; regenerate those pairs.
    const Vec2 dp = b.position - a.position;
    const Vec2 dv = b.velocity - a.velocity;
    const double vv = dv.squared_norm();
    double closest = dp.norm();
    if (vv >= 1e-12) {
      const double t_star = std::max(0.0, -dp.dot(dv) / vv);
      closest = (dp + t_star * dv).norm();
    }
    if (std::abs(closest - kDmin) < 5e-3) continue;
    const std::optional<double> analytic = time_to_collision(a, b, kDmin);
    if (analytic && std::abs(*analytic - kHorizon) < 1e-2) continue;

    std::optional<double> simulated;
    const double d2 = kDmin * kDmin;
    for (int i = 0; i <= static_cast<int>(kHorizon / kStep); ++i) {
      const double t = kStep * i;
      if ((dp + t * dv).squared_norm() <= d2) {
        simulated = t;
        break;
      }
    }

    const bool analytic_hits = analytic.has_value() && *analytic <= kHorizon;
    if (analytic_hits != simulated.has_value()) {
      return {false, fmt("existence disagreement on pair %d (analytic %s, simulated %s)",
                         checked, analytic_hits ? "hit" : "none",
                         simulated ? "hit" : "none")};
    }
    if (analytic_hits) {
      ++collisions;
      worst = std::max(worst, std::abs(*analytic - *simulated));
      if (worst > kTol) {
        return {false, fmt("pair %d: analytic %.6f vs simulated %.6f", checked, *analytic,
                           *simulated)};
      }
    }
    ++checked;
  }
  const double elapsed = seconds_since(start);
  return {elapsed < 10.0,
          fmt("1000 pairs (%d collide): existence agreement exact, max |ttc error| "
              "%.2e s <= 2e-3 (%.1f s < 10 s)",
              collisions, worst, elapsed)};
}

// ---------------------------------------------------------------------------
// Criterion 2: analytic gradients vs central finite differences.

SceneWindow make_window(std::vector<std::vector<AgentState>> frames,
                        std::vector<std::int64_t> targets, int t_obs, int t_pred) {
  SceneWindow w;
  w.t_obs = t_obs;
  w.t_pred = t_pred;
  w.dt = 0.5;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    w.frames.push_back({static_cast<std::int64_t>(i), std::move(frames[i])});
  }
  w.target_ids = std::move(targets);
  return w;
}

// Three pedestrians on converging courses plus a vehicle bearing down on the
// first one, so both collision grids and the social pool carry signal.
SceneWindow traffic_window() {
  std::vector<std::vector<AgentState>> frames;
  for (int t = 0; t < 7; ++t) {
    const double s = 0.5 * t;
    frames.push_back({agent(1, {0.8 * s, 0.0}, {0.8, 0.0}),
                      agent(2, {2.4 - 0.7 * s, 0.2}, {-0.7, 0.0}),
                      agent(3, {1.2, -2.0 + 0.9 * s}, {0.0, 0.9}),
                      agent(9, {14.0 - 1.1 * t, 0.05}, {-2.2, 0.0}, AgentKind::Vehicle)});
  }
  return make_window(std::move(frames), {1, 2, 3}, 4, 3);
}

std::pair<double*, int> flat(const TensorRef& ref) {
  if (ref.mat != nullptr) return {ref.mat->data(), static_cast<int>(ref.mat->size())};
  return {ref.vec->data(), static_cast<int>(ref.vec->size())};
}

std::pair<const double*, int> flat(const ConstTensorRef& ref) {
  if (ref.mat != nullptr) return {ref.mat->data(), static_cast<int>(ref.mat->size())};
  return {ref.vec->data(), static_cast<int>(ref.vec->size())};
}

std::pair<bool, std::string> check_gradients() {
  const auto start = clock_type::now();
  // Full PV variant (both grids enabled) at reduced width so the parameter
  // sweep stays well inside the runtime budget; the backward pass under test
  // is identical at every width.
  ModelDims dims;
  dims.embed_dim = 16;
  dims.hidden_dim = 24;

  const std::vector<SceneWindow> windows = {traffic_window()};
  const FeatureBatch batch = build_feature_batch(windows);

  Rng rng(42);
  ModelParams model = init_model(Variant::PV, dims, rng);
  // Check at a generic point: a zero bias on an idle (all-zero) input column
  // parks the relu pre-activation exactly on its kink, where a symmetric
  // difference measures the one-sided slope instead of the derivative.
  for (auto& ref : tensor_refs(model)) {
    if (ref.vec != nullptr) {
      for (int i = 0; i < ref.vec->size(); ++i) (*ref.vec)(i) = rng.uniform(0.05, 0.25);
    }
  }

  ForwardCache cache;
  model_forward(model, batch, &cache);
  ModelParams grad = zeros_like(model);
  model_backward(model, batch, cache, grad);

  auto params = tensor_refs(model);
  auto grads = tensor_refs(std::as_const(grad));
  if (params.size() != grads.size()) return {false, "tensor list mismatch"};

  constexpr double kH = 1e-5;
  constexpr double kTol = 1e-4;
  double worst = 0.0;
  int count = 0;
  for (std::size_t r = 0; r < params.size(); ++r) {
    auto [p, n] = flat(params[r]);
    auto [g, gn] = flat(grads[r]);
    if (n != gn) return {false, "tensor size mismatch at " + params[r].name};
    count += n;
    for (int i = 0; i < n; ++i) {
      const double saved = p[i];
      p[i] = saved + kH;
      const double up = model_forward(model, batch);
      p[i] = saved - kH;
      const double down = model_forward(model, batch);
      p[i] = saved;
      const double fd = (up - down) / (2.0 * kH);
      worst = std::max(worst,
                       std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-8}));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= kTol && elapsed < 60.0,
          fmt("pv variant, 3 peds + 1 vehicle, %d parameters (embed 16, hidden 24): max "
              "rel err %.2e <= 1e-4 at h=1e-5 (%.1f s < 60 s)",
              count, worst, elapsed)};
}

// ---------------------------------------------------------------------------
// Criterion 3: closed-form NLL at the mean.

std::pair<bool, std::string> check_nll_closed_form() {
  GaussianParams p;
  p.mu_x = 0.37;
  p.mu_y = -1.25;
  p.sigma_x = 1.0;
  p.sigma_y = 1.0;
  p.rho = 0.0;
  const double nll = gaussian_nll(p, {p.mu_x, p.mu_y});
  const double expected = std::log(2.0 * 3.14159265358979323846);
  const double err = std::abs(nll - expected);
  return {err <= 1e-9, fmt("nll at mean with sigma=(1,1), rho=0: |%.12f - log(2*pi)| = "
                           "%.2e <= 1e-9",
                           nll, err)};
}

// ---------------------------------------------------------------------------
// Criterion 4: grid invariance under rigid motion; parallel walkers.

Scene transformed(const Scene& scene, double angle, Vec2 shift) {
  Scene out = scene;
  for (auto& frame : out.frames) {
    for (auto& a : frame.agents) {
      a.position = a.position.rotated(angle) + shift;
      a.velocity = a.velocity.rotated(angle);
    }
  }
  return out;
}

double max_abs(const std::vector<Mat>& mats) {
  double m = 0.0;
  for (const auto& mat : mats) {
    if (mat.size() > 0) m = std::max(m, mat.cwiseAbs().maxCoeff());
  }
  return m;
}

double max_abs_diff(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() > 0) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  return m;
}

std::pair<bool, std::string> check_grid_invariance() {
  SynthConfig mix;
  mix.head_on_ped = 2;
  mix.crossing_ped = 2;
  mix.vehicle_yield = 2;
  mix.parallel_walk = 0;
  mix.random_mix = 6;
  const Scene scene = synthesize_scenarios(mix, 11);
  const auto windows = make_windows(scene, 6, 6, 3);

  const Scene moved = transformed(scene, 0.7317, {3.21, -5.43});
  const auto moved_windows = make_windows(moved, 6, 6, 3);
  if (moved_windows.size() != windows.size()) return {false, "window count changed"};

  const FeatureBatch a = build_feature_batch(windows);
  const FeatureBatch b = build_feature_batch(moved_windows);
  const double ppcg_diff = max_abs_diff(a.ppcg, b.ppcg);
  const double vpcg_diff = max_abs_diff(a.vpcg, b.vpcg);
  const double signal = std::max(max_abs(a.ppcg), max_abs(a.vpcg));
  if (signal <= 0.1) return {false, "scene produced no grid activity; check is vacuous"};

  SynthConfig parallel;
  parallel.head_on_ped = 0;
  parallel.crossing_ped = 0;
  parallel.vehicle_yield = 0;
  parallel.parallel_walk = 4;
  parallel.random_mix = 0;
  const Scene walkers = synthesize_scenarios(parallel, 3);
  const FeatureBatch w = build_feature_batch(make_windows(walkers, 6, 6, 3));
  const double walker_max = std::max(max_abs(w.ppcg), max_abs(w.vpcg));

  return {ppcg_diff <= 1e-9 && vpcg_diff <= 1e-9 && walker_max == 0.0,
          fmt("rotation+translation changes grids by <= %.2e (tol 1e-9, peak entry "
              "%.2f); parallel-walker grids all zero (max %.1f)",
              std::max(ppcg_diff, vpcg_diff), signal, walker_max)};
}

// ---------------------------------------------------------------------------
// Criterion 5: training drives the loss down.

std::pair<bool, std::string> check_training_sanity() {
  const auto start = clock_type::now();
  SynthConfig mix;  // all five templates represented
  mix.head_on_ped = 5;
  mix.crossing_ped = 5;
  mix.vehicle_yield = 5;
  mix.parallel_walk = 5;
  mix.random_mix = 5;
  const Scene scene = synthesize_scenarios(mix, 7);
  auto windows = make_windows(scene, 6, 6, 1);
  if (windows.size() < 200) return {false, fmt("only %zu windows", windows.size())};
  windows.resize(200);

  TrainConfig config;
  config.variant = Variant::PV;
  config.dims.embed_dim = 8;
  config.dims.hidden_dim = 16;
  config.epochs = 50;
  config.batch_size = 16;
  config.learning_rate = 0.001;
  config.seed = 7;
  const TrainResult result = train(windows, config);

  const double first = result.curve.front().train_nll;
  const double last = result.curve.back().train_nll;
  const double elapsed = seconds_since(start);
  return {last <= 0.5 * first && elapsed < 300.0,
          fmt("pv on 200 mixed windows (seed 7): nll %.2f -> %.2f after 50 epochs "
              "(<= 50%% of epoch 1) (%.1f s < 300 s)",
              first, last, elapsed)};
}

// ---------------------------------------------------------------------------
// Criteria 6 and 7: directional model comparisons on a held-out avoidance set.

struct ComparisonResult {
  std::array<std::array<double, 4>, 3> ade{};  // [seed-1][vanilla, pv, social, filtered]
  std::size_t min_test_windows = SIZE_MAX;
};

ComparisonResult run_model_comparison() {
  // Sized so the grid and filtering effects are reliable, not knife-edge:
  // avoidance-heavy training, an avoidance-dominated held-out set, and
  // autoregressive training so the learned dynamics match the rollout regime.
  SynthConfig train_mix;
  train_mix.head_on_ped = 12;
  train_mix.crossing_ped = 12;
  train_mix.vehicle_yield = 12;
  train_mix.parallel_walk = 2;
  train_mix.random_mix = 2;

  SynthConfig test_mix;
  test_mix.head_on_ped = 60;
  test_mix.crossing_ped = 60;
  test_mix.vehicle_yield = 60;
  test_mix.parallel_walk = 10;
  test_mix.random_mix = 10;

  constexpr std::array<Variant, 4> kVariants = {Variant::Vanilla, Variant::PV,
                                                Variant::Social, Variant::SocialFiltered};
  ComparisonResult out;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Scene train_scene = synthesize_scenarios(train_mix, 1000 + seed);
    const Scene test_scene = synthesize_scenarios(test_mix, seed);
    const auto train_windows = make_windows(train_scene, 6, 6, 2);
    const auto test_windows = make_windows(test_scene, 6, 6, 6);
    out.min_test_windows = std::min(out.min_test_windows, test_windows.size());

    for (std::size_t m = 0; m < kVariants.size(); ++m) {
      TrainConfig config;
      config.variant = kVariants[m];
      config.dims.embed_dim = 8;
      config.dims.hidden_dim = 16;
      config.epochs = 100;
      config.batch_size = 16;
      config.learning_rate = 0.001;
      config.seed = seed;
      config.autoregressive_training = true;
      const TrainResult result = train(train_windows, config);

      EvalConfig eval;
      eval.k = 20;
      eval.seed = 100 + seed;
      eval.threads = 2;
      out.ade[seed - 1][m] = evaluate_model(test_windows, result.model, eval).ade;
    }
  }
  return out;
}

std::pair<bool, std::string> check_pv_beats_vanilla(const ComparisonResult& r) {
  if (r.min_test_windows < 300) {
    return {false, fmt("held-out set too small: %zu windows", r.min_test_windows)};
  }
  int wins = 0;
  std::string detail;
  for (int s = 0; s < 3; ++s) {
    const bool win = r.ade[s][1] < r.ade[s][0];
    wins += win ? 1 : 0;
    detail += fmt("seed %d pv %.3f %s vanilla %.3f  ", s + 1, r.ade[s][1], win ? "<" : ">=",
                  r.ade[s][0]);
  }
  return {wins >= 2, detail + fmt("-> %d/3 seeds (need >= 2, best-of-20 ade, %zu windows)",
                                  wins, r.min_test_windows)};
}

std::pair<bool, std::string> check_filtered_social(const ComparisonResult& r) {
  int wins = 0;
  std::string detail;
  for (int s = 0; s < 3; ++s) {
    const bool win = r.ade[s][3] <= r.ade[s][2];
    wins += win ? 1 : 0;
    detail += fmt("seed %d filtered %.3f %s social %.3f  ", s + 1, r.ade[s][3],
                  win ? "<=" : ">", r.ade[s][2]);
  }
  return {wins >= 2, detail + fmt("-> %d/3 seeds (need >= 2)", wins)};
}

// ---------------------------------------------------------------------------
// Criterion 8: metric identities.

std::pair<bool, std::string> check_metric_identities() {
  // Identical trajectories score zero on every metric.
  std::vector<Vec2> path;
  for (int t = 0; t < 8; ++t) path.push_back({0.6 * t, std::sin(0.7 * t)});
  const TrajectoryMetrics same = all_metrics(path, path, 0.5);
  if (same.ade != 0.0 || same.fde != 0.0 || same.mhd != 0.0 || same.se != 0.0 ||
      !same.he.has_value() || *same.he != 0.0) {
    return {false, "identical trajectories did not score zero"};
  }

  // The k=1 sample pool is a subset of the k=20 pool (substreams are
  // per-sample), so best-of-20 can never lose to best-of-1 on any metric.
  SynthConfig mix;
  mix.head_on_ped = 2;
  mix.crossing_ped = 2;
  mix.vehicle_yield = 2;
  mix.parallel_walk = 2;
  mix.random_mix = 2;
  const Scene scene = synthesize_scenarios(mix, 9);
  const auto windows = make_windows(scene, 6, 6, 6);

  ModelDims dims;
  dims.embed_dim = 8;
  dims.hidden_dim = 16;
  Rng rng(5);
  const ModelParams model = init_model(Variant::PV, dims, rng);

  int pairs = 0;
  for (const auto& window : windows) {
    const RolloutResult one = rollout(window, model, 1, 77);
    const RolloutResult twenty = rollout(window, model, 20, 77);
    for (std::size_t j = 0; j < one.pedestrian_ids.size(); ++j) {
      const auto gt = window.ground_truth(one.pedestrian_ids[j]);
      std::vector<std::vector<Vec2>> pool_one = {one.samples[0][j]};
      std::vector<std::vector<Vec2>> pool_twenty;
      for (const auto& sample : twenty.samples) pool_twenty.push_back(sample[j]);
      const TrajectoryMetrics b1 = best_of_k(pool_one, gt, window.dt);
      const TrajectoryMetrics b20 = best_of_k(pool_twenty, gt, window.dt);
      if (b20.ade > b1.ade || b20.fde > b1.fde || b20.mhd > b1.mhd || b20.se > b1.se ||
          b1.he.has_value() != b20.he.has_value() ||
          (b1.he.has_value() && *b20.he > *b1.he)) {
        return {false, fmt("best-of-20 lost to best-of-1 on window %lld",
                           (long long)window.window_id)};
      }
      ++pairs;
    }
  }

  // The set distance is symmetric, exactly.
  Rng traj_rng(31);
  for (int i = 0; i < 50; ++i) {
    std::vector<Vec2> a, b;
    for (int t = 0; t < 7; ++t) a.push_back({traj_rng.uniform(-5, 5), traj_rng.uniform(-5, 5)});
    for (int t = 0; t < 5; ++t) b.push_back({traj_rng.uniform(-5, 5), traj_rng.uniform(-5, 5)});
    if (mhd(a, b, MhdMode::Dubuisson) != mhd(b, a, MhdMode::Dubuisson) ||
        mhd(a, b, MhdMode::Hausdorff) != mhd(b, a, MhdMode::Hausdorff)) {
      return {false, fmt("set distance asymmetric on random pair %d", i)};
    }
  }
  return {true, fmt("identity -> all zeros; best-of-20 <= best-of-1 on %d (ped, window) "
                    "pairs x 5 metrics; set-distance symmetry exact on 50 pairs",
                    pairs)};
}

// ---------------------------------------------------------------------------
// Criterion 9: the line-fit baseline is exact on constant-velocity motion.

std::pair<bool, std::string> check_baseline_exactness() {
  std::vector<SceneWindow> windows;
  Rng rng(17);
  for (int wj = 0; wj < 10; ++wj) {
    const Vec2 start{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const Vec2 vel{rng.uniform(-1.8, 1.8), rng.uniform(-1.8, 1.8)};
    SceneWindow w;
    w.window_id = wj;
    w.t_obs = 6;
    w.t_pred = 6;
    w.dt = 0.5;
    for (int t = 0; t < 12; ++t) {
      w.frames.push_back({t, {agent(1, start + (0.5 * t) * vel, vel)}});
    }
    w.target_ids = {1};
    windows.push_back(std::move(w));
  }
  const MetricMeans means = evaluate_linear_regression(windows, EvalConfig{});
  return {means.ade <= 1e-9,
          fmt("10 constant-velocity windows: ade %.2e <= 1e-9 (fde %.2e)", means.ade,
              means.fde)};
}

// ---------------------------------------------------------------------------
// Criteria 10 and 11: CLI reproducibility and the canonical-schema path.

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  const std::string command = std::string(COLGRID_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return {};
  CmdResult result;
  char buffer[4096];
  while (std::fgets(buffer, sizeof buffer, pipe) != nullptr) result.output += buffer;
  const int status = pclose(pipe);
  result.exit_code = WEXITSTATUS(status);
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

std::pair<bool, std::string> check_cli_reproducibility(const fs::path& dir) {
  const std::string scene1 = (dir / "scene1.csv").string();
  const std::string scene2 = (dir / "scene2.csv").string();
  for (const auto& out : {scene1, scene2}) {
    const CmdResult r = run_cli("synth --seed 7 --out " + out);
    if (r.exit_code != 0) return {false, "synth failed: " + r.output};
  }

  const std::string train_args =
      "train --data " + scene1 +
      " --stride 3 --variant pv --epochs 3 --batch-size 16 --embed 8 --hidden 8 --seed 5";
  const std::string model1 = (dir / "model1.json").string();
  const std::string model2 = (dir / "model2.json").string();
  for (const auto& [out, loss] :
       {std::pair{model1, dir / "loss1.csv"}, std::pair{model2, dir / "loss2.csv"}}) {
    const CmdResult r = run_cli(train_args + " --out " + out + " --loss-csv " + loss.string());
    if (r.exit_code != 0) return {false, "train failed: " + r.output};
  }

  const std::string eval_args = "eval --data " + scene1 + " --checkpoint " + model1 +
                                " --k 4 --seed 11 --threads 2";
  for (const auto& suffix : {"1", "2"}) {
    const CmdResult r = run_cli(eval_args + " --out " + (dir / "results").string() + suffix +
                                ".json --out-csv " + (dir / "results").string() + suffix +
                                ".csv");
    if (r.exit_code != 0) return {false, "eval failed: " + r.output};
  }

  const std::string predict_args = "predict --data " + scene1 + " --checkpoint " + model1 +
                                   " --window 2 --k 3 --seed 9 --out ";
  for (const auto& suffix : {"1", "2"}) {
    const CmdResult r = run_cli(predict_args + (dir / "pred").string() + suffix + ".csv");
    if (r.exit_code != 0) return {false, "predict failed: " + r.output};
  }

  std::size_t bytes = 0;
  for (const auto& stem : {"scene", "model", "loss", "results", "pred"}) {
    for (const auto& ext : {".csv", ".json"}) {
      const fs::path p1 = dir / (std::string(stem) + "1" + ext);
      const fs::path p2 = dir / (std::string(stem) + "2" + ext);
      if (!fs::exists(p1)) continue;
      const std::string b1 = read_file(p1);
      if (b1 != read_file(p2)) {
        return {false, std::string("rerun differs: ") + stem + ext};
      }
      bytes += b1.size();
    }
  }
  return {true, fmt("synth/train/eval/predict reruns byte-identical (%zu bytes compared)",
                    bytes)};
}

std::pair<bool, std::string> check_canonical_schema_eval(const fs::path& dir) {
  // Stand-in recording in the canonical schema (the shared-space dataset
  // itself is not redistributable), including cyclist rows to exercise the
  // class remap. Gates the mechanics only; the printed reference values are
  // for side-by-side reading, not for numeric comparison.
  const fs::path csv = dir / "shared_space.csv";
  {
    std::ofstream out(csv);
    out << "frame_id,agent_id,agent_type,x_m,y_m\n";
    for (int f = 0; f < 20; ++f) {
      out << f << ",1,ped," << 0.6 * f << ",0\n";
      out << f << ",2,ped," << 8.0 - 0.5 * f << "," << 0.1 * f << "\n";
      out << f << ",5,cyclist,3," << 10.0 - 0.8 * f << "\n";
      out << f << ",7,veh," << 25.0 - 1.5 * f << ",0.4\n";
    }
  }

  const std::string scene = (dir / "train_scene.csv").string();
  const std::string model = (dir / "schema_model.json").string();
  if (run_cli("synth --seed 3 --out " + scene).exit_code != 0) {
    return {false, "synth failed"};
  }
  const CmdResult trained = run_cli(
      "train --data " + scene +
      " --stride 3 --variant pv --epochs 2 --batch-size 16 --embed 8 --hidden 8 --seed 4"
      " --out " + model);
  if (trained.exit_code != 0) return {false, "train failed: " + trained.output};

  const fs::path results = dir / "schema_results.json";
  const CmdResult r = run_cli("eval --data " + csv.string() + " --checkpoint " + model +
                              " --k 3 --seed 2 --out " + results.string());
  if (r.exit_code != 0) return {false, "eval failed: " + r.output};
  const bool table = r.output.find("Reference: best-of-20 results on the HBS shared-space "
                                   "dataset") != std::string::npos &&
                     r.output.find("PV-CollisionGrid") != std::string::npos;
  return {table && fs::exists(results),
          "canonical-schema csv with cyclist rows evaluates end-to-end; reference table "
          "printed alongside (values informational)"};
}

}  // namespace

int main() {
  const fs::path dir =
      fs::temp_directory_path() / ("colgrid_acceptance_" + std::to_string(getpid()));
  fs::create_directories(dir);

  run_criterion(1, check_ttc_oracle);
  run_criterion(2, check_gradients);
  run_criterion(3, check_nll_closed_form);
  run_criterion(4, check_grid_invariance);
  run_criterion(5, check_training_sanity);
  try {
    const ComparisonResult comparison = run_model_comparison();
    run_criterion(6, [&] { return check_pv_beats_vanilla(comparison); });
    run_criterion(7, [&] { return check_filtered_social(comparison); });
  } catch (const std::exception& e) {
    report(6, false, std::string("unexpected exception: ") + e.what());
    report(7, false, std::string("unexpected exception: ") + e.what());
  }
  run_criterion(8, check_metric_identities);
  run_criterion(9, check_baseline_exactness);
  run_criterion(10, [&] { return check_cli_reproducibility(dir); });
  run_criterion(11, [&] { return check_canonical_schema_eval(dir); });

  fs::remove_all(dir);
  if (g_failures == 0) std::printf("all 11 criteria passed\n");
  return g_failures;
}
