#include "colgrid/synth.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include "colgrid/errors.hpp"
#include "colgrid/geometry.hpp"
#include "colgrid/rng.hpp"

namespace colgrid {

namespace {

constexpr double kMinSpeed = 0.3;   // m/s, slower agents would read as stationary
constexpr double kMaxSpeed = 15.0;  // m/s

struct SimAgent {
  std::int64_t id{0};
  AgentKind kind{AgentKind::Pedestrian};
  Vec2 pos;
  Vec2 nominal_vel;  // assigned straight course; avoidance never rewrites it
};

/// Vehicles outrank pedestrians; ties go to the lower id.
bool outranks(const SimAgent& a, const SimAgent& b) {
  if (a.kind != b.kind) return a.kind == AgentKind::Vehicle;
  return a.id < b.id;
}

Vec2 unit(double angle_rad) { return {std::cos(angle_rad), std::sin(angle_rad)}; }

/// Runs one scenario block: every frame each agent re-evaluates its predicted
/// conflicts against all higher-priority agents (closed-form TTC on current
/// positions and *nominal* courses, with an inflated clearance radius) and
/// swerves while any conflict stays under the firing horizon. All moves are
/// committed simultaneously.
void simulate_block(std::vector<SimAgent> agents, const SynthConfig& cfg,
                    std::int64_t first_frame, Scene& out) {
  const double dt = 1.0 / cfg.frame_rate_hz;
  const double deflect_rad = cfg.deflect_angle_deg * M_PI / 180.0;
  std::vector<Vec2> step_vel(agents.size());

  for (int t = 0; t < cfg.frames_per_scenario; ++t) {
    Frame frame;
    frame.frame_id = first_frame + t;
    for (const auto& a : agents) {
      frame.agents.push_back(AgentState{a.id, a.kind, a.pos, Vec2{}});
    }
    out.frames.push_back(std::move(frame));
    if (t + 1 == cfg.frames_per_scenario) break;

    for (std::size_t i = 0; i < agents.size(); ++i) {
      const SimAgent& a = agents[i];
      bool fire = false;
      bool vehicle_conflict = false;
      for (std::size_t j = 0; j < agents.size(); ++j) {
        if (i == j) continue;
        const SimAgent& o = agents[j];
        if (!outranks(o, a)) continue;
        const bool vehicle_pair = a.kind == AgentKind::Vehicle || o.kind == AgentKind::Vehicle;
        const double pair_d_min = vehicle_pair ? cfg.veh_d_min : cfg.ped_d_min;
        const double fire_ttc = vehicle_pair ? cfg.fire_ttc_veh_s : cfg.fire_ttc_ped_s;

        const AgentState sa{a.id, a.kind, a.pos, a.nominal_vel};
        const AgentState so{o.id, o.kind, o.pos, o.nominal_vel};
        const auto ttc = time_to_collision(sa, so, cfg.clearance_factor * pair_d_min);
        if (ttc.has_value() && *ttc <= fire_ttc) {
          fire = true;
          vehicle_conflict = vehicle_conflict || o.kind == AgentKind::Vehicle;
        }
      }
      Vec2 v = a.nominal_vel;
      if (fire) {
        v = v.rotated(deflect_rad);
        if (vehicle_conflict && a.kind == AgentKind::Pedestrian) {
          v = cfg.yield_speed_factor * v;
        }
      }
      step_vel[i] = v;
    }
    for (std::size_t i = 0; i < agents.size(); ++i) agents[i].pos += dt * step_vel[i];
  }
}

/// Two agents aimed to reach a common meeting point at the same drawn time;
/// the second approaches from `approach_offset_rad` relative to the first.
std::vector<SimAgent> encounter_pair(Rng& rng, const SynthConfig& cfg, std::int64_t base_id,
                                     double approach_offset_rad, bool second_is_vehicle) {
  const double extent = cfg.arena_half_m / 3.0;
  const Vec2 meet{rng.uniform(-extent, extent), rng.uniform(-extent, extent)};
  const double theta = rng.uniform(0.0, 2.0 * M_PI);
  const double t_meet = rng.uniform(5.0, 12.0);  // spreads swerve onsets across a block

  const double s1 = rng.uniform(cfg.ped_speed_min, cfg.ped_speed_max);
  const double s2 = second_is_vehicle ? rng.uniform(cfg.veh_speed_min, cfg.veh_speed_max)
                                      : rng.uniform(cfg.ped_speed_min, cfg.ped_speed_max);

  const Vec2 dir1 = unit(theta);
  const Vec2 dir2 = unit(theta + approach_offset_rad);

  std::vector<SimAgent> agents;
  // A vehicle takes the low id slot so the block reads: road user first.
  if (second_is_vehicle) {
    agents.push_back({base_id, AgentKind::Vehicle, meet - (t_meet * s2) * dir2, s2 * dir2});
    agents.push_back({base_id + 1, AgentKind::Pedestrian, meet - (t_meet * s1) * dir1, s1 * dir1});
  } else {
    agents.push_back({base_id, AgentKind::Pedestrian, meet - (t_meet * s1) * dir1, s1 * dir1});
    agents.push_back({base_id + 1, AgentKind::Pedestrian, meet - (t_meet * s2) * dir2, s2 * dir2});
  }
  return agents;
}

std::vector<SimAgent> parallel_pair(Rng& rng, const SynthConfig& cfg, std::int64_t base_id) {
  const double extent = cfg.arena_half_m / 3.0;
  const Vec2 center{rng.uniform(-extent, extent), rng.uniform(-extent, extent)};
  const double theta = rng.uniform(0.0, 2.0 * M_PI);
  const Vec2 along = unit(theta);
  const Vec2 side{-along.y, along.x};
  const double gap = rng.uniform(1.5, 3.0);  // wider than any clearance radius
  const double stagger = rng.uniform(-1.0, 1.0);
  const double s1 = rng.uniform(cfg.ped_speed_min, cfg.ped_speed_max);
  const double s2 = rng.uniform(cfg.ped_speed_min, cfg.ped_speed_max);

  // Walk back half a block so the pair is mid-stride at frame 0.
  const double back = 0.5 * cfg.frames_per_scenario / cfg.frame_rate_hz;
  return {
      {base_id, AgentKind::Pedestrian, center + (gap / 2.0) * side - (back * s1) * along,
       s1 * along},
      {base_id + 1, AgentKind::Pedestrian,
       center - (gap / 2.0) * side + stagger * along - (back * s2) * along, s2 * along},
  };
}

std::vector<SimAgent> lattice_mix(Rng& rng, const SynthConfig& cfg, std::int64_t base_id) {
  const int n = cfg.random_mix_agents;
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  constexpr double kPitch = 6.0;
  constexpr double kJitter = 1.5;

  std::vector<SimAgent> agents;
  for (int k = 0; k < n; ++k) {
    const int i = k % side;
    const int j = k / side;
    const Vec2 cell{(i - (side - 1) / 2.0) * kPitch, (j - (side - 1) / 2.0) * kPitch};
    const Vec2 pos = cell + Vec2{rng.uniform(-kJitter, kJitter), rng.uniform(-kJitter, kJitter)};
    const bool vehicle = rng.uniform() < cfg.random_mix_vehicle_prob;
    const double speed = vehicle ? rng.uniform(cfg.veh_speed_min, cfg.veh_speed_max)
                                 : rng.uniform(cfg.ped_speed_min, cfg.ped_speed_max);
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    agents.push_back({base_id + k, vehicle ? AgentKind::Vehicle : AgentKind::Pedestrian, pos,
                      speed * unit(theta)});
  }
  return agents;
}

void check_range(bool ok, const char* what) {
  if (!ok) {
    throw DataError(DataError::Kind::InvalidConfig, std::string("scenario config: ") + what);
  }
}

}  // namespace

void validate(const SynthConfig& c) {
  check_range(c.head_on_ped >= 0 && c.crossing_ped >= 0 && c.vehicle_yield >= 0 &&
                  c.parallel_walk >= 0 && c.random_mix >= 0,
              "scenario counts must be >= 0");
  check_range(c.ped_speed_min >= kMinSpeed && c.ped_speed_max <= kMaxSpeed &&
                  c.ped_speed_min <= c.ped_speed_max,
              "pedestrian speeds must satisfy 0.3 <= min <= max <= 15");
  check_range(c.veh_speed_min >= kMinSpeed && c.veh_speed_max <= kMaxSpeed &&
                  c.veh_speed_min <= c.veh_speed_max,
              "vehicle speeds must satisfy 0.3 <= min <= max <= 15");
  check_range(c.frames_per_scenario >= 4, "frames_per_scenario must be >= 4");
  check_range(c.frame_rate_hz > 0.0, "frame_rate_hz must be positive");
  check_range(c.deflect_angle_deg > 0.0 && c.deflect_angle_deg <= 90.0,
              "deflect_angle_deg must lie in (0, 90]");
  check_range(c.fire_ttc_ped_s > 0.0 && c.fire_ttc_veh_s > 0.0, "firing horizons must be positive");
  check_range(c.clearance_factor >= 1.0, "clearance_factor must be >= 1");
  check_range(c.ped_d_min > 0.0 && c.veh_d_min > 0.0, "comfort distances must be positive");
  check_range(c.yield_speed_factor > 0.0 && c.yield_speed_factor <= 1.0,
              "yield_speed_factor must lie in (0, 1]");
  check_range(c.random_mix_agents >= 1 && c.random_mix_agents <= 64,
              "random_mix_agents must lie in [1, 64]");
  check_range(c.random_mix_vehicle_prob >= 0.0 && c.random_mix_vehicle_prob <= 1.0,
              "random_mix_vehicle_prob must lie in [0, 1]");
  check_range(c.arena_half_m >= 5.0 && c.arena_half_m <= 100.0,
              "arena_half_m must lie in [5, 100]");
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  if (!j.is_object()) {
    throw DataError(DataError::Kind::InvalidConfig, "scenario config must be a JSON object");
  }
  const auto get_int = [&](const char* key, int& out) {
    if (j.contains(key)) out = j.at(key).get<int>();
  };
  const auto get_double = [&](const char* key, double& out) {
    if (j.contains(key)) out = j.at(key).get<double>();
  };

  static const char* known[] = {
      "head_on_ped",       "crossing_ped",     "vehicle_yield",
      "parallel_walk",     "random_mix",       "ped_speed_min",
      "ped_speed_max",     "veh_speed_min",    "veh_speed_max",
      "frames_per_scenario", "frame_rate_hz",  "deflect_angle_deg",
      "fire_ttc_ped_s",    "fire_ttc_veh_s",   "clearance_factor",
      "ped_d_min",         "veh_d_min",        "yield_speed_factor",
      "random_mix_agents", "random_mix_vehicle_prob", "arena_half_m",
  };
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) {
      throw DataError(DataError::Kind::InvalidConfig, "scenario config: unknown key '" + key + "'");
    }
  }

  try {
    get_int("head_on_ped", c.head_on_ped);
    get_int("crossing_ped", c.crossing_ped);
    get_int("vehicle_yield", c.vehicle_yield);
    get_int("parallel_walk", c.parallel_walk);
    get_int("random_mix", c.random_mix);
    get_double("ped_speed_min", c.ped_speed_min);
    get_double("ped_speed_max", c.ped_speed_max);
    get_double("veh_speed_min", c.veh_speed_min);
    get_double("veh_speed_max", c.veh_speed_max);
    get_int("frames_per_scenario", c.frames_per_scenario);
    get_double("frame_rate_hz", c.frame_rate_hz);
    get_double("deflect_angle_deg", c.deflect_angle_deg);
    get_double("fire_ttc_ped_s", c.fire_ttc_ped_s);
    get_double("fire_ttc_veh_s", c.fire_ttc_veh_s);
    get_double("clearance_factor", c.clearance_factor);
    get_double("ped_d_min", c.ped_d_min);
    get_double("veh_d_min", c.veh_d_min);
    get_double("yield_speed_factor", c.yield_speed_factor);
    get_int("random_mix_agents", c.random_mix_agents);
    get_double("random_mix_vehicle_prob", c.random_mix_vehicle_prob);
    get_double("arena_half_m", c.arena_half_m);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataError::Kind::InvalidConfig,
                    std::string("scenario config: bad value type: ") + e.what());
  }
  validate(c);
  return c;
}

nlohmann::json synth_config_to_json(const SynthConfig& c) {
  return nlohmann::json{
      {"head_on_ped", c.head_on_ped},
      {"crossing_ped", c.crossing_ped},
      {"vehicle_yield", c.vehicle_yield},
      {"parallel_walk", c.parallel_walk},
      {"random_mix", c.random_mix},
      {"ped_speed_min", c.ped_speed_min},
      {"ped_speed_max", c.ped_speed_max},
      {"veh_speed_min", c.veh_speed_min},
      {"veh_speed_max", c.veh_speed_max},
      {"frames_per_scenario", c.frames_per_scenario},
      {"frame_rate_hz", c.frame_rate_hz},
      {"deflect_angle_deg", c.deflect_angle_deg},
      {"fire_ttc_ped_s", c.fire_ttc_ped_s},
      {"fire_ttc_veh_s", c.fire_ttc_veh_s},
      {"clearance_factor", c.clearance_factor},
      {"ped_d_min", c.ped_d_min},
      {"veh_d_min", c.veh_d_min},
      {"yield_speed_factor", c.yield_speed_factor},
      {"random_mix_agents", c.random_mix_agents},
      {"random_mix_vehicle_prob", c.random_mix_vehicle_prob},
      {"arena_half_m", c.arena_half_m},
  };
}

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(DataError::Kind::MissingFile, "cannot open scenario config: " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataError::Kind::InvalidConfig,
                    path + ": not valid JSON: " + std::string(e.what()));
  }
  return synth_config_from_json(j);
}

Scene synthesize_scenarios(const SynthConfig& config, std::uint64_t seed) {
  validate(config);

  Scene scene;
  scene.frame_rate_hz = config.frame_rate_hz;

  std::int64_t block = 0;
  std::int64_t frame = 0;
  const auto run = [&](std::vector<SimAgent> agents) {
    simulate_block(std::move(agents), config, frame, scene);
    frame += config.frames_per_scenario;
    ++block;
  };

  for (int i = 0; i < config.head_on_ped; ++i) {
    Rng rng(Rng::derive(seed, streams::kSynth, static_cast<std::uint64_t>(block)));
    // Near-opposite courses; a touch of jitter keeps the meeting imperfect.
    const double offset = M_PI + rng.uniform(-0.17, 0.17);
    run(encounter_pair(rng, config, block * 100, offset, /*second_is_vehicle=*/false));
  }
  for (int i = 0; i < config.crossing_ped; ++i) {
    Rng rng(Rng::derive(seed, streams::kSynth, static_cast<std::uint64_t>(block)));
    const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
    const double offset = sign * M_PI / 2.0 + rng.uniform(-0.26, 0.26);
    run(encounter_pair(rng, config, block * 100, offset, /*second_is_vehicle=*/false));
  }
  for (int i = 0; i < config.vehicle_yield; ++i) {
    Rng rng(Rng::derive(seed, streams::kSynth, static_cast<std::uint64_t>(block)));
    const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
    const double offset = sign * M_PI / 2.0 + rng.uniform(-0.26, 0.26);
    run(encounter_pair(rng, config, block * 100, offset, /*second_is_vehicle=*/true));
  }
  for (int i = 0; i < config.parallel_walk; ++i) {
    Rng rng(Rng::derive(seed, streams::kSynth, static_cast<std::uint64_t>(block)));
    run(parallel_pair(rng, config, block * 100));
  }
  for (int i = 0; i < config.random_mix; ++i) {
    Rng rng(Rng::derive(seed, streams::kSynth, static_cast<std::uint64_t>(block)));
    run(lattice_mix(rng, config, block * 100));
  }

  return derive_velocities(scene);
}

}  // namespace colgrid
