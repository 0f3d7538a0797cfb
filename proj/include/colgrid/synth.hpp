#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "colgrid/scene.hpp"

namespace colgrid {

/// Parameters of the scripted-scenario generator. A generated scene is a
/// sequence of independent time blocks, one per scenario instance, with
/// block-unique agent ids. Within each block agents follow straight nominal
/// courses and the lower-priority side of a predicted conflict (vehicles
/// outrank pedestrians, then lower id wins) swerves away while the predicted
/// time to collision stays under the firing threshold.
struct SynthConfig {
  // Scenario instance counts, in the order the blocks are laid out.
  int head_on_ped{4};
  int crossing_ped{4};
  int vehicle_yield{4};
  int parallel_walk{4};
  int random_mix{4};

  double ped_speed_min{1.0};  // m/s, nominal walking speed range
  double ped_speed_max{1.6};
  double veh_speed_min{5.0};  // m/s
  double veh_speed_max{9.0};

  int frames_per_scenario{20};
  double frame_rate_hz{2.0};

  double deflect_angle_deg{30.0};  // counter-clockwise course change when avoiding
  double fire_ttc_ped_s{4.0};      // predicted-conflict horizon, pedestrian pairs
  double fire_ttc_veh_s{5.0};      // ... pairs involving a vehicle
  double clearance_factor{2.0};    // inflates d_min for the conflict prediction
  double ped_d_min{0.7};           // m
  double veh_d_min{1.0};           // m
  double yield_speed_factor{0.5};  // pedestrian slowdown while yielding to a vehicle

  int random_mix_agents{4};
  double random_mix_vehicle_prob{0.25};
  double arena_half_m{12.0};  // extent of meeting points and the mixing lattice
};

/// Throws DataError{InvalidConfig} when counts are negative, speed ranges are
/// empty or leave [0.3, 15] m/s, or any other field is out of its domain.
void validate(const SynthConfig& config);

/// Strict JSON mapping: unknown keys are rejected, missing keys keep their
/// defaults. Both directions use the field names above verbatim.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json synth_config_to_json(const SynthConfig& config);
SynthConfig load_synth_config(const std::string& path);

/// Generates the configured scenario blocks, deterministically in `seed`.
/// Frame ids run contiguously from 0 across blocks; agent ids are
/// block-unique (block_index * 100 + k). The returned scene already carries
/// backward-difference velocities.
Scene synthesize_scenarios(const SynthConfig& config, std::uint64_t seed);

}  // namespace colgrid
