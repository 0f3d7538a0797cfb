#pragma once

#include <json.hpp>
#include <string>

#include "colgrid/model.hpp"

namespace colgrid {

inline constexpr int kCheckpointFormatVersion = 1;

/// Writes the model as JSON: format_version, variant, dims, the caller's
/// effective-config echo, and every enabled tensor as {shape, row-major
/// values}. Rewriting the same model produces identical bytes.
void save_checkpoint(const std::string& path, const ModelParams& model,
                     const nlohmann::json& config_echo = nlohmann::json::object());

struct LoadedCheckpoint {
  ModelParams model;
  nlohmann::json config;
};

/// Parses a checkpoint back into a model. Missing, extra, or differently
/// shaped tensors raise DataError CheckpointShapeMismatch.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace colgrid
