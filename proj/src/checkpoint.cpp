#include "colgrid/checkpoint.hpp"

#include <fstream>

#include "colgrid/errors.hpp"

namespace colgrid {

namespace {

using nlohmann::json;

json dims_json(const ModelDims& dims) {
  return json{{"embed_dim", dims.embed_dim},
              {"hidden_dim", dims.hidden_dim},
              {"n_sector", dims.n_sector},
              {"social_neighborhood_m", dims.social.neighborhood_m},
              {"social_grid_cells", dims.social.grid_cells}};
}

ModelDims dims_from_json(const json& j) {
  ModelDims dims;
  dims.embed_dim = j.at("embed_dim").get<int>();
  dims.hidden_dim = j.at("hidden_dim").get<int>();
  dims.n_sector = j.at("n_sector").get<int>();
  dims.social.neighborhood_m = j.at("social_neighborhood_m").get<double>();
  dims.social.grid_cells = j.at("social_grid_cells").get<int>();
  return dims;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& model,
                     const nlohmann::json& config_echo) {
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["variant"] = to_string(model.variant);
  doc["dims"] = dims_json(model.dims);
  doc["config"] = config_echo;

  json tensors = json::object();
  for (const ConstTensorRef& ref : tensor_refs(model)) {
    json entry;
    std::vector<double> values;
    if (ref.mat != nullptr) {
      entry["shape"] = {ref.mat->rows(), ref.mat->cols()};
      values.reserve(static_cast<std::size_t>(ref.mat->size()));
      for (Eigen::Index r = 0; r < ref.mat->rows(); ++r) {
        for (Eigen::Index c = 0; c < ref.mat->cols(); ++c) {
          values.push_back((*ref.mat)(r, c));
        }
      }
    } else {
      entry["shape"] = {ref.vec->size()};
      values.assign(ref.vec->data(), ref.vec->data() + ref.vec->size());
    }
    entry["values"] = std::move(values);
    tensors[ref.name] = std::move(entry);
  }
  doc["tensors"] = std::move(tensors);

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError(DataError::Kind::MissingFile, "cannot write checkpoint: " + path);
  }
  out << doc.dump(1) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(DataError::Kind::MissingFile, "cannot open checkpoint: " + path);
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(DataError::Kind::InvalidConfig,
                    "checkpoint is not valid JSON: " + std::string(e.what()));
  }

  try {
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw DataError(DataError::Kind::InvalidConfig,
                      "unsupported checkpoint format version");
    }

    LoadedCheckpoint loaded;
    loaded.model = allocate_model(variant_from_string(doc.at("variant").get<std::string>()),
                                  dims_from_json(doc.at("dims")));
    loaded.config = doc.value("config", json::object());

    const json& tensors = doc.at("tensors");
    const std::vector<TensorRef> refs = tensor_refs(loaded.model);
    if (tensors.size() != refs.size()) {
      throw DataError(DataError::Kind::CheckpointShapeMismatch,
                      "checkpoint holds " + std::to_string(tensors.size()) +
                          " tensors, model needs " + std::to_string(refs.size()));
    }
    for (const TensorRef& ref : refs) {
      if (!tensors.contains(ref.name)) {
        throw DataError(DataError::Kind::CheckpointShapeMismatch,
                        "checkpoint is missing tensor " + ref.name);
      }
      const json& entry = tensors.at(ref.name);
      const std::vector<std::int64_t> shape =
          entry.at("shape").get<std::vector<std::int64_t>>();
      const std::vector<double> values = entry.at("values").get<std::vector<double>>();
      if (ref.mat != nullptr) {
        if (shape.size() != 2 || shape[0] != ref.mat->rows() || shape[1] != ref.mat->cols() ||
            static_cast<Eigen::Index>(values.size()) != ref.mat->size()) {
          throw DataError(DataError::Kind::CheckpointShapeMismatch,
                          "shape mismatch for tensor " + ref.name);
        }
        std::size_t i = 0;
        for (Eigen::Index r = 0; r < ref.mat->rows(); ++r) {
          for (Eigen::Index c = 0; c < ref.mat->cols(); ++c) {
            (*ref.mat)(r, c) = values[i++];
          }
        }
      } else {
        if (shape.size() != 1 || shape[0] != ref.vec->size() ||
            static_cast<Eigen::Index>(values.size()) != ref.vec->size()) {
          throw DataError(DataError::Kind::CheckpointShapeMismatch,
                          "shape mismatch for tensor " + ref.name);
        }
        for (Eigen::Index i = 0; i < ref.vec->size(); ++i) {
          (*ref.vec)(i) = values[static_cast<std::size_t>(i)];
        }
      }
    }
    return loaded;
  } catch (const json::exception& e) {
    throw DataError(DataError::Kind::InvalidConfig,
                    "malformed checkpoint: " + std::string(e.what()));
  }
}

}  // namespace colgrid
