#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "colgrid/baselines.hpp"
#include "colgrid/features.hpp"
#include "colgrid/nn.hpp"
#include "colgrid/rng.hpp"

namespace colgrid {

/// Which feature streams feed the LSTM besides the spatial displacement.
enum class Variant {
  Vanilla,         // spatial only
  P,               // + pedestrian collision grid
  V,               // + vehicle collision grid
  PV,              // + both grids
  Social,          // + social pooling of neighbor hidden states
  SocialFiltered,  // + social pooling restricted to TTC-selected neighbors
};

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& name);  // DataError InvalidConfig

struct ModelDims {
  int embed_dim = 64;
  int hidden_dim = 128;
  int n_sector = 8;
  SocialPoolConfig social;

  int social_pooled_dim() const { return social.grid_cells * social.grid_cells * hidden_dim; }
};

struct ModelParams {
  Variant variant = Variant::PV;
  ModelDims dims;
  Linear embed_spatial;  // 2 -> embed_dim
  Linear embed_ppcg;     // n_sector -> embed_dim (P, PV)
  Linear embed_vpcg;     // n_sector -> embed_dim (V, PV)
  Linear embed_social;   // pooled -> embed_dim (Social, SocialFiltered)
  LstmCell lstm;         // input_dim() -> hidden
  Linear head;           // hidden -> 5 raw Gaussian parameters

  bool uses_ppcg() const { return variant == Variant::P || variant == Variant::PV; }
  bool uses_vpcg() const { return variant == Variant::V || variant == Variant::PV; }
  bool uses_social() const {
    return variant == Variant::Social || variant == Variant::SocialFiltered;
  }
  int input_dim() const {
    return dims.embed_dim * (1 + (uses_ppcg() ? 1 : 0) + (uses_vpcg() ? 1 : 0) +
                             (uses_social() ? 1 : 0));
  }
};

/// Draws every enabled tensor from `rng` in the fixed tensor order.
ModelParams init_model(Variant variant, const ModelDims& dims, Rng& rng);
/// Same shapes, all tensors zero (used when loading a checkpoint).
ModelParams allocate_model(Variant variant, const ModelDims& dims);
ModelParams zeros_like(const ModelParams& model);

/// Named view over one tensor; exactly one of mat/vec is set.
struct TensorRef {
  std::string name;
  Mat* mat = nullptr;
  Vector* vec = nullptr;
};
struct ConstTensorRef {
  std::string name;
  const Mat* mat = nullptr;
  const Vector* vec = nullptr;
};

/// Enabled tensors in the fixed order shared by initialization, the
/// optimizer state, and the checkpoint format.
std::vector<TensorRef> tensor_refs(ModelParams& model);
std::vector<ConstTensorRef> tensor_refs(const ModelParams& model);

/// Recurrent state for a block of columns.
struct ModelState {
  Mat h;  // hidden_dim x n_cols
  Mat c;
};
ModelState make_state(const ModelParams& model, int n_cols);

/// Inputs for one consumed step over a block of columns.
struct StepInputs {
  const Mat* spatial = nullptr;    // 2 x n
  const Mat* ppcg = nullptr;       // n_sector x n (required when the variant uses it)
  const Mat* vpcg = nullptr;       // n_sector x n
  const Mat* positions = nullptr;  // 2 x n, for social pooling
  // Candidate neighbor columns per column (same scene, self excluded);
  // required for social variants. Spatial cell membership is applied on top.
  const std::vector<std::vector<int>>* social_neighbors = nullptr;
};

/// Cache of everything backward needs for one consumed step.
struct StepCache {
  LstmStepCache lstm;
  Mat spatial_in, ppcg_in, vpcg_in;  // realized inputs
  Mat spatial_embed, ppcg_embed, vpcg_embed;
  Mat social_pooled, social_embed;
  // pool_slots[col] = (neighbor col, offset into the pooled vector).
  std::vector<std::vector<std::pair<int, int>>> pool_slots;
  Mat h_out;  // hidden state after this step
  Mat d_raw;  // 5 x n loss gradient at this step's head (zero cols if unused)
};

/// Advances the state through one step. With `cache`, records for backward.
void model_advance(const ModelParams& model, const StepInputs& inputs, ModelState& state,
                   StepCache* cache = nullptr);

/// Raw 5-row head outputs for the current hidden state.
Mat model_head_raw(const ModelParams& model, const Mat& h);

struct ForwardOptions {
  // After the observation window, feed back the predicted mean displacement
  // and rebuild grids from the predicted positions (gradients do not flow
  // through the fed-back inputs). Requires `windows` in model_forward.
  bool autoregressive = false;
  // Interaction parameters for the grid rebuild in autoregressive mode;
  // must match the configuration the feature batch was built with.
  FeatureConfig features;
};

struct ForwardCache {
  std::vector<StepCache> per_step;  // indexed by consumed step t (entries 1..T-2)
  int n_cols = 0;
};

/// Teacher-forced (default) batch loss: LSTM consumes steps 1..T-2; a head
/// after step t in [t_obs-1, T-2] is scored with the Gaussian NLL of the
/// displacement to step t+1. Returns mean over windows of the per-window
/// (sum over targets and steps) loss. Throws NumericalError if non-finite.
double model_forward(const ModelParams& model, const FeatureBatch& batch,
                     ForwardCache* cache = nullptr, const ForwardOptions& options = {},
                     std::span<const SceneWindow> windows = {});

/// Exact reverse-mode gradients of the model_forward loss, accumulated into
/// `grad` (same variant/dims). Gradients flow through the recurrence and the
/// social pooling of recorded hidden states; realized inputs are constants.
void model_backward(const ModelParams& model, const FeatureBatch& batch,
                    const ForwardCache& cache, ModelParams& grad);

}  // namespace colgrid
