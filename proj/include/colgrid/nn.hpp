#pragma once

#include <Eigen/Dense>

#include "colgrid/rng.hpp"
#include "colgrid/types.hpp"

namespace colgrid {

using Mat = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Output-head transform guards: raw log-sigmas are capped before exp so a
// wild pre-activation cannot overflow, sigma has a positive floor, and |rho|
// stays strictly inside (-1, 1) to keep 1 - rho^2 away from zero.
inline constexpr double kRawSigmaCap = 30.0;
inline constexpr double kSigmaFloor = 1e-6;
inline constexpr double kRhoCap = 1.0 - 1e-6;

/// Fully-connected layer y = W x + b. Doubles as its own gradient container
/// (same shapes), so optimizers and checkpoints can treat both uniformly.
struct Linear {
  Mat W;     // [out x in]
  Vector b;  // [out]

  int in_dim() const { return static_cast<int>(W.cols()); }
  int out_dim() const { return static_cast<int>(W.rows()); }
};

/// Allocates and fills W with U[-1/sqrt(in), +1/sqrt(in)] draws (row-major
/// visit order, fixed forever); b starts at zero.
Linear make_linear(int out, int in, Rng& rng);
Linear zeros_like(const Linear& layer);

/// relu(W X + b) over the columns of X.
Mat affine_relu(const Linear& layer, const Mat& X);

/// Reverse pass of affine_relu. `Y` is the cached forward output (its zero
/// entries mark clamped units; relu'(0) counts as 0). Accumulates into
/// `grad` and returns dX.
Mat affine_relu_backward(const Linear& layer, const Mat& X, const Mat& Y, const Mat& dY,
                         Linear& grad);

/// One LSTM cell with separate gate weights, each [hidden x (input+hidden)]
/// acting on the concatenation [x; h_prev].
struct LstmCell {
  Mat Wi, Wf, Wg, Wo;
  Vector bi, bf, bg, bo;

  int hidden_dim() const { return static_cast<int>(Wi.rows()); }
  int input_dim() const { return static_cast<int>(Wi.cols()) - hidden_dim(); }
};

/// Weights U[-1/sqrt(input+hidden), ...]; biases zero except the forget bias,
/// which starts at +1 so early training does not erase the cell state.
LstmCell make_lstm(int input, int hidden, Rng& rng);
LstmCell zeros_like(const LstmCell& cell);

/// Everything the backward step needs from one forward step.
struct LstmStepCache {
  Mat xcat;    // [(input+hidden) x batch]
  Mat gi, gf, gg, go;
  Mat c_prev;
  Mat tanh_c;
};

/// In-place update of (h, c), batched over columns. Pass `cache` when a
/// backward pass will follow.
void lstm_step(const LstmCell& cell, const Mat& x, Mat& h, Mat& c, LstmStepCache* cache = nullptr);

/// Reverse pass of one step. `dh`/`dc` carry the gradients flowing into this
/// step's outputs (head and recurrence already summed by the caller); outputs
/// are written to dx/dh_prev/dc_prev and parameter grads accumulate.
void lstm_step_backward(const LstmCell& cell, const LstmStepCache& cache, const Mat& dh,
                        const Mat& dc, Mat& dx, Mat& dh_prev, Mat& dc_prev, LstmCell& grad);

/// Bivariate Gaussian over the next displacement.
struct GaussianParams {
  double mu_x{0.0};
  double mu_y{0.0};
  double sigma_x{1.0};
  double sigma_y{1.0};
  double rho{0.0};
};

/// Maps one raw head column (o1..o5) to distribution parameters:
/// mu = (o1, o2), sigma = exp(o3..o4) (capped and floored), rho = tanh(o5)
/// clamped to |rho| <= 1 - 1e-6.
GaussianParams gaussian_from_raw(const Eigen::Ref<const Vector>& raw5);

double gaussian_nll(const GaussianParams& p, Vec2 target);

/// d nll / d raw for one column; saturated clamps (sigma cap/floor, rho cap)
/// pass zero gradient, matching the forward clamp semantics.
Vector gaussian_nll_backward_raw(const Eigen::Ref<const Vector>& raw5, Vec2 target);

/// Draws via the Cholesky factor of the covariance: two unit normals e map to
/// mu + L e with L = [[sx, 0], [rho*sy, sy*sqrt(1-rho^2)]].
Vec2 gaussian_sample(const GaussianParams& p, Rng& rng);

}  // namespace colgrid
