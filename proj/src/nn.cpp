#include "colgrid/nn.hpp"

#include <cmath>

#include "colgrid/errors.hpp"

namespace colgrid {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeMismatch(what);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

GaussianParams params_from_raw(double o1, double o2, double o3, double o4, double o5) {
  GaussianParams p;
  p.mu_x = o1;
  p.mu_y = o2;
  p.sigma_x = std::max(std::exp(std::min(o3, kRawSigmaCap)), kSigmaFloor);
  p.sigma_y = std::max(std::exp(std::min(o4, kRawSigmaCap)), kSigmaFloor);
  p.rho = std::clamp(std::tanh(o5), -kRhoCap, kRhoCap);
  return p;
}

}  // namespace

Linear make_linear(int out, int in, Rng& rng) {
  Linear layer;
  layer.W.resize(out, in);
  layer.b = Vector::Zero(out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) layer.W(r, c) = rng.uniform(-bound, bound);
  }
  return layer;
}

Linear zeros_like(const Linear& layer) {
  return Linear{Mat::Zero(layer.W.rows(), layer.W.cols()), Vector::Zero(layer.b.size())};
}

Mat affine_relu(const Linear& layer, const Mat& X) {
  require(X.rows() == layer.W.cols(), "affine_relu: input rows != layer in-dim");
  Mat Y = (layer.W * X).colwise() + layer.b;
  return Y.cwiseMax(0.0);
}

Mat affine_relu_backward(const Linear& layer, const Mat& X, const Mat& Y, const Mat& dY,
                         Linear& grad) {
  require(dY.rows() == layer.W.rows() && dY.cols() == X.cols(),
          "affine_relu_backward: gradient shape mismatch");
  // Units clamped at zero (including pre-activation exactly 0) pass nothing.
  const Mat d_pre = (Y.array() > 0.0).select(dY, 0.0);
  grad.W.noalias() += d_pre * X.transpose();
  grad.b.noalias() += d_pre.rowwise().sum();
  return layer.W.transpose() * d_pre;
}

LstmCell make_lstm(int input, int hidden, Rng& rng) {
  LstmCell cell;
  const int cat = input + hidden;
  const double bound = 1.0 / std::sqrt(static_cast<double>(cat));
  const auto fill = [&](Mat& W) {
    W.resize(hidden, cat);
    for (int r = 0; r < hidden; ++r) {
      for (int c = 0; c < cat; ++c) W(r, c) = rng.uniform(-bound, bound);
    }
  };
  fill(cell.Wi);
  fill(cell.Wf);
  fill(cell.Wg);
  fill(cell.Wo);
  cell.bi = Vector::Zero(hidden);
  cell.bf = Vector::Constant(hidden, 1.0);  // keep memory open at the start
  cell.bg = Vector::Zero(hidden);
  cell.bo = Vector::Zero(hidden);
  return cell;
}

LstmCell zeros_like(const LstmCell& cell) {
  LstmCell z;
  z.Wi = Mat::Zero(cell.Wi.rows(), cell.Wi.cols());
  z.Wf = Mat::Zero(cell.Wf.rows(), cell.Wf.cols());
  z.Wg = Mat::Zero(cell.Wg.rows(), cell.Wg.cols());
  z.Wo = Mat::Zero(cell.Wo.rows(), cell.Wo.cols());
  z.bi = Vector::Zero(cell.bi.size());
  z.bf = Vector::Zero(cell.bf.size());
  z.bg = Vector::Zero(cell.bg.size());
  z.bo = Vector::Zero(cell.bo.size());
  return z;
}

void lstm_step(const LstmCell& cell, const Mat& x, Mat& h, Mat& c, LstmStepCache* cache) {
  const int hidden = cell.hidden_dim();
  require(x.rows() == cell.input_dim(), "lstm_step: input rows != cell input_dim");
  require(h.rows() == hidden && c.rows() == hidden && h.cols() == x.cols() && c.cols() == x.cols(),
          "lstm_step: state shape mismatch");

  Mat xcat(x.rows() + hidden, x.cols());
  xcat.topRows(x.rows()) = x;
  xcat.bottomRows(hidden) = h;

  Mat gi = ((cell.Wi * xcat).colwise() + cell.bi).unaryExpr(&sigmoid);
  Mat gf = ((cell.Wf * xcat).colwise() + cell.bf).unaryExpr(&sigmoid);
  Mat gg = ((cell.Wg * xcat).colwise() + cell.bg).array().tanh().matrix();
  Mat go = ((cell.Wo * xcat).colwise() + cell.bo).unaryExpr(&sigmoid);

  Mat c_new = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
  Mat tanh_c = c_new.array().tanh().matrix();
  Mat h_new = go.cwiseProduct(tanh_c);

  if (cache != nullptr) {
    cache->xcat = std::move(xcat);
    cache->gi = gi;
    cache->gf = gf;
    cache->gg = gg;
    cache->go = go;
    cache->c_prev = c;
    cache->tanh_c = tanh_c;
  }
  c = std::move(c_new);
  h = std::move(h_new);
}

void lstm_step_backward(const LstmCell& cell, const LstmStepCache& cache, const Mat& dh,
                        const Mat& dc, Mat& dx, Mat& dh_prev, Mat& dc_prev, LstmCell& grad) {
  const int hidden = cell.hidden_dim();
  const int input = cell.input_dim();

  // h = go * tanh(c); c = gf * c_prev + gi * gg
  const Mat d_go = dh.cwiseProduct(cache.tanh_c);
  const Mat d_c = dc + dh.cwiseProduct(cache.go).cwiseProduct(
                           (1.0 - cache.tanh_c.array().square()).matrix());
  const Mat d_gf = d_c.cwiseProduct(cache.c_prev);
  const Mat d_gi = d_c.cwiseProduct(cache.gg);
  const Mat d_gg = d_c.cwiseProduct(cache.gi);
  dc_prev = d_c.cwiseProduct(cache.gf);

  // Through the gate nonlinearities to the pre-activations.
  const Mat di = d_gi.cwiseProduct(cache.gi).cwiseProduct((1.0 - cache.gi.array()).matrix());
  const Mat df = d_gf.cwiseProduct(cache.gf).cwiseProduct((1.0 - cache.gf.array()).matrix());
  const Mat dg = d_gg.cwiseProduct((1.0 - cache.gg.array().square()).matrix());
  const Mat dout = d_go.cwiseProduct(cache.go).cwiseProduct((1.0 - cache.go.array()).matrix());

  grad.Wi.noalias() += di * cache.xcat.transpose();
  grad.Wf.noalias() += df * cache.xcat.transpose();
  grad.Wg.noalias() += dg * cache.xcat.transpose();
  grad.Wo.noalias() += dout * cache.xcat.transpose();
  grad.bi.noalias() += di.rowwise().sum();
  grad.bf.noalias() += df.rowwise().sum();
  grad.bg.noalias() += dg.rowwise().sum();
  grad.bo.noalias() += dout.rowwise().sum();

  Mat dxcat = cell.Wi.transpose() * di;
  dxcat.noalias() += cell.Wf.transpose() * df;
  dxcat.noalias() += cell.Wg.transpose() * dg;
  dxcat.noalias() += cell.Wo.transpose() * dout;

  dx = dxcat.topRows(input);
  dh_prev = dxcat.bottomRows(hidden);
}

GaussianParams gaussian_from_raw(const Eigen::Ref<const Vector>& raw5) {
  require(raw5.size() == 5, "gaussian_from_raw: raw vector must have 5 entries");
  return params_from_raw(raw5(0), raw5(1), raw5(2), raw5(3), raw5(4));
}

double gaussian_nll(const GaussianParams& p, Vec2 target) {
  const double q = 1.0 - p.rho * p.rho;
  const double zx = (target.x - p.mu_x) / p.sigma_x;
  const double zy = (target.y - p.mu_y) / p.sigma_y;
  const double z = zx * zx - 2.0 * p.rho * zx * zy + zy * zy;
  return std::log(2.0 * M_PI * p.sigma_x * p.sigma_y * std::sqrt(q)) + z / (2.0 * q);
}

Vector gaussian_nll_backward_raw(const Eigen::Ref<const Vector>& raw5, Vec2 target) {
  require(raw5.size() == 5, "gaussian_nll_backward_raw: raw vector must have 5 entries");
  const GaussianParams p = gaussian_from_raw(raw5);
  const double q = 1.0 - p.rho * p.rho;
  const double zx = (target.x - p.mu_x) / p.sigma_x;
  const double zy = (target.y - p.mu_y) / p.sigma_y;
  const double z = zx * zx - 2.0 * p.rho * zx * zy + zy * zy;

  Vector d(5);
  // d nll / d mu = -(z_a - rho z_b) / (sigma_a q)
  d(0) = -(zx - p.rho * zy) / (p.sigma_x * q);
  d(1) = -(zy - p.rho * zx) / (p.sigma_y * q);

  // d nll / d log sigma_a = 1 - z_a (z_a - rho z_b) / q; zero past the caps.
  const bool sx_live = raw5(2) < kRawSigmaCap && p.sigma_x > kSigmaFloor;
  const bool sy_live = raw5(3) < kRawSigmaCap && p.sigma_y > kSigmaFloor;
  d(2) = sx_live ? 1.0 - zx * (zx - p.rho * zy) / q : 0.0;
  d(3) = sy_live ? 1.0 - zy * (zy - p.rho * zx) / q : 0.0;

  // d nll / d rho, then through tanh; zero once the clamp saturates.
  const double t = std::tanh(raw5(4));
  if (std::abs(t) < kRhoCap) {
    const double dn_drho = -p.rho / q + (p.rho * z - q * zx * zy) / (q * q);
    d(4) = dn_drho * (1.0 - t * t);
  } else {
    d(4) = 0.0;
  }
  return d;
}

Vec2 gaussian_sample(const GaussianParams& p, Rng& rng) {
  const double e1 = rng.normal();
  const double e2 = rng.normal();
  const double x = p.mu_x + p.sigma_x * e1;
  const double y = p.mu_y + p.sigma_y * (p.rho * e1 + std::sqrt(1.0 - p.rho * p.rho) * e2);
  return Vec2{x, y};
}

}  // namespace colgrid
