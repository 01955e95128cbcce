#include "beambind/featnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "beambind/errors.hpp"
#include "beambind/rng.hpp"

namespace bb {
namespace {

Linear init_linear(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  Linear layer;
  layer.w = Mat(out, in);
  layer.b.assign(out, 0.0);
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& x : layer.w.v) x = dist(rng);
  return layer;
}

// out[N x O] = in[N x I] * W^T + b
void apply_linear(const Linear& layer, const Mat& in, Mat& out) {
  const std::size_t n = in.rows, o = layer.w.rows, icols = layer.w.cols;
  out = Mat(n, o);
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = in.row(r);
    double* y = out.row(r);
    for (std::size_t j = 0; j < o; ++j) {
      const double* wrow = layer.w.row(j);
      double acc = layer.b[j];
      for (std::size_t i = 0; i < icols; ++i) acc += wrow[i] * x[i];
      y[j] = acc;
    }
  }
}

void tanh_inplace(Mat& m) {
  for (double& x : m.v) x = std::tanh(x);
}

// Accumulates a linear layer's gradient and returns the input cotangent.
// d_out is the cotangent on the layer's (pre-activation) output.
Mat backprop_linear(const Linear& layer, const Mat& input, const Mat& d_out, Linear& grad) {
  const std::size_t n = input.rows, o = layer.w.rows, icols = layer.w.cols;
  Mat d_in(n, icols);
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = input.row(r);
    const double* dy = d_out.row(r);
    double* dx = d_in.row(r);
    for (std::size_t j = 0; j < o; ++j) {
      const double g = dy[j];
      if (g == 0.0) continue;
      grad.b[j] += g;
      double* gw = grad.w.row(j);
      const double* wrow = layer.w.row(j);
      for (std::size_t i = 0; i < icols; ++i) {
        gw[i] += g * x[i];
        dx[i] += g * wrow[i];
      }
    }
  }
  return d_in;
}

// Converts a post-tanh cotangent into the pre-activation cotangent in place.
void tanh_backward_inplace(Mat& d_post, const Mat& post) {
  for (std::size_t i = 0; i < d_post.v.size(); ++i) {
    d_post.v[i] *= 1.0 - post.v[i] * post.v[i];
  }
}

void add_into(Mat& acc, const Mat& m) {
  if (m.empty()) return;
  if (acc.empty()) {
    acc = m;
    return;
  }
  for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += m.v[i];
}

void check_shape(const Mat& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.empty()) return;
  if (m.rows != rows || m.cols != cols) {
    throw DataError(std::string("cotangent shape mismatch on ") + what);
  }
}

}  // namespace

NetParams init_params(const NetConfig& cfg, std::uint64_t seed) {
  if (cfg.hidden < 1 || cfg.feature_dim < 1 || cfg.g_hidden < 1 || cfg.proj_dim < 1 ||
      cfg.n_classes < 1 || cfg.n_beams < 1) {
    throw ConfigError("net config dimensions must all be >= 1");
  }
  std::mt19937_64 rng(mix_seed(seed, 0xF3A7ull));
  NetParams p;
  p.config = cfg;
  p.backbone.push_back(init_linear(cfg.hidden, kInputDim, rng));
  p.backbone.push_back(init_linear(cfg.hidden, cfg.hidden, rng));
  p.backbone.push_back(init_linear(cfg.feature_dim, cfg.hidden, rng));
  p.projector.push_back(init_linear(cfg.g_hidden, cfg.feature_dim, rng));
  p.projector.push_back(init_linear(cfg.proj_dim, cfg.g_hidden, rng));
  p.classifier = init_linear(cfg.n_classes, cfg.feature_dim, rng);
  return p;
}

ForwardTrace forward(const NetParams& params, const PointCloud& cloud) {
  check_consistent(cloud);
  const std::size_t n = cloud.size();
  const NetConfig& cfg = params.config;

  ForwardTrace tr;
  tr.input = Mat(n, kInputDim);
  const double beam_norm = cfg.n_beams > 1 ? 1.0 / (cfg.n_beams - 1) : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cloud.beam[i] < 0) throw DataError("forward needs beams assigned on every point");
    const auto& p = cloud.xyz[i];
    double* row = tr.input.row(i);
    row[0] = p[0] * cfg.coord_scale;
    row[1] = p[1] * cfg.coord_scale;
    row[2] = p[2] * cfg.coord_scale;
    row[3] = cloud.intensity[i];
    row[4] = point_range(p) * cfg.coord_scale;
    row[5] = point_pitch(p);
    row[6] = cloud.beam[i] * beam_norm;
    for (int a = 0; a < kInputDim; ++a) {
      if (!std::isfinite(row[a])) {
        throw NumericError("non-finite input encoding at point " + std::to_string(i));
      }
    }
  }

  apply_linear(params.backbone[0], tr.input, tr.hidden1);
  tanh_inplace(tr.hidden1);
  apply_linear(params.backbone[1], tr.hidden1, tr.hidden2);
  tanh_inplace(tr.hidden2);
  apply_linear(params.backbone[2], tr.hidden2, tr.features);

  apply_linear(params.projector[0], tr.features, tr.g_hidden);
  tanh_inplace(tr.g_hidden);
  apply_linear(params.projector[1], tr.g_hidden, tr.projections);

  apply_linear(params.classifier, tr.features, tr.logits);
  return tr;
}

Grads zero_grads_like(const NetParams& params) {
  Grads g;
  g.config = params.config;
  auto zero_of = [](const Linear& l) {
    Linear z;
    z.w = Mat(l.w.rows, l.w.cols);
    z.b.assign(l.b.size(), 0.0);
    return z;
  };
  for (const auto& l : params.backbone) g.backbone.push_back(zero_of(l));
  for (const auto& l : params.projector) g.projector.push_back(zero_of(l));
  g.classifier = zero_of(params.classifier);
  return g;
}

Grads backward(const NetParams& params, const ForwardTrace& trace, const Cotangents& cot) {
  const std::size_t n = trace.input.rows;
  const NetConfig& cfg = params.config;
  check_shape(cot.d_features, n, cfg.feature_dim, "features");
  check_shape(cot.d_projections, n, cfg.proj_dim, "projections");
  check_shape(cot.d_logits, n, cfg.n_classes, "logits");

  Grads grads = zero_grads_like(params);
  Mat d_features;
  add_into(d_features, cot.d_features);

  if (!cot.d_logits.empty()) {
    Mat d = backprop_linear(params.classifier, trace.features, cot.d_logits, grads.classifier);
    add_into(d_features, d);
  }

  if (!cot.d_projections.empty()) {
    Mat d_gh =
        backprop_linear(params.projector[1], trace.g_hidden, cot.d_projections,
                        grads.projector[1]);
    tanh_backward_inplace(d_gh, trace.g_hidden);
    Mat d = backprop_linear(params.projector[0], trace.features, d_gh, grads.projector[0]);
    add_into(d_features, d);
  }

  if (!d_features.empty()) {
    Mat d_h2 = backprop_linear(params.backbone[2], trace.hidden2, d_features, grads.backbone[2]);
    tanh_backward_inplace(d_h2, trace.hidden2);
    Mat d_h1 = backprop_linear(params.backbone[1], trace.hidden1, d_h2, grads.backbone[1]);
    tanh_backward_inplace(d_h1, trace.hidden1);
    backprop_linear(params.backbone[0], trace.input, d_h1, grads.backbone[0]);
  }
  return grads;
}

namespace {

void add_scaled_linear(Linear& acc, const Linear& g, double s) {
  for (std::size_t i = 0; i < acc.w.v.size(); ++i) acc.w.v[i] += s * g.w.v[i];
  for (std::size_t i = 0; i < acc.b.size(); ++i) acc.b[i] += s * g.b[i];
}

}  // namespace

void add_scaled(Grads& acc, const Grads& g, double scale) {
  for (std::size_t l = 0; l < acc.backbone.size(); ++l) {
    add_scaled_linear(acc.backbone[l], g.backbone[l], scale);
  }
  for (std::size_t l = 0; l < acc.projector.size(); ++l) {
    add_scaled_linear(acc.projector[l], g.projector[l], scale);
  }
  add_scaled_linear(acc.classifier, g.classifier, scale);
}

void scale_grads(Grads& g, double scale) {
  auto scale_linear = [scale](Linear& l) {
    for (double& x : l.w.v) x *= scale;
    for (double& x : l.b) x *= scale;
  };
  for (auto& l : g.backbone) scale_linear(l);
  for (auto& l : g.projector) scale_linear(l);
  scale_linear(g.classifier);
}

void sgd_step(NetParams& params, const Grads& grads, double lr, double weight_decay) {
  auto update = [&](Linear& p, const Linear& g) {
    for (std::size_t i = 0; i < p.w.v.size(); ++i) {
      p.w.v[i] -= lr * (g.w.v[i] + weight_decay * p.w.v[i]);
      if (!std::isfinite(p.w.v[i])) throw NumericError("non-finite weight after sgd step");
    }
    for (std::size_t i = 0; i < p.b.size(); ++i) {
      p.b[i] -= lr * (g.b[i] + weight_decay * p.b[i]);
      if (!std::isfinite(p.b[i])) throw NumericError("non-finite bias after sgd step");
    }
  };
  for (std::size_t l = 0; l < params.backbone.size(); ++l) {
    update(params.backbone[l], grads.backbone[l]);
  }
  for (std::size_t l = 0; l < params.projector.size(); ++l) {
    update(params.projector[l], grads.projector[l]);
  }
  update(params.classifier, grads.classifier);
}

Mat softmax(const Mat& logits) {
  Mat probs(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const double* z = logits.row(r);
    double* p = probs.row(r);
    double zmax = z[0];
    for (std::size_t c = 1; c < logits.cols; ++c) zmax = std::max(zmax, z[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      p[c] = std::exp(z[c] - zmax);
      sum += p[c];
    }
    for (std::size_t c = 0; c < logits.cols; ++c) p[c] /= sum;
  }
  return probs;
}

std::vector<double> softmax_entropy(const Mat& logits) {
  const Mat probs = softmax(logits);
  std::vector<double> h(logits.rows, 0.0);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const double* p = probs.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      if (p[c] > 0.0) acc -= p[c] * std::log(p[c]);
    }
    h[r] = acc;
  }
  return h;
}

}  // namespace bb
