#pragma once

#include <cstdint>
#include <vector>

#include "beambind/point_cloud.hpp"

namespace bb {

// Dense row-major matrix of doubles; rows are points or output units.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  double* row(std::size_t r) { return v.data() + r * cols; }
  const double* row(std::size_t r) const { return v.data() + r * cols; }
  bool empty() const { return v.empty(); }
};

struct NetConfig {
  int hidden = 32;       // width of the two hidden layers of F
  int feature_dim = 16;  // D
  int g_hidden = 16;     // hidden width of the projector
  int proj_dim = 8;      // P
  int n_classes = 0;     // classifier outputs, one per evaluated class
  int n_beams = 64;      // beam index normalization for the input encoding
  double coord_scale = 0.04;  // applied to x, y, z and range inputs
};

// (x, y, z, intensity, range, pitch, normalized beam index)
inline constexpr int kInputDim = 7;

struct Linear {
  Mat w;                  // out x in
  std::vector<double> b;  // out
};

// Point-wise feature extractor F (7 -> hidden -> hidden -> D, tanh between
// layers), projector head G (D -> g_hidden -> P, tanh between) and a linear
// classifier (D -> n_classes).
struct NetParams {
  NetConfig config;
  std::vector<Linear> backbone;   // 3 layers
  std::vector<Linear> projector;  // 2 layers
  Linear classifier;
};

// Glorot-uniform weights, zero biases; deterministic per seed.
NetParams init_params(const NetConfig& cfg, std::uint64_t seed);

// One row per point; hidden activations are kept post-tanh, which is all the
// backward pass needs.
struct ForwardTrace {
  Mat input;        // N x 7
  Mat hidden1;      // N x hidden, tanh output
  Mat hidden2;      // N x hidden, tanh output
  Mat features;     // N x D, linear
  Mat g_hidden;     // N x g_hidden, tanh output
  Mat projections;  // N x P, linear
  Mat logits;       // N x n_classes
};

// Requires beams assigned; throws NumericError on non-finite inputs.
ForwardTrace forward(const NetParams& params, const PointCloud& cloud);

// Output cotangents; an empty Mat stands for zero.
struct Cotangents {
  Mat d_features;
  Mat d_projections;
  Mat d_logits;
};

using Grads = NetParams;  // same shapes, gradient values

Grads zero_grads_like(const NetParams& params);

// Exact reverse-mode gradients of the traced computation; contributions of
// all three heads are summed.
Grads backward(const NetParams& params, const ForwardTrace& trace, const Cotangents& cot);

void add_scaled(Grads& acc, const Grads& g, double scale);
void scale_grads(Grads& g, double scale);

// w <- w - lr * (g + weight_decay * w), applied to every weight and bias.
void sgd_step(NetParams& params, const Grads& grads, double lr, double weight_decay);

// Row-wise stable softmax of logits.
Mat softmax(const Mat& logits);

// Shannon entropy of each point's class distribution (natural log).
std::vector<double> softmax_entropy(const Mat& logits);

}  // namespace bb
