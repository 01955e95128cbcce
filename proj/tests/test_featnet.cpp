#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "beambind/errors.hpp"
#include "beambind/featnet.hpp"
#include "support.hpp"

using bb::Cotangents;
using bb::ForwardTrace;
using bb::Mat;
using bb::NetConfig;
using bb::NetParams;
using bb::PointCloud;

namespace {

Mat random_mat(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Mat m(rows, cols);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& x : m.v) x = dist(rng);
  return m;
}

double dot_all(const Mat& a, const Mat& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) acc += a.v[i] * b.v[i];
  return acc;
}

}  // namespace

TEST_CASE("featnet: zero weights give uniform class probabilities") {
  const bb::Taxonomy tax = bbtest::tiny_taxonomy();
  NetParams params = bb::init_params(bbtest::small_net_config(tax), 1);
  for (auto& l : params.backbone) std::fill(l.w.v.begin(), l.w.v.end(), 0.0);
  for (auto& l : params.projector) std::fill(l.w.v.begin(), l.w.v.end(), 0.0);
  std::fill(params.classifier.w.v.begin(), params.classifier.w.v.end(), 0.0);

  std::mt19937_64 rng(2);
  const PointCloud cloud = bbtest::random_cloud(rng, 10, tax, 8);
  const ForwardTrace tr = bb::forward(params, cloud);
  const Mat probs = bb::softmax(tr.logits);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t c = 0; c < tr.logits.cols; ++c) {
      CHECK(tr.logits.at(i, c) == 0.0);
      CHECK(probs.at(i, c) == doctest::Approx(1.0 / tr.logits.cols));
    }
  }
}

TEST_CASE("featnet: empty cloud gives an empty trace and zero grads") {
  const bb::Taxonomy tax = bbtest::tiny_taxonomy();
  const NetParams params = bb::init_params(bbtest::small_net_config(tax), 1);
  const ForwardTrace tr = bb::forward(params, bb::PointCloud{});
  CHECK(tr.logits.rows == 0);
  const bb::Grads g = bb::backward(params, tr, Cotangents{});
  for (const double* x : bbtest::grad_view(g)) CHECK(*x == 0.0);
}

TEST_CASE("featnet: scalar net matches a hand-computed composition") {
  NetConfig cfg;
  cfg.hidden = 1;
  cfg.feature_dim = 1;
  cfg.g_hidden = 1;
  cfg.proj_dim = 1;
  cfg.n_classes = 1;
  cfg.n_beams = 2;
  cfg.coord_scale = 0.1;
  NetParams params = bb::init_params(cfg, 0);
  // hand-set every scalar
  auto set = [](bb::Linear& l, double w, double b) {
    l.w.v[0] = w;
    l.b[0] = b;
  };
  params.backbone[0].w.v = {0.3, -0.2, 0.5, 1.1, 0.7, -0.4, 0.2};
  params.backbone[0].b = {0.05};
  set(params.backbone[1], 0.9, -0.1);
  set(params.backbone[2], -1.2, 0.2);
  set(params.projector[0], 0.6, 0.0);
  set(params.projector[1], 1.5, -0.3);
  set(params.classifier, 2.0, 0.1);

  PointCloud cloud = bb::make_clean_cloud(1);
  cloud.xyz[0] = {3.f, -4.f, 2.f};
  cloud.intensity[0] = 0.25f;
  cloud.beam[0] = 1;

  const double range = std::sqrt(9.0 + 16.0 + 4.0);
  const double pitch = std::atan2(2.0, 5.0);
  const double in[7] = {0.3, -0.4, 0.2, 0.25, range * 0.1, pitch, 1.0};
  double z1 = 0.05;
  const double w1[7] = {0.3, -0.2, 0.5, 1.1, 0.7, -0.4, 0.2};
  for (int i = 0; i < 7; ++i) z1 += w1[i] * in[i];
  const double a1 = std::tanh(z1);
  const double a2 = std::tanh(0.9 * a1 - 0.1);
  const double feat = -1.2 * a2 + 0.2;
  const double proj = 1.5 * std::tanh(0.6 * feat) - 0.3;
  const double logit = 2.0 * feat + 0.1;

  const ForwardTrace tr = bb::forward(params, cloud);
  CHECK(tr.features.at(0, 0) == doctest::Approx(feat).epsilon(1e-12));
  CHECK(tr.projections.at(0, 0) == doctest::Approx(proj).epsilon(1e-12));
  CHECK(tr.logits.at(0, 0) == doctest::Approx(logit).epsilon(1e-12));
}

TEST_CASE("featnet: forward is permutation equivariant") {
  const bb::Taxonomy tax = bbtest::tiny_taxonomy();
  const NetParams params = bb::init_params(bbtest::small_net_config(tax), 3);
  std::mt19937_64 rng(4);
  const PointCloud cloud = bbtest::random_cloud(rng, 40, tax, 8);

  std::vector<std::size_t> perm(cloud.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  PointCloud shuffled;
  for (std::size_t i : perm) {
    shuffled.push_point(cloud.xyz[i], cloud.intensity[i], cloud.label[i], cloud.beam[i],
                        cloud.origin_index[i]);
  }

  const ForwardTrace a = bb::forward(params, cloud);
  const ForwardTrace b = bb::forward(params, shuffled);
  for (std::size_t r = 0; r < perm.size(); ++r) {
    for (std::size_t c = 0; c < a.logits.cols; ++c) {
      CHECK(b.logits.at(r, c) == a.logits.at(perm[r], c));
    }
    for (std::size_t c = 0; c < a.features.cols; ++c) {
      CHECK(b.features.at(r, c) == a.features.at(perm[r], c));
    }
  }
}

TEST_CASE("featnet: softmax rows sum to one") {
  std::mt19937_64 rng(5);
  const Mat logits = random_mat(rng, 50, 7, 30.0);  // includes large logits
  const Mat probs = bb::softmax(logits);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < probs.cols; ++c) sum += probs.at(r, c);
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("featnet: zero cotangents give zero grads; bias path counts points") {
  const bb::Taxonomy tax = bbtest::tiny_taxonomy();
  const NetParams params = bb::init_params(bbtest::small_net_config(tax), 6);
  std::mt19937_64 rng(6);
  const PointCloud cloud = bbtest::random_cloud(rng, 17, tax, 8);
  const ForwardTrace tr = bb::forward(params, cloud);

  const bb::Grads zero = bb::backward(params, tr, Cotangents{});
  for (const double* x : bbtest::grad_view(zero)) CHECK(*x == 0.0);

  // d(sum of logits)/d(classifier bias_j) = N
  Cotangents cot;
  cot.d_logits = Mat(cloud.size(), tr.logits.cols);
  std::fill(cot.d_logits.v.begin(), cot.d_logits.v.end(), 1.0);
  const bb::Grads g = bb::backward(params, tr, cot);
  for (double b : g.classifier.b) CHECK(b == doctest::Approx(17.0).epsilon(1e-12));
}

TEST_CASE("featnet: backward matches finite differences on 20 random instances") {
  const bb::Taxonomy tax = bbtest::tiny_taxonomy();
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int iter = 0; iter < 20; ++iter) {
    NetParams params = bb::init_params(bbtest::small_net_config(tax), 100 + iter);
    const PointCloud cloud = bbtest::random_cloud(rng, 3 + iter % 14, tax, 8);
    const ForwardTrace tr = bb::forward(params, cloud);

    // Fixed random cotangents make the probe loss linear in the outputs.
    Cotangents cot;
    cot.d_features = random_mat(rng, cloud.size(), tr.features.cols);
    cot.d_projections = random_mat(rng, cloud.size(), tr.projections.cols);
    cot.d_logits = random_mat(rng, cloud.size(), tr.logits.cols);
    const bb::Grads analytic = bb::backward(params, tr, cot);

    auto loss = [&](const NetParams& p) {
      const ForwardTrace t = bb::forward(p, cloud);
      return dot_all(cot.d_features, t.features) + dot_all(cot.d_projections, t.projections) +
             dot_all(cot.d_logits, t.logits);
    };
    worst = std::max(worst, bbtest::max_grad_rel_err(params, analytic, loss));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("featnet: sgd closed forms and quadratic descent") {
  const bb::Taxonomy tax = bbtest::tiny_taxonomy();
  NetParams params = bb::init_params(bbtest::small_net_config(tax), 8);

  const NetParams before = params;
  bb::sgd_step(params, bb::zero_grads_like(params), 0.0, 0.1);  // lr = 0
  CHECK(params.backbone[0].w.v == before.backbone[0].w.v);

  // single scalar: w = 1, g = 0, wd = 1e-4, lr = 0.24
  params.backbone[0].w.v[0] = 1.0;
  bb::Grads g = bb::zero_grads_like(params);
  bb::sgd_step(params, g, 0.24, 1e-4);
  CHECK(params.backbone[0].w.v[0] == doctest::Approx(1.0 - 0.24 * 1e-4).epsilon(1e-14));

  // quadratic probe: L(w) = sum (w - w*)^2 strictly decreases over 10 steps
  const NetParams target = bb::init_params(bbtest::small_net_config(tax), 9);
  NetParams w = bb::init_params(bbtest::small_net_config(tax), 10);
  auto quad_loss = [&](NetParams& a) {
    double acc = 0;
    auto va = bbtest::param_view(a);
    NetParams tcopy = target;
    auto vt = bbtest::param_view(tcopy);
    for (std::size_t i = 0; i < va.size(); ++i) {
      acc += (*va[i] - *vt[i]) * (*va[i] - *vt[i]);
    }
    return acc;
  };
  double prev = quad_loss(w);
  for (int step = 0; step < 10; ++step) {
    bb::Grads grads = bb::zero_grads_like(w);
    auto vw = bbtest::param_view(w);
    NetParams tcopy = target;
    auto vt = bbtest::param_view(tcopy);
    // grad_view is const; rebuild through param_view on a Grads copy
    bb::NetParams& gp = grads;
    auto vg = bbtest::param_view(gp);
    for (std::size_t i = 0; i < vw.size(); ++i) *vg[i] = 2.0 * (*vw[i] - *vt[i]);
    bb::sgd_step(w, grads, 0.05, 0.0);
    const double now = quad_loss(w);
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("featnet: input validation") {
  const bb::Taxonomy tax = bbtest::tiny_taxonomy();
  const NetParams params = bb::init_params(bbtest::small_net_config(tax), 11);

  PointCloud no_beams = bb::make_clean_cloud(2);
  no_beams.xyz[0] = {1.f, 0.f, 0.f};
  CHECK_THROWS_AS(bb::forward(params, no_beams), bb::DataError);

  PointCloud bad = bb::make_clean_cloud(1);
  bad.beam[0] = 0;
  bad.xyz[0] = {std::numeric_limits<float>::infinity(), 0.f, 0.f};
  CHECK_THROWS_AS(bb::forward(params, bad), bb::NumericError);

  CHECK_THROWS_AS(bb::init_params(NetConfig{}, 0), bb::ConfigError);  // n_classes unset
}
