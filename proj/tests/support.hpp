#pragma once

// Shared test fixtures: a small taxonomy, random instance generators and
// the finite-difference machinery used by the gradient suites.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "beambind/featnet.hpp"
#include "beambind/point_cloud.hpp"
#include "beambind/taxonomy.hpp"

namespace bbtest {

// 4 things classes in two superclasses plus 2 stuff classes; id 0 ignored.
inline bb::Taxonomy tiny_taxonomy() {
  using bb::Category;
  using bb::Taxonomy;
  std::vector<Taxonomy::ClassEntry> classes = {
      {0, "unlabeled"}, {1, "boxcar"}, {2, "boxtruck"}, {3, "pillar"},
      {4, "post"},      {5, "floor"},  {6, "berm"},
  };
  std::vector<Taxonomy::Superclass> supers = {
      {"Boxy", Category::kThings, {1, 2}},
      {"Slim", Category::kThings, {3, 4}},
      {"Floor", Category::kStuff, {5}},
      {"Berm", Category::kStuff, {6}},
  };
  return Taxonomy(std::move(classes), std::move(supers), {0});
}

inline bb::PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, const bb::Taxonomy& tax,
                                   int n_beams, double ignored_fraction = 0.0) {
  bb::PointCloud cloud = bb::make_clean_cloud(n);
  std::uniform_real_distribution<float> xy(-10.f, 10.f);
  std::uniform_real_distribution<float> zc(-2.f, 3.f);
  std::uniform_real_distribution<float> inten(0.f, 1.f);
  std::uniform_int_distribution<std::size_t> cls(0, tax.evaluated_ids().size() - 1);
  std::uniform_int_distribution<int> beam(0, n_beams - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.xyz[i] = {xy(rng), xy(rng), zc(rng)};
    cloud.intensity[i] = inten(rng);
    cloud.label[i] =
        u01(rng) < ignored_fraction ? bb::kUnlabeledId : tax.evaluated_ids()[cls(rng)];
    cloud.beam[i] = beam(rng);
  }
  return cloud;
}

inline bb::NetConfig small_net_config(const bb::Taxonomy& tax, int n_beams = 8) {
  bb::NetConfig cfg;
  cfg.hidden = 6;
  cfg.feature_dim = 5;
  cfg.g_hidden = 4;
  cfg.proj_dim = 3;
  cfg.n_classes = static_cast<int>(tax.n_evaluated());
  cfg.n_beams = n_beams;
  cfg.coord_scale = 0.1;
  return cfg;
}

// Every weight and bias, in a fixed order.
inline std::vector<double*> param_view(bb::NetParams& p) {
  std::vector<double*> out;
  auto collect = [&](bb::Linear& l) {
    for (double& x : l.w.v) out.push_back(&x);
    for (double& x : l.b) out.push_back(&x);
  };
  for (auto& l : p.backbone) collect(l);
  for (auto& l : p.projector) collect(l);
  collect(p.classifier);
  return out;
}

inline std::vector<const double*> grad_view(const bb::Grads& g) {
  std::vector<const double*> out;
  auto collect = [&](const bb::Linear& l) {
    for (const double& x : l.w.v) out.push_back(&x);
    for (const double& x : l.b) out.push_back(&x);
  };
  for (const auto& l : g.backbone) collect(l);
  for (const auto& l : g.projector) collect(l);
  collect(g.classifier);
  return out;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

// Central-difference check of analytic parameter gradients against a scalar
// loss. Returns the worst relative error over all parameters.
inline double max_grad_rel_err(bb::NetParams& params, const bb::Grads& analytic,
                               const std::function<double(const bb::NetParams&)>& loss,
                               double h = 1e-4) {
  bb::NetParams probe = params;
  std::vector<double*> view = param_view(probe);
  bb::Grads analytic_copy = analytic;
  std::vector<const double*> gview = grad_view(analytic_copy);
  double worst = 0.0;
  for (std::size_t i = 0; i < view.size(); ++i) {
    const double saved = *view[i];
    *view[i] = saved + h;
    const double fp = loss(probe);
    *view[i] = saved - h;
    const double fm = loss(probe);
    *view[i] = saved;
    const double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, rel_err(fd, *gview[i]));
  }
  return worst;
}

}  // namespace bbtest
