#include "beambind/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "beambind/errors.hpp"

namespace bb {
namespace {

// Class -> member point rows, accumulated in origin_index order so results
// do not depend on point order.
std::map<std::uint32_t, std::vector<std::size_t>> rows_by_class(const PointCloud& cloud,
                                                                const Taxonomy& tax) {
  std::map<std::uint32_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::uint32_t lbl = cloud.label[i];
    if (!tax.knows(lbl)) {
      throw DataError("cloud label " + std::to_string(lbl) + " is not in the taxonomy");
    }
    if (tax.is_ignored(lbl)) continue;
    groups[lbl].push_back(i);
  }
  for (auto& [cls, rows] : groups) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return cloud.origin_index[a] < cloud.origin_index[b];
    });
  }
  return groups;
}

std::vector<double> mean_rows(const Mat& m, const std::vector<std::size_t>& rows) {
  std::vector<double> mean(m.cols, 0.0);
  for (std::size_t r : rows) {
    const double* src = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) mean[c] += src[c];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& x : mean) x *= inv;
  return mean;
}

std::optional<std::vector<double>> try_superclass_prototype(const PrototypeBank& bank,
                                                            const Taxonomy& tax,
                                                            std::size_t sc_index) {
  const auto& sc = tax.superclasses().at(sc_index);
  std::vector<double> acc(bank.dim, 0.0);
  for (std::uint32_t member : sc.members) {
    const auto& entry = bank.entries.at(member);
    if (!entry.seen) return std::nullopt;
    for (int c = 0; c < bank.dim; ++c) acc[c] += entry.value[c];
  }
  const double inv = 1.0 / static_cast<double>(sc.members.size());
  for (double& x : acc) x *= inv;
  return acc;
}

// Mean prototype over all non-ignored classes of the category; ready only
// when every one of them is seen.
std::optional<std::vector<double>> try_category_prototype(const PrototypeBank& bank,
                                                          const Taxonomy& tax, Category cat) {
  std::vector<double> acc(bank.dim, 0.0);
  std::size_t count = 0;
  for (const auto& [cls, entry] : bank.entries) {
    if (tax.category_of(cls) != cat) continue;
    if (!entry.seen) return std::nullopt;
    for (int c = 0; c < bank.dim; ++c) acc[c] += entry.value[c];
    ++count;
  }
  if (count == 0) return std::nullopt;
  const double inv = 1.0 / static_cast<double>(count);
  for (double& x : acc) x *= inv;
  return acc;
}

std::optional<std::vector<double>> try_global_superclass_mean(const PrototypeBank& bank,
                                                              const Taxonomy& tax) {
  std::vector<double> acc(bank.dim, 0.0);
  const std::size_t n_sc = tax.superclasses().size();
  for (std::size_t s = 0; s < n_sc; ++s) {
    auto proto = try_superclass_prototype(bank, tax, s);
    if (!proto) return std::nullopt;
    for (int c = 0; c < bank.dim; ++c) acc[c] += (*proto)[c];
  }
  const double inv = 1.0 / static_cast<double>(n_sc);
  for (double& x : acc) x *= inv;
  return acc;
}

}  // namespace

PrototypeBank make_bank(const Taxonomy& tax, int proj_dim, double momentum) {
  if (proj_dim < 1) throw ConfigError("prototype bank needs proj_dim >= 1");
  if (momentum < 0 || momentum > 1) throw ConfigError("ema momentum must be in [0, 1]");
  PrototypeBank bank;
  bank.momentum = momentum;
  bank.dim = proj_dim;
  for (std::uint32_t id : tax.evaluated_ids()) {
    bank.entries[id] = PrototypeBank::Entry{std::vector<double>(proj_dim, 0.0), false};
  }
  return bank;
}

void update_bank(PrototypeBank& bank, const ForwardTrace& trace_clean,
                 const PointCloud& cloud_clean, const Taxonomy& tax) {
  if (trace_clean.projections.rows != cloud_clean.size()) {
    throw DataError("trace and cloud disagree on point count");
  }
  if (static_cast<int>(trace_clean.projections.cols) != bank.dim) {
    throw DataError("projection dim does not match the bank");
  }
  const auto groups = rows_by_class(cloud_clean, tax);
  for (const auto& [cls, rows] : groups) {
    auto it = bank.entries.find(cls);
    if (it == bank.entries.end()) {
      throw DataError("class " + std::to_string(cls) + " has no bank slot");
    }
    const std::vector<double> mu = mean_rows(trace_clean.projections, rows);
    auto& entry = it->second;
    if (!entry.seen) {
      entry.value = mu;
      entry.seen = true;
    } else {
      const double m = bank.momentum;
      for (int c = 0; c < bank.dim; ++c) {
        entry.value[c] = m * entry.value[c] + (1.0 - m) * mu[c];
      }
    }
    for (double x : entry.value) {
      if (!std::isfinite(x)) throw NumericError("non-finite prototype after bank update");
    }
  }
}

std::vector<double> superclass_prototype(const PrototypeBank& bank, const Taxonomy& tax,
                                         std::size_t superclass_index) {
  if (superclass_index >= tax.superclasses().size()) {
    throw DataError("superclass index out of range");
  }
  auto proto = try_superclass_prototype(bank, tax, superclass_index);
  if (!proto) {
    throw NotReadyError("superclass '" + tax.superclasses()[superclass_index].name +
                        "' has unseen member prototypes");
  }
  return *proto;
}

FbResult fb_loss(const PrototypeBank& bank, const Taxonomy& tax, const ForwardTrace& trace_aug,
                 const PointCloud& cloud_aug, FbVariant variant, bool literal_eq3) {
  if (trace_aug.projections.rows != cloud_aug.size()) {
    throw DataError("trace and cloud disagree on point count");
  }
  if (static_cast<int>(trace_aug.projections.cols) != bank.dim) {
    throw DataError("projection dim does not match the bank");
  }

  FbResult res;
  res.d_projections = Mat(trace_aug.projections.rows, trace_aug.projections.cols);

  std::optional<std::vector<double>> global_target;
  if (variant == FbVariant::kSuperclass && literal_eq3) {
    global_target = try_global_superclass_mean(bank, tax);
  }

  const auto groups = rows_by_class(cloud_aug, tax);
  for (const auto& [cls, rows] : groups) {
    std::optional<std::vector<double>> target;
    switch (variant) {
      case FbVariant::kSuperclass:
        if (literal_eq3) {
          target = global_target;
        } else {
          target = try_superclass_prototype(bank, tax, tax.superclass_of(cls));
        }
        break;
      case FbVariant::kClasswise: {
        const auto& entry = bank.entries.at(cls);
        if (entry.seen) target = entry.value;
        break;
      }
      case FbVariant::kCoarse:
        target = try_category_prototype(bank, tax, tax.category_of(cls));
        break;
    }
    if (!target) {
      ++res.classes_skipped;
      continue;
    }
    ++res.classes_used;

    const std::vector<double> mu = mean_rows(trace_aug.projections, rows);
    std::vector<double> diff(bank.dim);
    for (int c = 0; c < bank.dim; ++c) {
      diff[c] = mu[c] - (*target)[c];
      res.loss += diff[c] * diff[c];
    }
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
      double* d = res.d_projections.row(r);
      for (int c = 0; c < bank.dim; ++c) d[c] += 2.0 * diff[c] * inv_n;
    }
  }
  return res;
}

}  // namespace bb
