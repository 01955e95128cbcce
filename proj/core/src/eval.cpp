#include "beambind/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beambind/errors.hpp"

namespace bb {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (std::uint64_t c : counts) t += c;
  return t;
}

std::vector<std::uint32_t> predict_labels(const NetParams& params, const PointCloud& cloud,
                                          const Taxonomy& tax) {
  const auto& order = tax.evaluated_ids();
  if (params.config.n_classes != static_cast<int>(order.size())) {
    throw DataError("checkpoint has " + std::to_string(params.config.n_classes) +
                    " classes but the taxonomy evaluates " + std::to_string(order.size()));
  }
  const ForwardTrace tr = forward(params, cloud);
  std::vector<std::uint32_t> pred(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double* z = tr.logits.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < order.size(); ++c) {
      if (z[c] > z[best]) best = c;  // ties keep the lower class id
    }
    pred[i] = order[best];
  }
  return pred;
}

EvalReport evaluate_labels(const std::vector<std::vector<std::uint32_t>>& gt,
                           const std::vector<std::vector<std::uint32_t>>& pred,
                           const Taxonomy& tax) {
  if (gt.empty()) throw ConfigError("evaluation needs at least one scan");
  if (gt.size() != pred.size()) throw DataError("gt/pred scan counts differ");

  const auto& order = tax.evaluated_ids();
  const std::size_t k = order.size();

  EvalReport rep;
  rep.class_order = order;
  rep.class_matrix.names.reserve(k);
  for (std::uint32_t id : order) rep.class_matrix.names.push_back(tax.class_name(id));
  rep.class_matrix.counts.assign(k * k, 0);

  for (std::size_t s = 0; s < gt.size(); ++s) {
    if (gt[s].size() != pred[s].size()) {
      throw DataError("scan " + std::to_string(s) + ": gt/pred point counts differ");
    }
    for (std::size_t i = 0; i < gt[s].size(); ++i) {
      const std::uint32_t g = gt[s][i];
      if (!tax.knows(g)) throw DataError("unknown ground-truth label " + std::to_string(g));
      if (tax.is_ignored(g)) continue;
      rep.class_matrix.at(tax.evaluated_index(g), tax.evaluated_index(pred[s][i]))++;
    }
  }
  rep.total_points = rep.class_matrix.total();

  double iou_sum = 0.0, things_sum = 0.0, stuff_sum = 0.0;
  std::size_t iou_n = 0, things_n = 0, stuff_n = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t tp = rep.class_matrix.at(c, c);
    std::uint64_t fp = 0, fn = 0;
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += rep.class_matrix.at(o, c);
      fn += rep.class_matrix.at(c, o);
    }
    if (tp + fp + fn == 0) continue;  // class absent everywhere
    const double iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    rep.per_class_iou[order[c]] = iou;
    iou_sum += iou;
    ++iou_n;
    if (tax.category_of(order[c]) == Category::kThings) {
      things_sum += iou;
      ++things_n;
    } else {
      stuff_sum += iou;
      ++stuff_n;
    }
  }
  rep.miou = iou_n ? iou_sum / static_cast<double>(iou_n) : 0.0;
  if (things_n) rep.things_miou = things_sum / static_cast<double>(things_n);
  if (stuff_n) rep.stuff_miou = stuff_sum / static_cast<double>(stuff_n);

  rep.superclass_matrix = aggregate_matrix(rep.class_matrix, tax, MatrixLevel::kSuperclass);
  rep.coarse_matrix = aggregate_matrix(rep.class_matrix, tax, MatrixLevel::kCoarse);
  return rep;
}

EvalReport evaluate(const NetParams& params, const std::vector<PointCloud>& clouds,
                    const Taxonomy& tax, const BeamConfig& beam_cfg) {
  if (clouds.empty()) throw ConfigError("evaluation needs at least one scan");
  std::vector<std::vector<std::uint32_t>> gt, pred;
  gt.reserve(clouds.size());
  pred.reserve(clouds.size());
  for (const auto& cloud : clouds) {
    const PointCloud ready = assign_beams_if_missing(cloud, beam_cfg);
    gt.push_back(ready.label);
    pred.push_back(predict_labels(params, ready, tax));
  }
  return evaluate_labels(gt, pred, tax);
}

EvalReport evaluate(const NetParams& params, const std::vector<PointCloud>& clouds,
                    const Taxonomy& tax) {
  BeamConfig cfg;
  cfg.n_beams = params.config.n_beams;
  cfg.method = BeamMethod::kSortedCluster;
  return evaluate(params, clouds, tax, cfg);
}

ConfusionMatrix aggregate_matrix(const ConfusionMatrix& class_matrix, const Taxonomy& tax,
                                 MatrixLevel level) {
  const auto& order = tax.evaluated_ids();
  if (class_matrix.n() != order.size()) {
    throw DataError("class matrix size does not match the taxonomy");
  }

  ConfusionMatrix out;
  std::vector<std::size_t> bucket(order.size());
  if (level == MatrixLevel::kSuperclass) {
    for (const auto& sc : tax.superclasses()) out.names.push_back(sc.name);
    for (std::size_t c = 0; c < order.size(); ++c) bucket[c] = tax.superclass_of(order[c]);
  } else {
    out.names = {"things", "stuff"};
    for (std::size_t c = 0; c < order.size(); ++c) {
      bucket[c] = tax.category_of(order[c]) == Category::kThings ? 0 : 1;
    }
  }
  out.counts.assign(out.n() * out.n(), 0);
  for (std::size_t g = 0; g < order.size(); ++g) {
    for (std::size_t p = 0; p < order.size(); ++p) {
      out.at(bucket[g], bucket[p]) += class_matrix.at(g, p);
    }
  }
  return out;
}

std::vector<double> row_normalized(const ConfusionMatrix& m) {
  std::vector<double> out(m.counts.size(), 0.0);
  for (std::size_t r = 0; r < m.n(); ++r) {
    std::uint64_t row_sum = 0;
    for (std::size_t c = 0; c < m.n(); ++c) row_sum += m.at(r, c);
    if (row_sum == 0) continue;
    for (std::size_t c = 0; c < m.n(); ++c) {
      out[r * m.n() + c] = 100.0 * static_cast<double>(m.at(r, c)) / static_cast<double>(row_sum);
    }
  }
  return out;
}

std::string matrix_csv(const ConfusionMatrix& m) {
  std::ostringstream ss;
  ss << "gt\\pred";
  for (const auto& name : m.names) ss << "," << name;
  ss << "\n";
  for (std::size_t r = 0; r < m.n(); ++r) {
    ss << m.names[r];
    for (std::size_t c = 0; c < m.n(); ++c) ss << "," << m.at(r, c);
    ss << "\n";
  }
  return ss.str();
}

std::string report_json(const EvalReport& report, const Taxonomy& tax) {
  nlohmann::json j;
  j["miou"] = report.miou;
  if (report.things_miou) j["things_miou"] = *report.things_miou;
  if (report.stuff_miou) j["stuff_miou"] = *report.stuff_miou;
  j["total_points"] = report.total_points;
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [id, iou] : report.per_class_iou) {
    per_class[tax.class_name(id)] = iou;
  }
  j["per_class_iou"] = per_class;
  return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& report, const Taxonomy& tax) {
  std::ostringstream head, row;
  head << std::left;
  row << std::fixed << std::setprecision(1);
  for (std::uint32_t id : report.class_order) {
    std::string name = tax.class_name(id);
    if (name.size() > 8) name = name.substr(0, 8);
    const std::size_t width = std::max<std::size_t>(name.size() + 2, 7);
    head << std::setw(static_cast<int>(width)) << name;
    auto it = report.per_class_iou.find(id);
    std::ostringstream cell;
    if (it == report.per_class_iou.end()) {
      cell << "-";
    } else {
      cell << std::fixed << std::setprecision(1) << it->second * 100.0;
    }
    row << std::left << std::setw(static_cast<int>(width)) << cell.str();
  }
  head << "| mIoU  things  stuff";
  row << "| " << std::setw(6) << report.miou * 100.0;
  std::ostringstream t, s;
  t << std::fixed << std::setprecision(1);
  s << std::fixed << std::setprecision(1);
  if (report.things_miou) t << *report.things_miou * 100.0; else t << "-";
  if (report.stuff_miou) s << *report.stuff_miou * 100.0; else s << "-";
  row << std::setw(8) << t.str() << s.str();
  return head.str() + "\n" + row.str() + "\n";
}

}  // namespace bb
