#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beambind/beams.hpp"
#include "beambind/featnet.hpp"
#include "beambind/point_cloud.hpp"
#include "beambind/taxonomy.hpp"

namespace bb {

// Square integer confusion matrix over an explicit class order; rows are
// ground truth, columns predictions.
struct ConfusionMatrix {
  std::vector<std::string> names;  // row/column labels
  std::vector<std::uint64_t> counts;

  std::size_t n() const { return names.size(); }
  std::uint64_t& at(std::size_t gt, std::size_t pred) { return counts[gt * n() + pred]; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts[gt * n() + pred]; }
  std::uint64_t total() const;
};

struct EvalReport {
  std::vector<std::uint32_t> class_order;        // evaluated class ids
  std::map<std::uint32_t, double> per_class_iou;  // classes with TP+FP+FN > 0
  double miou = 0.0;
  std::optional<double> things_miou;
  std::optional<double> stuff_miou;
  ConfusionMatrix class_matrix;
  ConfusionMatrix superclass_matrix;
  ConfusionMatrix coarse_matrix;  // 2x2: things, stuff
  std::uint64_t total_points = 0;  // non-ignored ground-truth points
};

// Argmax class ids for every point; logit ties resolve to the lowest id.
std::vector<std::uint32_t> predict_labels(const NetParams& params, const PointCloud& cloud,
                                          const Taxonomy& tax);

// Tallies ground truth against predictions over one or more scans. IoU is
// pooled (TP/FP/FN accumulate across scans before dividing); ignore-class
// points are excluded entirely; classes absent from both GT and predictions
// carry no IoU and do not enter mIoU.
EvalReport evaluate_labels(const std::vector<std::vector<std::uint32_t>>& gt,
                           const std::vector<std::vector<std::uint32_t>>& pred,
                           const Taxonomy& tax);

// Full pipeline: beams assigned where missing, forward, argmax, tally.
EvalReport evaluate(const NetParams& params, const std::vector<PointCloud>& clouds,
                    const Taxonomy& tax, const BeamConfig& beam_cfg);
EvalReport evaluate(const NetParams& params, const std::vector<PointCloud>& clouds,
                    const Taxonomy& tax);

enum class MatrixLevel { kSuperclass, kCoarse };

// Sums class-matrix entries over superclass (or things/stuff) member pairs.
ConfusionMatrix aggregate_matrix(const ConfusionMatrix& class_matrix, const Taxonomy& tax,
                                 MatrixLevel level);

// Row-normalized percentage view for reporting; all-zero rows stay zero.
std::vector<double> row_normalized(const ConfusionMatrix& m);

std::string matrix_csv(const ConfusionMatrix& m);
std::string report_json(const EvalReport& report, const Taxonomy& tax);
// Aligned per-class IoU columns plus mIoU, one header line and one row.
std::string report_table(const EvalReport& report, const Taxonomy& tax);

}  // namespace bb
