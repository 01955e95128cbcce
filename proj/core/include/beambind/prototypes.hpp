#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "beambind/featnet.hpp"
#include "beambind/point_cloud.hpp"
#include "beambind/taxonomy.hpp"

namespace bb {

// EMA memory bank of per-class projected-feature prototypes, fed from the
// clean branch. A value type: snapshot-and-swap is the sharing pattern.
struct PrototypeBank {
  double momentum = 0.9;
  int dim = 0;  // projection dim P

  struct Entry {
    std::vector<double> value;  // zero until seen
    bool seen = false;
  };
  std::map<std::uint32_t, Entry> entries;  // one per non-ignored class
};

PrototypeBank make_bank(const Taxonomy& tax, int proj_dim, double momentum);

// EMA update from a clean-branch trace: classes present in the batch move
// toward their batch-mean projection (first sighting adopts the mean
// outright); absent classes are untouched. Ignored labels never contribute.
void update_bank(PrototypeBank& bank, const ForwardTrace& trace_clean,
                 const PointCloud& cloud_clean, const Taxonomy& tax);

// Unweighted mean of the member class prototypes; throws NotReadyError
// while any member is unseen.
std::vector<double> superclass_prototype(const PrototypeBank& bank, const Taxonomy& tax,
                                         std::size_t superclass_index);

enum class FbVariant { kSuperclass, kClasswise, kCoarse };

struct FbResult {
  double loss = 0.0;
  Mat d_projections;  // one row per augmented point
  std::size_t classes_used = 0;
  std::size_t classes_skipped = 0;  // targets not warmed up yet
};

// Feature Binding: sum over classes present in the augmented batch of the
// squared distance between the class's batch-mean projection and its target
// prototype. Targets: superclass -> the owning superclass prototype;
// classwise -> the class's own prototype; coarse -> the mean prototype of
// the class's things/stuff category. Classes whose target is not warmed up
// are skipped. Prototypes are constants: no gradient flows into the bank.
// With literal_eq3 the superclass variant instead targets the global mean
// of all superclass prototypes.
FbResult fb_loss(const PrototypeBank& bank, const Taxonomy& tax, const ForwardTrace& trace_aug,
                 const PointCloud& cloud_aug, FbVariant variant, bool literal_eq3 = false);

}  // namespace bb
