#ifndef CLARITY_IMAGEDATA_HPP
#define CLARITY_IMAGEDATA_HPP

#include <optional>
#include <string>
#include <vector>

#include "clarity/image.hpp"
#include "clarity/rng.hpp"
#include "clarity/tensor.hpp"

namespace clarity {

struct DegradationKind {
  int id = 0;
  std::string name;

  bool operator==(const DegradationKind& o) const { return id == o.id && name == o.name; }
};

// The default k=3 set: haze, rain, blur.
std::vector<DegradationKind> default_kinds();
DegradationKind kind_by_name(const std::string& name);

// Validates id density/uniqueness and k >= 2.
void check_kinds(const std::vector<DegradationKind>& kinds);

// Paired synthetic corpus for one degradation kind.
// Directory layout: root/<kind>/degraded/*.png + root/<kind>/clean/*.png,
// paired by identical filename.
struct PairedEntry {
  std::string degraded;
  std::string clean;
  DegradationKind kind;
};

class PairedDataset {
 public:
  static PairedDataset from_directory(const std::string& root, const DegradationKind& kind);
  static PairedDataset from_manifest(const std::string& manifest_path, const DegradationKind& kind);

  const std::vector<PairedEntry>& entries() const { return entries_; }
  size_t count() const { return entries_.size(); }
  const DegradationKind& kind() const { return kind_; }

  PairedDataset(DegradationKind kind, std::vector<PairedEntry> entries);

 private:
  DegradationKind kind_;
  std::vector<PairedEntry> entries_;
};

// Unpaired real-world corpus: root/<kind>/real/*.png per kind + root/clear/*.png.
struct UnpairedEntry {
  std::string path;
  DegradationKind kind;
};

class UnpairedDataset {
 public:
  static UnpairedDataset from_directory(const std::string& root,
                                        const std::vector<DegradationKind>& kinds);

  const std::vector<UnpairedEntry>& degraded() const { return degraded_; }
  const std::vector<std::string>& clear() const { return clear_; }

  UnpairedDataset(std::vector<UnpairedEntry> degraded, std::vector<std::string> clear);

 private:
  std::vector<UnpairedEntry> degraded_;
  std::vector<std::string> clear_;
};

// One optimizer-step batch: b images with per-sample kind labels, b/k per kind.
struct MixedBatch {
  std::vector<Tensor> images;
  std::vector<DegradationKind> kinds;
  std::vector<Tensor> targets;       // present iff built from paired data
  std::vector<Tensor> clear_images;  // present iff built for domain adaptation
};

// In-memory per-kind sample store used for batch composition.
struct KindSamples {
  DegradationKind kind;
  std::vector<Tensor> degraded;
  std::vector<Tensor> targets;  // empty for unpaired corpora
};

// Draws b/k samples per kind, crops to patch (paired images at identical
// offsets), interleaves by kind and shuffles with rng. patch <= 0 disables
// cropping.
MixedBatch make_mixed_batch(const std::vector<KindSamples>& per_kind, int b,
                            Rng& rng, int patch = 0);

// Loads every entry into memory (desk-scale corpora are small).
KindSamples load_paired_samples(const PairedDataset& ds);
std::vector<KindSamples> load_unpaired_samples(const UnpairedDataset& ds,
                                               const std::vector<DegradationKind>& kinds);
std::vector<Tensor> load_images(const std::vector<std::string>& paths);

// Seeded 90/10 split of indices for train/validation.
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n, uint64_t seed,
                                                                  double val_fraction = 0.1);

}  // namespace clarity

#endif
