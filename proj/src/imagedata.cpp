#include "clarity/imagedata.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "clarity/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace clarity {

std::vector<DegradationKind> default_kinds() {
  return {{0, "haze"}, {1, "rain"}, {2, "blur"}};
}

DegradationKind kind_by_name(const std::string& name) {
  for (const auto& k : default_kinds())
    if (k.name == name) return k;
  throw ValueError("unknown degradation kind: " + name);
}

void check_kinds(const std::vector<DegradationKind>& kinds) {
  if (kinds.size() < 2) throw ValueError("need at least 2 degradation kinds");
  std::vector<int> ids;
  for (const auto& k : kinds) ids.push_back(k.id);
  std::sort(ids.begin(), ids.end());
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != static_cast<int>(i))
      throw ValueError("degradation kind ids must be dense and unique");
}

namespace {

std::vector<std::string> list_images(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("no such directory: " + dir);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

PairedDataset::PairedDataset(DegradationKind kind, std::vector<PairedEntry> entries)
    : kind_(std::move(kind)), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (!fs::exists(e.degraded)) throw IoError("missing degraded image: " + e.degraded);
    if (!fs::exists(e.clean)) throw IoError("missing clean image: " + e.clean);
  }
}

PairedDataset PairedDataset::from_directory(const std::string& root,
                                            const DegradationKind& kind) {
  const std::string deg_dir = root + "/" + kind.name + "/degraded";
  const std::string clean_dir = root + "/" + kind.name + "/clean";
  std::vector<PairedEntry> entries;
  for (const auto& deg : list_images(deg_dir)) {
    const std::string name = fs::path(deg).filename().string();
    const std::string clean = clean_dir + "/" + name;
    if (!fs::exists(clean)) throw IoError("no clean counterpart for " + deg);
    entries.push_back({deg, clean, kind});
  }
  if (entries.empty()) throw IoError("empty paired dataset under " + deg_dir);
  return PairedDataset(kind, std::move(entries));
}

PairedDataset PairedDataset::from_manifest(const std::string& manifest_path,
                                           const DegradationKind& kind) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path);
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw IoError("bad manifest " + manifest_path + ": " + e.what());
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<PairedEntry> entries;
  for (const auto& rec : m.at("entries")) {
    if (rec.at("kind").get<std::string>() != kind.name) continue;
    entries.push_back({(base / rec.at("degraded").get<std::string>()).string(),
                       (base / rec.at("clean").get<std::string>()).string(), kind});
  }
  if (entries.empty())
    throw IoError("manifest has no entries for kind " + kind.name);
  return PairedDataset(kind, std::move(entries));
}

UnpairedDataset::UnpairedDataset(std::vector<UnpairedEntry> degraded,
                                 std::vector<std::string> clear)
    : degraded_(std::move(degraded)), clear_(std::move(clear)) {
  if (degraded_.empty()) throw IoError("unpaired dataset has no degraded images");
  if (clear_.empty()) throw IoError("unpaired dataset has no clear images");
}

UnpairedDataset UnpairedDataset::from_directory(const std::string& root,
                                                const std::vector<DegradationKind>& kinds) {
  std::vector<UnpairedEntry> degraded;
  for (const auto& kind : kinds)
    for (const auto& p : list_images(root + "/" + kind.name + "/real"))
      degraded.push_back({p, kind});
  std::vector<std::string> clear = list_images(root + "/clear");
  return UnpairedDataset(std::move(degraded), std::move(clear));
}

MixedBatch make_mixed_batch(const std::vector<KindSamples>& per_kind, int b,
                            Rng& rng, int patch) {
  const int k = static_cast<int>(per_kind.size());
  if (k < 1) throw ValueError("make_mixed_batch: no kinds");
  if (b <= 0 || b % k != 0)
    throw ValueError("batch size " + std::to_string(b) + " not divisible by k=" +
                     std::to_string(k));
  const int per = b / k;
  for (const auto& ks : per_kind)
    if (ks.degraded.empty())
      throw ValueError("make_mixed_batch: kind " + ks.kind.name + " has no samples");

  const bool paired = !per_kind.front().targets.empty();
  MixedBatch batch;
  batch.images.reserve(static_cast<size_t>(b));
  batch.kinds.reserve(static_cast<size_t>(b));
  if (paired) batch.targets.reserve(static_cast<size_t>(b));

  // Kind-interleaved draw: k0,k1,...,k_{k-1},k0,...
  for (int r = 0; r < per; ++r) {
    for (const auto& ks : per_kind) {
      if (paired && ks.targets.size() != ks.degraded.size())
        throw ValueError("paired samples missing targets for kind " + ks.kind.name);
      const auto idx = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(ks.degraded.size())));
      if (paired) {
        if (patch > 0) {
          auto [d, t] = random_crop_pair(ks.degraded[idx], ks.targets[idx], patch, rng);
          batch.images.push_back(std::move(d));
          batch.targets.push_back(std::move(t));
        } else {
          batch.images.push_back(ks.degraded[idx]);
          batch.targets.push_back(ks.targets[idx]);
        }
      } else {
        batch.images.push_back(patch > 0 ? random_crop(ks.degraded[idx], patch, rng)
                                         : ks.degraded[idx]);
      }
      batch.kinds.push_back(ks.kind);
    }
  }

  // Fisher-Yates shuffle of the interleaved order.
  for (int i = b - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(i + 1));
    std::swap(batch.images[i], batch.images[j]);
    std::swap(batch.kinds[i], batch.kinds[j]);
    if (paired) std::swap(batch.targets[i], batch.targets[j]);
  }
  return batch;
}

KindSamples load_paired_samples(const PairedDataset& ds) {
  KindSamples out;
  out.kind = ds.kind();
  for (const auto& e : ds.entries()) {
    Tensor d = load_image(e.degraded);
    Tensor c = load_image(e.clean);
    if (!d.same_shape(c))
      throw ShapeError("degraded/clean size mismatch for " + e.degraded);
    out.degraded.push_back(std::move(d));
    out.targets.push_back(std::move(c));
  }
  return out;
}

std::vector<KindSamples> load_unpaired_samples(const UnpairedDataset& ds,
                                               const std::vector<DegradationKind>& kinds) {
  std::vector<KindSamples> out;
  for (const auto& kind : kinds) {
    KindSamples ks;
    ks.kind = kind;
    for (const auto& e : ds.degraded())
      if (e.kind == kind) ks.degraded.push_back(load_image(e.path));
    if (ks.degraded.empty())
      throw ValueError("unpaired corpus has no images of kind " + kind.name);
    out.push_back(std::move(ks));
  }
  return out;
}

std::vector<Tensor> load_images(const std::vector<std::string>& paths) {
  std::vector<Tensor> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(load_image(p));
  return out;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n, uint64_t seed,
                                                                  double val_fraction) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(seed, "valsplit"));
  for (size_t i = n; i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)));
    std::swap(idx[i - 1], idx[j]);
  }
  size_t nval = static_cast<size_t>(static_cast<double>(n) * val_fraction);
  if (n > 1 && nval == 0) nval = 1;
  std::vector<size_t> train(idx.begin(), idx.end() - static_cast<long>(nval));
  std::vector<size_t> val(idx.end() - static_cast<long>(nval), idx.end());
  return {train, val};
}

}  // namespace clarity
