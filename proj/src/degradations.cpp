#include "clarity/degradations.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "clarity/errors.hpp"
#include "clarity/filter.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace clarity {

namespace {

void check_unit_image(const Tensor& img, const char* what) {
  if (img.ndim() != 3 || img.dim(0) != 3)
    throw ShapeError(std::string(what) + ": expected (3,H,W) image");
}

}  // namespace

BlurKernel BlurKernel::gaussian(int size, double sigma) {
  return BlurKernel{gaussian_kernel(size, sigma)};
}

BlurKernel BlurKernel::motion(int length, double angle_deg) {
  return BlurKernel{line_kernel(length, angle_deg, true)};
}

BlurKernel BlurKernel::delta(int size) { return BlurKernel{delta_kernel(size)}; }

void BlurKernel::validate() const {
  if (weights.ndim() != 2 || weights.dim(0) != weights.dim(1))
    throw ShapeError("blur kernel must be square");
  if (weights.dim(0) % 2 == 0) throw ValueError("blur kernel size must be odd");
  double sum = 0.0;
  for (int64_t i = 0; i < weights.numel(); ++i) {
    if (weights[i] < 0.0) throw ValueError("blur kernel weights must be non-negative");
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ValueError("blur kernel must sum to 1");
}

Tensor synth_haze(const Tensor& clean01, const HazeParams& p) {
  check_unit_image(clean01, "synth_haze");
  const int h = clean01.dim(1), w = clean01.dim(2);
  if (p.depth.ndim() != 2 || p.depth.dim(0) != h || p.depth.dim(1) != w)
    throw ShapeError("depth field does not match image size");
  if (p.beta <= 0.0) throw ValueError("beta must be > 0");
  const int64_t plane = static_cast<int64_t>(h) * w;
  Tensor out(clean01.shape());
  for (int64_t i = 0; i < plane; ++i) {
    const double t = std::exp(-p.beta * p.depth[i]);
    for (int c = 0; c < 3; ++c) {
      const double v = clean01[c * plane + i] * t + p.airlight[static_cast<size_t>(c)] * (1.0 - t);
      out[c * plane + i] = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

Tensor synth_rain(const Tensor& clean01, const RainParams& p, Rng& rng) {
  check_unit_image(clean01, "synth_rain");
  if (p.density < 0.0) throw ValueError("rain density must be >= 0");
  const int h = clean01.dim(1), w = clean01.dim(2);
  const int64_t plane = static_cast<int64_t>(h) * w;
  const auto n_seeds = static_cast<int64_t>(
      std::llround(p.density * static_cast<double>(plane) / 1e6));
  if (n_seeds <= 0 || p.intensity <= 0.0) return clean01;

  Tensor seeds({h, w});
  for (int64_t s = 0; s < n_seeds; ++s) {
    const auto y = rng.uniform_int(h);
    const auto x = rng.uniform_int(w);
    seeds[y * w + x] = rng.uniform(0.75, 1.0);
  }
  // Unnormalized line kernel: each seed becomes a streak of its own value.
  const Tensor streaks =
      filter2d(seeds, line_kernel(std::max(1, p.length), p.angle_deg, false), PadMode::Zero);

  Tensor out(clean01.shape());
  for (int64_t i = 0; i < plane; ++i) {
    const double add = p.intensity * streaks[i];
    for (int c = 0; c < 3; ++c)
      out[c * plane + i] = std::clamp(clean01[c * plane + i] + add, 0.0, 1.0);
  }
  return out;
}

Tensor synth_blur(const Tensor& clean01, const BlurKernel& kernel) {
  check_unit_image(clean01, "synth_blur");
  kernel.validate();
  return filter2d(clean01, kernel.weights, PadMode::Reflect);
}

Tensor make_depth_field(int h, int w, Rng& rng) {
  if (h <= 0 || w <= 0) throw ShapeError("depth field extents must be positive");
  // Coarse noise grid, bilinearly upsampled.
  const int gh = std::max(2, h / 8), gw = std::max(2, w / 8);
  Tensor grid({gh, gw});
  for (int64_t i = 0; i < grid.numel(); ++i) grid[i] = rng.normal();

  Tensor field({h, w});
  for (int y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y) / std::max(1, h - 1) * (gh - 1);
    const int y0 = std::min(gh - 2, static_cast<int>(fy));
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / std::max(1, w - 1) * (gw - 1);
      const int x0 = std::min(gw - 2, static_cast<int>(fx));
      const double tx = fx - x0;
      const double n =
          grid[static_cast<int64_t>(y0) * gw + x0] * (1 - ty) * (1 - tx) +
          grid[static_cast<int64_t>(y0) * gw + x0 + 1] * (1 - ty) * tx +
          grid[static_cast<int64_t>(y0 + 1) * gw + x0] * ty * (1 - tx) +
          grid[static_cast<int64_t>(y0 + 1) * gw + x0 + 1] * ty * tx;
      const double grad = static_cast<double>(y) / std::max(1, h - 1);
      field[static_cast<int64_t>(y) * w + x] = grad + 0.25 * n;
    }
  }
  if (std::min(h, w) >= 5) field = filter2d(field, gaussian_kernel(5, 1.2), PadMode::Reflect);

  const double lo = field.min(), hi = field.max();
  const double span = std::max(1e-9, hi - lo);
  for (int64_t i = 0; i < field.numel(); ++i) field[i] = (field[i] - lo) / span;
  return field;
}

Tensor make_clean_image(int h, int w, Rng& rng) {
  if (h <= 0 || w <= 0) throw ShapeError("image extents must be positive");
  Tensor img({3, h, w});
  const int64_t plane = static_cast<int64_t>(h) * w;

  // Smooth background: bilinear blend of four random corner colors.
  double corners[4][3];
  for (auto& corner : corners)
    for (double& c : corner) c = rng.uniform(0.15, 0.85);
  for (int y = 0; y < h; ++y) {
    const double ty = static_cast<double>(y) / std::max(1, h - 1);
    for (int x = 0; x < w; ++x) {
      const double tx = static_cast<double>(x) / std::max(1, w - 1);
      for (int c = 0; c < 3; ++c)
        img[c * plane + static_cast<int64_t>(y) * w + x] =
            corners[0][c] * (1 - ty) * (1 - tx) + corners[1][c] * (1 - ty) * tx +
            corners[2][c] * ty * (1 - tx) + corners[3][c] * ty * tx;
    }
  }

  // Random rectangles and ellipses.
  const int n_shapes = 8 + static_cast<int>(rng.uniform_int(9));
  for (int s = 0; s < n_shapes; ++s) {
    const bool ellipse = rng.uniform() < 0.5;
    const int cy = static_cast<int>(rng.uniform_int(h));
    const int cx = static_cast<int>(rng.uniform_int(w));
    const int ry = 2 + static_cast<int>(rng.uniform_int(std::max(2, h / 4)));
    const int rx = 2 + static_cast<int>(rng.uniform_int(std::max(2, w / 4)));
    double color[3];
    for (double& c : color) c = rng.uniform(0.05, 0.95);
    const double alpha = rng.uniform(0.55, 1.0);
    for (int y = std::max(0, cy - ry); y <= std::min(h - 1, cy + ry); ++y)
      for (int x = std::max(0, cx - rx); x <= std::min(w - 1, cx + rx); ++x) {
        if (ellipse) {
          const double dy = (y - cy) / static_cast<double>(ry);
          const double dx = (x - cx) / static_cast<double>(rx);
          if (dy * dy + dx * dx > 1.0) continue;
        }
        for (int c = 0; c < 3; ++c) {
          double& px = img[c * plane + static_cast<int64_t>(y) * w + x];
          px = (1 - alpha) * px + alpha * color[c];
        }
      }
  }

  // A few thin lines.
  const int n_lines = 2 + static_cast<int>(rng.uniform_int(4));
  for (int l = 0; l < n_lines; ++l) {
    double y = rng.uniform(0, h - 1), x = rng.uniform(0, w - 1);
    const double ang = rng.uniform(0, 2 * 3.14159265358979323846);
    const double dy = std::sin(ang), dx = std::cos(ang);
    const double shade = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.2) : rng.uniform(0.8, 1.0);
    const int steps = static_cast<int>(rng.uniform(std::min(h, w) / 4.0, std::min(h, w) * 0.9));
    for (int t = 0; t < steps; ++t) {
      const int iy = static_cast<int>(std::lround(y)), ix = static_cast<int>(std::lround(x));
      if (iy < 0 || iy >= h || ix < 0 || ix >= w) break;
      for (int c = 0; c < 3; ++c)
        img[c * plane + static_cast<int64_t>(iy) * w + ix] = shade;
      y += dy;
      x += dx;
    }
  }

  // Low-frequency texture plus light pixel noise.
  const int gh = std::max(2, h / 6), gw = std::max(2, w / 6);
  Tensor grid({gh, gw});
  for (int64_t i = 0; i < grid.numel(); ++i) grid[i] = rng.normal();
  for (int y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y) / std::max(1, h - 1) * (gh - 1);
    const int y0 = std::min(gh - 2, static_cast<int>(fy));
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / std::max(1, w - 1) * (gw - 1);
      const int x0 = std::min(gw - 2, static_cast<int>(fx));
      const double tx = fx - x0;
      const double n =
          grid[static_cast<int64_t>(y0) * gw + x0] * (1 - ty) * (1 - tx) +
          grid[static_cast<int64_t>(y0) * gw + x0 + 1] * (1 - ty) * tx +
          grid[static_cast<int64_t>(y0 + 1) * gw + x0] * ty * (1 - tx) +
          grid[static_cast<int64_t>(y0 + 1) * gw + x0 + 1] * ty * tx;
      const double fine = rng.normal();
      for (int c = 0; c < 3; ++c) {
        double& px = img[c * plane + static_cast<int64_t>(y) * w + x];
        px = std::clamp(px + 0.06 * n + 0.015 * fine, 0.0, 1.0);
      }
    }
  }
  return img;
}

Tensor apply_degradation(const Tensor& clean01, const DegradationKind& kind,
                         Rng& rng, const DegradationRanges& ranges,
                         std::string* params_json) {
  const int h = clean01.dim(1), w = clean01.dim(2);
  json rec;
  Tensor out;
  if (kind.name == "haze") {
    HazeParams p;
    p.beta = ranges.shifted ? rng.uniform(2.5, 4.0) : rng.uniform(1.2, 2.5);
    const double base = ranges.shifted ? rng.uniform(0.60, 0.80) : rng.uniform(0.75, 0.95);
    for (int c = 0; c < 3; ++c)
      p.airlight[static_cast<size_t>(c)] = std::clamp(base + rng.uniform(-0.03, 0.03), 0.6, 1.0);
    p.depth = make_depth_field(h, w, rng);
    out = synth_haze(clean01, p);
    rec = {{"beta", p.beta}, {"airlight", p.airlight}};
  } else if (kind.name == "rain") {
    RainParams p;
    p.density = ranges.shifted ? rng.uniform(3000, 6000) : rng.uniform(1200, 3000);
    p.length = 7 + 2 * static_cast<int>(rng.uniform_int(ranges.shifted ? 5 : 3));
    p.angle_deg = ranges.shifted ? rng.uniform(-45, -15) : rng.uniform(-10, 40);
    p.intensity = ranges.shifted ? rng.uniform(0.6, 0.95) : rng.uniform(0.45, 0.8);
    out = synth_rain(clean01, p, rng);
    rec = {{"density", p.density},
           {"length", p.length},
           {"angle_deg", p.angle_deg},
           {"intensity", p.intensity}};
  } else if (kind.name == "blur") {
    const bool motion = rng.uniform() < 0.5;
    if (motion) {
      const int length = ranges.shifted ? 9 + 2 * static_cast<int>(rng.uniform_int(4))
                                        : 5 + 2 * static_cast<int>(rng.uniform_int(3));
      const double angle = rng.uniform(0, 180);
      out = synth_blur(clean01, BlurKernel::motion(length, angle));
      rec = {{"type", "motion"}, {"length", length}, {"angle_deg", angle}};
    } else {
      const double sigma = ranges.shifted ? rng.uniform(2.0, 3.0) : rng.uniform(1.0, 2.0);
      const int size = std::min(13, 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1);
      out = synth_blur(clean01, BlurKernel::gaussian(size, sigma));
      rec = {{"type", "gaussian"}, {"sigma", sigma}, {"size", size}};
    }
  } else {
    throw ValueError("no generator for degradation kind: " + kind.name);
  }
  if (params_json) *params_json = rec.dump();
  return out;
}

namespace {

std::vector<std::string> list_clean_images(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("no such directory: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no images in " + dir);
  return files;
}

void write_json_atomic(const json& j, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp);
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string build_synthetic_dataset(const std::string& clean_dir,
                                    const std::string& out_dir,
                                    const std::vector<DegradationKind>& kinds,
                                    uint64_t seed) {
  check_kinds(kinds);
  const auto files = list_clean_images(clean_dir);

  json manifest;
  manifest["seed"] = seed;
  manifest["type"] = "paired";
  manifest["entries"] = json::array();

  for (const auto& kind : kinds) {
    fs::create_directories(out_dir + "/" + kind.name + "/degraded");
    fs::create_directories(out_dir + "/" + kind.name + "/clean");
    for (size_t i = 0; i < files.size(); ++i) {
      const Tensor clean = load_image(files[i]);
      const Tensor clean01 = denormalize(clean);
      const std::string stem = fs::path(files[i]).stem().string();
      const uint64_t file_seed = derive_seed(seed, kind.name + "/" + stem, i);
      Rng rng(file_seed);
      std::string params;
      const Tensor deg01 = apply_degradation(clean01, kind, rng, {false}, &params);
      const std::string rel_deg = kind.name + "/degraded/" + stem + ".png";
      const std::string rel_clean = kind.name + "/clean/" + stem + ".png";
      save_image(normalize(deg01), out_dir + "/" + rel_deg);
      save_image(clean, out_dir + "/" + rel_clean);
      manifest["entries"].push_back({{"clean", rel_clean},
                                     {"degraded", rel_deg},
                                     {"kind", kind.name},
                                     {"params", json::parse(params)},
                                     {"seed", file_seed}});
    }
  }
  const std::string manifest_path = out_dir + "/manifest.json";
  write_json_atomic(manifest, manifest_path);
  return manifest_path;
}

std::string build_real_dataset(const std::string& clean_dir,
                               const std::string& out_dir,
                               const std::vector<DegradationKind>& kinds,
                               uint64_t seed) {
  check_kinds(kinds);
  const auto files = list_clean_images(clean_dir);

  json manifest;
  manifest["seed"] = seed;
  manifest["type"] = "unpaired";
  manifest["entries"] = json::array();

  fs::create_directories(out_dir + "/clear");
  for (const auto& kind : kinds) fs::create_directories(out_dir + "/" + kind.name + "/real");

  // Even-indexed files feed the clear tree, odd-indexed files become the
  // degraded tree (round-robin over kinds), so the two sides share no scenes.
  size_t deg_counter = 0;
  for (size_t i = 0; i < files.size(); ++i) {
    const Tensor clean = load_image(files[i]);
    const std::string stem = fs::path(files[i]).stem().string();
    if (i % 2 == 0) {
      const std::string rel = "clear/" + stem + ".png";
      save_image(clean, out_dir + "/" + rel);
      manifest["entries"].push_back({{"clear", rel}});
    } else {
      const DegradationKind& kind = kinds[deg_counter % kinds.size()];
      ++deg_counter;
      const uint64_t file_seed = derive_seed(seed, "real/" + kind.name + "/" + stem, i);
      Rng rng(file_seed);
      std::string params;
      const Tensor deg01 = apply_degradation(denormalize(clean), kind, rng, {true}, &params);
      const std::string rel = kind.name + "/real/" + stem + ".png";
      save_image(normalize(deg01), out_dir + "/" + rel);
      manifest["entries"].push_back({{"degraded", rel},
                                     {"kind", kind.name},
                                     {"params", json::parse(params)},
                                     {"seed", file_seed}});
    }
  }
  const std::string manifest_path = out_dir + "/real_manifest.json";
  write_json_atomic(manifest, manifest_path);
  return manifest_path;
}

void generate_clean_corpus(const std::string& dir, int n, int size, uint64_t seed) {
  if (n <= 0) throw ValueError("clean corpus size must be positive");
  fs::create_directories(dir);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "clean", static_cast<uint64_t>(i)));
    const Tensor img01 = make_clean_image(size, size, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "clean_%04d.png", i);
    save_image(normalize(img01), dir + "/" + name);
  }
}

}  // namespace clarity
