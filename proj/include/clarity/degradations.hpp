#ifndef CLARITY_DEGRADATIONS_HPP
#define CLARITY_DEGRADATIONS_HPP

#include <array>
#include <string>
#include <vector>

#include "clarity/imagedata.hpp"
#include "clarity/rng.hpp"
#include "clarity/tensor.hpp"

namespace clarity {

// All generators work on [0,1]-range images and are pure functions of
// (inputs, seed).

struct HazeParams {
  std::array<double, 3> airlight{0.9, 0.9, 0.9};  // each in [0.6, 1.0]
  double beta = 1.5;                              // scattering, > 0
  Tensor depth;                                   // (H,W) in [0,1]
};

struct RainParams {
  double density = 1000.0;  // streak seeds per megapixel, >= 0
  int length = 9;           // streak length in pixels
  double angle_deg = 0.0;   // [-45, 45], 0 = vertical
  double intensity = 0.6;   // [0, 1]
};

struct BlurKernel {
  Tensor weights;  // (m,m), non-negative, sums to 1 within 1e-6, m odd

  static BlurKernel gaussian(int size, double sigma);
  static BlurKernel motion(int length, double angle_deg);
  static BlurKernel delta(int size);

  void validate() const;
};

// I = J*t + A*(1-t) with t = exp(-beta*depth), clipped to [0,1].
Tensor synth_haze(const Tensor& clean01, const HazeParams& p);

// Additive streak layer: sparse bright seeds -> directional motion blur ->
// scaled by intensity -> added and clipped.
Tensor synth_rain(const Tensor& clean01, const RainParams& p, Rng& rng);

// Channelwise 2-D convolution with reflective border padding.
Tensor synth_blur(const Tensor& clean01, const BlurKernel& kernel);

// Smooth field in [0,1]: vertical gradient plus low-frequency noise,
// low-pass filtered. Mean finite difference along the vertical axis is > 0.
Tensor make_depth_field(int h, int w, Rng& rng);

// Procedural textured scene in [0,1]: gradients, shapes, lines, soft noise.
// Used to build desk-scale corpora with no external data.
Tensor make_clean_image(int h, int w, Rng& rng);

// Parameter ranges. The "shifted" profile creates a controlled domain gap
// for the adaptation-stage corpora (heavier haze, denser rain, longer blur).
struct DegradationRanges {
  bool shifted = false;
};

// Applies the generator for `kind` with parameters drawn from seeded ranges.
// Returns the degraded image; `params_json` (when non-null) receives a
// description of the drawn parameters.
Tensor apply_degradation(const Tensor& clean01, const DegradationKind& kind,
                         Rng& rng, const DegradationRanges& ranges,
                         std::string* params_json);

// Builds the paired on-disk layout out_dir/<kind>/{degraded,clean}/*.png with
// one degraded image per (clean image, kind). Returns the manifest path.
std::string build_synthetic_dataset(const std::string& clean_dir,
                                    const std::string& out_dir,
                                    const std::vector<DegradationKind>& kinds,
                                    uint64_t seed);

// Builds the unpaired layout out_dir/<kind>/real/*.png + out_dir/clear/*.png
// from disjoint halves of clean_dir, drawing parameters from the shifted
// ranges. Returns the manifest path.
std::string build_real_dataset(const std::string& clean_dir,
                               const std::string& out_dir,
                               const std::vector<DegradationKind>& kinds,
                               uint64_t seed);

// Fills a directory with n generated clean images (size x size). Used by the
// CLI to bootstrap corpora without external datasets.
void generate_clean_corpus(const std::string& dir, int n, int size, uint64_t seed);

}  // namespace clarity

#endif
