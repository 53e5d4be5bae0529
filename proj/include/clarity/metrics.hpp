#ifndef CLARITY_METRICS_HPP
#define CLARITY_METRICS_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clarity/tensor.hpp"

namespace clarity {

// All metrics take [-1,1] images and evaluate on the [0,1] range internally
// (PSNR/SSIM per the standard definitions, the no-reference metrics on BT.601
// luma).

// 10*log10(1/MSE) in dB over all channels; capped at 100 dB for MSE < 1e-10.
double psnr(const Tensor& a, const Tensor& b);

// Mean local SSIM on the luma channel. 11x11 Gaussian window (sigma 1.5),
// K1=0.01, K2=0.03, L=1.
double ssim(const Tensor& a, const Tensor& b);

// Mean-subtracted contrast-normalized luminance coefficients. 7x7 Gaussian
// weighting window (sigma 7/6), stabilizer C = 1/255.
Tensor mscn(const Tensor& img);
Tensor mscn_of_luma(const Tensor& luma01);

// 36 natural-scene-statistics features: per scale (full, half), 2 generalized
// Gaussian parameters of the MSCN field plus 4 asymmetric-GGD parameters for
// each of the 4 pairwise-product orientations.
struct BrisqueFeatures {
  std::array<double, 36> values{};
};

BrisqueFeatures brisque_features(const Tensor& img);

// Pluggable scorer: an affine model over min-max normalized features, read
// from a JSON coefficients file {feature_min[36], feature_max[36],
// weights[36], bias}. Lower = better.
struct BrisqueScorer {
  std::array<double, 36> feature_min{};
  std::array<double, 36> feature_max{};
  std::array<double, 36> weights{};
  double bias = 0.0;

  static BrisqueScorer load(const std::string& path);
  void save(const std::string& path) const;
  double score(const BrisqueFeatures& f) const;
};

double brisque_score(const BrisqueFeatures& f, const std::string& model_path);

// Ridge-regression fit of the scorer on labeled feature vectors. Used to
// produce the shipped reference model; not comparable to published numbers.
BrisqueScorer fit_brisque_scorer(const std::vector<BrisqueFeatures>& features,
                                 const std::vector<double>& targets,
                                 double ridge = 1e-3);

struct PiqeParams {
  int block = 16;
  double activity_threshold = 0.1;
  double segment_threshold = 0.1;  // edge-segment variance criterion
  int segment_length = 6;
  double c = 1.0;
};

// Block-based perceptual quality estimate in [0,100], higher = worse.
double piqe(const Tensor& img, const PiqeParams& params = {});

// Per-image rows plus the aggregate (arithmetic mean) per metric.
struct MetricReport {
  std::vector<std::string> names;                      // image identifiers
  std::map<std::string, std::vector<double>> values;   // metric -> per-image
  std::map<std::string, double> aggregate() const;
  void write_csv(const std::string& path) const;
};

}  // namespace clarity

#endif
