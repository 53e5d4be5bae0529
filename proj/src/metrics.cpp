#include "clarity/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "clarity/errors.hpp"
#include "clarity/filter.hpp"
#include "clarity/image.hpp"

using nlohmann::json;

namespace clarity {

namespace {

void check_same(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

double sample_variance(const double* p, int64_t n, double* mean_out = nullptr) {
  double m = 0.0;
  for (int64_t i = 0; i < n; ++i) m += p[i];
  m /= static_cast<double>(n);
  double v = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = p[i] - m;
    v += d * d;
  }
  if (mean_out) *mean_out = m;
  return n > 1 ? v / static_cast<double>(n - 1) : 0.0;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
  check_same(a, b, "psnr");
  const Tensor ua = denormalize(a);
  const Tensor ub = denormalize(b);
  double mse = 0.0;
  const int64_t n = ua.numel();
  for (int64_t i = 0; i < n; ++i) {
    const double d = ua[i] - ub[i];
    mse += d * d;
  }
  mse /= static_cast<double>(n);
  if (mse < 1e-10) return 100.0;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
  check_same(a, b, "ssim");
  const Tensor la = luminance01(a);
  const Tensor lb = luminance01(b);
  const int h = la.dim(0), w = la.dim(1);
  constexpr int kWin = 11;
  if (h < kWin || w < kWin) throw ShapeError("ssim: image smaller than the 11x11 window");
  const Tensor g = gaussian_kernel(kWin, 1.5);
  constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2, L = 1
  constexpr double kC2 = 0.03 * 0.03;

  double total = 0.0;
  int64_t count = 0;
  for (int y = 0; y + kWin <= h; ++y) {
    for (int x = 0; x + kWin <= w; ++x) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int ky = 0; ky < kWin; ++ky)
        for (int kx = 0; kx < kWin; ++kx) {
          const double wgt = g[static_cast<int64_t>(ky) * kWin + kx];
          const double va = la[static_cast<int64_t>(y + ky) * w + (x + kx)];
          const double vb = lb[static_cast<int64_t>(y + ky) * w + (x + kx)];
          mx += wgt * va;
          my += wgt * vb;
          sxx += wgt * va * va;
          syy += wgt * vb * vb;
          sxy += wgt * va * vb;
        }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cxy = sxy - mx * my;
      const double s = ((2 * mx * my + kC1) * (2 * cxy + kC2)) /
                       ((mx * mx + my * my + kC1) * (vx + vy + kC2));
      total += s;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

Tensor mscn_of_luma(const Tensor& luma01) {
  if (luma01.ndim() != 2) throw ShapeError("mscn expects (H,W) luma");
  const int h = luma01.dim(0), w = luma01.dim(1);
  const Tensor g = gaussian_kernel(7, 7.0 / 6.0);
  const Tensor mu = filter2d(luma01, g, PadMode::Reflect);
  Tensor sq(luma01.shape());
  for (int64_t i = 0; i < sq.numel(); ++i) sq[i] = luma01[i] * luma01[i];
  const Tensor musq = filter2d(sq, g, PadMode::Reflect);
  Tensor out({h, w});
  constexpr double kC = 1.0 / 255.0;
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double var = std::max(0.0, musq[i] - mu[i] * mu[i]);
    out[i] = (luma01[i] - mu[i]) / (std::sqrt(var) + kC);
  }
  return out;
}

Tensor mscn(const Tensor& img) { return mscn_of_luma(luminance01(img)); }

namespace {

// r(alpha) = Gamma(1/a)Gamma(3/a)/Gamma(2/a)^2, monotonically decreasing.
double ggd_ratio(double alpha) {
  return std::exp(std::lgamma(1.0 / alpha) + std::lgamma(3.0 / alpha) -
                  2.0 * std::lgamma(2.0 / alpha));
}

// Inverts r(alpha) = target by bisection on [0.05, 13].
double solve_ggd_shape(double target) {
  double lo = 0.05, hi = 13.0;
  if (target >= ggd_ratio(lo)) return lo;
  if (target <= ggd_ratio(hi)) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ggd_ratio(mid) > target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Moment-matching generalized Gaussian fit: returns (shape, mean power).
std::pair<double, double> fit_ggd(const std::vector<double>& x) {
  double mean_abs = 0.0, mean_sq = 0.0;
  for (double v : x) {
    mean_abs += std::abs(v);
    mean_sq += v * v;
  }
  mean_abs /= static_cast<double>(x.size());
  mean_sq /= static_cast<double>(x.size());
  if (mean_abs < 1e-9 || mean_sq < 1e-12)
    throw InsufficientStatisticsError("degenerate field: cannot fit distribution");
  return {solve_ggd_shape(mean_sq / (mean_abs * mean_abs)), mean_sq};
}

// Asymmetric GGD fit: returns (shape, mean, left variance, right variance).
std::array<double, 4> fit_aggd(const std::vector<double>& x) {
  double sum_sq_l = 0.0, sum_sq_r = 0.0, mean_abs = 0.0, mean_sq = 0.0;
  int64_t nl = 0, nr = 0;
  for (double v : x) {
    mean_abs += std::abs(v);
    mean_sq += v * v;
    if (v < 0) {
      sum_sq_l += v * v;
      ++nl;
    } else if (v > 0) {
      sum_sq_r += v * v;
      ++nr;
    }
  }
  if (nl == 0 || nr == 0 || mean_abs < 1e-9)
    throw InsufficientStatisticsError("degenerate field: cannot fit asymmetric distribution");
  mean_abs /= static_cast<double>(x.size());
  mean_sq /= static_cast<double>(x.size());
  const double sigma_l = std::sqrt(sum_sq_l / static_cast<double>(nl));
  const double sigma_r = std::sqrt(sum_sq_r / static_cast<double>(nr));
  const double gamma_hat = sigma_l / std::max(1e-12, sigma_r);
  const double r_hat = (mean_abs * mean_abs) / mean_sq;
  const double r_norm = r_hat * (gamma_hat * gamma_hat * gamma_hat + 1.0) * (gamma_hat + 1.0) /
                        ((gamma_hat * gamma_hat + 1.0) * (gamma_hat * gamma_hat + 1.0));
  // r_norm estimates 1/r(alpha)
  const double alpha = solve_ggd_shape(1.0 / std::max(1e-9, r_norm));
  const double eta = (sigma_r - sigma_l) *
                     std::exp(std::lgamma(2.0 / alpha) -
                              0.5 * (std::lgamma(1.0 / alpha) + std::lgamma(3.0 / alpha)));
  return {alpha, eta, sigma_l * sigma_l, sigma_r * sigma_r};
}

void scale_features(const Tensor& field, double* out) {
  const int h = field.dim(0), w = field.dim(1);
  std::vector<double> coeffs(field.data(), field.data() + field.numel());
  const auto [shape, power] = fit_ggd(coeffs);
  out[0] = shape;
  out[1] = power;

  // Pairwise products: horizontal, vertical, main diagonal, secondary diagonal.
  const std::array<std::pair<int, int>, 4> shifts{{{0, 1}, {1, 0}, {1, 1}, {1, -1}}};
  for (size_t o = 0; o < shifts.size(); ++o) {
    const auto [dy, dx] = shifts[o];
    std::vector<double> prod;
    prod.reserve(static_cast<size_t>(field.numel()));
    for (int y = 0; y + dy < h; ++y)
      for (int x = std::max(0, -dx); x + dx < w && x < w; ++x)
        prod.push_back(field[static_cast<int64_t>(y) * w + x] *
                       field[static_cast<int64_t>(y + dy) * w + (x + dx)]);
    const auto aggd = fit_aggd(prod);
    for (int k = 0; k < 4; ++k) out[2 + 4 * o + static_cast<size_t>(k)] = aggd[static_cast<size_t>(k)];
  }
}

}  // namespace

BrisqueFeatures brisque_features(const Tensor& img) {
  check_image(img, "brisque_features");
  if (img.dim(1) < 32 || img.dim(2) < 32)
    throw ShapeError("brisque_features: image must be at least 32x32");
  const Tensor luma = luminance01(img);

  BrisqueFeatures f;
  scale_features(mscn_of_luma(luma), f.values.data());
  scale_features(mscn_of_luma(downsample2x_hw(luma)), f.values.data() + 18);
  for (double v : f.values)
    if (!std::isfinite(v)) throw InsufficientStatisticsError("non-finite feature");
  return f;
}

BrisqueScorer BrisqueScorer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scorer model: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("bad scorer model " + path + ": " + e.what());
  }
  BrisqueScorer s;
  const auto read36 = [&j](const char* key, std::array<double, 36>& dst) {
    const auto& arr = j.at(key);
    if (arr.size() != 36) throw IoError(std::string("scorer model field ") + key + " must have 36 entries");
    for (size_t i = 0; i < 36; ++i) dst[i] = arr[i].get<double>();
  };
  read36("feature_min", s.feature_min);
  read36("feature_max", s.feature_max);
  read36("weights", s.weights);
  s.bias = j.at("bias").get<double>();
  return s;
}

void BrisqueScorer::save(const std::string& path) const {
  json j;
  j["feature_min"] = feature_min;
  j["feature_max"] = feature_max;
  j["weights"] = weights;
  j["bias"] = bias;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scorer model: " + path);
  out << j.dump(2) << "\n";
}

double BrisqueScorer::score(const BrisqueFeatures& f) const {
  double s = bias;
  for (size_t i = 0; i < 36; ++i) {
    const double span = feature_max[i] - feature_min[i];
    const double x = span > 1e-12 ? std::clamp((f.values[i] - feature_min[i]) / span, 0.0, 1.0) : 0.0;
    s += weights[i] * x;
  }
  return s;
}

double brisque_score(const BrisqueFeatures& f, const std::string& model_path) {
  return BrisqueScorer::load(model_path).score(f);
}

BrisqueScorer fit_brisque_scorer(const std::vector<BrisqueFeatures>& features,
                                 const std::vector<double>& targets, double ridge) {
  if (features.size() != targets.size() || features.empty())
    throw ValueError("fit_brisque_scorer: need matching non-empty features/targets");
  BrisqueScorer s;
  for (size_t k = 0; k < 36; ++k) {
    s.feature_min[k] = features.front().values[k];
    s.feature_max[k] = features.front().values[k];
  }
  for (const auto& f : features)
    for (size_t k = 0; k < 36; ++k) {
      s.feature_min[k] = std::min(s.feature_min[k], f.values[k]);
      s.feature_max[k] = std::max(s.feature_max[k], f.values[k]);
    }

  // Normalized design matrix with a bias column; ridge on the weights only.
  const size_t n = features.size(), d = 37;
  std::vector<double> X(n * d);
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < 36; ++k) {
      const double span = s.feature_max[k] - s.feature_min[k];
      X[i * d + k] = span > 1e-12 ? (features[i].values[k] - s.feature_min[k]) / span : 0.0;
    }
    X[i * d + 36] = 1.0;
  }
  std::vector<double> a(d * d, 0.0), rhs(d, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t p = 0; p < d; ++p) {
      rhs[p] += X[i * d + p] * targets[i];
      for (size_t q = 0; q < d; ++q) a[p * d + q] += X[i * d + p] * X[i * d + q];
    }
  for (size_t p = 0; p < 36; ++p) a[p * d + p] += ridge;

  // Gaussian elimination with partial pivoting.
  for (size_t col = 0; col < d; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < d; ++r)
      if (std::abs(a[r * d + col]) > std::abs(a[piv * d + col])) piv = r;
    if (std::abs(a[piv * d + col]) < 1e-12) continue;
    if (piv != col) {
      for (size_t q = 0; q < d; ++q) std::swap(a[col * d + q], a[piv * d + q]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[r * d + col] / a[col * d + col];
      if (f == 0.0) continue;
      for (size_t q = col; q < d; ++q) a[r * d + q] -= f * a[col * d + q];
      rhs[r] -= f * rhs[col];
    }
  }
  for (size_t p = 0; p < 36; ++p)
    s.weights[p] = std::abs(a[p * d + p]) < 1e-12 ? 0.0 : rhs[p] / a[p * d + p];
  s.bias = std::abs(a[36 * d + 36]) < 1e-12 ? 0.0 : rhs[36] / a[36 * d + 36];
  return s;
}

double piqe(const Tensor& img, const PiqeParams& params) {
  check_image(img, "piqe");
  const int h = img.dim(1), w = img.dim(2);
  if (h < 64 || w < 64) throw ShapeError("piqe: image must be at least 64x64");
  const Tensor field = mscn(img);
  const int blk = params.block;
  const int by = h / blk, bx = w / blk;

  int n_active = 0;
  double dist_sum = 0.0;
  std::vector<double> edge_buf;
  for (int by_i = 0; by_i < by; ++by_i) {
    for (int bx_i = 0; bx_i < bx; ++bx_i) {
      // Gather the block.
      std::vector<double> block(static_cast<size_t>(blk) * blk);
      for (int y = 0; y < blk; ++y)
        for (int x = 0; x < blk; ++x)
          block[static_cast<size_t>(y) * blk + x] =
              field[static_cast<int64_t>(by_i * blk + y) * w + (bx_i * blk + x)];
      const double blk_var = sample_variance(block.data(), static_cast<int64_t>(block.size()));
      if (blk_var <= params.activity_threshold) continue;
      ++n_active;

      // Edge-profile criterion: a near-flat segment along any block edge of a
      // spatially active block marks a noticeable artifact.
      bool impaired = false;
      const auto check_edge = [&](auto get) {
        for (int start = 0; start + params.segment_length <= blk && !impaired; ++start) {
          edge_buf.clear();
          for (int t = 0; t < params.segment_length; ++t) edge_buf.push_back(get(start + t));
          const double seg_sd = std::sqrt(
              sample_variance(edge_buf.data(), static_cast<int64_t>(edge_buf.size())));
          if (seg_sd < params.segment_threshold) impaired = true;
        }
      };
      check_edge([&](int t) { return block[static_cast<size_t>(t)]; });                       // top row
      check_edge([&](int t) { return block[static_cast<size_t>(blk - 1) * blk + t]; });       // bottom row
      check_edge([&](int t) { return block[static_cast<size_t>(t) * blk]; });                 // left column
      check_edge([&](int t) { return block[static_cast<size_t>(t) * blk + blk - 1]; });       // right column

      if (impaired) {
        dist_sum += 1.0;
        continue;
      }

      // Noise criterion: noise spreads variance evenly, structure localizes
      // it. Compare block deviation against the center/surround imbalance.
      std::vector<double> center, surround;
      const int c0 = blk / 2 - 1, c1 = blk / 2;
      for (int y = 0; y < blk; ++y)
        for (int x = 0; x < blk; ++x) {
          if (x == c0 || x == c1) center.push_back(block[static_cast<size_t>(y) * blk + x]);
          else surround.push_back(block[static_cast<size_t>(y) * blk + x]);
        }
      const double sd_center = std::sqrt(sample_variance(center.data(), static_cast<int64_t>(center.size())));
      const double sd_surround = std::sqrt(sample_variance(surround.data(), static_cast<int64_t>(surround.size())));
      const double cen_sur_dev = std::abs(sd_center - sd_surround);
      if (std::sqrt(blk_var) > 2.0 * cen_sur_dev) dist_sum += std::min(1.0, blk_var);
    }
  }

  if (n_active == 0)
    throw InsufficientActivityError("piqe: no spatially active blocks");
  return (dist_sum + params.c) / (static_cast<double>(n_active) + params.c) * 100.0;
}

std::map<std::string, double> MetricReport::aggregate() const {
  std::map<std::string, double> out;
  for (const auto& [metric, vals] : values) {
    double s = 0.0;
    for (double v : vals) s += v;
    out[metric] = vals.empty() ? 0.0 : s / static_cast<double>(vals.size());
  }
  return out;
}

void MetricReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "name";
  for (const auto& [metric, vals] : values) out << "," << metric;
  out << "\n";
  for (size_t i = 0; i < names.size(); ++i) {
    out << names[i];
    for (const auto& [metric, vals] : values) {
      out << ",";
      if (i < vals.size()) out << vals[i];
    }
    out << "\n";
  }
  out << "aggregate_mean";
  for (const auto& [metric, v] : aggregate()) out << "," << v;
  out << "\n";
}

}  // namespace clarity
