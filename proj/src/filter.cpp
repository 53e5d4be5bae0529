#include "clarity/filter.hpp"

#include <algorithm>
#include <cmath>

#include "clarity/errors.hpp"

namespace clarity {

namespace {

inline int reflect_index(int j, int extent) {
  if (extent == 1) return 0;
  while (j < 0 || j >= extent) {
    if (j < 0) j = -j;
    if (j >= extent) j = 2 * extent - 2 - j;
  }
  return j;
}

void filter_plane(const double* src, double* dst, int h, int w,
                  const Tensor& kernel, PadMode mode) {
  const int kh = kernel.dim(0), kw = kernel.dim(1);
  const int ry = kh / 2, rx = kw / 2;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int ky = 0; ky < kh; ++ky) {
        int sy = y + ky - ry;
        if (mode == PadMode::Reflect) sy = reflect_index(sy, h);
        else if (sy < 0 || sy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          int sx = x + kx - rx;
          if (mode == PadMode::Reflect) sx = reflect_index(sx, w);
          else if (sx < 0 || sx >= w) continue;
          acc += kernel[static_cast<int64_t>(ky) * kw + kx] *
                 src[static_cast<int64_t>(sy) * w + sx];
        }
      }
      dst[static_cast<int64_t>(y) * w + x] = acc;
    }
  }
}

}  // namespace

Tensor filter2d(const Tensor& field, const Tensor& kernel, PadMode mode) {
  if (kernel.ndim() != 2) throw ShapeError("kernel must be 2-D");
  Tensor out(field.shape());
  if (field.ndim() == 2) {
    filter_plane(field.data(), out.data(), field.dim(0), field.dim(1), kernel, mode);
  } else if (field.ndim() == 3) {
    const int c = field.dim(0), h = field.dim(1), w = field.dim(2);
    const int64_t plane = static_cast<int64_t>(h) * w;
    for (int i = 0; i < c; ++i)
      filter_plane(field.data() + i * plane, out.data() + i * plane, h, w, kernel, mode);
  } else {
    throw ShapeError("filter2d expects (H,W) or (C,H,W)");
  }
  return out;
}

Tensor gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw ValueError("gaussian kernel size must be odd");
  if (sigma <= 0.0) throw ValueError("gaussian sigma must be positive");
  Tensor k({size, size});
  const int r = size / 2;
  double sum = 0.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dy = y - r, dx = x - r;
      const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      k[static_cast<int64_t>(y) * size + x] = v;
      sum += v;
    }
  for (int64_t i = 0; i < k.numel(); ++i) k[i] /= sum;
  return k;
}

Tensor line_kernel(int length, double angle_deg, bool normalize) {
  if (length < 1) throw ValueError("line kernel length must be >= 1");
  const int size = length % 2 == 1 ? length : length + 1;
  Tensor k({size, size});
  const double a = angle_deg * 3.14159265358979323846 / 180.0;
  // angle 0 points down the image (vertical streak)
  const double dy = std::cos(a), dx = std::sin(a);
  const double half = (length - 1) / 2.0;
  const int c = size / 2;
  for (double t = -half; t <= half + 1e-9; t += 0.5) {
    const int y = c + static_cast<int>(std::lround(t * dy));
    const int x = c + static_cast<int>(std::lround(t * dx));
    if (y >= 0 && y < size && x >= 0 && x < size)
      k[static_cast<int64_t>(y) * size + x] = 1.0;
  }
  if (normalize) {
    double sum = 0.0;
    for (int64_t i = 0; i < k.numel(); ++i) sum += k[i];
    for (int64_t i = 0; i < k.numel(); ++i) k[i] /= sum;
  }
  return k;
}

Tensor delta_kernel(int size) {
  if (size < 1 || size % 2 == 0) throw ValueError("delta kernel size must be odd");
  Tensor k({size, size});
  k[static_cast<int64_t>(size / 2) * size + size / 2] = 1.0;
  return k;
}

Tensor downsample2x_hw(const Tensor& field) {
  if (field.ndim() != 2) throw ShapeError("downsample2x_hw expects (H,W)");
  const int h = field.dim(0), w = field.dim(1);
  const int oh = h / 2, ow = w / 2;
  if (oh < 1 || ow < 1) throw ShapeError("field too small to downsample");
  Tensor out({oh, ow});
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      out[static_cast<int64_t>(y) * ow + x] =
          0.25 * (field[static_cast<int64_t>(2 * y) * w + 2 * x] +
                  field[static_cast<int64_t>(2 * y) * w + 2 * x + 1] +
                  field[static_cast<int64_t>(2 * y + 1) * w + 2 * x] +
                  field[static_cast<int64_t>(2 * y + 1) * w + 2 * x + 1]);
  return out;
}

}  // namespace clarity
