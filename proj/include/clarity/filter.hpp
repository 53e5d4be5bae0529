#ifndef CLARITY_FILTER_HPP
#define CLARITY_FILTER_HPP

#include "clarity/autodiff.hpp"  // PadMode
#include "clarity/tensor.hpp"

namespace clarity {

// Plain (non-autodiff) 2-D filtering on (H,W) fields and (3,H,W) images.
// Output has the input's size ("same" convolution).
Tensor filter2d(const Tensor& field, const Tensor& kernel, PadMode mode);

// Normalized kernels.
Tensor gaussian_kernel(int size, double sigma);
// Line of given length through the center at `angle_deg` (0 = vertical),
// normalized to sum 1 when normalize is true.
Tensor line_kernel(int length, double angle_deg, bool normalize);
Tensor delta_kernel(int size);

// 2x2 box downsample (floor division of extents).
Tensor downsample2x_hw(const Tensor& field);

}  // namespace clarity

#endif
