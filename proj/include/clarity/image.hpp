#ifndef CLARITY_IMAGE_HPP
#define CLARITY_IMAGE_HPP

#include <string>

#include "clarity/rng.hpp"
#include "clarity/tensor.hpp"

namespace clarity {

// Images are (3,H,W) RGB tensors. The pipeline currency is the [-1,1] range;
// degradation synthesis and the quality metrics work on the [0,1] range.

// Reads an 8-bit PNG or JPEG file and returns a (3,H,W) tensor in [-1,1]
// (pixel/127.5 - 1).
Tensor load_image(const std::string& path);

// Writes a [-1,1] image as an 8-bit RGB PNG.
void save_image(const Tensor& img, const std::string& path);

// [0,1] <-> [-1,1]
Tensor normalize(const Tensor& unit);     // x*2 - 1
Tensor denormalize(const Tensor& pm1);    // (x+1)/2, clipped to [0,1]

// Deterministic crops. Paired variants use identical offsets.
Tensor crop(const Tensor& img, int y0, int x0, int size);
Tensor random_crop(const Tensor& img, int size, Rng& rng);
std::pair<Tensor, Tensor> random_crop_pair(const Tensor& a, const Tensor& b,
                                           int size, Rng& rng);

// BT.601 luma of a [-1,1] image, returned as (H,W) in [0,1].
Tensor luminance01(const Tensor& img);

int image_height(const Tensor& img);
int image_width(const Tensor& img);
void check_image(const Tensor& img, const char* what);

}  // namespace clarity

#endif
