#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <vector>

#include "clarity/errors.hpp"
#include "clarity/image.hpp"

namespace clarity {

int image_height(const Tensor& img) { return img.dim(1); }
int image_width(const Tensor& img) { return img.dim(2); }

void check_image(const Tensor& img, const char* what) {
  if (img.ndim() != 3 || img.dim(0) != 3)
    throw ShapeError(std::string(what) + ": expected (3,H,W) image, got " +
                     shape_str(img.shape()));
  if (img.dim(1) < 1 || img.dim(2) < 1)
    throw ShapeError(std::string(what) + ": zero-sized image");
}

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

Tensor rgb8_to_tensor(const std::vector<unsigned char>& rgb, int h, int w) {
  Tensor img({3, h, w});
  const int64_t plane = static_cast<int64_t>(h) * w;
  for (int64_t i = 0; i < plane; ++i) {
    img[i] = rgb[static_cast<size_t>(3 * i)] / 127.5 - 1.0;
    img[plane + i] = rgb[static_cast<size_t>(3 * i + 1)] / 127.5 - 1.0;
    img[2 * plane + i] = rgb[static_cast<size_t>(3 * i + 2)] / 127.5 - 1.0;
  }
  return img;
}

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

Tensor load_png(FILE* f, const std::string& path) {
  PngReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) throw IoError("png: allocation failure");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw IoError("png: allocation failure");
  if (setjmp(png_jmpbuf(g.png))) throw IoError("png: failed to decode " + path);

  png_init_io(g.png, f);
  png_set_sig_bytes(g.png, 8);
  png_read_info(g.png, g.info);

  const png_uint_32 w = png_get_image_width(g.png, g.info);
  const png_uint_32 h = png_get_image_height(g.png, g.info);
  const int depth = png_get_bit_depth(g.png, g.info);
  const int color = png_get_color_type(g.png, g.info);
  if (w == 0 || h == 0) throw IoError("png: zero-sized image " + path);
  if (depth == 16) throw IoError("png: 16-bit images are unsupported: " + path);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
  if (png_get_valid(g.png, g.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(g.png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(g.png);
  png_set_strip_alpha(g.png);
  png_read_update_info(g.png, g.info);

  if (png_get_rowbytes(g.png, g.info) != static_cast<size_t>(w) * 3)
    throw IoError("png: unsupported pixel layout: " + path);

  std::vector<unsigned char> rgb(static_cast<size_t>(w) * h * 3);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = rgb.data() + static_cast<size_t>(y) * w * 3;
  png_read_image(g.png, rows.data());
  png_read_end(g.png, nullptr);
  return rgb8_to_tensor(rgb, static_cast<int>(h), static_cast<int>(w));
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jb;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jb, 1);
}

Tensor load_jpeg(FILE* f, const std::string& path) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jb)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("jpeg: failed to decode " + path);
  }
  jpeg_create_decompress(&cinfo);
  std::rewind(f);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  if (w == 0 || h == 0) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("jpeg: zero-sized image " + path);
  }
  std::vector<unsigned char> rgb(static_cast<size_t>(w) * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = rgb.data() + static_cast<size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return rgb8_to_tensor(rgb, h, w);
}

}  // namespace

Tensor load_image(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path);
  unsigned char sig[8] = {0};
  const size_t got = std::fread(sig, 1, 8, f.get());
  if (got >= 8 && !png_sig_cmp(sig, 0, 8)) return load_png(f.get(), path);
  if (got >= 2 && sig[0] == 0xFF && sig[1] == 0xD8) return load_jpeg(f.get(), path);
  throw IoError("unsupported image format: " + path);
}

void save_image(const Tensor& img, const std::string& path) {
  check_image(img, "save_image");
  const int h = img.dim(1), w = img.dim(2);
  const int64_t plane = static_cast<int64_t>(h) * w;

  std::vector<unsigned char> rgb(static_cast<size_t>(plane) * 3);
  for (int64_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) {
      const double v = (img[c * plane + i] + 1.0) * 127.5;
      rgb[static_cast<size_t>(3 * i + c)] =
          static_cast<unsigned char>(std::clamp(std::lround(v), 0l, 255l));
    }

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: allocation failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: allocation failure");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: failed to encode " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y)
    png_write_row(png, rgb.data() + static_cast<size_t>(y) * w * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor normalize(const Tensor& unit) {
  Tensor out(unit.shape());
  const int64_t n = unit.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = unit[i] * 2.0 - 1.0;
  return out;
}

Tensor denormalize(const Tensor& pm1) {
  Tensor out(pm1.shape());
  const int64_t n = pm1.numel();
  for (int64_t i = 0; i < n; ++i)
    out[i] = std::clamp((pm1[i] + 1.0) * 0.5, 0.0, 1.0);
  return out;
}

Tensor crop(const Tensor& img, int y0, int x0, int size) {
  check_image(img, "crop");
  const int h = img.dim(1), w = img.dim(2);
  if (y0 < 0 || x0 < 0 || y0 + size > h || x0 + size > w)
    throw ShapeError("crop window out of bounds");
  Tensor out({3, size, size});
  const int64_t plane = static_cast<int64_t>(h) * w;
  const int64_t oplane = static_cast<int64_t>(size) * size;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        out[c * oplane + static_cast<int64_t>(y) * size + x] =
            img[c * plane + static_cast<int64_t>(y0 + y) * w + (x0 + x)];
  return out;
}

Tensor random_crop(const Tensor& img, int size, Rng& rng) {
  check_image(img, "random_crop");
  const int h = img.dim(1), w = img.dim(2);
  if (h < size || w < size)
    throw ShapeError("image smaller than crop size");
  const int y0 = static_cast<int>(rng.uniform_int(h - size + 1));
  const int x0 = static_cast<int>(rng.uniform_int(w - size + 1));
  return crop(img, y0, x0, size);
}

std::pair<Tensor, Tensor> random_crop_pair(const Tensor& a, const Tensor& b,
                                           int size, Rng& rng) {
  check_image(a, "random_crop_pair");
  check_image(b, "random_crop_pair");
  if (!a.same_shape(b)) throw ShapeError("paired images differ in size");
  const int h = a.dim(1), w = a.dim(2);
  if (h < size || w < size) throw ShapeError("image smaller than crop size");
  const int y0 = static_cast<int>(rng.uniform_int(h - size + 1));
  const int x0 = static_cast<int>(rng.uniform_int(w - size + 1));
  return {crop(a, y0, x0, size), crop(b, y0, x0, size)};
}

Tensor luminance01(const Tensor& img) {
  check_image(img, "luminance01");
  const int h = img.dim(1), w = img.dim(2);
  const int64_t plane = static_cast<int64_t>(h) * w;
  Tensor out({h, w});
  for (int64_t i = 0; i < plane; ++i) {
    const double r = std::clamp((img[i] + 1.0) * 0.5, 0.0, 1.0);
    const double g = std::clamp((img[plane + i] + 1.0) * 0.5, 0.0, 1.0);
    const double b = std::clamp((img[2 * plane + i] + 1.0) * 0.5, 0.0, 1.0);
    out[i] = 0.299 * r + 0.587 * g + 0.114 * b;
  }
  return out;
}

}  // namespace clarity
