#include "clarity/networks.hpp"

#include <cmath>

#include "clarity/checkpoint.hpp"
#include "clarity/errors.hpp"

namespace clarity {

using namespace ops;

Var ParamSet::add(const std::string& name, Tensor init, bool trainable) {
  for (const auto& [n, v] : items_)
    if (n == name) throw ValueError("duplicate parameter name: " + name);
  Var v = make_leaf(std::move(init), trainable);
  items_.emplace_back(name, v);
  return v;
}

std::vector<Var> ParamSet::vars() const {
  std::vector<Var> out;
  out.reserve(items_.size());
  for (const auto& [n, v] : items_) out.push_back(v);
  return out;
}

int64_t ParamSet::count() const {
  int64_t n = 0;
  for (const auto& [name, v] : items_) n += v->val.numel();
  return n;
}

void ParamSet::set_trainable(bool trainable) {
  for (auto& [name, v] : items_) v->requires_grad = trainable;
}

Var ParamSet::find(const std::string& name) const {
  for (const auto& [n, v] : items_)
    if (n == name) return v;
  throw ValueError("no such parameter: " + name);
}

void BackboneConfig::validate() const {
  if (stages < 1) throw ValueError("backbone stages must be >= 1");
  if (base_channels < 1) throw ValueError("backbone base_channels must be >= 1");
  if (depth < 1) throw ValueError("backbone depth must be >= 1");
  if (feature_tap != "deepest_final_stage" && feature_tap != "deepest_each_stage")
    throw ValueError("unknown feature tap: " + feature_tap);
}

namespace {

Tensor he_init(int co, int ci, int k, Rng& rng) {
  Tensor w({co, ci, k, k});
  const double std = std::sqrt(2.0 / (static_cast<double>(ci) * k * k));
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.normal(0.0, std);
  return w;
}

// Reflect-pads (N,C,H,W) on bottom/right so H and W become multiples of m.
Tensor pad_to_multiple(const Tensor& x, int m, int& padded_h, int& padded_w) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  padded_h = (H + m - 1) / m * m;
  padded_w = (W + m - 1) / m * m;
  if (padded_h == H && padded_w == W) return x;
  Tensor out({N, C, padded_h, padded_w});
  auto reflect = [](int j, int extent) {
    if (j < extent) return j;
    const int r = 2 * extent - 2 - j;
    return r < 0 ? 0 : r;
  };
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* src = x.data() + ((static_cast<int64_t>(n) * C + c) * H) * W;
      double* dst = out.data() + ((static_cast<int64_t>(n) * C + c) * padded_h) * padded_w;
      for (int y = 0; y < padded_h; ++y) {
        const int sy = reflect(y, H);
        for (int xw = 0; xw < padded_w; ++xw)
          dst[static_cast<int64_t>(y) * padded_w + xw] =
              src[static_cast<int64_t>(sy) * W + reflect(xw, W)];
      }
    }
  return out;
}

Tensor crop_nchw(const Tensor& x, int h, int w) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H == h && W == w) return x;
  Tensor out({N, C, h, w});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* src = x.data() + ((static_cast<int64_t>(n) * C + c) * H) * W;
      double* dst = out.data() + ((static_cast<int64_t>(n) * C + c) * h) * w;
      for (int y = 0; y < h; ++y)
        for (int xw = 0; xw < w; ++xw)
          dst[static_cast<int64_t>(y) * w + xw] = src[static_cast<int64_t>(y) * W + xw];
    }
  return out;
}

}  // namespace

Backbone::Conv Backbone::make_conv(const std::string& name, int ci, int co, int k,
                                   int stride, Rng& rng, bool zero_init) {
  Conv c;
  c.stride = stride;
  Tensor w = zero_init ? Tensor({co, ci, k, k}) : he_init(co, ci, k, rng);
  c.w = params_.add(name + ".w", std::move(w), true);
  c.b = params_.add(name + ".b", Tensor({co}), true);
  return c;
}

Backbone::Backbone(const BackboneConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(seed, "backbone"));
  const int B = cfg_.base_channels;
  for (int s = 0; s < cfg_.stages; ++s) {
    Stage st;
    const std::string prefix = "stage" + std::to_string(s) + ".";
    st.in = make_conv(prefix + "in", 3, B, 3, 1, rng, false);
    for (int d = 1; d <= cfg_.depth; ++d)
      st.down.push_back(make_conv(prefix + "down" + std::to_string(d), B << (d - 1),
                                  B << d, 3, 2, rng, false));
    for (int d = cfg_.depth; d >= 1; --d)
      st.up.push_back(make_conv(prefix + "up" + std::to_string(d), B << d,
                                B << (d - 1), 3, 1, rng, false));
    // Zero head: a fresh network predicts a zero residual.
    st.head = make_conv(prefix + "head", B, 3, 3, 1, rng, true);
    stages_.push_back(std::move(st));
  }
}

BackboneOutput Backbone::forward(const Var& x) const {
  if (x->val.ndim() != 4 || x->val.dim(1) != 3)
    throw ShapeError("backbone expects (N,3,H,W) input");
  const int H = x->val.dim(2), W = x->val.dim(3);
  const int mult = 1 << cfg_.depth;

  Var cur = x;
  const bool needs_pad = (H % mult) != 0 || (W % mult) != 0;
  if (needs_pad) {
    int ph = 0, pw = 0;
    Tensor padded = pad_to_multiple(x->val, mult, ph, pw);
    // Gradients do not propagate through the pre-pad copy; restoration is a
    // per-run inference path for odd sizes, training uses aligned patches.
    cur = make_leaf(std::move(padded), x->requires_grad);
    if (x->requires_grad) {
      cur->parents = {x};
      const int PH = cur->val.dim(2), PW = cur->val.dim(3);
      cur->back = [x, H, W, PH, PW](Node& self) {
        Tensor& gx = x->ensure_grad();
        const int N = gx.dim(0), C = gx.dim(1);
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
              for (int xw = 0; xw < W; ++xw)
                gx[((static_cast<int64_t>(n) * C + c) * H + y) * W + xw] +=
                    self.grad[((static_cast<int64_t>(n) * C + c) * PH + y) * PW + xw];
      };
    }
  }

  std::vector<Var> taps;
  for (size_t s = 0; s < stages_.size(); ++s) {
    const Stage& st = stages_[s];
    std::vector<Var> enc;  // encoder activations per level
    Var h = silu(conv2d(cur, st.in.w, st.in.b, 1, 1, PadMode::Reflect));
    enc.push_back(h);
    for (const auto& dn : st.down) {
      h = silu(conv2d(h, dn.w, dn.b, 2, 1, PadMode::Reflect));
      enc.push_back(h);
    }
    const Var deepest = h;
    if (cfg_.feature_tap == "deepest_each_stage" || s + 1 == stages_.size())
      taps.push_back(deepest);

    for (size_t u = 0; u < st.up.size(); ++u) {
      h = upsample2x(h);
      h = silu(conv2d(h, st.up[u].w, st.up[u].b, 1, 1, PadMode::Reflect));
      h = add(h, enc[st.up.size() - 1 - u]);  // skip connection
    }
    const Var residual = conv2d(h, st.head.w, st.head.b, 1, 1, PadMode::Reflect);
    cur = add(cur, residual);
  }

  Var restored = clamp(cur, -1.0, 1.0);
  if (needs_pad) {
    Tensor cropped = crop_nchw(restored->val, H, W);
    Var out = make_leaf(std::move(cropped), restored->requires_grad);
    if (restored->requires_grad) {
      const int PH = restored->val.dim(2), PW = restored->val.dim(3);
      out->parents = {restored};
      out->back = [restored, H, W, PH, PW](Node& self) {
        Tensor& gr = restored->ensure_grad();
        const int N = gr.dim(0), C = gr.dim(1);
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
              for (int xw = 0; xw < W; ++xw)
                gr[((static_cast<int64_t>(n) * C + c) * PH + y) * PW + xw] +=
                    self.grad[((static_cast<int64_t>(n) * C + c) * H + y) * W + xw];
      };
    }
    restored = out;
  }

  if (cfg_.feature_tap == "deepest_final_stage" && !taps.empty())
    taps = {taps.back()};
  return {restored, taps};
}

Tensor Backbone::restore_image(const Tensor& img) const {
  if (img.ndim() != 3 || img.dim(0) != 3) throw ShapeError("expected (3,H,W) image");
  const int h = img.dim(1), w = img.dim(2);
  Tensor batch({1, 3, h, w});
  std::copy(img.data(), img.data() + img.numel(), batch.data());
  const BackboneOutput out = forward(make_const(std::move(batch)));
  Tensor res({3, h, w});
  std::copy(out.restored->val.data(), out.restored->val.data() + res.numel(), res.data());
  return res;
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, uint64_t seed) : cfg_(cfg) {
  if (cfg_.base_channels < 1) throw ValueError("discriminator base_channels must be >= 1");
  Rng rng(derive_seed(seed, "discriminator"));
  const int B = cfg_.base_channels;
  const int chans[5] = {3, B, 2 * B, 4 * B, 8 * B};
  const int strides[4] = {2, 2, 2, 1};
  for (int i = 0; i < 4; ++i) {
    Block blk;
    blk.stride = strides[i];
    const std::string prefix = "block" + std::to_string(i) + ".";
    blk.w = params_.add(prefix + "w", he_init(chans[i + 1], chans[i], 4, rng), true);
    blk.b = params_.add(prefix + "b", Tensor({chans[i + 1]}), true);
    if (i > 0) {  // instance normalization on all but the first block
      blk.gamma = params_.add(prefix + "gamma", Tensor({chans[i + 1]}, 1.0), true);
      blk.beta = params_.add(prefix + "beta", Tensor({chans[i + 1]}), true);
    }
    blocks_.push_back(std::move(blk));
  }
  head_w_ = params_.add("head.w", he_init(1, 8 * B, 4, rng), true);
  head_b_ = params_.add("head.b", Tensor({1}), true);
}

Var Discriminator::forward(const Var& x) const {
  if (x->val.ndim() != 4 || x->val.dim(1) != 3)
    throw ShapeError("discriminator expects (N,3,H,W) input");
  Var h = x;
  for (const auto& blk : blocks_) {
    const int in_h = h->val.dim(2), in_w = h->val.dim(3);
    if ((in_h + 2 - 4) / blk.stride + 1 < 1 || (in_w + 2 - 4) / blk.stride + 1 < 1)
      throw ShapeError("image smaller than the discriminator receptive field");
    h = conv2d(h, blk.w, blk.b, blk.stride, 1, PadMode::Zero);
    if (blk.gamma) h = instance_norm(h, blk.gamma, blk.beta);
    h = leaky_relu(h, 0.2);
  }
  if (h->val.dim(2) < 2 || h->val.dim(3) < 2)
    throw ShapeError("image smaller than the discriminator receptive field");
  return conv2d(h, head_w_, head_b_, 1, 1, PadMode::Zero);
}

PerceptualExtractor::PerceptualExtractor(const PhiConfig& cfg, int in_channels)
    : cfg_(cfg), in_channels_(in_channels) {
  const int chans[4] = {in_channels, 8, 16, 32};
  const int strides[3] = {1, 2, 2};
  if (cfg_.mode == "fallback") {
    Rng rng(derive_seed(cfg_.seed, "phi"));
    for (int i = 0; i < 3; ++i) {
      Conv c;
      c.stride = strides[i];
      c.w = params_.add("conv" + std::to_string(i) + ".w",
                        he_init(chans[i + 1], chans[i], 3, rng), false);
      c.b = params_.add("conv" + std::to_string(i) + ".b", Tensor({chans[i + 1]}), false);
      convs_.push_back(std::move(c));
    }
  } else if (cfg_.mode == "file") {
    NamedArrays data = load_array_container(cfg_.weights_path);
    if (data.meta.value("kind", "") != "phi")
      throw CheckpointError("not a perceptual-extractor weights file: " + cfg_.weights_path);
    if (data.meta.value("in_channels", 3) != in_channels)
      throw CheckpointError("perceptual weights channel mismatch");
    for (int i = 0; i < 3; ++i) {
      Conv c;
      c.stride = strides[i];
      const std::string base = "conv" + std::to_string(i);
      c.w = params_.add(base + ".w", data.find(base + ".w"), false);
      c.b = params_.add(base + ".b", data.find(base + ".b"), false);
      convs_.push_back(std::move(c));
    }
  } else {
    throw ValueError("unknown perceptual extractor mode: " + cfg_.mode);
  }
  out_dim_ = chans[3];
}

Var PerceptualExtractor::extract(const Var& imgs) const {
  if (imgs->val.ndim() != 4 || imgs->val.dim(1) != in_channels_)
    throw ShapeError("perceptual extractor channel mismatch");
  Var h = imgs;
  for (const auto& c : convs_) h = silu(conv2d(h, c.w, c.b, c.stride, 1, PadMode::Zero));
  return gap2d(h);
}

void PerceptualExtractor::save_weights(const std::string& path) const {
  NamedArrays data;
  data.meta = {{"kind", "phi"}, {"in_channels", in_channels_}};
  for (const auto& [name, v] : params_.items()) data.arrays.emplace_back(name, v->val);
  save_array_container(data, path);
}

Var pool_features(const Var& fmap) { return gap2d(fmap); }

}  // namespace clarity
