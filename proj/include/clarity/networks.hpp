#ifndef CLARITY_NETWORKS_HPP
#define CLARITY_NETWORKS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clarity/autodiff.hpp"
#include "clarity/rng.hpp"
#include "clarity/tensor.hpp"

namespace clarity {

// Ordered, named collection of parameter leaves.
class ParamSet {
 public:
  Var add(const std::string& name, Tensor init, bool trainable);
  const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
  std::vector<Var> vars() const;
  int64_t count() const;  // total number of scalar parameters
  void set_trainable(bool trainable);
  Var find(const std::string& name) const;

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

struct BackboneConfig {
  int stages = 1;
  int base_channels = 8;
  int depth = 2;  // downsampling levels per stage
  std::string feature_tap = "deepest_final_stage";  // or "deepest_each_stage"

  void validate() const;
  bool operator==(const BackboneConfig&) const = default;
};

struct BackboneOutput {
  Var restored;               // same shape as input, clipped to [-1,1]
  std::vector<Var> features;  // taps, deepest encoder output(s)
};

// Compact multi-stage encoder-decoder that predicts a residual on top of its
// input. The final per-stage projection is zero-initialized, so a freshly
// created network is the identity (up to clipping).
class Backbone {
 public:
  Backbone(const BackboneConfig& cfg, uint64_t seed);

  BackboneOutput forward(const Var& x) const;  // x: (N,3,H,W)
  Tensor restore_image(const Tensor& img) const;  // (3,H,W) -> (3,H,W)

  const BackboneConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  struct Conv {
    Var w, b;
    int stride = 1;
  };
  Conv make_conv(const std::string& name, int ci, int co, int k, int stride,
                 Rng& rng, bool zero_init);

  BackboneConfig cfg_;
  ParamSet params_;
  // per stage: input conv, depth down convs, depth up convs, head
  struct Stage {
    Conv in;
    std::vector<Conv> down;
    std::vector<Conv> up;
    Conv head;
  };
  std::vector<Stage> stages_;
};

struct DiscriminatorConfig {
  int base_channels = 16;
  bool operator==(const DiscriminatorConfig&) const = default;
};

// Patch discriminator: three stride-2 blocks, one stride-1 block (instance
// normalization on all but the first), leaky slope 0.2, 1-channel logit head.
// A 128x128 input yields a 14x14 score map.
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& cfg, uint64_t seed);

  Var forward(const Var& x) const;  // (N,3,H,W) -> (N,1,h,w) logits

  const DiscriminatorConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  DiscriminatorConfig cfg_;
  ParamSet params_;
  struct Block {
    Var w, b;
    Var gamma, beta;  // empty vars when the block has no normalization
    int stride = 1;
  };
  std::vector<Block> blocks_;
  Var head_w_, head_b_;
};

struct PhiConfig {
  std::string mode = "fallback";  // "fallback" (seeded) or "file"
  std::string weights_path;
  uint64_t seed = 77;

  bool operator==(const PhiConfig&) const = default;
};

// Frozen perceptual feature extractor: a fixed convolutional stack whose
// global-average-pooled activations feed the image-grained contrastive
// terms. Never receives gradient updates; gradients still flow through it
// to its image input.
class PerceptualExtractor {
 public:
  PerceptualExtractor(const PhiConfig& cfg, int in_channels = 3);

  Var extract(const Var& imgs) const;  // (N,C,H,W) -> (N,d)
  int out_dim() const { return out_dim_; }
  const ParamSet& params() const { return params_; }
  const PhiConfig& config() const { return cfg_; }

  // Writes fallback-initialized weights in the documented container layout.
  void save_weights(const std::string& path) const;

 private:
  PhiConfig cfg_;
  int in_channels_;
  int out_dim_ = 0;
  ParamSet params_;
  struct Conv {
    Var w, b;
    int stride = 1;
  };
  std::vector<Conv> convs_;
};

// Channelwise global average pooling: (N,C,H,W) -> (N,C).
Var pool_features(const Var& fmap);

}  // namespace clarity

#endif
