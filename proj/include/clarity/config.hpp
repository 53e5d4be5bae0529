#ifndef CLARITY_CONFIG_HPP
#define CLARITY_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "clarity/losses.hpp"
#include "clarity/networks.hpp"

namespace clarity {

// Single JSON config with named profiles ("paper" holds the published
// hyper-parameters, "desk" the CI-runnable scaled-down set), profile
// inheritance via "inherits", and dotted-key command-line overrides.

nlohmann::json default_config();
nlohmann::json load_config_file(const std::string& path);

// Merges the inheritance chain for `profile` into one flat object.
nlohmann::json resolve_profile(const nlohmann::json& config, const std::string& profile);

// "teacher.lr=1e-4" style override on a resolved profile. Values parse as
// JSON when possible, otherwise as strings.
void apply_override(nlohmann::json& resolved, const std::string& assignment);

uint64_t config_hash(const nlohmann::json& resolved);

nlohmann::json backbone_to_json(const BackboneConfig& cfg);
BackboneConfig backbone_from_json(const nlohmann::json& j);
nlohmann::json discriminator_to_json(const DiscriminatorConfig& cfg);
DiscriminatorConfig discriminator_from_json(const nlohmann::json& j);
nlohmann::json phi_to_json(const PhiConfig& cfg);
PhiConfig phi_from_json(const nlohmann::json& j);

// Flattened per-stage training configuration.
struct TrainConfig {
  std::string stage;  // "teacher" | "kt" | "da"
  int batch = 16;
  int patch = 128;
  int epochs = 400;
  int64_t max_iters = 0;  // 0 = bounded by epochs only
  double lr = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double tau = 1e-6;
  LossWeights weights;
  double alpha1_decay = 0.99;
  double lambda1_decay = 0.99;
  uint64_t seed = 1234;
  std::vector<std::string> kinds{"haze", "rain", "blur"};
  BackboneConfig backbone;
  DiscriminatorConfig discriminator;
  PhiConfig phi;
  std::string feature_extractor = "pool";  // or "phi"
  std::string gan_real_side = "clear";     // or "restored_clear"
  double val_fraction = 0.1;
  bool debug_checks = true;
  int log_every = 1;
  std::string synthetic_root = "data/synth";
  std::string real_root = "data/real";
  std::string output_root = "runs";
  uint64_t resolved_hash = 0;

  static TrainConfig from_resolved(const nlohmann::json& resolved, const std::string& stage);
};

std::string version_string();

}  // namespace clarity

#endif
