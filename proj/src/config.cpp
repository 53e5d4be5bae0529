#include "clarity/config.hpp"

#include <fstream>
#include <set>

#include "clarity/errors.hpp"

using nlohmann::json;

namespace clarity {

#ifndef CLARITY_VERSION_STRING
#define CLARITY_VERSION_STRING "v0.0.0-unknown"
#endif

std::string version_string() { return CLARITY_VERSION_STRING; }

json default_config() {
  // "paper" carries the published hyper-parameters; "desk" is the scaled-down
  // profile that trains in minutes on a single core.
  return json::parse(R"({
    "default_profile": "desk",
    "profiles": {
      "paper": {
        "seed": 1234,
        "kinds": ["haze", "rain", "blur"],
        "data": {"synthetic_root": "data/synth", "real_root": "data/real"},
        "output_root": "runs",
        "backbone": {"stages": 2, "base_channels": 24, "depth": 3, "feature_tap": "deepest_final_stage"},
        "discriminator": {"base_channels": 64},
        "phi": {"mode": "fallback", "weights_path": "", "seed": 77},
        "losses": {
          "tau": 1e-6,
          "alpha1": 0.5, "alpha2": 0.1,
          "lambda1": 0.5, "lambda2": 0.1, "lambda3": 0.1,
          "alpha1_decay": 0.99, "lambda1_decay": 0.99,
          "feature_extractor": "pool",
          "gan_real_side": "clear"
        },
        "training": {"val_fraction": 0.1, "debug_checks": true, "log_every": 1},
        "teacher": {"batch": 16, "patch": 128, "epochs": 400, "max_iters": 0, "lr": 2e-5, "beta1": 0.9, "beta2": 0.999},
        "kt":      {"batch": 16, "patch": 128, "epochs": 400, "max_iters": 0, "lr": 2e-5, "beta1": 0.9, "beta2": 0.999},
        "da":      {"batch": 16, "patch": 128, "epochs": 40,  "max_iters": 0, "lr": 5e-6, "beta1": 0.5, "beta2": 0.999}
      },
      "desk": {
        "inherits": "paper",
        "backbone": {"stages": 1, "base_channels": 8, "depth": 2},
        "discriminator": {"base_channels": 12},
        "losses": {"tau": 0.5},
        "teacher": {"batch": 6, "patch": 64, "max_iters": 2000, "lr": 1e-3},
        "kt":      {"batch": 6, "patch": 64, "max_iters": 1000, "lr": 1e-3},
        "da":      {"batch": 6, "patch": 64, "max_iters": 500,  "lr": 2e-4}
      }
    }
  })");
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("bad config file " + path + ": " + e.what());
  }
}

namespace {

void deep_merge(json& base, const json& over) {
  if (!over.is_object()) {
    base = over;
    return;
  }
  if (!base.is_object()) base = json::object();
  for (const auto& [key, val] : over.items()) {
    if (val.is_object() && base.contains(key) && base[key].is_object())
      deep_merge(base[key], val);
    else
      base[key] = val;
  }
}

}  // namespace

json resolve_profile(const json& config, const std::string& profile) {
  if (!config.contains("profiles") || !config["profiles"].is_object())
    throw ConfigError("config has no profiles section");
  const json& profiles = config["profiles"];

  std::vector<std::string> chain;
  std::set<std::string> seen;
  std::string cur = profile;
  while (true) {
    if (!profiles.contains(cur)) throw ConfigError("unknown profile: " + cur);
    if (!seen.insert(cur).second) throw ConfigError("profile inheritance cycle at " + cur);
    chain.push_back(cur);
    const json& p = profiles[cur];
    if (p.contains("inherits")) cur = p["inherits"].get<std::string>();
    else break;
  }

  json out = json::object();
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) deep_merge(out, profiles[*it]);
  out.erase("inherits");
  out["profile"] = profile;
  return out;
}

void apply_override(json& resolved, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key.path=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // plain string
  }

  json* node = &resolved;
  size_t pos = 0;
  while (true) {
    const size_t dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (key.empty()) throw ConfigError("bad override key: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
    node = &(*node)[key];
    pos = dot + 1;
  }
}

uint64_t config_hash(const json& resolved) {
  const std::string s = resolved.dump();
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ull;
  }
  return h;
}

json backbone_to_json(const BackboneConfig& cfg) {
  return {{"stages", cfg.stages},
          {"base_channels", cfg.base_channels},
          {"depth", cfg.depth},
          {"feature_tap", cfg.feature_tap}};
}

BackboneConfig backbone_from_json(const json& j) {
  BackboneConfig cfg;
  cfg.stages = j.value("stages", cfg.stages);
  cfg.base_channels = j.value("base_channels", cfg.base_channels);
  cfg.depth = j.value("depth", cfg.depth);
  cfg.feature_tap = j.value("feature_tap", cfg.feature_tap);
  cfg.validate();
  return cfg;
}

json discriminator_to_json(const DiscriminatorConfig& cfg) {
  return {{"base_channels", cfg.base_channels}};
}

DiscriminatorConfig discriminator_from_json(const json& j) {
  DiscriminatorConfig cfg;
  cfg.base_channels = j.value("base_channels", cfg.base_channels);
  return cfg;
}

json phi_to_json(const PhiConfig& cfg) {
  return {{"mode", cfg.mode}, {"weights_path", cfg.weights_path}, {"seed", cfg.seed}};
}

PhiConfig phi_from_json(const json& j) {
  PhiConfig cfg;
  cfg.mode = j.value("mode", cfg.mode);
  cfg.weights_path = j.value("weights_path", cfg.weights_path);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

TrainConfig TrainConfig::from_resolved(const json& resolved, const std::string& stage) {
  if (stage != "teacher" && stage != "kt" && stage != "da")
    throw ConfigError("unknown training stage: " + stage);
  if (!resolved.contains(stage))
    throw ConfigError("config profile has no section for stage " + stage);

  TrainConfig cfg;
  cfg.stage = stage;
  const json& st = resolved[stage];
  cfg.batch = st.value("batch", cfg.batch);
  cfg.patch = st.value("patch", cfg.patch);
  cfg.epochs = st.value("epochs", cfg.epochs);
  cfg.max_iters = st.value("max_iters", cfg.max_iters);
  cfg.lr = st.value("lr", cfg.lr);
  cfg.beta1 = st.value("beta1", cfg.beta1);
  cfg.beta2 = st.value("beta2", cfg.beta2);

  cfg.seed = resolved.value("seed", cfg.seed);
  if (resolved.contains("kinds")) cfg.kinds = resolved["kinds"].get<std::vector<std::string>>();
  if (resolved.contains("backbone")) cfg.backbone = backbone_from_json(resolved["backbone"]);
  if (resolved.contains("discriminator"))
    cfg.discriminator = discriminator_from_json(resolved["discriminator"]);
  if (resolved.contains("phi")) cfg.phi = phi_from_json(resolved["phi"]);

  if (resolved.contains("losses")) {
    const json& lo = resolved["losses"];
    cfg.tau = lo.value("tau", cfg.tau);
    cfg.weights.alpha1 = lo.value("alpha1", cfg.weights.alpha1);
    cfg.weights.alpha2 = lo.value("alpha2", cfg.weights.alpha2);
    cfg.weights.lambda1 = lo.value("lambda1", cfg.weights.lambda1);
    cfg.weights.lambda2 = lo.value("lambda2", cfg.weights.lambda2);
    cfg.weights.lambda3 = lo.value("lambda3", cfg.weights.lambda3);
    cfg.alpha1_decay = lo.value("alpha1_decay", cfg.alpha1_decay);
    cfg.lambda1_decay = lo.value("lambda1_decay", cfg.lambda1_decay);
    cfg.feature_extractor = lo.value("feature_extractor", cfg.feature_extractor);
    cfg.gan_real_side = lo.value("gan_real_side", cfg.gan_real_side);
  }
  if (resolved.contains("training")) {
    const json& tr = resolved["training"];
    cfg.val_fraction = tr.value("val_fraction", cfg.val_fraction);
    cfg.debug_checks = tr.value("debug_checks", cfg.debug_checks);
    cfg.log_every = tr.value("log_every", cfg.log_every);
  }
  if (resolved.contains("data")) {
    cfg.synthetic_root = resolved["data"].value("synthetic_root", cfg.synthetic_root);
    cfg.real_root = resolved["data"].value("real_root", cfg.real_root);
  }
  cfg.output_root = resolved.value("output_root", cfg.output_root);
  cfg.resolved_hash = config_hash(resolved);

  if (cfg.batch < 1) throw ConfigError("batch must be >= 1");
  if (cfg.tau <= 0) throw ConfigError("tau must be > 0");
  if (cfg.feature_extractor != "pool" && cfg.feature_extractor != "phi")
    throw ConfigError("losses.feature_extractor must be 'pool' or 'phi'");
  if (cfg.gan_real_side != "clear" && cfg.gan_real_side != "restored_clear")
    throw ConfigError("losses.gan_real_side must be 'clear' or 'restored_clear'");
  return cfg;
}

}  // namespace clarity
