#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace simbridge {

// One training run, fully resolved. Serialized as flat dotted-key text, one
// `key = value` per line, `#` comments, diff-friendly. parse(serialize(c))
// is the identity.
struct RunConfig {
  std::string mode = "hybrid";  // hybrid | sac | iql-offline
  std::string task = "standing_still";
  std::uint64_t seed = 1;
  long total_steps = 100000;
  long eval_every = 2000;
  int eval_episodes = 10;
  std::string dataset;  // path; required except in sac mode
  std::string out_dir;
  std::string label;  // ablation cell tag; free-form

  // agent.*
  double lambda = 0.1;
  double gamma = 0.99;
  double polyak = 0.005;
  bool use_ratio = true;
  double offline_fraction = 0.5;
  int batch_size = 64;
  double learning_rate = 3e-4;
  double reward_scale = 0.01;
  double target_entropy = kAutoEntropy;  // "auto" = -action_dim
  long warmup_steps = 1000;
  double awr_temperature = 3.0;
  double init_beta = 0.2;

  // backbone.*
  std::string backbone_kind = "expectile";
  double backbone_tau = 0.7;
  double backbone_alpha = 1.0;

  // ratio.*
  double ratio_clip_low = 0.01;
  double ratio_clip_high = 100.0;
  double ratio_input_noise_std = 0.1;

  // perturb.* (the imperfect simulator)
  double gravity_scale = 1.0;
  double friction_scale = 1.0;
  double mass_scale = 1.0;
  double actuation_noise_std = 0.0;

  static constexpr double kAutoEntropy = -1e300;  // sentinel for "auto"

  bool operator==(const RunConfig& other) const;
};

RunConfig parse_config(const std::string& text);  // throws ConfigError
std::string serialize_config(const RunConfig& cfg);

RunConfig load_config_file(const std::string& path);
void save_config_file(const RunConfig& cfg, const std::string& path);

// FNV-1a of the canonical serialization; identifies a cell up to seed/paths.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace simbridge
