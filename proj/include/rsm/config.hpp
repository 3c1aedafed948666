#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "rsm/dataset.hpp"

namespace rsm {

enum class Variant { full, ab01, ab10, ab00, parallel, mlp_cci, random_mech };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view text);

struct TransitionConfig {
  int slots = 5;         // N
  int mechanisms = 5;    // M
  int slot_dim = 4;      // d_s
  int action_dim = 4;    // d_a, 0 for balls
  int cci_dim = 32;      // d_cci
  int hidden = 512;
  int heads = 2;
  double temperature = 1.0;
  Variant variant = Variant::full;

  int model_dim() const { return slot_dim + action_dim; }
  // ab01/ab00 hide the context from the selector; ab10/ab00 from the mechanisms.
  bool selector_uses_cci() const { return variant != Variant::ab01 && variant != Variant::ab00; }
  bool mechanisms_use_cci() const { return variant != Variant::ab10 && variant != Variant::ab00; }
  void validate() const;
  bool operator==(const TransitionConfig&) const = default;
};

struct RunConfig {
  EnvKind env = EnvKind::shapes;
  TransitionConfig transition;
  int cnn_channels = 32;
  int encoder_hidden = 512;
  int decoder_hidden = 2048;

  double lr = 5e-4;
  int batch_size = 1024;
  int epochs = 100;
  double gamma = 1.0;
  int decoder_epochs = 100;
  int decoder_batch_size = 1024;
  int decoder_episodes = 0;  // 0 = every training episode

  std::uint64_t seed = 1;
  std::string train_data;
  std::string eval_data;
  std::string test_iid_data;
  std::string test_ood_data;
  std::string out_dir = "out";

  int in_channels() const { return 3 * frames_per_observation(env); }
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

// Table defaults. shapes: N=5, M=5, d_a=4; balls: N=3, M=7, d_a=0.
RunConfig default_config(EnvKind env);

// Flat `key = value` lines; '#' starts a comment. `env` selects the defaults
// the remaining keys override, wherever it appears. The result is validated.
RunConfig parse_config(std::string_view text);
std::string serialize_config(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);
// Apply one `key=value` override on top of an existing config. Not validated.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

}  // namespace rsm
