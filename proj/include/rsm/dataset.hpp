#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rsm/envs.hpp"

namespace rsm {

enum class EnvKind : std::uint8_t { shapes = 0, balls = 1 };
enum class Split : std::uint8_t { train = 0, eval = 1, test_iid = 2, test_ood = 3 };

std::string_view env_name(EnvKind env);
EnvKind parse_env(std::string_view text);
// CLI spelling: train, eval, test-iid, test-ood.
std::string_view split_name(Split split);
Split parse_split(std::string_view text);

// Environment parameters for one split.
struct EnvConfig {
  EnvKind env = EnvKind::shapes;
  int object_count = 5;  // objects (shapes) or balls
  double radius = 4.0;   // balls only
  int grid_size = envs::kGridSize;
};

// Shapes: 5 objects for train/eval/test-iid, 3 for test-ood.
// Balls: 3 balls, radius 4 train/test-iid, 5 eval, 3 test-ood.
EnvConfig protocol_config(EnvKind env, Split split);

// Paper-scale episode counts per split (shapes 1k/10k/10k, balls 5k/1k/1k).
int default_episode_count(EnvKind env, Split split);
inline constexpr int kDefaultEpisodeLength = 10;

// Frames stacked into one observation (1 for shapes, 2 for balls).
int frames_per_observation(EnvKind env);

struct Episode {
  EnvKind env = EnvKind::shapes;
  std::vector<envs::Frame> frames;         // T+1 (shapes) or T+2 (balls)
  std::vector<envs::GridAction> actions;   // T (shapes), empty (balls)
  int object_count = 0;
  double radius = 0.0;
  std::uint64_t seed = 0;

  // Number of transitions T.
  int length() const { return static_cast<int>(frames.size()) - frames_per_observation(env); }
  bool operator==(const Episode&) const = default;
};

struct DatasetHeader {
  EnvKind env = EnvKind::shapes;
  Split split = Split::train;
  std::uint32_t episode_count = 0;
  std::uint32_t episode_length = 0;
  std::uint64_t seed = 0;
  int object_count = 0;
  double radius = 0.0;
  std::vector<envs::ObjectSpec> object_specs;  // shapes only
  bool operator==(const DatasetHeader&) const = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<Episode> episodes;

  std::size_t transition_count() const;
  bool operator==(const Dataset&) const = default;
};

inline constexpr char kDatasetMagic[4] = {'R', 'S', 'M', 'D'};
inline constexpr std::uint16_t kDatasetVersion = 1;

// One rollout under a uniformly random policy. Deterministic in `seed`.
Episode generate_episode(const EnvConfig& config, int episode_length, std::uint64_t seed);

// Throws ValidationError when `config` does not follow the split protocol.
void validate_split_config(const EnvConfig& config, Split split);

// Episode i uses derive_seed(seed, i), so episodes can be generated in any
// order (or in parallel) with identical results.
Dataset generate_dataset(const EnvConfig& config, Split split, int count, int episode_length, std::uint64_t seed);
Dataset generate_dataset(EnvKind env, Split split, int count, int episode_length, std::uint64_t seed);

// Seed used for one split when all four are generated from a master seed.
std::uint64_t split_seed(std::uint64_t master_seed, Split split);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_dataset(const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::vector<std::uint8_t>& bytes);

}  // namespace rsm
