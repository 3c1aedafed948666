#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "rsm/model/world_model.hpp"

namespace rsm {

// Nearest pool row (squared Euclidean, smallest index on ties).
template <typename S>
nn::Index nearest_index(const S* pred, const nn::ConstRef<S>& pool);
template <typename S>
bool hits_at_1(const nn::ConstRef<S>& pred, const nn::ConstRef<S>& pool, nn::Index true_index);

enum class TransitionOverride { none, identity, oracle };

struct EvalOptions {
  std::vector<int> horizons{1, 5, 10};
  std::uint64_t seed = 1;
  bool random_mechanism = false;
  int forced_mechanism = -1;
  TransitionOverride override_transition = TransitionOverride::none;
  int max_episodes = 0;  // 0 = all
};

// counts[direction][is_target][mechanism]; direction 4 means no action.
struct MechanismUsage {
  int mechanisms = 0;
  std::vector<long long> counts;

  static constexpr int kRows = envs::kNumDirections + 1;
  explicit MechanismUsage(int m = 0) : mechanisms(m), counts(static_cast<std::size_t>(kRows * 2 * m), 0) {}
  long long& at(int direction, bool target, int mech) {
    return counts[static_cast<std::size_t>((direction * 2 + (target ? 1 : 0)) * mechanisms + mech)];
  }
  long long at(int direction, bool target, int mech) const {
    return counts[static_cast<std::size_t>((direction * 2 + (target ? 1 : 0)) * mechanisms + mech)];
  }
  long long total() const;
  // Mechanism with the most target-slot selections for a direction, or -1
  // when no mechanism holds a strict plurality.
  int plurality(int direction) const;
};

struct EvalReport {
  std::string env;
  std::string split;
  std::string variant;
  std::uint64_t seed = 0;
  int episodes = 0;
  int slots = 0;
  int steps = 0;
  std::vector<int> horizons;
  std::vector<double> hits;  // percent, one per horizon
  MechanismUsage usage;

  double at(int horizon) const;
};

std::string report_json(const EvalReport& report);
EvalReport parse_report_json(const std::string& text);

EvalReport eval_rollout(const model::WorldModel& world, const Dataset& data, const EvalOptions& options);
EvalReport random_mech_eval(const model::WorldModel& world, const Dataset& data, const EvalOptions& options);
MechanismUsage mechanism_usage(const model::WorldModel& world, const Dataset& data, std::uint64_t seed);

// Mean per-pixel BCE of decode(encode(obs_t)) against frame t over the first
// `max_episodes` episodes (0 = all).
double decoder_bce(const model::WorldModel& world, const model::DecoderModel& decoder, const Dataset& data,
                   int max_episodes = 0);

struct ReconstructionFiles {
  std::vector<std::filesystem::path> originals;
  std::vector<std::filesystem::path> predictions;  // horizons x (2 + N + M)
};

// Files per horizon h: truth_h<h>.png, pred_h<h>.png, pred_h<h>_slot<i>.png,
// forced_m<j>_h<h>.png; plus input_f<f>.png for the step-0 observation.
ReconstructionFiles export_reconstructions(const model::WorldModel& world, const model::DecoderModel& decoder,
                                           const Episode& episode, const std::vector<int>& horizons,
                                           const std::filesystem::path& out_dir, std::uint64_t seed);

// Cell holding most pixels nearest to each palette color, per object; -1 if
// the color is absent. Cells are numbered row * 5 + col.
std::vector<int> object_cells(const std::uint8_t* rgb, const std::vector<envs::ObjectSpec>& specs);

}  // namespace rsm
