#pragma once

#include "rsm/config.hpp"
#include "rsm/dataset.hpp"
#include "rsm/model/decoder.hpp"
#include "rsm/model/encoder.hpp"
#include "rsm/model/transition.hpp"
#include "rsm/nn/checkpoint.hpp"

namespace rsm::model {

// Encoder + transition sharing one parameter store.
template <typename S>
struct WorldModelT {
  RunConfig config;
  nn::ParamStore<S> store;
  Encoder<S> encoder;
  Transition<S> transition;

  WorldModelT(const RunConfig& config, std::uint64_t init_seed);
};

using WorldModel = WorldModelT<float>;

struct DecoderModel {
  RunConfig config;
  nn::ParamStore<float> store;
  Decoder<float> decoder;

  DecoderModel(const RunConfig& config, std::uint64_t init_seed);
};

EncoderSpec encoder_spec(const RunConfig& config);
DecoderSpec decoder_spec(const RunConfig& config);

nn::Checkpoint make_checkpoint(const RunConfig& config, const nn::ParamStore<float>& store);
WorldModel load_world_model(const nn::Checkpoint& ckpt);
WorldModel load_world_model(const std::filesystem::path& path);
DecoderModel load_decoder_model(const nn::Checkpoint& ckpt);
DecoderModel load_decoder_model(const std::filesystem::path& path);

// Throws ValidationError naming both values when a dataset cannot be fed to
// a model built from `config`.
void check_compatible(const RunConfig& config, const DatasetHeader& header);
// World-model and decoder configs must agree on env, slots and slot_dim.
void check_compatible(const RunConfig& world, const RunConfig& decoder);

// Observation at step t: frame t (shapes) or frames t, t+1 stacked on
// channels (balls), as CHW floats in [0, 1].
template <typename S>
void observation_row(const Episode& episode, int t, S* out);
// The frame an observation at step t depicts last (decoder target).
template <typename S>
void target_frame_row(const Episode& episode, int t, S* out);
template <typename S>
Matrix<S> action_rows(const Episode& episode, int t, int slots, int action_dim);

}  // namespace rsm::model
