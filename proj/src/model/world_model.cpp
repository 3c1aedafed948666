#include "rsm/model/world_model.hpp"

namespace rsm::model {

EncoderSpec encoder_spec(const RunConfig& config) {
  EncoderSpec e;
  e.in_channels = config.in_channels();
  e.cnn_channels = config.cnn_channels;
  e.slots = config.transition.slots;
  e.slot_dim = config.transition.slot_dim;
  e.hidden = config.encoder_hidden;
  return e;
}

DecoderSpec decoder_spec(const RunConfig& config) {
  DecoderSpec d;
  d.slots = config.transition.slots;
  d.slot_dim = config.transition.slot_dim;
  d.hidden = config.decoder_hidden;
  return d;
}

template <typename S>
WorldModelT<S>::WorldModelT(const RunConfig& cfg, std::uint64_t init_seed) : config(cfg) {
  config.validate();
  Rng rng(derive_seed(init_seed, 11));
  encoder = Encoder<S>(store, "encoder", encoder_spec(config), rng);
  transition = Transition<S>(store, "transition", config.transition, rng);
}

template struct WorldModelT<float>;
template struct WorldModelT<double>;

DecoderModel::DecoderModel(const RunConfig& cfg, std::uint64_t init_seed) : config(cfg) {
  config.validate();
  Rng rng(derive_seed(init_seed, 12));
  decoder = Decoder<float>(store, "decoder", decoder_spec(config), rng);
}

nn::Checkpoint make_checkpoint(const RunConfig& config, const nn::ParamStore<float>& store) {
  nn::Checkpoint ckpt;
  ckpt.config = serialize_config(config);
  ckpt.tensors = nn::export_params(store);
  return ckpt;
}

WorldModel load_world_model(const nn::Checkpoint& ckpt) {
  WorldModel wm(parse_config(ckpt.config), 0);
  nn::import_params(wm.store, ckpt.tensors);
  return wm;
}

WorldModel load_world_model(const std::filesystem::path& path) { return load_world_model(nn::load_checkpoint(path)); }

DecoderModel load_decoder_model(const nn::Checkpoint& ckpt) {
  DecoderModel dm(parse_config(ckpt.config), 0);
  nn::import_params(dm.store, ckpt.tensors);
  return dm;
}

DecoderModel load_decoder_model(const std::filesystem::path& path) {
  return load_decoder_model(nn::load_checkpoint(path));
}

void check_compatible(const RunConfig& config, const DatasetHeader& header) {
  const int n = config.transition.slots;
  if (config.env != header.env) {
    throw ValidationError("config mismatch: checkpoint env " + std::string(env_name(config.env)) + " with slots=" +
                          std::to_string(n) + ", dataset env " + std::string(env_name(header.env)) + " with " +
                          std::to_string(header.object_count) + " objects");
  }
  if (header.object_count > n) {
    throw ValidationError("config mismatch: checkpoint slots=" + std::to_string(n) + " but dataset has " +
                          std::to_string(header.object_count) + " objects");
  }
  if (config.env == EnvKind::balls && header.object_count != n) {
    throw ValidationError("config mismatch: checkpoint slots=" + std::to_string(n) + " but dataset has " +
                          std::to_string(header.object_count) + " balls");
  }
}

void check_compatible(const RunConfig& world, const RunConfig& decoder) {
  if (world.env != decoder.env || world.transition.slots != decoder.transition.slots ||
      world.transition.slot_dim != decoder.transition.slot_dim) {
    throw ValidationError("config mismatch: world model (env " + std::string(env_name(world.env)) + ", slots=" +
                          std::to_string(world.transition.slots) + ", slot_dim=" +
                          std::to_string(world.transition.slot_dim) + ") vs decoder (env " +
                          std::string(env_name(decoder.env)) + ", slots=" + std::to_string(decoder.transition.slots) +
                          ", slot_dim=" + std::to_string(decoder.transition.slot_dim) + ")");
  }
}

namespace {

template <typename S>
void frame_to_chw(const envs::Frame& frame, S* out) {
  constexpr int plane = envs::kFrameHeight * envs::kFrameWidth;
  constexpr S scale = S(1) / S(255);
  for (int i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) out[c * plane + i] = static_cast<S>(frame.pixels[static_cast<std::size_t>(i * 3 + c)]) * scale;
  }
}

}  // namespace

template <typename S>
void observation_row(const Episode& episode, int t, S* out) {
  const int frames = frames_per_observation(episode.env);
  if (t < 0 || t + frames > static_cast<int>(episode.frames.size())) throw ValidationError("observation index out of range");
  for (int f = 0; f < frames; ++f) frame_to_chw(episode.frames[static_cast<std::size_t>(t + f)], out + f * kPixelValues);
}

template <typename S>
void target_frame_row(const Episode& episode, int t, S* out) {
  const int last = t + frames_per_observation(episode.env) - 1;
  if (t < 0 || last >= static_cast<int>(episode.frames.size())) throw ValidationError("frame index out of range");
  frame_to_chw(episode.frames[static_cast<std::size_t>(last)], out);
}

template <typename S>
Matrix<S> action_rows(const Episode& episode, int t, int slots, int action_dim) {
  Matrix<S> a = Matrix<S>::Zero(1, static_cast<Index>(slots) * action_dim);
  if (action_dim > 0) encode_action<S>(episode.actions.at(static_cast<std::size_t>(t)), slots, a.data());
  return a;
}

template void observation_row<float>(const Episode&, int, float*);
template void observation_row<double>(const Episode&, int, double*);
template void target_frame_row<float>(const Episode&, int, float*);
template void target_frame_row<double>(const Episode&, int, double*);
template Matrix<float> action_rows<float>(const Episode&, int, int, int);
template Matrix<double> action_rows<double>(const Episode&, int, int, int);

}  // namespace rsm::model
