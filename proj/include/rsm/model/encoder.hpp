#pragma once

#include "rsm/nn/layers.hpp"

namespace rsm::model {

using nn::Index;
using nn::Matrix;
using nn::ConstRef;

inline constexpr int kMapSide = 10;
inline constexpr int kMapSize = kMapSide * kMapSide;

struct EncoderSpec {
  int in_channels = 3;
  int cnn_channels = 32;
  int slots = 5;
  int slot_dim = 4;
  int hidden = 512;
};

template <typename S>
struct EncoderCache {
  nn::ConvCache<S> conv1;
  Matrix<S> hidden;  // ReLU output of the first conv
  nn::ConvCache<S> conv2;
  Matrix<S> maps;    // sigmoid masks, B x (N * 100)
  nn::MlpCache<S> mlp;
};

// Strided CNN producing one 10x10 mask per slot, then a shared MLP mapping
// each flattened mask to a slot vector.
template <typename S>
class Encoder {
 public:
  Encoder() = default;
  Encoder(nn::ParamStore<S>& store, const std::string& name, const EncoderSpec& spec, Rng& rng);

  // obs: B x (C * 50 * 50) in CHW order, values in [0, 1]. Returns B x (N * d_s).
  Matrix<S> forward(const ConstRef<S>& obs, EncoderCache<S>* cache = nullptr) const;
  Matrix<S> feature_maps(const ConstRef<S>& obs) const;
  // Accumulates parameter gradients; the observation gradient is not needed.
  void backward(const EncoderCache<S>& cache, const ConstRef<S>& dslots);

  const EncoderSpec& spec() const { return spec_; }

 private:
  EncoderSpec spec_;
  nn::Conv2d<S> conv1_;
  nn::Conv2d<S> conv2_;
  nn::Mlp<S> mlp_;
};

}  // namespace rsm::model
