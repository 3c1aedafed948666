#pragma once

#include <vector>

#include "rsm/nn/layers.hpp"

namespace rsm::model {

using nn::ConstRef;
using nn::Index;
using nn::Matrix;

inline constexpr int kPixelValues = 3 * 50 * 50;

struct DecoderSpec {
  int slots = 5;
  int slot_dim = 4;
  int hidden = 2048;
};

template <typename S>
struct DecoderOutput {
  std::vector<Matrix<S>> per_slot;  // N entries, B x 7500 in (0, 1), CHW
  Matrix<S> sum;                    // before clamping
  Matrix<S> frame;                  // clamp(sum, 0, 1)
};

template <typename S>
struct DecoderCache {
  std::vector<nn::MlpCache<S>> mlp;
};

// One MLP per slot (same shape, separate weights); the frame is the clamped
// sum of the per-slot sigmoid images.
template <typename S>
class Decoder {
 public:
  Decoder() = default;
  Decoder(nn::ParamStore<S>& store, const std::string& name, const DecoderSpec& spec, Rng& rng);

  DecoderOutput<S> forward(const ConstRef<S>& slots, DecoderCache<S>* cache = nullptr) const;
  // dframe is applied to the unclamped sum.
  void backward(const DecoderCache<S>& cache, const DecoderOutput<S>& out, const ConstRef<S>& dframe);

  const DecoderSpec& spec() const { return spec_; }
  nn::Mlp<S>& slot_decoder(int i) { return mlps_[static_cast<std::size_t>(i)]; }

 private:
  DecoderSpec spec_;
  std::vector<nn::Mlp<S>> mlps_;
};

}  // namespace rsm::model
