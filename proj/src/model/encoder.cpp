#include "rsm/model/encoder.hpp"

#include "rsm/envs.hpp"

namespace rsm::model {

template <typename S>
Encoder<S>::Encoder(nn::ParamStore<S>& store, const std::string& name, const EncoderSpec& spec, Rng& rng)
    : spec_(spec) {
  nn::ConvSpec c1;
  c1.in_channels = spec.in_channels;
  c1.out_channels = spec.cnn_channels;
  c1.kernel = 5;
  c1.stride = 5;
  c1.in_height = envs::kFrameHeight;
  c1.in_width = envs::kFrameWidth;
  conv1_ = nn::Conv2d<S>(store, name + ".conv1", c1, rng);
  nn::ConvSpec c2;
  c2.in_channels = spec.cnn_channels;
  c2.out_channels = spec.slots;
  c2.in_height = kMapSide;
  c2.in_width = kMapSide;
  conv2_ = nn::Conv2d<S>(store, name + ".conv2", c2, rng);
  mlp_ = nn::Mlp<S>(store, name + ".mlp", nn::block_mlp(kMapSize, spec.hidden, spec.slot_dim), rng);
}

template <typename S>
Matrix<S> Encoder<S>::feature_maps(const ConstRef<S>& obs) const {
  Matrix<S> h = nn::relu<S>(conv1_.forward(obs, nullptr));
  return nn::sigmoid<S>(conv2_.forward(h, nullptr));
}

template <typename S>
Matrix<S> Encoder<S>::forward(const ConstRef<S>& obs, EncoderCache<S>* cache) const {
  const Index batch = obs.rows();
  Matrix<S> h = nn::relu<S>(conv1_.forward(obs, cache ? &cache->conv1 : nullptr));
  Matrix<S> maps = nn::sigmoid<S>(conv2_.forward(h, cache ? &cache->conv2 : nullptr));
  Matrix<S> slots = mlp_.forward(nn::reshaped(maps, batch * spec_.slots, kMapSize), cache ? &cache->mlp : nullptr);
  if (cache) {
    cache->hidden = std::move(h);
    cache->maps = std::move(maps);
  }
  return nn::reshaped(slots, batch, static_cast<Index>(spec_.slots) * spec_.slot_dim);
}

template <typename S>
void Encoder<S>::backward(const EncoderCache<S>& cache, const ConstRef<S>& dslots) {
  const Index batch = dslots.rows();
  Matrix<S> ds = dslots;
  Matrix<S> dmaps = mlp_.backward(cache.mlp, nn::reshaped(ds, batch * spec_.slots, spec_.slot_dim), true);
  Matrix<S> dmaps_flat = nn::reshaped(dmaps, batch, static_cast<Index>(spec_.slots) * kMapSize);
  Matrix<S> dpre2 = nn::sigmoid_backward<S>(cache.maps, dmaps_flat);
  Matrix<S> dh = conv2_.backward(cache.conv2, dpre2, true);
  Matrix<S> dpre1 = nn::relu_backward<S>(cache.hidden, dh);
  conv1_.backward(cache.conv1, dpre1, false);
}

template class Encoder<float>;
template class Encoder<double>;

}  // namespace rsm::model
