#include "rsm/model/decoder.hpp"

#include <cmath>

namespace rsm::model {

template <typename S>
Decoder<S>::Decoder(nn::ParamStore<S>& store, const std::string& name, const DecoderSpec& spec, Rng& rng)
    : spec_(spec) {
  nn::MlpSpec mlp;
  mlp.dims = {spec.slot_dim, spec.hidden, kPixelValues};
  mlp.layer_norm = {false};
  // Initial per-slot outputs near 0.5 / N keep the summed frame near 0.5.
  const double target = 0.5 / spec.slots;
  const S bias = static_cast<S>(std::log(target / (1.0 - target)));
  for (int i = 0; i < spec.slots; ++i) {
    mlps_.emplace_back(store, name + ".slot" + std::to_string(i), mlp, rng);
    auto& out = mlps_.back().layer(1);
    out.bias().value.setConstant(bias);
  }
}

template <typename S>
DecoderOutput<S> Decoder<S>::forward(const ConstRef<S>& slots, DecoderCache<S>* cache) const {
  const Index ds = spec_.slot_dim;
  if (slots.cols() != static_cast<Index>(spec_.slots) * ds) {
    throw ValidationError("decoder expects " + std::to_string(spec_.slots) + " slots of " + std::to_string(ds) +
                          " values, got " + std::to_string(slots.cols()) + " values per row");
  }
  DecoderOutput<S> out;
  if (cache) cache->mlp.assign(static_cast<std::size_t>(spec_.slots), nn::MlpCache<S>());
  out.sum = Matrix<S>::Zero(slots.rows(), kPixelValues);
  for (int i = 0; i < spec_.slots; ++i) {
    Matrix<S> z = mlps_[static_cast<std::size_t>(i)].forward(slots.middleCols(i * ds, ds),
                                                            cache ? &cache->mlp[static_cast<std::size_t>(i)] : nullptr);
    Matrix<S> y = nn::sigmoid<S>(z);
    out.sum += y;
    out.per_slot.push_back(std::move(y));
  }
  out.frame = out.sum.cwiseMin(S(1)).cwiseMax(S(0));
  return out;
}

template <typename S>
void Decoder<S>::backward(const DecoderCache<S>& cache, const DecoderOutput<S>& out, const ConstRef<S>& dframe) {
  for (int i = 0; i < spec_.slots; ++i) {
    Matrix<S> dz = nn::sigmoid_backward<S>(out.per_slot[static_cast<std::size_t>(i)], dframe);
    mlps_[static_cast<std::size_t>(i)].backward(cache.mlp[static_cast<std::size_t>(i)], dz, false);
  }
}

template class Decoder<float>;
template class Decoder<double>;

}  // namespace rsm::model
