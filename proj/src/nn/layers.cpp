#include "rsm/nn/layers.hpp"

#include <cmath>

namespace rsm::nn {

template <typename S>
Linear<S>::Linear(ParamStore<S>& store, const std::string& name, Index in, Index out, Rng& rng)
    : in_(in), out_(out) {
  w_ = &store.create(name + ".weight", out, in);
  b_ = &store.create(name + ".bias", 1, out);
  init_uniform_fan_in(w_->value, in, rng);
  init_uniform_fan_in(b_->value, in, rng);
}

template <typename S>
Matrix<S> Linear<S>::forward(const ConstRef<S>& x) const {
  if (x.cols() != in_) {
    throw ValidationError("linear " + w_->name + ": expected " + std::to_string(in_) + " input features, got " +
                          std::to_string(x.cols()));
  }
  Matrix<S> y(x.rows(), out_);
  y.noalias() = x * w_->value.transpose();
  y.rowwise() += b_->value.row(0);
  return y;
}

template <typename S>
Matrix<S> Linear<S>::backward(const ConstRef<S>& x, const ConstRef<S>& dy, bool need_input_grad) {
  w_->grad.noalias() += dy.transpose() * x;
  b_->grad += dy.colwise().sum();
  if (!need_input_grad) return Matrix<S>();
  Matrix<S> dx(dy.rows(), in_);
  dx.noalias() = dy * w_->value;
  return dx;
}

template <typename S>
LayerNorm<S>::LayerNorm(ParamStore<S>& store, const std::string& name, Index features) {
  gain_ = &store.create(name + ".gain", 1, features);
  bias_ = &store.create(name + ".bias", 1, features);
  gain_->value.setOnes();
}

template <typename S>
Matrix<S> LayerNorm<S>::forward(const ConstRef<S>& x, LayerNormCache<S>* cache) const {
  const Index n = x.cols();
  Matrix<S> xhat(x.rows(), n);
  Matrix<S> inv_std(x.rows(), 1);
  for (Index r = 0; r < x.rows(); ++r) {
    const S mean = x.row(r).mean();
    const S var = (x.row(r).array() - mean).square().sum() / static_cast<S>(n);
    const S is = S(1) / std::sqrt(var + static_cast<S>(kEps));
    inv_std(r, 0) = is;
    xhat.row(r) = (x.row(r).array() - mean) * is;
  }
  Matrix<S> y = xhat.array().rowwise() * gain_->value.row(0).array();
  y.rowwise() += bias_->value.row(0);
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename S>
Matrix<S> LayerNorm<S>::backward(const LayerNormCache<S>& cache, const ConstRef<S>& dy) {
  const auto& xhat = cache.normalized;
  gain_->grad += (dy.array() * xhat.array()).colwise().sum().matrix();
  bias_->grad += dy.colwise().sum();
  Matrix<S> dxhat = dy.array().rowwise() * gain_->value.row(0).array();
  Matrix<S> dx(dy.rows(), dy.cols());
  const S n = static_cast<S>(dy.cols());
  for (Index r = 0; r < dy.rows(); ++r) {
    const S mean_d = dxhat.row(r).sum() / n;
    const S mean_dx = dxhat.row(r).dot(xhat.row(r)) / n;
    dx.row(r) = cache.inv_std(r, 0) * (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx);
  }
  return dx;
}

MlpSpec block_mlp(Index in, Index hidden, Index out) {
  MlpSpec spec;
  spec.dims = {in, hidden, hidden, out};
  spec.layer_norm = {false, true};
  spec.activation = Activation::relu;
  return spec;
}

template <typename S>
Mlp<S>::Mlp(ParamStore<S>& store, const std::string& name, const MlpSpec& spec, Rng& rng) : spec_(spec) {
  if (spec.dims.size() < 2) throw ValidationError("mlp " + name + " needs at least one layer");
  const std::size_t layers = spec.dims.size() - 1;
  spec_.layer_norm.resize(layers - 1, false);
  for (std::size_t i = 0; i < layers; ++i) {
    linears_.emplace_back(store, name + ".fc" + std::to_string(i), spec.dims[i], spec.dims[i + 1], rng);
  }
  for (std::size_t i = 0; i + 1 < layers; ++i) {
    if (spec_.layer_norm[i]) norms_.emplace_back(store, name + ".ln" + std::to_string(i), spec.dims[i + 1]);
    else norms_.emplace_back();
  }
}

template <typename S>
Matrix<S> Mlp<S>::forward(const ConstRef<S>& x, MlpCache<S>* cache) const {
  const std::size_t layers = linears_.size();
  if (cache) {
    cache->inputs.assign(layers, Matrix<S>());
    cache->norms.assign(layers > 0 ? layers - 1 : 0, LayerNormCache<S>());
  }
  Matrix<S> h = x;
  for (std::size_t i = 0; i < layers; ++i) {
    Matrix<S> z = linears_[i].forward(h);
    if (cache) cache->inputs[i] = std::move(h);
    if (i + 1 < layers) {
      if (spec_.layer_norm[i]) z = norms_[i].forward(z, cache ? &cache->norms[i] : nullptr);
      if (spec_.activation == Activation::relu) z = z.cwiseMax(S(0));
    }
    h = std::move(z);
  }
  return h;
}

template <typename S>
Matrix<S> Mlp<S>::backward(const MlpCache<S>& cache, const ConstRef<S>& dy, bool need_input_grad) {
  Matrix<S> d = dy;
  for (std::size_t i = linears_.size(); i-- > 0;) {
    d = linears_[i].backward(cache.inputs[i], d, need_input_grad || i > 0);
    if (i == 0) break;
    // cache.inputs[i] is the activation output of hidden layer i - 1.
    if (spec_.activation == Activation::relu) d = (cache.inputs[i].array() > S(0)).select(d, S(0));
    if (spec_.layer_norm[i - 1]) d = norms_[i - 1].backward(cache.norms[i - 1], d);
  }
  return d;
}

template <typename S>
Conv2d<S>::Conv2d(ParamStore<S>& store, const std::string& name, const ConvSpec& spec, Rng& rng) : spec_(spec) {
  if (spec.out_height() < 1 || spec.out_width() < 1) throw ValidationError("conv " + name + " has empty output");
  w_ = &store.create(name + ".weight", spec.out_channels, spec.patch_size());
  b_ = &store.create(name + ".bias", 1, spec.out_channels);
  init_uniform_fan_in(w_->value, spec.patch_size(), rng);
  init_uniform_fan_in(b_->value, spec.patch_size(), rng);
}

template <typename S>
Matrix<S> Conv2d<S>::forward(const ConstRef<S>& x, ConvCache<S>* cache) const {
  const ConvSpec& c = spec_;
  const Index in_size = c.in_channels * c.in_height * c.in_width;
  if (x.cols() != in_size) {
    throw ValidationError("conv " + w_->name + ": expected " + std::to_string(in_size) + " input values, got " +
                          std::to_string(x.cols()));
  }
  const Index batch = x.rows();
  const Index oh = c.out_height(), ow = c.out_width(), positions = oh * ow;
  const Index k = c.kernel;
  Matrix<S> cols = Matrix<S>::Zero(batch * positions, c.patch_size());
  for (Index b = 0; b < batch; ++b) {
    for (Index oy = 0; oy < oh; ++oy) {
      for (Index ox = 0; ox < ow; ++ox) {
        S* row = cols.row(b * positions + oy * ow + ox).data();
        for (Index ch = 0; ch < c.in_channels; ++ch) {
          for (Index ky = 0; ky < k; ++ky) {
            const Index iy = oy * c.stride - c.padding + ky;
            if (iy < 0 || iy >= c.in_height) continue;
            for (Index kx = 0; kx < k; ++kx) {
              const Index ix = ox * c.stride - c.padding + kx;
              if (ix < 0 || ix >= c.in_width) continue;
              row[(ch * k + ky) * k + kx] = x(b, (ch * c.in_height + iy) * c.in_width + ix);
            }
          }
        }
      }
    }
  }
  Matrix<S> out_cols(batch * positions, c.out_channels);
  out_cols.noalias() = cols * w_->value.transpose();
  out_cols.rowwise() += b_->value.row(0);
  Matrix<S> y(batch, c.out_channels * positions);
  for (Index b = 0; b < batch; ++b) {
    MatrixMap<S>(y.row(b).data(), c.out_channels, positions) = out_cols.middleRows(b * positions, positions).transpose();
  }
  if (cache) {
    cache->columns = std::move(cols);
    cache->batch = batch;
  }
  return y;
}

template <typename S>
Matrix<S> Conv2d<S>::backward(const ConvCache<S>& cache, const ConstRef<S>& dy, bool need_input_grad) {
  const ConvSpec& c = spec_;
  const Index batch = cache.batch;
  const Index oh = c.out_height(), ow = c.out_width(), positions = oh * ow;
  const Index k = c.kernel;
  Matrix<S> dcols_out(batch * positions, c.out_channels);
  for (Index b = 0; b < batch; ++b) {
    dcols_out.middleRows(b * positions, positions) =
        ConstMatrixMap<S>(dy.row(b).data(), c.out_channels, positions).transpose();
  }
  w_->grad.noalias() += dcols_out.transpose() * cache.columns;
  b_->grad += dcols_out.colwise().sum();
  if (!need_input_grad) return Matrix<S>();
  Matrix<S> dcols(batch * positions, c.patch_size());
  dcols.noalias() = dcols_out * w_->value;
  Matrix<S> dx = Matrix<S>::Zero(batch, c.in_channels * c.in_height * c.in_width);
  for (Index b = 0; b < batch; ++b) {
    for (Index oy = 0; oy < oh; ++oy) {
      for (Index ox = 0; ox < ow; ++ox) {
        const S* row = dcols.row(b * positions + oy * ow + ox).data();
        for (Index ch = 0; ch < c.in_channels; ++ch) {
          for (Index ky = 0; ky < k; ++ky) {
            const Index iy = oy * c.stride - c.padding + ky;
            if (iy < 0 || iy >= c.in_height) continue;
            for (Index kx = 0; kx < k; ++kx) {
              const Index ix = ox * c.stride - c.padding + kx;
              if (ix < 0 || ix >= c.in_width) continue;
              dx(b, (ch * c.in_height + iy) * c.in_width + ix) += row[(ch * k + ky) * k + kx];
            }
          }
        }
      }
    }
  }
  return dx;
}

template <typename S>
Matrix<S> relu(const ConstRef<S>& x) {
  return x.cwiseMax(S(0));
}

template <typename S>
Matrix<S> relu_backward(const ConstRef<S>& output, const ConstRef<S>& dy) {
  return (output.array() > S(0)).select(dy, S(0));
}

template <typename S>
Matrix<S> sigmoid(const ConstRef<S>& x) {
  return x.unaryExpr([](S v) {
    // Split by sign to avoid exp overflow.
    if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
    const S e = std::exp(v);
    return e / (S(1) + e);
  });
}

template <typename S>
Matrix<S> sigmoid_backward(const ConstRef<S>& output, const ConstRef<S>& dy) {
  return (dy.array() * output.array() * (S(1) - output.array())).matrix();
}

#define RSM_INSTANTIATE_LAYERS(S)                                                  \
  template class Linear<S>;                                                        \
  template class LayerNorm<S>;                                                     \
  template class Mlp<S>;                                                           \
  template class Conv2d<S>;                                                        \
  template Matrix<S> relu<S>(const ConstRef<S>&);                                  \
  template Matrix<S> relu_backward<S>(const ConstRef<S>&, const ConstRef<S>&);     \
  template Matrix<S> sigmoid<S>(const ConstRef<S>&);                               \
  template Matrix<S> sigmoid_backward<S>(const ConstRef<S>&, const ConstRef<S>&);

RSM_INSTANTIATE_LAYERS(float)
RSM_INSTANTIATE_LAYERS(double)

}  // namespace rsm::nn
