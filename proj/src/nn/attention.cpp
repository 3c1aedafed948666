#include "rsm/nn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsm::nn {

void AttentionSpec::validate() const {
  if (model_dim < 1 || num_heads < 1) throw ValidationError("attention needs model_dim >= 1 and num_heads >= 1");
  if (model_dim % num_heads != 0) {
    throw ValidationError("attention model_dim " + std::to_string(model_dim) + " is not divisible by " +
                          std::to_string(num_heads) + " heads");
  }
}

template <typename S>
MultiheadAttention<S>::MultiheadAttention(ParamStore<S>& store, const std::string& name, const AttentionSpec& spec,
                                          Rng& rng)
    : spec_(spec) {
  spec.validate();
  const Index d = spec.model_dim;
  q_ = Linear<S>(store, name + ".q", d, d, rng);
  k_ = Linear<S>(store, name + ".k", d, d, rng);
  v_ = Linear<S>(store, name + ".v", d, d, rng);
  o_ = Linear<S>(store, name + ".out", d, d, rng);
}

template <typename S>
Matrix<S> MultiheadAttention<S>::forward(const ConstRef<S>& x, Index length, AttentionCache<S>* cache) const {
  const Index d = spec_.model_dim;
  if (length < 1 || x.rows() % length != 0) {
    throw ValidationError("attention input rows " + std::to_string(x.rows()) + " are not a multiple of length " +
                          std::to_string(length));
  }
  if (x.cols() != d) {
    throw ValidationError("attention expected model_dim " + std::to_string(d) + ", got " + std::to_string(x.cols()));
  }
  const Index groups = x.rows() / length;
  const Index heads = spec_.num_heads, hd = spec_.head_dim();
  const S scale = S(1) / std::sqrt(static_cast<S>(hd));
  Matrix<S> q = q_.forward(x), k = k_.forward(x), v = v_.forward(x);
  Matrix<S> weights(groups * heads * length, length);
  Matrix<S> context = Matrix<S>::Zero(x.rows(), d);
  for (Index g = 0; g < groups; ++g) {
    const Index base = g * length;
    for (Index h = 0; h < heads; ++h) {
      const Index off = h * hd;
      for (Index i = 0; i < length; ++i) {
        S* w = weights.row((g * heads + h) * length + i).data();
        S mx = -std::numeric_limits<S>::infinity();
        for (Index j = 0; j < length; ++j) {
          S dot = 0;
          for (Index c = 0; c < hd; ++c) dot += q(base + i, off + c) * k(base + j, off + c);
          w[j] = dot * scale;
          mx = std::max(mx, w[j]);
        }
        S sum = 0;
        for (Index j = 0; j < length; ++j) {
          w[j] = std::exp(w[j] - mx);
          sum += w[j];
        }
        for (Index j = 0; j < length; ++j) w[j] /= sum;
        for (Index j = 0; j < length; ++j) {
          for (Index c = 0; c < hd; ++c) context(base + i, off + c) += w[j] * v(base + j, off + c);
        }
      }
    }
  }
  Matrix<S> y = o_.forward(context);
  if (cache) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->weights = std::move(weights);
    cache->context = std::move(context);
    cache->groups = groups;
    cache->length = length;
  }
  return y;
}

template <typename S>
Matrix<S> MultiheadAttention<S>::backward(const AttentionCache<S>& cache, const ConstRef<S>& dy) {
  const Index d = spec_.model_dim, heads = spec_.num_heads, hd = spec_.head_dim();
  const Index length = cache.length;
  const S scale = S(1) / std::sqrt(static_cast<S>(hd));
  Matrix<S> dcontext = o_.backward(cache.context, dy, true);
  Matrix<S> dq = Matrix<S>::Zero(dy.rows(), d), dk = Matrix<S>::Zero(dy.rows(), d), dv = Matrix<S>::Zero(dy.rows(), d);
  std::vector<S> dw(static_cast<std::size_t>(length));
  for (Index g = 0; g < cache.groups; ++g) {
    const Index base = g * length;
    for (Index h = 0; h < heads; ++h) {
      const Index off = h * hd;
      for (Index i = 0; i < length; ++i) {
        const S* w = cache.weights.row((g * heads + h) * length + i).data();
        S inner = 0;
        for (Index j = 0; j < length; ++j) {
          S acc = 0;
          for (Index c = 0; c < hd; ++c) {
            acc += dcontext(base + i, off + c) * cache.v(base + j, off + c);
            dv(base + j, off + c) += w[j] * dcontext(base + i, off + c);
          }
          dw[static_cast<std::size_t>(j)] = acc;
          inner += acc * w[j];
        }
        for (Index j = 0; j < length; ++j) {
          const S ds = w[j] * (dw[static_cast<std::size_t>(j)] - inner) * scale;
          for (Index c = 0; c < hd; ++c) {
            dq(base + i, off + c) += ds * cache.k(base + j, off + c);
            dk(base + j, off + c) += ds * cache.q(base + i, off + c);
          }
        }
      }
    }
  }
  Matrix<S> dx = q_.backward(cache.input, dq, true);
  dx += k_.backward(cache.input, dk, true);
  dx += v_.backward(cache.input, dv, true);
  return dx;
}

template class MultiheadAttention<float>;
template class MultiheadAttention<double>;

}  // namespace rsm::nn
