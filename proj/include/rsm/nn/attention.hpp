#pragma once

#include <string>

#include "rsm/nn/layers.hpp"

namespace rsm::nn {

struct AttentionSpec {
  Index model_dim = 8;
  Index num_heads = 2;

  Index head_dim() const { return num_heads > 0 ? model_dim / num_heads : 0; }
  void validate() const;
};

template <typename S>
struct AttentionCache {
  Matrix<S> input;
  Matrix<S> q, k, v;
  Matrix<S> weights;  // (groups * heads * N) x N, softmax rows
  Matrix<S> context;  // concatenated head outputs, before the output projection
  Index groups = 0;
  Index length = 0;
};

// Scaled dot-product self-attention without masking. The input holds `groups`
// independent sequences of `length` consecutive rows each.
template <typename S>
class MultiheadAttention {
 public:
  MultiheadAttention() = default;
  MultiheadAttention(ParamStore<S>& store, const std::string& name, const AttentionSpec& spec, Rng& rng);

  Matrix<S> forward(const ConstRef<S>& x, Index length, AttentionCache<S>* cache) const;
  Matrix<S> backward(const AttentionCache<S>& cache, const ConstRef<S>& dy);

  const AttentionSpec& spec() const { return spec_; }
  Linear<S>& query() { return q_; }
  Linear<S>& key() { return k_; }
  Linear<S>& value() { return v_; }
  Linear<S>& output() { return o_; }

 private:
  AttentionSpec spec_;
  Linear<S> q_, k_, v_, o_;
};

}  // namespace rsm::nn
