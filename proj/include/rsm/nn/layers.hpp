#pragma once

#include <string>
#include <vector>

#include "rsm/nn/params.hpp"

namespace rsm::nn {

// y = x W^T + b with W stored (out x in) and b stored (1 x out).
template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore<S>& store, const std::string& name, Index in, Index out, Rng& rng);

  Matrix<S> forward(const ConstRef<S>& x) const;
  // Accumulates dW, db; returns dx.
  Matrix<S> backward(const ConstRef<S>& x, const ConstRef<S>& dy, bool need_input_grad = true);

  Index in_features() const { return in_; }
  Index out_features() const { return out_; }
  Param<S>& weight() { return *w_; }
  Param<S>& bias() { return *b_; }
  const Param<S>& weight() const { return *w_; }
  const Param<S>& bias() const { return *b_; }

 private:
  Param<S>* w_ = nullptr;
  Param<S>* b_ = nullptr;
  Index in_ = 0;
  Index out_ = 0;
};

template <typename S>
struct LayerNormCache {
  Matrix<S> normalized;  // (x - mean) / std
  Matrix<S> inv_std;     // one column
};

// Per-row normalization over features with learned gain and bias.
template <typename S>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore<S>& store, const std::string& name, Index features);

  Matrix<S> forward(const ConstRef<S>& x, LayerNormCache<S>* cache) const;
  Matrix<S> backward(const LayerNormCache<S>& cache, const ConstRef<S>& dy);

  static constexpr double kEps = 1e-5;

 private:
  Param<S>* gain_ = nullptr;
  Param<S>* bias_ = nullptr;
};

enum class Activation { relu, none };

struct MlpSpec {
  std::vector<Index> dims;        // input, hidden..., output
  std::vector<bool> layer_norm;   // one flag per hidden layer
  Activation activation = Activation::relu;
};

// in -> hidden -> ReLU -> hidden -> LayerNorm -> ReLU -> out
MlpSpec block_mlp(Index in, Index hidden, Index out);

template <typename S>
struct MlpCache {
  std::vector<Matrix<S>> inputs;  // input of each linear layer
  std::vector<LayerNormCache<S>> norms;
};

// Affine layers with activation (and optional LayerNorm) between them; the
// last layer is linear.
template <typename S>
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore<S>& store, const std::string& name, const MlpSpec& spec, Rng& rng);

  Matrix<S> forward(const ConstRef<S>& x, MlpCache<S>* cache = nullptr) const;
  Matrix<S> backward(const MlpCache<S>& cache, const ConstRef<S>& dy, bool need_input_grad = true);

  const MlpSpec& spec() const { return spec_; }
  Linear<S>& layer(std::size_t i) { return linears_[i]; }
  std::size_t layer_count() const { return linears_.size(); }

 private:
  MlpSpec spec_;
  std::vector<Linear<S>> linears_;
  std::vector<LayerNorm<S>> norms_;  // indexed by hidden layer; unused when flag is off
};

struct ConvSpec {
  Index in_channels = 3;
  Index out_channels = 1;
  Index kernel = 1;
  Index stride = 1;
  Index padding = 0;
  Index in_height = 1;
  Index in_width = 1;

  Index out_height() const { return (in_height + 2 * padding - kernel) / stride + 1; }
  Index out_width() const { return (in_width + 2 * padding - kernel) / stride + 1; }
  Index patch_size() const { return in_channels * kernel * kernel; }
};

template <typename S>
struct ConvCache {
  Matrix<S> columns;  // (B * out_h * out_w) x (C * k * k)
  Index batch = 0;
};

// 2D convolution through im2col + one GEMM. Images are rows in CHW order.
template <typename S>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore<S>& store, const std::string& name, const ConvSpec& spec, Rng& rng);

  Matrix<S> forward(const ConstRef<S>& x, ConvCache<S>* cache) const;
  Matrix<S> backward(const ConvCache<S>& cache, const ConstRef<S>& dy, bool need_input_grad);

  const ConvSpec& spec() const { return spec_; }
 private:
  ConvSpec spec_;
  Param<S>* w_ = nullptr;  // out_channels x (C * k * k)
  Param<S>* b_ = nullptr;  // 1 x out_channels
};

template <typename S>
Matrix<S> relu(const ConstRef<S>& x);
// dy masked where the activation output was zero.
template <typename S>
Matrix<S> relu_backward(const ConstRef<S>& output, const ConstRef<S>& dy);
template <typename S>
Matrix<S> sigmoid(const ConstRef<S>& x);
template <typename S>
Matrix<S> sigmoid_backward(const ConstRef<S>& output, const ConstRef<S>& dy);

}  // namespace rsm::nn
