#pragma once

#include "rsm/nn/tensor.hpp"
#include "rsm/rng.hpp"

namespace rsm::nn {

// train: hard one-hot of argmax(logits + Gumbel noise), softmax gradient.
// infer: one-hot of argmax(logits), lowest index on ties, no gradient.
// relaxed: soft sample in the forward pass as well; used by gradient checks.
enum class GumbelMode { train, infer, relaxed };

template <typename S>
struct GumbelResult {
  Matrix<S> weights;     // forward value per row: one-hot, or soft for relaxed
  Matrix<S> soft;        // softmax((logits + noise) / temperature)
  std::vector<int> index;
  GumbelMode mode = GumbelMode::infer;
  double temperature = 1.0;
};

// One row of `logits` per selection. Noise is drawn row by row from rng.
template <typename S>
GumbelResult<S> gumbel_select(const ConstRef<S>& logits, double temperature, GumbelMode mode, Rng& rng);

// Gradient w.r.t. logits given the gradient w.r.t. the forward weights.
template <typename S>
Matrix<S> gumbel_backward(const GumbelResult<S>& result, const ConstRef<S>& dweights);

// Standard Gumbel(0, 1) sample.
double sample_gumbel(Rng& rng);

template <typename S>
Matrix<S> one_hot(const std::vector<int>& index, Index classes);

}  // namespace rsm::nn
