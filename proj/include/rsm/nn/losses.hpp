#pragma once

#include "rsm/nn/tensor.hpp"

namespace rsm::nn {

constexpr double kBceClamp = 1e-7;

// Mean over all elements.
template <typename S>
S mse(const ConstRef<S>& a, const ConstRef<S>& b);
// d mse / d a; the gradient w.r.t. b is the negation.
template <typename S>
Matrix<S> mse_grad(const ConstRef<S>& a, const ConstRef<S>& b);

// Mean binary cross-entropy; pred is clamped to [1e-7, 1 - 1e-7].
template <typename S>
S bce(const ConstRef<S>& pred, const ConstRef<S>& target);
// d bce / d pred, zero where the clamp is active.
template <typename S>
Matrix<S> bce_grad(const ConstRef<S>& pred, const ConstRef<S>& target);

}  // namespace rsm::nn

namespace rsm::nn {

// d bce / d pred evaluated at the clamped prediction everywhere, so values
// pushed past the clamp keep a gradient.
template <typename S>
Matrix<S> bce_grad_passthrough(const ConstRef<S>& pred, const ConstRef<S>& target);

}  // namespace rsm::nn
