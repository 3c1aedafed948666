#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rsm/error.hpp"

namespace rsm::nn {

using Index = Eigen::Index;

// All activations are batches of row vectors: one sample (or one slot) per row.
template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVector = Eigen::Matrix<S, 1, Eigen::Dynamic>;
template <typename S>
using ConstRef = Eigen::Ref<const Matrix<S>>;
template <typename S>
using MatrixMap = Eigen::Map<Matrix<S>>;
template <typename S>
using ConstMatrixMap = Eigen::Map<const Matrix<S>>;

// Row-major reinterpretation, e.g. (B, N*d) <-> (B*N, d).
template <typename S>
ConstMatrixMap<S> reshaped(const Matrix<S>& m, Index rows, Index cols) {
  return ConstMatrixMap<S>(m.data(), rows, cols);
}
template <typename S>
MatrixMap<S> reshaped(Matrix<S>& m, Index rows, Index cols) {
  return MatrixMap<S>(m.data(), rows, cols);
}

// Shape + float32 values; the interchange type for checkpoints and bindings.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  bool consistent() const { return numel() == static_cast<std::int64_t>(values.size()); }
  bool operator==(const Tensor&) const = default;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, std::string_view what) {
  if (!all_finite(m)) throw NumericError("non-finite values in " + std::string(what));
}

}  // namespace rsm::nn
