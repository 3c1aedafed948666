#include "rsm/nn/losses.hpp"

#include <algorithm>
#include <cmath>

namespace rsm::nn {

namespace {

template <typename S>
void require_same_shape(const ConstRef<S>& a, const ConstRef<S>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (a.size() == 0) throw ValidationError(std::string(op) + ": empty input");
}

}  // namespace

template <typename S>
S mse(const ConstRef<S>& a, const ConstRef<S>& b) {
  require_same_shape<S>(a, b, "mse");
  return (a - b).squaredNorm() / static_cast<S>(a.size());
}

template <typename S>
Matrix<S> mse_grad(const ConstRef<S>& a, const ConstRef<S>& b) {
  require_same_shape<S>(a, b, "mse");
  return (a - b) * (S(2) / static_cast<S>(a.size()));
}

template <typename S>
S bce(const ConstRef<S>& pred, const ConstRef<S>& target) {
  require_same_shape<S>(pred, target, "bce");
  const S lo = static_cast<S>(kBceClamp), hi = S(1) - static_cast<S>(kBceClamp);
  S total = 0;
  for (Index r = 0; r < pred.rows(); ++r) {
    for (Index c = 0; c < pred.cols(); ++c) {
      const S p = std::clamp(pred(r, c), lo, hi);
      const S t = target(r, c);
      total -= t * std::log(p) + (S(1) - t) * std::log(S(1) - p);
    }
  }
  return total / static_cast<S>(pred.size());
}

template <typename S>
Matrix<S> bce_grad(const ConstRef<S>& pred, const ConstRef<S>& target) {
  require_same_shape<S>(pred, target, "bce");
  const S lo = static_cast<S>(kBceClamp), hi = S(1) - static_cast<S>(kBceClamp);
  const S n = static_cast<S>(pred.size());
  Matrix<S> g(pred.rows(), pred.cols());
  for (Index r = 0; r < pred.rows(); ++r) {
    for (Index c = 0; c < pred.cols(); ++c) {
      const S p = pred(r, c);
      if (p < lo || p > hi) {
        g(r, c) = S(0);
        continue;
      }
      const S t = target(r, c);
      g(r, c) = (p - t) / (p * (S(1) - p) * n);
    }
  }
  return g;
}

template <typename S>
Matrix<S> bce_grad_passthrough(const ConstRef<S>& pred, const ConstRef<S>& target) {
  require_same_shape<S>(pred, target, "bce");
  const S lo = static_cast<S>(kBceClamp), hi = S(1) - static_cast<S>(kBceClamp);
  const S n = static_cast<S>(pred.size());
  Matrix<S> g(pred.rows(), pred.cols());
  for (Index r = 0; r < pred.rows(); ++r) {
    for (Index c = 0; c < pred.cols(); ++c) {
      const S p = std::clamp(pred(r, c), lo, hi);
      g(r, c) = (p - target(r, c)) / (p * (S(1) - p) * n);
    }
  }
  return g;
}

template float mse<float>(const ConstRef<float>&, const ConstRef<float>&);
template double mse<double>(const ConstRef<double>&, const ConstRef<double>&);
template Matrix<float> mse_grad<float>(const ConstRef<float>&, const ConstRef<float>&);
template Matrix<double> mse_grad<double>(const ConstRef<double>&, const ConstRef<double>&);
template float bce<float>(const ConstRef<float>&, const ConstRef<float>&);
template double bce<double>(const ConstRef<double>&, const ConstRef<double>&);
template Matrix<float> bce_grad<float>(const ConstRef<float>&, const ConstRef<float>&);
template Matrix<double> bce_grad<double>(const ConstRef<double>&, const ConstRef<double>&);
template Matrix<float> bce_grad_passthrough<float>(const ConstRef<float>&, const ConstRef<float>&);
template Matrix<double> bce_grad_passthrough<double>(const ConstRef<double>&, const ConstRef<double>&);

}  // namespace rsm::nn
