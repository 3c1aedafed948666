#include "rsm/nn/gumbel.hpp"

#include <cmath>
#include <string>

namespace rsm::nn {

double sample_gumbel(Rng& rng) {
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  return -std::log(-std::log(u));
}

template <typename S>
Matrix<S> one_hot(const std::vector<int>& index, Index classes) {
  Matrix<S> out = Matrix<S>::Zero(static_cast<Index>(index.size()), classes);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= classes) throw ValidationError("one-hot index out of range");
    out(static_cast<Index>(r), index[r]) = S(1);
  }
  return out;
}

template <typename S>
GumbelResult<S> gumbel_select(const ConstRef<S>& logits, double temperature, GumbelMode mode, Rng& rng) {
  if (!(temperature > 0.0)) throw ValidationError("gumbel temperature must be positive");
  require_finite(logits, "gumbel logits");
  const Index rows = logits.rows(), m = logits.cols();
  if (m < 1) throw ValidationError("gumbel_select needs at least one class");
  GumbelResult<S> r;
  r.mode = mode;
  r.temperature = temperature;
  r.index.resize(static_cast<std::size_t>(rows));
  r.soft.resize(rows, m);
  const S inv_t = static_cast<S>(1.0 / temperature);
  for (Index i = 0; i < rows; ++i) {
    RowVector<S> perturbed = logits.row(i);
    if (mode != GumbelMode::infer) {
      for (Index j = 0; j < m; ++j) perturbed(j) += static_cast<S>(sample_gumbel(rng));
    }
    Index best = 0;
    for (Index j = 1; j < m; ++j) {
      if (perturbed(j) > perturbed(best)) best = j;
    }
    r.index[static_cast<std::size_t>(i)] = static_cast<int>(best);
    RowVector<S> z = (perturbed.array() - perturbed(best)) * inv_t;
    z = z.array().exp();
    r.soft.row(i) = z / z.sum();
  }
  r.weights = mode == GumbelMode::relaxed ? r.soft : one_hot<S>(r.index, m);
  return r;
}

template <typename S>
Matrix<S> gumbel_backward(const GumbelResult<S>& result, const ConstRef<S>& dweights) {
  if (result.mode == GumbelMode::infer) return Matrix<S>::Zero(dweights.rows(), dweights.cols());
  const S inv_t = static_cast<S>(1.0 / result.temperature);
  const auto& p = result.soft;
  Matrix<S> inner = (dweights.array() * p.array()).rowwise().sum();
  Matrix<S> d = p.array() * (dweights.array().colwise() - inner.col(0).array());
  return d * inv_t;
}

template GumbelResult<float> gumbel_select<float>(const ConstRef<float>&, double, GumbelMode, Rng&);
template GumbelResult<double> gumbel_select<double>(const ConstRef<double>&, double, GumbelMode, Rng&);
template Matrix<float> gumbel_backward<float>(const GumbelResult<float>&, const ConstRef<float>&);
template Matrix<double> gumbel_backward<double>(const GumbelResult<double>&, const ConstRef<double>&);
template Matrix<float> one_hot<float>(const std::vector<int>&, Index);
template Matrix<double> one_hot<double>(const std::vector<int>&, Index);

}  // namespace rsm::nn
