#include "rsm/nn/params.hpp"

#include <cmath>
#include <cstring>

namespace rsm::nn {

template <typename S>
Param<S>& ParamStore<S>::create(const std::string& name, Index rows, Index cols) {
  if (contains(name)) throw ValidationError("duplicate parameter name " + name);
  auto p = std::make_unique<Param<S>>();
  p->name = name;
  p->value = Matrix<S>::Zero(rows, cols);
  p->grad = Matrix<S>::Zero(rows, cols);
  p->m = Matrix<S>::Zero(rows, cols);
  p->v = Matrix<S>::Zero(rows, cols);
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename S>
Param<S>& ParamStore<S>::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter " + std::string(name));
  return *params_[it->second];
}

template <typename S>
const Param<S>& ParamStore<S>::at(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter " + std::string(name));
  return *params_[it->second];
}

template <typename S>
Index ParamStore<S>::parameter_count() const {
  Index n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

template <typename S>
void ParamStore<S>::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

template <typename S>
void ParamStore<S>::adam_step(const AdamConfig& config) {
  for (const auto& p : params_) {
    if (!all_finite(p->grad)) throw NumericError("non-finite gradient in parameter " + p->name);
  }
  ++step_;
  const S b1 = static_cast<S>(config.beta1);
  const S b2 = static_cast<S>(config.beta2);
  const S c1 = static_cast<S>(1.0 - std::pow(config.beta1, static_cast<double>(step_)));
  const S c2 = static_cast<S>(1.0 - std::pow(config.beta2, static_cast<double>(step_)));
  const S lr = static_cast<S>(config.lr);
  const S eps = static_cast<S>(config.eps);
  for (auto& p : params_) {
    p->m = b1 * p->m + (S(1) - b1) * p->grad;
    p->v = b2 * p->v + (S(1) - b2) * p->grad.cwiseAbs2();
    p->value.array() -= lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + eps);
    p->grad.setZero();
  }
}

template <typename S>
void ParamStore<S>::copy_values_from(const ParamStore& other) {
  for (const auto& src : other.params_) {
    Param<S>& dst = at(src->name);
    if (dst.value.rows() != src->value.rows() || dst.value.cols() != src->value.cols()) {
      throw ValidationError("shape mismatch for parameter " + src->name);
    }
    dst.value = src->value;
  }
}

template <typename S>
bool ParamStore<S>::values_equal(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = *params_[i];
    const auto& b = *other.params_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) return false;
    if (a.value.size() > 0 &&
        std::memcmp(a.value.data(), b.value.data(), sizeof(S) * static_cast<std::size_t>(a.value.size())) != 0) {
      return false;
    }
  }
  return true;
}

template <typename S>
void init_uniform_fan_in(Matrix<S>& m, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(fan_in, 1)));
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(bound * (2.0 * uniform01(rng) - 1.0));
}

template class ParamStore<float>;
template class ParamStore<double>;
template void init_uniform_fan_in<float>(Matrix<float>&, Index, Rng&);
template void init_uniform_fan_in<double>(Matrix<double>&, Index, Rng&);

}  // namespace rsm::nn
