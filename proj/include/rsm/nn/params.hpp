#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rsm/nn/tensor.hpp"
#include "rsm/rng.hpp"

namespace rsm::nn {

template <typename S>
struct Param {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;
  Matrix<S> m;  // Adam first moment
  Matrix<S> v;  // Adam second moment
};

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named parameters with gradient and moment buffers. Parameters live behind
// stable pointers, so layers can hold Param* across moves of the store.
template <typename S>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Param<S>& create(const std::string& name, Index rows, Index cols);
  Param<S>& at(std::string_view name);
  const Param<S>& at(std::string_view name) const;
  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  std::size_t size() const { return params_.size(); }
  Index parameter_count() const;
  Param<S>& operator[](std::size_t i) { return *params_[i]; }
  const Param<S>& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  // Bias-corrected Adam, then zero the gradients. Throws NumericError naming
  // the first parameter with a non-finite gradient.
  void adam_step(const AdamConfig& config);
  long step_count() const { return step_; }

  // Copy values by name; every name must exist here with the same shape.
  void copy_values_from(const ParamStore& other);
  bool values_equal(const ParamStore& other) const;

 private:
  std::vector<std::unique_ptr<Param<S>>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
  long step_ = 0;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename S>
void init_uniform_fan_in(Matrix<S>& m, Index fan_in, Rng& rng);

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace rsm::nn
