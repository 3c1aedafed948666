#pragma once

#include <vector>

#include "rsm/config.hpp"
#include "rsm/nn/attention.hpp"
#include "rsm/nn/gumbel.hpp"
#include "rsm/nn/layers.hpp"

namespace rsm::model {

using nn::ConstRef;
using nn::Index;
using nn::Matrix;

template <typename S>
struct CciCache {
  Matrix<S> rows;  // (B * N) x (d_s + d_a)
  nn::AttentionCache<S> attention;
  nn::MlpCache<S> mixer;  // mlp_cci variant
  Matrix<S> pooled;
  nn::MlpCache<S> phi;
};

template <typename S>
struct StepRecord {
  std::vector<int> slot;  // slot index updated in each batch row
  Matrix<S> cci;
  CciCache<S> cci_cache;
  nn::MlpCache<S> selector;
  nn::GumbelResult<S> selection;
  bool selector_used = false;
  std::vector<nn::MlpCache<S>> mechanism;
  std::vector<Matrix<S>> mechanism_out;
};

template <typename S>
struct TransitionCache {
  std::vector<StepRecord<S>> steps;
  Matrix<S> actions;
  Matrix<S> parallel_cci;
  CciCache<S> parallel_cci_cache;
  Index batch = 0;
};

struct StepOptions {
  nn::GumbelMode mode = nn::GumbelMode::infer;
  int forced_mechanism = -1;     // >= 0 overrides every selection
  bool random_selection = false;  // uniform choice, selector bypassed
};

template <typename S>
struct StepOutput {
  Matrix<S> next;               // B x (N * d_s)
  std::vector<int> selection;   // B x N, mechanism chosen for each slot index
};

template <typename S>
struct Trajectory {
  std::vector<Matrix<S>> states;            // T + 1 entries, states[0] = slots0
  std::vector<std::vector<int>> selections;  // T entries, B x N each
};

// Context attention + phi, selector psi, and the mechanism bank g_1..g_M.
// Slot sets are rows of N * d_s values; actions rows of N * d_a values;
// orders are B x N slot permutations flattened row by row.
template <typename S>
class Transition {
 public:
  Transition() = default;
  Transition(nn::ParamStore<S>& store, const std::string& name, const TransitionConfig& config, Rng& rng);

  const TransitionConfig& config() const { return config_; }

  Matrix<S> compute_cci(const ConstRef<S>& buffer, const ConstRef<S>& actions, CciCache<S>* cache = nullptr) const;
  // Gradient w.r.t. the slot buffer.
  Matrix<S> cci_backward(const CciCache<S>& cache, const ConstRef<S>& dcci);

  // Rows of (cci, slot, action row) -> M logits. Variant zeroing applied here.
  Matrix<S> selector_logits(const ConstRef<S>& cci, const ConstRef<S>& slot, const ConstRef<S>& action_rows,
                            nn::MlpCache<S>* cache = nullptr) const;
  Matrix<S> mechanism_output(int j, const ConstRef<S>& cci, const ConstRef<S>& slot,
                             nn::MlpCache<S>* cache = nullptr) const;
  // Sum over j of weights(:, j) * g_j(cci, slot).
  Matrix<S> apply_mechanisms(const ConstRef<S>& cci, const ConstRef<S>& slot, const ConstRef<S>& weights) const;

  StepOutput<S> step(const ConstRef<S>& slots, const ConstRef<S>& actions, const std::vector<int>& order,
                     const StepOptions& options, Rng& rng, TransitionCache<S>* cache = nullptr) const;
  Matrix<S> step_backward(const TransitionCache<S>& cache, const ConstRef<S>& dnext);

  // The same order is used at every time step.
  Trajectory<S> rollout(const ConstRef<S>& slots0, const std::vector<Matrix<S>>& actions, const std::vector<int>& order,
                        const StepOptions& options, Rng& rng) const;

  nn::MultiheadAttention<S>& attention() { return attention_; }
  nn::Mlp<S>& mixer() { return mixer_; }
  nn::Mlp<S>& phi() { return phi_; }
  nn::Mlp<S>& selector() { return psi_; }
  nn::Mlp<S>& mechanism(int j) { return mechanisms_[static_cast<std::size_t>(j)]; }
  // Set every mechanism parameter to zero (residual identity).
  void zero_mechanisms();

 private:
  void check_inputs(const ConstRef<S>& slots, const ConstRef<S>& actions, const std::vector<int>& order) const;

  TransitionConfig config_;
  nn::MultiheadAttention<S> attention_;
  nn::Mlp<S> mixer_;
  nn::Mlp<S> phi_;
  nn::Mlp<S> psi_;
  std::vector<nn::Mlp<S>> mechanisms_;
};

// Per-slot action rows: the targeted slot gets the one-hot direction.
template <typename S>
void encode_action(const envs::GridAction& action, int slots, S* row);

bool is_permutation(const int* order, int n);

}  // namespace rsm::model
