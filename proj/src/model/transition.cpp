#include "rsm/model/transition.hpp"

#include <numeric>

namespace rsm::model {

namespace {

template <typename S>
Matrix<S> hcat(std::initializer_list<const Matrix<S>*> parts) {
  Index rows = -1, cols = 0;
  for (const auto* p : parts) {
    if (rows < 0) rows = p->rows();
    cols += p->cols();
  }
  Matrix<S> out(rows, cols);
  Index at = 0;
  for (const auto* p : parts) {
    if (p->cols() > 0) out.middleCols(at, p->cols()) = *p;
    at += p->cols();
  }
  return out;
}

// Rows of the N * width buffer selected per batch row by `slot`.
template <typename S>
Matrix<S> gather(const ConstRef<S>& buffer, const std::vector<int>& slot, Index width) {
  Matrix<S> out(buffer.rows(), width);
  if (width == 0) return out;
  for (Index b = 0; b < buffer.rows(); ++b) out.row(b) = buffer.block(b, slot[static_cast<std::size_t>(b)] * width, 1, width);
  return out;
}

}  // namespace

bool is_permutation(const int* order, int n) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (order[i] < 0 || order[i] >= n || seen[static_cast<std::size_t>(order[i])]) return false;
    seen[static_cast<std::size_t>(order[i])] = 1;
  }
  return true;
}

template <typename S>
void encode_action(const envs::GridAction& action, int slots, S* row) {
  std::fill(row, row + static_cast<std::ptrdiff_t>(slots) * envs::kNumDirections, S(0));
  if (action.object_id < 0 || action.object_id >= slots) return;
  row[action.object_id * envs::kNumDirections + static_cast<int>(action.direction)] = S(1);
}

template <typename S>
Transition<S>::Transition(nn::ParamStore<S>& store, const std::string& name, const TransitionConfig& config, Rng& rng)
    : config_(config) {
  config.validate();
  const Index ds = config.slot_dim, da = config.action_dim, dc = config.cci_dim, h = config.hidden;
  const Index dm = config.model_dim();
  if (config.variant == Variant::mlp_cci) {
    mixer_ = nn::Mlp<S>(store, name + ".mixer", nn::block_mlp(dm * config.slots, h, dm), rng);
  } else {
    attention_ = nn::MultiheadAttention<S>(store, name + ".attention", {dm, config.heads}, rng);
  }
  phi_ = nn::Mlp<S>(store, name + ".phi", nn::block_mlp(dm, h, dc), rng);
  psi_ = nn::Mlp<S>(store, name + ".psi", nn::block_mlp(dc + ds + da, h, config.mechanisms), rng);
  for (int j = 0; j < config.mechanisms; ++j) {
    mechanisms_.emplace_back(store, name + ".mech" + std::to_string(j), nn::block_mlp(dc + ds, h, ds), rng);
  }
}

template <typename S>
void Transition<S>::zero_mechanisms() {
  for (auto& g : mechanisms_) {
    for (std::size_t i = 0; i < g.layer_count(); ++i) {
      g.layer(i).weight().value.setZero();
      g.layer(i).bias().value.setZero();
    }
  }
}

template <typename S>
Matrix<S> Transition<S>::compute_cci(const ConstRef<S>& buffer, const ConstRef<S>& actions, CciCache<S>* cache) const {
  const Index n = config_.slots, ds = config_.slot_dim, da = config_.action_dim, dm = config_.model_dim();
  const Index batch = buffer.rows();
  Matrix<S> rows(batch * n, dm);
  rows.leftCols(ds) = nn::ConstMatrixMap<S>(buffer.data(), batch * n, ds);
  if (da > 0) rows.rightCols(da) = nn::ConstMatrixMap<S>(actions.data(), batch * n, da);
  Matrix<S> pooled;
  if (config_.variant == Variant::mlp_cci) {
    pooled = mixer_.forward(nn::reshaped(rows, batch, n * dm), cache ? &cache->mixer : nullptr);
  } else {
    Matrix<S> att = attention_.forward(rows, n, cache ? &cache->attention : nullptr);
    pooled.resize(batch, dm);
    for (Index b = 0; b < batch; ++b) pooled.row(b) = att.middleRows(b * n, n).colwise().mean();
  }
  Matrix<S> cci = phi_.forward(pooled, cache ? &cache->phi : nullptr);
  if (cache) {
    cache->rows = std::move(rows);
    cache->pooled = std::move(pooled);
  }
  return cci;
}

template <typename S>
Matrix<S> Transition<S>::cci_backward(const CciCache<S>& cache, const ConstRef<S>& dcci) {
  const Index n = config_.slots, ds = config_.slot_dim, dm = config_.model_dim();
  const Index batch = dcci.rows();
  Matrix<S> dpooled = phi_.backward(cache.phi, dcci, true);
  Matrix<S> drows;
  if (config_.variant == Variant::mlp_cci) {
    Matrix<S> dflat = mixer_.backward(cache.mixer, dpooled, true);
    drows = nn::reshaped(dflat, batch * n, dm);
  } else {
    Matrix<S> datt(batch * n, dm);
    const S inv_n = S(1) / static_cast<S>(n);
    for (Index b = 0; b < batch; ++b) datt.middleRows(b * n, n).rowwise() = dpooled.row(b) * inv_n;
    drows = attention_.backward(cache.attention, datt);
  }
  Matrix<S> dslots = drows.leftCols(ds);
  return nn::reshaped(dslots, batch, n * ds);
}

template <typename S>
Matrix<S> Transition<S>::selector_logits(const ConstRef<S>& cci, const ConstRef<S>& slot, const ConstRef<S>& action_rows,
                                         nn::MlpCache<S>* cache) const {
  Matrix<S> c = config_.selector_uses_cci() ? Matrix<S>(cci) : Matrix<S>::Zero(slot.rows(), config_.cci_dim);
  Matrix<S> s = slot, a = action_rows;
  return psi_.forward(hcat<S>({&c, &s, &a}), cache);
}

template <typename S>
Matrix<S> Transition<S>::mechanism_output(int j, const ConstRef<S>& cci, const ConstRef<S>& slot,
                                          nn::MlpCache<S>* cache) const {
  Matrix<S> c = config_.mechanisms_use_cci() ? Matrix<S>(cci) : Matrix<S>::Zero(slot.rows(), config_.cci_dim);
  Matrix<S> s = slot;
  return mechanisms_[static_cast<std::size_t>(j)].forward(hcat<S>({&c, &s}), cache);
}

template <typename S>
Matrix<S> Transition<S>::apply_mechanisms(const ConstRef<S>& cci, const ConstRef<S>& slot,
                                          const ConstRef<S>& weights) const {
  Matrix<S> delta = Matrix<S>::Zero(slot.rows(), config_.slot_dim);
  for (int j = 0; j < config_.mechanisms; ++j) {
    Matrix<S> out = mechanism_output(j, cci, slot);
    delta += (out.array().colwise() * weights.col(j).array()).matrix();
  }
  return delta;
}

template <typename S>
void Transition<S>::check_inputs(const ConstRef<S>& slots, const ConstRef<S>& actions,
                                 const std::vector<int>& order) const {
  const Index n = config_.slots;
  if (slots.cols() != n * config_.slot_dim) {
    throw ValidationError("transition expected " + std::to_string(n * config_.slot_dim) + " slot values per row, got " +
                          std::to_string(slots.cols()));
  }
  if (actions.rows() != slots.rows() || actions.cols() != n * config_.action_dim) {
    throw ValidationError("transition action rows do not match slots x action_dim");
  }
  if (static_cast<Index>(order.size()) != slots.rows() * n) throw ValidationError("order must hold B x N entries");
  for (Index b = 0; b < slots.rows(); ++b) {
    if (!is_permutation(order.data() + b * n, static_cast<int>(n))) {
      throw ValidationError("order row " + std::to_string(b) + " is not a permutation of the slots");
    }
  }
}

template <typename S>
StepOutput<S> Transition<S>::step(const ConstRef<S>& slots, const ConstRef<S>& actions, const std::vector<int>& order,
                                  const StepOptions& options, Rng& rng, TransitionCache<S>* cache) const {
  check_inputs(slots, actions, order);
  const Index n = config_.slots, ds = config_.slot_dim, da = config_.action_dim, m = config_.mechanisms;
  const Index batch = slots.rows();
  const bool parallel = config_.variant == Variant::parallel;
  const bool needs_cci = config_.selector_uses_cci() || config_.mechanisms_use_cci();
  const bool random = options.random_selection || config_.variant == Variant::random_mech;
  if (options.forced_mechanism >= m) throw ValidationError("forced mechanism index exceeds the mechanism count");
  const Matrix<S> original = slots;
  Matrix<S> buffer = slots;
  StepOutput<S> out;
  out.selection.assign(static_cast<std::size_t>(batch * n), 0);
  if (cache) {
    cache->steps.assign(static_cast<std::size_t>(n), StepRecord<S>());
    cache->actions = actions;
    cache->batch = batch;
  }
  Matrix<S> shared_cci;
  if (parallel) {
    shared_cci = needs_cci ? compute_cci(original, actions, cache ? &cache->parallel_cci_cache : nullptr)
                           : Matrix<S>::Zero(batch, config_.cci_dim);
    if (cache) cache->parallel_cci = shared_cci;
  }
  for (Index k = 0; k < n; ++k) {
    StepRecord<S> local;
    StepRecord<S>& rec = cache ? cache->steps[static_cast<std::size_t>(k)] : local;
    rec.slot.resize(static_cast<std::size_t>(batch));
    for (Index b = 0; b < batch; ++b) rec.slot[static_cast<std::size_t>(b)] = order[static_cast<std::size_t>(b * n + k)];
    const ConstRef<S> source = parallel ? ConstRef<S>(original) : ConstRef<S>(buffer);
    Matrix<S> x = gather<S>(source, rec.slot, ds);
    Matrix<S> a = gather<S>(actions, rec.slot, da);
    if (parallel) rec.cci = shared_cci;
    else if (needs_cci) rec.cci = compute_cci(buffer, actions, cache ? &rec.cci_cache : nullptr);
    else rec.cci = Matrix<S>::Zero(batch, config_.cci_dim);

    std::vector<int> chosen(static_cast<std::size_t>(batch));
    if (options.forced_mechanism >= 0) {
      std::fill(chosen.begin(), chosen.end(), options.forced_mechanism);
    } else if (random) {
      for (auto& c : chosen) c = static_cast<int>(rng() % static_cast<std::uint64_t>(m));
    } else {
      Matrix<S> logits = selector_logits(rec.cci, x, a, cache ? &rec.selector : nullptr);
      rec.selection = nn::gumbel_select<S>(logits, config_.temperature, options.mode, rng);
      rec.selector_used = true;
      chosen = rec.selection.index;
    }
    if (!rec.selector_used) {
      rec.selection.index = chosen;
      rec.selection.weights = nn::one_hot<S>(chosen, m);
      rec.selection.mode = nn::GumbelMode::infer;
    }
    const Matrix<S>& w = rec.selection.weights;
    Matrix<S> delta = Matrix<S>::Zero(batch, ds);
    if (cache) {
      rec.mechanism.assign(static_cast<std::size_t>(m), nn::MlpCache<S>());
      rec.mechanism_out.assign(static_cast<std::size_t>(m), Matrix<S>());
    }
    for (int j = 0; j < m; ++j) {
      if (!cache && w.col(j).isZero()) continue;
      Matrix<S> g = mechanism_output(j, rec.cci, x, cache ? &rec.mechanism[static_cast<std::size_t>(j)] : nullptr);
      delta += (g.array().colwise() * w.col(j).array()).matrix();
      if (cache) rec.mechanism_out[static_cast<std::size_t>(j)] = std::move(g);
    }
    for (Index b = 0; b < batch; ++b) {
      const int idx = rec.slot[static_cast<std::size_t>(b)];
      buffer.block(b, idx * ds, 1, ds) = x.row(b) + delta.row(b);
      out.selection[static_cast<std::size_t>(b * n + idx)] = chosen[static_cast<std::size_t>(b)];
    }
  }
  out.next = std::move(buffer);
  return out;
}

template <typename S>
Matrix<S> Transition<S>::step_backward(const TransitionCache<S>& cache, const ConstRef<S>& dnext) {
  const Index n = config_.slots, ds = config_.slot_dim, dc = config_.cci_dim, m = config_.mechanisms;
  const Index batch = cache.batch;
  const bool parallel = config_.variant == Variant::parallel;
  const bool needs_cci = config_.selector_uses_cci() || config_.mechanisms_use_cci();
  Matrix<S> dbuf = dnext;
  Matrix<S> dcci_total = Matrix<S>::Zero(batch, dc);
  for (Index k = n; k-- > 0;) {
    const StepRecord<S>& rec = cache.steps[static_cast<std::size_t>(k)];
    Matrix<S> ddelta = gather<S>(dbuf, rec.slot, ds);
    Matrix<S> dx = ddelta;
    Matrix<S> dcci = Matrix<S>::Zero(batch, dc);
    const Matrix<S>& w = rec.selection.weights;
    Matrix<S> dw(batch, m);
    for (int j = 0; j < m; ++j) {
      const Matrix<S>& g = rec.mechanism_out[static_cast<std::size_t>(j)];
      dw.col(j) = (ddelta.array() * g.array()).rowwise().sum().matrix();
      if (w.col(j).isZero()) continue;
      Matrix<S> dg = (ddelta.array().colwise() * w.col(j).array()).matrix();
      Matrix<S> din = mechanisms_[static_cast<std::size_t>(j)].backward(rec.mechanism[static_cast<std::size_t>(j)], dg, true);
      if (config_.mechanisms_use_cci()) dcci += din.leftCols(dc);
      dx += din.middleCols(dc, ds);
    }
    if (rec.selector_used && rec.selection.mode != nn::GumbelMode::infer) {
      Matrix<S> dlogits = nn::gumbel_backward<S>(rec.selection, dw);
      Matrix<S> din = psi_.backward(rec.selector, dlogits, true);
      if (config_.selector_uses_cci()) dcci += din.leftCols(dc);
      dx += din.middleCols(dc, ds);
    }
    for (Index b = 0; b < batch; ++b) {
      dbuf.block(b, rec.slot[static_cast<std::size_t>(b)] * ds, 1, ds) = dx.row(b);
    }
    if (!needs_cci) continue;
    if (parallel) dcci_total += dcci;
    else dbuf += cci_backward(rec.cci_cache, dcci);
  }
  if (parallel && needs_cci) dbuf += cci_backward(cache.parallel_cci_cache, dcci_total);
  return dbuf;
}

template <typename S>
Trajectory<S> Transition<S>::rollout(const ConstRef<S>& slots0, const std::vector<Matrix<S>>& actions,
                                     const std::vector<int>& order, const StepOptions& options, Rng& rng) const {
  Trajectory<S> traj;
  traj.states.push_back(slots0);
  for (const auto& a : actions) {
    auto out = step(traj.states.back(), a, order, options, rng, nullptr);
    traj.states.push_back(std::move(out.next));
    traj.selections.push_back(std::move(out.selection));
  }
  return traj;
}

template class Transition<float>;
template class Transition<double>;
template void encode_action<float>(const envs::GridAction&, int, float*);
template void encode_action<double>(const envs::GridAction&, int, double*);

}  // namespace rsm::model
