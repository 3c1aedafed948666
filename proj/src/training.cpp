#include "rsm/training.hpp"

#include <chrono>
#include <cmath>
#include <json.hpp>

#include "rsm/nn/losses.hpp"

namespace rsm {

using nn::ConstRef;
using nn::Index;
using nn::Matrix;

std::string metric_json(const MetricRecord& r) {
  nlohmann::json j;
  j["phase"] = r.phase;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

template <typename S>
ContrastiveResult<S> contrastive_loss(const ConstRef<S>& pred, const ConstRef<S>& target, const ConstRef<S>& negative,
                                      double gamma, bool with_grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || negative.rows() != target.rows() ||
      negative.cols() != target.cols()) {
    throw ValidationError("contrastive_loss: shape mismatch");
  }
  const Index batch = pred.rows(), k = pred.cols();
  ContrastiveResult<S> r;
  if (with_grad) {
    r.dpred.resize(batch, k);
    r.dtarget.resize(batch, k);
    r.dnegative = Matrix<S>::Zero(batch, k);
  }
  const S scale = S(2) / static_cast<S>(k * batch);
  double total = 0.0, pos = 0.0, neg = 0.0;
  for (Index b = 0; b < batch; ++b) {
    const auto dp = pred.row(b) - target.row(b);
    const auto dn = negative.row(b) - target.row(b);
    const double h = static_cast<double>(dp.squaredNorm()) / static_cast<double>(k);
    const double hn = static_cast<double>(dn.squaredNorm()) / static_cast<double>(k);
    const bool active = gamma - hn > 0.0;
    total += h + (active ? gamma - hn : 0.0);
    pos += h;
    neg += hn;
    if (with_grad) {
      r.dpred.row(b) = dp * scale;
      r.dtarget.row(b) = -dp * scale;
      if (active) {
        r.dnegative.row(b) = -dn * scale;
        r.dtarget.row(b) += dn * scale;
      }
    }
  }
  r.loss = total / static_cast<double>(batch);
  r.positive = pos / static_cast<double>(batch);
  r.negative = neg / static_cast<double>(batch);
  return r;
}

template ContrastiveResult<float> contrastive_loss<float>(const ConstRef<float>&, const ConstRef<float>&,
                                                          const ConstRef<float>&, double, bool);
template ContrastiveResult<double> contrastive_loss<double>(const ConstRef<double>&, const ConstRef<double>&,
                                                            const ConstRef<double>&, double, bool);

std::vector<int> negative_sample(int n, Rng& rng) {
  if (n < 2) throw ValidationError("negative sampling needs a batch of at least 2, got " + std::to_string(n));
  auto has_fixed_point = [](const std::vector<int>& p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == static_cast<int>(i)) return true;
    }
    return false;
  };
  auto p = random_permutation(n, rng);
  if (!has_fixed_point(p)) return p;
  p = random_permutation(n, rng);
  if (!has_fixed_point(p)) return p;
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = (i + 1) % n;
  return p;
}

std::vector<TransitionIndex> transition_indices(const Dataset& data, int max_episodes) {
  std::vector<TransitionIndex> out;
  const int episodes = max_episodes > 0 ? std::min<int>(max_episodes, static_cast<int>(data.episodes.size()))
                                        : static_cast<int>(data.episodes.size());
  for (int e = 0; e < episodes; ++e) {
    for (int t = 0; t < data.episodes[static_cast<std::size_t>(e)].length(); ++t) out.push_back({e, t});
  }
  return out;
}

template <typename S>
Matrix<S> observation_batch(const Dataset& data, const std::vector<TransitionIndex>& items, int offset) {
  const Index width = static_cast<Index>(3 * frames_per_observation(data.header.env)) * 2500;
  Matrix<S> out(static_cast<Index>(items.size()), width);
  for (std::size_t i = 0; i < items.size(); ++i) {
    model::observation_row<S>(data.episodes[static_cast<std::size_t>(items[i].episode)], items[i].t + offset,
                              out.row(static_cast<Index>(i)).data());
  }
  return out;
}

template <typename S>
Matrix<S> action_batch(const Dataset& data, const std::vector<TransitionIndex>& items, int slots, int action_dim) {
  Matrix<S> out = Matrix<S>::Zero(static_cast<Index>(items.size()), static_cast<Index>(slots) * action_dim);
  if (action_dim == 0) return out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& ep = data.episodes[static_cast<std::size_t>(items[i].episode)];
    model::encode_action<S>(ep.actions.at(static_cast<std::size_t>(items[i].t)), slots,
                            out.row(static_cast<Index>(i)).data());
  }
  return out;
}

template <typename S>
Matrix<S> target_frame_batch(const Dataset& data, const std::vector<TransitionIndex>& items, int offset) {
  Matrix<S> out(static_cast<Index>(items.size()), model::kPixelValues);
  for (std::size_t i = 0; i < items.size(); ++i) {
    model::target_frame_row<S>(data.episodes[static_cast<std::size_t>(items[i].episode)], items[i].t + offset,
                               out.row(static_cast<Index>(i)).data());
  }
  return out;
}

template Matrix<float> observation_batch<float>(const Dataset&, const std::vector<TransitionIndex>&, int);
template Matrix<double> observation_batch<double>(const Dataset&, const std::vector<TransitionIndex>&, int);
template Matrix<float> action_batch<float>(const Dataset&, const std::vector<TransitionIndex>&, int, int);
template Matrix<double> action_batch<double>(const Dataset&, const std::vector<TransitionIndex>&, int, int);
template Matrix<float> target_frame_batch<float>(const Dataset&, const std::vector<TransitionIndex>&, int);
template Matrix<double> target_frame_batch<double>(const Dataset&, const std::vector<TransitionIndex>&, int);

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t begin = 0; begin < n; begin += batch) out.emplace_back(begin, std::min(n, begin + batch));
  if (out.size() >= 2 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = n;
    out.pop_back();
  }
  return out;
}

template <typename S>
double world_model_step(model::WorldModelT<S>& wm, const ConstRef<S>& obs_t, const ConstRef<S>& obs_next,
                        const ConstRef<S>& actions, Rng& rng, nn::GumbelMode mode, bool update) {
  const Index batch = obs_t.rows();
  const int n = wm.config.transition.slots;
  Matrix<S> obs(2 * batch, obs_t.cols());
  obs.topRows(batch) = obs_t;
  obs.bottomRows(batch) = obs_next;
  model::EncoderCache<S> enc_cache;
  Matrix<S> enc = wm.encoder.forward(obs, &enc_cache);
  Matrix<S> s_t = enc.topRows(batch);
  Matrix<S> s_next = enc.bottomRows(batch);

  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(batch * n));
  for (Index b = 0; b < batch; ++b) {
    auto p = random_permutation(n, rng);
    order.insert(order.end(), p.begin(), p.end());
  }
  model::TransitionCache<S> tcache;
  model::StepOptions options;
  options.mode = mode;
  auto pred = wm.transition.step(s_t, actions, order, options, rng, &tcache);

  const auto perm = negative_sample(static_cast<int>(batch), rng);
  Matrix<S> negative(batch, s_t.cols());
  for (Index b = 0; b < batch; ++b) negative.row(b) = s_t.row(perm[static_cast<std::size_t>(b)]);

  auto loss = contrastive_loss<S>(pred.next, s_next, negative, wm.config.gamma, true);
  if (!std::isfinite(loss.loss)) {
    throw NumericError("non-finite contrastive loss (H=" + std::to_string(loss.positive) +
                       ", H~=" + std::to_string(loss.negative) + ")");
  }
  Matrix<S> ds_t = wm.transition.step_backward(tcache, loss.dpred);
  for (Index b = 0; b < batch; ++b) ds_t.row(perm[static_cast<std::size_t>(b)]) += loss.dnegative.row(b);
  Matrix<S> denc(2 * batch, s_t.cols());
  denc.topRows(batch) = ds_t;
  denc.bottomRows(batch) = loss.dtarget;
  wm.encoder.backward(enc_cache, denc);
  if (update) {
    nn::AdamConfig adam;
    adam.lr = wm.config.lr;
    wm.store.adam_step(adam);
  }
  return loss.loss;
}

template double world_model_step<float>(model::WorldModelT<float>&, const ConstRef<float>&, const ConstRef<float>&,
                                        const ConstRef<float>&, Rng&, nn::GumbelMode, bool);
template double world_model_step<double>(model::WorldModelT<double>&, const ConstRef<double>&,
                                         const ConstRef<double>&, const ConstRef<double>&, Rng&, nn::GumbelMode, bool);

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

model::WorldModel train_world_model(const Dataset& train, const RunConfig& config, const MetricSink& sink,
                                    TrainReport* report) {
  config.validate();
  model::check_compatible(config, train.header);
  auto items = transition_indices(train);
  if (items.size() < 2) throw ValidationError("training needs at least two transitions");
  model::WorldModel wm(config, derive_seed(config.seed, 1));
  Rng shuffle_rng(derive_seed(config.seed, 2));
  Rng step_rng(derive_seed(config.seed, 3));
  const auto start = std::chrono::steady_clock::now();
  const int n = config.transition.slots, da = config.transition.action_dim;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto perm = random_permutation(static_cast<int>(items.size()), shuffle_rng);
    double total = 0.0;
    for (auto [begin, end] : batch_ranges(items.size(), static_cast<std::size_t>(config.batch_size))) {
      std::vector<TransitionIndex> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(items[static_cast<std::size_t>(perm[i])]);
      Matrix<float> obs_t = observation_batch<float>(train, batch, 0);
      Matrix<float> obs_next = observation_batch<float>(train, batch, 1);
      Matrix<float> actions = action_batch<float>(train, batch, n, da);
      double loss = 0.0;
      try {
        loss = world_model_step<float>(wm, obs_t, obs_next, actions, step_rng, nn::GumbelMode::train, true);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(begin));
      }
      if (report && epoch == 1 && begin == 0) report->initial_loss = loss;
      total += loss * static_cast<double>(end - begin);
    }
    const double mean = total / static_cast<double>(items.size());
    if (report) report->epoch_loss.push_back(mean);
    if (sink) sink({"world_model", epoch, mean, elapsed_ms(start)});
  }
  return wm;
}

model::DecoderModel initial_decoder(const RunConfig& config) {
  return model::DecoderModel(config, derive_seed(config.seed, 5));
}

model::DecoderModel train_decoder(const Dataset& train, const model::WorldModel& world, const RunConfig& config,
                                  const MetricSink& sink, TrainReport* report) {
  config.validate();
  model::check_compatible(world.config, config);
  model::check_compatible(world.config, train.header);
  auto items = transition_indices(train, config.decoder_episodes);
  if (items.empty()) throw ValidationError("decoder training needs at least one transition");
  const int n = world.config.transition.slots, da = world.config.transition.action_dim;

  // Frozen backbone: slot states are computed once.
  Rng order_rng(derive_seed(config.seed, 4));
  const Index k = static_cast<Index>(n) * world.config.transition.slot_dim;
  Matrix<float> s_t(static_cast<Index>(items.size()), k), s_next(static_cast<Index>(items.size()), k);
  for (auto [begin, end] : batch_ranges(items.size(), 1024)) {
    std::vector<TransitionIndex> batch(items.begin() + static_cast<std::ptrdiff_t>(begin),
                                       items.begin() + static_cast<std::ptrdiff_t>(end));
    Matrix<float> enc = world.encoder.forward(observation_batch<float>(train, batch, 0));
    std::vector<int> order;
    for (std::size_t i = begin; i < end; ++i) {
      auto p = random_permutation(n, order_rng);
      order.insert(order.end(), p.begin(), p.end());
    }
    model::StepOptions options;
    auto pred = world.transition.step(enc, action_batch<float>(train, batch, n, da), order, options, order_rng);
    s_t.middleRows(static_cast<Index>(begin), static_cast<Index>(end - begin)) = enc;
    s_next.middleRows(static_cast<Index>(begin), static_cast<Index>(end - begin)) = pred.next;
  }

  model::DecoderModel dm = initial_decoder(config);
  Rng shuffle_rng(derive_seed(config.seed, 6));
  nn::AdamConfig adam;
  adam.lr = config.lr;
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= config.decoder_epochs; ++epoch) {
    const auto perm = random_permutation(static_cast<int>(items.size()), shuffle_rng);
    double total = 0.0;
    for (auto [begin, end] : batch_ranges(items.size(), static_cast<std::size_t>(config.decoder_batch_size))) {
      const Index b = static_cast<Index>(end - begin);
      std::vector<TransitionIndex> batch;
      Matrix<float> slots(2 * b, k);
      for (std::size_t i = begin; i < end; ++i) {
        const auto src = static_cast<Index>(perm[i]);
        batch.push_back(items[static_cast<std::size_t>(src)]);
        slots.row(static_cast<Index>(i - begin)) = s_t.row(src);
        slots.row(b + static_cast<Index>(i - begin)) = s_next.row(src);
      }
      Matrix<float> target(2 * b, model::kPixelValues);
      target.topRows(b) = target_frame_batch<float>(train, batch, 0);
      target.bottomRows(b) = target_frame_batch<float>(train, batch, 1);
      model::DecoderCache<float> cache;
      auto out = dm.decoder.forward(slots, &cache);
      const double l1 = nn::bce<float>(out.frame.topRows(b), target.topRows(b));
      const double l2 = nn::bce<float>(out.frame.bottomRows(b), target.bottomRows(b));
      const double loss = l1 + l2;
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite decoder loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(begin));
      }
      // Each half is a mean over b * 7500 values; the stacked mean halves that.
      Matrix<float> dframe = nn::bce_grad_passthrough<float>(out.frame, target) * 2.0f;
      dm.decoder.backward(cache, out, dframe);
      dm.store.adam_step(adam);
      if (report && epoch == 1 && begin == 0) report->initial_loss = loss;
      total += loss * static_cast<double>(b);
    }
    const double mean = total / static_cast<double>(items.size());
    if (report) report->epoch_loss.push_back(mean);
    if (sink) sink({"decoder", epoch, mean, elapsed_ms(start)});
  }
  return dm;
}

}  // namespace rsm
