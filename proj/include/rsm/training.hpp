#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rsm/model/world_model.hpp"

namespace rsm {

struct MetricRecord {
  std::string phase;
  int epoch = 0;
  double loss = 0.0;
  double wall_ms = 0.0;
};

std::string metric_json(const MetricRecord& record);

using MetricSink = std::function<void(const MetricRecord&)>;

template <typename S>
struct ContrastiveResult {
  double loss = 0.0;
  double positive = 0.0;  // mean H over the batch
  double negative = 0.0;  // mean H~ over the batch
  nn::Matrix<S> dpred, dtarget, dnegative;
};

// Rows are samples. Per sample: H = mse(pred, target), H~ = mse(negative,
// target), loss = H + max(0, gamma - H~); the result averages over rows.
template <typename S>
ContrastiveResult<S> contrastive_loss(const nn::ConstRef<S>& pred, const nn::ConstRef<S>& target,
                                      const nn::ConstRef<S>& negative, double gamma, bool with_grad = true);

// Fixed-point-free permutation of [0, n): one resample, then a cyclic shift.
std::vector<int> negative_sample(int n, Rng& rng);

struct TransitionIndex {
  int episode = 0;
  int t = 0;
};
std::vector<TransitionIndex> transition_indices(const Dataset& data, int max_episodes = 0);

// Batch of observations for the listed transitions; offset selects obs_t
// (0) or obs_{t+1} (1).
template <typename S>
nn::Matrix<S> observation_batch(const Dataset& data, const std::vector<TransitionIndex>& items, int offset);
template <typename S>
nn::Matrix<S> action_batch(const Dataset& data, const std::vector<TransitionIndex>& items, int slots, int action_dim);
template <typename S>
nn::Matrix<S> target_frame_batch(const Dataset& data, const std::vector<TransitionIndex>& items, int offset);

// Splits [0, n) into batches of `batch` rows; a trailing single row joins the
// previous batch so negatives always exist.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch);

struct TrainReport {
  std::vector<double> epoch_loss;
  double initial_loss = 0.0;  // first-batch loss before any update
};

// One optimizer step on a contrastive batch; returns the batch loss.
template <typename S>
double world_model_step(model::WorldModelT<S>& wm, const nn::ConstRef<S>& obs_t, const nn::ConstRef<S>& obs_next,
                        const nn::ConstRef<S>& actions, Rng& rng, nn::GumbelMode mode, bool update);

model::WorldModel train_world_model(const Dataset& train, const RunConfig& config, const MetricSink& sink = {},
                                    TrainReport* report = nullptr);

// The decoder train_decoder starts from, before any update.
model::DecoderModel initial_decoder(const RunConfig& config);

// Encoder/transition stay frozen. Loss = bce(decode(s_t), x_t) +
// bce(decode(s'_{t+1}), x_{t+1}).
model::DecoderModel train_decoder(const Dataset& train, const model::WorldModel& world, const RunConfig& config,
                                  const MetricSink& sink = {}, TrainReport* report = nullptr);

}  // namespace rsm
