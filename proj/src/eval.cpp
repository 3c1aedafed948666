#include "rsm/eval.hpp"

#include <json.hpp>
#include <limits>

#include "rsm/image.hpp"
#include "rsm/nn/losses.hpp"
#include "rsm/training.hpp"

namespace rsm {

using nn::ConstRef;
using nn::Index;
using nn::Matrix;

template <typename S>
Index nearest_index(const S* pred, const ConstRef<S>& pool) {
  if (pool.rows() == 0) throw ValidationError("reference pool is empty");
  const Index k = pool.cols();
  Index best = 0;
  S best_d = std::numeric_limits<S>::infinity();
  for (Index j = 0; j < pool.rows(); ++j) {
    const S* row = pool.row(j).data();
    S d = 0;
    for (Index c = 0; c < k; ++c) {
      const S diff = pred[c] - row[c];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

template <typename S>
bool hits_at_1(const ConstRef<S>& pred, const ConstRef<S>& pool, Index true_index) {
  if (true_index < 0 || true_index >= pool.rows()) throw ValidationError("true index outside the pool");
  if (pred.size() != pool.cols()) throw ValidationError("prediction size does not match pool rows");
  Matrix<S> p = pred;
  return nearest_index<S>(p.data(), pool) == true_index;
}

template Index nearest_index<float>(const float*, const ConstRef<float>&);
template Index nearest_index<double>(const double*, const ConstRef<double>&);
template bool hits_at_1<float>(const ConstRef<float>&, const ConstRef<float>&, Index);
template bool hits_at_1<double>(const ConstRef<double>&, const ConstRef<double>&, Index);

long long MechanismUsage::total() const {
  long long t = 0;
  for (auto c : counts) t += c;
  return t;
}

int MechanismUsage::plurality(int direction) const {
  int best = -1;
  long long best_count = 0;
  bool tie = false;
  for (int j = 0; j < mechanisms; ++j) {
    const long long c = at(direction, true, j);
    if (c > best_count) {
      best = j;
      best_count = c;
      tie = false;
    } else if (c == best_count && c > 0) {
      tie = true;
    }
  }
  return tie ? -1 : best;
}

double EvalReport::at(int horizon) const {
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] == horizon) return hits[i];
  }
  throw ValidationError("report has no horizon " + std::to_string(horizon));
}

std::string report_json(const EvalReport& r) {
  nlohmann::json j;
  j["env"] = r.env;
  j["split"] = r.split;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["episodes"] = r.episodes;
  j["slots"] = r.slots;
  j["steps"] = r.steps;
  nlohmann::json hits = nlohmann::json::object();
  for (std::size_t i = 0; i < r.horizons.size(); ++i) hits[std::to_string(r.horizons[i])] = r.hits[i];
  j["hits_at_1"] = hits;
  j["horizons"] = r.horizons;
  nlohmann::json usage;
  usage["mechanisms"] = r.usage.mechanisms;
  nlohmann::json rows = nlohmann::json::array();
  for (int d = 0; d < MechanismUsage::kRows; ++d) {
    for (int t = 0; t < 2; ++t) {
      nlohmann::json row;
      row["direction"] = d < envs::kNumDirections ? std::string(envs::direction_name(static_cast<envs::Direction>(d)))
                                                  : std::string("none");
      row["target"] = t == 1;
      std::vector<long long> c;
      for (int m = 0; m < r.usage.mechanisms; ++m) c.push_back(r.usage.at(d, t == 1, m));
      row["counts"] = c;
      rows.push_back(row);
    }
  }
  usage["rows"] = rows;
  j["mechanism_usage"] = usage;
  return j.dump(2);
}

EvalReport parse_report_json(const std::string& text) {
  EvalReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.env = j.at("env").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.episodes = j.at("episodes").get<int>();
    r.slots = j.value("slots", 0);
    r.steps = j.value("steps", 0);
    r.horizons = j.at("horizons").get<std::vector<int>>();
    for (int h : r.horizons) r.hits.push_back(j.at("hits_at_1").at(std::to_string(h)).get<double>());
    if (j.contains("mechanism_usage")) {
      const auto& u = j["mechanism_usage"];
      r.usage = MechanismUsage(u.at("mechanisms").get<int>());
      int i = 0;
      for (const auto& row : u.at("rows")) {
        const auto c = row.at("counts").get<std::vector<long long>>();
        for (int m = 0; m < r.usage.mechanisms && m < static_cast<int>(c.size()); ++m) {
          r.usage.at(i / 2, i % 2 == 1, m) = c[static_cast<std::size_t>(m)];
        }
        ++i;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid eval report: ") + e.what());
  }
  return r;
}

namespace {

constexpr std::size_t kEvalBatch = 1024;

std::vector<TransitionIndex> step_items(int episodes, int t) {
  std::vector<TransitionIndex> items;
  for (int e = 0; e < episodes; ++e) items.push_back({e, t});
  return items;
}

Matrix<float> encode_step(const model::WorldModel& world, const Dataset& data, int episodes, int t) {
  const auto items = step_items(episodes, t);
  const Index k = static_cast<Index>(world.config.transition.slots) * world.config.transition.slot_dim;
  Matrix<float> out(episodes, k);
  for (auto [begin, end] : batch_ranges(items.size(), kEvalBatch)) {
    std::vector<TransitionIndex> batch(items.begin() + static_cast<std::ptrdiff_t>(begin),
                                       items.begin() + static_cast<std::ptrdiff_t>(end));
    out.middleRows(static_cast<Index>(begin), static_cast<Index>(end - begin)) =
        world.encoder.forward(observation_batch<float>(data, batch, 0));
  }
  return out;
}

}  // namespace

EvalReport eval_rollout(const model::WorldModel& world, const Dataset& data, const EvalOptions& options) {
  model::check_compatible(world.config, data.header);
  const auto& tc = world.config.transition;
  const int n = tc.slots, da = tc.action_dim;
  int episodes = static_cast<int>(data.episodes.size());
  if (options.max_episodes > 0) episodes = std::min(episodes, options.max_episodes);
  if (episodes < 1) throw ValidationError("evaluation needs at least one episode");
  if (options.horizons.empty()) throw ValidationError("evaluation needs at least one horizon");
  int max_h = 0;
  for (int h : options.horizons) {
    if (h < 1) throw ValidationError("horizons must be at least 1");
    max_h = std::max(max_h, h);
  }
  for (int e = 0; e < episodes; ++e) {
    if (data.episodes[static_cast<std::size_t>(e)].length() < max_h) {
      throw ValidationError("horizon " + std::to_string(max_h) + " exceeds episode " + std::to_string(e) + " length " +
                            std::to_string(data.episodes[static_cast<std::size_t>(e)].length()));
    }
  }

  EvalReport report;
  report.env = std::string(env_name(data.header.env));
  report.split = std::string(split_name(data.header.split));
  report.variant = options.random_mechanism ? "random_mech" : std::string(variant_name(tc.variant));
  if (options.override_transition == TransitionOverride::identity) report.variant = "identity";
  if (options.override_transition == TransitionOverride::oracle) report.variant = "oracle";
  if (options.forced_mechanism >= 0) report.variant = "forced_m" + std::to_string(options.forced_mechanism);
  report.seed = options.seed;
  report.episodes = episodes;
  report.slots = n;
  report.steps = max_h;
  report.horizons = options.horizons;
  report.usage = MechanismUsage(tc.mechanisms);

  std::vector<Matrix<float>> pools(static_cast<std::size_t>(max_h + 1));
  pools[0] = encode_step(world, data, episodes, 0);
  for (int h : options.horizons) {
    if (pools[static_cast<std::size_t>(h)].size() == 0) pools[static_cast<std::size_t>(h)] = encode_step(world, data, episodes, h);
  }

  Rng order_rng(derive_seed(options.seed, 1));
  Rng select_rng(derive_seed(options.seed, 2));
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(episodes * n));
  for (int e = 0; e < episodes; ++e) {
    auto p = random_permutation(n, order_rng);
    order.insert(order.end(), p.begin(), p.end());
  }

  model::StepOptions step_options;
  step_options.mode = nn::GumbelMode::infer;
  step_options.random_selection = options.random_mechanism;
  step_options.forced_mechanism = options.forced_mechanism;

  std::vector<long long> hit_count(options.horizons.size(), 0);
  Matrix<float> state = pools[0];
  for (int t = 0; t < max_h; ++t) {
    const auto items = step_items(episodes, t);
    Matrix<float> actions = action_batch<float>(data, items, n, da);
    Matrix<float> next(state.rows(), state.cols());
    switch (options.override_transition) {
      case TransitionOverride::identity: next = state; break;
      case TransitionOverride::oracle: next = encode_step(world, data, episodes, t + 1); break;
      case TransitionOverride::none:
        for (auto [begin, end] : batch_ranges(items.size(), kEvalBatch)) {
          const Index b0 = static_cast<Index>(begin), rows = static_cast<Index>(end - begin);
          std::vector<int> sub(order.begin() + b0 * n, order.begin() + (b0 + rows) * n);
          auto out = world.transition.step(state.middleRows(b0, rows), actions.middleRows(b0, rows), sub, step_options,
                                           select_rng);
          next.middleRows(b0, rows) = out.next;
          for (Index b = 0; b < rows; ++b) {
            const auto& ep = data.episodes[static_cast<std::size_t>(b0 + b)];
            const int dir = da > 0 ? static_cast<int>(ep.actions[static_cast<std::size_t>(t)].direction) : envs::kNumDirections;
            const int target = da > 0 ? ep.actions[static_cast<std::size_t>(t)].object_id : -1;
            for (int s = 0; s < n; ++s) report.usage.at(dir, s == target, out.selection[static_cast<std::size_t>(b * n + s)])++;
          }
        }
        break;
    }
    nn::require_finite(next, "rollout state");
    state = std::move(next);
    for (std::size_t hi = 0; hi < options.horizons.size(); ++hi) {
      if (options.horizons[hi] != t + 1) continue;
      const Matrix<float>& pool = pools[static_cast<std::size_t>(t + 1)];
      long long hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
      for (Index e = 0; e < episodes; ++e) {
        if (nearest_index<float>(state.row(e).data(), pool) == e) ++hits;
      }
      hit_count[hi] = hits;
    }
  }
  for (auto c : hit_count) report.hits.push_back(100.0 * static_cast<double>(c) / static_cast<double>(episodes));
  return report;
}

EvalReport random_mech_eval(const model::WorldModel& world, const Dataset& data, const EvalOptions& options) {
  EvalOptions o = options;
  o.random_mechanism = true;
  return eval_rollout(world, data, o);
}

MechanismUsage mechanism_usage(const model::WorldModel& world, const Dataset& data, std::uint64_t seed) {
  EvalOptions o;
  o.seed = seed;
  int len = std::numeric_limits<int>::max();
  for (const auto& ep : data.episodes) len = std::min(len, ep.length());
  o.horizons = {len};
  return eval_rollout(world, data, o).usage;
}

double decoder_bce(const model::WorldModel& world, const model::DecoderModel& decoder, const Dataset& data,
                   int max_episodes) {
  model::check_compatible(world.config, decoder.config);
  model::check_compatible(world.config, data.header);
  const auto items = transition_indices(data, max_episodes);
  if (items.empty()) throw ValidationError("no transitions to decode");
  double total = 0.0;
  for (auto [begin, end] : batch_ranges(items.size(), kEvalBatch)) {
    std::vector<TransitionIndex> batch(items.begin() + static_cast<std::ptrdiff_t>(begin),
                                       items.begin() + static_cast<std::ptrdiff_t>(end));
    Matrix<float> slots = world.encoder.forward(observation_batch<float>(data, batch, 0));
    auto out = decoder.decoder.forward(slots);
    Matrix<float> target = target_frame_batch<float>(data, batch, 0);
    total += static_cast<double>(nn::bce<float>(out.frame, target)) * static_cast<double>(end - begin);
  }
  return total / static_cast<double>(items.size());
}

ReconstructionFiles export_reconstructions(const model::WorldModel& world, const model::DecoderModel& decoder,
                                           const Episode& episode, const std::vector<int>& horizons,
                                           const std::filesystem::path& out_dir, std::uint64_t seed) {
  model::check_compatible(world.config, decoder.config);
  const auto& tc = world.config.transition;
  if (episode.env != world.config.env) throw ValidationError("episode env does not match the checkpoint");
  int max_h = 0;
  for (int h : horizons) {
    if (h < 1 || h > episode.length()) throw ValidationError("horizon " + std::to_string(h) + " outside the episode");
    max_h = std::max(max_h, h);
  }
  std::filesystem::create_directories(out_dir);
  ReconstructionFiles files;
  const int frames = frames_per_observation(episode.env);
  for (int f = 0; f < frames; ++f) {
    auto p = out_dir / ("input_f" + std::to_string(f) + ".png");
    write_png(p, frame_image(episode.frames[static_cast<std::size_t>(f)]));
    files.originals.push_back(p);
  }
  Matrix<float> obs(1, static_cast<Index>(3 * frames) * 2500);
  model::observation_row<float>(episode, 0, obs.data());
  Matrix<float> s0 = world.encoder.forward(obs);
  std::vector<Matrix<float>> actions;
  for (int t = 0; t < max_h; ++t) actions.push_back(model::action_rows<float>(episode, t, tc.slots, tc.action_dim));
  Rng rng(derive_seed(seed, 1));
  const auto order = random_permutation(tc.slots, rng);
  model::StepOptions options;
  auto learned = world.transition.rollout(s0, actions, order, options, rng);
  std::vector<model::Trajectory<float>> forced;
  for (int j = 0; j < tc.mechanisms; ++j) {
    model::StepOptions fo;
    fo.forced_mechanism = j;
    forced.push_back(world.transition.rollout(s0, actions, order, fo, rng));
  }
  for (int h : horizons) {
    const std::string tag = "_h" + std::to_string(h);
    auto truth = out_dir / ("truth" + tag + ".png");
    write_png(truth, frame_image(episode.frames[static_cast<std::size_t>(h + frames - 1)]));
    files.predictions.push_back(truth);
    auto dec = decoder.decoder.forward(learned.states[static_cast<std::size_t>(h)]);
    auto pred = out_dir / ("pred" + tag + ".png");
    write_png(pred, chw_to_image(dec.frame.data()));
    files.predictions.push_back(pred);
    for (int i = 0; i < tc.slots; ++i) {
      auto p = out_dir / ("pred" + tag + "_slot" + std::to_string(i) + ".png");
      write_png(p, chw_to_image(dec.per_slot[static_cast<std::size_t>(i)].data()));
      files.predictions.push_back(p);
    }
    for (int j = 0; j < tc.mechanisms; ++j) {
      auto fdec = decoder.decoder.forward(forced[static_cast<std::size_t>(j)].states[static_cast<std::size_t>(h)]);
      auto p = out_dir / ("forced_m" + std::to_string(j) + tag + ".png");
      write_png(p, chw_to_image(fdec.frame.data()));
      files.predictions.push_back(p);
    }
  }
  return files;
}

std::vector<int> object_cells(const std::uint8_t* rgb, const std::vector<envs::ObjectSpec>& specs) {
  const auto& palette = envs::shape_palette();
  std::vector<envs::Rgb> colors{{0, 0, 0}};
  for (const auto& s : specs) colors.push_back(palette.at(static_cast<std::size_t>(s.color)));
  constexpr int cells = envs::kGridSize * envs::kGridSize;
  std::vector<std::vector<int>> count(specs.size(), std::vector<int>(cells, 0));
  for (int y = 0; y < envs::kFrameHeight; ++y) {
    for (int x = 0; x < envs::kFrameWidth; ++x) {
      const std::uint8_t* px = rgb + (y * envs::kFrameWidth + x) * 3;
      int best = 0;
      long best_d = std::numeric_limits<long>::max();
      for (std::size_t c = 0; c < colors.size(); ++c) {
        long d = 0;
        for (int ch = 0; ch < 3; ++ch) {
          const long diff = static_cast<long>(px[ch]) - static_cast<long>(colors[c][static_cast<std::size_t>(ch)]);
          d += diff * diff;
        }
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (best == 0) continue;
      const int cell = (y / envs::kCellPixels) * envs::kGridSize + x / envs::kCellPixels;
      count[static_cast<std::size_t>(best - 1)][static_cast<std::size_t>(cell)]++;
    }
  }
  std::vector<int> out;
  for (const auto& c : count) {
    int best = -1, best_n = 0;
    for (int i = 0; i < cells; ++i) {
      if (c[static_cast<std::size_t>(i)] > best_n) {
        best_n = c[static_cast<std::size_t>(i)];
        best = i;
      }
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace rsm
