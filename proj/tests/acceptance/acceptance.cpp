#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "properties.hpp"
#include "rsm/error.hpp"
#include "rsm/eval.hpp"
#include "rsm/image.hpp"
#include "rsm/report.hpp"
#include "rsm/training.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace rsm;

namespace {

struct Profile {
  std::string name;
  int hidden = 512;
  int encoder_hidden = 512;
  int test_episodes = 10000;
  int balls_train_episodes = 5000;
  int balls_test_episodes = 1000;
  int balls_hidden = 512;
  int decoder_hidden = 2048;
  int decoder_episodes = 0;
  double iid_h1 = 95.0;
  double iid_h10 = 88.0;
  double shapes_budget_minutes = 180.0;
  bool budget_enforced = false;
};

Profile make_profile(const std::string& name) {
  Profile p;
  p.name = name;
  if (name == "full") return p;
  if (name != "reduced") throw ValidationError("unknown profile '" + name + "' (expected reduced or full)");
  p.hidden = 128;
  p.encoder_hidden = 128;
  p.test_episodes = 2000;
  p.balls_train_episodes = 1000;
  p.balls_test_episodes = 1000;
  p.balls_hidden = 128;
  p.decoder_hidden = 256;
  p.decoder_episodes = 200;
  p.iid_h1 = 90.0;
  p.iid_h10 = 80.0;
  p.shapes_budget_minutes = 30.0;
  p.budget_enforced = true;
  return p;
}

// Thresholds shared by both profiles.
constexpr double kOodH1 = 88.0;
constexpr double kOodH10 = 60.0;
constexpr double kRandomGap = 10.0;
constexpr double kAblationGap = 10.0;
constexpr double kBallsH1 = 90.0;
constexpr double kDecoderRatio = 0.5;
constexpr int kReconSamples = 10;
constexpr int kReconRequired = 8;
constexpr std::uint64_t kDataSeed = 1;
constexpr std::uint64_t kRunSeed = 1;
const std::vector<int> kHorizons{1, 5, 10};

struct Line {
  int id = 0;
  bool ok = false;
  std::string text;
};

std::vector<Line> g_lines;

void record(int id, bool ok, const std::string& text) {
  g_lines.push_back({id, ok, text});
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", text.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void log(const std::string& msg) {
  std::cerr << "[acceptance] " << msg << std::endl;
}

double minutes_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
}

Dataset dataset(const fs::path& dir, EnvKind env, Split split, int count, bool reuse) {
  const fs::path path = dir / (std::string(env_name(env)) + "_" + std::string(split_name(split)) + ".rsmd");
  const std::uint64_t seed = split_seed(kDataSeed, split);
  if (reuse && fs::exists(path)) {
    try {
      Dataset d = load_dataset(path);
      if (d.header.seed == seed && static_cast<int>(d.header.episode_count) == count &&
          d.header.episode_length == static_cast<std::uint32_t>(kDefaultEpisodeLength)) {
        return d;
      }
    } catch (const FormatError&) {
    }
  }
  log("generating " + path.string());
  Dataset d = generate_dataset(env, split, count, kDefaultEpisodeLength, seed);
  save_dataset(d, path);
  return d;
}

void write_metrics(const fs::path& path, const std::vector<MetricRecord>& records) {
  std::ofstream out(path);
  for (const auto& r : records) out << metric_json(r) << '\n';
}

// Training wall time of a saved run, from the last metrics record.
double recorded_minutes(const fs::path& metrics) {
  std::ifstream in(metrics);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  if (last.empty()) throw FormatError("no metrics in " + metrics.string());
  return nlohmann::json::parse(last).at("wall_ms").get<double>() / 60000.0;
}

model::WorldModel world(const fs::path& dir, const Dataset& train, const RunConfig& cfg, bool reuse,
                        double* train_minutes = nullptr) {
  const fs::path path = dir / "world.ckpt";
  if (reuse && fs::exists(path)) {
    try {
      auto ck = nn::load_checkpoint(path);
      if (ck.config == serialize_config(cfg)) {
        if (train_minutes) *train_minutes = recorded_minutes(dir / "metrics.ndjson");
        return model::load_world_model(ck);
      }
    } catch (const FormatError&) {
    } catch (const nlohmann::json::exception&) {
    }
  }
  log("training " + path.string());
  fs::create_directories(dir);
  std::vector<MetricRecord> metrics;
  auto wm = train_world_model(train, cfg, [&](const MetricRecord& m) {
    metrics.push_back(m);
    if (m.epoch % 10 == 0) log("  epoch " + std::to_string(m.epoch) + " loss " + std::to_string(m.loss));
  });
  write_metrics(dir / "metrics.ndjson", metrics);
  nn::save_checkpoint(model::make_checkpoint(cfg, wm.store), path);
  if (train_minutes) *train_minutes = metrics.empty() ? 0.0 : metrics.back().wall_ms / 60000.0;
  return wm;
}

model::DecoderModel decoder(const fs::path& dir, const Dataset& train, const model::WorldModel& wm,
                            const RunConfig& cfg, bool reuse) {
  const fs::path path = dir / "decoder.ckpt";
  if (reuse && fs::exists(path)) {
    try {
      auto ck = nn::load_checkpoint(path);
      if (ck.config == serialize_config(cfg)) return model::load_decoder_model(ck);
    } catch (const FormatError&) {
    }
  }
  log("training " + path.string());
  std::vector<MetricRecord> metrics;
  auto dm = train_decoder(train, wm, cfg, [&](const MetricRecord& m) {
    metrics.push_back(m);
    if (m.epoch % 10 == 0) log("  decoder epoch " + std::to_string(m.epoch) + " loss " + std::to_string(m.loss));
  });
  write_metrics(dir / "decoder_metrics.ndjson", metrics);
  nn::save_checkpoint(model::make_checkpoint(cfg, dm.store), path);
  return dm;
}

EvalReport evaluate(const model::WorldModel& wm, const Dataset& data, const fs::path& out, bool random = false,
                    TransitionOverride over = TransitionOverride::none) {
  EvalOptions opt;
  opt.horizons = kHorizons;
  opt.seed = kRunSeed;
  opt.override_transition = over;
  EvalReport r = random ? random_mech_eval(wm, data, opt) : eval_rollout(wm, data, opt);
  if (over == TransitionOverride::identity) r.variant = "identity";
  std::ofstream(out) << report_json(r) << '\n';
  return r;
}

std::string hits_text(const EvalReport& r) {
  std::string s;
  for (std::size_t i = 0; i < r.horizons.size(); ++i) {
    s += (i ? " " : "") + std::string("h") + std::to_string(r.horizons[i]) + "=" + fmt(r.hits[i]);
  }
  return s;
}

bool run_properties() {
  bool ok = true;
  std::string failed;
  for (const auto& r : props::run_all()) {
    std::printf("  property %-45s %s\n", r.name.c_str(), r.ok ? "ok" : "FAILED");
    if (!r.ok) {
      ok = false;
      failed += r.name + " (" + r.detail + ") ";
    }
  }
  record(6, ok, ok ? "all property suites passed" : "failing suites: " + failed);
  return ok;
}

int run(const Profile& p, const fs::path& work, bool reuse) {
  std::printf("acceptance profile: %s\n", p.name.c_str());
  if (!run_properties()) {
    for (int id : {1, 2, 3, 4, 5, 7, 8}) record(id, false, "not attempted: property suites failed");
    return 1;
  }
  const fs::path data_dir = work / "data";
  fs::create_directories(data_dir);

  // Shapes: full model and the ab00 ablation under the same budget and seed.
  Dataset shapes_train = dataset(data_dir, EnvKind::shapes, Split::train, 1000, reuse);
  Dataset shapes_iid = dataset(data_dir, EnvKind::shapes, Split::test_iid, p.test_episodes, reuse);
  RunConfig cfg = default_config(EnvKind::shapes);
  cfg.transition.hidden = p.hidden;
  cfg.encoder_hidden = p.encoder_hidden;
  cfg.decoder_hidden = p.decoder_hidden;
  cfg.decoder_episodes = p.decoder_episodes;
  cfg.seed = kRunSeed;
  double train_minutes = 0.0;
  auto full = world(work / "shapes_full", shapes_train, cfg, reuse, &train_minutes);
  const auto t_eval = std::chrono::steady_clock::now();
  EvalReport iid = evaluate(full, shapes_iid, work / "shapes_full" / "eval_test-iid.json");
  const double shapes_minutes = train_minutes + minutes_since(t_eval);
  {
    const bool in_budget = !p.budget_enforced || shapes_minutes <= p.shapes_budget_minutes;
    const bool ok = iid.at(1) >= p.iid_h1 && iid.at(10) >= p.iid_h10 && in_budget;
    record(1, ok,
           "shapes iid H@1 " + hits_text(iid) + " (need h1>=" + fmt(p.iid_h1) + " h10>=" + fmt(p.iid_h10) +
               "); train+eval " + fmt(shapes_minutes) + " min (budget " + fmt(p.shapes_budget_minutes) + " min" +
               (p.budget_enforced ? "" : ", informational") + ")");
  }

  Dataset shapes_ood = dataset(data_dir, EnvKind::shapes, Split::test_ood, p.test_episodes, reuse);
  EvalReport ood = evaluate(full, shapes_ood, work / "shapes_full" / "eval_test-ood.json");
  {
    bool ordered = true;
    for (int h : kHorizons) ordered = ordered && iid.at(h) >= ood.at(h);
    const bool ok = ood.at(1) >= kOodH1 && ood.at(10) >= kOodH10 && ordered;
    record(2, ok,
           "shapes ood H@1 " + hits_text(ood) + " (need h1>=" + fmt(kOodH1) + " h10>=" + fmt(kOodH10) +
               ", iid>=ood at every horizon: " + (ordered ? "yes" : "no") + ")");
  }

  EvalReport rnd_iid = evaluate(full, shapes_iid, work / "shapes_full" / "eval_test-iid_random.json", true);
  EvalReport rnd_ood = evaluate(full, shapes_ood, work / "shapes_full" / "eval_test-ood_random.json", true);
  {
    const double gap_iid = iid.at(10) - rnd_iid.at(10), gap_ood = ood.at(10) - rnd_ood.at(10);
    const bool ok = gap_iid >= kRandomGap && gap_ood >= kRandomGap;
    record(3, ok,
           "10-step gap over random mechanisms: iid " + fmt(iid.at(10)) + "-" + fmt(rnd_iid.at(10)) + "=" +
               fmt(gap_iid) + ", ood " + fmt(ood.at(10)) + "-" + fmt(rnd_ood.at(10)) + "=" + fmt(gap_ood) +
               " (need >=" + fmt(kRandomGap) + ")");
  }

  RunConfig ab_cfg = cfg;
  ab_cfg.transition.variant = Variant::ab00;
  auto ab00 = world(work / "shapes_ab00", shapes_train, ab_cfg, reuse);
  EvalReport ab_ood = evaluate(ab00, shapes_ood, work / "shapes_ab00" / "eval_test-ood.json");
  {
    const double gap = ood.at(10) - ab_ood.at(10);
    record(4, gap >= kAblationGap,
           "10-step ood: full " + fmt(ood.at(10)) + " vs ab00 " + fmt(ab_ood.at(10)) + ", gap " + fmt(gap) +
               " (need >=" + fmt(kAblationGap) + ")");
  }

  // Balls.
  {
    Dataset balls_train = dataset(data_dir, EnvKind::balls, Split::train, p.balls_train_episodes, reuse);
    Dataset balls_iid = dataset(data_dir, EnvKind::balls, Split::test_iid, p.balls_test_episodes, reuse);
    RunConfig bcfg = default_config(EnvKind::balls);
    bcfg.transition.hidden = p.balls_hidden;
    bcfg.encoder_hidden = p.balls_hidden;
    bcfg.seed = kRunSeed;
    auto balls = world(work / "balls_full", balls_train, bcfg, reuse);
    EvalReport b = evaluate(balls, balls_iid, work / "balls_full" / "eval_test-iid.json");
    EvalReport id = evaluate(balls, balls_iid, work / "balls_full" / "eval_test-iid_identity.json", false,
                             TransitionOverride::identity);
    bool beats = true;
    for (int h : kHorizons) beats = beats && b.at(h) > id.at(h);
    record(5, b.at(1) >= kBallsH1 && beats,
           "balls iid H@1 " + hits_text(b) + " vs identity " + hits_text(id) + " (need h1>=" + fmt(kBallsH1) +
               " and above identity at every horizon)");
  }

  // Mechanism specialization on the iid split.
  {
    MechanismUsage usage = mechanism_usage(full, shapes_iid, kRunSeed);
    std::printf("%s", render_usage(usage).c_str());
    bool ok = true;
    std::string text = "plurality mechanism per direction:";
    for (int d = 0; d < envs::kNumDirections; ++d) {
      const int m = usage.plurality(d);
      ok = ok && m >= 0;
      text += " " + std::string(envs::direction_name(static_cast<envs::Direction>(d))) + "=" +
              (m >= 0 ? "m" + std::to_string(m) : std::string("none"));
    }
    record(7, ok, text);
  }

  // Decoder quality.
  {
    auto trained = decoder(work / "shapes_full", shapes_train, full, cfg, reuse);
    auto untrained = initial_decoder(cfg);
    const int eval_episodes = std::min<int>(200, static_cast<int>(shapes_iid.episodes.size()));
    const double bce_trained = decoder_bce(full, trained, shapes_iid, eval_episodes);
    const double bce_untrained = decoder_bce(full, untrained, shapes_iid, eval_episodes);
    const double ratio = bce_trained / bce_untrained;

    Rng pick(derive_seed(kRunSeed, 7));
    int correct = 0;
    const fs::path png_root = work / "shapes_full" / "reconstructions";
    for (int i = 0; i < kReconSamples; ++i) {
      const auto e = static_cast<std::size_t>(pick() % shapes_iid.episodes.size());
      const Episode& ep = shapes_iid.episodes[e];
      const fs::path dir = png_root / ("episode_" + std::to_string(e));
      export_reconstructions(full, trained, ep, {1}, dir, kRunSeed);
      const RgbImage pred = read_png(dir / "pred_h1.png");
      const auto want = object_cells(ep.frames[1].pixels.data(), shapes_iid.header.object_specs);
      const auto got = object_cells(pred.pixels.data(), shapes_iid.header.object_specs);
      if (got == want) ++correct;
    }
    record(8, ratio <= kDecoderRatio && correct >= kReconRequired,
           "decoder bce " + fmt(bce_trained) + " vs untrained " + fmt(bce_untrained) + " (ratio " + fmt(ratio) +
               ", need <=" + fmt(kDecoderRatio) + "); objects in correct cells for " + std::to_string(correct) +
               "/" + std::to_string(kReconSamples) + " 1-step predictions (need >=" + std::to_string(kReconRequired) +
               ")");
  }

  std::vector<EvalReport> reports{iid, ood, rnd_iid, rnd_ood, ab_ood};
  std::ofstream(work / "report.txt") << render_table(aggregate_reports(reports));

  bool all = true;
  for (const auto& l : g_lines) all = all && l.ok;
  std::printf("acceptance: %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance run: property suites, training and evaluation"};
  std::string profile = "reduced";
  std::string work = "acceptance_work";
  bool reuse = false;
  int threads = 0;
  app.add_option("--profile", profile, "reduced or full")->check(CLI::IsMember({"reduced", "full"}));
  app.add_option("--work", work, "directory for datasets, checkpoints and reports");
  app.add_flag("--reuse", reuse, "reuse datasets and checkpoints whose config matches");
  app.add_option("--threads", threads, "worker threads (0 = library default)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif
  try {
    return run(make_profile(profile), work, reuse);
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << '\n';
    return 3;
  }
}
