#include "commands.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rsm/config.hpp"
#include "rsm/dataset.hpp"
#include "rsm/eval.hpp"
#include "rsm/report.hpp"
#include "rsm/training.hpp"

namespace rsm::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
};

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("RSM_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t pos = 0;
    const auto s = std::stoull(v, &pos);
    if (pos != std::string(v).size()) throw std::invalid_argument("trailing");
    return s;
  } catch (const std::exception&) {
    throw ValidationError("RSM_SEED must be an unsigned integer, got '" + std::string(v) + "'");
  }
}

std::uint64_t resolve_seed(const Common& c, std::uint64_t fallback) {
  if (c.seed) return *c.seed;
  if (auto s = env_seed()) return *s;
  return fallback;
}

RunConfig build_config(const Common& c, std::optional<EnvKind> env = std::nullopt) {
  RunConfig cfg = c.config_path.empty() ? default_config(env.value_or(EnvKind::shapes)) : load_config(c.config_path);
  if (env && c.config_path.empty()) cfg = default_config(*env);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.seed = resolve_seed(c, cfg.seed);
  if (!c.out.empty()) cfg.out_dir = c.out;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_config) {
  if (with_config) {
    app->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--set", c.overrides, "override one config key (key=value), repeatable");
  }
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "seed (falls back to RSM_SEED, then the config)");
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError(std::string(what) + " is empty");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

MetricSink stream_sink(const fs::path& path, std::ofstream& file) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  file.open(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  return [&file](const MetricRecord& r) {
    const auto line = metric_json(r);
    file << line << '\n';
    file.flush();
    std::cout << line << std::endl;
  };
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  Common common;
  std::string env = "shapes";
  std::string split;
  int count = -1;
  int length = kDefaultEpisodeLength;
};

int cmd_generate(const GenerateArgs& a) {
  const EnvKind env = parse_env(a.env);
  const std::uint64_t seed = resolve_seed(a.common, 1);
  if (a.common.out.empty()) throw ValidationError("generate requires --out");
  if (!a.split.empty()) {
    const Split split = parse_split(a.split);
    const int count = a.count >= 0 ? a.count : default_episode_count(env, split);
    auto ds = generate_dataset(env, split, count, a.length, split_seed(seed, split));
    fs::path out(a.common.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_dataset(ds, out);
    std::cout << out.string() << ": " << count << " episodes\n";
    return 0;
  }
  fs::create_directories(a.common.out);
  for (Split split : {Split::train, Split::eval, Split::test_iid, Split::test_ood}) {
    const int count = a.count >= 0 ? a.count : default_episode_count(env, split);
    auto ds = generate_dataset(env, split, count, a.length, split_seed(seed, split));
    const fs::path out = fs::path(a.common.out) / (std::string(env_name(env)) + "_" + std::string(split_name(split)) + ".rsmd");
    save_dataset(ds, out);
    std::cout << out.string() << ": " << count << " episodes\n";
  }
  return 0;
}

struct TrainArgs {
  Common common;
  std::string train;
};

int cmd_train(const TrainArgs& a) {
  std::optional<Dataset> train;
  if (!a.train.empty()) train = load_dataset(a.train);
  RunConfig cfg = build_config(a.common, train ? std::optional<EnvKind>(train->header.env) : std::nullopt);
  if (train) {
    cfg.train_data = a.train;
  } else {
    if (cfg.train_data.empty()) throw ValidationError("train requires --train or train_data in the config");
    train = load_dataset(cfg.train_data);
  }
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  std::ofstream metrics;
  auto wm = train_world_model(*train, cfg, stream_sink(out / "metrics.ndjson", metrics));
  save_checkpoint(model::make_checkpoint(cfg, wm.store), out / "world.ckpt");
  std::cout << (out / "world.ckpt").string() << '\n';
  return 0;
}

struct DecoderArgs {
  Common common;
  std::string world;
  std::string train;
};

int cmd_train_decoder(const DecoderArgs& a) {
  auto world = model::load_world_model(a.world);
  Common c = a.common;
  RunConfig cfg = world.config;
  if (!c.config_path.empty()) cfg = load_config(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.seed = resolve_seed(c, cfg.seed);
  if (!c.out.empty()) cfg.out_dir = c.out;
  cfg.validate();
  const std::string train_path = a.train.empty() ? cfg.train_data : a.train;
  if (train_path.empty()) throw ValidationError("train-decoder requires --train or train_data");
  Dataset train = load_dataset(train_path);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  std::ofstream metrics;
  auto dm = train_decoder(train, world, cfg, stream_sink(out / "decoder_metrics.ndjson", metrics));
  save_checkpoint(model::make_checkpoint(cfg, dm.store), out / "decoder.ckpt");
  std::cout << (out / "decoder.ckpt").string() << '\n';
  return 0;
}

struct EvalArgs {
  Common common;
  std::string world;
  std::string data;
  std::string variant;
  std::string horizons = "1,5,10";
  std::string override_transition = "none";
  int forced = -1;
  int max_episodes = 0;
};

int cmd_eval(const EvalArgs& a) {
  auto world = model::load_world_model(a.world);
  Dataset data = load_dataset(a.data);
  EvalOptions o;
  o.horizons = parse_int_list(a.horizons, "--horizons");
  o.seed = resolve_seed(a.common, world.config.seed);
  o.forced_mechanism = a.forced;
  o.max_episodes = a.max_episodes;
  if (!a.variant.empty()) {
    const Variant v = parse_variant(a.variant);
    if (v == Variant::random_mech) o.random_mechanism = true;
    else if (v != world.config.transition.variant) {
      throw ValidationError("config mismatch: checkpoint variant " + std::string(variant_name(world.config.transition.variant)) +
                            ", requested variant " + a.variant + " (only random_mech can be applied at evaluation)");
    }
  }
  if (a.override_transition == "identity") o.override_transition = TransitionOverride::identity;
  else if (a.override_transition == "oracle") o.override_transition = TransitionOverride::oracle;
  else if (a.override_transition != "none") throw ValidationError("--override must be none, identity or oracle");
  auto report = eval_rollout(world, data, o);
  const auto text = report_json(report);
  std::cout << text << '\n';
  if (!a.common.out.empty()) {
    const fs::path path = fs::path(a.common.out) /
                          ("eval_" + report.env + "_" + report.split + "_" + report.variant + "_s" + std::to_string(report.seed) + ".json");
    write_text(path, text + "\n");
    std::cerr << path.string() << '\n';
  }
  return 0;
}

struct ReconstructArgs {
  Common common;
  std::string world;
  std::string decoder;
  std::string data;
  int episode = 0;
  std::string horizons = "1,5,10";
};

int cmd_reconstruct(const ReconstructArgs& a) {
  auto world = model::load_world_model(a.world);
  auto dec = model::load_decoder_model(a.decoder);
  Dataset data = load_dataset(a.data);
  model::check_compatible(world.config, data.header);
  if (a.episode < 0 || a.episode >= static_cast<int>(data.episodes.size())) {
    throw ValidationError("--episode " + std::to_string(a.episode) + " outside the dataset (" +
                          std::to_string(data.episodes.size()) + " episodes)");
  }
  if (a.common.out.empty()) throw ValidationError("reconstruct requires --out");
  auto files = export_reconstructions(world, dec, data.episodes[static_cast<std::size_t>(a.episode)],
                                      parse_int_list(a.horizons, "--horizons"), a.common.out,
                                      resolve_seed(a.common, world.config.seed));
  std::cout << files.originals.size() + files.predictions.size() << " images written to " << a.common.out << '\n';
  return 0;
}

struct SweepArgs {
  Common common;
  std::string train;
  std::vector<std::string> tests;
  std::string mechanisms = "3,5,7";
  std::string horizons = "1,5,10";
};

int cmd_sweep(const SweepArgs& a) {
  Dataset train = load_dataset(a.train);
  RunConfig base = build_config(a.common, train.header.env);
  base.train_data = a.train;
  std::vector<Dataset> tests;
  for (const auto& t : a.tests) tests.push_back(load_dataset(t));
  nlohmann::json out;
  out["seed"] = base.seed;
  out["runs"] = nlohmann::json::array();
  const fs::path dir(base.out_dir);
  fs::create_directories(dir);
  for (int m : parse_int_list(a.mechanisms, "--mechanisms")) {
    RunConfig cfg = base;
    cfg.transition.mechanisms = m;
    cfg.validate();
    std::ofstream metrics;
    auto wm = train_world_model(train, cfg, stream_sink(dir / ("metrics_m" + std::to_string(m) + ".ndjson"), metrics));
    save_checkpoint(model::make_checkpoint(cfg, wm.store), dir / ("world_m" + std::to_string(m) + ".ckpt"));
    nlohmann::json run;
    run["mechanisms"] = m;
    for (const auto& test : tests) {
      EvalOptions o;
      o.horizons = parse_int_list(a.horizons, "--horizons");
      o.seed = cfg.seed;
      auto r = eval_rollout(wm, test, o);
      run["hits_at_1"][r.split] = nlohmann::json::parse(report_json(r))["hits_at_1"];
    }
    out["runs"].push_back(run);
  }
  const auto text = out.dump(2);
  write_text(dir / "sweep.json", text + "\n");
  std::cout << text << '\n';
  return 0;
}

struct ReportArgs {
  std::vector<std::string> files;
  bool csv = false;
  bool usage = false;
};

int cmd_report(const ReportArgs& a) {
  std::vector<EvalReport> reports;
  for (const auto& f : a.files) {
    std::ifstream in(f);
    if (!in) throw ValidationError("cannot open report " + f);
    std::stringstream ss;
    ss << in.rdbuf();
    reports.push_back(parse_report_json(ss.str()));
  }
  const auto rows = aggregate_reports(reports);
  std::cout << (a.csv ? render_csv(rows) : render_table(rows));
  if (a.usage) {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].usage.total() == 0) continue;
      std::cout << '\n' << a.files[i] << '\n' << render_usage(reports[i].usage);
    }
  }
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Slot-based world models with reusable mechanisms"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = library default)")->check(CLI::NonNegativeNumber);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "generate dataset splits");
  add_common(g, gen.common, false);
  g->add_option("--env", gen.env, "shapes or balls")->required();
  g->add_option("--split", gen.split, "train, eval, test-iid or test-ood (default: all four into --out DIR)");
  g->add_option("--count", gen.count, "episodes (default: per-split table count)");
  g->add_option("--length", gen.length, "transitions per episode");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train encoder and transition with the contrastive loss");
  add_common(t, tr.common, true);
  t->add_option("--train", tr.train, "training dataset");

  DecoderArgs de;
  auto* d = app.add_subcommand("train-decoder", "train the per-slot decoder on a frozen world model");
  add_common(d, de.common, true);
  d->add_option("--world", de.world, "world-model checkpoint")->required();
  d->add_option("--train", de.train, "training dataset");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "multi-step H@1 evaluation");
  add_common(e, ev.common, false);
  e->add_option("--world", ev.world, "world-model checkpoint")->required();
  e->add_option("--data", ev.data, "dataset split to evaluate")->required();
  e->add_option("--variant", ev.variant, "random_mech to bypass the selector");
  e->add_option("--horizons", ev.horizons, "comma-separated horizons");
  e->add_option("--override", ev.override_transition, "none, identity or oracle transition");
  e->add_option("--forced-mechanism", ev.forced, "use one mechanism for every slot");
  e->add_option("--max-episodes", ev.max_episodes, "evaluate only the first episodes");

  ReconstructArgs re;
  auto* r = app.add_subcommand("reconstruct", "export decoded predictions as PNG files");
  add_common(r, re.common, false);
  r->add_option("--world", re.world, "world-model checkpoint")->required();
  r->add_option("--decoder", re.decoder, "decoder checkpoint")->required();
  r->add_option("--data", re.data, "dataset")->required();
  r->add_option("--episode", re.episode, "episode index");
  r->add_option("--horizons", re.horizons, "comma-separated horizons");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep-mechanisms", "train and evaluate for several mechanism counts");
  add_common(s, sw.common, true);
  s->add_option("--train", sw.train, "training dataset")->required();
  s->add_option("--test", sw.tests, "evaluation dataset, repeatable")->required();
  s->add_option("--mechanisms", sw.mechanisms, "comma-separated mechanism counts");
  s->add_option("--horizons", sw.horizons, "comma-separated horizons");

  ReportArgs rp;
  auto* p = app.add_subcommand("report", "aggregate eval JSON files into mean ± stderr");
  p->add_option("files", rp.files, "eval report files")->required()->check(CLI::ExistingFile);
  p->add_flag("--csv", rp.csv, "CSV instead of a text table");
  p->add_flag("--usage", rp.usage, "print mechanism usage per report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads > 0) {
      Eigen::setNbThreads(threads);
#ifdef _OPENMP
      omp_set_num_threads(threads);
#endif
    }
    if (g->parsed()) return cmd_generate(gen);
    if (t->parsed()) return cmd_train(tr);
    if (d->parsed()) return cmd_train_decoder(de);
    if (e->parsed()) return cmd_eval(ev);
    if (r->parsed()) return cmd_reconstruct(re);
    if (s->parsed()) return cmd_sweep(sw);
    if (p->parsed()) return cmd_report(rp);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace rsm::cli
