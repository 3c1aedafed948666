#include <filesystem>

#include "doctest.h"
#include "rsm/error.hpp"
#include "rsm/eval.hpp"
#include "rsm/image.hpp"
#include "rsm/report.hpp"

using namespace rsm;

namespace {
RunConfig tiny() {
  RunConfig cfg = default_config(EnvKind::shapes);
  cfg.transition.hidden = 16;
  cfg.encoder_hidden = 16;
  cfg.cnn_channels = 4;
  cfg.decoder_hidden = 8;
  return cfg;
}
}  // namespace

TEST_CASE("nearest neighbour breaks ties towards the smaller index") {
  nn::Matrix<float> pool(3, 2);
  pool << 1, 0, 0, 1, 1, 0;
  nn::Matrix<float> q(1, 2);
  q << 1, 0;
  CHECK(nearest_index<float>(q.data(), pool) == 0);
  CHECK(hits_at_1<float>(q, pool, 0));
  CHECK_FALSE(hits_at_1<float>(q, pool, 2));
}

TEST_CASE("oracle transition scores perfectly and reports carry metadata") {
  model::WorldModel wm(tiny(), 1);
  auto ds = generate_dataset(EnvKind::shapes, Split::test_iid, 6, 4, 2);
  EvalOptions opt;
  opt.horizons = {1, 4};
  opt.override_transition = TransitionOverride::oracle;
  auto r = eval_rollout(wm, ds, opt);
  CHECK(r.at(1) == 100.0);
  CHECK(r.at(4) == 100.0);
  CHECK(r.episodes == 6);
  CHECK(r.split == "test-iid");
  opt.horizons = {5};
  CHECK_THROWS_AS(eval_rollout(wm, ds, opt), ValidationError);
}

TEST_CASE("identity baseline is deterministic and usage counts every selection") {
  model::WorldModel wm(tiny(), 1);
  auto ds = generate_dataset(EnvKind::shapes, Split::test_iid, 5, 3, 3);
  EvalOptions opt;
  opt.horizons = {1, 3};
  auto a = eval_rollout(wm, ds, opt);
  auto b = eval_rollout(wm, ds, opt);
  CHECK(a.hits == b.hits);
  CHECK(a.usage.total() == 5 * 3 * 5);
  auto usage = mechanism_usage(wm, ds, 1);
  long long targets = 0;
  for (int d = 0; d < 4; ++d)
    for (int m = 0; m < 5; ++m) targets += usage.at(d, true, m);
  CHECK(targets == 5 * 3);
  auto rnd = random_mech_eval(wm, ds, opt);
  CHECK(rnd.variant == "random_mech");
}

TEST_CASE("plurality needs a strict winner") {
  MechanismUsage u(3);
  u.at(0, true, 1) = 5;
  u.at(0, true, 2) = 5;
  u.at(1, true, 2) = 6;
  CHECK(u.plurality(0) == -1);
  CHECK(u.plurality(1) == 2);
  CHECK(u.plurality(2) == -1);
}

TEST_CASE("report json round trip and aggregation") {
  EvalReport r;
  r.env = "shapes";
  r.split = "test-iid";
  r.variant = "full";
  r.seed = 3;
  r.horizons = {1, 10};
  r.hits = {90.0, 80.0};
  r.usage = MechanismUsage(2);
  r.usage.at(2, true, 1) = 4;
  auto back = parse_report_json(report_json(r));
  CHECK(back.hits == r.hits);
  CHECK(back.usage.counts == r.usage.counts);
  CHECK_THROWS_AS(parse_report_json("{"), FormatError);

  EvalReport r2 = r;
  r2.seed = 4;
  r2.hits = {92.0, 84.0};
  auto rows = aggregate_reports({r, r2});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean[0] == doctest::Approx(91.0));
  CHECK(rows[0].stderr_[1] == doctest::Approx(2.0));
  CHECK(render_table(rows).find("91.0 ± 1.0") != std::string::npos);
  CHECK(render_csv(rows).find("shapes") != std::string::npos);
  CHECK(render_usage(r.usage).find("right") != std::string::npos);
}

TEST_CASE("object cells recover the rendered grid position") {
  auto ds = generate_dataset(EnvKind::shapes, Split::test_iid, 3, 1, 5);
  for (const auto& ep : ds.episodes) {
    auto cells = object_cells(ep.frames[0].pixels.data(), ds.header.object_specs);
    REQUIRE(cells.size() == 5);
    for (int c : cells) CHECK(c >= 0);
    std::sort(cells.begin(), cells.end());
    CHECK(std::unique(cells.begin(), cells.end()) == cells.end());
  }
}

TEST_CASE("reconstruction export writes PNG files") {
  RunConfig cfg = tiny();
  model::WorldModel wm(cfg, 1);
  model::DecoderModel dec(cfg, 2);
  auto ds = generate_dataset(EnvKind::shapes, Split::test_iid, 1, 2, 5);
  const auto dir = std::filesystem::temp_directory_path() / "rsm_test_recon";
  std::filesystem::remove_all(dir);
  auto files = export_reconstructions(wm, dec, ds.episodes[0], {1, 2}, dir, 1);
  CHECK(files.predictions.size() == 2 * (2 + 5 + 5));
  auto img = read_png(dir / "pred_h1.png");
  CHECK(img.width == 50);
  CHECK(decoder_bce(wm, dec, ds) > 0.0);
  std::filesystem::remove_all(dir);
}
