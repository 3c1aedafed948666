#include <set>

#include "doctest.h"
#include "fd.hpp"
#include "rsm/error.hpp"
#include "rsm/training.hpp"

using namespace rsm;

TEST_CASE("negative samples are derangements") {
  Rng rng(1);
  for (int n = 2; n < 40; ++n) {
    for (int k = 0; k < 20; ++k) {
      auto p = negative_sample(n, rng);
      std::set<int> seen(p.begin(), p.end());
      CHECK(seen.size() == static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) CHECK(p[static_cast<std::size_t>(i)] != i);
    }
  }
}

TEST_CASE("batch ranges merge a trailing single row") {
  using R = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(batch_ranges(10, 4) == R{{0, 4}, {4, 8}, {8, 10}});
  CHECK(batch_ranges(9, 4) == R{{0, 4}, {4, 9}});
  CHECK(batch_ranges(8, 4) == R{{0, 4}, {4, 8}});
}

TEST_CASE("contrastive gradients") {
  Rng rng(2);
  nn::Matrix<double> p = testing::random_matrix(4, 6, rng), t = testing::random_matrix(4, 6, rng),
                     n = testing::random_matrix(4, 6, rng, 0.3);
  auto r = contrastive_loss<double>(p, t, n, 1.0, true);
  auto f = [&] { return contrastive_loss<double>(p, t, n, 1.0, false).loss; };
  CHECK(testing::check_input_grad(p, r.dpred, f).max_rel < 1e-6);
  CHECK(testing::check_input_grad(t, r.dtarget, f).max_rel < 1e-6);
  CHECK(testing::check_input_grad(n, r.dnegative, f).max_rel < 1e-6);
}

TEST_CASE("hinge is inactive once negatives are far") {
  nn::Matrix<double> t = nn::Matrix<double>::Zero(2, 4);
  nn::Matrix<double> n = nn::Matrix<double>::Constant(2, 4, 3.0);
  auto r = contrastive_loss<double>(t, t, n, 1.0);
  CHECK(r.loss == 0.0);
  CHECK(r.dnegative.isZero());
}

TEST_CASE("transition indices cover every step") {
  auto ds = generate_dataset(EnvKind::shapes, Split::train, 3, 4, 1);
  CHECK(transition_indices(ds).size() == 12);
  CHECK(transition_indices(ds, 2).size() == 8);
  auto acts = action_batch<float>(ds, {{0, 0}, {1, 3}}, 5, 4);
  CHECK(acts.rows() == 2);
  CHECK(acts.row(0).sum() == 1.f);
}

TEST_CASE("a few epochs reduce the contrastive loss") {
  auto ds = generate_dataset(EnvKind::shapes, Split::train, 40, 10, 3);
  RunConfig cfg = default_config(EnvKind::shapes);
  cfg.transition.hidden = 32;
  cfg.encoder_hidden = 32;
  cfg.cnn_channels = 8;
  cfg.batch_size = 64;
  cfg.epochs = 6;
  cfg.lr = 1e-3;
  std::vector<MetricRecord> metrics;
  TrainReport report;
  auto wm = train_world_model(ds, cfg, [&](const MetricRecord& m) { metrics.push_back(m); }, &report);
  REQUIRE(report.epoch_loss.size() == 6);
  CHECK(metrics.size() == 6);
  CHECK(report.epoch_loss.back() < report.initial_loss);
  CHECK(metric_json(metrics[0]).find("\"epoch\":1") != std::string::npos);

  auto again = train_world_model(ds, cfg);
  CHECK(again.store.values_equal(wm.store));
}

TEST_CASE("training rejects mismatched data") {
  auto ds = generate_dataset(EnvKind::balls, Split::train, 2, 3, 1);
  RunConfig cfg = default_config(EnvKind::shapes);
  CHECK_THROWS_AS(train_world_model(ds, cfg), ValidationError);
}
