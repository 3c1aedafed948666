#include "doctest.h"
#include "fd.hpp"
#include "rsm/error.hpp"
#include "rsm/model/world_model.hpp"

using namespace rsm;
using namespace rsm::model;

namespace {
TransitionConfig small(Variant v) {
  TransitionConfig t;
  t.hidden = 16;
  t.variant = v;
  return t;
}
std::vector<int> identity_order(int batch, int n) {
  std::vector<int> o;
  for (int b = 0; b < batch; ++b)
    for (int i = 0; i < n; ++i) o.push_back(i);
  return o;
}
}  // namespace

TEST_CASE("encoder produces one slot vector per mask") {
  nn::ParamStore<float> store;
  Rng rng(1);
  Encoder<float> enc(store, "e", {3, 8, 5, 4, 16}, rng);
  Matrix<float> obs = Matrix<float>::Zero(2, 7500);
  CHECK(enc.forward(obs).cols() == 20);
  CHECK(enc.feature_maps(obs).cols() == 500);
  Matrix<float> six(2, 15000);
  CHECK_THROWS_AS(enc.forward(six), ValidationError);
}

TEST_CASE("transition validates the order") {
  nn::ParamStore<float> store;
  Rng rng(2);
  Transition<float> tr(store, "t", small(Variant::full), rng);
  Matrix<float> s = Matrix<float>::Zero(1, 20), a = Matrix<float>::Zero(1, 20);
  CHECK_THROWS_AS(tr.step(s, a, {0, 1, 2, 3, 3}, {}, rng), ValidationError);
  CHECK_THROWS_AS(tr.step(s, a, {0, 1, 2}, {}, rng), ValidationError);
  CHECK(is_permutation(std::vector<int>{2, 0, 1}.data(), 3));
  CHECK_FALSE(is_permutation(std::vector<int>{2, 2, 1}.data(), 3));
}

TEST_CASE("forced mechanism overrides selection") {
  nn::ParamStore<float> store;
  Rng rng(3);
  Transition<float> tr(store, "t", small(Variant::full), rng);
  Matrix<float> s = testing::random_matrix(4, 20, rng).cast<float>(), a = Matrix<float>::Zero(4, 20);
  StepOptions opt;
  opt.forced_mechanism = 3;
  auto out = tr.step(s, a, identity_order(4, 5), opt, rng);
  for (int m : out.selection) CHECK(m == 3);
  opt.forced_mechanism = 9;
  CHECK_THROWS_AS(tr.step(s, a, identity_order(4, 5), opt, rng), ValidationError);
}

TEST_CASE("ablated inputs do not influence the selector or mechanisms") {
  Rng rng(4);
  Matrix<float> slot = testing::random_matrix(3, 4, rng).cast<float>();
  Matrix<float> act = Matrix<float>::Zero(3, 4);
  Matrix<float> c1 = testing::random_matrix(3, 32, rng).cast<float>();
  Matrix<float> c2 = testing::random_matrix(3, 32, rng).cast<float>();
  {
    nn::ParamStore<float> store;
    Transition<float> tr(store, "t", small(Variant::ab01), rng);
    CHECK(tr.selector_logits(c1, slot, act) == tr.selector_logits(c2, slot, act));
    CHECK(tr.mechanism_output(0, c1, slot) != tr.mechanism_output(0, c2, slot));
  }
  {
    nn::ParamStore<float> store;
    Transition<float> tr(store, "t", small(Variant::ab10), rng);
    CHECK(tr.selector_logits(c1, slot, act) != tr.selector_logits(c2, slot, act));
    CHECK(tr.mechanism_output(0, c1, slot) == tr.mechanism_output(0, c2, slot));
  }
}

TEST_CASE("rollout keeps T + 1 states") {
  nn::ParamStore<float> store;
  Rng rng(5);
  Transition<float> tr(store, "t", small(Variant::full), rng);
  Matrix<float> s = testing::random_matrix(2, 20, rng).cast<float>();
  std::vector<Matrix<float>> actions(3, Matrix<float>::Zero(2, 20));
  auto traj = tr.rollout(s, actions, identity_order(2, 5), {}, rng);
  CHECK(traj.states.size() == 4);
  CHECK(traj.selections.size() == 3);
  CHECK(traj.states[0] == s);
}

TEST_CASE("action encoding targets one slot") {
  std::vector<float> row(20, -1.f);
  encode_action<float>({2, envs::Direction::left}, 5, row.data());
  for (int i = 0; i < 20; ++i) CHECK(row[static_cast<std::size_t>(i)] == (i == 2 * 4 + 3 ? 1.f : 0.f));
}

TEST_CASE("decoder bias starts at the per-slot share of one half") {
  RunConfig cfg = default_config(EnvKind::shapes);
  cfg.decoder_hidden = 8;
  DecoderModel dec(cfg, 1);
  auto out = dec.decoder.forward(Matrix<float>::Zero(1, 20));
  CHECK(out.per_slot.size() == 5);
  CHECK(out.frame.cols() == kPixelValues);
  CHECK((out.frame.array() >= 0).all());
  CHECK((out.frame.array() <= 1).all());
}

TEST_CASE("dataset compatibility checks") {
  RunConfig shapes = default_config(EnvKind::shapes);
  auto balls = generate_dataset(EnvKind::balls, Split::train, 1, 2, 1);
  CHECK_THROWS_AS(check_compatible(shapes, balls.header), ValidationError);
  auto ood = generate_dataset(EnvKind::shapes, Split::test_ood, 1, 2, 1);
  CHECK_NOTHROW(check_compatible(shapes, ood.header));
  RunConfig few = shapes;
  few.transition.slots = 3;
  auto iid = generate_dataset(EnvKind::shapes, Split::test_iid, 1, 2, 1);
  CHECK_THROWS_AS(check_compatible(few, iid.header), ValidationError);
  RunConfig b = default_config(EnvKind::balls);
  CHECK_THROWS_AS(check_compatible(shapes, b), ValidationError);
}

TEST_CASE("observation rows") {
  auto balls = generate_dataset(EnvKind::balls, Split::train, 1, 3, 2);
  std::vector<float> row(15000);
  observation_row<float>(balls.episodes[0], 1, row.data());
  std::vector<float> target(7500);
  target_frame_row<float>(balls.episodes[0], 1, target.data());
  CHECK(std::equal(target.begin(), target.end(), row.begin() + 7500));
  for (float v : row) CHECK((v >= 0.f && v <= 1.f));
}
