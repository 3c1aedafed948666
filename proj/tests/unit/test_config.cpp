#include "doctest.h"
#include "rsm/config.hpp"
#include "rsm/error.hpp"

using namespace rsm;

TEST_CASE("table defaults") {
  auto s = default_config(EnvKind::shapes);
  CHECK(s.transition.slots == 5);
  CHECK(s.transition.mechanisms == 5);
  CHECK(s.transition.action_dim == 4);
  CHECK(s.transition.hidden == 512);
  CHECK(s.lr == 5e-4);
  CHECK(s.batch_size == 1024);
  CHECK(s.epochs == 100);
  auto b = default_config(EnvKind::balls);
  CHECK(b.transition.slots == 3);
  CHECK(b.transition.mechanisms == 7);
  CHECK(b.transition.action_dim == 0);
  CHECK(b.in_channels() == 6);
}

TEST_CASE("serialize and parse round trip") {
  auto c = default_config(EnvKind::balls);
  c.transition.variant = Variant::mlp_cci;
  c.seed = 17;
  c.train_data = "data/balls_train.rsmd";
  CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("env applies before other keys") {
  auto c = parse_config("mechanisms = 4\n# note\nenv = balls\n");
  CHECK(c.env == EnvKind::balls);
  CHECK(c.transition.mechanisms == 4);
  CHECK(c.transition.slots == 3);
}

TEST_CASE("invalid values are rejected") {
  CHECK_THROWS_AS(parse_config("mechanisms = 0"), ValidationError);
  CHECK_THROWS_AS(parse_config("lr = fast"), ValidationError);
  CHECK_THROWS_AS(parse_config("colour = red"), ValidationError);
  CHECK_THROWS_AS(parse_config("heads = 3"), ValidationError);
  CHECK_THROWS_AS(parse_variant("ab11"), ValidationError);
  CHECK(parse_variant("random-mech") == Variant::random_mech);
  RunConfig c;
  set_config_value(c, "temperature", "-1");
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.transition.temperature = 1.0;
  set_config_value(c, "variant", "ab00");
  CHECK_FALSE(c.transition.selector_uses_cci());
  CHECK_FALSE(c.transition.mechanisms_use_cci());
}
