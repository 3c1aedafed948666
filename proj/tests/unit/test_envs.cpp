#include "doctest.h"
#include "rsm/envs.hpp"
#include "rsm/error.hpp"

using namespace rsm;
using namespace rsm::envs;

TEST_CASE("grid step moves one cell and blocks walls and occupied cells") {
  GridState s;
  s.positions = {{0, 0}, {1, 0}};
  s.specs = object_specs_for(2);
  auto up = grid_step(s, {0, Direction::up});
  CHECK(up == s);
  auto right = grid_step(s, {0, Direction::right});
  CHECK(right == s);
  auto down = grid_step(s, {0, Direction::down});
  CHECK(down.positions[0] == Cell{0, 1});
  auto right1 = grid_step(s, {1, Direction::right});
  CHECK(right1.positions[1] == Cell{2, 0});
  CHECK(grid_step(s, {1, Direction::left}) == s);
}

TEST_CASE("grid init places distinct objects and rejects overfull grids") {
  Rng rng(3);
  for (int k = 1; k <= 25; ++k) CHECK(grid_state_valid(grid_init(k, kGridSize, rng)));
  CHECK_THROWS_AS(grid_init(26, kGridSize, rng), CapacityError);
}

TEST_CASE("grid render draws each object inside its own cell") {
  GridState s;
  s.positions = {{2, 3}};
  s.specs = object_specs_for(1);
  Frame f = grid_render(s);
  const Rgb color = shape_palette()[s.specs[0].color];
  int inside = 0, outside = 0;
  for (int y = 0; y < kFrameHeight; ++y) {
    for (int x = 0; x < kFrameWidth; ++x) {
      const bool lit = f.at(y, x, 0) || f.at(y, x, 1) || f.at(y, x, 2);
      const bool in_cell = x / kCellPixels == 2 && y / kCellPixels == 3;
      if (lit && in_cell) {
        ++inside;
        CHECK(f.at(y, x, 0) == color[0]);
      }
      if (lit && !in_cell) ++outside;
    }
  }
  CHECK(inside > 0);
  CHECK(outside == 0);
}

TEST_CASE("default palette is five distinct specs") {
  const auto& specs = default_object_specs();
  REQUIRE(specs.size() == 5);
  CHECK(specs[0].shape == Shape::circle);
  CHECK(specs[1].shape == Shape::triangle);
  CHECK(specs[2].shape == Shape::square);
  CHECK(object_specs_for(7).size() == 7);
}

TEST_CASE("balls reflect elastically off the walls") {
  BallState s;
  s.radius = 4.0;
  s.positions = {{4.5, 25.0}};
  s.velocities = {{-1.0, 0.5}};
  auto n = balls_step(s);
  CHECK(n.velocities[0].x == doctest::Approx(1.0));
  CHECK(n.velocities[0].y == doctest::Approx(0.5));
  CHECK(n.positions[0].x >= 4.0);
}

TEST_CASE("balls init respects speed and spacing") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    auto s = balls_init(3, 4.0, rng);
    for (std::size_t b = 0; b < 3; ++b) {
      const auto& v = s.velocities[b];
      CHECK(std::hypot(v.x, v.y) >= kMinSpeed);
      CHECK(std::abs(v.x) <= kMaxVelocityComponent);
      for (std::size_t c = b + 1; c < 3; ++c) {
        CHECK(std::hypot(s.positions[b].x - s.positions[c].x, s.positions[b].y - s.positions[c].y) >= 8.0);
      }
    }
  }
  CHECK_THROWS_AS(balls_init(200, 6.0, rng), CapacityError);
}
