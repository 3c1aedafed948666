#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "rsm/rng.hpp"

namespace rsm::envs {

inline constexpr int kFrameHeight = 50;
inline constexpr int kFrameWidth = 50;
inline constexpr int kFrameChannels = 3;
inline constexpr int kFrameBytes = kFrameHeight * kFrameWidth * kFrameChannels;
inline constexpr int kGridSize = 5;
inline constexpr int kCellPixels = kFrameWidth / kGridSize;

// Row-major RGB, pixel (y, x) channel c lives at (y * W + x) * 3 + c.
struct Frame {
  std::array<std::uint8_t, kFrameBytes> pixels{};

  std::uint8_t& at(int y, int x, int c) { return pixels[static_cast<std::size_t>((y * kFrameWidth + x) * kFrameChannels + c)]; }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[static_cast<std::size_t>((y * kFrameWidth + x) * kFrameChannels + c)];
  }
  bool operator==(const Frame&) const = default;
};

using Rgb = std::array<std::uint8_t, 3>;

// ---------------------------------------------------------------------------
// 2D Shapes grid world

enum class Shape : std::uint8_t { circle = 0, triangle = 1, square = 2 };

struct ObjectSpec {
  Shape shape = Shape::square;
  std::uint8_t color = 0;  // index into shape_palette()
  bool operator==(const ObjectSpec&) const = default;
};

struct Cell {
  int col = 0;
  int row = 0;
  bool operator==(const Cell&) const = default;
};

enum class Direction : std::uint8_t { up = 0, right = 1, down = 2, left = 3 };
inline constexpr int kNumDirections = 4;

std::string_view direction_name(Direction d);

struct GridAction {
  int object_id = 0;
  Direction direction = Direction::up;
  bool operator==(const GridAction&) const = default;
};

struct GridState {
  int grid_size = kGridSize;
  std::vector<Cell> positions;
  std::vector<ObjectSpec> specs;
  bool operator==(const GridState&) const = default;
};

// Red circle, blue triangle, green square, purple circle, yellow triangle.
const std::vector<ObjectSpec>& default_object_specs();
// RGB for each color index used by ObjectSpec.
const std::vector<Rgb>& shape_palette();

// Specs for the first `count` objects, cycling the default palette.
std::vector<ObjectSpec> object_specs_for(int count);

// Random non-overlapping placement. Throws CapacityError when the grid cannot
// hold `num_objects` objects.
GridState grid_init(int num_objects, int grid_size, Rng& rng);

// Moves the target object one cell if the destination is inside the grid and
// free. Blocked moves return the state unchanged.
GridState grid_step(const GridState& state, const GridAction& action);

// Each object drawn inside its own 10x10 cell on black.
Frame grid_render(const GridState& state);

bool grid_state_valid(const GridState& state);

// ---------------------------------------------------------------------------
// Balls

inline constexpr double kMaxVelocityComponent = 2.0;
inline constexpr double kMinSpeed = 0.5;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

struct BallState {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  double radius = 4.0;
  bool operator==(const BallState&) const = default;
};

const std::vector<Rgb>& ball_palette();

// Non-overlapping centers; velocities uniform in [-2, 2]^2, redrawn until the
// speed is at least 0.5. Throws CapacityError if the arena is too crowded.
BallState balls_init(int num_balls, double radius, Rng& rng);

// Constant velocity with elastic reflection on the walls. Balls pass through
// each other.
BallState balls_step(const BallState& state);

// Filled discs, later balls drawn over earlier ones.
Frame balls_render(const BallState& state);

}  // namespace rsm::envs
