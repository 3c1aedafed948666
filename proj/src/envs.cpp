#include "rsm/envs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rsm/error.hpp"

namespace rsm::envs {

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::up: return "up";
    case Direction::right: return "right";
    case Direction::down: return "down";
    case Direction::left: return "left";
  }
  return "?";
}

const std::vector<ObjectSpec>& default_object_specs() {
  static const std::vector<ObjectSpec> specs = {
      {Shape::circle, 0}, {Shape::triangle, 1}, {Shape::square, 2}, {Shape::circle, 3}, {Shape::triangle, 4}};
  return specs;
}

const std::vector<Rgb>& shape_palette() {
  static const std::vector<Rgb> palette = {
      Rgb{230, 25, 25},   // red
      Rgb{30, 90, 235},   // blue
      Rgb{40, 200, 40},   // green
      Rgb{165, 40, 205},  // purple
      Rgb{235, 220, 30},  // yellow
  };
  return palette;
}

const std::vector<Rgb>& ball_palette() {
  static const std::vector<Rgb> palette = {
      Rgb{230, 25, 25}, Rgb{40, 200, 40}, Rgb{30, 90, 235}, Rgb{235, 220, 30},
      Rgb{30, 210, 220}, Rgb{220, 40, 210}, Rgb{240, 240, 240}, Rgb{240, 140, 20},
  };
  return palette;
}

std::vector<ObjectSpec> object_specs_for(int count) {
  const auto& base = default_object_specs();
  std::vector<ObjectSpec> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out.push_back(base[static_cast<std::size_t>(i) % base.size()]);
  return out;
}

GridState grid_init(int num_objects, int grid_size, Rng& rng) {
  if (grid_size <= 0) throw ValidationError("grid_size must be positive");
  if (num_objects < 0) throw ValidationError("num_objects must be non-negative");
  const int cells = grid_size * grid_size;
  if (num_objects > cells) {
    throw CapacityError("cannot place " + std::to_string(num_objects) + " objects on a " +
                        std::to_string(grid_size) + "x" + std::to_string(grid_size) + " grid");
  }
  // Partial Fisher-Yates over the flattened cell indices.
  std::vector<int> order(static_cast<std::size_t>(cells));
  for (int i = 0; i < cells; ++i) order[static_cast<std::size_t>(i)] = i;
  GridState state;
  state.grid_size = grid_size;
  state.specs = object_specs_for(num_objects);
  for (int i = 0; i < num_objects; ++i) {
    const auto remaining = static_cast<std::uint64_t>(cells - i);
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng() % remaining);
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
    const int flat = order[static_cast<std::size_t>(i)];
    state.positions.push_back(Cell{flat % grid_size, flat / grid_size});
  }
  return state;
}

GridState grid_step(const GridState& state, const GridAction& action) {
  if (action.object_id < 0 || action.object_id >= static_cast<int>(state.positions.size())) return state;
  Cell target = state.positions[static_cast<std::size_t>(action.object_id)];
  switch (action.direction) {
    case Direction::up: --target.row; break;
    case Direction::right: ++target.col; break;
    case Direction::down: ++target.row; break;
    case Direction::left: --target.col; break;
  }
  if (target.col < 0 || target.row < 0 || target.col >= state.grid_size || target.row >= state.grid_size) return state;
  if (std::find(state.positions.begin(), state.positions.end(), target) != state.positions.end()) return state;
  GridState next = state;
  next.positions[static_cast<std::size_t>(action.object_id)] = target;
  return next;
}

bool grid_state_valid(const GridState& state) {
  if (state.specs.size() != state.positions.size()) return false;
  for (std::size_t i = 0; i < state.positions.size(); ++i) {
    const Cell& c = state.positions[i];
    if (c.col < 0 || c.row < 0 || c.col >= state.grid_size || c.row >= state.grid_size) return false;
    for (std::size_t j = i + 1; j < state.positions.size(); ++j) {
      if (state.positions[j] == c) return false;
    }
  }
  return true;
}

namespace {

bool shape_covers(Shape shape, int local_x, int local_y) {
  const double cx = local_x + 0.5;
  const double cy = local_y + 0.5;
  const double half = kCellPixels / 2.0;
  switch (shape) {
    case Shape::square:
      return true;
    case Shape::circle:
      return (cx - half) * (cx - half) + (cy - half) * (cy - half) <= half * half;
    case Shape::triangle:
      // Apex at the top middle, base along the bottom edge.
      return std::abs(cx - half) <= cy / 2.0;
  }
  return false;
}

void put_pixel(Frame& frame, int y, int x, const Rgb& rgb) {
  for (int c = 0; c < kFrameChannels; ++c) frame.at(y, x, c) = rgb[static_cast<std::size_t>(c)];
}

}  // namespace

Frame grid_render(const GridState& state) {
  Frame frame;
  const int cell = kFrameWidth / state.grid_size;
  const auto& palette = shape_palette();
  for (std::size_t i = 0; i < state.positions.size(); ++i) {
    const Cell& pos = state.positions[i];
    const ObjectSpec& spec = state.specs[i];
    const Rgb& rgb = palette[spec.color % palette.size()];
    for (int ly = 0; ly < cell; ++ly) {
      for (int lx = 0; lx < cell; ++lx) {
        // Shapes are defined on a 10-pixel cell; rescale for other grid sizes.
        const int sx = lx * kCellPixels / cell;
        const int sy = ly * kCellPixels / cell;
        if (shape_covers(spec.shape, sx, sy)) put_pixel(frame, pos.row * cell + ly, pos.col * cell + lx, rgb);
      }
    }
  }
  return frame;
}

BallState balls_init(int num_balls, double radius, Rng& rng) {
  if (num_balls < 1) throw ValidationError("num_balls must be at least 1");
  if (!(radius > 0.0)) throw ValidationError("radius must be positive");
  const double lo = radius;
  const double hi_x = kFrameWidth - radius;
  const double hi_y = kFrameHeight - radius;
  if (hi_x < lo || hi_y < lo) throw CapacityError("ball radius does not fit in the arena");

  BallState state;
  state.radius = radius;
  constexpr int kMaxAttempts = 10000;
  for (int b = 0; b < num_balls; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const Vec2 p{lo + (hi_x - lo) * uniform01(rng), lo + (hi_y - lo) * uniform01(rng)};
      placed = std::all_of(state.positions.begin(), state.positions.end(), [&](const Vec2& q) {
        return std::hypot(p.x - q.x, p.y - q.y) >= 2.0 * radius;
      });
      if (placed) state.positions.push_back(p);
    }
    if (!placed) {
      throw CapacityError("could not place " + std::to_string(num_balls) + " non-overlapping balls of radius " +
                          std::to_string(radius));
    }
  }
  for (int b = 0; b < num_balls; ++b) {
    Vec2 v;
    do {
      v.x = -kMaxVelocityComponent + 2.0 * kMaxVelocityComponent * uniform01(rng);
      v.y = -kMaxVelocityComponent + 2.0 * kMaxVelocityComponent * uniform01(rng);
    } while (std::hypot(v.x, v.y) < kMinSpeed);
    state.velocities.push_back(v);
  }
  return state;
}

namespace {

// Advance one coordinate and reflect about whichever wall it crossed.
void advance_axis(double& pos, double& vel, double lo, double hi) {
  pos += vel;
  while (pos < lo || pos > hi) {
    if (pos < lo) pos = 2.0 * lo - pos;
    else pos = 2.0 * hi - pos;
    vel = -vel;
  }
}

}  // namespace

BallState balls_step(const BallState& state) {
  BallState next = state;
  const double r = state.radius;
  for (std::size_t b = 0; b < next.positions.size(); ++b) {
    advance_axis(next.positions[b].x, next.velocities[b].x, r, kFrameWidth - r);
    advance_axis(next.positions[b].y, next.velocities[b].y, r, kFrameHeight - r);
  }
  return next;
}

Frame balls_render(const BallState& state) {
  Frame frame;
  const auto& palette = ball_palette();
  const double r = state.radius;
  for (std::size_t b = 0; b < state.positions.size(); ++b) {
    const Vec2& p = state.positions[b];
    const Rgb& rgb = palette[b % palette.size()];
    const int y0 = std::max(0, static_cast<int>(std::floor(p.y - r)));
    const int y1 = std::min(kFrameHeight - 1, static_cast<int>(std::ceil(p.y + r)));
    const int x0 = std::max(0, static_cast<int>(std::floor(p.x - r)));
    const int x1 = std::min(kFrameWidth - 1, static_cast<int>(std::ceil(p.x + r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - p.x;
        const double dy = y + 0.5 - p.y;
        if (dx * dx + dy * dy <= r * r) put_pixel(frame, y, x, rgb);
      }
    }
  }
  return frame;
}

}  // namespace rsm::envs
