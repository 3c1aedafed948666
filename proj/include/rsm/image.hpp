#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rsm/envs.hpp"

namespace rsm {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // HWC, 3 channels
};

void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);

RgbImage frame_image(const envs::Frame& frame);
// Values in [0, 1], CHW layout of a 50x50x3 frame; rounded to 8 bits.
RgbImage chw_to_image(const float* chw);

}  // namespace rsm
