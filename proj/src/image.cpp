#include "rsm/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rsm/binary_io.hpp"
#include "rsm/error.hpp"

namespace rsm {

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height) * 3) {
    throw ValidationError("write_png: pixel buffer does not match the image size");
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png encode failed: ") + img.message);
  }
  std::vector<std::uint8_t> bytes(size);
  if (!png_image_write_to_memory(&img, bytes.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png encode failed: ") + img.message);
  }
  bytes.resize(size);
  io::write_file_atomic(path, bytes);
}

RgbImage read_png(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw FormatError("cannot read png " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  RgbImage out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    throw FormatError("cannot decode png " + path.string() + ": " + img.message);
  }
  return out;
}

RgbImage frame_image(const envs::Frame& frame) {
  RgbImage out;
  out.width = envs::kFrameWidth;
  out.height = envs::kFrameHeight;
  out.pixels.assign(frame.pixels.begin(), frame.pixels.end());
  return out;
}

RgbImage chw_to_image(const float* chw) {
  RgbImage out;
  out.width = envs::kFrameWidth;
  out.height = envs::kFrameHeight;
  const int plane = envs::kFrameHeight * envs::kFrameWidth;
  out.pixels.resize(static_cast<std::size_t>(plane) * 3);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < plane; ++i) {
      const float v = std::clamp(chw[c * plane + i], 0.0f, 1.0f);
      out.pixels[static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(c)] =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return out;
}

}  // namespace rsm
