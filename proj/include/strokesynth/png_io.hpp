#pragma once

// 8-bit PNG load/save through libpng's simplified API, plus a colored
// label-map writer for superpixel debugging.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "superpixel.hpp"

namespace strokesynth {

/// Loads an 8-bit gray/RGB/RGBA PNG as an RGB image in [0,1]. Alpha is
/// composited over white.
inline RasterImage load_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!std::ifstream(path, std::ios::binary)) throw Error(ErrorKind::Io, "cannot open " + path + " for reading");
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Unsupported, "cannot decode " + path + " as PNG: " + msg);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorKind::Unsupported, path + ": unsupported PNG format (16-bit channels); only 8-bit PNG is accepted");
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Unsupported, "cannot decode " + path + ": " + msg);
  }
  const int w = int(image.width), h = int(image.height);
  RasterImage out(w, h, 3);
  auto d = out.data();
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const double a = buf[4 * i + 3] / 255.0;
    for (std::size_t c = 0; c < 3; ++c) d[3 * i + c] = a * (buf[4 * i + c] / 255.0) + (1.0 - a);
  }
  return out;
}

inline std::uint8_t quantize_byte(double v) {
  const double s = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(s);
}

/// Writes a 1- or 3-channel image as 8-bit PNG (round-half-up quantization).
inline void save_png(const RasterImage& img, const std::string& path) {
  if (img.empty()) fail("save_png: empty image");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(img.width());
  image.height = png_uint_32(img.height());
  image.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(img.data().size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = quantize_byte(img.data()[i]);
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Io, "cannot write " + path + ": " + msg);
  }
}

/// Debug view of a label map: each label gets a hashed RGB color.
inline RasterImage label_map_image(const LabelMap& lm) {
  RasterImage out(lm.width, lm.height, 3);
  for (int y = 0; y < lm.height; ++y)
    for (int x = 0; x < lm.width; ++x) {
      std::uint32_t hsh = std::uint32_t(lm.at(x, y)) * 2654435761u + 0x9e3779b9u;
      hsh ^= hsh >> 15;
      hsh *= 0x85ebca6bu;
      hsh ^= hsh >> 13;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = double((hsh >> (8 * c)) & 0xffu) / 255.0;
    }
  return out;
}

inline void save_label_png(const LabelMap& lm, const std::string& path) { save_png(label_map_image(lm), path); }

}  // namespace strokesynth
