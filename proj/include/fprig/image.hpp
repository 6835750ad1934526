#pragma once

// Binary PPM (P6, maxval 255) images and the face-blur filter.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fprig/session_model.hpp"

namespace fprig {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  std::uint8_t* pixel(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
};

struct DecodedPpm {
  Image image;
  std::size_t pixel_offset = 0;  // where the raster starts in the encoded bytes
};

DecodedPpm decode_ppm(std::string_view bytes);  // Error(format)
std::string encode_ppm(const Image& image);

// Intersection of `box` with the image; nullopt when empty.
std::optional<Box> clip_box(const Box& box, int width, int height);

/// Replaces each box with three passes of an 11x11 box blur computed inside
/// the box (neighbourhoods clamp to the box border, integer rounding).
/// Bytes outside every box, and the PPM header, are returned unchanged.
std::string blur_faces(std::string_view ppm_bytes, std::span<const Box> boxes);

// Population variance of all channel values inside `box`.
double region_variance(const Image& image, const Box& box);

}  // namespace fprig
