#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "blockforge/layout/box.hpp"

namespace blockforge {

inline constexpr double kRasterAlpha = 0.3;

/// RGB image with channels in [0, 1], row-major, row 0 at y = 1.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  std::array<double, 3> pixel(int row, int col) const;
  std::uint64_t hash() const;
};

/// Category color: HSV hue = index / K at full saturation and value.
std::array<double, 3> category_color(int category);

/// Top-down orthographic view (looking along -z) of the unit square. Each
/// real box is a filled rectangle composited with alpha 0.3 over a white
/// background, drawn in descending top elevation, ties by category index and
/// then center. A pixel is covered when its center lies in the box's closed
/// x/y extent.
Image rasterize_layout(const BoxLayout &layout, int resolution = 256);

/// 8-bit RGB PNG.
void write_png(const Image &image, const std::filesystem::path &path);

} // namespace blockforge
