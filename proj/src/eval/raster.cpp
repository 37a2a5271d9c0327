#include "blockforge/eval/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <png.h>

#include "blockforge/core/error.hpp"

namespace blockforge {

std::array<double, 3> Image::pixel(int row, int col) const {
  const auto i = 3 * (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col));
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

std::uint64_t Image::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : rgb) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::array<double, 3> category_color(int category) {
  const double h = 6.0 * static_cast<double>(category) / CategoryTaxonomy::kRealCount;
  const int sector = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double q = 1.0 - f;
  switch (sector) {
  case 0: return {1.0, f, 0.0};
  case 1: return {q, 1.0, 0.0};
  case 2: return {0.0, 1.0, f};
  case 3: return {0.0, q, 1.0};
  case 4: return {f, 0.0, 1.0};
  default: return {1.0, 0.0, q};
  }
}

Image rasterize_layout(const BoxLayout &layout, int resolution) {
  if (resolution <= 0) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
  Image img;
  img.width = img.height = resolution;
  img.rgb.assign(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution) * 3, 1.0);

  std::vector<ComponentBox> boxes;
  for (const auto &b : layout.boxes) {
    if (!b.is_empty()) boxes.push_back(b);
  }
  std::sort(boxes.begin(), boxes.end(), [](const ComponentBox &a, const ComponentBox &b) {
    const double ta = a.center[2] + 0.5 * a.size[2];
    const double tb = b.center[2] + 0.5 * b.size[2];
    if (ta != tb) return ta > tb;
    if (a.category != b.category) return a.category < b.category;
    if (a.center != b.center) return a.center < b.center;
    return a.size < b.size;
  });

  const double res = static_cast<double>(resolution);
  for (const auto &b : boxes) {
    const auto color = category_color(b.category);
    const double x0 = b.center[0] - 0.5 * b.size[0], x1 = b.center[0] + 0.5 * b.size[0];
    const double y0 = b.center[1] - 0.5 * b.size[1], y1 = b.center[1] + 0.5 * b.size[1];
    // Column j covers x = (j + 0.5) / res; row i covers y = 1 - (i + 0.5) / res.
    const int c0 = std::max(0, static_cast<int>(std::ceil(x0 * res - 0.5)));
    const int c1 = std::min(resolution - 1, static_cast<int>(std::floor(x1 * res - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::ceil((1.0 - y1) * res - 0.5)));
    const int r1 = std::min(resolution - 1, static_cast<int>(std::floor((1.0 - y0) * res - 0.5)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const auto i = 3 * (static_cast<std::size_t>(r) * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(c));
        for (int ch = 0; ch < 3; ++ch) {
          img.rgb[i + static_cast<std::size_t>(ch)] =
              kRasterAlpha * color[static_cast<std::size_t>(ch)] + (1.0 - kRasterAlpha) * img.rgb[i + static_cast<std::size_t>(ch)];
        }
      }
    }
  }
  return img;
}

void write_png(const Image &image, const std::filesystem::path &path) {
  std::FILE *fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(ErrorCode::IoError, "png encoding failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * 3);
  for (int r = 0; r < image.height; ++r) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const double v = image.rgb[static_cast<std::size_t>(r) * row.size() + i];
      row[i] = static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

} // namespace blockforge
