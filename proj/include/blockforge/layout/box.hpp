#pragma once

#include <array>
#include <string>
#include <vector>

#include "blockforge/layout/taxonomy.hpp"

namespace blockforge {

using Vec3 = std::array<double, 3>;

/// Smallest size any decoded box may have along an axis.
inline constexpr double kMinBoxSize = 0.005;

/// One building component: axis-aligned box with full extents `size`.
struct ComponentBox {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 size{0.0, 0.0, 0.0};
  int category = CategoryTaxonomy::kEmpty;

  bool is_empty() const { return category == CategoryTaxonomy::kEmpty; }
  Vec3 lo() const;
  Vec3 hi() const;
  double volume() const { return size[0] * size[1] * size[2]; }

  friend bool operator==(const ComponentBox &, const ComponentBox &) = default;
  friend auto operator<=>(const ComponentBox &, const ComponentBox &) = default;
};

/// Unordered set of component boxes. Equality ignores box order.
struct BoxLayout {
  std::string id;
  std::string prompt;
  std::string style;
  std::vector<ComponentBox> boxes;

  std::size_t real_count() const;

  friend bool operator==(const BoxLayout &a, const BoxLayout &b);
};

/// Boxes in canonical (category, center, size) order.
std::vector<ComponentBox> sorted_boxes(std::vector<ComponentBox> boxes);

} // namespace blockforge
