#include "blockforge/layout/box.hpp"

#include <algorithm>

namespace blockforge {

Vec3 ComponentBox::lo() const {
  return {center[0] - 0.5 * size[0], center[1] - 0.5 * size[1], center[2] - 0.5 * size[2]};
}

Vec3 ComponentBox::hi() const {
  return {center[0] + 0.5 * size[0], center[1] + 0.5 * size[1], center[2] + 0.5 * size[2]};
}

std::size_t BoxLayout::real_count() const {
  return static_cast<std::size_t>(
      std::count_if(boxes.begin(), boxes.end(), [](const ComponentBox &b) { return !b.is_empty(); }));
}

std::vector<ComponentBox> sorted_boxes(std::vector<ComponentBox> boxes) {
  std::sort(boxes.begin(), boxes.end(), [](const ComponentBox &a, const ComponentBox &b) {
    if (a.category != b.category) return a.category < b.category;
    if (a.center != b.center) return a.center < b.center;
    return a.size < b.size;
  });
  return boxes;
}

bool operator==(const BoxLayout &a, const BoxLayout &b) {
  return a.id == b.id && a.prompt == b.prompt && a.style == b.style &&
         sorted_boxes(a.boxes) == sorted_boxes(b.boxes);
}

} // namespace blockforge
