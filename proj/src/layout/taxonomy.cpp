#include "blockforge/layout/taxonomy.hpp"

#include "blockforge/core/error.hpp"

namespace blockforge {

const std::array<std::string_view, CategoryTaxonomy::kRealCount> &CategoryTaxonomy::names() {
  static constexpr std::array<std::string_view, kRealCount> kNames = {
      "wall",    "window",  "door",    "roof",   "floor",  "stairs",    "column",
      "balcony", "chimney", "railing", "garage", "awning", "decoration"};
  return kNames;
}

std::optional<int> CategoryTaxonomy::index_of(std::string_view name) {
  if (name == "empty") return kEmpty;
  const auto &all = names();
  for (int i = 0; i < kRealCount; ++i) {
    if (all[static_cast<std::size_t>(i)] == name) return i;
  }
  return std::nullopt;
}

std::string CategoryTaxonomy::name_of(int index) {
  if (index == kEmpty) return "empty";
  if (!is_real(index)) {
    throw Error(ErrorCode::UnknownCategory, "category index " + std::to_string(index));
  }
  return std::string(names()[static_cast<std::size_t>(index)]);
}

} // namespace blockforge
