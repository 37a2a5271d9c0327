#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace blockforge {

/// The fixed set of real component categories plus the trailing empty slot
/// used for padding. Ordering is part of the model's tensor layout.
class CategoryTaxonomy {
public:
  static constexpr int kRealCount = 13;
  static constexpr int kEmpty = kRealCount;
  static constexpr int kOneHotWidth = kRealCount + 1;

  static constexpr int kWall = 0;
  static constexpr int kWindow = 1;
  static constexpr int kDoor = 2;
  static constexpr int kRoof = 3;
  static constexpr int kFloor = 4;
  static constexpr int kStairs = 5;
  static constexpr int kColumn = 6;
  static constexpr int kBalcony = 7;
  static constexpr int kChimney = 8;
  static constexpr int kRailing = 9;
  static constexpr int kGarage = 10;
  static constexpr int kAwning = 11;
  static constexpr int kDecoration = 12;

  static const std::array<std::string_view, kRealCount> &names();

  /// "empty" maps to kEmpty; unknown names yield nullopt.
  static std::optional<int> index_of(std::string_view name);

  /// Name for any index in [0, kEmpty]; kEmpty yields "empty".
  static std::string name_of(int index);

  static bool is_real(int index) { return index >= 0 && index < kRealCount; }
  static bool is_opening(int index) { return index == kWindow || index == kDoor; }
};

} // namespace blockforge
