#pragma once

#include "blockforge/core/matrix.hpp"
#include "blockforge/layout/box.hpp"

namespace blockforge {

/// Row format: center (3), size (3), one-hot category (K + 1).
inline constexpr int kLayoutDims = 6 + CategoryTaxonomy::kOneHotWidth;
inline constexpr int kClassOffset = 6;

/// Dense per-box encoding of a padded layout, one row per box.
struct LayoutTensor {
  Matrix values;

  int rows() const { return static_cast<int>(values.rows()); }
  int dims() const { return static_cast<int>(values.cols()); }
};

LayoutTensor encode(const BoxLayout &layout);

/// Per-row argmax over the class columns, clamps center to [0, 1] and size to
/// [kMinBoxSize, 1]. Throws BadShape on a wrong column count.
BoxLayout decode(const LayoutTensor &tensor, bool drop_empty);

/// Argmax over class columns of one row; ties resolve to the lower index.
int row_category(const Matrix &values, Eigen::Index row);

} // namespace blockforge
