#include "blockforge/layout/tensor.hpp"

#include <algorithm>

#include "blockforge/core/error.hpp"

namespace blockforge {

LayoutTensor encode(const BoxLayout &layout) {
  LayoutTensor t;
  t.values = Matrix::Zero(static_cast<Eigen::Index>(layout.boxes.size()), kLayoutDims);
  for (std::size_t i = 0; i < layout.boxes.size(); ++i) {
    const auto &b = layout.boxes[i];
    const auto r = static_cast<Eigen::Index>(i);
    if (b.category < 0 || b.category > CategoryTaxonomy::kEmpty) {
      throw Error(ErrorCode::UnknownCategory, "category index " + std::to_string(b.category));
    }
    for (int k = 0; k < 3; ++k) {
      t.values(r, k) = b.center[k];
      t.values(r, 3 + k) = b.size[k];
    }
    t.values(r, kClassOffset + b.category) = 1.0;
  }
  return t;
}

int row_category(const Matrix &values, Eigen::Index row) {
  int best = 0;
  double best_value = values(row, kClassOffset);
  for (int c = 1; c < CategoryTaxonomy::kOneHotWidth; ++c) {
    if (values(row, kClassOffset + c) > best_value) {
      best_value = values(row, kClassOffset + c);
      best = c;
    }
  }
  return best;
}

BoxLayout decode(const LayoutTensor &tensor, bool drop_empty) {
  if (tensor.dims() != kLayoutDims) {
    throw Error(ErrorCode::BadShape, "expected " + std::to_string(kLayoutDims) + " columns, got " +
                                         std::to_string(tensor.dims()));
  }
  BoxLayout out;
  for (Eigen::Index r = 0; r < tensor.values.rows(); ++r) {
    ComponentBox b;
    b.category = row_category(tensor.values, r);
    if (drop_empty && b.is_empty()) continue;
    for (int k = 0; k < 3; ++k) {
      b.center[k] = std::clamp(tensor.values(r, k), 0.0, 1.0);
      b.size[k] = std::clamp(tensor.values(r, 3 + k), kMinBoxSize, 1.0);
    }
    out.boxes.push_back(b);
  }
  return out;
}

} // namespace blockforge
