#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "blockforge/core/matrix.hpp"

namespace blockforge::nn {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape *tape = nullptr;
  int id = -1;

  const Matrix &value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

using Gradients = std::map<std::string, Matrix>;

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order and
/// back-propagated in reverse. A tape built with record = false keeps only
/// values (inference).
class Tape {
public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix value);

  /// Leaf bound to an externally owned parameter value (not copied).
  Var parameter(const std::string &name, const Matrix &value);

  const Matrix &value(Var v) const;

  /// Gradient buffer of a node, zero-initialised on first access.
  Matrix &grad(Var v);
  bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }

  using Backward = std::function<void(Tape &, int self)>;

  /// Appends an op result. `inputs` decide whether the node needs gradients.
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward backward);

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and runs all backward closures.
  void backward(Var scalar);

  /// Parameter gradients accumulated by backward(), keyed by parameter name.
  Gradients parameter_grads() const;

  /// Convenience for closures: the node's own output gradient.
  const Matrix &out_grad(int self) const { return nodes_[static_cast<std::size_t>(self)].grad; }

private:
  struct Node {
    Matrix own;
    const Matrix *external = nullptr;
    Matrix grad;
    Backward backward;
    std::string param_name;
    bool needs_grad = false;
  };

  bool record_;
  std::deque<Node> nodes_;
};

// Dense ops. Shapes follow Eigen conventions (rows x cols).
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var add_row(Var a, Var row);
Var scale(Var a, double factor);
Var silu(Var a);
Var gelu(Var a);
Var layer_norm(Var a, double eps = 1e-6);
Var cols(Var a, Eigen::Index start, Eigen::Index count);

/// out = x * (1 + scale[s]) + shift[s], where row r of x belongs to segment
/// s = r / rows_per_segment and shift/scale hold one row per segment.
Var modulate(Var x, Var shift, Var scale, Eigen::Index rows_per_segment);

/// out = x + gate[s] * y, segments as in modulate.
Var gated_residual(Var x, Var y, Var gate, Eigen::Index rows_per_segment);

/// out = addend + factor[s] * a, with a constant addend and per-segment factors.
Var segment_affine(Var a, const Matrix &addend, const std::vector<double> &factor,
                   Eigen::Index rows_per_segment);

/// Multi-head scaled dot-product attention. Query rows in
/// [q_offsets[s], q_offsets[s+1]) attend to key/value rows in
/// [kv_offsets[s], kv_offsets[s+1]). No positional terms: the op is
/// equivariant to permutations of query rows within a segment.
Var attention(Var q, Var k, Var v, const std::vector<Eigen::Index> &q_offsets,
              const std::vector<Eigen::Index> &kv_offsets, int heads);

/// Builds stacked text context rows: per segment, first row = null + mean of
/// the segment's token rows (null alone when empty), followed by the token
/// rows gathered from `table`.
Var text_context(Var table, Var null_row, const std::vector<std::vector<int>> &tokens);

/// mean((a - target)^2) as a 1x1 node.
Var mean_squared_error(Var a, const Matrix &target);

/// Sum over segments of weight[s] * sum over unordered row pairs (i < j) in
/// the segment of IoU(decoded box i, decoded box j). Rows are decoded from
/// the layout row format (center, size, class logits) with clamping; only
/// rows with mask[r] = true take part. Returns a 1x1 node.
Var iou_penalty(Var x0, const std::vector<double> &weight, const std::vector<bool> &mask,
                Eigen::Index rows_per_segment, double min_size);

} // namespace blockforge::nn
