#include "blockforge/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "blockforge/core/error.hpp"

namespace blockforge::nn {

namespace {

void require(bool condition, const char *what) {
  if (!condition) throw Error(ErrorCode::BadShape, what);
}

} // namespace

const Matrix &Var::value() const { return tape->value(*this); }

Var Tape::constant(Matrix value) {
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(const std::string &name, const Matrix &value) {
  Node n;
  n.external = &value;
  n.needs_grad = record_;
  if (record_) n.param_name = name;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix &Tape::value(Var v) const {
  const Node &n = nodes_[static_cast<std::size_t>(v.id)];
  return n.external ? *n.external : n.own;
}

Matrix &Tape::grad(Var v) {
  Node &n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) {
    const Matrix &val = n.external ? *n.external : n.own;
    n.grad = Matrix::Zero(val.rows(), val.cols());
  }
  return n.grad;
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  Node n;
  n.own = std::move(value);
  if (record_) {
    for (Var in : inputs) {
      if (nodes_[static_cast<std::size_t>(in.id)].needs_grad) n.needs_grad = true;
    }
    if (n.needs_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var scalar) {
  require(record_, "backward on a non-recording tape");
  require(value(scalar).size() == 1, "backward needs a scalar output");
  grad(scalar).setOnes();
  for (int i = scalar.id; i >= 0; --i) {
    Node &n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

Gradients Tape::parameter_grads() const {
  Gradients out;
  for (const auto &n : nodes_) {
    if (n.param_name.empty()) continue;
    const Matrix &val = n.external ? *n.external : n.own;
    auto [it, inserted] = out.try_emplace(n.param_name);
    if (inserted) it->second = Matrix::Zero(val.rows(), val.cols());
    if (n.grad.size() != 0) it->second += n.grad;
  }
  return out;
}

Var matmul(Var a, Var b) {
  Tape &t = *a.tape;
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  return t.push(std::move(out), {a, b}, [a, b](Tape &tp, int self) {
    const Matrix &g = tp.out_grad(self);
    if (tp.needs_grad(a)) tp.grad(a).noalias() += g * tp.value(b).transpose();
    if (tp.needs_grad(b)) tp.grad(b).noalias() += tp.value(a).transpose() * g;
  });
}

Var add(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  return a.tape->push(a.value() + b.value(), {a, b}, [a, b](Tape &tp, int self) {
    const Matrix &g = tp.out_grad(self);
    if (tp.needs_grad(a)) tp.grad(a) += g;
    if (tp.needs_grad(b)) tp.grad(b) += g;
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: shape mismatch");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape->push(std::move(out), {a, row}, [a, row](Tape &tp, int self) {
    const Matrix &g = tp.out_grad(self);
    if (tp.needs_grad(a)) tp.grad(a) += g;
    if (tp.needs_grad(row)) tp.grad(row) += g.colwise().sum();
  });
}

Var scale(Var a, double factor) {
  return a.tape->push(a.value() * factor, {a}, [a, factor](Tape &tp, int self) {
    tp.grad(a) += tp.out_grad(self) * factor;
  });
}

Var silu(Var a) {
  const Matrix &x = a.value();
  Matrix sig = (1.0 + (-x.array()).exp()).inverse().matrix();
  Matrix out = (x.array() * sig.array()).matrix();
  return a.tape->push(std::move(out), {a}, [a, sig = std::move(sig)](Tape &tp, int self) {
    const auto x = tp.value(a).array();
    const auto s = sig.array();
    tp.grad(a).array() += tp.out_grad(self).array() * (s * (1.0 + x * (1.0 - s)));
  });
}

Var gelu(Var a) {
  static constexpr double kC = 0.7978845608028654; // sqrt(2 / pi)
  static constexpr double kA = 0.044715;
  const auto x = a.value().array();
  Matrix th = (kC * (x + kA * x.cube())).tanh().matrix();
  Matrix out = (0.5 * x * (1.0 + th.array())).matrix();
  return a.tape->push(std::move(out), {a}, [a, th = std::move(th)](Tape &tp, int self) {
    const auto x = tp.value(a).array();
    const auto t = th.array();
    const auto d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t.square()) * kC * (1.0 + 3.0 * kA * x.square());
    tp.grad(a).array() += tp.out_grad(self).array() * d;
  });
}

Var layer_norm(Var a, double eps) {
  const Matrix &x = a.value();
  const auto n = static_cast<double>(x.cols());
  Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / n) + eps).sqrt().inverse().matrix();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix out = xhat;
  return a.tape->push(std::move(out), {a},
                      [a, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape &tp, int self) {
                        const Matrix &g = tp.out_grad(self);
                        const auto n = static_cast<double>(g.cols());
                        Eigen::VectorXd gmean = g.rowwise().sum() / n;
                        Eigen::VectorXd gx = (g.array() * xhat.array()).rowwise().sum() / n;
                        Matrix dx = g.colwise() - gmean;
                        dx.array() -= xhat.array().colwise() * gx.array();
                        dx.array().colwise() *= inv_std.array();
                        tp.grad(a) += dx;
                      });
}

Var cols(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && start + count <= a.cols(), "cols: range out of bounds");
  Matrix out = a.value().middleCols(start, count);
  return a.tape->push(std::move(out), {a}, [a, start, count](Tape &tp, int self) {
    tp.grad(a).middleCols(start, count) += tp.out_grad(self);
  });
}

Var modulate(Var x, Var shift, Var scale_v, Eigen::Index rows_per_segment) {
  const Matrix &xv = x.value();
  const Eigen::Index segments = shift.rows();
  require(xv.rows() == segments * rows_per_segment, "modulate: segment count mismatch");
  require(shift.cols() == xv.cols() && scale_v.cols() == xv.cols() && scale_v.rows() == segments,
          "modulate: shape mismatch");
  Matrix out(xv.rows(), xv.cols());
  for (Eigen::Index s = 0; s < segments; ++s) {
    auto block = xv.middleRows(s * rows_per_segment, rows_per_segment);
    out.middleRows(s * rows_per_segment, rows_per_segment) =
        (block.array().rowwise() * (1.0 + scale_v.value().row(s).array())).rowwise() +
        shift.value().row(s).array();
  }
  return x.tape->push(std::move(out), {x, shift, scale_v},
                      [x, shift, scale_v, rows_per_segment](Tape &tp, int self) {
                        const Matrix &g = tp.out_grad(self);
                        const Matrix &xv = tp.value(x);
                        const Eigen::Index segments = tp.value(shift).rows();
                        for (Eigen::Index s = 0; s < segments; ++s) {
                          auto gb = g.middleRows(s * rows_per_segment, rows_per_segment);
                          if (tp.needs_grad(x)) {
                            tp.grad(x).middleRows(s * rows_per_segment, rows_per_segment).array() +=
                                gb.array().rowwise() * (1.0 + tp.value(scale_v).row(s).array());
                          }
                          if (tp.needs_grad(scale_v)) {
                            tp.grad(scale_v).row(s) +=
                                (gb.array() * xv.middleRows(s * rows_per_segment, rows_per_segment).array())
                                    .colwise()
                                    .sum()
                                    .matrix();
                          }
                          if (tp.needs_grad(shift)) tp.grad(shift).row(s) += gb.colwise().sum();
                        }
                      });
}

Var gated_residual(Var x, Var y, Var gate, Eigen::Index rows_per_segment) {
  const Eigen::Index segments = gate.rows();
  require(x.rows() == y.rows() && x.cols() == y.cols(), "gated_residual: shape mismatch");
  require(x.rows() == segments * rows_per_segment && gate.cols() == x.cols(),
          "gated_residual: segment mismatch");
  Matrix out = x.value();
  for (Eigen::Index s = 0; s < segments; ++s) {
    out.middleRows(s * rows_per_segment, rows_per_segment).array() +=
        y.value().middleRows(s * rows_per_segment, rows_per_segment).array().rowwise() *
        gate.value().row(s).array();
  }
  return x.tape->push(std::move(out), {x, y, gate}, [x, y, gate, rows_per_segment](Tape &tp, int self) {
    const Matrix &g = tp.out_grad(self);
    if (tp.needs_grad(x)) tp.grad(x) += g;
    const Eigen::Index segments = tp.value(gate).rows();
    for (Eigen::Index s = 0; s < segments; ++s) {
      auto gb = g.middleRows(s * rows_per_segment, rows_per_segment);
      if (tp.needs_grad(y)) {
        tp.grad(y).middleRows(s * rows_per_segment, rows_per_segment).array() +=
            gb.array().rowwise() * tp.value(gate).row(s).array();
      }
      if (tp.needs_grad(gate)) {
        tp.grad(gate).row(s) +=
            (gb.array() * tp.value(y).middleRows(s * rows_per_segment, rows_per_segment).array())
                .colwise()
                .sum()
                .matrix();
      }
    }
  });
}

Var segment_affine(Var a, const Matrix &addend, const std::vector<double> &factor,
                   Eigen::Index rows_per_segment) {
  require(addend.rows() == a.rows() && addend.cols() == a.cols(), "segment_affine: shape mismatch");
  require(a.rows() == static_cast<Eigen::Index>(factor.size()) * rows_per_segment,
          "segment_affine: segment mismatch");
  Matrix out = addend;
  for (std::size_t s = 0; s < factor.size(); ++s) {
    const auto r0 = static_cast<Eigen::Index>(s) * rows_per_segment;
    out.middleRows(r0, rows_per_segment) += factor[s] * a.value().middleRows(r0, rows_per_segment);
  }
  return a.tape->push(std::move(out), {a}, [a, factor, rows_per_segment](Tape &tp, int self) {
    const Matrix &g = tp.out_grad(self);
    for (std::size_t s = 0; s < factor.size(); ++s) {
      const auto r0 = static_cast<Eigen::Index>(s) * rows_per_segment;
      tp.grad(a).middleRows(r0, rows_per_segment) += factor[s] * g.middleRows(r0, rows_per_segment);
    }
  });
}

Var attention(Var q, Var k, Var v, const std::vector<Eigen::Index> &q_offsets,
              const std::vector<Eigen::Index> &kv_offsets, int heads) {
  require(q_offsets.size() == kv_offsets.size() && !q_offsets.empty(), "attention: offsets mismatch");
  require(q.cols() == k.cols() && k.cols() == v.cols() && k.rows() == v.rows(),
          "attention: shape mismatch");
  require(heads > 0 && q.cols() % heads == 0, "attention: width not divisible by heads");
  const Eigen::Index dh = q.cols() / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t segments = q_offsets.size() - 1;

  const Matrix &qv = q.value();
  const Matrix &kv = k.value();
  const Matrix &vv = v.value();
  Matrix out = Matrix::Zero(qv.rows(), qv.cols());
  auto probs = std::make_shared<std::vector<Matrix>>();
  probs->reserve(segments * static_cast<std::size_t>(heads));
  for (std::size_t s = 0; s < segments; ++s) {
    const Eigen::Index q0 = q_offsets[s], nq = q_offsets[s + 1] - q0;
    const Eigen::Index k0 = kv_offsets[s], nk = kv_offsets[s + 1] - k0;
    for (int h = 0; h < heads; ++h) {
      Matrix scores(nq, nk);
      scores.noalias() =
          qv.block(q0, h * dh, nq, dh) * kv.block(k0, h * dh, nk, dh).transpose() * scale_factor;
      for (Eigen::Index r = 0; r < nq; ++r) {
        const double m = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - m).exp().matrix();
        scores.row(r) /= scores.row(r).sum();
      }
      out.block(q0, h * dh, nq, dh).noalias() = scores * vv.block(k0, h * dh, nk, dh);
      probs->push_back(std::move(scores));
    }
  }
  return q.tape->push(
      std::move(out), {q, k, v},
      [q, k, v, q_offsets, kv_offsets, heads, dh, scale_factor, probs](Tape &tp, int self) {
        const Matrix &g = tp.out_grad(self);
        const Matrix &qv = tp.value(q);
        const Matrix &kv = tp.value(k);
        const Matrix &vv = tp.value(v);
        const bool gq = tp.needs_grad(q), gk = tp.needs_grad(k), gv = tp.needs_grad(v);
        std::size_t idx = 0;
        for (std::size_t s = 0; s + 1 < q_offsets.size(); ++s) {
          const Eigen::Index q0 = q_offsets[s], nq = q_offsets[s + 1] - q0;
          const Eigen::Index k0 = kv_offsets[s], nk = kv_offsets[s + 1] - k0;
          for (int h = 0; h < heads; ++h, ++idx) {
            const Matrix &p = (*probs)[idx];
            auto go = g.block(q0, h * dh, nq, dh);
            if (gv) tp.grad(v).block(k0, h * dh, nk, dh).noalias() += p.transpose() * go;
            Matrix dp(nq, nk);
            dp.noalias() = go * vv.block(k0, h * dh, nk, dh).transpose();
            Eigen::VectorXd rowdot = (dp.array() * p.array()).rowwise().sum();
            Matrix ds = (p.array() * (dp.colwise() - rowdot).array()).matrix() * scale_factor;
            if (gq) tp.grad(q).block(q0, h * dh, nq, dh).noalias() += ds * kv.block(k0, h * dh, nk, dh);
            if (gk) tp.grad(k).block(k0, h * dh, nk, dh).noalias() += ds.transpose() * qv.block(q0, h * dh, nq, dh);
          }
        }
      });
}

Var text_context(Var table, Var null_row, const std::vector<std::vector<int>> &tokens) {
  require(null_row.rows() == 1 && null_row.cols() == table.cols(), "text_context: shape mismatch");
  Eigen::Index total = 0;
  for (const auto &seg : tokens) total += 1 + static_cast<Eigen::Index>(seg.size());
  const Matrix &tv = table.value();
  Matrix out(total, tv.cols());
  Eigen::Index r = 0;
  for (const auto &seg : tokens) {
    RowVector pooled = null_row.value().row(0);
    if (!seg.empty()) {
      RowVector sum = RowVector::Zero(tv.cols());
      for (int id : seg) sum += tv.row(id);
      pooled += sum / static_cast<double>(seg.size());
    }
    out.row(r++) = pooled;
    for (int id : seg) out.row(r++) = tv.row(id);
  }
  return table.tape->push(std::move(out), {table, null_row}, [table, null_row, tokens](Tape &tp, int self) {
    const Matrix &g = tp.out_grad(self);
    Eigen::Index r = 0;
    for (const auto &seg : tokens) {
      const auto pooled_grad = g.row(r++);
      if (tp.needs_grad(null_row)) tp.grad(null_row).row(0) += pooled_grad;
      if (tp.needs_grad(table)) {
        Matrix &tg = tp.grad(table);
        const double inv = seg.empty() ? 0.0 : 1.0 / static_cast<double>(seg.size());
        for (int id : seg) tg.row(id) += pooled_grad * inv + g.row(r++);
      } else {
        r += static_cast<Eigen::Index>(seg.size());
      }
    }
  });
}

Var mean_squared_error(Var a, const Matrix &target) {
  require(a.rows() == target.rows() && a.cols() == target.cols(), "mse: shape mismatch");
  const double n = static_cast<double>(target.size());
  Matrix diff = a.value() - target;
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  return a.tape->push(std::move(out), {a}, [a, diff = std::move(diff), n](Tape &tp, int self) {
    tp.grad(a) += diff * (2.0 * tp.out_grad(self)(0, 0) / n);
  });
}

namespace {

struct DecodedRow {
  double lo[3], hi[3], size[3];
  double dcenter[3]; // 1 where the center clamp is inactive
  double dsize[3];   // 1 where the size clamp is inactive
};

DecodedRow decode_row(const Matrix &x, Eigen::Index r, double min_size) {
  DecodedRow d{};
  for (int k = 0; k < 3; ++k) {
    const double c_raw = x(r, k), s_raw = x(r, 3 + k);
    const double c = std::clamp(c_raw, 0.0, 1.0);
    const double s = std::clamp(s_raw, min_size, 1.0);
    d.dcenter[k] = (c_raw > 0.0 && c_raw < 1.0) ? 1.0 : 0.0;
    d.dsize[k] = (s_raw > min_size && s_raw < 1.0) ? 1.0 : 0.0;
    d.size[k] = s;
    d.lo[k] = c - 0.5 * s;
    d.hi[k] = c + 0.5 * s;
  }
  return d;
}

} // namespace

Var iou_penalty(Var x0, const std::vector<double> &weight, const std::vector<bool> &mask,
                Eigen::Index rows_per_segment, double min_size) {
  const Matrix &x = x0.value();
  require(x.rows() == static_cast<Eigen::Index>(weight.size()) * rows_per_segment,
          "iou_penalty: segment mismatch");
  require(static_cast<Eigen::Index>(mask.size()) == x.rows(), "iou_penalty: mask size");
  require(x.cols() >= 6, "iou_penalty: needs center and size columns");

  // Per-pair partial derivatives are recomputed in backward; the forward pass
  // only needs the value.
  double total = 0.0;
  for (std::size_t s = 0; s < weight.size(); ++s) {
    if (weight[s] == 0.0) continue;
    const Eigen::Index r0 = static_cast<Eigen::Index>(s) * rows_per_segment;
    std::vector<DecodedRow> rows;
    for (Eigen::Index i = 0; i < rows_per_segment; ++i) {
      if (mask[static_cast<std::size_t>(r0 + i)]) rows.push_back(decode_row(x, r0 + i, min_size));
    }
    double seg_sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        double inter = 1.0;
        for (int k = 0; k < 3; ++k) {
          const double ov = std::min(rows[i].hi[k], rows[j].hi[k]) - std::max(rows[i].lo[k], rows[j].lo[k]);
          if (ov <= 0.0) {
            inter = 0.0;
            break;
          }
          inter *= ov;
        }
        if (inter <= 0.0) continue;
        const double vi = rows[i].size[0] * rows[i].size[1] * rows[i].size[2];
        const double vj = rows[j].size[0] * rows[j].size[1] * rows[j].size[2];
        seg_sum += inter / (vi + vj - inter);
      }
    }
    total += weight[s] * seg_sum;
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  return x0.tape->push(std::move(out), {x0}, [x0, weight, mask, rows_per_segment, min_size](Tape &tp, int self) {
    const double upstream = tp.out_grad(self)(0, 0);
    const Matrix &x = tp.value(x0);
    Matrix &gx = tp.grad(x0);
    for (std::size_t s = 0; s < weight.size(); ++s) {
      if (weight[s] == 0.0) continue;
      const Eigen::Index r0 = static_cast<Eigen::Index>(s) * rows_per_segment;
      std::vector<Eigen::Index> index;
      std::vector<DecodedRow> rows;
      for (Eigen::Index i = 0; i < rows_per_segment; ++i) {
        if (mask[static_cast<std::size_t>(r0 + i)]) {
          index.push_back(r0 + i);
          rows.push_back(decode_row(x, r0 + i, min_size));
        }
      }
      const double w = upstream * weight[s];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
          const DecodedRow &a = rows[i];
          const DecodedRow &b = rows[j];
          double ov[3];
          bool hit = true;
          for (int k = 0; k < 3; ++k) {
            ov[k] = std::min(a.hi[k], b.hi[k]) - std::max(a.lo[k], b.lo[k]);
            if (ov[k] <= 0.0) hit = false;
          }
          if (!hit) continue;
          const double inter = ov[0] * ov[1] * ov[2];
          const double va = a.size[0] * a.size[1] * a.size[2];
          const double vb = b.size[0] * b.size[1] * b.size[2];
          const double uni = va + vb - inter;
          const double d_inter = (va + vb) / (uni * uni);
          const double d_vol = -inter / (uni * uni);
          for (int k = 0; k < 3; ++k) {
            const double d_ov = d_inter * ov[(k + 1) % 3] * ov[(k + 2) % 3];
            // ov = min(hi_a, hi_b) - max(lo_a, lo_b)
            const bool a_hi = a.hi[k] <= b.hi[k];
            const bool a_lo = a.lo[k] >= b.lo[k];
            const double dhi_a = a_hi ? d_ov : 0.0, dhi_b = a_hi ? 0.0 : d_ov;
            const double dlo_a = a_lo ? -d_ov : 0.0, dlo_b = a_lo ? 0.0 : -d_ov;
            // lo = c - s/2, hi = c + s/2
            const double dc_a = dhi_a + dlo_a, ds_a = 0.5 * (dhi_a - dlo_a);
            const double dc_b = dhi_b + dlo_b, ds_b = 0.5 * (dhi_b - dlo_b);
            const double dva = d_vol * a.size[(k + 1) % 3] * a.size[(k + 2) % 3];
            const double dvb = d_vol * b.size[(k + 1) % 3] * b.size[(k + 2) % 3];
            gx(index[i], k) += w * dc_a * a.dcenter[k];
            gx(index[j], k) += w * dc_b * b.dcenter[k];
            gx(index[i], 3 + k) += w * (ds_a + dva) * a.dsize[k];
            gx(index[j], 3 + k) += w * (ds_b + dvb) * b.dsize[k];
          }
        }
      }
    }
  });
}

} // namespace blockforge::nn
