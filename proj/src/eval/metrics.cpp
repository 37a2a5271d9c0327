#include "blockforge/eval/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "blockforge/core/error.hpp"
#include "blockforge/core/rng.hpp"
#include "blockforge/eval/raster.hpp"
#include "blockforge/layout/ops.hpp"

namespace blockforge {

namespace {

constexpr int kHistBins = CategoryTaxonomy::kOneHotWidth;
constexpr int kGrid = 8;
constexpr int kFeatureRaster = 256;

bool is_opening_category(int c) {
  return c == CategoryTaxonomy::kWindow || c == CategoryTaxonomy::kDoor;
}

} // namespace

std::vector<double> features(const BoxLayout &layout) {
  const auto boxes = sorted_boxes(layout.boxes);
  std::vector<const ComponentBox *> real;
  for (const auto &b : boxes) {
    if (!b.is_empty()) real.push_back(&b);
  }
  if (real.empty()) throw Error(ErrorCode::EmptyLayout, "layout '" + layout.id + "' has no real boxes");

  std::vector<double> f(kFeatureDims, 0.0);
  for (const auto &b : boxes) f[static_cast<std::size_t>(b.category)] += 1.0;
  for (int i = 0; i < kHistBins; ++i) f[static_cast<std::size_t>(i)] /= static_cast<double>(boxes.size());

  const double n = static_cast<double>(real.size());
  for (int axis = 0; axis < 3; ++axis) {
    const auto a = static_cast<std::size_t>(axis);
    double cm = 0.0, sm = 0.0;
    for (const auto *b : real) {
      cm += b->center[a];
      sm += b->size[a];
    }
    cm /= n;
    sm /= n;
    double cv = 0.0, sv = 0.0;
    for (const auto *b : real) {
      cv += (b->center[a] - cm) * (b->center[a] - cm);
      sv += (b->size[a] - sm) * (b->size[a] - sm);
    }
    f[14 + a] = cm;
    f[17 + a] = std::sqrt(cv / n);
    f[20 + a] = sm;
    f[23 + a] = std::sqrt(sv / n);
  }
  f[26] = pairwise_iou_sum(layout, true, true);

  const Image img = rasterize_layout(layout, kFeatureRaster);
  const int cell = kFeatureRaster / kGrid;
  for (int gr = 0; gr < kGrid; ++gr) {
    for (int gc = 0; gc < kGrid; ++gc) {
      double acc = 0.0;
      for (int r = gr * cell; r < (gr + 1) * cell; ++r) {
        for (int c = gc * cell; c < (gc + 1) * cell; ++c) {
          const auto p = img.pixel(r, c);
          acc += 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        }
      }
      f[static_cast<std::size_t>(27 + gr * kGrid + gc)] = acc / static_cast<double>(cell * cell);
    }
  }
  return f;
}

Matrix feature_matrix(const std::vector<BoxLayout> &layouts) {
  Matrix m(static_cast<Eigen::Index>(layouts.size()), kFeatureDims);
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    const auto f = features(layouts[i]);
    for (int j = 0; j < kFeatureDims; ++j) m(static_cast<Eigen::Index>(i), j) = f[static_cast<std::size_t>(j)];
  }
  return m;
}

namespace {

void require_samples(const Matrix &a, const Matrix &b) {
  if (a.rows() < 2 || b.rows() < 2) {
    throw Error(ErrorCode::TooFewSamples, "need at least 2 feature vectors per set, got " +
                                               std::to_string(a.rows()) + " and " + std::to_string(b.rows()));
  }
  if (a.cols() != b.cols()) throw Error(ErrorCode::BadShape, "feature dimensions differ");
}

Eigen::VectorXd column_mean(const Matrix &m) { return m.colwise().mean().transpose(); }

Eigen::MatrixXd covariance(const Matrix &m, const Eigen::VectorXd &mu) {
  const Eigen::MatrixXd centered = m.rowwise() - mu.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(m.rows() - 1);
  cov.diagonal().array() += 1e-6;
  return cov;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd &m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

double frechet_distance(const Matrix &a, const Matrix &b) {
  require_samples(a, b);
  const Eigen::VectorXd mu_a = column_mean(a), mu_b = column_mean(b);
  const Eigen::MatrixXd sa = covariance(a, mu_a), sb = covariance(b, mu_b);
  const Eigen::MatrixXd root_a = psd_sqrt(sa);
  Eigen::MatrixXd inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  const double tr_cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_cross;
  return std::max(d, 0.0);
}

double mmd_unbiased(const Matrix &a, const Matrix &b) {
  require_samples(a, b);
  const double d = static_cast<double>(a.cols());
  auto kernel = [d](const Matrix &x, const Matrix &y) -> Eigen::MatrixXd {
    Eigen::MatrixXd g = x * y.transpose();
    return (g.array() / d + 1.0).cube().matrix();
  };
  const Eigen::MatrixXd kxx = kernel(a, a), kyy = kernel(b, b), kxy = kernel(a, b);
  const double m = static_cast<double>(a.rows()), n = static_cast<double>(b.rows());
  const double sxx = (kxx.sum() - kxx.trace()) / (m * (m - 1.0));
  const double syy = (kyy.sum() - kyy.trace()) / (n * (n - 1.0));
  const double sxy = kxy.sum() / (m * n);
  return sxx + syy - 2.0 * sxy;
}

namespace {

// Lexicographic row order, so subsampling does not depend on input order.
Matrix canonical_rows(const Matrix &m) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::sort(idx.begin(), idx.end(), [&m](Eigen::Index x, Eigen::Index y) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(x, c) != m(y, c)) return m(x, c) < m(y, c);
    }
    return false;
  });
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

Matrix subsample(const Matrix &m, std::size_t k, Rng &rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  Matrix out(static_cast<Eigen::Index>(k), m.cols());
  for (std::size_t i = 0; i < k; ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

} // namespace

double kernel_distance(const Matrix &a, const Matrix &b, int subset, int repeats, std::uint64_t seed) {
  require_samples(a, b);
  if (subset < 2 || repeats < 1) throw Error(ErrorCode::InvalidArgument, "subset must be >= 2 and repeats >= 1");
  const auto k = static_cast<std::size_t>(std::min<Eigen::Index>({subset, a.rows(), b.rows()}));
  const Matrix ca = canonical_rows(a), cb = canonical_rows(b);
  Rng rng(seed);
  double total = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const Matrix sa = subsample(ca, k, rng);
    const Matrix sb = subsample(cb, k, rng);
    total += mmd_unbiased(sa, sb);
  }
  return total / static_cast<double>(repeats);
}

double floating_rate(const std::vector<BoxLayout> &layouts) {
  double acc = 0.0;
  std::size_t counted = 0;
  for (const auto &layout : layouts) {
    std::size_t openings = 0, floating = 0;
    for (const auto &b : layout.boxes) {
      if (!is_opening_category(b.category)) continue;
      ++openings;
      bool attached = false;
      for (const auto &w : layout.boxes) {
        if (w.category == CategoryTaxonomy::kWall && intersection_volume(b, w) > 0.0) {
          attached = true;
          break;
        }
      }
      if (!attached) ++floating;
    }
    if (openings == 0) continue;
    acc += static_cast<double>(floating) / static_cast<double>(openings);
    ++counted;
  }
  return counted == 0 ? 0.0 : acc / static_cast<double>(counted);
}

namespace {

double mean_pairwise_iou(const std::vector<BoxLayout> &layouts) {
  double acc = 0.0;
  std::size_t pairs = 0;
  for (const auto &layout : layouts) {
    std::size_t n = 0;
    for (const auto &b : layout.boxes) {
      if (!b.is_empty() && b.category != CategoryTaxonomy::kWall) ++n;
    }
    if (n < 2) continue;
    acc += pairwise_iou_sum(layout, true, true);
    pairs += n * (n - 1) / 2;
  }
  return pairs == 0 ? 0.0 : acc / static_cast<double>(pairs);
}

std::vector<BoxLayout> non_empty(const std::vector<BoxLayout> &layouts) {
  std::vector<BoxLayout> out;
  for (const auto &l : layouts) {
    if (l.real_count() > 0) out.push_back(l);
  }
  return out;
}

} // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["fd_surrogate"] = fd_surrogate;
  j["kd_surrogate"] = kd_surrogate;
  j["floating_rate"] = floating_rate;
  j["mean_pairwise_iou"] = mean_pairwise_iou;
  j["n_gen"] = n_gen;
  j["n_ref"] = n_ref;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json &doc) {
  try {
    EvalReport r;
    r.fd_surrogate = doc.at("fd_surrogate").get<double>();
    r.kd_surrogate = doc.at("kd_surrogate").get<double>();
    r.floating_rate = doc.at("floating_rate").get<double>();
    r.mean_pairwise_iou = doc.at("mean_pairwise_iou").get<double>();
    r.n_gen = doc.at("n_gen").get<std::size_t>();
    r.n_ref = doc.at("n_ref").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::ParseError, std::string("eval report: ") + e.what());
  }
}

std::vector<BoxLayout> random_layouts(std::size_t count, int max_boxes, std::uint64_t seed) {
  if (max_boxes < 1) throw Error(ErrorCode::InvalidArgument, "max_boxes must be >= 1");
  const Rng root(seed);
  std::vector<BoxLayout> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = root.split(i);
    BoxLayout l;
    l.id = "random_" + std::to_string(i);
    const int n = rng.uniform_int(1, max_boxes);
    for (int k = 0; k < n; ++k) {
      ComponentBox b;
      b.category = rng.uniform_int(0, CategoryTaxonomy::kRealCount - 1);
      for (int a = 0; a < 3; ++a) b.center[static_cast<std::size_t>(a)] = rng.uniform();
      for (int a = 0; a < 3; ++a) b.size[static_cast<std::size_t>(a)] = rng.uniform(0.01, 0.5);
      l.boxes.push_back(b);
    }
    out.push_back(std::move(l));
  }
  return out;
}

EvalReport eval_report(const std::vector<BoxLayout> &gen, const std::vector<BoxLayout> &ref, std::uint64_t seed) {
  if (gen.empty() || ref.empty()) throw Error(ErrorCode::TooFewSamples, "gen and ref must be non-empty");
  const Matrix fg = feature_matrix(non_empty(gen));
  const Matrix fr = feature_matrix(non_empty(ref));
  EvalReport r;
  r.fd_surrogate = frechet_distance(fg, fr);
  r.kd_surrogate = kernel_distance(fg, fr, 100, 10, seed);
  r.floating_rate = floating_rate(gen);
  r.mean_pairwise_iou = mean_pairwise_iou(gen);
  r.n_gen = gen.size();
  r.n_ref = ref.size();
  return r;
}

} // namespace blockforge
