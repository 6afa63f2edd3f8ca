#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/pca.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

/// Probability mass over a bins x bins grid; cell (bx, by) lives at bx * bins + by.
struct Pmf {
  std::size_t bins_per_axis = 0;
  std::vector<double> mass;
};

struct SpatialHistogramReport {
  std::string method;
  double kl_mean = 0.0;
  double kl_std = 0.0;
  std::size_t bins_per_axis = 0;
  std::size_t reference_sets = 0;
};

struct ClusterabilityOptions {
  std::size_t bins_per_axis = 20;
  std::size_t reference_sets = 500;
  std::uint64_t seed = 0;
  double epsilon = 1e-10;
  unsigned threads = 0;  // 0: hardware concurrency
};

inline EmbeddingMatrix pca_project(const EmbeddingMatrix& matrix, std::size_t components) {
  if (components < 1) throw ValidationError("pca_project needs at least one component");
  if (components > matrix.dim())
    throw ValidationError("pca_project: " + std::to_string(components) + " components exceed dimension " +
                          std::to_string(matrix.dim()));
  if (matrix.rows() < components)
    throw ValidationError("pca_project: fewer rows than components");
  auto pc = principal_components(matrix.as_eigen(), static_cast<Eigen::Index>(components));
  return EmbeddingMatrix::from_eigen(project_onto(matrix.as_eigen(), pc), matrix.method() + "+pca",
                                     matrix.index());
}

namespace detail {

inline Pmf histogram_2d(const Eigen::Ref<const RowMatrix>& points, std::size_t bins) {
  if (points.cols() != 2) throw DimensionMismatchError("spatial histogram needs 2-D points");
  if (points.rows() < 1) throw ValidationError("spatial histogram needs at least one point");
  if (bins < 1) throw ValidationError("spatial histogram needs at least one bin per axis");
  const Eigen::Index n = points.rows();
  double lo[2], width[2];
  for (int a = 0; a < 2; ++a) {
    lo[a] = points.col(a).minCoeff();
    width[a] = points.col(a).maxCoeff() - lo[a];
  }
  auto bin_of = [&](double v, int a) -> std::size_t {
    if (!(width[a] > 0.0)) return 0;
    double pos = (v - lo[a]) / width[a] * static_cast<double>(bins);
    auto b = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
    return std::min(b, bins - 1);
  };
  std::vector<std::size_t> counts(bins * bins, 0);
  for (Eigen::Index i = 0; i < n; ++i) ++counts[bin_of(points(i, 0), 0) * bins + bin_of(points(i, 1), 1)];
  Pmf pmf{bins, std::vector<double>(bins * bins)};
  for (std::size_t c = 0; c < counts.size(); ++c) pmf.mass[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
  return pmf;
}

inline Pmf projected_pmf(const Eigen::Ref<const RowMatrix>& x, std::size_t bins) {
  auto pc = principal_components(x, 2);
  RowMatrix projected = project_onto(x, pc);
  return histogram_2d(projected, bins);
}

}  // namespace detail

/// Empirical joint pmf over an equal-width grid spanning the points' bounding box.
/// Points on the upper edge fall in the last bin; a zero-width axis maps to bin 0.
inline Pmf spatial_histogram(const EmbeddingMatrix& points, std::size_t bins_per_axis) {
  return detail::histogram_2d(points.as_eigen(), bins_per_axis);
}

/// Sum of p_i ln(p_i / max(q_i, epsilon)); terms with p_i = 0 contribute nothing.
inline double kl_divergence(std::span<const double> p, std::span<const double> q, double epsilon = 1e-10) {
  if (p.size() != q.size())
    throw ValidationError("kl_divergence: pmfs have " + std::to_string(p.size()) + " and " +
                          std::to_string(q.size()) + " cells");
  if (!(epsilon > 0.0)) throw ValidationError("kl_divergence: epsilon must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) total += p[i] * std::log(p[i] / std::max(q[i], epsilon));
  return total;
}

inline double kl_divergence(const Pmf& p, const Pmf& q, double epsilon = 1e-10) {
  return kl_divergence(std::span<const double>(p.mass), std::span<const double>(q.mass), epsilon);
}

/// Mean and population standard deviation of KL(P_data || Q_j) over uniformly
/// generated reference sets, each pushed through the same PCA + histogram pipeline.
///
/// Reference set j has the data's row count and dimension, is uniform over the
/// data's per-dimension bounding box, and draws from Rng(seed + j). Sets are
/// independent, so they may be evaluated on several threads; results are
/// aggregated in index order.
inline SpatialHistogramReport clusterability(const EmbeddingMatrix& matrix, const ClusterabilityOptions& opts = {}) {
  if (matrix.rows() < 3) throw ValidationError("clusterability needs at least 3 rows");
  if (matrix.dim() < 2) throw ValidationError("clusterability needs dimension >= 2");
  if (opts.reference_sets < 1) throw ValidationError("clusterability needs at least one reference set");
  if (opts.bins_per_axis < 1) throw ValidationError("clusterability needs at least one bin per axis");

  const auto data = matrix.as_eigen();
  const Pmf target = detail::projected_pmf(data, opts.bins_per_axis);
  const Eigen::RowVectorXd lo = data.colwise().minCoeff();
  const Eigen::RowVectorXd span = data.colwise().maxCoeff() - lo;
  const auto n = data.rows();
  const auto d = data.cols();

  std::vector<double> kls(opts.reference_sets);
  auto run_set = [&](std::size_t j, RowMatrix& scratch) {
    Rng rng(opts.seed + j);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index c = 0; c < d; ++c) scratch(i, c) = lo[c] + span[c] * uniform01(rng);
    kls[j] = kl_divergence(target, detail::projected_pmf(scratch, opts.bins_per_axis), opts.epsilon);
  };

  unsigned workers = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, opts.reference_sets));
  if (workers <= 1) {
    RowMatrix scratch(n, d);
    for (std::size_t j = 0; j < opts.reference_sets; ++j) run_set(j, scratch);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        RowMatrix scratch(n, d);
        for (std::size_t j = next++; j < opts.reference_sets; j = next++) run_set(j, scratch);
      });
    for (auto& t : pool) t.join();
  }

  double mean = 0.0;
  for (double v : kls) mean += v;
  mean /= static_cast<double>(kls.size());
  double var = 0.0;
  for (double v : kls) var += (v - mean) * (v - mean);
  var /= static_cast<double>(kls.size());

  return {matrix.method(), mean, std::sqrt(var), opts.bins_per_axis, opts.reference_sets};
}

}  // namespace kgalign
