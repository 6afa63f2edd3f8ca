#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

struct PrincipalComponents {
  Eigen::RowVectorXd mean;
  RowMatrix directions;       // k x dim, unit rows, descending variance
  Eigen::VectorXd variances;  // k, sample variance along each direction
  double total_variance = 0.0;
};

namespace detail {

// First coordinate whose magnitude exceeds `tol` is made positive.
inline void fix_sign(Eigen::Ref<Eigen::RowVectorXd> v, double tol = 1e-12) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > tol) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

}  // namespace detail

/// Top-k principal directions of the rows of `x` from the eigen-decomposition
/// of the covariance of the mean-centred rows.
///
/// When rows are much fewer than columns the decomposition runs on the
/// n x n Gram matrix instead and directions are recovered through Xc^T u.
inline PrincipalComponents principal_components(const Eigen::Ref<const RowMatrix>& x, Eigen::Index k) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (k < 0 || k > d) throw ValidationError("requested " + std::to_string(k) + " components from dimension " +
                                            std::to_string(d));
  if (n < 1) throw ValidationError("principal components need at least one row");

  PrincipalComponents pc;
  pc.mean = x.colwise().mean();
  RowMatrix centered = x.rowwise() - pc.mean;
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  pc.directions.resize(k, d);
  pc.variances.resize(k);

  bool done = false;
  if (d > 2 * n && k <= n - 1) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(centered);
    gram = gram.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const auto& values = eig.eigenvalues();
    done = true;
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::Index src = n - 1 - j;
      Eigen::RowVectorXd dir = (centered.transpose() * eig.eigenvectors().col(src)).transpose();
      double norm = dir.norm();
      if (norm < 1e-10 * (1.0 + std::sqrt(std::max(values[n - 1], 0.0)))) {
        done = false;
        break;
      }
      dir /= norm;
      detail::fix_sign(dir);
      pc.directions.row(j) = dir;
      pc.variances[j] = std::max(values[src], 0.0) / denom;
    }
    pc.total_variance = std::max(gram.trace(), 0.0) / denom;
  }
  if (!done) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::Index src = d - 1 - j;
      Eigen::RowVectorXd dir = eig.eigenvectors().col(src).transpose();
      detail::fix_sign(dir);
      pc.directions.row(j) = dir;
      pc.variances[j] = std::max(eig.eigenvalues()[src], 0.0);
    }
    pc.total_variance = cov.trace();
  }
  return pc;
}

/// Centred rows of `x` expressed in the basis of `pc.directions`.
inline RowMatrix project_onto(const Eigen::Ref<const RowMatrix>& x, const PrincipalComponents& pc) {
  return (x.rowwise() - pc.mean) * pc.directions.transpose();
}

}  // namespace kgalign
