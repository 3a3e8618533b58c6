#ifndef IVAR_LINALG_HPP
#define IVAR_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "ivar/error.hpp"

namespace ivar {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

/// Make the first entry of each column whose magnitude exceeds `eps`
/// positive. Used wherever a basis is only defined up to sign.
inline void fix_column_signs(Mat& m, double eps = 1e-12) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > eps) {
        if (m(i, j) < 0) m.col(j) *= -1.0;
        break;
      }
    }
  }
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Column-major stacking.
inline Vec vec(const Mat& a) {
  return Eigen::Map<const Vec>(a.data(), a.size());
}

inline Mat unvec(const Vec& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw InvalidInput("unvec: size mismatch");
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

/// Binary n^2 x n matrix with vec(diag(d)) = M d.
inline Mat diag_selection(Index n) {
  Mat m = Mat::Zero(n * n, n);
  for (Index k = 0; k < n; ++k) m(k * (n + 1), k) = 1.0;
  return m;
}

struct InvSqrt {
  Mat inv_sqrt;
  Mat inv;
  bool clipped = false;
};

/// Symmetric inverse square root through the eigendecomposition.
/// Eigenvalues below `rel_floor` times the largest are clipped.
inline InvSqrt sym_inv_sqrt(const Mat& s, double rel_floor = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("sym_inv_sqrt: eigendecomposition failed");
  Vec ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0) || !std::isfinite(top))
    throw NumericalError("sym_inv_sqrt: matrix is not positive definite");
  InvSqrt out;
  const double floor = rel_floor * top;
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < floor) {
      ev(i) = floor;
      out.clipped = true;
    }
  }
  const Mat& v = es.eigenvectors();
  out.inv_sqrt = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  out.inv = v * ev.cwiseInverse().asDiagonal() * v.transpose();
  return out;
}

inline double log_det_spd(const Mat& s) {
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("log_det: matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

/// Concentrated Gaussian log-likelihood at the ML covariance `sigma`.
inline double gaussian_loglik(const Mat& sigma, Index t_eff) {
  const double n = static_cast<double>(sigma.rows());
  return -0.5 * static_cast<double>(t_eff) *
         (n * std::log(2.0 * std::numbers::pi) + log_det_spd(sigma) + n);
}

/// Orthonormal basis of the orthogonal complement of span(a).
/// Columns follow the first-nonzero-entry-positive convention.
inline Mat orth_complement(const Mat& a) {
  const Index n = a.rows();
  const Index q = a.cols();
  if (q >= n) return Mat(n, 0);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat full = qr.householderQ() * Mat::Identity(n, n);
  Mat perp = full.rightCols(n - q);
  fix_column_signs(perp);
  return perp;
}

inline Mat orthonormal_basis(const Mat& a) {
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(a.rows(), a.cols());
  fix_column_signs(q);
  return q;
}

/// Orthogonal projector onto the column space of `a` (full column rank).
inline Mat projector(const Mat& a) {
  if (a.cols() == 0) return Mat::Zero(a.rows(), a.rows());
  const Mat q = orthonormal_basis(a);
  return q * q.transpose();
}

/// ||P_a - P_b||_F / sqrt(2q): 0 for equal spaces, 1 for orthogonal ones.
inline double subspace_distance(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInput("subspace_distance: shape mismatch");
  if (a.cols() == 0) return 0.0;
  return (projector(a) - projector(b)).norm() / std::sqrt(2.0 * static_cast<double>(a.cols()));
}

struct EigenPairs {
  Vec values;
  Mat vectors;
};

/// Eigenpairs of a symmetric matrix ordered by descending eigenvalue;
/// eigenvectors carry the sign convention.
inline EigenPairs sym_eigen_desc(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  const Index n = s.rows();
  EigenPairs out{Vec(n), Mat(n, n)};
  for (Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  fix_column_signs(out.vectors);
  return out;
}

/// Solve the symmetric-definite generalized problem a v = lambda b v,
/// descending eigenvalues, vectors normalized so that v' b v = I.
inline EigenPairs generalized_eigen_desc(const Mat& a, const Mat& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()),
                                                   0.5 * (b + b.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("generalized eigenproblem failed");
  const Index n = a.rows();
  EigenPairs out{Vec(n), Mat(n, n)};
  for (Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  fix_column_signs(out.vectors);
  return out;
}

/// Cross-moment a'b / rows, no demeaning.
inline Mat cross_moment(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw InvalidInput("cross_moment: row mismatch");
  return a.transpose() * b / static_cast<double>(a.rows());
}

/// Largest absolute entry of the cross-correlation matrix of two series
/// computed from non-demeaned second moments.
inline double max_cross_correlation(const Mat& a, const Mat& b) {
  if (a.cols() == 0 || b.cols() == 0) return 0.0;
  const Mat c = cross_moment(a, b);
  const Vec sa = (a.colwise().squaredNorm() / static_cast<double>(a.rows())).transpose().cwiseSqrt();
  const Vec sb = (b.colwise().squaredNorm() / static_cast<double>(b.rows())).transpose().cwiseSqrt();
  double worst = 0.0;
  for (Index i = 0; i < c.rows(); ++i)
    for (Index j = 0; j < c.cols(); ++j)
      if (sa(i) > 0 && sb(j) > 0) worst = std::max(worst, std::abs(c(i, j)) / (sa(i) * sb(j)));
  return worst;
}

/// Lag-k sample autocorrelations (demeaned) of every column, k = 1..max_lag.
/// Row k-1 holds lag k.
inline Mat autocorrelations(const Mat& x, Index max_lag) {
  const Index t = x.rows();
  const Mat c = x.rowwise() - x.colwise().mean();
  const Eigen::RowVectorXd var = c.colwise().squaredNorm() / static_cast<double>(t);
  Mat out(max_lag, x.cols());
  for (Index k = 1; k <= max_lag; ++k) {
    const Eigen::RowVectorXd num =
        (c.bottomRows(t - k).array() * c.topRows(t - k).array()).colwise().sum() / static_cast<double>(t);
    out.row(k - 1) = num.array() / var.array();
  }
  return out;
}

/// corr(x_{t,i}, x_{t-k,j}) for all i, j (demeaned).
inline Mat lagged_correlation(const Mat& x, Index k) {
  const Index t = x.rows();
  if (k < 0 || k >= t) throw InvalidInput("lagged_correlation: lag out of range");
  const Mat c = x.rowwise() - x.colwise().mean();
  const Vec sd = (c.colwise().squaredNorm() / static_cast<double>(t)).transpose().cwiseSqrt();
  const Mat g = c.bottomRows(t - k).transpose() * c.topRows(t - k) / static_cast<double>(t);
  return sd.cwiseInverse().asDiagonal() * g * sd.cwiseInverse().asDiagonal();
}

inline Mat companion(const std::vector<Mat>& phis) {
  if (phis.empty()) throw InvalidInput("companion: need at least one coefficient matrix");
  const Index n = phis.front().rows();
  const Index p = static_cast<Index>(phis.size());
  for (const auto& m : phis)
    if (m.rows() != n || m.cols() != n) throw InvalidInput("companion: all matrices must be n x n");
  Mat c = Mat::Zero(n * p, n * p);
  for (Index j = 0; j < p; ++j) c.block(0, j * n, n, n) = phis[static_cast<size_t>(j)];
  if (p > 1) c.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
  return c;
}

inline Eigen::VectorXcd companion_eigenvalues(const std::vector<Mat>& phis) {
  Eigen::EigenSolver<Mat> es(companion(phis), false);
  if (es.info() != Eigen::Success) throw NumericalError("companion eigenvalues failed");
  return es.eigenvalues();
}

}  // namespace linalg
}  // namespace ivar

#endif  // IVAR_LINALG_HPP
