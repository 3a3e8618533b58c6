#ifndef IVAR_TSCORE_HPP
#define IVAR_TSCORE_HPP

#include <string>
#include <utility>
#include <vector>

#include "ivar/linalg.hpp"
#include "ivar/panel.hpp"

namespace ivar {

/// Multivariate least-squares output. `sigma` uses the 1/T divisor so that
/// `loglik` is the concentrated Gaussian likelihood.
struct RegressionOut {
  Mat coeffs;     // k x m
  Mat residuals;  // rows x m
  Mat sigma;      // m x m
  double loglik = 0.0;
};

struct LagMatrices {
  Mat targets;
  Mat regressors;
};

/// Stack Y_{t-j} (or dY_{t-j}) for each requested lag next to the aligned
/// targets Y_t (or dY_t).
inline LagMatrices build_lag_matrix(const Panel& y, const std::vector<int>& lags, bool difference = false) {
  if (lags.empty()) throw InvalidInput("build_lag_matrix: empty lag list");
  int max_lag = 0;
  for (int l : lags) {
    if (l < 0) throw InvalidInput("build_lag_matrix: negative lag");
    max_lag = std::max(max_lag, l);
  }
  const Mat src = difference ? y.differenced().values : y.values;
  const Index t = src.rows();
  const Index n = src.cols();
  if (max_lag >= t) throw InvalidInput("build_lag_matrix: lag " + std::to_string(max_lag) + " exceeds sample length");
  const Index rows = t - max_lag;
  LagMatrices out{src.bottomRows(rows), Mat(rows, n * static_cast<Index>(lags.size()))};
  for (size_t k = 0; k < lags.size(); ++k)
    out.regressors.middleCols(static_cast<Index>(k) * n, n) = src.middleRows(max_lag - lags[k], rows);
  return out;
}

/// Smallest-to-largest singular value ratio below which a design is singular.
inline constexpr double kRankTolerance = 1e-10;

inline RegressionOut ols(const Mat& x, const Mat& y) {
  if (x.rows() != y.rows()) throw InvalidInput("ols: X and Y row counts differ");
  if (x.rows() < x.cols()) throw SingularDesign("ols: fewer observations than regressors");
  RegressionOut out;
  if (x.cols() == 0) {
    out.coeffs = Mat(0, y.cols());
    out.residuals = y;
  } else {
    Eigen::HouseholderQR<Mat> qr(x);
    const Mat r = qr.matrixQR().topRows(x.cols()).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Mat> svd(r);
    const Vec sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > kRankTolerance * sv(0)))
      throw SingularDesign("ols: design is rank deficient (smallest/largest singular value below tolerance 1e-10)");
    out.coeffs = qr.solve(y);
    out.residuals = y - x * out.coeffs;
  }
  out.sigma = linalg::cross_moment(out.residuals, out.residuals);
  out.loglik = linalg::gaussian_loglik(out.sigma, y.rows());
  return out;
}

/// Sample autocovariance (1/T)·sum (Y_t - mean)(Y_{t-j} - mean)'.
inline Mat autocov(const Panel& y, Index j) {
  const Index t = y.rows();
  if (j < 0 || j >= t) throw InvalidInput("autocov: lag must satisfy 0 <= j < T");
  const Mat c = y.values.rowwise() - y.values.colwise().mean();
  return c.bottomRows(t - j).transpose() * c.topRows(t - j) / static_cast<double>(t);
}

inline double companion_spectral_radius(const std::vector<Mat>& phis) {
  return linalg::companion_eigenvalues(phis).cwiseAbs().maxCoeff();
}

struct HarAggregates {
  Panel weekly;
  Panel monthly;
};

/// Trailing 5- and 22-day means. Pre-sample days count as zero, so rows
/// before 21 are incomplete and marked unusable through `t0`.
inline HarAggregates har_aggregates(const Panel& daily) {
  const Index t = daily.rows();
  if (t < 22) throw InvalidInput("har_aggregates: need at least 22 observations");
  const Index n = daily.cols();
  Mat w(t, n), m(t, n);
  for (Index i = 0; i < t; ++i) {
    const Index kw = std::min<Index>(5, i + 1);
    const Index km = std::min<Index>(22, i + 1);
    w.row(i) = daily.values.middleRows(i - kw + 1, kw).colwise().sum() / 5.0;
    m.row(i) = daily.values.middleRows(i - km + 1, km).colwise().sum() / 22.0;
  }
  std::vector<std::string> wn, mn;
  for (const auto& s : daily.names) {
    wn.push_back(s + "_w");
    mn.push_back(s + "_m");
  }
  return {Panel(std::move(w), std::move(wn), 21), Panel(std::move(m), std::move(mn), 21)};
}

}  // namespace ivar

#endif  // IVAR_TSCORE_HPP
