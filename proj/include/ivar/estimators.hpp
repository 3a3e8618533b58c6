#ifndef IVAR_ESTIMATORS_HPP
#define IVAR_ESTIMATORS_HPP

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "ivar/fit_result.hpp"
#include "ivar/panel.hpp"
#include "ivar/switching.hpp"
#include "ivar/tscore.hpp"

namespace ivar {

// ---------------------------------------------------------------------------
// Regression designs
// ---------------------------------------------------------------------------

/// Smallest panel row usable as a regression target.
inline Index min_sample_start(ModelClass cls, const Orders& o) {
  switch (cls) {
    case ModelClass::MAI: return o.p;
    case ModelClass::IAAR: return std::max(o.p, o.s);
    case ModelClass::VHARI: return 22;
    case ModelClass::CIAAR: return std::max({o.p, o.s, 1});
    case ModelClass::VECM: return std::max(o.p, 1);
    case ModelClass::DRVAR: return o.p;
  }
  return 0;
}

namespace design {

inline Index resolve_start(Index requested, Index minimum, Index t, Index n_regs) {
  const Index start = std::max(requested, minimum);
  if (t - start <= std::max<Index>(n_regs, 1))
    throw InvalidInput("sample too short: " + std::to_string(t - start) + " usable rows for " +
                       std::to_string(n_regs) + " regressors per equation");
  return start;
}

inline Mat lagged(const Mat& y, Index start, Index lag) { return y.middleRows(start - lag, y.rows() - start); }

inline Mat lagged_diff(const Mat& y, Index start, Index lag) {
  return lagged(y, start, lag) - lagged(y, start, lag + 1);
}

/// Y_t on Y_{t-1..t-max(p,s)}: own lags up to p, index lags up to s.
inline sa::Design iaar(const Panel& y, int p, int s, Index start) {
  const int m = std::max(p, s);
  const Index n = y.cols();
  start = resolve_start(start, m, y.rows(), n * m);
  sa::Design d;
  d.first_row = start;
  d.z = y.values.bottomRows(y.rows() - start);
  for (int j = 1; j <= m; ++j) d.blocks.push_back({lagged(y.values, start, j), j <= p, j <= s});
  d.ec = Mat(d.z.rows(), 0);
  return d;
}

inline sa::Design mai(const Panel& y, int p, Index start) { return iaar(y, 0, p, start); }

/// Y_t on the lagged daily, weekly and monthly cascades.
inline sa::Design vhari(const Panel& y, Index start) {
  start = resolve_start(start, 22, y.rows(), 3 * y.cols());
  const auto agg = har_aggregates(y);
  sa::Design d;
  d.first_row = start;
  d.z = y.values.bottomRows(y.rows() - start);
  d.blocks.push_back({lagged(y.values, start, 1), false, true});
  d.blocks.push_back({lagged(agg.weekly.values, start, 1), false, true});
  d.blocks.push_back({lagged(agg.monthly.values, start, 1), false, true});
  d.ec = Mat(d.z.rows(), 0);
  return d;
}

/// dY_t on dY_{t-1..t-m} (m = max(p,s) - 1) and, when r > 0, Y_{t-1}.
inline sa::Design ciaar(const Panel& y, int p, int s, int r, Index start) {
  const int m = std::max(std::max(p, s) - 1, 0);
  const Index n = y.cols();
  start = resolve_start(start, m + 1, y.rows(), n * m + (r > 0 ? n : 0));
  sa::Design d;
  d.first_row = start;
  d.z = lagged_diff(y.values, start, 0);
  for (int j = 1; j <= m; ++j) d.blocks.push_back({lagged_diff(y.values, start, j), j <= p - 1, j <= s - 1});
  d.rank = r;
  d.ec = r > 0 ? lagged(y.values, start, 1) : Mat(d.z.rows(), 0);
  return d;
}

}  // namespace design

// ---------------------------------------------------------------------------
// Reduced-rank (Johansen) regression
// ---------------------------------------------------------------------------

struct ReducedRank {
  Mat alpha0;             // n x r
  Mat beta;               // n x r, beta' S11 beta = I
  std::vector<Mat> pis;   // one n x n matrix per lag block
  Vec eigenvalues;        // squared canonical correlations, descending
  Mat residuals;
  Mat sigma;
  double loglik = 0.0;
};

/// z_t = alpha0 beta' x_t + sum_k Pi_k b_{k,t} + e_t with rank(alpha0 beta') = r:
/// concentrate out the lag blocks, solve S10 S00^{-1} S01 v = lambda S11 v and
/// keep the r leading eigenvectors; Pi_k by OLS given beta.
inline ReducedRank reduced_rank_regression(const Mat& z, const std::vector<Mat>& lags, const Mat& levels, Index r) {
  const Index n = z.cols();
  const Index t = z.rows();
  Mat x(t, n * static_cast<Index>(lags.size()));
  for (size_t k = 0; k < lags.size(); ++k) x.middleCols(static_cast<Index>(k) * n, n) = lags[k];
  auto partial_out = [&](const Mat& v) -> Mat {
    if (x.cols() == 0) return v;
    return v - x * Eigen::CompleteOrthogonalDecomposition<Mat>(x).solve(v);
  };
  ReducedRank out;
  Mat target = z;
  if (levels.cols() > 0) {
    const Mat r0 = partial_out(z);
    const Mat r1 = partial_out(levels);
    const Mat s00 = linalg::cross_moment(r0, r0);
    const Mat s11 = linalg::cross_moment(r1, r1);
    const Mat s01 = linalg::cross_moment(r0, r1);
    Eigen::LDLT<Mat> l00(s00);
    if (l00.info() != Eigen::Success || !(l00.vectorD().minCoeff() > 0.0))
      throw NumericalError("reduced-rank regression: S00 is singular");
    const auto eig = linalg::generalized_eigen_desc(s01.transpose() * l00.solve(s01), s11);
    out.eigenvalues = eig.values;
    out.beta = eig.vectors.leftCols(r);
    out.alpha0 = s01 * out.beta;
    if (r > 0) target = z - levels * out.beta * out.alpha0.transpose();
  } else {
    out.alpha0 = Mat(n, 0);
    out.beta = Mat(n, 0);
  }
  Mat coef = Mat::Zero(x.cols(), n);
  if (x.cols() > 0) coef = Eigen::CompleteOrthogonalDecomposition<Mat>(x).solve(target);
  for (size_t k = 0; k < lags.size(); ++k) out.pis.push_back(coef.middleRows(static_cast<Index>(k) * n, n).transpose());
  out.residuals = target - x * coef;
  out.sigma = linalg::cross_moment(out.residuals, out.residuals);
  out.loglik = linalg::gaussian_loglik(out.sigma, t);
  return out;
}

namespace detail {

/// Rescale so the leading r x r block of `b` is the identity, compensating `a`.
inline void normalize_leading_block(Mat& b, Mat& a) {
  const Index r = b.cols();
  if (r == 0 || b.rows() < r) return;
  const Mat top = b.topRows(r);
  Eigen::FullPivLU<Mat> lu(top);
  if (!lu.isInvertible()) return;
  b = b * lu.inverse();
  a = a * top.transpose();
}

}  // namespace detail

/// Johansen reduced-rank estimation of a VECM with p levels lags.
inline FitResult johansen_rrr(const Panel& y, int p, int r, Index sample_start = 0) {
  const Index n = y.cols();
  detail::require(p >= 1, "johansen_rrr: need p >= 1");
  detail::require(r >= 0 && r < n, "johansen_rrr: need 0 <= r < n");
  const auto d = design::ciaar(y, p, 1, std::max(r, 1), std::max<Index>(sample_start, p));
  std::vector<Mat> lags;
  for (const auto& b : d.blocks) lags.push_back(b.data);
  auto rr = reduced_rank_regression(d.z, lags, d.ec, r);
  detail::normalize_leading_block(rr.beta, rr.alpha0);
  FitResult fr;
  fr.model = ModelClass::VECM;
  fr.orders = {p, 1, 0, r};
  fr.params = VECMParams{rr.alpha0, rr.beta, rr.pis, rr.sigma};
  fr.residuals = rr.residuals;
  fr.loglik = rr.loglik;
  fr.loglik_trace = {rr.loglik};
  fr.converged = true;
  fr.first_row = d.first_row;
  fr.t_eff = d.t();
  fr.n_params = count::vecm(n, p, r);
  fr.eigenvalues = rr.eigenvalues;
  return fr;
}

// ---------------------------------------------------------------------------
// Starting values
// ---------------------------------------------------------------------------

struct IndexSpace {
  Mat omega;       // n x q, right singular vectors of the q largest singular values
  Mat low_rank;    // rank-q truncation of the stacked matrix
  Vec singular_values;  // in the order produced by the decomposition
};

/// SVD of the stacked coefficient matrix; omega from the right singular
/// vectors of its q largest singular values, selected by value.
inline IndexSpace index_space_from_stack(const Mat& stack, Index q) {
  const Index n = stack.cols();
  detail::require(q <= n, "index_space_from_stack: q exceeds the number of columns");
  Eigen::JacobiSVD<Mat> svd(stack, Eigen::ComputeThinU | Eigen::ComputeFullV);
  IndexSpace out;
  out.singular_values = svd.singularValues();
  const Index k = out.singular_values.size();
  std::vector<Index> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return out.singular_values(a) > out.singular_values(b); });
  out.omega = Mat(n, q);
  Vec kept = Vec::Zero(k);
  for (Index j = 0; j < q; ++j) {
    if (j < k) {
      out.omega.col(j) = svd.matrixV().col(order[static_cast<size_t>(j)]);
      kept(order[static_cast<size_t>(j)]) = out.singular_values(order[static_cast<size_t>(j)]);
    } else {
      out.omega.col(j) = svd.matrixV().col(j);
    }
  }
  linalg::fix_column_signs(out.omega);
  out.low_rank = svd.matrixU() * kept.asDiagonal() * svd.matrixV().leftCols(k).transpose();
  return out;
}

struct InitialValues {
  Mat gamma;                // q x r
  Mat omega;                // n x q
  std::vector<Vec> ds;      // one entry per lag block (empty when the block has no own lag)
  Mat phi_tilde;            // stacked matrix whose right singular vectors give omega
  Vec singular_values;
};

/// Starting values from an unrestricted fit: reduced-rank regression with
/// every lag block free, own-lag diagonals stripped, stacked with
/// alpha0 beta' and reduced to rank q by SVD; own-lag diagonals from the
/// difference between the unrestricted and rank-q diagonals; gamma by
/// regressing beta on omega.
inline InitialValues initial_values(const sa::Design& d, Index q) {
  const Index n = d.n();
  InitialValues iv;
  std::vector<Mat> lags;
  for (const auto& b : d.blocks) lags.push_back(b.data);
  const auto rr = reduced_rank_regression(d.z, lags, d.has_ec() ? d.ec : Mat(d.t(), 0), d.rank);

  const Index m = static_cast<Index>(d.blocks.size());
  const Index rows = n * (m + (d.has_ec() ? 1 : 0));
  iv.phi_tilde = Mat::Zero(rows, n);
  for (Index k = 0; k < m; ++k) {
    Mat pk = rr.pis[static_cast<size_t>(k)];
    if (d.blocks[static_cast<size_t>(k)].own_lag) pk.diagonal().setZero();
    iv.phi_tilde.middleRows(k * n, n) = pk;
  }
  if (d.has_ec()) iv.phi_tilde.bottomRows(n) = rr.alpha0 * rr.beta.transpose();

  if (rows == 0 || q == 0) {
    iv.omega = Mat::Identity(n, q);
    iv.singular_values = Vec(0);
  } else {
    const auto sp = index_space_from_stack(iv.phi_tilde, q);
    iv.omega = sp.omega;
    iv.singular_values = sp.singular_values;
    for (Index k = 0; k < m; ++k) {
      const auto& b = d.blocks[static_cast<size_t>(k)];
      if (!b.own_lag) {
        iv.ds.emplace_back();
        continue;
      }
      Vec dk = rr.pis[static_cast<size_t>(k)].diagonal();
      if (b.index) dk -= sp.low_rank.middleRows(k * n, n).diagonal();
      iv.ds.push_back(dk);
    }
  }
  if (static_cast<Index>(iv.ds.size()) < m) {
    iv.ds.clear();
    for (const auto& b : d.blocks) iv.ds.push_back(b.own_lag ? Vec(Vec::Zero(n)) : Vec());
    for (Index k = 0; k < m; ++k)
      if (d.blocks[static_cast<size_t>(k)].own_lag) iv.ds[static_cast<size_t>(k)] = rr.pis[static_cast<size_t>(k)].diagonal();
  }
  if (d.rank == q) {
    iv.gamma = Mat::Identity(q, q);
  } else if (d.rank > 0) {
    iv.gamma = (iv.omega.transpose() * iv.omega).ldlt().solve(iv.omega.transpose() * rr.beta);
  } else {
    iv.gamma = Mat(q, 0);
  }
  return iv;
}

/// Starting values (gamma0, omega0, D0) for the CIAAR switching algorithm.
inline InitialValues init_ciaar(const Panel& y, int p, int s, int q, int r, Index sample_start = 0) {
  return initial_values(design::ciaar(y, p, s, r, sample_start), q);
}

// ---------------------------------------------------------------------------
// Switching-algorithm fits
// ---------------------------------------------------------------------------

namespace detail {

inline void check_orders(Index n, const Orders& o, bool integrated) {
  require(o.q >= 0 && o.q < n, "orders: need 0 <= q < n (q=" + std::to_string(o.q) + ", n=" + std::to_string(n) + ")");
  require(o.r >= 0 && o.r <= o.q, "orders: need 0 <= r <= q");
  require(o.p >= 0 && o.s >= 0, "orders: p and s must be nonnegative");
  if (integrated) {
    require(o.p == 0 || o.s <= o.p, "orders: need s <= p (or p = 0 for the VECIM)");
  } else {
    require(o.s <= o.p || o.p == 0, "orders: need s <= p");
  }
}

inline sa::State start_state(const sa::Design& d, Index q, const FitOptions& opts) {
  const Index n = d.n();
  InitialValues iv;
  const bool user = opts.start.has_value() && opts.start->omega.size() > 0;
  if (!user) {
    iv = initial_values(d, q);
  } else {
    const auto& sv = *opts.start;
    require(sv.omega.rows() == n && sv.omega.cols() == q, "start values: omega must be n x q");
    iv.omega = sv.omega;
    iv.gamma = sv.gamma.size() > 0 ? sv.gamma : (d.rank == q ? Mat(Mat::Identity(q, q)) : Mat(Mat::Identity(q, d.rank)));
    iv.ds = sv.ds;
    require(iv.gamma.rows() == q && iv.gamma.cols() == d.rank, "start values: gamma must be q x r");
  }
  sa::State st;
  size_t own = 0;
  for (size_t k = 0; k < d.blocks.size(); ++k) {
    if (d.blocks[k].own_lag) {
      Vec dk = Vec::Zero(n);
      if (!user && k < iv.ds.size() && iv.ds[k].size() == n) dk = iv.ds[k];
      if (user && own < iv.ds.size()) {
        require(iv.ds[own].size() == n, "start values: own-lag diagonals must have length n");
        dk = iv.ds[own];
      }
      ++own;
      st.delta.push_back(dk);
    } else {
      st.delta.emplace_back();
    }
    st.alpha.push_back(Mat::Zero(n, q));
  }
  st.alpha0 = Mat::Zero(n, d.rank);
  st.gamma = iv.gamma;
  st.omega = iv.omega;
  st.sigma = Mat::Identity(n, n);
  return st;
}

/// Equation-by-equation least squares on own lags only (no index).
inline sa::State own_lag_ols(const sa::Design& d) {
  const Index n = d.n();
  sa::State st;
  std::vector<size_t> own;
  for (size_t k = 0; k < d.blocks.size(); ++k) {
    st.delta.push_back(d.blocks[k].own_lag ? Vec(Vec::Zero(n)) : Vec());
    st.alpha.push_back(Mat(n, 0));
    if (d.blocks[k].own_lag) own.push_back(k);
  }
  for (Index i = 0; i < n; ++i) {
    Mat x(d.t(), static_cast<Index>(own.size()));
    for (size_t a = 0; a < own.size(); ++a) x.col(static_cast<Index>(a)) = d.blocks[own[a]].data.col(i);
    const auto reg = ols(x, d.z.col(i));
    for (size_t a = 0; a < own.size(); ++a) st.delta[own[a]](i) = reg.coeffs(static_cast<Index>(a), 0);
  }
  st.alpha0 = Mat(n, 0);
  st.gamma = Mat(0, 0);
  st.omega = Mat(n, 0);
  const sa::Moments mom(d);
  const Mat e = sa::residuals_at(d, mom, st);
  st.sigma = linalg::cross_moment(e, e);
  return st;
}

struct EngineFit {
  sa::State state;
  sa::RunOutcome outcome;
  Mat residuals;
};

inline EngineFit run_engine(const sa::Design& d, Index q, const FitOptions& opts) {
  opts.validate();
  EngineFit ef;
  if (q == 0) {
    ef.state = own_lag_ols(d);
    ef.outcome.trace = {linalg::gaussian_loglik(ef.state.sigma, d.t())};
    ef.outcome.converged = true;
  } else {
    ef.state = start_state(d, q, opts);
    ef.outcome = sa::run(d, ef.state, opts);
  }
  const sa::Moments mom(d);
  ef.residuals = sa::residuals_at(d, mom, ef.state);
  if (d.rank > 0 && d.rank < q) detail::normalize_leading_block(ef.state.gamma, ef.state.alpha0);
  return ef;
}

inline FitResult package(ModelClass cls, const Orders& o, const sa::Design& d, EngineFit&& ef, ModelParams prm,
                         long n_params) {
  FitResult fr;
  fr.model = cls;
  fr.orders = o;
  fr.params = std::move(prm);
  fr.loglik_trace = std::move(ef.outcome.trace);
  fr.residuals = std::move(ef.residuals);
  fr.loglik = linalg::gaussian_loglik(sigma_of(fr.params), d.t());
  fr.converged = ef.outcome.converged;
  fr.iterations = ef.outcome.iterations;
  fr.first_row = d.first_row;
  fr.t_eff = d.t();
  fr.n_params = n_params;
  fr.ridge_repair = ef.outcome.ridge_repair;
  if (!fr.converged) fr.warnings.push_back("switching algorithm stopped at max_iter without meeting the tolerance");
  if (fr.ridge_repair) fr.warnings.push_back("Sigma^{-1/2} required eigenvalue clipping (ridge repair)");
  return fr;
}

inline std::vector<Mat> index_loadings(const sa::Design& d, const sa::State& st) {
  std::vector<Mat> a;
  for (size_t k = 0; k < d.blocks.size(); ++k)
    if (d.blocks[k].index) a.push_back(st.alpha[k]);
  return a;
}

inline std::vector<Vec> own_diagonals(const sa::Design& d, const sa::State& st) {
  std::vector<Vec> ds;
  for (size_t k = 0; k < d.blocks.size(); ++k)
    if (d.blocks[k].own_lag) ds.push_back(st.delta[k]);
  return ds;
}

}  // namespace detail

/// MAI(p) with q indexes.
inline FitResult fit_mai(const Panel& y, int p, int q, const FitOptions& opts = {}) {
  const Index n = y.cols();
  detail::require(p >= 1, "fit_mai: need p >= 1");
  detail::require(q >= 1 && q <= n, "fit_mai: need 1 <= q <= n");
  const auto d = design::mai(y, p, opts.sample_start);
  auto ef = detail::run_engine(d, q, opts);
  MAIParams prm{ef.state.omega, detail::index_loadings(d, ef.state), ef.state.sigma};
  return detail::package(ModelClass::MAI, {p, p, q, 0}, d, std::move(ef), std::move(prm), count::mai(n, p, q));
}

/// VHARI on a daily panel: indexes of the lagged daily, weekly and monthly cascades.
inline FitResult fit_vhari(const Panel& yd, int q, const FitOptions& opts = {}) {
  const Index n = yd.cols();
  detail::require(q >= 1 && q <= n, "fit_vhari: need 1 <= q <= n");
  const auto d = design::vhari(yd, opts.sample_start);
  auto ef = detail::run_engine(d, q, opts);
  const auto a = detail::index_loadings(d, ef.state);
  VHARIParams prm{ef.state.omega, a[0], a[1], a[2], ef.state.sigma};
  return detail::package(ModelClass::VHARI, {1, 1, q, 0}, d, std::move(ef), std::move(prm), count::vhari(n, q));
}

/// IAAR with p own lags and s <= p index lags. With q = 0 the model is n
/// separate AR(p) regressions estimated equation by equation.
inline FitResult fit_iaar(const Panel& y, int p, int s, int q, const FitOptions& opts = {}) {
  const Index n = y.cols();
  detail::require(p >= 1 && s >= 0 && s <= p, "fit_iaar: need p >= 1 and 0 <= s <= p");
  detail::require(q >= 0 && q < n, "fit_iaar: need 0 <= q < n");
  const auto d = design::iaar(y, p, q == 0 ? 0 : s, opts.sample_start);
  auto ef = detail::run_engine(d, q, opts);
  IAARParams prm{detail::own_diagonals(d, ef.state), detail::index_loadings(d, ef.state), ef.state.omega,
                 ef.state.sigma};
  const long k = q == 0 ? n * p : count::iaar(n, p, s, q);
  auto fr = detail::package(ModelClass::IAAR, {p, s, q, 0}, d, std::move(ef), std::move(prm), k);
  if (k >= n * n * p)
    fr.warnings.push_back("IAAR has at least as many mean parameters as the unrestricted VAR(" + std::to_string(p) +
                          "); lower q or s");
  return fr;
}

/// CIAAR on I(1) levels. p and s are levels orders: p-1 own-lag and s-1
/// index-lag difference terms; p = 0 is the VECIM; r = 0 drops the
/// error-correction term; r = q fixes gamma = I.
inline FitResult fit_ciaar(const Panel& y, int p, int s, int q, int r, const FitOptions& opts = {}) {
  const Index n = y.cols();
  detail::check_orders(n, {p, s, q, r}, true);
  const auto d = design::ciaar(y, p, s, r, opts.sample_start);
  auto ef = detail::run_engine(d, q, opts);
  CIAARParams prm{detail::own_diagonals(d, ef.state), ef.state.alpha0, ef.state.gamma, ef.state.omega,
                  detail::index_loadings(d, ef.state), ef.state.sigma};
  return detail::package(ModelClass::CIAAR, {p, s, q, r}, d, std::move(ef), std::move(prm),
                         count::ciaar(n, p, s, q, r));
}

/// Residuals of the CIAAR difference equation evaluated term by term for the
/// targets at panel rows [start, T).
inline Mat ciaar_residuals(const Panel& y, const CIAARParams& prm, Index start) {
  const Index n = y.cols();
  const Index t = y.rows();
  const Mat wt = prm.omega.transpose();
  Mat e(t - start, n);
  auto dy = [&](Index row) -> Vec { return (y.values.row(row) - y.values.row(row - 1)).transpose(); };
  for (Index i = start; i < t; ++i) {
    Vec v = dy(i);
    for (size_t j = 0; j < prm.ds.size(); ++j) v -= prm.ds[j].asDiagonal() * dy(i - 1 - static_cast<Index>(j));
    if (prm.alpha0.cols() > 0) v -= prm.alpha0 * prm.gamma.transpose() * wt * y.values.row(i - 1).transpose();
    for (size_t j = 0; j < prm.alphas.size(); ++j) v -= prm.alphas[j] * wt * dy(i - 1 - static_cast<Index>(j));
    e.row(i - start) = v.transpose();
  }
  return e;
}

/// VECIM (index VECM, s levels lags) estimated by the three-step switching
/// algorithm working directly on the data: OLS on the sample in Step 1, the
/// stacked Sigma^{-1/2} Vec/Kronecker regression in Step 2 and residual
/// product moments in Step 3. Independent of the moment-based engine behind
/// fit_ciaar except for the starting values.
inline FitResult fit_vecim(const Panel& y, int s, int q, int r, const FitOptions& opts = {}) {
  const Index n = y.cols();
  detail::check_orders(n, {0, s, q, r}, true);
  opts.validate();
  const auto d = design::ciaar(y, 0, s, r, opts.sample_start);
  sa::State st = detail::start_state(d, q, opts);
  const Index t = d.t();
  auto lstsq = [](const Mat& x, const Mat& b) -> Mat { return Eigen::CompleteOrthogonalDecomposition<Mat>(x).solve(b); };
  auto index_regs = [&](const Mat& omega) {
    Mat x(t, q * d.n_index_blocks());
    Index col = 0;
    for (const auto& b : d.blocks)
      if (b.index) {
        x.middleCols(col, q) = b.data * omega;
        col += q;
      }
    return x;
  };
  auto direct_residuals = [&]() {
    Mat e = d.z;
    size_t k = 0;
    for (const auto& b : d.blocks) {
      if (b.index) e -= b.data * st.omega * st.alpha[k].transpose();
      ++k;
    }
    if (r > 0) e -= d.ec * st.omega * st.gamma * st.alpha0.transpose();
    return e;
  };
  auto step1 = [&]() {
    Mat x = index_regs(st.omega);
    if (r > 0) {
      x.conservativeResize(t, x.cols() + r);
      x.rightCols(r) = d.ec * st.omega * st.gamma;
    }
    if (x.cols() > 0) {
      const Mat coef = lstsq(x, d.z);
      Index row = 0;
      for (size_t k = 0; k < d.blocks.size(); ++k)
        if (d.blocks[k].index) {
          st.alpha[k] = coef.middleRows(row, q).transpose();
          row += q;
        }
      if (r > 0) st.alpha0 = coef.bottomRows(r).transpose();
    }
    const Mat e = direct_residuals();
    st.sigma = linalg::cross_moment(e, e);
  };
  auto step2 = [&]() {
    const auto isq = linalg::sym_inv_sqrt(st.sigma);
    const auto reg = sa::step2_regression(d, st, isq.inv_sqrt);
    const Vec theta = lstsq(reg.x, reg.y);
    sa::unpack_theta(d, theta, st);
  };
  auto step3 = [&]() {
    const Mat x = index_regs(st.omega);
    Mat r0 = d.z, r1 = d.ec * st.omega;
    if (x.cols() > 0) {
      r0 -= x * lstsq(x, r0);
      r1 -= x * lstsq(x, r1);
    }
    const Mat s00 = linalg::cross_moment(r0, r0);
    const Mat s11 = linalg::cross_moment(r1, r1);
    const Mat s01 = linalg::cross_moment(r0, r1);
    const auto eig = linalg::generalized_eigen_desc(s01.transpose() * s00.ldlt().solve(s01), s11);
    st.gamma = eig.vectors.leftCols(r);
  };

  detail::EngineFit ef;
  step1();
  ef.outcome.trace.push_back(linalg::gaussian_loglik(st.sigma, t));
  for (int it = 1; it <= opts.max_iter; ++it) {
    step2();
    if (opts.normalize) sa::normalize_weights(d, st);
    if (r > 0 && r < q) step3();
    step1();
    const double ll = linalg::gaussian_loglik(st.sigma, t);
    const double prev = ef.outcome.trace.back();
    ef.outcome.trace.push_back(ll);
    ef.outcome.iterations = it;
    if (std::abs(ll - prev) <= opts.tol * std::max(1.0, std::abs(prev))) {
      ef.outcome.converged = true;
      break;
    }
  }
  ef.residuals = direct_residuals();
  if (r > 0 && r < q) detail::normalize_leading_block(st.gamma, st.alpha0);
  ef.state = st;
  CIAARParams prm{{}, st.alpha0, st.gamma, st.omega, detail::index_loadings(d, st), st.sigma};
  return detail::package(ModelClass::CIAAR, {0, s, q, r}, d, std::move(ef), std::move(prm),
                         count::ciaar(n, 0, s, q, r));
}

// ---------------------------------------------------------------------------
// DRVAR
// ---------------------------------------------------------------------------

struct DrvarOmega {
  Mat omega;        // n x q orthonormal
  Vec eigenvalues;  // all n eigenvalues of the moment matrix, descending
};

/// Eigenvectors of the q largest eigenvalues of sum_{j=1..p0} G(j) G(j)',
/// G(j) the lag-j sample autocovariance.
inline DrvarOmega fit_drvar_omega(const Panel& y, int p0, int q) {
  const Index n = y.cols();
  detail::require(p0 >= 1, "fit_drvar_omega: need p0 >= 1");
  detail::require(q >= 1 && q < n, "fit_drvar_omega: need 1 <= q < n");
  if (p0 >= y.rows()) throw InvalidInput("fit_drvar_omega: p0 must be below the sample length");
  Mat mm = Mat::Zero(n, n);
  for (int j = 1; j <= p0; ++j) {
    const Mat g = autocov(y, j);
    mm += g * g.transpose();
  }
  const auto eig = linalg::sym_eigen_desc(mm);
  return {eig.vectors.leftCols(q), eig.values};
}

enum class DrvarMethod { OLS, GLS };

/// Coefficients phi_1..phi_p of Y_t = sum_j omega phi_j omega' Y_{t-j} + e_t
/// for a given orthonormal omega. OLS projects the unrestricted regression on
/// the lagged indexes onto omega; GLS reweights once by the OLS residual
/// covariance, phi = (omega' S^{-1} omega)^{-1} omega' S^{-1} B.
inline FitResult fit_drvar_coeffs(const Panel& y, const Mat& omega, int p, DrvarMethod method = DrvarMethod::OLS,
                                  Index sample_start = 0) {
  const Index n = y.cols();
  const Index q = omega.cols();
  detail::require(omega.rows() == n, "fit_drvar_coeffs: omega must have n rows");
  detail::require(p >= 1, "fit_drvar_coeffs: need p >= 1");
  if (!(omega.transpose() * omega).isApprox(Mat::Identity(q, q), 1e-8))
    throw InvalidInput("fit_drvar_coeffs: omega must have orthonormal columns");
  const Index start = design::resolve_start(sample_start, p, y.rows(), q * p);
  const Index t = y.rows() - start;
  const Mat z = y.values.bottomRows(t);
  Mat x(t, q * p);
  for (int j = 1; j <= p; ++j) x.middleCols((j - 1) * q, q) = design::lagged(y.values, start, j) * omega;
  const auto reg = ols(x, z);  // (pq) x n
  auto fit_with = [&](const Mat& left) {
    std::vector<Mat> phis;
    Mat coef(q * p, n);
    for (int j = 0; j < p; ++j) {
      const Mat bj = reg.coeffs.middleRows(j * q, q).transpose();  // n x q
      phis.push_back(left * bj);
      coef.middleRows(j * q, q) = (omega * phis.back()).transpose();
    }
    const Mat e = z - x * coef;
    return std::make_pair(phis, e);
  };
  auto [phis, e] = fit_with(omega.transpose());
  FitResult fr;
  if (method == DrvarMethod::GLS) {
    const Mat s = linalg::cross_moment(e, e);
    Eigen::LLT<Mat> llt(s);
    Eigen::JacobiSVD<Mat> svd(s);
    const Vec sv = svd.singularValues();
    if (llt.info() != Eigen::Success || !(sv(sv.size() - 1) > 1e-12 * sv(0))) {
      fr.gls_fallback = true;
      fr.warnings.push_back("residual covariance singular; GLS fell back to OLS");
    } else {
      const Mat w = llt.solve(Mat::Identity(n, n));
      const Mat left = (omega.transpose() * w * omega).ldlt().solve(omega.transpose() * w);
      std::tie(phis, e) = fit_with(left);
    }
  }
  const Mat sigma = linalg::cross_moment(e, e);
  fr.model = ModelClass::DRVAR;
  fr.orders = {p, p, static_cast<int>(q), 0};
  fr.params = DRVARParams{omega, phis, sigma};
  fr.residuals = e;
  fr.loglik = linalg::gaussian_loglik(sigma, t);
  fr.loglik_trace = {fr.loglik};
  fr.converged = true;
  fr.first_row = start;
  fr.t_eff = t;
  fr.n_params = count::drvar(n, p, q);
  return fr;
}

inline FitResult fit_drvar(const Panel& y, int p, int q, int p0 = 0, DrvarMethod method = DrvarMethod::OLS,
                           Index sample_start = 0) {
  const auto om = fit_drvar_omega(y, p0 > 0 ? p0 : p, q);
  auto fr = fit_drvar_coeffs(y, om.omega, p, method, sample_start);
  fr.eigenvalues = om.eigenvalues;
  return fr;
}

/// Fit any supported class with the given orders.
inline FitResult fit_model(const Panel& y, ModelClass cls, const Orders& o, const FitOptions& opts = {}) {
  switch (cls) {
    case ModelClass::MAI: return fit_mai(y, o.p, o.q, opts);
    case ModelClass::VHARI: return fit_vhari(y, o.q, opts);
    case ModelClass::IAAR: return fit_iaar(y, o.p, o.s, o.q, opts);
    case ModelClass::CIAAR: return fit_ciaar(y, o.p, o.s, o.q, o.r, opts);
    case ModelClass::VECM: return johansen_rrr(y, o.p, o.r, opts.sample_start);
    case ModelClass::DRVAR: return fit_drvar(y, o.p, o.q, o.p, DrvarMethod::OLS, opts.sample_start);
  }
  throw InvalidInput("fit_model: unknown class");
}

}  // namespace ivar

#endif  // IVAR_ESTIMATORS_HPP
