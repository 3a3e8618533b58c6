#ifndef IVAR_SWITCHING_HPP
#define IVAR_SWITCHING_HPP

#include <cmath>
#include <vector>

#include "ivar/fit_result.hpp"
#include "ivar/linalg.hpp"
#include "ivar/tscore.hpp"

/// Switching-algorithm engine shared by every index-structured model.
///
/// All of MAI, VHARI, IAAR, VECIM and CIAAR are instances of
///
///   z_t = sum_k diag(delta_k) b_{k,t} + alpha0 gamma' omega' x_t
///         + sum_k alpha_k omega' b_{k,t} + e_t,
///
/// where the b_k are lagged regressor blocks (own-lag and/or index
/// carrying) and x_t is the lagged level entering the error-correction term.
/// Each sweep runs three conditional maximizations:
///   1. (alpha0, alpha, Sigma) | (omega, gamma, delta)       -- OLS
///   2. (omega, delta) | (alpha0, alpha, gamma, Sigma)        -- GLS on the
///      Vec/Kronecker rewrite
///   3. gamma | (omega, delta), only when 0 < r < q           -- reduced rank
/// Every step only needs second moments of the stacked data, so a sweep
/// costs the same whatever the sample length.
namespace ivar::sa {

struct Block {
  Mat data;  // t_eff x n
  bool own_lag = false;
  bool index = false;
};

struct Design {
  Mat z;                     // t_eff x n
  std::vector<Block> blocks;
  Mat ec;                    // t_eff x n (0 columns when the rank is 0)
  Index rank = 0;
  Index first_row = 0;       // panel row of the first target

  Index n() const { return z.cols(); }
  Index t() const { return z.rows(); }
  bool has_ec() const { return rank > 0; }
  Index n_index_blocks() const {
    Index k = 0;
    for (const auto& b : blocks) k += b.index ? 1 : 0;
    return k;
  }
};

struct State {
  std::vector<Vec> delta;  // per block; empty vector when the block has no own lag
  std::vector<Mat> alpha;  // per block; n x q (zero when the block carries no index)
  Mat alpha0;              // n x r
  Mat gamma;               // q x r
  Mat omega;               // n x q
  Mat sigma;
};

/// Stacked data [z | b_1 | ... | b_K | x] and its second-moment matrix.
class Moments {
 public:
  explicit Moments(const Design& d) : n_(d.n()), k_(static_cast<Index>(d.blocks.size())) {
    const Index v = 1 + k_ + (d.has_ec() ? 1 : 0);
    stacked_.resize(d.t(), v * n_);
    stacked_.leftCols(n_) = d.z;
    for (Index k = 0; k < k_; ++k) stacked_.middleCols((1 + k) * n_, n_) = d.blocks[static_cast<size_t>(k)].data;
    if (d.has_ec()) stacked_.rightCols(n_) = d.ec;
    s_ = stacked_.transpose() * stacked_ / static_cast<double>(d.t());
  }

  const Mat& s() const { return s_; }
  const Mat& stacked() const { return stacked_; }
  Index width() const { return s_.cols(); }
  Index z_off() const { return 0; }
  Index block_off(size_t k) const { return (1 + static_cast<Index>(k)) * n_; }
  Index ec_off() const { return (1 + k_) * n_; }
  auto cross(Index a, Index b) const { return s_.block(a, b, n_, n_); }

 private:
  Index n_, k_;
  Mat stacked_;
  Mat s_;
};

/// Row operator mapping the stacked data to the residual: e_t = C v_t.
inline Mat residual_operator(const Design& d, const Moments& m, const State& st) {
  const Index n = d.n();
  Mat c = Mat::Zero(n, m.width());
  c.block(0, m.z_off(), n, n).setIdentity();
  const Mat wt = st.omega.transpose();
  for (size_t k = 0; k < d.blocks.size(); ++k) {
    auto blk = c.block(0, m.block_off(k), n, n);
    if (d.blocks[k].own_lag) blk.diagonal() -= st.delta[k];
    if (d.blocks[k].index) blk -= st.alpha[k] * wt;
  }
  if (d.has_ec()) c.block(0, m.ec_off(), n, n) = -st.alpha0 * st.gamma.transpose() * wt;
  return c;
}

/// z_t minus the own-lag terms.
inline Mat target_operator(const Design& d, const Moments& m, const State& st) {
  const Index n = d.n();
  Mat c = Mat::Zero(n, m.width());
  c.block(0, m.z_off(), n, n).setIdentity();
  for (size_t k = 0; k < d.blocks.size(); ++k)
    if (d.blocks[k].own_lag) c.block(0, m.block_off(k), n, n).diagonal() -= st.delta[k];
  return c;
}

/// Index regressors omega' b_k of the index-carrying blocks.
inline Mat index_operator(const Design& d, const Moments& m, const Mat& omega) {
  const Index n = d.n();
  const Index q = omega.cols();
  Mat o = Mat::Zero(q * d.n_index_blocks(), m.width());
  Index row = 0;
  for (size_t k = 0; k < d.blocks.size(); ++k) {
    if (!d.blocks[k].index) continue;
    o.block(row, m.block_off(k), q, n) = omega.transpose();
    row += q;
  }
  return o;
}

inline Mat sigma_at(const Design& d, const Moments& m, const State& st) {
  const Mat c = residual_operator(d, m, st);
  Mat s = c * m.s() * c.transpose();
  return 0.5 * (s + s.transpose());
}

inline Mat residuals_at(const Design& d, const Moments& m, const State& st) {
  return m.stacked() * residual_operator(d, m, st).transpose();
}

inline Mat solve_psd(const Mat& a, const Mat& b) {
  return Eigen::CompleteOrthogonalDecomposition<Mat>(a).solve(b);
}

/// Step 1: OLS of the own-lag-adjusted target on the error-correction index
/// gamma' omega' x_t and the lagged indexes; Sigma from the residuals.
inline void step_loadings(const Design& d, const Moments& m, State& st, double ridge) {
  const Index q = st.omega.cols();
  const Index r = d.rank;
  const Mat cz = target_operator(d, m, st);
  const Mat oi = index_operator(d, m, st.omega);
  Mat reg(oi.rows() + r, m.width());
  reg.topRows(oi.rows()) = oi;
  if (r > 0) {
    reg.bottomRows(r).setZero();
    reg.block(oi.rows(), m.ec_off(), r, d.n()) = st.gamma.transpose() * st.omega.transpose();
  }
  if (reg.rows() > 0) {
    Mat sxx = reg * m.s() * reg.transpose();
    if (ridge > 0.0) sxx.diagonal().array() += ridge / static_cast<double>(d.t());
    const Mat coef = solve_psd(sxx, reg * m.s() * cz.transpose());  // k x n
    Index row = 0;
    for (size_t k = 0; k < d.blocks.size(); ++k) {
      if (!d.blocks[k].index) continue;
      st.alpha[k] = coef.middleRows(row, q).transpose();
      row += q;
    }
    if (r > 0) st.alpha0 = coef.bottomRows(r).transpose();
  }
  st.sigma = sigma_at(d, m, st);
}

struct Term {
  Index off;  // offset of the regressor block in the stacked data
  Mat load;   // n x q loading multiplying omega'
};

inline std::vector<Term> index_terms(const Design& d, const Moments& m, const State& st) {
  std::vector<Term> terms;
  for (size_t k = 0; k < d.blocks.size(); ++k)
    if (d.blocks[k].index) terms.push_back({m.block_off(k), st.alpha[k]});
  if (d.has_ec()) terms.push_back({m.ec_off(), st.alpha0 * st.gamma.transpose()});
  return terms;
}

/// Current [delta_1; ...; delta_K; vec(omega')].
inline Vec pack_theta(const Design& d, const State& st) {
  Index nd = 0;
  for (const auto& b : d.blocks) nd += b.own_lag ? d.n() : 0;
  Vec th(nd + st.omega.size());
  Index pos = 0;
  for (size_t k = 0; k < d.blocks.size(); ++k) {
    if (!d.blocks[k].own_lag) continue;
    th.segment(pos, d.n()) = st.delta[k];
    pos += d.n();
  }
  th.tail(st.omega.size()) = linalg::vec(st.omega.transpose());
  return th;
}

inline void unpack_theta(const Design& d, const Vec& th, State& st) {
  const Index n = d.n();
  const Index q = st.omega.cols();
  Index pos = 0;
  for (size_t k = 0; k < d.blocks.size(); ++k) {
    if (!d.blocks[k].own_lag) continue;
    st.delta[k] = th.segment(pos, n);
    pos += n;
  }
  st.omega = linalg::unvec(th.tail(n * q), q, n).transpose();
}

struct NormalEquations {
  Mat lhs;
  Vec rhs;
};

/// Normal equations of the GLS regression for (delta, vec(omega')) with
/// weight W = Sigma^{-1}, assembled from second moments. Equal to X'X/T and
/// X'y/T of the stacked regression built by `step2_regression`.
inline NormalEquations step2_normal_equations(const Design& d, const Moments& m, const State& st, const Mat& w) {
  const Index n = d.n();
  const Index q = st.omega.cols();
  std::vector<size_t> own;
  for (size_t k = 0; k < d.blocks.size(); ++k)
    if (d.blocks[k].own_lag) own.push_back(k);
  const Index nd = n * static_cast<Index>(own.size());
  const Index dim = nd + n * q;
  const auto terms = index_terms(d, m, st);
  NormalEquations ne{Mat::Zero(dim, dim), Vec::Zero(dim)};

  for (size_t a = 0; a < own.size(); ++a) {
    const Index oa = m.block_off(own[a]);
    for (size_t b = 0; b < own.size(); ++b)
      ne.lhs.block(static_cast<Index>(a) * n, static_cast<Index>(b) * n, n, n) =
          w.cwiseProduct(m.cross(oa, m.block_off(own[b])));
    ne.rhs.segment(static_cast<Index>(a) * n, n) = (w * m.cross(m.z_off(), oa)).diagonal();
    for (const auto& t : terms) {
      const Mat wa = w * t.load;             // n x q
      const Mat sbx = m.cross(oa, t.off);    // n x n
      auto blk = ne.lhs.block(static_cast<Index>(a) * n, nd, n, n * q);
      for (Index j = 0; j < n; ++j)
        for (Index c = 0; c < q; ++c) blk.col(j * q + c) += wa.col(c).cwiseProduct(sbx.col(j));
    }
  }
  for (size_t a = 0; a < terms.size(); ++a) {
    const Mat awt = terms[a].load.transpose() * w;  // q x n
    for (size_t b = 0; b < terms.size(); ++b)
      ne.lhs.block(nd, nd, n * q, n * q) +=
          linalg::kron(m.cross(terms[a].off, terms[b].off), awt * terms[b].load);
    ne.rhs.tail(n * q) += linalg::vec(awt * m.cross(m.z_off(), terms[a].off));
  }
  ne.lhs.bottomLeftCorner(n * q, nd) = ne.lhs.topRightCorner(nd, n * q).transpose();
  return ne;
}

/// Stacked form of the Step-2 regression:
///   Sigma^{-1/2} z_t = sum_k [(b_{k,t}' (x) Sigma^{-1/2}) M] delta_k
///     + (x_t' (x) Sigma^{-1/2} alpha0 gamma' + sum_k b_{k,t}' (x) Sigma^{-1/2} alpha_k) vec(omega') + u_t
/// with M the binary diagonal-selection matrix. Rows t*n .. t*n+n-1 hold time t.
struct Step2Regression {
  Vec y;
  Mat x;
};

inline Step2Regression step2_regression(const Design& d, const State& st, const Mat& sigma_inv_sqrt) {
  const Index n = d.n();
  const Index q = st.omega.cols();
  const Index t = d.t();
  Index nd = 0;
  for (const auto& b : d.blocks) nd += b.own_lag ? n : 0;
  const Mat sel = linalg::diag_selection(n);
  Step2Regression out{Vec(t * n), Mat::Zero(t * n, nd + n * q)};
  const Mat ec_load = d.has_ec() ? Mat(sigma_inv_sqrt * st.alpha0 * st.gamma.transpose()) : Mat();
  for (Index i = 0; i < t; ++i) {
    out.y.segment(i * n, n) = sigma_inv_sqrt * d.z.row(i).transpose();
    auto rows = out.x.middleRows(i * n, n);
    Index col = 0;
    for (const auto& b : d.blocks) {
      if (!b.own_lag) continue;
      rows.middleCols(col, n) = linalg::kron(b.data.row(i), sigma_inv_sqrt) * sel;
      col += n;
    }
    auto wcols = rows.rightCols(n * q);
    for (size_t k = 0; k < d.blocks.size(); ++k)
      if (d.blocks[k].index) wcols += linalg::kron(d.blocks[k].data.row(i), sigma_inv_sqrt * st.alpha[k]);
    if (d.has_ec()) wcols += linalg::kron(d.ec.row(i), ec_load);
  }
  return out;
}

/// Step 2: GLS update of (delta, omega), solved for the increment so that
/// directions the data cannot identify keep their previous values.
inline bool step_weights(const Design& d, const Moments& m, State& st, double ridge) {
  const auto isq = linalg::sym_inv_sqrt(st.sigma);
  auto ne = step2_normal_equations(d, m, st, isq.inv);
  if (ridge > 0.0) ne.lhs.diagonal().array() += ridge / static_cast<double>(d.t());
  const Vec th = pack_theta(d, st);
  const Vec inc = solve_psd(ne.lhs, ne.rhs - ne.lhs * th);
  unpack_theta(d, th + inc, st);
  return isq.clipped;
}

/// Step 3: gamma from the r leading eigenvectors of S11^{-1} S10 S00^{-1} S01,
/// with R0 and R1 the residuals of the own-lag-adjusted target and of
/// omega' x_t on the lagged indexes.
inline void step_cointegration(const Design& d, const Moments& m, State& st) {
  const Index n = d.n();
  const Mat cz = target_operator(d, m, st);
  const Mat oi = index_operator(d, m, st.omega);
  Mat ow = Mat::Zero(st.omega.cols(), m.width());
  ow.block(0, m.ec_off(), st.omega.cols(), n) = st.omega.transpose();
  Mat s00 = cz * m.s() * cz.transpose();
  Mat s11 = ow * m.s() * ow.transpose();
  Mat s01 = cz * m.s() * ow.transpose();
  if (oi.rows() > 0) {
    const Mat sxx = oi * m.s() * oi.transpose();
    const Mat s0x = cz * m.s() * oi.transpose();
    const Mat s1x = ow * m.s() * oi.transpose();
    const Mat sol0 = solve_psd(sxx, s0x.transpose());
    const Mat sol1 = solve_psd(sxx, s1x.transpose());
    s00 -= s0x * sol0;
    s11 -= s1x * sol1;
    s01 -= s0x * sol1;
  }
  const Mat a = s01.transpose() * s00.ldlt().solve(s01);
  const auto eig = linalg::generalized_eigen_desc(a, s11);
  st.gamma = eig.vectors.leftCols(d.rank);
}

/// Orthonormalize omega by QR and absorb the triangular factor into the
/// loadings and gamma; fitted values are unchanged.
inline void normalize_weights(const Design& d, State& st) {
  const Index q = st.omega.cols();
  if (q == 0) return;
  Eigen::HouseholderQR<Mat> qr(st.omega);
  Mat qm = qr.householderQ() * Mat::Identity(st.omega.rows(), q);
  Mat rm = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  if (!(rm.diagonal().cwiseAbs().minCoeff() > 1e-12 * rm.diagonal().cwiseAbs().maxCoeff())) return;
  Mat qs = qm;
  linalg::fix_column_signs(qs);
  const Vec sign = (qs.array() * qm.array()).colwise().sum().transpose().cwiseSign();
  rm = sign.asDiagonal() * rm;
  st.omega = qs;
  for (size_t k = 0; k < d.blocks.size(); ++k)
    if (d.blocks[k].index) st.alpha[k] = st.alpha[k] * rm.transpose();
  if (d.has_ec()) {
    st.gamma = rm * st.gamma;
    if (d.rank == q) {
      st.alpha0 = st.alpha0 * st.gamma.transpose();
      st.gamma = Mat::Identity(q, q);
    }
  }
}

struct RunOutcome {
  std::vector<double> trace;
  bool converged = false;
  int iterations = 0;
  bool ridge_repair = false;
};

inline RunOutcome run(const Design& d, State& st, const FitOptions& opts) {
  const Moments m(d);
  const Index q = st.omega.cols();
  RunOutcome out;
  step_loadings(d, m, st, opts.ridge);
  out.trace.push_back(linalg::gaussian_loglik(st.sigma, d.t()));
  for (int it = 1; it <= opts.max_iter; ++it) {
    out.ridge_repair = step_weights(d, m, st, opts.ridge) || out.ridge_repair;
    if (opts.normalize) normalize_weights(d, st);
    if (d.rank > 0 && d.rank < q) step_cointegration(d, m, st);
    step_loadings(d, m, st, opts.ridge);
    const double ll = linalg::gaussian_loglik(st.sigma, d.t());
    const double prev = out.trace.back();
    out.trace.push_back(ll);
    out.iterations = it;
    if (std::abs(ll - prev) <= opts.tol * std::max(1.0, std::abs(prev))) {
      out.converged = true;
      break;
    }
  }
  const Mat e = residuals_at(d, m, st);
  st.sigma = linalg::cross_moment(e, e);
  return out;
}

}  // namespace ivar::sa

#endif  // IVAR_SWITCHING_HPP
