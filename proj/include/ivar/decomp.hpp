#ifndef IVAR_DECOMP_HPP
#define IVAR_DECOMP_HPP

#include <cmath>
#include <string>
#include <vector>

#include "ivar/fit_result.hpp"
#include "ivar/panel.hpp"
#include "ivar/tscore.hpp"

namespace ivar {

// ---------------------------------------------------------------------------
// Wold representation
// ---------------------------------------------------------------------------

struct WoldSeq {
  std::vector<Mat> psis;    // Psi_0 .. Psi_H
  std::vector<Mat> thetas;  // theta_1 .. theta_H (index fits only)
  Vec violation;            // ||Psi_j - theta_j omega'||_inf for j = 1..H
  Index horizon = 0;
  bool differences = false;  // true when Psi is the MA of dY (I(1) fits)

  double max_violation() const { return violation.size() ? violation.maxCoeff() : 0.0; }
};

/// MA coefficients C_0..C_H of the levels recursion Y_t = sum_k Phi_k Y_{t-k} + e_t.
inline std::vector<Mat> ma_coefficients(const std::vector<Mat>& phis, Index horizon) {
  const Index n = phis.front().rows();
  std::vector<Mat> c;
  c.reserve(static_cast<size_t>(horizon + 1));
  c.push_back(Mat::Identity(n, n));
  for (Index j = 1; j <= horizon; ++j) {
    Mat cj = Mat::Zero(n, n);
    for (Index k = 1; k <= std::min<Index>(j, static_cast<Index>(phis.size())); ++k)
      cj.noalias() += phis[static_cast<size_t>(k - 1)] * c[static_cast<size_t>(j - k)];
    c.push_back(std::move(cj));
  }
  return c;
}

/// Wold coefficients of Y (stationary fits) or of dY (CIAAR/VECM fits).
inline WoldSeq wold(const FitResult& fit, Index horizon) {
  if (horizon < 0) throw InvalidInput("wold: horizon must be nonnegative");
  const auto phis = levels_var(fit.params);
  WoldSeq w;
  w.horizon = horizon;
  w.differences = is_integrated(fit.model);
  if (!w.differences) {
    const double rad = companion_spectral_radius(phis);
    if (!(rad < 1.0 - 1e-10)) throw Nonstationary("wold: fitted model has spectral radius " + std::to_string(rad));
    w.psis = ma_coefficients(phis, horizon);
  } else {
    const auto c = ma_coefficients(phis, horizon);
    w.psis.push_back(c[0]);
    for (Index j = 1; j <= horizon; ++j) w.psis.push_back(c[static_cast<size_t>(j)] - c[static_cast<size_t>(j - 1)]);
  }
  const Mat omega = fit.omega();
  if (omega.cols() > 0) {
    const Mat right = omega * (omega.transpose() * omega).inverse();
    w.violation = Vec::Zero(horizon);
    for (Index j = 1; j <= horizon; ++j) {
      w.thetas.push_back(w.psis[static_cast<size_t>(j)] * right);
      w.violation(j - 1) =
          (w.psis[static_cast<size_t>(j)] - w.thetas.back() * omega.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Common / uncommon split
// ---------------------------------------------------------------------------

struct Projectors {
  Mat common;    // Sigma omega (omega' Sigma omega)^{-1} omega'
  Mat uncommon;  // omega_perp (omega_perp' Sigma^{-1} omega_perp)^{-1} omega_perp' Sigma^{-1}
  Mat omega_perp;
};

inline Projectors cc_projectors(const Mat& sigma, const Mat& omega) {
  const Index n = sigma.rows();
  detail::require(sigma.cols() == n && omega.rows() == n, "cc_projectors: dimension mismatch");
  Eigen::LLT<Mat> ls(sigma);
  if (ls.info() != Eigen::Success) throw NumericalError("cc_projectors: sigma is not positive definite");
  const Mat sw = sigma * omega;
  const Mat small = omega.transpose() * sw;
  Eigen::LLT<Mat> lsmall(small);
  if (omega.cols() > 0 && (lsmall.info() != Eigen::Success || Eigen::FullPivLU<Mat>(small).rank() < omega.cols()))
    throw NumericalError("cc_projectors: omega' Sigma omega is singular");
  Projectors p;
  p.omega_perp = linalg::orth_complement(omega);
  p.common = omega.cols() > 0 ? Mat(sw * lsmall.solve(omega.transpose())) : Mat(Mat::Zero(n, n));
  if (p.omega_perp.cols() > 0) {
    const Mat sinv_perp = ls.solve(p.omega_perp);  // Sigma^{-1} omega_perp
    const Mat mid = p.omega_perp.transpose() * sinv_perp;
    p.uncommon = p.omega_perp * mid.ldlt().solve(sinv_perp.transpose());
  } else {
    p.uncommon = Mat::Zero(n, n);
  }
  return p;
}

struct Decomposition {
  bool integrated = false;
  Index first_row = 0;  // panel row of component row 0
  Index startup = 0;    // leading rows still carrying pre-sample effects above tolerance
  Mat chi, iota, pi, tau;          // levels (cumulated from 0 for I(1) fits)
  Mat d_chi, d_iota, d_pi, d_tau;  // increments (I(1) fits only)
  Mat eps_chi, eps_iota, eps_pi, eps_tau;
  Projectors projectors;
  bool pi_degenerate = false;
  bool tau_degenerate = false;
  double reconstruction_error = 0.0;  // max abs error over rows >= startup

  Index rows() const { return chi.rows(); }
  Index span_rows() const { return rows() - startup; }
};

namespace detail {

/// X_t = sum_k Phi_k X_{t-k} + u_t from zero pre-sample values.
inline Mat filter_levels(const std::vector<Mat>& phis, const Mat& u) {
  const Index t = u.rows();
  const Index p = static_cast<Index>(phis.size());
  Mat x(t, u.cols());
  for (Index i = 0; i < t; ++i) {
    Vec v = u.row(i).transpose();
    for (Index k = 1; k <= std::min(p, i); ++k) v.noalias() += phis[static_cast<size_t>(k - 1)] * x.row(i - k).transpose();
    x.row(i) = v.transpose();
  }
  return x;
}

inline Mat increments(const Mat& x) {
  Mat d = x;
  if (x.rows() > 1) d.bottomRows(x.rows() - 1) -= x.topRows(x.rows() - 1);
  return d;
}

constexpr double kReconstructionTol = 1e-10;
constexpr Index kMaxStartup = 2000;

/// Target series the components should add up to: Y or dY on the fit sample.
inline Mat decomposition_target(const FitResult& fit, const Panel& y) {
  detail::require(y.rows() >= fit.first_row + fit.t_eff && y.cols() == fit.n(),
                  "decomposition: panel does not match the fit");
  const Mat lev = y.values.middleRows(fit.first_row, fit.t_eff);
  if (!is_integrated(fit.model)) return lev;
  return lev - y.values.middleRows(fit.first_row - 1, fit.t_eff);
}

/// Rows from which the components reproduce the target to tolerance.
inline void locate_startup(Decomposition& d, const Mat& target, const Mat& sum) {
  const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
  const Vec err = (target - sum).cwiseAbs().rowwise().maxCoeff();
  Index start = 0;
  for (Index i = err.size() - 1; i >= 0; --i)
    if (err(i) > kReconstructionTol * scale) {
      start = i + 1;
      break;
    }
  if (start > kMaxStartup || start >= err.size())
    throw NumericalError("decomposition: pre-sample effects do not die out within " +
                         std::to_string(std::min<Index>(kMaxStartup, err.size())) + " rows");
  d.startup = start;
  d.reconstruction_error = start < err.size() ? err.tail(err.size() - start).maxCoeff() : 0.0;
}

inline void build_component(const std::vector<Mat>& phis, const Mat& gain_times_shock, bool integrated, Mat& level,
                            Mat& incr) {
  level = filter_levels(phis, gain_times_shock);
  if (integrated) incr = increments(level);
}

}  // namespace detail

/// Common and uncommon components driven by eps_chi = omega' e and
/// eps_iota = omega_perp' Sigma^{-1} e.
inline Decomposition common_uncommon(const FitResult& fit, const Panel& y) {
  const Mat omega = fit.omega();
  if (omega.cols() == 0) throw InvalidInput("common_uncommon: fit has no index structure");
  Decomposition d;
  d.integrated = is_integrated(fit.model);
  d.first_row = fit.first_row;
  d.projectors = cc_projectors(fit.sigma(), omega);
  const Mat& e = fit.residuals;
  const Mat sigma_inv = fit.sigma().llt().solve(Mat::Identity(fit.n(), fit.n()));
  d.eps_chi = e * omega;
  d.eps_iota = e * sigma_inv * d.projectors.omega_perp;
  const auto phis = levels_var(fit.params);
  detail::build_component(phis, e * d.projectors.common.transpose(), d.integrated, d.chi, d.d_chi);
  detail::build_component(phis, e * d.projectors.uncommon.transpose(), d.integrated, d.iota, d.d_iota);
  const Mat target = detail::decomposition_target(fit, y);
  detail::locate_startup(d, target, d.integrated ? Mat(d.d_chi + d.d_iota) : Mat(d.chi + d.iota));
  return d;
}

// ---------------------------------------------------------------------------
// Permanent / transitory / uncommon split
// ---------------------------------------------------------------------------

namespace detail {

struct CommonLoadings {
  Mat omega;
  Mat alpha0_low;  // omega' alpha0, q x r
  Mat sigma_low;   // omega' Sigma omega
};

inline CommonLoadings common_loadings(const FitResult& fit) {
  if (fit.model != ModelClass::CIAAR) throw InvalidInput("permanent/transitory split needs a CIAAR or VECIM fit");
  const auto& c = std::get<CIAARParams>(fit.params);
  return {c.omega, c.omega.transpose() * c.alpha0, c.omega.transpose() * c.sigma * c.omega};
}

/// Gain of the transitory shocks at lag zero: Sigma omega Sigma_^{-1} a (a' Sigma_^{-1} a)^{-1}.
inline Mat transitory_gain(const Mat& sigma, const CommonLoadings& cl) {
  const Mat sinv_a = cl.sigma_low.llt().solve(cl.alpha0_low);
  return sigma * cl.omega * sinv_a * (cl.alpha0_low.transpose() * sinv_a).inverse();
}

}  // namespace detail

/// Splits the common component of an I(1) index fit into permanent and
/// transitory parts: eps_pi = a_perp' eps_chi, eps_tau = a' Sigma_^{-1} eps_chi
/// with a = omega' alpha0 and Sigma_ = omega' Sigma omega.
inline Decomposition perm_trans(const FitResult& fit, const Panel& y) {
  auto d = common_uncommon(fit, y);
  const auto cl = detail::common_loadings(fit);
  const Index n = fit.n();
  const Index q = cl.omega.cols();
  const Index r = cl.alpha0_low.cols();
  const Mat& sigma = fit.sigma();
  const auto phis = levels_var(fit.params);
  const Mat& e = fit.residuals;
  const Index t = e.rows();
  d.pi_degenerate = (r == q);
  d.tau_degenerate = (r == 0);

  const Mat a_perp = linalg::orth_complement(cl.alpha0_low);
  Mat gain_pi = Mat::Zero(n, q - r), gain_tau = Mat::Zero(n, r);
  if (!d.pi_degenerate) {
    d.eps_pi = d.eps_chi * a_perp;
    gain_pi = sigma * cl.omega * a_perp * (a_perp.transpose() * cl.sigma_low * a_perp).inverse();
  } else {
    d.eps_pi = Mat(t, 0);
  }
  if (!d.tau_degenerate) {
    d.eps_tau = d.eps_chi * cl.sigma_low.llt().solve(cl.alpha0_low);
    gain_tau = detail::transitory_gain(sigma, cl);
  } else {
    d.eps_tau = Mat(t, 0);
  }
  detail::build_component(phis, d.eps_pi * gain_pi.transpose(), true, d.pi, d.d_pi);
  detail::build_component(phis, d.eps_tau * gain_tau.transpose(), true, d.tau, d.d_tau);
  const Mat target = detail::decomposition_target(fit, y);
  detail::locate_startup(d, target, d.d_pi + d.d_tau + d.d_iota);
  return d;
}

struct StructuralIRF {
  std::vector<Mat> theta_seq;     // responses of dY, Theta_0 .. Theta_H (n x r)
  std::vector<Mat> theta_levels;  // cumulated responses of Y
  Mat shocks;                     // T x r, u_t = C^{-1} D eps_tau_t
  Mat d;                          // first r rows of T(0)
  Mat c;                          // lower triangular, C C' = D Cov(eps_tau) D'
};

/// Cholesky-identified transitory shocks and their impulse responses.
inline StructuralIRF structural_transitory_irf(const FitResult& fit, Index horizon) {
  if (horizon < 0) throw InvalidInput("structural_transitory_irf: horizon must be nonnegative");
  const auto cl = detail::common_loadings(fit);
  const Index r = cl.alpha0_low.cols();
  if (r < 1) throw InvalidInput("structural_transitory_irf: needs r >= 1");
  const Mat t0 = detail::transitory_gain(fit.sigma(), cl);
  StructuralIRF out;
  out.d = t0.topRows(r);
  Eigen::FullPivLU<Mat> lu(out.d);
  if (!lu.isInvertible())
    throw NumericalError("structural_transitory_irf: leading r x r block of T(0) is singular; reorder the variables");
  const Mat sinv_a = cl.sigma_low.llt().solve(cl.alpha0_low);
  const Mat cov_tau = cl.alpha0_low.transpose() * sinv_a;
  const Mat cc = out.d * cov_tau * out.d.transpose();
  Eigen::LLT<Mat> llt(0.5 * (cc + cc.transpose()));
  if (llt.info() != Eigen::Success) throw NumericalError("structural_transitory_irf: D Cov(eps_tau) D' is not positive definite");
  out.c = llt.matrixL();
  const Mat impact = t0 * lu.solve(out.c);
  const auto w = wold(fit, horizon);
  Mat cum = Mat::Zero(impact.rows(), r);
  for (const auto& psi : w.psis) {
    out.theta_seq.push_back(psi * impact);
    cum += out.theta_seq.back();
    out.theta_levels.push_back(cum);
  }
  const Mat eps_tau = fit.residuals * cl.omega * sinv_a;
  const Mat map = out.c.triangularView<Eigen::Lower>().solve(out.d);  // C^{-1} D
  out.shocks = eps_tau * map.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// DRVAR
// ---------------------------------------------------------------------------

struct DrvarDecomposition {
  Index first_row = 0;
  Mat dynamic;     // omega f_t
  Mat static_part; // omega_perp eta_t
  Mat eps_chi;     // omega' e_t
  Mat rho;         // n x q, projection of omega_perp eta_t on eps_chi_t
  Mat nu;          // ignorable errors
  std::vector<Mat> c_seq;  // C_0 = omega + rho, C_j = omega gamma_j
};

inline DrvarDecomposition drvar_decompose(const FitResult& fit, const Panel& y, Index horizon = 20) {
  if (fit.model != ModelClass::DRVAR) throw InvalidInput("drvar_decompose: needs a DRVAR fit");
  const auto& prm = std::get<DRVARParams>(fit.params);
  const Mat& omega = prm.omega;
  DrvarDecomposition d;
  d.first_row = fit.first_row;
  const Mat yy = y.values.middleRows(fit.first_row, fit.t_eff);
  const Mat perp = linalg::orth_complement(omega);
  d.dynamic = yy * omega * omega.transpose();
  d.static_part = yy * perp * perp.transpose();
  d.eps_chi = fit.residuals * omega;
  const Mat sxx = linalg::cross_moment(d.eps_chi, d.eps_chi);
  const Mat syx = linalg::cross_moment(d.static_part, d.eps_chi);
  d.rho = sxx.llt().solve(syx.transpose()).transpose();
  d.nu = d.static_part - d.eps_chi * d.rho.transpose();
  const auto gammas = ma_coefficients(prm.phis, horizon);
  d.c_seq.push_back(omega + d.rho);
  for (Index j = 1; j <= horizon; ++j) d.c_seq.push_back(omega * gammas[static_cast<size_t>(j)]);
  return d;
}

}  // namespace ivar

#endif  // IVAR_DECOMP_HPP
