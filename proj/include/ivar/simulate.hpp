#ifndef IVAR_SIMULATE_HPP
#define IVAR_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ivar/params.hpp"
#include "ivar/panel.hpp"
#include "ivar/rng.hpp"
#include "ivar/tscore.hpp"

namespace ivar {

enum class ShockKind { Gaussian, LogNormalGarch };

inline std::string to_string(ShockKind k) { return k == ShockKind::Gaussian ? "gaussian" : "lognormal-garch"; }

inline ShockKind shock_kind_from_string(const std::string& s) {
  if (s == "gaussian") return ShockKind::Gaussian;
  if (s == "lognormal-garch") return ShockKind::LogNormalGarch;
  throw InvalidInput("unknown shock distribution '" + s + "'");
}

inline constexpr Index kDefaultBurn = 500;

namespace sim {

inline Mat cholesky_lower(const Mat& sigma) {
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success) throw InvalidInput("sigma is not positive definite (Cholesky failed)");
  return llt.matrixL();
}

/// Draw `rows` shock vectors with covariance `sigma`. The log-normal/GARCH
/// variant uses standardized log-normal innovations scaled by unit-variance
/// GARCH(1,1) volatilities before the Cholesky mixing.
inline Mat draw_shocks(const Mat& sigma, Index rows, std::uint64_t seed, ShockKind kind = ShockKind::Gaussian) {
  const Mat l = cholesky_lower(sigma);
  auto eng = rng::make_engine(seed);
  Mat z = rng::standard_normal(rows, sigma.rows(), eng);
  if (kind == ShockKind::LogNormalGarch) {
    constexpr double s2 = 0.25;  // variance of the underlying normal
    const double mean = std::exp(s2 / 2.0);
    const double sd = std::sqrt((std::exp(s2) - 1.0) * std::exp(s2));
    constexpr double a = 0.10, b = 0.85, w = 1.0 - a - b;
    for (Index j = 0; j < z.cols(); ++j) {
      double h = 1.0, prev = 0.0;
      for (Index i = 0; i < rows; ++i) {
        h = w + a * prev * prev + b * h;
        const double u = (std::exp(std::sqrt(s2) * z(i, j)) - mean) / sd;
        z(i, j) = std::sqrt(h) * u;
        prev = z(i, j);
      }
    }
  }
  return z * l.transpose();
}

/// Y_t = sum_j Phi_j Y_{t-j} + e_t from zero initial values.
inline Mat run_var(const std::vector<Mat>& phis, const Mat& shocks) {
  const Index t = shocks.rows();
  Mat y = Mat::Zero(t, shocks.cols());
  for (Index i = 0; i < t; ++i) {
    Vec v = shocks.row(i).transpose();
    for (size_t j = 0; j < phis.size(); ++j) {
      const Index lag = static_cast<Index>(j) + 1;
      if (i - lag >= 0) v.noalias() += phis[j] * y.row(i - lag).transpose();
    }
    y.row(i) = v.transpose();
  }
  return y;
}

inline Mat run_mai(const MAIParams& prm, const Mat& shocks) {
  const Index t = shocks.rows();
  const Mat wt = prm.omega.transpose();
  Mat y = Mat::Zero(t, shocks.cols());
  Mat f = Mat::Zero(t, prm.omega.cols());
  for (Index i = 0; i < t; ++i) {
    Vec v = shocks.row(i).transpose();
    for (size_t j = 0; j < prm.alphas.size(); ++j) {
      const Index lag = static_cast<Index>(j) + 1;
      if (i - lag >= 0) v.noalias() += prm.alphas[j] * f.row(i - lag).transpose();
    }
    y.row(i) = v.transpose();
    f.row(i) = (wt * v).transpose();
  }
  return y;
}

inline Mat run_vhari(const VHARIParams& prm, const Mat& shocks) {
  const Index t = shocks.rows();
  const Mat wt = prm.omega.transpose();
  const Index q = prm.omega.cols();
  Mat y = Mat::Zero(t, shocks.cols());
  Mat f = Mat::Zero(t, q);
  for (Index i = 0; i < t; ++i) {
    Vec v = shocks.row(i).transpose();
    if (i >= 1) {
      Vec fw = Vec::Zero(q), fm = Vec::Zero(q);
      for (Index k = 1; k <= 22 && i - k >= 0; ++k) {
        if (k <= 5) fw += f.row(i - k).transpose();
        fm += f.row(i - k).transpose();
      }
      v.noalias() += prm.alpha_d * f.row(i - 1).transpose() + prm.alpha_w * (fw / 5.0) + prm.alpha_m * (fm / 22.0);
    }
    y.row(i) = v.transpose();
    f.row(i) = (wt * v).transpose();
  }
  return y;
}

/// Levels path of the CIAAR difference equation with Y_{-1} = 0.
inline Mat run_ciaar(const CIAARParams& prm, const Mat& shocks) {
  const Index t = shocks.rows();
  const Index n = shocks.cols();
  const Mat wt = prm.omega.transpose();
  const bool has_ec = prm.alpha0.cols() > 0;
  const Mat ec = has_ec ? Mat(prm.alpha0 * prm.gamma.transpose()) : Mat(Mat::Zero(n, prm.omega.cols()));
  Mat y = Mat::Zero(t, n);
  Mat dy = Mat::Zero(t, n);
  Vec level = Vec::Zero(n);
  for (Index i = 0; i < t; ++i) {
    Vec d = shocks.row(i).transpose();
    for (size_t j = 0; j < prm.ds.size(); ++j) {
      const Index lag = static_cast<Index>(j) + 1;
      if (i - lag >= 0) d += prm.ds[j].cwiseProduct(dy.row(i - lag).transpose());
    }
    if (has_ec) d.noalias() += ec * (wt * level);
    for (size_t j = 0; j < prm.alphas.size(); ++j) {
      const Index lag = static_cast<Index>(j) + 1;
      if (i - lag >= 0) d.noalias() += prm.alphas[j] * (wt * dy.row(i - lag).transpose());
    }
    dy.row(i) = d.transpose();
    level += d;
    y.row(i) = level.transpose();
  }
  return y;
}

inline Mat run_vecm(const VECMParams& prm, const Mat& shocks) {
  const Index t = shocks.rows();
  const Index n = shocks.cols();
  const bool has_ec = prm.alpha0.cols() > 0;
  const Mat ec = has_ec ? Mat(prm.alpha0 * prm.beta.transpose()) : Mat(Mat::Zero(n, n));
  Mat y = Mat::Zero(t, n);
  Mat dy = Mat::Zero(t, n);
  Vec level = Vec::Zero(n);
  for (Index i = 0; i < t; ++i) {
    Vec d = shocks.row(i).transpose();
    d.noalias() += ec * level;
    for (size_t j = 0; j < prm.pis.size(); ++j) {
      const Index lag = static_cast<Index>(j) + 1;
      if (i - lag >= 0) d.noalias() += prm.pis[j] * dy.row(i - lag).transpose();
    }
    dy.row(i) = d.transpose();
    level += d;
    y.row(i) = level.transpose();
  }
  return y;
}

inline Mat run_drvar(const DRVARParams& prm, const Mat& shocks) {
  MAIParams m{prm.omega, {}, prm.sigma};
  for (const auto& ph : prm.phis) m.alphas.push_back(prm.omega * ph);
  return run_mai(m, shocks);
}

inline Mat run_iaar(const IAARParams& prm, const Mat& shocks) { return run_var(levels_var(prm), shocks); }

/// Spectral radius of the companion matrix after removing the `unit_roots`
/// eigenvalues closest to one.
inline double stable_root_radius(const std::vector<Mat>& phis, Index unit_roots) {
  const Eigen::VectorXcd ev = linalg::companion_eigenvalues(phis);
  std::vector<std::pair<double, double>> dist;  // (|lambda - 1|, |lambda|)
  for (Index i = 0; i < ev.size(); ++i) dist.emplace_back(std::abs(ev(i) - 1.0), std::abs(ev(i)));
  std::sort(dist.begin(), dist.end());
  double radius = 0.0;
  for (size_t i = static_cast<size_t>(unit_roots); i < dist.size(); ++i) radius = std::max(radius, dist[i].second);
  return radius;
}

inline void check_stationary(const std::vector<Mat>& phis, const std::string& who) {
  const double rho = companion_spectral_radius(phis);
  if (!(rho < 1.0))
    throw Nonstationary(who + ": companion spectral radius " + std::to_string(rho) + " is not below 1");
}

/// I(1) requirements for dY_t = alpha0 beta' Y_{t-1} + sum Pi_j dY_{t-j} + e_t:
/// alpha0_perp' (I - sum Pi_j) beta_perp nonsingular and all remaining
/// roots strictly inside the unit circle.
inline void check_i1(const Mat& alpha0, const Mat& beta, const std::vector<Mat>& pis, Index n, const std::string& who) {
  const Index r = beta.cols();
  Mat pibar = Mat::Identity(n, n);
  for (const auto& p : pis) pibar -= p;
  const Mat ap = r > 0 ? linalg::orth_complement(alpha0) : Mat(Mat::Identity(n, n));
  const Mat bp = r > 0 ? linalg::orth_complement(beta) : Mat(Mat::Identity(n, n));
  if (ap.cols() > 0) {
    const Mat core = ap.transpose() * pibar * bp;
    Eigen::JacobiSVD<Mat> svd(core);
    const Vec sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 1e-8 * std::max(1.0, sv(0))))
      throw Nonstationary(who + ": alpha0_perp' Pibar beta_perp is singular (I(2) parameters)");
  }
  const Mat ec = r > 0 ? Mat(alpha0 * beta.transpose()) : Mat(Mat::Zero(n, n));
  const double rho = stable_root_radius(detail::vecm_to_levels(ec, pis, n), n - r);
  if (!(rho < 1.0))
    throw Nonstationary(who + ": stationary roots radius " + std::to_string(rho) + " is not below 1");
}

inline Panel finish(const Mat& path, Index burn) {
  return Panel(path.bottomRows(path.rows() - burn));
}

inline void check_lengths(Index t, Index burn) {
  if (t <= 0 || burn < 0) throw InvalidInput("simulate: T must be positive and burn nonnegative");
}

}  // namespace sim

inline Panel simulate_mai(const MAIParams& prm, Index t, Index burn, std::uint64_t seed,
                          ShockKind kind = ShockKind::Gaussian) {
  sim::check_lengths(t, burn);
  detail::require(prm.omega.rows() == prm.sigma.rows(), "simulate_mai: omega and sigma disagree on n");
  sim::check_stationary(levels_var(prm), "simulate_mai");
  return sim::finish(sim::run_mai(prm, sim::draw_shocks(prm.sigma, t + burn, seed, kind)), burn);
}

inline Panel simulate_iaar(const IAARParams& prm, Index t, Index burn, std::uint64_t seed,
                           ShockKind kind = ShockKind::Gaussian) {
  sim::check_lengths(t, burn);
  sim::check_stationary(levels_var(prm), "simulate_iaar");
  return sim::finish(sim::run_iaar(prm, sim::draw_shocks(prm.sigma, t + burn, seed, kind)), burn);
}

inline Panel simulate_vhari(const VHARIParams& prm, Index t, Index burn, std::uint64_t seed,
                            ShockKind kind = ShockKind::Gaussian) {
  sim::check_lengths(t, burn);
  if (burn < 22) throw InvalidInput("simulate_vhari: burn-in must be at least 22");
  sim::check_stationary(levels_var(prm), "simulate_vhari");
  return sim::finish(sim::run_vhari(prm, sim::draw_shocks(prm.sigma, t + burn, seed, kind)), burn);
}

inline void validate_ciaar(const CIAARParams& prm) {
  const Index n = prm.omega.rows();
  const Index q = prm.omega.cols();
  const Index r = prm.alpha0.cols();
  detail::require(r <= q && q <= n, "CIAAR: need r <= q <= n");
  detail::require(prm.gamma.rows() == q && prm.gamma.cols() == r, "CIAAR: gamma must be q x r");
  if (r > 0) {
    Eigen::FullPivLU<Mat> lu(prm.beta());
    if (lu.rank() < r) throw InvalidInput("CIAAR: beta = omega gamma must have rank r");
  }
  sim::check_i1(prm.alpha0, prm.beta(), detail::ciaar_short_run(prm), n, "simulate_ciaar");
}

inline Panel simulate_ciaar(const CIAARParams& prm, Index t, Index burn, std::uint64_t seed,
                            ShockKind kind = ShockKind::Gaussian) {
  sim::check_lengths(t, burn);
  validate_ciaar(prm);
  return sim::finish(sim::run_ciaar(prm, sim::draw_shocks(prm.sigma, t + burn, seed, kind)), burn);
}

inline Panel simulate_vecm(const VECMParams& prm, Index t, Index burn, std::uint64_t seed,
                           ShockKind kind = ShockKind::Gaussian) {
  sim::check_lengths(t, burn);
  sim::check_i1(prm.alpha0, prm.beta, prm.pis, prm.sigma.rows(), "simulate_vecm");
  return sim::finish(sim::run_vecm(prm, sim::draw_shocks(prm.sigma, t + burn, seed, kind)), burn);
}

inline Panel simulate_drvar(const DRVARParams& prm, Index t, Index burn, std::uint64_t seed,
                            ShockKind kind = ShockKind::Gaussian) {
  sim::check_lengths(t, burn);
  const Index q = prm.omega.cols();
  if (!(prm.omega.transpose() * prm.omega).isApprox(Mat::Identity(q, q), 1e-10))
    throw InvalidInput("simulate_drvar: omega must have orthonormal columns");
  sim::check_stationary(levels_var(prm), "simulate_drvar");
  return sim::finish(sim::run_drvar(prm, sim::draw_shocks(prm.sigma, t + burn, seed, kind)), burn);
}

/// Simulate any parameter set; the class is read off the variant.
inline Panel simulate(const ModelParams& prm, Index t, Index burn, std::uint64_t seed,
                      ShockKind kind = ShockKind::Gaussian) {
  return std::visit(
      [&](const auto& x) -> Panel {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MAIParams>) return simulate_mai(x, t, burn, seed, kind);
        else if constexpr (std::is_same_v<T, VHARIParams>) return simulate_vhari(x, t, std::max<Index>(burn, 22), seed, kind);
        else if constexpr (std::is_same_v<T, IAARParams>) return simulate_iaar(x, t, burn, seed, kind);
        else if constexpr (std::is_same_v<T, CIAARParams>) return simulate_ciaar(x, t, burn, seed, kind);
        else if constexpr (std::is_same_v<T, VECMParams>) return simulate_vecm(x, t, burn, seed, kind);
        else return simulate_drvar(x, t, burn, seed, kind);
      },
      prm);
}

namespace sim {

inline Mat random_gaussian(Index r, Index c, rng::Engine& eng) { return rng::standard_normal(r, c, eng); }

/// Positive definite covariance with unit diagonal-ish scale and moderate
/// cross correlation.
inline Mat random_sigma(Index n, rng::Engine& eng) {
  Mat l = Mat::Identity(n, n);
  const Mat g = random_gaussian(n, n, eng);
  for (Index i = 1; i < n; ++i)
    for (Index j = 0; j < i; ++j) l(i, j) = 0.25 * g(i, j);
  Mat s = l * l.transpose();
  const Vec d = s.diagonal().cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * s * d.asDiagonal();
}

/// Largest c in [0, 1] (bisection) with radius(c) <= target.
template <class F>
double scale_to_radius(F&& radius, double target) {
  if (radius(1.0) <= target) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (radius(mid) <= target ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace sim

/// Random admissible parameters of the given class and orders. Stationary
/// classes get companion radius at most 0.7; I(1) classes get n - r unit
/// roots with the remaining roots inside radius 0.7.
inline ModelParams random_params(ModelClass model, Index n, const Orders& o, std::uint64_t seed) {
  auto eng = rng::make_engine(seed, 0xD6E);
  const Index q = o.q;
  const Index r = o.r;
  constexpr double kTarget = 0.7;
  const Mat omega = linalg::orthonormal_basis(sim::random_gaussian(n, std::max<Index>(q, 1), eng)).leftCols(q);
  const Mat sigma = sim::random_sigma(n, eng);
  auto loads = [&](Index count) {
    std::vector<Mat> a;
    for (Index j = 0; j < count; ++j) a.push_back(sim::random_gaussian(n, q, eng) / std::sqrt(static_cast<double>(n)));
    return a;
  };
  auto diags = [&](Index count) {
    std::vector<Vec> d;
    for (Index j = 0; j < count; ++j) d.push_back(0.4 * sim::random_gaussian(n, 1, eng).col(0).cwiseMax(-1.0).cwiseMin(1.0));
    return d;
  };
  switch (model) {
    case ModelClass::MAI: {
      const auto a0 = loads(o.p);
      auto make = [&](double c) {
        MAIParams m{omega, a0, sigma};
        for (auto& a : m.alphas) a *= c;
        return m;
      };
      const double c = sim::scale_to_radius([&](double x) { return companion_spectral_radius(levels_var(make(x))); }, kTarget);
      return make(c);
    }
    case ModelClass::VHARI: {
      const auto a = loads(3);
      auto make = [&](double c) { return VHARIParams{omega, c * a[0], c * a[1], c * a[2], sigma}; };
      // Roots of a 22-lag polynomial sit near |coef|^(1/22), so the companion
      // radius alone would shrink the loadings to almost nothing. Bound the
      // persistence of the lag sum instead and keep a stationarity margin.
      auto radius = [&](double x) {
        const auto phis = levels_var(make(x));
        Mat total = Mat::Zero(n, n);
        for (const auto& ph : phis) total += ph;
        const double persistence = linalg::companion_eigenvalues({total}).cwiseAbs().maxCoeff();
        return std::max(persistence, companion_spectral_radius(phis) * kTarget / 0.98);
      };
      const double c = sim::scale_to_radius(radius, kTarget);
      return make(c);
    }
    case ModelClass::IAAR: {
      const auto d0 = diags(o.p);
      const auto a0 = loads(o.s);
      auto make = [&](double c) {
        IAARParams m{d0, a0, omega, sigma};
        for (auto& d : m.ds) d *= c;
        for (auto& a : m.alphas) a *= c;
        return m;
      };
      const double c = sim::scale_to_radius([&](double x) { return companion_spectral_radius(levels_var(make(x))); }, kTarget);
      return make(c);
    }
    case ModelClass::CIAAR: {
      const Mat gamma = r > 0 ? Mat(linalg::orthonormal_basis(sim::random_gaussian(q, r, eng))) : Mat(q, 0);
      const Mat beta = omega * gamma;
      const Mat alpha0 = r > 0 ? Mat(-0.4 * beta * (beta.transpose() * beta).inverse()) : Mat(n, 0);
      const auto d0 = diags(std::max(o.p - 1, 0));
      const auto a0 = loads(std::max(o.s - 1, 0));
      auto make = [&](double c) {
        CIAARParams m{d0, alpha0, gamma, omega, a0, sigma};
        for (auto& d : m.ds) d *= c;
        for (auto& a : m.alphas) a *= c;
        return m;
      };
      auto radius = [&](double x) {
        const auto m = make(x);
        return sim::stable_root_radius(levels_var(m), n - r);
      };
      const double c = sim::scale_to_radius(radius, kTarget);
      return make(c);
    }
    case ModelClass::VECM: {
      const Mat beta = linalg::orthonormal_basis(sim::random_gaussian(n, std::max<Index>(r, 1), eng)).leftCols(r);
      const Mat alpha0 = -0.4 * beta;
      std::vector<Mat> p0;
      for (int j = 0; j + 1 < o.p; ++j) p0.push_back(0.3 * sim::random_gaussian(n, n, eng) / std::sqrt(static_cast<double>(n)));
      auto make = [&](double c) {
        VECMParams m{alpha0, beta, p0, sigma};
        for (auto& p : m.pis) p *= c;
        return m;
      };
      const double c = sim::scale_to_radius([&](double x) { return sim::stable_root_radius(levels_var(make(x)), n - r); }, kTarget);
      return make(c);
    }
    case ModelClass::DRVAR: {
      // First lag with singular values in [0.6, 1] so that every factor
      // direction is persistent; further lags are smaller random matrices.
      std::vector<Mat> p0;
      for (int j = 0; j < o.p; ++j) {
        if (j == 0) {
          Eigen::JacobiSVD<Mat> svd(sim::random_gaussian(q, q, eng), Eigen::ComputeFullU | Eigen::ComputeFullV);
          Vec sv(q);
          for (Index k = 0; k < q; ++k) sv(k) = 0.6 + 0.4 * rng::Normal::uniform(eng);
          p0.push_back(svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose());
        } else {
          p0.push_back(0.3 * sim::random_gaussian(q, q, eng) / std::sqrt(static_cast<double>(q)));
        }
      }
      auto make = [&](double c) {
        DRVARParams m{omega, p0, sigma};
        for (auto& p : m.phis) p *= c;
        return m;
      };
      const double c = sim::scale_to_radius([&](double x) { return companion_spectral_radius(levels_var(make(x))); }, kTarget);
      return make(c);
    }
  }
  throw InvalidInput("random_params: unknown model class");
}

}  // namespace ivar

#endif  // IVAR_SIMULATE_HPP
