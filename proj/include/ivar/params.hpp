#ifndef IVAR_PARAMS_HPP
#define IVAR_PARAMS_HPP

#include <string>
#include <variant>
#include <vector>

#include "ivar/linalg.hpp"

namespace ivar {

enum class ModelClass { MAI, VHARI, IAAR, CIAAR, VECM, DRVAR };

inline std::string to_string(ModelClass m) {
  switch (m) {
    case ModelClass::MAI: return "mai";
    case ModelClass::VHARI: return "vhari";
    case ModelClass::IAAR: return "iaar";
    case ModelClass::CIAAR: return "ciaar";
    case ModelClass::VECM: return "vecm";
    case ModelClass::DRVAR: return "drvar";
  }
  return "unknown";
}

inline ModelClass model_class_from_string(const std::string& s) {
  if (s == "mai") return ModelClass::MAI;
  if (s == "vhari") return ModelClass::VHARI;
  if (s == "iaar") return ModelClass::IAAR;
  if (s == "ciaar" || s == "vecim") return ModelClass::CIAAR;
  if (s == "vecm") return ModelClass::VECM;
  if (s == "drvar") return ModelClass::DRVAR;
  throw InvalidInput("unknown model class '" + s + "'");
}

/// Models for the levels of an I(1) system; the rest describe stationary data.
inline bool is_integrated(ModelClass m) { return m == ModelClass::CIAAR || m == ModelClass::VECM; }

/// Y_t = sum_j alpha_j omega' Y_{t-j} + e_t.
struct MAIParams {
  Mat omega;                // n x q
  std::vector<Mat> alphas;  // p of n x q
  Mat sigma;
};

/// Daily/weekly/monthly index loadings on the HAR cascade.
struct VHARIParams {
  Mat omega;
  Mat alpha_d, alpha_w, alpha_m;
  Mat sigma;
};

/// Y_t = sum_{j<=p} diag(ds_j) Y_{t-j} + sum_{j<=s} alpha_j omega' Y_{t-j} + e_t.
struct IAARParams {
  std::vector<Vec> ds;      // p diagonals
  std::vector<Mat> alphas;  // s of n x q
  Mat omega;
  Mat sigma;
};

/// dY_t = sum_{j<p} diag(ds_j) dY_{t-j} + alpha0 gamma' omega' Y_{t-1}
///        + sum_{j<s} alpha_j omega' dY_{t-j} + e_t.
/// Empty `ds` is the VECIM; r = 0 drops the error-correction term.
struct CIAARParams {
  std::vector<Vec> ds;      // p-1 diagonals
  Mat alpha0;               // n x r
  Mat gamma;                // q x r
  Mat omega;                // n x q
  std::vector<Mat> alphas;  // s-1 of n x q
  Mat sigma;

  Mat beta() const { return omega * gamma; }
};

/// dY_t = alpha0 beta' Y_{t-1} + sum_{j<p} Pi_j dY_{t-j} + e_t.
struct VECMParams {
  Mat alpha0;             // n x r
  Mat beta;               // n x r
  std::vector<Mat> pis;   // p-1 of n x n
  Mat sigma;
};

/// Y_t = sum_j omega phi_j omega' Y_{t-j} + e_t with omega'omega = I.
struct DRVARParams {
  Mat omega;
  std::vector<Mat> phis;  // p of q x q
  Mat sigma;
};

using ModelParams = std::variant<MAIParams, VHARIParams, IAARParams, CIAARParams, VECMParams, DRVARParams>;

/// Model orders. For the I(1) classes p and s count levels lags (so the
/// difference equation has p-1 own-lag and s-1 index-lag terms).
struct Orders {
  int p = 1;
  int s = 1;
  int q = 1;
  int r = 0;
  friend bool operator==(const Orders&, const Orders&) = default;
};

namespace count {

/// Free mean parameters; covariance parameters are never counted.
inline long mai(long n, long p, long q) { return n * q * (p + 1) - q * q; }

inline long iaar(long n, long p, long s, long q) { return n * (q * s + q + p) - q * q; }

inline long vhari(long n, long q) { return 4 * n * q - q * q; }

/// IAAR count in differences plus n r loadings and r(q - r) free gamma
/// entries. Without lagged index terms the index space only enters through
/// beta = omega gamma, which then carries r(n - r) free entries.
inline long ciaar(long n, long p, long s, long q, long r) {
  const long own = n * std::max(p - 1, 0L);
  const long idx_lags = std::max(s - 1, 0L);
  if (idx_lags == 0) return own + n * r + r * (n - r);
  return own + n * q * idx_lags + n * q - q * q + n * r + r * (q - r);
}

inline long vecm(long n, long p, long r) { return n * n * std::max(p - 1, 0L) + 2 * n * r - r * r; }

inline long drvar(long n, long p, long q) { return q * (n - q) + p * q * q; }

}  // namespace count

namespace detail {

inline Index n_of(const ModelParams& prm) {
  return std::visit([](const auto& x) { return x.sigma.rows(); }, prm);
}

inline void grow(std::vector<Mat>& phis, size_t lag, Index n) {
  while (phis.size() < lag) phis.push_back(Mat::Zero(n, n));
}

/// Short-run matrices Pi_1..Pi_m of a CIAAR difference equation.
inline std::vector<Mat> ciaar_short_run(const CIAARParams& c) {
  const Index n = c.omega.rows();
  std::vector<Mat> pis;
  for (size_t j = 0; j < c.ds.size(); ++j) {
    grow(pis, j + 1, n);
    pis[j] += c.ds[j].asDiagonal().toDenseMatrix();
  }
  for (size_t j = 0; j < c.alphas.size(); ++j) {
    grow(pis, j + 1, n);
    pis[j] += c.alphas[j] * c.omega.transpose();
  }
  return pis;
}

inline std::vector<Mat> vecm_to_levels(const Mat& ec, const std::vector<Mat>& pis, Index n) {
  const size_t m = pis.size();
  std::vector<Mat> phis(m + 1, Mat::Zero(n, n));
  phis[0] = Mat::Identity(n, n) + ec;
  if (m > 0) phis[0] += pis[0];
  for (size_t j = 1; j < m; ++j) phis[j] = pis[j] - pis[j - 1];
  if (m > 0) phis[m] = -pis[m - 1];
  return phis;
}

}  // namespace detail

/// Levels VAR coefficients Phi_1..Phi_P implied by any parameter set.
inline std::vector<Mat> levels_var(const ModelParams& prm) {
  const Index n = detail::n_of(prm);
  std::vector<Mat> phis;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MAIParams>) {
          for (const auto& a : x.alphas) phis.push_back(a * x.omega.transpose());
        } else if constexpr (std::is_same_v<T, VHARIParams>) {
          phis.assign(22, Mat::Zero(n, n));
          const Mat wt = x.omega.transpose();
          phis[0] += x.alpha_d * wt;
          for (int k = 0; k < 5; ++k) phis[k] += x.alpha_w * wt / 5.0;
          for (int k = 0; k < 22; ++k) phis[k] += x.alpha_m * wt / 22.0;
        } else if constexpr (std::is_same_v<T, IAARParams>) {
          for (size_t j = 0; j < x.ds.size(); ++j) {
            detail::grow(phis, j + 1, n);
            phis[j] += x.ds[j].asDiagonal().toDenseMatrix();
          }
          for (size_t j = 0; j < x.alphas.size(); ++j) {
            detail::grow(phis, j + 1, n);
            phis[j] += x.alphas[j] * x.omega.transpose();
          }
        } else if constexpr (std::is_same_v<T, CIAARParams>) {
          const Mat ec = x.alpha0.cols() > 0 ? Mat(x.alpha0 * x.gamma.transpose() * x.omega.transpose())
                                             : Mat(Mat::Zero(n, n));
          phis = detail::vecm_to_levels(ec, detail::ciaar_short_run(x), n);
        } else if constexpr (std::is_same_v<T, VECMParams>) {
          const Mat ec = x.alpha0.cols() > 0 ? Mat(x.alpha0 * x.beta.transpose()) : Mat(Mat::Zero(n, n));
          phis = detail::vecm_to_levels(ec, x.pis, n);
        } else {
          for (const auto& ph : x.phis) phis.push_back(x.omega * ph * x.omega.transpose());
        }
      },
      prm);
  if (phis.empty()) phis.push_back(Mat::Zero(n, n));
  return phis;
}

/// Index weights of an index-structured parameter set (empty for VECM).
inline Mat index_weights(const ModelParams& prm) {
  return std::visit(
      [](const auto& x) -> Mat {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, VECMParams>) {
          return Mat(x.sigma.rows(), 0);
        } else {
          return x.omega;
        }
      },
      prm);
}

inline const Mat& sigma_of(const ModelParams& prm) {
  return std::visit([](const auto& x) -> const Mat& { return x.sigma; }, prm);
}

}  // namespace ivar

#endif  // IVAR_PARAMS_HPP
