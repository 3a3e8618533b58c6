#ifndef IVAR_FIT_RESULT_HPP
#define IVAR_FIT_RESULT_HPP

#include <optional>
#include <string>
#include <vector>

#include "ivar/params.hpp"

namespace ivar {

/// Starting values for the index weights, cointegration combination and
/// own-lag diagonals; anything left empty comes from the default initializer.
struct StartValues {
  Mat omega;
  Mat gamma;
  std::vector<Vec> ds;
};

struct FitOptions {
  int max_iter = 500;
  double tol = 1e-8;    // relative log-likelihood change
  double ridge = 0.0;   // l2 penalty added to both steps' normal equations
  bool normalize = true;
  /// First panel row used as a regression target; 0 means the model's own
  /// minimum. Grid searches set it so every candidate shares one sample.
  Index sample_start = 0;
  std::optional<StartValues> start;

  void validate() const {
    if (max_iter < 1) throw InvalidInput("FitOptions: max_iter must be at least 1");
    if (!(tol > 0.0)) throw InvalidInput("FitOptions: tol must be positive");
    if (ridge < 0.0) throw InvalidInput("FitOptions: ridge must be nonnegative");
    if (sample_start < 0) throw InvalidInput("FitOptions: sample_start must be nonnegative");
  }
};

struct FitResult {
  ModelClass model = ModelClass::MAI;
  Orders orders;
  ModelParams params;
  std::vector<double> loglik_trace;
  Mat residuals;          // t_eff x n, aligned with panel rows [first_row, first_row + t_eff)
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  Index first_row = 0;
  Index t_eff = 0;
  long n_params = 0;
  bool ridge_repair = false;  // Sigma^{-1/2} needed eigenvalue clipping
  bool gls_fallback = false;  // DRVAR GLS reverted to OLS
  Vec eigenvalues;            // Johansen canonical correlations or Lam-matrix spectrum
  std::vector<std::string> warnings;

  Index n() const { return sigma_of(params).rows(); }
  const Mat& sigma() const { return sigma_of(params); }
  Mat omega() const { return index_weights(params); }
};

}  // namespace ivar

#endif  // IVAR_FIT_RESULT_HPP
