#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace ivar;
using ivar::testing::ciaar_state;
using ivar::testing::random_matrix;
using ivar::testing::random_spd;

namespace {

struct Case {
  Panel y;
  CIAARParams prm;
  sa::Design design;
};

/// Random CIAAR parameters (not fitted) on a simulated panel; orders cover
/// every combination of own lags, index lags and error correction.
Case random_case(std::uint64_t seed) {
  const Index n = 4;
  const int p = static_cast<int>(seed % 3) + 1;       // 1..3
  const int s = static_cast<int>((seed / 3) % p) + 1;  // 1..p
  const int q = static_cast<int>(seed % 2) + 1;
  const int r = static_cast<int>(seed % (q + 1));
  const auto truth = std::get<CIAARParams>(random_params(ModelClass::CIAAR, n, Orders{p, s, q, r}, seed));
  Panel y = simulate_ciaar(truth, 120, 50, seed + 9);
  CIAARParams prm = truth;
  for (auto& d : prm.ds) d += 0.1 * random_matrix(n, 1, seed + 1).col(0);
  for (auto& a : prm.alphas) a += 0.2 * random_matrix(n, q, seed + 2);
  prm.omega = random_matrix(n, q, seed + 3);
  if (r > 0) {
    prm.alpha0 = random_matrix(n, r, seed + 4);
    prm.gamma = random_matrix(q, r, seed + 5);
  }
  prm.sigma = random_spd(n, seed + 6);
  auto d = design::ciaar(y, p, s, r, 0);
  return {std::move(y), std::move(prm), std::move(d)};
}

}  // namespace

TEST(Step2Rewrite, StackedResidualsEqualDirectResiduals) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto c = random_case(seed);
    const sa::State st = ciaar_state(c.design, c.prm);
    const auto isq = linalg::sym_inv_sqrt(c.prm.sigma);
    const auto reg = sa::step2_regression(c.design, st, isq.inv_sqrt);
    const Vec u = reg.y - reg.x * sa::pack_theta(c.design, st);
    const Mat direct = ciaar_residuals(c.y, c.prm, c.design.first_row);
    const Mat whitened = direct * isq.inv_sqrt;  // Sigma^{-1/2} is symmetric
    const Mat stacked = linalg::unvec(u, c.design.n(), c.design.t()).transpose();
    worst = std::max(worst, (stacked - whitened).cwiseAbs().maxCoeff() / std::max(1.0, whitened.cwiseAbs().maxCoeff()));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Step2Rewrite, MomentNormalEquationsMatchStackedRegression) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto c = random_case(seed);
    const sa::State st = ciaar_state(c.design, c.prm);
    const sa::Moments m(c.design);
    const auto isq = linalg::sym_inv_sqrt(c.prm.sigma);
    const auto ne = sa::step2_normal_equations(c.design, m, st, isq.inv);
    const auto reg = sa::step2_regression(c.design, st, isq.inv_sqrt);
    const double t = static_cast<double>(c.design.t());
    const Mat xtx = reg.x.transpose() * reg.x / t;
    const Vec xty = reg.x.transpose() * reg.y / t;
    EXPECT_LT((ne.lhs - xtx).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, xtx.cwiseAbs().maxCoeff())) << seed;
    EXPECT_LT((ne.rhs - xty).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, xty.cwiseAbs().maxCoeff())) << seed;
  }
}

TEST(Step2Rewrite, SelectionMatrixPicksDiagonals) {
  const Vec d = random_matrix(5, 1, 3).col(0);
  const Mat m = linalg::diag_selection(5);
  EXPECT_LT((m * d - linalg::vec(Mat(d.asDiagonal()))).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((m.transpose() * linalg::vec(random_spd(5, 4)) - random_spd(5, 4).diagonal()).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(Engine, ResidualOperatorMatchesDirectEvaluation) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto c = random_case(seed);
    const sa::State st = ciaar_state(c.design, c.prm);
    const sa::Moments m(c.design);
    const Mat e = sa::residuals_at(c.design, m, st);
    const Mat direct = ciaar_residuals(c.y, c.prm, c.design.first_row);
    EXPECT_LT((e - direct).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, direct.cwiseAbs().maxCoeff())) << seed;
  }
}

TEST(Engine, NormalizationLeavesFittedValuesUnchanged) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto c = random_case(seed);
    sa::State st = ciaar_state(c.design, c.prm);
    const sa::Moments m(c.design);
    const Mat before = sa::residuals_at(c.design, m, st);
    sa::normalize_weights(c.design, st);
    const Mat after = sa::residuals_at(c.design, m, st);
    const Index q = st.omega.cols();
    EXPECT_LT((st.omega.transpose() * st.omega - Mat::Identity(q, q)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((before - after).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, before.cwiseAbs().maxCoeff())) << seed;
  }
}

TEST(Engine, EachStepNeverLowersLikelihood) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto c = random_case(seed);
    sa::State st = ciaar_state(c.design, c.prm);
    const sa::Moments m(c.design);
    const Index t = c.design.t();
    sa::step_loadings(c.design, m, st, 0.0);
    double ll = linalg::gaussian_loglik(st.sigma, t);
    for (int it = 0; it < 5; ++it) {
      sa::step_weights(c.design, m, st, 0.0);
      const double after_weights = linalg::gaussian_loglik(sa::sigma_at(c.design, m, st), t);
      EXPECT_GE(after_weights, ll - 1e-8) << seed;
      sa::normalize_weights(c.design, st);
      if (c.design.rank > 0 && c.design.rank < st.omega.cols()) sa::step_cointegration(c.design, m, st);
      sa::step_loadings(c.design, m, st, 0.0);
      const double next = linalg::gaussian_loglik(st.sigma, t);
      EXPECT_GE(next, after_weights - 1e-8) << seed;
      ll = next;
    }
  }
}

TEST(Engine, MomentAndDataVersionsAgree) {
  const auto truth = std::get<CIAARParams>(random_params(ModelClass::CIAAR, 5, Orders{0, 2, 2, 1}, 3));
  const Panel y = simulate_ciaar(truth, 600, 100, 4);
  const FitResult a = fit_ciaar(y, 0, 2, 2, 1);
  const FitResult b = fit_vecim(y, 2, 2, 1);
  EXPECT_NEAR(a.loglik, b.loglik, 1e-6);
  EXPECT_LT(linalg::subspace_distance(a.omega(), b.omega()), 1e-5);
}
