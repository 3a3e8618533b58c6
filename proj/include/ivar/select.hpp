#ifndef IVAR_SELECT_HPP
#define IVAR_SELECT_HPP

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "ivar/detail/parallel.hpp"
#include "ivar/estimators.hpp"

namespace ivar {

enum class Criterion { AIC, BIC, HQ };

inline std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::AIC: return "aic";
    case Criterion::BIC: return "bic";
    case Criterion::HQ: return "hq";
  }
  return "unknown";
}

inline Criterion criterion_from_string(const std::string& s) {
  if (s == "aic") return Criterion::AIC;
  if (s == "bic") return Criterion::BIC;
  if (s == "hq") return Criterion::HQ;
  throw InvalidInput("unknown criterion '" + s + "' (expected aic, bic or hq)");
}

/// -2 loglik plus the penalty; k counts mean parameters only.
inline double info_criterion(double loglik, long k, Index t_eff, Criterion kind) {
  if (t_eff <= k) throw InvalidInput("info_criterion: need T_eff > n_params");
  const double t = static_cast<double>(t_eff);
  switch (kind) {
    case Criterion::AIC: return -2.0 * loglik + 2.0 * static_cast<double>(k);
    case Criterion::BIC: return -2.0 * loglik + static_cast<double>(k) * std::log(t);
    case Criterion::HQ:
      if (t_eff <= 2) throw InvalidInput("info_criterion: hq needs T_eff > 2");
      return -2.0 * loglik + 2.0 * static_cast<double>(k) * std::log(std::log(t));
  }
  return 0.0;
}

struct Candidate {
  ModelClass model = ModelClass::CIAAR;
  Orders orders;
};

/// Inclusive bounds; s and r are further capped at p and q.
struct GridBounds {
  int p_min = 1, p_max = 3;
  int s_min = 1, s_max = 3;
  int q_min = 1, q_max = 3;
  int r_min = 0, r_max = 3;
};

/// All admissible candidates of one class inside the bounds.
inline std::vector<Candidate> grid_candidates(ModelClass cls, const GridBounds& b, Index n) {
  std::vector<Candidate> out;
  const int q_hi = std::min<int>(b.q_max, static_cast<int>(n) - 1);
  for (int p = b.p_min; p <= b.p_max; ++p) {
    int s_lo = std::max(b.s_min, 1), s_hi = (p == 0 ? b.s_max : std::min(p, b.s_max));
    int r_lo = b.r_min, r_hi_cap = b.r_max;
    if (cls == ModelClass::MAI) s_lo = s_hi = p;
    if (cls != ModelClass::CIAAR) r_lo = r_hi_cap = 0;
    if (cls == ModelClass::MAI && p < 1) continue;
    if (cls == ModelClass::IAAR && p < 1) continue;
    for (int s = s_lo; s <= s_hi; ++s)
      for (int q = std::max(b.q_min, 1); q <= q_hi; ++q)
        for (int r = r_lo; r <= std::min(r_hi_cap, q); ++r) out.push_back({cls, {p, s, q, r}});
  }
  return out;
}

struct ICRow {
  Candidate candidate;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  long n_params = 0;
  Index t_eff = 0;
  double aic = std::numeric_limits<double>::quiet_NaN();
  double bic = aic, hq = aic;
  bool converged = false;
  bool failed = false;
  std::string error;

  double value(Criterion c) const { return c == Criterion::AIC ? aic : (c == Criterion::BIC ? bic : hq); }
};

struct ICTable {
  std::vector<ICRow> rows;
  Index sample_start = 0;
  long best_aic = -1, best_bic = -1, best_hq = -1;

  long best(Criterion c) const { return c == Criterion::AIC ? best_aic : (c == Criterion::BIC ? best_bic : best_hq); }
};

namespace detail {

/// Smallest criterion value; ties go to fewer parameters, then smaller (p, s, q, r).
inline long argmin(const std::vector<ICRow>& rows, Criterion c) {
  long best = -1;
  auto key = [&](const ICRow& r) {
    const auto& o = r.candidate.orders;
    return std::make_tuple(r.value(c), r.n_params, o.p, o.s, o.q, o.r);
  };
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].failed) continue;
    if (best < 0 || key(rows[i]) < key(rows[static_cast<size_t>(best)])) best = static_cast<long>(i);
  }
  return best;
}

}  // namespace detail

/// Fits every candidate on a common sample (targets start after the largest
/// lag in the grid) and scores them.
inline ICTable grid_search(const Panel& y, const std::vector<Candidate>& cands, FitOptions opts = {},
                           unsigned threads = 0) {
  detail::require(!cands.empty(), "grid_search: empty grid");
  ICTable tab;
  Index start = opts.sample_start;
  for (const auto& c : cands) start = std::max(start, min_sample_start(c.model, c.orders));
  opts.sample_start = start;
  tab.sample_start = start;
  tab.rows.resize(cands.size());
  detail::parallel_for(
      cands.size(),
      [&](size_t i) {
        ICRow& row = tab.rows[i];
        row.candidate = cands[i];
        try {
          const auto fr = fit_model(y, cands[i].model, cands[i].orders, opts);
          row.loglik = fr.loglik;
          row.n_params = fr.n_params;
          row.t_eff = fr.t_eff;
          row.converged = fr.converged;
          row.aic = info_criterion(fr.loglik, fr.n_params, fr.t_eff, Criterion::AIC);
          row.bic = info_criterion(fr.loglik, fr.n_params, fr.t_eff, Criterion::BIC);
          row.hq = info_criterion(fr.loglik, fr.n_params, fr.t_eff, Criterion::HQ);
          if (!std::isfinite(row.loglik)) throw NumericalError("non-finite log-likelihood");
        } catch (const std::exception& e) {
          row.failed = true;
          row.error = e.what();
        }
      },
      threads);
  tab.best_aic = detail::argmin(tab.rows, Criterion::AIC);
  tab.best_bic = detail::argmin(tab.rows, Criterion::BIC);
  tab.best_hq = detail::argmin(tab.rows, Criterion::HQ);
  if (tab.best_hq < 0) throw NumericalError("grid_search: every candidate fit failed (first error: " + tab.rows[0].error + ")");
  return tab;
}

inline ICTable grid_search(const Panel& y, ModelClass cls, const GridBounds& b, const FitOptions& opts = {},
                           unsigned threads = 0) {
  return grid_search(y, grid_candidates(cls, b, y.cols()), opts, threads);
}

/// One row per candidate; `best` lists the criteria the row minimizes.
/// Parameter counts exclude the n(n+1)/2 covariance entries.
inline void write_ic_table(std::ostream& os, const ICTable& tab) {
  using io::format_double;
  os << "model,p,s,q,r,loglik,n_params,t_eff,aic,bic,hq,converged,failed,best\n";
  for (size_t i = 0; i < tab.rows.size(); ++i) {
    const auto& r = tab.rows[i];
    const auto& o = r.candidate.orders;
    std::string best;
    for (Criterion c : {Criterion::AIC, Criterion::BIC, Criterion::HQ})
      if (tab.best(c) == static_cast<long>(i)) best += (best.empty() ? "" : "|") + to_string(c);
    os << to_string(r.candidate.model) << ',' << o.p << ',' << o.s << ',' << o.q << ',' << o.r << ','
       << (r.failed ? "" : format_double(r.loglik)) << ',' << r.n_params << ',' << r.t_eff << ','
       << (r.failed ? "" : format_double(r.aic)) << ',' << (r.failed ? "" : format_double(r.bic)) << ','
       << (r.failed ? "" : format_double(r.hq)) << ',' << (r.converged ? 1 : 0) << ',' << (r.failed ? 1 : 0) << ','
       << best << '\n';
  }
}

}  // namespace ivar

#endif  // IVAR_SELECT_HPP
