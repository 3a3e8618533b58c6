#ifndef IVAR_FORECAST_HPP
#define IVAR_FORECAST_HPP

#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "ivar/detail/parallel.hpp"
#include "ivar/estimators.hpp"

namespace ivar {

struct ForecastPath {
  Index horizon = 0;
  Mat values;        // horizon x n
  Index origin = 0;  // row of the last observation used, in the caller's time index
};

/// Iterated one-step forecasts from the levels VAR implied by the fit. For
/// I(1) fits this cumulates the difference forecasts onto the last level;
/// for VHARI the 22-lag form rebuilds the weekly and monthly cascades.
/// `offset` is the time index of the panel's first row.
inline ForecastPath forecast(const ModelParams& prm, const Panel& y, Index h, Index offset = 0) {
  if (h < 1) throw InvalidInput("forecast: horizon must be at least 1");
  const auto phis = levels_var(prm);
  const Index lags = static_cast<Index>(phis.size());
  const Index n = y.cols();
  detail::require(n == detail::n_of(prm), "forecast: panel width does not match the fit");
  if (y.rows() < lags)
    throw InvalidInput("forecast: need " + std::to_string(lags) + " observations of history, got " +
                       std::to_string(y.rows()));
  Mat path(lags + h, n);
  path.topRows(lags) = y.values.bottomRows(lags);
  for (Index i = lags; i < lags + h; ++i) {
    Vec v = Vec::Zero(n);
    for (Index k = 1; k <= lags; ++k) v.noalias() += phis[static_cast<size_t>(k - 1)] * path.row(i - k).transpose();
    path.row(i) = v.transpose();
  }
  ForecastPath out;
  out.horizon = h;
  out.values = path.bottomRows(h);
  out.origin = offset + y.rows() - 1;
  if (!out.values.allFinite()) throw NumericalError("forecast: non-finite forecast values");
  return out;
}

inline ForecastPath forecast(const FitResult& fit, const Panel& y, Index h, Index offset = 0) {
  return forecast(fit.params, y, h, offset);
}

struct MsfeTable {
  Mat msfe;                   // horizon x n
  std::vector<Index> counts;  // origins evaluated per horizon
};

/// Mean squared forecast error per horizon and series over every forecast
/// whose target row (origin + step) falls inside `actuals`.
inline MsfeTable evaluate(const std::vector<ForecastPath>& paths, const Panel& actuals) {
  detail::require(!paths.empty(), "evaluate: no forecasts");
  Index h = 0;
  for (const auto& p : paths) h = std::max(h, p.horizon);
  const Index n = actuals.cols();
  MsfeTable t;
  t.msfe = Mat::Zero(h, n);
  t.counts.assign(static_cast<size_t>(h), 0);
  for (const auto& p : paths) {
    detail::require(p.values.cols() == n, "evaluate: forecast width does not match the actuals");
    for (Index k = 1; k <= p.horizon; ++k) {
      const Index row = p.origin + k;
      if (row < 0 || row >= actuals.rows()) continue;
      t.msfe.row(k - 1) += (p.values.row(k - 1) - actuals.values.row(row)).array().square().matrix();
      ++t.counts[static_cast<size_t>(k - 1)];
    }
  }
  Index total = 0;
  for (Index k = 0; k < h; ++k) {
    total += t.counts[static_cast<size_t>(k)];
    if (t.counts[static_cast<size_t>(k)] > 0) t.msfe.row(k) /= static_cast<double>(t.counts[static_cast<size_t>(k)]);
    else t.msfe.row(k).setConstant(std::numeric_limits<double>::quiet_NaN());
  }
  if (total == 0) throw InvalidInput("evaluate: no forecast target falls inside the actuals");
  return t;
}

struct RollingForecasts {
  std::vector<ForecastPath> paths;
  bool refit = true;  // false: parameters estimated once on the first window
};

/// Forecasts from every origin in [first_origin, last_origin] (panel rows of
/// the last observation used), each based on the `window` rows ending there.
inline RollingForecasts rolling_forecasts(const Panel& y, ModelClass cls, const Orders& o, Index window,
                                          Index first_origin, Index last_origin, Index h, bool refit = true,
                                          const FitOptions& opts = {}, unsigned threads = 0) {
  detail::require(window >= 2 && first_origin + 1 >= window && last_origin < y.rows() && first_origin <= last_origin,
                  "rolling_forecasts: origins and window must lie inside the panel");
  auto slice = [&](Index origin) { return Panel(y.values.middleRows(origin - window + 1, window), y.names); };
  RollingForecasts out;
  out.refit = refit;
  const size_t count = static_cast<size_t>(last_origin - first_origin + 1);
  out.paths.resize(count);
  ModelParams fixed;
  if (!refit) fixed = fit_model(slice(first_origin), cls, o, opts).params;
  detail::parallel_for(
      count,
      [&](size_t i) {
        const Index origin = first_origin + static_cast<Index>(i);
        const Panel w = slice(origin);
        const Index offset = origin - window + 1;
        out.paths[i] = refit ? forecast(fit_model(w, cls, o, opts), w, h, offset) : forecast(fixed, w, h, offset);
      },
      threads);
  return out;
}

inline void write_forecast(std::ostream& os, const ForecastPath& f, const std::vector<std::string>& names) {
  os << "origin,step";
  for (const auto& nm : names) os << ',' << nm;
  os << '\n';
  for (Index k = 0; k < f.horizon; ++k) {
    os << f.origin << ',' << (k + 1);
    for (Index j = 0; j < f.values.cols(); ++j) os << ',' << io::format_double(f.values(k, j));
    os << '\n';
  }
}

}  // namespace ivar

#endif  // IVAR_FORECAST_HPP
