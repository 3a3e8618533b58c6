#ifndef IVAR_TOOLS_CLI_HPP
#define IVAR_TOOLS_CLI_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ivar/ivar.hpp"

namespace ivar::cli {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::string command;
  std::string input;
  std::string output = "out";
  std::string model = "ciaar";
  int p = 1, s = 1, q = 1, r = 0;
  int p0 = 0;                       // DRVAR moment lags (0: use p)
  std::string drvar_method = "ols";
  std::string criterion = "hq";
  int p_min = 1, p_max = 3, s_min = 1, s_max = 3, q_min = 1, q_max = 3, r_min = 0, r_max = 3;
  int horizon = 10;
  std::uint64_t seed = 1;
  int n = 6;
  int t = 1000;
  int burn = static_cast<int>(kDefaultBurn);
  std::string shocks = "gaussian";
  int reps = 100;
  int threads = 0;
  int max_iter = 500;
  double tol = 1e-8;
  double ridge = 0.0;
  bool demean = true;  // subtract sample means before fitting stationary classes

  Orders orders() const { return {p, s, q, r}; }

  FitOptions fit_options() const {
    FitOptions o;
    o.max_iter = max_iter;
    o.tol = tol;
    o.ridge = ridge;
    return o;
  }

  /// Same admissibility rules as the library; names the violated rule.
  void validate() const {
    static const std::vector<std::string> cmds{"simulate", "fit", "select", "decompose", "forecast", "montecarlo"};
    if (std::find(cmds.begin(), cmds.end(), command) == cmds.end())
      throw InvalidInput("unknown subcommand '" + command + "'");
    const ModelClass cls = model_class_from_string(model);
    (void)shock_kind_from_string(shocks);
    (void)criterion_from_string(criterion);
    if (drvar_method != "ols" && drvar_method != "gls") throw InvalidInput("drvar_method must be ols or gls");
    if (p < 0 || s < 0 || q < 0 || r < 0) throw InvalidInput("orders must be nonnegative");
    if (r > q) throw InvalidInput("rule violated: r <= q");
    if (cls == ModelClass::IAAR && s > p) throw InvalidInput("rule violated: s <= p");
    if (cls == ModelClass::CIAAR && p > 0 && s > p) throw InvalidInput("rule violated: s <= p (or p = 0)");
    if (command == "simulate" || command == "montecarlo") {
      if (q >= n && cls != ModelClass::MAI && cls != ModelClass::VHARI && cls != ModelClass::VECM)
        throw InvalidInput("rule violated: q < n");
      if (n < 1 || t < 1 || burn < 0) throw InvalidInput("n, t must be positive and burn nonnegative");
    }
    if (command == "montecarlo" && reps < 1) throw InvalidInput("reps must be at least 1");
    if (command != "simulate" && command != "montecarlo" && input.empty())
      throw InvalidInput("subcommand '" + command + "' needs an input CSV (input=...)");
    if (horizon < 1) throw InvalidInput("horizon must be at least 1");
    if (threads < 0) throw InvalidInput("threads must be nonnegative");
    fit_options().validate();
  }

  /// key=value lines readable back through --config.
  std::string manifest() const {
    std::ostringstream os;
    os << "# ivar " << kVersion << ", Eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
       << EIGEN_MINOR_VERSION << '\n';
    os << "# parameter counts exclude the n(n+1)/2 covariance entries\n";
    os << "command=" << command << "\ninput=" << input << "\noutput=" << output << "\nmodel=" << model
       << "\np=" << p << "\ns=" << s << "\nq=" << q << "\nr=" << r << "\np0=" << p0
       << "\ndrvar_method=" << drvar_method << "\ncriterion=" << criterion << "\np_min=" << p_min
       << "\np_max=" << p_max << "\ns_min=" << s_min << "\ns_max=" << s_max << "\nq_min=" << q_min
       << "\nq_max=" << q_max << "\nr_min=" << r_min << "\nr_max=" << r_max << "\nhorizon=" << horizon
       << "\nseed=" << seed << "\nn=" << n << "\nt=" << t << "\nburn=" << burn << "\nshocks=" << shocks
       << "\nreps=" << reps << "\nthreads=" << threads << "\nmax_iter=" << max_iter
       << "\ntol=" << io::format_double(tol) << "\nridge=" << io::format_double(ridge) << "\ndemean=" << (demean ? "true" : "false")
       << '\n';
    return os.str();
  }
};

namespace detail {

using nlohmann::json;

inline json to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <class T>
json to_json(const std::vector<T>& xs) {
  json a = json::array();
  for (const auto& x : xs) a.push_back(to_json(x));
  return a;
}

inline json params_json(const ModelParams& prm) {
  json j;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MAIParams>) {
          j["omega"] = to_json(x.omega);
          j["alphas"] = to_json(x.alphas);
        } else if constexpr (std::is_same_v<T, VHARIParams>) {
          j["omega"] = to_json(x.omega);
          j["alpha_d"] = to_json(x.alpha_d);
          j["alpha_w"] = to_json(x.alpha_w);
          j["alpha_m"] = to_json(x.alpha_m);
        } else if constexpr (std::is_same_v<T, IAARParams>) {
          j["ds"] = to_json(x.ds);
          j["alphas"] = to_json(x.alphas);
          j["omega"] = to_json(x.omega);
        } else if constexpr (std::is_same_v<T, CIAARParams>) {
          j["ds"] = to_json(x.ds);
          j["alpha0"] = to_json(x.alpha0);
          j["gamma"] = to_json(x.gamma);
          j["omega"] = to_json(x.omega);
          j["alphas"] = to_json(x.alphas);
        } else if constexpr (std::is_same_v<T, VECMParams>) {
          j["alpha0"] = to_json(x.alpha0);
          j["beta"] = to_json(x.beta);
          j["pis"] = to_json(x.pis);
        } else {
          j["omega"] = to_json(x.omega);
          j["phis"] = to_json(x.phis);
        }
        j["sigma"] = to_json(x.sigma);
      },
      prm);
  return j;
}

inline json fit_json(const FitResult& f) {
  json j;
  j["model"] = to_string(f.model);
  j["orders"] = {{"p", f.orders.p}, {"s", f.orders.s}, {"q", f.orders.q}, {"r", f.orders.r}};
  j["loglik"] = f.loglik;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["n_params"] = f.n_params;
  j["first_row"] = f.first_row;
  j["t_eff"] = f.t_eff;
  j["ridge_repair"] = f.ridge_repair;
  j["gls_fallback"] = f.gls_fallback;
  j["warnings"] = f.warnings;
  if (f.eigenvalues.size() > 0) j["eigenvalues"] = to_json(f.eigenvalues);
  j["params"] = params_json(f.params);
  return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + p.string());
  out << text;
}

inline std::vector<std::string> prefixed(const std::string& pre, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& nm : names) out.push_back(pre + nm);
  return out;
}

inline std::vector<std::string> numbered(const std::string& pre, Index k) {
  std::vector<std::string> out;
  for (Index i = 1; i <= k; ++i) out.push_back(pre + std::to_string(i));
  return out;
}

/// Horizontal concatenation of equally tall blocks with their headers.
struct Columns {
  std::vector<Mat> blocks;
  std::vector<std::string> header;
  void add(const Mat& m, const std::vector<std::string>& names) {
    if (m.cols() == 0) return;
    blocks.push_back(m);
    header.insert(header.end(), names.begin(), names.end());
  }
  Mat matrix() const {
    Index cols = 0;
    for (const auto& b : blocks) cols += b.cols();
    Mat out(blocks.front().rows(), cols);
    Index c = 0;
    for (const auto& b : blocks) {
      out.middleCols(c, b.cols()) = b;
      c += b.cols();
    }
    return out;
  }
};

inline FitResult fit_from_config(const Panel& y, const RunConfig& cfg) {
  const ModelClass cls = model_class_from_string(cfg.model);
  if (cls == ModelClass::DRVAR)
    return fit_drvar(y, cfg.p, cfg.q, cfg.p0, cfg.drvar_method == "gls" ? DrvarMethod::GLS : DrvarMethod::OLS);
  return fit_model(y, cls, cfg.orders(), cfg.fit_options());
}

inline void write_fit(const std::filesystem::path& dir, const FitResult& f, const Vec& means) {
  json j = fit_json(f);
  j["means"] = to_json(means);  // zeros when the data were not demeaned
  write_text(dir / "params.json", j.dump(2) + "\n");
  std::ostringstream tr;
  tr << "iteration,loglik\n";
  for (size_t i = 0; i < f.loglik_trace.size(); ++i) tr << i << ',' << io::format_double(f.loglik_trace[i]) << '\n';
  write_text(dir / "loglik_trace.csv", tr.str());
}

inline void write_components(const std::filesystem::path& dir, const FitResult& f, const Panel& y) {
  Columns cols;
  Index startup = 0;
  if (f.model == ModelClass::DRVAR) {
    const auto d = drvar_decompose(f, y);
    cols.add(d.dynamic, prefixed("dynamic_", y.names));
    cols.add(d.static_part, prefixed("static_", y.names));
    cols.add(d.nu, prefixed("nu_", y.names));
    cols.add(d.eps_chi, numbered("eps_chi_", d.eps_chi.cols()));
  } else {
    const auto cu = f.model == ModelClass::CIAAR && f.orders.r > 0 ? perm_trans(f, y) : common_uncommon(f, y);
    startup = cu.startup;
    cols.add(cu.chi, prefixed("chi_", y.names));
    cols.add(cu.iota, prefixed("iota_", y.names));
    if (cu.integrated && f.orders.r > 0) {
      if (!cu.pi_degenerate) cols.add(cu.pi, prefixed("pi_", y.names));
      if (!cu.tau_degenerate) cols.add(cu.tau, prefixed("tau_", y.names));
    }
    cols.add(cu.eps_chi, numbered("eps_chi_", cu.eps_chi.cols()));
    cols.add(cu.eps_iota, numbered("eps_iota_", cu.eps_iota.cols()));
    cols.add(cu.eps_pi, numbered("eps_pi_", cu.eps_pi.cols()));
    cols.add(cu.eps_tau, numbered("eps_tau_", cu.eps_tau.cols()));
  }
  // in_span = 0 marks leading rows where pre-sample values still matter
  const Mat m = cols.matrix();
  std::ostringstream os;
  os << "row,in_span";
  for (const auto& h : cols.header) os << ',' << h;
  os << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    os << f.first_row + i << ',' << (i >= startup ? 1 : 0);
    for (Index j = 0; j < m.cols(); ++j) os << ',' << io::format_double(m(i, j));
    os << '\n';
  }
  write_text(dir / "components.csv", os.str());
}

}  // namespace detail

/// Executes one subcommand, writing report files into cfg.output. Returns 0
/// on success; on failure prints one diagnostic line to `err` and returns 1.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  namespace fs = std::filesystem;
  try {
    cfg.validate();
    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    const ModelClass cls = model_class_from_string(cfg.model);
    const unsigned threads = static_cast<unsigned>(cfg.threads);

    if (cfg.command == "simulate") {
      const auto prm = random_params(cls, cfg.n, cfg.orders(), rng::derive_seed(cfg.seed, 1));
      const Panel y = simulate(prm, cfg.t, cfg.burn, rng::derive_seed(cfg.seed, 2), shock_kind_from_string(cfg.shocks));
      io::write_csv((dir / "data.csv").string(), y);
      nlohmann::json j;
      j["model"] = to_string(cls);
      j["orders"] = {{"p", cfg.p}, {"s", cfg.s}, {"q", cfg.q}, {"r", cfg.r}};
      j["params"] = detail::params_json(prm);
      detail::write_text(dir / "params.json", j.dump(2) + "\n");
      out << "simulated " << y.rows() << " x " << y.cols() << " panel -> " << (dir / "data.csv").string() << '\n';
    } else if (cfg.command == "montecarlo") {
      const auto truth = random_params(cls, cfg.n, cfg.orders(), rng::derive_seed(cfg.seed, 1));
      const Mat w_true = index_weights(truth);
      struct Rep {
        double loglik = 0, dist = -1;
        int iterations = 0;
        bool converged = false, failed = false;
      };
      std::vector<Rep> reps(static_cast<size_t>(cfg.reps));
      ivar::detail::parallel_for(
          reps.size(),
          [&](size_t i) {
            Rep& rep = reps[i];
            try {
              const Panel y = simulate(truth, cfg.t, cfg.burn, rng::derive_seed(cfg.seed, 100 + i),
                                       shock_kind_from_string(cfg.shocks));
              const auto f = detail::fit_from_config(y, cfg);
              rep.loglik = f.loglik;
              rep.iterations = f.iterations;
              rep.converged = f.converged;
              if (w_true.cols() > 0 && f.omega().cols() == w_true.cols()) rep.dist = linalg::subspace_distance(f.omega(), w_true);
            } catch (const std::exception&) {
              rep.failed = true;
            }
          },
          threads);
      std::ostringstream os;
      os << "rep,loglik,iterations,converged,subspace_distance,failed\n";
      for (size_t i = 0; i < reps.size(); ++i)
        os << i << ',' << io::format_double(reps[i].loglik) << ',' << reps[i].iterations << ','
           << (reps[i].converged ? 1 : 0) << ',' << io::format_double(reps[i].dist) << ',' << (reps[i].failed ? 1 : 0)
           << '\n';
      detail::write_text(dir / "montecarlo.csv", os.str());
      out << "ran " << reps.size() << " replications -> " << (dir / "montecarlo.csv").string() << '\n';
    } else {
      const Panel raw = io::read_csv(cfg.input);
      // Levels of I(1) classes are fitted as they are; their models carry no constant.
      const bool demean = cfg.demean && !is_integrated(cls);
      const Vec means = demean ? Vec(raw.values.colwise().mean().transpose()) : Vec::Zero(raw.cols());
      const Panel y = demean ? raw.demeaned() : raw;
      if (cfg.command == "select") {
        GridBounds b{cfg.p_min, cfg.p_max, cfg.s_min, cfg.s_max, cfg.q_min, cfg.q_max, cfg.r_min, cfg.r_max};
        const auto tab = grid_search(y, cls, b, cfg.fit_options(), threads);
        std::ostringstream os;
        write_ic_table(os, tab);
        detail::write_text(dir / "ic_table.csv", os.str());
        const auto& best = tab.rows[static_cast<size_t>(tab.best(criterion_from_string(cfg.criterion)))].candidate.orders;
        out << "best by " << cfg.criterion << ": p=" << best.p << " s=" << best.s << " q=" << best.q << " r=" << best.r
            << '\n';
      } else {
        const auto f = detail::fit_from_config(y, cfg);
        detail::write_fit(dir, f, means);
        for (const auto& w : f.warnings) err << "warning: " << w << '\n';
        if (cfg.command == "decompose") {
          detail::write_components(dir, f, y);
        } else if (cfg.command == "forecast") {
          std::ostringstream os;
          ForecastPath path = forecast(f, y, cfg.horizon);
          path.values.rowwise() += means.transpose();
          write_forecast(os, path, y.names);
          detail::write_text(dir / "forecast.csv", os.str());
        }
        out << to_string(f.model) << " fit: loglik=" << io::format_double(f.loglik) << " iterations=" << f.iterations
            << (f.converged ? "" : " (not converged)") << '\n';
      }
    }
    detail::write_text(dir / "manifest.txt", cfg.manifest());
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ivar::cli

#endif  // IVAR_TOOLS_CLI_HPP
