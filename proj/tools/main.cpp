#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
  ivar::cli::RunConfig cfg;
  CLI::App app{"Index-structured VAR models: simulate, fit, select, decompose, forecast, montecarlo"};
  app.set_config("--config", "", "flat key=value file; command-line flags take precedence");
  app.add_option("command", cfg.command, "simulate | fit | select | decompose | forecast | montecarlo")->required();
  app.add_option("--input", cfg.input, "input CSV (header row of names)");
  app.add_option("--output", cfg.output, "output directory")->capture_default_str();
  app.add_option("--model", cfg.model, "mai | vhari | iaar | ciaar | vecim | vecm | drvar")->capture_default_str();
  app.add_option("-p,--p", cfg.p, "own-lag order (levels order for I(1) classes)")->capture_default_str();
  app.add_option("-s,--s", cfg.s, "index-lag order")->capture_default_str();
  app.add_option("-q,--q", cfg.q, "number of indexes")->capture_default_str();
  app.add_option("-r,--r", cfg.r, "cointegration rank")->capture_default_str();
  app.add_option("--p0", cfg.p0, "DRVAR autocovariance lags for omega (0: p)")->capture_default_str();
  app.add_option("--drvar_method", cfg.drvar_method, "ols | gls")->capture_default_str();
  app.add_option("--criterion", cfg.criterion, "aic | bic | hq")->capture_default_str();
  app.add_option("--p_min", cfg.p_min)->capture_default_str();
  app.add_option("--p_max", cfg.p_max)->capture_default_str();
  app.add_option("--s_min", cfg.s_min)->capture_default_str();
  app.add_option("--s_max", cfg.s_max)->capture_default_str();
  app.add_option("--q_min", cfg.q_min)->capture_default_str();
  app.add_option("--q_max", cfg.q_max)->capture_default_str();
  app.add_option("--r_min", cfg.r_min)->capture_default_str();
  app.add_option("--r_max", cfg.r_max)->capture_default_str();
  app.add_option("--horizon", cfg.horizon, "forecast horizon")->capture_default_str();
  app.add_option("--seed", cfg.seed, "master seed")->capture_default_str();
  app.add_option("-n,--n", cfg.n, "number of series (simulate/montecarlo)")->capture_default_str();
  app.add_option("-t,--t", cfg.t, "sample length (simulate/montecarlo)")->capture_default_str();
  app.add_option("--burn", cfg.burn, "burn-in rows")->capture_default_str();
  app.add_option("--shocks", cfg.shocks, "gaussian | lognormal-garch")->capture_default_str();
  app.add_option("--reps", cfg.reps, "Monte Carlo replications")->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads (0: all cores)")->capture_default_str();
  app.add_option("--max_iter", cfg.max_iter)->capture_default_str();
  app.add_option("--tol", cfg.tol)->capture_default_str();
  app.add_option("--ridge", cfg.ridge)->capture_default_str();
  app.add_option("--demean", cfg.demean, "subtract sample means before fitting stationary classes")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  return ivar::cli::run(cfg);
}
