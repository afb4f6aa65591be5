// Command-line front end: `price`, `converge`, and `benchmark-cache`
// subcommands over a shared flag set. A --config file supplies defaults;
// explicitly passed flags override it.

#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kdmc/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Monte Carlo pricing of expectations of killed one-dimensional "
      "diffusions"};
  app.require_subcommand(1);
  // Frees the short -h for the h-transform flag below.
  app.set_help_flag("--help", "Print this help message and exit");

  kdmc::ExperimentConfig cli;  // holds defaults and CLI-provided values
  std::string config_path;
  std::vector<double> strikes;

  auto* opt_config = app.add_option(
      "--config", config_path,
      "Flat key=value config file (keys are these flag names with '_' for "
      "'-'); explicit flags override it");
  auto* opt_model =
      app.add_option("--model", cli.model, "Model: bs | hlv")
          ->capture_default_str();
  auto* opt_sigma =
      app.add_option("--sigma", cli.sigma, "Black-Scholes volatility")
          ->capture_default_str();
  auto* opt_nu = app.add_option("--nu", cli.nu, "HLV volatility level")
                     ->capture_default_str();
  auto* opt_beta = app.add_option("--beta", cli.beta, "HLV skew in (0,1]")
                       ->capture_default_str();
  auto* opt_payoff =
      app.add_option("--payoff", cli.payoff, "Payoff: put | call")
          ->capture_default_str();
  auto* opt_strike = app.add_option(
      "--strike", strikes,
      "Strike; repeatable for benchmark-cache, last occurrence wins "
      "elsewhere (default 1)");
  auto* opt_spot =
      app.add_option("--spot", cli.spot, "Spot")->capture_default_str();
  auto* opt_lower =
      app.add_option("--lower-barrier", cli.lower_barrier, "Lower barrier")
          ->capture_default_str();
  auto* opt_upper =
      app.add_option("--upper-barrier", cli.upper_barrier,
                     "Upper barrier; omit or 'inf' for none")
          ->capture_default_str();
  auto* opt_maturity =
      app.add_option("--maturity", cli.maturity, "Maturity T")
          ->capture_default_str();
  auto* opt_h =
      app.add_option("--h", cli.h_kind,
                     "h-transform: exp | linear | quartic | parabolic")
          ->capture_default_str();
  auto* opt_scheme =
      app.add_option("--scheme", cli.schemes,
                     "Scheme (repeatable or comma-separated): bem | euler | "
                     "bridge")
          ->delimiter(',');
  auto* opt_nsteps =
      app.add_option("--n-steps", cli.n_steps,
                     "Step counts N (repeatable or comma-separated)")
          ->delimiter(',');
  auto* opt_paths =
      app.add_option("--paths", cli.paths, "Paths per run")
          ->capture_default_str();
  auto* opt_seed =
      app.add_option("--seed", cli.seed, "RNG seed")->capture_default_str();
  auto* opt_series =
      app.add_option("--series-terms", cli.series_terms,
                     "Truncation of the double-barrier series")
          ->capture_default_str();
  auto* opt_out =
      app.add_option("--out", cli.out, "CSV output path (converge)");
  auto* opt_plot = app.add_option(
      "--plot-data", cli.plot_data,
      "Optional log N / log abs_error dump path (converge)");
  auto* opt_threads =
      app.add_option("--threads", cli.threads,
                     "Worker threads (results are thread-count invariant)")
          ->capture_default_str();
  auto* opt_cache =
      app.add_option("--cache", cli.cache_file, "Benchmark cache file")
          ->capture_default_str();
  auto* opt_bsteps =
      app.add_option("--bench-steps", cli.bench_steps,
                     "Self-benchmark step count")
          ->capture_default_str();
  auto* opt_bpaths =
      app.add_option("--bench-paths", cli.bench_paths,
                     "Self-benchmark path count")
          ->capture_default_str();
  auto* opt_bseed =
      app.add_option("--bench-seed", cli.bench_seed, "Self-benchmark seed")
          ->capture_default_str();

  CLI::App* cmd_price = app.add_subcommand(
      "price", "Price once per scheme at the first configured step count");
  CLI::App* cmd_conv = app.add_subcommand(
      "converge",
      "Sweep schemes over all step counts and fit convergence slopes");
  CLI::App* cmd_bench = app.add_subcommand(
      "benchmark-cache",
      "Compute the high-resolution self-benchmark for each --strike and "
      "merge it into the cache file");
  for (CLI::App* c : {cmd_price, cmd_conv, cmd_bench}) c->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    kdmc::ExperimentConfig cfg;
    if (opt_config->count()) kdmc::apply_config_file(cfg, config_path);
    if (opt_model->count()) cfg.model = cli.model;
    if (opt_sigma->count()) cfg.sigma = cli.sigma;
    if (opt_nu->count()) cfg.nu = cli.nu;
    if (opt_beta->count()) cfg.beta = cli.beta;
    if (opt_payoff->count()) cfg.payoff = cli.payoff;
    if (opt_strike->count()) cfg.strike = strikes.back();
    if (opt_spot->count()) cfg.spot = cli.spot;
    if (opt_lower->count()) cfg.lower_barrier = cli.lower_barrier;
    if (opt_upper->count()) cfg.upper_barrier = cli.upper_barrier;
    if (opt_maturity->count()) cfg.maturity = cli.maturity;
    if (opt_h->count()) cfg.h_kind = cli.h_kind;
    if (opt_scheme->count()) cfg.schemes = cli.schemes;
    if (opt_nsteps->count()) cfg.n_steps = cli.n_steps;
    if (opt_paths->count()) cfg.paths = cli.paths;
    if (opt_seed->count()) cfg.seed = cli.seed;
    if (opt_series->count()) cfg.series_terms = cli.series_terms;
    if (opt_out->count()) cfg.out = cli.out;
    if (opt_plot->count()) cfg.plot_data = cli.plot_data;
    if (opt_threads->count()) cfg.threads = cli.threads;
    if (opt_cache->count()) cfg.cache_file = cli.cache_file;
    if (opt_bsteps->count()) cfg.bench_steps = cli.bench_steps;
    if (opt_bpaths->count()) cfg.bench_paths = cli.bench_paths;
    if (opt_bseed->count()) cfg.bench_seed = cli.bench_seed;

    if (app.got_subcommand(cmd_price)) {
      const std::vector<kdmc::PriceResult> results = kdmc::run_price(cfg);
      for (const kdmc::PriceResult& r : results) {
        std::printf("%-8s estimate=%.12g stderr=%.5g", r.scheme.c_str(),
                    r.mc.mean, r.mc.stderr_);
        if (!std::isnan(r.benchmark)) {
          std::printf(" benchmark=%.12g abs_error=%.5g [%s]\n", r.benchmark,
                      r.abs_error, r.benchmark_source.c_str());
        } else {
          std::printf(" benchmark=n/a [%s]\n", r.benchmark_source.c_str());
        }
      }
      return 0;
    }

    if (app.got_subcommand(cmd_conv)) {
      const kdmc::ConvergenceReport report = kdmc::run_convergence(cfg);
      kdmc::emit_csv(report, std::cout);
      if (!cfg.out.empty()) kdmc::emit_csv(report, cfg.out);
      if (!cfg.plot_data.empty()) kdmc::emit_plot_data(report, cfg.plot_data);
      return 0;
    }

    // benchmark-cache
    const std::vector<double> ks =
        strikes.empty() ? std::vector<double>{cfg.strike} : strikes;
    const std::vector<kdmc::BenchmarkEntry> entries =
        kdmc::run_benchmark_cache(cfg, ks);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      std::printf("strike=%.10g price=%.12g stderr=%.5g hash=%s\n", ks[i],
                  entries[i].price, entries[i].stderr_,
                  kdmc::config_hash(entries[i].key).c_str());
    }
    std::printf("cache file: %s (%zu entries written)\n",
                cfg.cache_file.c_str(), entries.size());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
