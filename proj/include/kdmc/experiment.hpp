#pragma once

// Experiment front end: assembles pricing pipelines from a flat
// configuration, runs single-price evaluations and convergence sweeps with
// slope regression, and reads/writes the CSV report format and the
// benchmark-cache file.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kdmc/montecarlo.hpp"

namespace kdmc {

/**
 * @brief Flat experiment configuration.
 *
 * Barriers, spot, and strike are in price space; the single conversion to
 * the working (log) coordinate happens during pipeline assembly. A missing
 * upper barrier is +infinity.
 */
struct ExperimentConfig {
  std::string model = "bs";    // bs | hlv
  double sigma = 0.2;          // bs volatility
  double nu = 0.2;             // hlv level
  double beta = 0.5;           // hlv skew, (0,1]
  std::string payoff = "put";  // put | call
  double strike = 1.0;
  double spot = 1.0;
  double lower_barrier = 0.8;
  double upper_barrier = std::numeric_limits<double>::infinity();
  double maturity = 1.0;
  std::string h_kind = "exp";  // quartic | parabolic | exp | linear
  std::vector<std::string> schemes = {"bem"};  // bem | euler | bridge
  std::vector<std::int64_t> n_steps = {2, 4, 8, 16, 32, 64, 128, 256};
  std::int64_t paths = 1'000'000;
  std::uint64_t seed = 20260817;
  int series_terms = 5;
  std::string out;        // CSV path; empty = stdout only
  std::string plot_data;  // optional (log N, log abs_error) dump
  int threads = 1;

  // Benchmark-cache settings (HLV self-benchmark).
  std::string cache_file = "data/hlv_benchmarks.json";
  std::int64_t bench_steps = 4096;
  std::int64_t bench_paths = 8'000'000;
  std::uint64_t bench_seed = 424243;
};

/// Parse a flat key=value config file ('#' comments, keys identical to the
/// CLI long-flag names with '-' as '_'). Unknown keys are rejected.
void apply_config_file(ExperimentConfig& config, const std::string& path);

/// Field-level validation of every constraint the modules require.
/// Throws std::invalid_argument naming the offending key.
void validate(const ExperimentConfig& config);

/// One `price` invocation: estimate plus benchmark comparison. benchmark is
/// NaN when unavailable (see benchmark_source for the reason).
struct PriceResult {
  std::string scheme;
  McResult mc;
  double benchmark = std::numeric_limits<double>::quiet_NaN();
  double abs_error = std::numeric_limits<double>::quiet_NaN();
  std::string benchmark_source;  // "analytic", "cache", or a warning
};

/// Rows and fitted slopes of a convergence sweep.
struct ConvergenceRow {
  std::string scheme;
  std::int64_t N = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double benchmark = 0.0;
  double abs_error = 0.0;
};

/// slope is the positive convergence rate, i.e. the negated least-squares
/// slope of log(abs_error) on log(N), fitted only over rows with
/// abs_error > 3 * stderr; n_fit_rows records how many rows survived.
struct SlopeFit {
  std::string scheme;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double slope_stderr = std::numeric_limits<double>::quiet_NaN();
  int n_fit_rows = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<SlopeFit> slopes;
};

/// Price once per configured scheme at the first n_steps entry.
std::vector<PriceResult> run_price(const ExperimentConfig& config);

/// Full sweep over schemes x n_steps with per-scheme slope fits. Requires
/// at least 4 N values spanning at least 2 octaves
/// ("insufficient-N-list" otherwise).
ConvergenceReport run_convergence(const ExperimentConfig& config);

/// CSV format: header `scheme,N,estimate,stderr,benchmark,abs_error`; one
/// data row per run with 17-significant-digit doubles; final summary rows
/// `slope,<scheme>,<value>,<stderr>,<n_fit_rows>,` padded to the same
/// column count.
void emit_csv(const ConvergenceReport& report, std::ostream& os);
void emit_csv(const ConvergenceReport& report, const std::string& path);

/// Inverse of emit_csv (round-trips exactly).
ConvergenceReport parse_csv(std::istream& is);

/// Optional plot dump: header `scheme,log_N,log_abs_error`, natural logs.
void emit_plot_data(const ConvergenceReport& report, const std::string& path);

/// Fit the positive convergence rate for one scheme's rows (the 3*stderr
/// filter described on SlopeFit).
SlopeFit fit_slope(const std::string& scheme,
                   const std::vector<ConvergenceRow>& rows);

// ---- Benchmark cache ----------------------------------------------------

/// Canonical key string of the self-benchmark run implied by `config`
/// (model and contract parameters plus bench_steps/bench_paths/bench_seed;
/// independent of the experiment's own seed, paths, and N-list).
std::string benchmark_key(const ExperimentConfig& config);

/// FNV-1a 64-bit hash, hex-encoded; the cache file's key.
std::string config_hash(const std::string& canonical);

struct BenchmarkEntry {
  double price = 0.0;
  double stderr_ = 0.0;
  std::string key;  // canonical string the hash was computed from
};

/// Look up a cached self-benchmark; nullopt when absent or unreadable.
std::optional<BenchmarkEntry> cache_lookup(const std::string& cache_file,
                                           const std::string& hash);

/// Compute the BEM self-benchmark for each strike in one shared path sweep
/// and merge the entries into the cache file. Returns the entries written.
std::vector<BenchmarkEntry> run_benchmark_cache(
    const ExperimentConfig& config, const std::vector<double>& strikes);

}  // namespace kdmc
