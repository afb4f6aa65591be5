#pragma once

// Deterministic, parallelizable path-averaging engine.
//
// Paths are processed in fixed-size blocks of consecutive path indices; each
// block accumulates its own moments, and blocks are merged in index order.
// The result is therefore bit-identical for any worker count or schedule.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kdmc/htransform.hpp"
#include "kdmc/rng.hpp"
#include "kdmc/schemes.hpp"

namespace kdmc {

/// Estimator mean, standard error, and run metadata. stderr is the sample
/// standard deviation over sqrt(n_paths).
struct McResult {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_paths = 0;
  std::map<std::string, double> diagnostics;
};

/// One path kernel: consumes the path's normal stream, returns its outcome.
using PathKernel = std::function<PathOutcome(NormalStream&)>;

/// Per-path estimator applied to an outcome:
///   prefactor * h(x0) * payoff(terminal)/h(terminal) * weight   (h given)
///   prefactor * payoff(terminal) * weight                       (h null)
struct Estimator {
  std::function<double(double)> payoff;
  double prefactor = 1.0;
  const HTransform* h_at_terminal = nullptr;
  double x0 = 0.0;

  double eval(const PathOutcome& out) const;
};

/**
 * @brief Run n_paths kernels under the seeded per-path streams and average
 * the estimator.
 *
 * Deterministic for a given rng spec regardless of n_threads. Throws
 * std::runtime_error ("non-finite-estimator", reporting the path index) if
 * any path produces a non-finite value. Diagnostics report weight_min,
 * weight_max, killed_fraction, and n_blocks.
 */
McResult run_mc(const PathKernel& path_fn,
                const std::function<double(double)>& payoff, double prefactor,
                const HTransform* h_at_terminal, double x0, const RngSpec& rng,
                std::int64_t n_paths, int n_threads = 1);

/// As run_mc, but evaluates several estimators on one shared path sweep
/// (used by the benchmark cache to price several strikes in one pass).
std::vector<McResult> run_mc_multi(const PathKernel& path_fn,
                                   const std::vector<Estimator>& estimators,
                                   const RngSpec& rng, std::int64_t n_paths,
                                   int n_threads = 1);

/**
 * @brief Pool independent partial results (disjoint path ranges) via
 * compensated sums and sums-of-squares. Throws std::invalid_argument
 * ("empty-input") for an empty list.
 */
McResult combine(const std::vector<McResult>& partials);

}  // namespace kdmc
