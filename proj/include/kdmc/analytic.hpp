#pragma once

// Closed-form Black-Scholes barrier prices (zero rate, zero dividend) used
// as ground truth for the convergence experiments: the standard
// Reiner-Rubinstein factor formula for the down-and-out put and the
// Ikeda-Kunitomo double-barrier series for the knock-out call.

#include <limits>

namespace kdmc {

enum class BarrierKind { down_out_put, double_out_call };

/// Contract parameters in price space; upper_barrier is +infinity for
/// single-barrier contracts.
struct BarrierSpec {
  BarrierKind kind = BarrierKind::down_out_put;
  double strike = 1.0;
  double lower_barrier = 0.8;
  double upper_barrier = std::numeric_limits<double>::infinity();
  double T = 1.0;
  double sigma = 0.2;
  double s0 = 1.0;
};

/// Standard normal CDF to better than 1e-14 absolute (via erfc).
double norm_cdf(double x);

/// Vanilla Black-Scholes prices at zero rate/dividend (used for bounds and
/// barrier-removal limits).
double vanilla_put_price(double s0, double strike, double T, double sigma);
double vanilla_call_price(double s0, double strike, double T, double sigma);

/**
 * @brief Down-and-out put via the factor formula (A - B + C - D, eta = 1,
 * phi = -1, mu = -1/2), zero rebate.
 *
 * s0 == lower_barrier returns 0 (immediate knock-out). Throws
 * std::invalid_argument ("spec-violation") if s0 < barrier or
 * strike <= barrier, or on non-positive inputs.
 */
double down_out_put_price(const BarrierSpec& spec);

/**
 * @brief Double knock-out call via the Ikeda-Kunitomo series truncated at
 * +-n_terms.
 *
 * Throws std::invalid_argument ("spec-violation") unless
 * 0 < lower_barrier < s0 < upper_barrier and n_terms >= 1.
 */
double double_out_call_price(const BarrierSpec& spec, int n_terms);

}  // namespace kdmc
