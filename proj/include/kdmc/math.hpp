#pragma once

// Scalar numerics shared across the engine: normal density/quantile,
// compensated summation, and the least-squares line fit used by the
// convergence reports.

#include <cmath>
#include <vector>

namespace kdmc {

/// Standard normal density.
double norm_pdf(double x);

/**
 * @brief Inverse standard normal CDF (Wichura's algorithm AS 241, PPND16).
 *
 * Accurate to about 1e-15 over (0,1). Throws std::domain_error for
 * u outside (0,1).
 */
double inv_norm_cdf(double u);

/// Kahan-compensated accumulator; add() keeps a running error term.
struct KahanSum {
  double sum = 0.0;
  double c = 0.0;

  // Neumaier's variant: also compensates when |x| exceeds |sum|, where the
  // classic update would discard the running correction.
  void add(double x) {
    double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + c; }
};

/**
 * @brief Ordinary least-squares fit y = intercept + slope * x.
 *
 * slope_stderr is the usual regression standard error of the slope;
 * it is NaN when fewer than 3 points are supplied (no residual degrees
 * of freedom). Throws std::invalid_argument on size mismatch or n < 2.
 */
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  int n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kdmc
