#pragma once

// Concave h-functions for the measure change, the per-step map
// H(x) = x - z h'(x)/h(x), and its inverse. Four recipes are provided:
//
//   double_barrier_quartic  h from double integration of f(x) = (x-l)(r-x),
//                           i.e. (sigma^2/2) h'' = -(x-l)(r-x), h(l)=h(r)=0
//   single_barrier_exp      h(x) = e^{-l} - e^{-x} on (l, +inf)
//   transient_linear        h(x) = x - l on (l, +inf); H^{-1} closed form
//   double_barrier_parabolic  h(x) = (x-l)(r-x)
//
// All transforms are immutable and shareable; the inversion routines are
// pure and reentrant.

#include <cstdint>
#include <vector>

#include "kdmc/model.hpp"

namespace kdmc {

enum class HKind {
  double_barrier_quartic,
  single_barrier_exp,
  transient_linear,
  double_barrier_parabolic,
};

/// Root-finder counters (optional out-parameter of the inversion routines).
struct SolverStats {
  std::int64_t evals = 0;
  std::int64_t newton_steps = 0;
  std::int64_t bisect_steps = 0;
};

/**
 * @brief A concave h with derivatives, vanishing at each finite accessible
 * boundary and strictly positive inside the domain.
 *
 * Kind-specific coefficients are exposed for inspection: the quartic's a, b
 * and construction sigma, and the boundaries held in `domain`.
 */
struct HTransform {
  HKind kind;
  Domain domain;

  // quartic parameters (unused otherwise)
  double sigma_construction = 0.0;
  double quartic_a = 0.0;
  double quartic_b = 0.0;

  double h(double x) const;
  double h1(double x) const;  // h'
  double h2(double x) const;  // h''

  // Fused ratios; these are the per-step quantities of the scheme.
  double h1_over_h(double x) const;
  double h2_over_h(double x) const;
};

/// The per-step map H(x) = x - z h'(x)/h(x) for z = dt * sigma_n^2 >= 0.
struct HMap {
  const HTransform* transform;
  double z;
};

/// Quartic recurrent transform for a bounded domain. Throws
/// std::invalid_argument ("invalid-domain") if r <= l or r is not finite.
HTransform make_double_barrier_h(double sigma_construction, double l, double r);

/// Exponential recurrent transform for (l, +inf). Throws on non-finite l.
HTransform make_single_barrier_h(double l);

/// Transient transform h(x) = x - l on (l, +inf). Throws on non-finite l.
HTransform make_transient_h(double l);

/// Parabolic recurrent transform h(x) = (x-l)(r-x) for a bounded domain.
HTransform make_parabolic_h(double l, double r);

/**
 * @brief Evaluate H(x) = x - z h'(x)/h(x).
 *
 * Throws std::domain_error ("domain-violation") when x is at or outside the
 * boundaries; the scheme guarantees interior states, so a violation
 * indicates a bug upstream.
 */
double big_h(const HMap& map, double x);

/// H'(x) = 1 - z (h''/h - (h'/h)^2); >= 1 on the interior for z >= 0.
double big_h_deriv(const HMap& map, double x);

/**
 * @brief Invert H: the unique interior x with big_h(map, x) = y.
 *
 * Absolute tolerance 1e-12 in x, at most 200 iterations. transient_linear
 * uses the closed form x = (sqrt(4z + (y-l)^2) + y + l)/2; the other kinds
 * run a bisection-safeguarded Newton iteration inside a bracket grown
 * geometrically toward the boundaries, warm-started from `hint` when given.
 * z = 0 returns y unchanged. Throws std::runtime_error ("bracket-failure")
 * if no bracket encloses y (cannot occur for finite y).
 */
double invert_big_h(const HMap& map, double y,
                    double hint = std::numeric_limits<double>::quiet_NaN(),
                    SolverStats* stats = nullptr);

/// Pure-bisection inverse (the reference method; used as the test oracle).
double invert_big_h_bisect(const HMap& map, double y,
                           SolverStats* stats = nullptr);

/**
 * @brief Tabulated inverse of H on a dense interior grid (bounded domains
 * only), queried by binary search with piecewise-linear interpolation.
 *
 * Queries outside the tabulated H-range clamp to the end nodes. Throws
 * std::invalid_argument ("unsupported-kind") for unbounded domains and
 * requires n_points >= 2.
 */
struct InverseGrid {
  std::vector<double> hvals;  // strictly increasing
  std::vector<double> xvals;
  double query(double y) const;
};

InverseGrid build_inverse_grid(const HTransform& transform, double z,
                               int n_points);

}  // namespace kdmc
