#pragma once

// Path discretizations: the drift-implicit backward Euler-Maruyama (BEM)
// scheme under an h-transform with its exponential weight, the plain Euler
// scheme with grid-point killing, and the Euler scheme with Brownian-bridge
// no-hit correction.
//
// All path operations are pure functions of (model, transform, grid,
// normals); the Monte Carlo engine evaluates them concurrently with no
// shared mutable state.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>

#include "kdmc/htransform.hpp"
#include "kdmc/model.hpp"

namespace kdmc {

/// Uniform time grid t_n = n T / N.
struct StepGrid {
  double T;
  std::int64_t N;
  double dt;  // T / N
};

/// Throws std::invalid_argument for N < 1 or T <= 0.
StepGrid make_grid(double T, std::int64_t N);

/// One simulated path: terminal state, multiplicative weight, and the
/// grid-point killing flag (plain Euler only). BEM outcomes always have
/// killed == false and an interior terminal; bridge weights lie in [0,1].
struct PathOutcome {
  double terminal = 0.0;
  double weight = 1.0;
  bool killed = false;
};

/// Adapter satisfying the normal-source interface over a fixed sequence.
struct FixedNormals {
  std::span<const double> values;
  std::size_t pos = 0;
  double next_normal() {
    if (pos >= values.size()) throw std::out_of_range("FixedNormals exhausted");
    return values[pos++];
  }
};

/**
 * @brief One BEM step: the unique interior solution x of
 *        H(x) = x_n + sigma_n * dW with z = dt * sigma_n^2.
 *
 * sigma is frozen at the left endpoint x_n. Propagates bracket-failure from
 * the inverse.
 */
double bem_step(const HTransform& transform, double sigma_n, double x_n,
                double dW, double dt, SolverStats* stats = nullptr);

/**
 * @brief Full BEM path from x0 with the exponential weight
 *
 *   weight = exp( sum_{n=0}^{N-1} dt * sigma^2(X_n) *
 *                 [ residual_b(X_n) + h''(X_n) / (2 h(X_n)) ] ),
 *
 * every factor evaluated at the left endpoint X_n. An empty residual_b means
 * b == 0 (the term is skipped, keeping the transient-h weight exactly 1).
 * killed is always false.
 */
template <class Gen>
PathOutcome bem_path(const DiffusionModel& model, const HTransform& transform,
                     const std::function<double(double)>& residual_b,
                     const StepGrid& grid, double x0, Gen& normals,
                     SolverStats* stats = nullptr) {
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  double x = x0;
  double exponent = 0.0;
  for (std::int64_t n = 0; n < grid.N; ++n) {
    const double sig = model.sigma_at(x);
    const double z = dt * sig * sig;
    double term = 0.5 * transform.h2_over_h(x);
    if (residual_b) term += residual_b(x);
    exponent += z * term;
    const double dW = sqrt_dt * normals.next_normal();
    const double y = x + sig * dW;
    x = invert_big_h(HMap{&transform, z}, y, x, stats);
  }
  return PathOutcome{x, std::exp(exponent), false};
}

/**
 * @brief Plain Euler recursion X_{n+1} = X_n + mu(X_n) dt + sigma(X_n) sqrt(dt) Z,
 * killed at the first grid time the state leaves `barriers` (weight 0),
 * weight 1 otherwise. The recursion keeps running after killing so that a
 * fixed number of normals is always consumed.
 */
template <class Gen>
PathOutcome euler_path(const DiffusionModel& model, const StepGrid& grid,
                       double x0, Gen& normals, const Domain& barriers) {
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  double x = x0;
  bool killed = false;
  for (std::int64_t n = 0; n < grid.N; ++n) {
    const double z = normals.next_normal();
    x += model.mu_at(x) * dt + model.sigma_at(x) * sqrt_dt * z;
    if (!killed && !(x > barriers.lower && x < barriers.upper)) killed = true;
  }
  return PathOutcome{x, killed ? 0.0 : 1.0, killed};
}

/**
 * @brief Brownian-bridge conditional no-hit probability for a lower barrier:
 * 0 if either endpoint is at or below l, else
 * 1 - exp(-2 (x_i - l)(x_{i+1} - l) / (sigma_i^2 dt)).
 */
double no_hit_prob_single(double x_i, double x_ip1, double l, double sigma_i,
                          double dt);

/**
 * @brief Brownian-bridge no-hit probability for two barriers l < r:
 * the truncated series
 *
 *   1{both endpoints in (l,r)} * sum_{n=-n_terms}^{n_terms}
 *     [ exp(-2 n(r-l)(n(r-l)+x_{i+1}-x_i) / (sigma^2 dt))
 *       - exp(-2 (n(r-l)+x_i-r)(n(r-l)+x_{i+1}-r) / (sigma^2 dt)) ],
 *
 * clamped to [0,1]. Truncation can produce tiny negatives near the
 * barriers; `clamped` (when given) counts clamp events.
 */
double no_hit_prob_double(double x_i, double x_ip1, double l, double r,
                          double sigma_i, double dt, int n_terms,
                          std::int64_t* clamped = nullptr);

/**
 * @brief Euler recursion without grid killing; weight = product of per-step
 * no-hit probabilities (single- or double-barrier according to `barriers`;
 * both barriers infinite gives weight 1). killed is always false.
 */
template <class Gen>
PathOutcome bridge_path(const DiffusionModel& model, const StepGrid& grid,
                        double x0, Gen& normals, const Domain& barriers,
                        int n_terms, std::int64_t* clamped = nullptr) {
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  const bool lower_finite = std::isfinite(barriers.lower);
  const bool upper_finite = std::isfinite(barriers.upper);
  double x = x0;
  double weight = 1.0;
  for (std::int64_t n = 0; n < grid.N; ++n) {
    const double sig = model.sigma_at(x);
    const double x_next =
        x + model.mu_at(x) * dt + sig * sqrt_dt * normals.next_normal();
    if (lower_finite && upper_finite) {
      weight *= no_hit_prob_double(x, x_next, barriers.lower, barriers.upper,
                                   sig, dt, n_terms, clamped);
    } else if (lower_finite) {
      weight *= no_hit_prob_single(x, x_next, barriers.lower, sig, dt);
    } else if (upper_finite) {
      // Reflect: an upper barrier for X is a lower barrier for -X.
      weight *= no_hit_prob_single(-x, -x_next, -barriers.upper, sig, dt);
    }
    x = x_next;
    if (weight == 0.0 && n + 1 < grid.N) {
      // Dead path: finish the recursion without the probability work.
      for (std::int64_t m = n + 1; m < grid.N; ++m) {
        x += model.mu_at(x) * dt + model.sigma_at(x) * sqrt_dt * normals.next_normal();
      }
      break;
    }
  }
  return PathOutcome{x, weight, false};
}

}  // namespace kdmc
