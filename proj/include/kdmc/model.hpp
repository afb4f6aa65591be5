#pragma once

// Diffusion dynamics: the state-space interval, the coefficient functions,
// and the Girsanov drift-removal reduction that rewrites a drifted model in
// the driftless form the path schemes consume.

#include <cmath>
#include <functional>
#include <limits>

namespace kdmc {

/// State space (lower, upper); upper may be +infinity, lower must be finite
/// for model domains (barrier arguments may relax this).
struct Domain {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();

  bool bounded() const { return std::isfinite(upper); }
  bool contains(double x) const { return x > lower && x < upper; }
};

enum class Coordinate { natural, log_price };

/**
 * @brief Hyperbolic local volatility
 *        sigma(x) = nu * { (1-beta+beta^2)/beta * x
 *                          + (beta-1)/beta * (sqrt(x^2 + beta^2 (1-x)^2) - beta) }.
 *
 * Reduces to nu*x at beta = 1 and equals nu at x = 1 for every beta.
 * Throws std::invalid_argument for nu <= 0 or beta outside (0,1].
 */
double hlv_sigma(double nu, double beta, double x);

/// Unchecked evaluation of the same formula, for hot loops.
inline double hlv_sigma_raw(double nu, double beta, double x) {
  const double omb = 1.0 - x;
  return nu * (((1.0 - beta + beta * beta) / beta) * x +
               ((beta - 1.0) / beta) *
                   (std::sqrt(x * x + beta * beta * omb * omb) - beta));
}

/**
 * @brief Scalar diffusion dX = mu(X)dt + sigma(X)dW on a domain.
 *
 * sigma must be strictly positive on the interior; an empty mu means zero
 * drift. `coordinate` records whether a log-price change of variable was
 * applied when the model was built. Instances are immutable after
 * construction and safe to share across workers; the stored functions must
 * be pure.
 */
struct DiffusionModel {
  std::function<double(double)> sigma;
  std::function<double(double)> mu;  // empty == driftless
  Domain domain;
  Coordinate coordinate = Coordinate::natural;

  // Fast dispatch for the built-in coefficient families, so per-step
  // evaluation avoids std::function overhead.
  enum class SigmaKind { custom, constant, hlv };
  SigmaKind sigma_kind = SigmaKind::custom;
  double sigma_const = 0.0;
  double hlv_nu = 0.0;
  double hlv_beta = 1.0;

  double sigma_at(double x) const {
    switch (sigma_kind) {
      case SigmaKind::constant:
        return sigma_const;
      case SigmaKind::hlv:
        return hlv_sigma_raw(hlv_nu, hlv_beta, x);
      default:
        return sigma(x);
    }
  }
  double mu_at(double x) const { return mu ? mu(x) : 0.0; }
  bool driftless() const { return !static_cast<bool>(mu); }
};

/**
 * @brief Result of the Girsanov drift removal.
 *
 * For the original model with drift mu, define F(x) = int_c^x mu/sigma^2 dy
 * (anchor c = 0 when the domain contains 0, else c = x0). Then with
 * g = payoff_transform(g~) = g~ * exp(F) and
 * b = residual_b = -1/2 [ (mu/sigma^2)' + mu^2/sigma^4 ],
 *
 *   original price = prefactor(x0,T)
 *                    * E[ g(X_T) * exp(int_0^T sigma^2(X_t) b(X_t) dt) * 1{T<zeta} ]
 *
 * where X is the driftless model and prefactor(x0,T) = exp(-F(x0)).
 */
struct DriftRemoval {
  DiffusionModel driftless;
  std::function<double(double, double)> prefactor;  // (x0, T) -> exp(-F(x0))
  std::function<std::function<double(double)>(std::function<double(double)>)>
      payoff_transform;
  std::function<double(double)> residual_b;
};

/// Driftless constant-sigma model in the log coordinate (post-Girsanov form).
/// Throws std::invalid_argument ("invalid-domain") if lower >= upper or
/// sigma <= 0.
DiffusionModel bs_log_model(double sigma, double lower, double upper);

/// Black-Scholes log model carrying its drift mu = -sigma^2/2 (the form the
/// explicit Euler schemes discretize).
DiffusionModel bs_log_model_with_drift(double sigma, double lower, double upper);

/// Hyperbolic local-volatility model in the natural coordinate (driftless).
DiffusionModel hlv_model(double nu, double beta, double lower, double upper);

/**
 * @brief Girsanov reduction of a drifted model to driftless form.
 *
 * Drift derivatives are taken by central finite differences with step
 * 1e-6 * max(1,|x|); F is integrated with composite Gauss-Legendre
 * quadrature from the anchor. Throws std::runtime_error
 * ("non-differentiable-drift") if a derivative evaluation is not finite.
 * The `payoff` argument is only validated against the domain here; the
 * returned payoff_transform applies to any payoff.
 */
DriftRemoval remove_drift(const DiffusionModel& model,
                          const std::function<double(double)>& payoff,
                          double x0, double T);

/// Samples sigma on an interior grid; throws std::invalid_argument if any
/// sample is non-positive or non-finite (the sigma-bounds model invariant).
void validate_model(const DiffusionModel& model, int n_samples = 1000);

}  // namespace kdmc
