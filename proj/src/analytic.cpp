#include "kdmc/analytic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kdmc {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490;

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) {
    throw std::invalid_argument(std::string("spec-violation: ") + what +
                                " must be positive");
  }
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double vanilla_put_price(double s0, double strike, double T, double sigma) {
  require_positive(s0, "s0");
  require_positive(strike, "strike");
  require_positive(T, "T");
  require_positive(sigma, "sigma");
  const double sst = sigma * std::sqrt(T);
  const double d1 = (std::log(s0 / strike) + 0.5 * sigma * sigma * T) / sst;
  const double d2 = d1 - sst;
  return strike * norm_cdf(-d2) - s0 * norm_cdf(-d1);
}

double vanilla_call_price(double s0, double strike, double T, double sigma) {
  require_positive(s0, "s0");
  require_positive(strike, "strike");
  require_positive(T, "T");
  require_positive(sigma, "sigma");
  const double sst = sigma * std::sqrt(T);
  const double d1 = (std::log(s0 / strike) + 0.5 * sigma * sigma * T) / sst;
  const double d2 = d1 - sst;
  return s0 * norm_cdf(d1) - strike * norm_cdf(d2);
}

double down_out_put_price(const BarrierSpec& spec) {
  const double s0 = spec.s0, K = spec.strike, H = spec.lower_barrier;
  const double T = spec.T, sigma = spec.sigma;
  require_positive(s0, "s0");
  require_positive(K, "strike");
  require_positive(H, "lower_barrier");
  require_positive(T, "T");
  require_positive(sigma, "sigma");
  if (s0 == H) return 0.0;  // started on the barrier: knocked out at once
  if (s0 < H) {
    throw std::invalid_argument("spec-violation: s0 below the lower barrier");
  }
  if (K <= H) {
    throw std::invalid_argument(
        "spec-violation: the factor formula needs strike > barrier");
  }

  // Factor formula at zero rate/dividend: mu = -1/2, eta = 1, phi = -1.
  constexpr double mu = -0.5;
  constexpr double eta = 1.0;
  constexpr double phi = -1.0;
  const double sst = sigma * std::sqrt(T);
  const double x1 = std::log(s0 / K) / sst + (1.0 + mu) * sst;
  const double x2 = std::log(s0 / H) / sst + (1.0 + mu) * sst;
  const double y1 = std::log(H * H / (s0 * K)) / sst + (1.0 + mu) * sst;
  const double y2 = std::log(H / s0) / sst + (1.0 + mu) * sst;
  const double pow1 = std::pow(H / s0, 2.0 * (mu + 1.0));
  const double pow2 = std::pow(H / s0, 2.0 * mu);

  const double A =
      phi * s0 * norm_cdf(phi * x1) - phi * K * norm_cdf(phi * x1 - phi * sst);
  const double B =
      phi * s0 * norm_cdf(phi * x2) - phi * K * norm_cdf(phi * x2 - phi * sst);
  const double C = phi * s0 * pow1 * norm_cdf(eta * y1) -
                   phi * K * pow2 * norm_cdf(eta * y1 - eta * sst);
  const double D = phi * s0 * pow1 * norm_cdf(eta * y2) -
                   phi * K * pow2 * norm_cdf(eta * y2 - eta * sst);
  return A - B + C - D;
}

double double_out_call_price(const BarrierSpec& spec, int n_terms) {
  const double s0 = spec.s0, K = spec.strike;
  const double b = spec.lower_barrier, B = spec.upper_barrier;
  const double T = spec.T, sigma = spec.sigma;
  require_positive(K, "strike");
  require_positive(T, "T");
  require_positive(sigma, "sigma");
  if (!(b > 0.0 && b < s0 && s0 < B) || !std::isfinite(B)) {
    throw std::invalid_argument(
        "spec-violation: need 0 < lower_barrier < s0 < upper_barrier");
  }
  if (n_terms < 1) {
    throw std::invalid_argument("spec-violation: n_terms must be >= 1");
  }
  if (K >= B) return 0.0;  // payoff region empty inside the corridor

  const double sst = sigma * std::sqrt(T);
  const double half = 0.5 * sigma * sigma * T;
  const double ls = std::log(s0), lk = std::log(K);
  const double lb = std::log(b), lB = std::log(B);

  // Image-charge series at zero rate/dividend; fixed order n = -N..N.
  double s_sum = 0.0;
  double k_sum = 0.0;
  for (int n = -n_terms; n <= n_terms; ++n) {
    const double d1 = (ls + 2.0 * n * (lB - lb) - lk + half) / sst;
    const double d2 = (ls + (2.0 * n - 1.0) * lB - 2.0 * n * lb + half) / sst;
    const double d3 = ((2.0 * n + 2.0) * lb - lk - ls - 2.0 * n * lB + half) / sst;
    const double d4 =
        ((2.0 * n + 2.0) * lb - ls - (2.0 * n + 1.0) * lB + half) / sst;
    const double f1 = std::pow(B / b, n);
    const double f2 = std::pow(b, n + 1) / (std::pow(B, n) * s0);
    // For wide corridors the power factors can overflow while their normal
    // probability differences are exactly zero; skip those terms rather than
    // evaluate inf * 0. Whenever a difference is nonzero its factor is
    // moderate, so the surviving products are safe.
    const double p12 = norm_cdf(d1) - norm_cdf(d2);
    const double p34 = norm_cdf(d3) - norm_cdf(d4);
    if (p12 != 0.0) s_sum += f1 * p12;
    if (p34 != 0.0) s_sum -= f2 * p34;
    const double q12 = norm_cdf(d1 - sst) - norm_cdf(d2 - sst);
    const double q34 = norm_cdf(d3 - sst) - norm_cdf(d4 - sst);
    if (q12 != 0.0) k_sum += q12 / f1;
    if (q34 != 0.0) k_sum -= q34 / f2;
  }
  return s0 * s_sum - K * k_sum;
}

}  // namespace kdmc
