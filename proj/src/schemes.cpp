#include "kdmc/schemes.hpp"

#include <cmath>
#include <stdexcept>

namespace kdmc {

namespace {

// exp(a) where a <= 0; arguments at or below the double underflow point
// return exactly 0 without calling exp, so deep-series terms cost nothing.
inline double exp_or_zero(double a) {
  return a <= -746.0 ? 0.0 : std::exp(a);
}

}  // namespace

StepGrid make_grid(double T, std::int64_t N) {
  if (N < 1) throw std::invalid_argument("make_grid: N must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("make_grid: T must be positive");
  return StepGrid{T, N, T / static_cast<double>(N)};
}

double bem_step(const HTransform& transform, double sigma_n, double x_n,
                double dW, double dt, SolverStats* stats) {
  const double z = dt * sigma_n * sigma_n;
  const double y = x_n + sigma_n * dW;
  return invert_big_h(HMap{&transform, z}, y, x_n, stats);
}

double no_hit_prob_single(double x_i, double x_ip1, double l, double sigma_i,
                          double dt) {
  if (x_i <= l || x_ip1 <= l) return 0.0;
  const double arg = -2.0 * (x_i - l) * (x_ip1 - l) / (sigma_i * sigma_i * dt);
  return -std::expm1(arg);
}

double no_hit_prob_double(double x_i, double x_ip1, double l, double r,
                          double sigma_i, double dt, int n_terms,
                          std::int64_t* clamped) {
  if (n_terms < 0) {
    throw std::invalid_argument("no_hit_prob_double: n_terms must be >= 0");
  }
  if (x_i <= l || x_i >= r || x_ip1 <= l || x_ip1 >= r) return 0.0;

  const double width = r - l;
  const double inv = 2.0 / (sigma_i * sigma_i * dt);
  const double dx = x_ip1 - x_i;
  // Fixed summation order n = -n_terms..n_terms keeps results bit-identical
  // across runs; the terms decay like exp(-c n^2).
  double sum = 0.0;
  for (int n = -n_terms; n <= n_terms; ++n) {
    const double nw = n * width;
    const double t1 = exp_or_zero(-inv * nw * (nw + dx));
    const double t2 = exp_or_zero(-inv * (nw + x_i - r) * (nw + x_ip1 - r));
    sum += t1 - t2;
  }
  if (sum < 0.0) {
    if (clamped) ++*clamped;
    return 0.0;
  }
  if (sum > 1.0) {
    if (clamped) ++*clamped;
    return 1.0;
  }
  return sum;
}

}  // namespace kdmc
