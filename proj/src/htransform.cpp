#include "kdmc/htransform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kdmc {

namespace {

// Antiderivative-of-antiderivative of -(x-l)(r-x) scaled by 2/sigma^2:
// P(x) = x^4/12 - (l+r) x^3/6 + l r x^2/2, so h = (2/s2)(P(x) - a x) + b.
inline double quartic_p(double x, double l, double r) {
  return (((x / 12.0 - (l + r) / 6.0) * x + 0.5 * l * r) * x) * x;
}

inline double big_h_unchecked(const HTransform& t, double z, double x) {
  return x - z * t.h1_over_h(x);
}

inline double big_h_deriv_unchecked(const HTransform& t, double z, double x) {
  const double r1 = t.h1_over_h(x);
  const double r2 = t.h2_over_h(x);
  return 1.0 - z * (r2 - r1 * r1);
}

// Closed-form inverse of u - z/u = d on u > 0, evaluated stably on both
// sides of d = 0. This is the exact transient inverse and the local model
// of every kind near a simple zero of h.
inline double edge_inverse(double z, double d) {
  const double s = std::sqrt(4.0 * z + d * d);
  return d >= 0.0 ? 0.5 * (s + d) : 2.0 * z / (s - d);
}

}  // namespace

double HTransform::h(double x) const {
  switch (kind) {
    case HKind::double_barrier_quartic: {
      const double s2 = sigma_construction * sigma_construction;
      return (2.0 / s2) *
                 (quartic_p(x, domain.lower, domain.upper) - quartic_a * x) +
             quartic_b;
    }
    case HKind::single_barrier_exp:
      // e^{-l} - e^{-x}, grouped to avoid cancellation near the barrier.
      return -std::exp(-domain.lower) * std::expm1(-(x - domain.lower));
    case HKind::transient_linear:
      return x - domain.lower;
    case HKind::double_barrier_parabolic:
      return (x - domain.lower) * (domain.upper - x);
  }
  return 0.0;  // unreachable
}

double HTransform::h1(double x) const {
  switch (kind) {
    case HKind::double_barrier_quartic: {
      const double s2 = sigma_construction * sigma_construction;
      const double l = domain.lower, r = domain.upper;
      return (2.0 / s2) *
             (((x / 3.0 - 0.5 * (l + r)) * x + l * r) * x - quartic_a);
    }
    case HKind::single_barrier_exp:
      return std::exp(-x);
    case HKind::transient_linear:
      return 1.0;
    case HKind::double_barrier_parabolic:
      return domain.lower + domain.upper - 2.0 * x;
  }
  return 0.0;  // unreachable
}

double HTransform::h2(double x) const {
  switch (kind) {
    case HKind::double_barrier_quartic: {
      const double s2 = sigma_construction * sigma_construction;
      return -(2.0 / s2) * (x - domain.lower) * (domain.upper - x);
    }
    case HKind::single_barrier_exp:
      return -std::exp(-x);
    case HKind::transient_linear:
      return 0.0;
    case HKind::double_barrier_parabolic:
      return -2.0;
  }
  return 0.0;  // unreachable
}

double HTransform::h1_over_h(double x) const {
  switch (kind) {
    case HKind::single_barrier_exp:
      // e^{-x} / (e^{-l} - e^{-x}) = 1 / (e^{x-l} - 1)
      return 1.0 / std::expm1(x - domain.lower);
    case HKind::transient_linear:
      return 1.0 / (x - domain.lower);
    default:
      return h1(x) / h(x);
  }
}

double HTransform::h2_over_h(double x) const {
  switch (kind) {
    case HKind::single_barrier_exp:
      return -1.0 / std::expm1(x - domain.lower);
    case HKind::transient_linear:
      return 0.0;
    case HKind::double_barrier_parabolic:
      return -2.0 / ((x - domain.lower) * (domain.upper - x));
    default:
      return h2(x) / h(x);
  }
}

HTransform make_double_barrier_h(double sigma_construction, double l,
                                 double r) {
  if (!(sigma_construction > 0.0)) {
    throw std::invalid_argument(
        "invalid-domain: construction sigma must be positive");
  }
  if (!(l < r) || !std::isfinite(l) || !std::isfinite(r)) {
    throw std::invalid_argument("invalid-domain: need finite l < r");
  }
  HTransform t;
  t.kind = HKind::double_barrier_quartic;
  t.domain = Domain{l, r};
  t.sigma_construction = sigma_construction;
  // a makes h(l) = h(r); b shifts both to zero (symmetric form balances
  // the rounding at the two ends).
  t.quartic_a = (quartic_p(r, l, r) - quartic_p(l, l, r)) / (r - l);
  const double s2 = sigma_construction * sigma_construction;
  t.quartic_b =
      (t.quartic_a * (l + r) - quartic_p(l, l, r) - quartic_p(r, l, r)) / s2;
  return t;
}

HTransform make_single_barrier_h(double l) {
  if (!std::isfinite(l)) {
    throw std::invalid_argument("invalid-domain: l must be finite");
  }
  HTransform t;
  t.kind = HKind::single_barrier_exp;
  t.domain = Domain{l, std::numeric_limits<double>::infinity()};
  return t;
}

HTransform make_transient_h(double l) {
  if (!std::isfinite(l)) {
    throw std::invalid_argument("invalid-domain: l must be finite");
  }
  HTransform t;
  t.kind = HKind::transient_linear;
  t.domain = Domain{l, std::numeric_limits<double>::infinity()};
  return t;
}

HTransform make_parabolic_h(double l, double r) {
  if (!(l < r) || !std::isfinite(l) || !std::isfinite(r)) {
    throw std::invalid_argument("invalid-domain: need finite l < r");
  }
  HTransform t;
  t.kind = HKind::double_barrier_parabolic;
  t.domain = Domain{l, r};
  return t;
}

double big_h(const HMap& map, double x) {
  const HTransform& t = *map.transform;
  if (!t.domain.contains(x)) {
    throw std::domain_error("domain-violation: x=" + std::to_string(x) +
                            " is not interior to the transform domain");
  }
  return big_h_unchecked(t, map.z, x);
}

double big_h_deriv(const HMap& map, double x) {
  return big_h_deriv_unchecked(*map.transform, map.z, x);
}

double invert_big_h(const HMap& map, double y, double hint,
                    SolverStats* stats) {
  const HTransform& t = *map.transform;
  const double z = map.z;
  if (!(z >= 0.0)) {
    throw std::invalid_argument("invert_big_h: z must be >= 0");
  }
  if (!std::isfinite(y)) {
    throw std::runtime_error("bracket-failure: target y is not finite");
  }
  if (z == 0.0) return y;

  const double lo = t.domain.lower;
  const double hi = t.domain.upper;  // +inf for the single-barrier kinds

  if (t.kind == HKind::transient_linear) {
    return lo + edge_inverse(z, y - lo);
  }

  // Starting point: warm start when offered, the target itself when it is
  // interior (H is a small perturbation of the identity), otherwise the
  // transient edge model anchored at the boundary y falls beyond.
  double x;
  if (std::isfinite(hint) && hint > lo && hint < hi) {
    x = hint;
  } else if (y > lo && y < hi) {
    x = y;
  } else if (y <= lo) {
    x = lo + edge_inverse(z, y - lo);
    if (!(x > lo && x < hi)) x = std::isfinite(hi) ? 0.5 * (lo + hi) : lo + 1.0;
  } else {
    x = hi - edge_inverse(z, hi - y);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  }

  // Newton with a one-sided-growth bracket: every evaluation tightens one
  // side, out-of-bracket steps fall back to bisection. H' >= 1 keeps the
  // steps bounded by the residual.
  double a = lo, b = hi;  // open ends; H diverges to -inf/+inf there
  bool a_real = false, b_real = false;
  constexpr double tol = 1e-12;

  for (int iter = 0; iter < 200; ++iter) {
    const double fx = big_h_unchecked(t, z, x) - y;
    if (stats) ++stats->evals;
    if (fx == 0.0) return x;
    if (fx > 0.0) {
      b = x;
      b_real = true;
    } else {
      a = x;
      a_real = true;
    }
    if (a_real && b_real && b - a <= tol) return 0.5 * (a + b);

    const double dfx = big_h_deriv_unchecked(t, z, x);
    double xn = x - fx / dfx;
    if (std::isfinite(xn) && xn > a && xn < b) {
      if (stats) ++stats->newton_steps;
    } else if (std::isfinite(b)) {
      xn = 0.5 * (a + b);
      if (stats) ++stats->bisect_steps;
    } else {
      xn = a + 2.0 * std::fmax(x - a, 1.0);
      if (stats) ++stats->bisect_steps;
    }
    if (std::fabs(xn - x) <= tol && xn > lo && xn < hi) return xn;
    x = xn;
  }
  if (a_real && b_real) return 0.5 * (a + b);
  throw std::runtime_error("bracket-failure: no enclosing bracket for y");
}

double invert_big_h_bisect(const HMap& map, double y, SolverStats* stats) {
  const HTransform& t = *map.transform;
  const double z = map.z;
  if (!(z >= 0.0)) {
    throw std::invalid_argument("invert_big_h_bisect: z must be >= 0");
  }
  if (!std::isfinite(y)) {
    throw std::runtime_error("bracket-failure: target y is not finite");
  }
  if (z == 0.0) return y;

  const double lo = t.domain.lower;
  const double hi = t.domain.upper;

  if (t.kind == HKind::transient_linear) {
    return lo + edge_inverse(z, y - lo);
  }

  auto f = [&](double x) {
    if (stats) ++stats->evals;
    return big_h_unchecked(t, z, x) - y;
  };

  // Walk the left end toward lo until H < y there (H -> -inf at lo).
  double a = std::isfinite(hi) ? 0.5 * (lo + hi)
                               : lo + 0.5 * std::fmax(1.0, std::fabs(lo));
  int guard = 0;
  while (f(a) >= 0.0) {
    a = lo + 0.5 * (a - lo);
    if (++guard > 2000 || !(a > lo)) {
      throw std::runtime_error("bracket-failure: no left bracket end");
    }
  }
  // Walk the right end outward/toward hi until H > y there.
  double b;
  guard = 0;
  if (std::isfinite(hi)) {
    b = hi - 0.25 * (hi - lo);
    while (f(b) <= 0.0) {
      b = hi - 0.5 * (hi - b);
      if (++guard > 2000 || !(b < hi)) {
        throw std::runtime_error("bracket-failure: no right bracket end");
      }
    }
  } else {
    b = std::fmax(y, a) + 1.0;
    while (f(b) <= 0.0) {
      b = lo + 2.0 * (b - lo);
      if (++guard > 2000 || !std::isfinite(b)) {
        throw std::runtime_error("bracket-failure: no right bracket end");
      }
    }
  }

  for (int iter = 0; iter < 200 && (b - a) > 1e-12; ++iter) {
    const double mid = 0.5 * (a + b);
    if (!(mid > a && mid < b)) break;  // bracket pinched to adjacent floats
    if (stats) ++stats->bisect_steps;
    if (f(mid) > 0.0) {
      b = mid;
    } else {
      a = mid;
    }
  }
  return 0.5 * (a + b);
}

InverseGrid build_inverse_grid(const HTransform& transform, double z,
                               int n_points) {
  if (transform.kind != HKind::double_barrier_quartic &&
      transform.kind != HKind::double_barrier_parabolic) {
    throw std::invalid_argument(
        "unsupported-kind: the tabulated inverse needs a bounded domain");
  }
  if (n_points < 2) {
    throw std::invalid_argument("build_inverse_grid: n_points must be >= 2");
  }
  if (!(z >= 0.0)) {
    throw std::invalid_argument("build_inverse_grid: z must be >= 0");
  }
  const double l = transform.domain.lower;
  const double r = transform.domain.upper;
  InverseGrid g;
  g.hvals.resize(n_points);
  g.xvals.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double x = l + (r - l) * (i + 1) / (n_points + 1);
    g.xvals[i] = x;
    g.hvals[i] = big_h_unchecked(transform, z, x);
  }
  return g;
}

double InverseGrid::query(double y) const {
  if (y <= hvals.front()) return xvals.front();
  if (y >= hvals.back()) return xvals.back();
  const auto it = std::upper_bound(hvals.begin(), hvals.end(), y);
  const std::size_t j = static_cast<std::size_t>(it - hvals.begin());
  const double w = (y - hvals[j - 1]) / (hvals[j] - hvals[j - 1]);
  return xvals[j - 1] + w * (xvals[j] - xvals[j - 1]);
}

}  // namespace kdmc
