#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kdmc/analytic.hpp"
#include "kdmc/math.hpp"

using namespace kdmc;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

BarrierSpec dop_spec(double s0, double strike, double barrier, double T,
                     double sigma) {
  BarrierSpec s;
  s.kind = BarrierKind::down_out_put;
  s.s0 = s0;
  s.strike = strike;
  s.lower_barrier = barrier;
  s.upper_barrier = kInf;
  s.T = T;
  s.sigma = sigma;
  return s;
}

BarrierSpec doc_spec(double s0, double strike, double lower, double upper,
                     double T, double sigma) {
  BarrierSpec s;
  s.kind = BarrierKind::double_out_call;
  s.s0 = s0;
  s.strike = strike;
  s.lower_barrier = lower;
  s.upper_barrier = upper;
  s.T = T;
  s.sigma = sigma;
  return s;
}

}  // namespace

TEST_CASE("norm_cdf against a quadrature oracle") {
  // Phi(x) = 1/2 + int_0^x pdf, composite Simpson.
  auto oracle = [](double x) {
    const int n = 4000;
    const double dx = x / (2 * n);
    double acc = norm_pdf(0.0) + norm_pdf(x);
    for (int i = 1; i < 2 * n; ++i) {
      acc += norm_pdf(i * dx) * ((i % 2) ? 4.0 : 2.0);
    }
    return 0.5 + acc * dx / 3.0;
  };
  for (const double x : {-3.0, -1.5, -0.5, 0.25, 1.0, 2.5, 4.0}) {
    CHECK(std::fabs(norm_cdf(x) - oracle(x)) <= 1e-12);
  }
  CHECK(norm_cdf(0.0) == 0.5);
  CHECK(norm_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-15));
  CHECK(norm_cdf(-1.96) ==
        doctest::Approx(1.0 - 0.9750021048517795).epsilon(1e-13));
}

TEST_CASE("vanilla prices") {
  // Put-call parity at zero rate: c - p = s0 - K.
  for (const double s0 : {0.7, 1.0, 1.3}) {
    for (const double k : {0.8, 1.0, 1.2}) {
      const double c = vanilla_call_price(s0, k, 2.0, 0.3);
      const double p = vanilla_put_price(s0, k, 2.0, 0.3);
      CHECK(std::fabs((c - p) - (s0 - k)) <= 1e-14);
    }
  }
  // ATM identity: put = 2 Phi(sigma sqrt(T) / 2) - 1.
  CHECK(std::fabs(vanilla_put_price(1.0, 1.0, 1.0, 0.2) -
                  (2.0 * norm_cdf(0.1) - 1.0)) <= 1e-15);
  CHECK(vanilla_put_price(1.0, 1.0, 1.0, 0.2) ==
        doctest::Approx(0.07965567455405798).epsilon(1e-14));

  CHECK_THROWS_AS(vanilla_put_price(0.0, 1.0, 1.0, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(vanilla_call_price(1.0, 1.0, -1.0, 0.2),
                  std::invalid_argument);
}

TEST_CASE("down-and-out put") {
  // Starting on the barrier means an immediate knock-out.
  CHECK(down_out_put_price(dop_spec(0.8, 1.0, 0.8, 1.0, 0.2)) == 0.0);

  CHECK_THROWS_AS(down_out_put_price(dop_spec(0.7, 1.0, 0.8, 1.0, 0.2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(down_out_put_price(dop_spec(1.0, 0.8, 0.8, 1.0, 0.2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(down_out_put_price(dop_spec(1.0, 1.0, 0.8, 0.0, 0.2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(down_out_put_price(dop_spec(1.0, 1.0, 0.8, 1.0, -0.2)),
                  std::invalid_argument);

  // Bounds: between 0 and the vanilla put.
  const double vp = vanilla_put_price(1.0, 1.0, 1.0, 0.2);
  for (const double b : {0.5, 0.7, 0.8, 0.9, 0.95, 0.99}) {
    const double dop = down_out_put_price(dop_spec(1.0, 1.0, b, 1.0, 0.2));
    CHECK(dop >= 0.0);
    CHECK(dop < vp);
  }

  // Removing the barrier recovers the vanilla put.
  CHECK(down_out_put_price(dop_spec(1.0, 1.0, 1e-8, 1.0, 0.2)) ==
        doctest::Approx(vp).epsilon(1e-9));

  // Moving the barrier up to the spot kills the contract...
  CHECK(down_out_put_price(dop_spec(1.0, 1.0, 0.9999, 1.0, 0.2)) < 1e-3);
  // ...monotonically.
  double prev = vp;
  for (const double b : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99}) {
    const double dop = down_out_put_price(dop_spec(1.0, 1.0, b, 1.0, 0.2));
    CHECK(dop < prev);
    prev = dop;
  }

  // Frozen value for the workhorse contract.
  const double ref = down_out_put_price(dop_spec(1.0, 1.0, 0.8, 1.0, 0.2));
  CHECK(ref == doctest::Approx(0.019777928666020003).epsilon(1e-10));
}

TEST_CASE("double knock-out call") {
  CHECK_THROWS_AS(
      double_out_call_price(doc_spec(0.8, 1.0, 0.85, 1.25, 1.0, 0.2), 5),
      std::invalid_argument);
  CHECK_THROWS_AS(
      double_out_call_price(doc_spec(1.3, 1.0, 0.85, 1.25, 1.0, 0.2), 5),
      std::invalid_argument);
  CHECK_THROWS_AS(
      double_out_call_price(doc_spec(1.0, 1.0, 0.85, 1.25, 1.0, 0.2), 0),
      std::invalid_argument);
  CHECK_THROWS_AS(
      double_out_call_price(doc_spec(1.0, 1.0, 0.85, kInf, 1.0, 0.2), 5),
      std::invalid_argument);

  // Strike at or above the upper barrier leaves no payoff region.
  CHECK(double_out_call_price(doc_spec(1.0, 1.25, 0.85, 1.25, 1.0, 0.2), 5) ==
        0.0);
  CHECK(double_out_call_price(doc_spec(1.0, 1.4, 0.85, 1.25, 1.0, 0.2), 5) ==
        0.0);

  // Bounds against the vanilla call.
  const double vc = vanilla_call_price(1.0, 1.0, 1.0, 0.2);
  const double ik =
      double_out_call_price(doc_spec(1.0, 1.0, 0.85, 1.25, 1.0, 0.2), 5);
  CHECK(ik > 0.0);
  CHECK(ik < vc);

  // A very wide corridor reduces to the vanilla call (only the n = 0 image
  // survives; large-|n| factors must not poison the sum).
  const double wide =
      double_out_call_price(doc_spec(1.0, 1.0, 1e-6, 1e6, 1.0, 0.2), 30);
  CHECK(std::isfinite(wide));
  CHECK(wide == doctest::Approx(vc).epsilon(1e-8));

  // Price grows with the corridor.
  double prev = 0.0;
  for (const double w : {0.1, 0.2, 0.3, 0.5, 1.0}) {
    const double p = double_out_call_price(
        doc_spec(1.0, 1.0, 1.0 - 0.8 * w, 1.0 + w, 1.0, 0.2), 10);
    CHECK(p > prev);
    prev = p;
  }

  // Series convergence: errors shrink with the truncation order and the
  // series has settled by thirty images even for a fat-tailed setup.
  const auto px = [](int terms) {
    return double_out_call_price(doc_spec(1.0, 0.9, 0.85, 1.25, 2.0, 0.6),
                                 terms);
  };
  const double p50 = px(50);
  CHECK(std::fabs(px(2) - p50) > std::fabs(px(10) - p50));
  CHECK(std::fabs(px(30) - p50) <= 1e-13);
}
