#include "kdmc/math.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kdmc {

namespace {
constexpr double kOneOverSqrtTwoPi = 0.3989422804014326779399461;
}

double norm_pdf(double x) { return kOneOverSqrtTwoPi * std::exp(-0.5 * x * x); }

double inv_norm_cdf(double u) {
  // ALGORITHM AS 241 (PPND16), APPL. STATIST. (1988) VOL. 37, NO. 3.
  // Accurate to about 1 part in 1e16 over (0,1).
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("inv_norm_cdf: argument must lie in (0,1)");
  }

  static const double A[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e2,
      1.9715909503065514427e3,  1.3731693765509461125e4,
      4.5921953931549871457e4,  6.7265770927008700853e4,
      3.3430575583588128105e4,  2.5090809287301226727e3};
  static const double B[8] = {
      1.0,                      4.2313330701600911252e1,
      6.8718700749205790830e2,  5.3941960214247511077e3,
      2.1213794301586595867e4,  3.9307895800092710610e4,
      2.8729085735721942674e4,  5.2264952788528545610e3};
  static const double C[8] = {
      1.42343711074968357734e0, 4.63033784615654529590e0,
      5.76949722146069140550e0, 3.64784832476320460504e0,
      1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static const double D[8] = {
      1.0,                      2.05319162663775882187e0,
      1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static const double E[8] = {
      6.65790464350110377720e0, 5.46378491116411436990e0,
      1.78482653991729133580e0, 2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static const double F[8] = {
      1.0,                      5.99832206555887937690e-1,
      1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};

  auto ratio = [](const double* num, const double* den, double r) {
    double p = num[7], q = den[7];
    for (int i = 6; i >= 0; --i) {
      p = p * r + num[i];
      q = q * r + den[i];
    }
    return p / q;
  };

  const double q = u - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * ratio(A, B, r);
  }
  double r = q < 0.0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    z = ratio(C, D, r - 1.6);
  } else {
    z = ratio(E, F, r - 5.0);
  }
  return q < 0.0 ? -z : z;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("fit_line: size mismatch");
  }
  const int n = static_cast<int>(x.size());
  if (n < 2) throw std::invalid_argument("fit_line: need at least 2 points");

  KahanSum sx, sy;
  for (int i = 0; i < n; ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double xbar = sx.value() / n;
  const double ybar = sy.value() / n;

  KahanSum sxx, sxy;
  for (int i = 0; i < n; ++i) {
    sxx.add((x[i] - xbar) * (x[i] - xbar));
    sxy.add((x[i] - xbar) * (y[i] - ybar));
  }
  if (sxx.value() <= 0.0) {
    throw std::invalid_argument("fit_line: x values are all identical");
  }

  LineFit fit;
  fit.n = n;
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = ybar - fit.slope * xbar;

  if (n >= 3) {
    KahanSum ss_res;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res.add(r * r);
    }
    fit.slope_stderr = std::sqrt(ss_res.value() / (n - 2) / sxx.value());
  } else {
    fit.slope_stderr = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

}  // namespace kdmc
