#include "kdmc/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kdmc {

namespace {

// 16-node Gauss-Legendre nodes/weights on [-1,1] (symmetric halves).
constexpr int kGlHalf = 8;
constexpr double kGlNode[kGlHalf] = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr double kGlWeight[kGlHalf] = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

// Integrate fn over [a,b] with composite 16-node Gauss-Legendre on
// `panels` equal panels; exact for smooth drift ratios at the scales the
// models use.
double integrate(const std::function<double(double)>& fn, double a, double b,
                 int panels = 8) {
  if (a == b) return 0.0;
  double total = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    const double half = 0.5 * h;
    double acc = 0.0;
    for (int i = 0; i < kGlHalf; ++i) {
      acc += kGlWeight[i] * (fn(mid + half * kGlNode[i]) +
                             fn(mid - half * kGlNode[i]));
    }
    total += acc * half;
  }
  return total;
}

}  // namespace

double hlv_sigma(double nu, double beta, double x) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("parameter-out-of-range: nu must be positive");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("parameter-out-of-range: beta must lie in (0,1]");
  }
  if (!(x > 0.0)) {
    throw std::invalid_argument("parameter-out-of-range: x must be positive");
  }
  return hlv_sigma_raw(nu, beta, x);
}

DiffusionModel bs_log_model(double sigma, double lower, double upper) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("invalid-domain: sigma must be positive");
  }
  if (!(lower < upper) || !std::isfinite(lower)) {
    throw std::invalid_argument("invalid-domain: need finite lower < upper");
  }
  DiffusionModel m;
  m.sigma = [sigma](double) { return sigma; };
  m.domain = Domain{lower, upper};
  m.coordinate = Coordinate::log_price;
  m.sigma_kind = DiffusionModel::SigmaKind::constant;
  m.sigma_const = sigma;
  return m;
}

DiffusionModel bs_log_model_with_drift(double sigma, double lower,
                                       double upper) {
  DiffusionModel m = bs_log_model(sigma, lower, upper);
  const double drift = -0.5 * sigma * sigma;
  m.mu = [drift](double) { return drift; };
  return m;
}

DiffusionModel hlv_model(double nu, double beta, double lower, double upper) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("parameter-out-of-range: nu must be positive");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("parameter-out-of-range: beta must lie in (0,1]");
  }
  if (!(lower < upper) || !std::isfinite(lower) || !(lower >= 0.0)) {
    throw std::invalid_argument(
        "invalid-domain: need 0 <= lower < upper for the price coordinate");
  }
  DiffusionModel m;
  m.sigma = [nu, beta](double x) { return hlv_sigma_raw(nu, beta, x); };
  m.domain = Domain{lower, upper};
  m.coordinate = Coordinate::natural;
  m.sigma_kind = DiffusionModel::SigmaKind::hlv;
  m.hlv_nu = nu;
  m.hlv_beta = beta;
  return m;
}

DriftRemoval remove_drift(const DiffusionModel& model,
                          const std::function<double(double)>& payoff,
                          double x0, double T) {
  if (!model.sigma && model.sigma_kind == DiffusionModel::SigmaKind::custom) {
    throw std::invalid_argument("remove_drift: model has no sigma");
  }
  if (!(T > 0.0)) throw std::invalid_argument("remove_drift: T must be positive");
  if (!model.domain.contains(x0)) {
    throw std::invalid_argument("remove_drift: x0 outside the domain interior");
  }
  if (payoff) payoff(x0);  // surfaces payoff/domain mismatches early

  DriftRemoval out;
  out.driftless = model;
  out.driftless.mu = nullptr;

  if (model.driftless()) {
    out.prefactor = [](double, double) { return 1.0; };
    out.payoff_transform = [](std::function<double(double)> g) { return g; };
    out.residual_b = [](double) { return 0.0; };
    return out;
  }

  // Anchor of F: 0 when the domain contains it (the log-model convention),
  // else the start point.
  const double anchor = model.domain.contains(0.0) ? 0.0 : x0;

  auto drift_ratio = [model](double x) {
    const double s = model.sigma_at(x);
    return model.mu_at(x) / (s * s);
  };

  auto big_f = [drift_ratio, anchor](double x) {
    return integrate(drift_ratio, anchor, x);
  };

  out.prefactor = [big_f](double x_start, double) {
    return std::exp(-big_f(x_start));
  };

  out.payoff_transform = [big_f](std::function<double(double)> g_tilde) {
    return std::function<double(double)>(
        [big_f, g_tilde](double x) { return g_tilde(x) * std::exp(big_f(x)); });
  };

  out.residual_b = [drift_ratio, model](double x) {
    // b = -1/2 [ (mu/sigma^2)' + mu^2/sigma^4 ], derivative by central
    // differences with step 1e-6 * max(1,|x|).
    const double step = 1e-6 * std::fmax(1.0, std::fabs(x));
    const double dratio = (drift_ratio(x + step) - drift_ratio(x - step)) /
                          (2.0 * step);
    const double ratio = drift_ratio(x);
    const double b = -0.5 * (dratio + ratio * ratio);
    if (!std::isfinite(b)) {
      throw std::runtime_error(
          "non-differentiable-drift: derivative evaluation failed at x=" +
          std::to_string(x));
    }
    return b;
  };
  return out;
}

void validate_model(const DiffusionModel& model, int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("validate_model: n_samples < 2");
  const double lo = model.domain.lower;
  const double hi = model.domain.bounded()
                        ? model.domain.upper
                        : lo + std::fmax(1.0, std::fabs(lo)) * 10.0;
  for (int i = 1; i < n_samples; ++i) {
    const double x = lo + (hi - lo) * i / n_samples;
    const double s = model.sigma_at(x);
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument(
          "invalid-domain: sigma not strictly positive at x=" +
          std::to_string(x));
    }
  }
}

}  // namespace kdmc
