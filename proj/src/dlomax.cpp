#include "onebit/dlomax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "onebit/error.hpp"

namespace onebit {

DLParams::DLParams(double eta, double f) : eta_(eta), f_(f) {
  if (!(std::isfinite(eta) && eta > 0.0) || !(std::isfinite(f) && f > 0.0))
    throw DomainError("double-Lomax parameters must be positive and finite");
}

double dl_log_pdf(double x, const DLParams& p) {
  return std::log(0.5 * p.eta()) - (p.f() + 1.0) * std::log1p(p.eta() * std::abs(x) / p.f());
}

double dl_pdf(double x, const DLParams& p) { return std::exp(dl_log_pdf(x, p)); }

double dl_tail(double t, const DLParams& p) {
  return 0.5 * std::exp(-p.f() * std::log1p(p.eta() * std::abs(t) / p.f()));
}

double dl_cdf(double t, const DLParams& p) {
  const double tail = dl_tail(t, p);
  return t <= 0.0 ? tail : 1.0 - tail;
}

double dl_inverse_cdf(double u, const DLParams& p) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("dl_inverse_cdf needs 0 < u < 1");
  if (u == 0.5) return 0.0;
  const double tail = u < 0.5 ? u : 1.0 - u;
  const double magnitude = (p.f() / p.eta()) * std::expm1(-std::log(2.0 * tail) / p.f());
  return u < 0.5 ? -magnitude : magnitude;
}

std::vector<HierarchicalSample> sample_hierarchical(const DLParams& p, std::mt19937_64& rng,
                                                    std::size_t count) {
  std::gamma_distribution<double> gamma(p.f(), 1.0 / p.f());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<HierarchicalSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double lambda_unit = gamma(rng);
    std::exponential_distribution<double> expo(0.5 * lambda_unit * lambda_unit);
    const double tau_unit = expo(rng);
    const double x_unit = std::sqrt(tau_unit) * normal(rng);
    out.push_back({x_unit / p.eta(), tau_unit / (p.eta() * p.eta()), lambda_unit * p.eta()});
  }
  return out;
}

std::vector<double> sample_dl(const DLParams& p, std::mt19937_64& rng, std::size_t count) {
  const auto draws = sample_hierarchical(p, rng, count);
  std::vector<double> x(count);
  std::transform(draws.begin(), draws.end(), x.begin(), [](const auto& s) { return s.x; });
  return x;
}

DLLikelihood dl_log_likelihood(std::span<const double> coeffs, double eta, double f) {
  const double M = static_cast<double>(coeffs.size());
  DLLikelihood out{M * std::log(0.5 * eta), M / eta, 0.0, -M / (eta * eta), 0.0, 0.0};
  for (double x : coeffs) {
    const double r = std::abs(x);
    const double s = eta * r;
    const double fs = f + s;
    out.value -= (f + 1.0) * std::log1p(s / f);
    out.d_eta -= (f + 1.0) * r / fs;
    out.d_f += -std::log1p(s / f) + (f + 1.0) * s / (f * fs);
    out.d_eta_eta += (f + 1.0) * r * r / (fs * fs);
    out.d_eta_f += -r / fs + (f + 1.0) * r / (fs * fs);
    out.d_f_f += s / (f * fs) + s * (f * fs - (f + 1.0) * (2.0 * f + s)) / (f * f * fs * fs);
  }
  return out;
}

namespace {

// sum_i (f+1)|x_i| / (f + eta|x_i|)
double weighted_sum(std::span<const double> coeffs, double eta, double f) {
  double s = 0.0;
  for (double x : coeffs) {
    const double r = std::abs(x);
    s += (f + 1.0) * r / (f + eta * r);
  }
  return s;
}

void require_nondegenerate(std::span<const double> coeffs) {
  if (coeffs.size() < 2) throw DegenerateDataError("need at least two coefficients");
  if (std::all_of(coeffs.begin(), coeffs.end(), [](double x) { return x == 0.0; }))
    throw DegenerateDataError("all coefficients are zero");
}

// Root of h(eta) = eta * S(eta) - M, which is increasing and concave in eta.
// Newton from a bracketed start; the fixed-point map of fit_eta converges
// too slowly for small shapes to sit inside an outer Newton loop.
double solve_eta(std::span<const double> coeffs, double f, double eta0, double tol) {
  const double M = static_cast<double>(coeffs.size());
  std::size_t nonzero = 0;
  for (double x : coeffs) nonzero += x != 0.0 ? 1 : 0;
  if ((f + 1.0) * static_cast<double>(nonzero) <= M)
    throw DegenerateDataError("too many zero coefficients for a finite scale estimate");

  auto h = [&](double eta, double& slope) {
    double value = -M;
    slope = 0.0;
    for (double x : coeffs) {
      const double r = std::abs(x);
      const double fs = f + eta * r;
      value += (f + 1.0) * eta * r / fs;
      slope += (f + 1.0) * f * r / (fs * fs);
    }
    return value;
  };

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double eta = eta0 > 0.0 ? eta0 : 1.0;
  for (int it = 0; it < 500; ++it) {
    double slope = 0.0;
    const double value = h(eta, slope);
    if (std::abs(value) < tol * M) return eta;
    if (value < 0.0) {
      lo = eta;
    } else {
      hi = eta;
    }
    double next = eta - value / slope;
    if (!(next > lo && next < hi)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * eta;
    eta = next;
  }
  throw ConvergenceError("eta Newton solve did not converge", eta);
}

}  // namespace

double eta_fixed_point_residual(std::span<const double> coeffs, double eta, double f) {
  const double M = static_cast<double>(coeffs.size());
  return std::abs(eta * weighted_sum(coeffs, eta, f) - M) / M;
}

double fit_eta(std::span<const double> coeffs, double f_hat, const EtaFitOptions& options) {
  require_nondegenerate(coeffs);
  if (!(f_hat > 0.0)) throw DomainError("shape must be positive");
  const double M = static_cast<double>(coeffs.size());
  double eta = options.eta0;
  double previous_step = 0.0;
  bool damped = false;
  for (int it = 0; it < options.max_iter; ++it) {
    const double s = weighted_sum(coeffs, eta, f_hat);
    if (std::abs(eta * s - M) / M < options.tol) return eta;
    const double step = M / s - eta;
    if (previous_step * step < 0.0) damped = true;
    eta += damped ? 0.5 * step : step;
    previous_step = step;
  }
  throw ConvergenceError("eta fixed point did not converge in " +
                             std::to_string(options.max_iter) + " iterations",
                         eta);
}

double fit_eta(std::span<const double> coeffs, double f_hat, double tol, int max_iter) {
  return fit_eta(coeffs, f_hat, EtaFitOptions{tol, max_iter, 1.0});
}

ShapeFit fit_shape(std::span<const double> coeffs, const ShapeFitOptions& options) {
  require_nondegenerate(coeffs);
  const double M = static_cast<double>(coeffs.size());
  const double eta_tol = std::min(options.tol, 1e-10);

  double lo = options.f_min;
  double hi = options.f_max;
  double f = std::clamp(options.f0, lo, hi);
  double eta = 1.0;
  ShapeFit fit;

  auto finish = [&](double f_final, bool boundary, int iterations) {
    eta = solve_eta(coeffs, f_final, eta, eta_tol);
    const auto ll = dl_log_likelihood(coeffs, eta, f_final);
    fit.params = DLParams(eta, f_final);
    fit.at_boundary = boundary;
    fit.iterations = iterations;
    fit.grad_f = ll.d_f;
    fit.eta_residual = eta_fixed_point_residual(coeffs, eta, f_final);
    fit.log_likelihood = ll.value;
    return fit;
  };

  for (int it = 1; it <= options.max_iter; ++it) {
    double g = 0.0;
    double curvature = 0.0;
    try {
      eta = solve_eta(coeffs, f, eta, eta_tol);
      const auto ll = dl_log_likelihood(coeffs, eta, f);
      g = ll.d_f;
      curvature = ll.d_f_f - ll.d_eta_f * ll.d_eta_f / ll.d_eta_eta;
    } catch (const DegenerateDataError&) {
      // Small shapes cannot absorb the zeros; the likelihood rises with f.
      g = 1.0;
      curvature = 0.0;
      eta = 1.0;
    }
    if (std::abs(g) < options.tol * M && curvature != 0.0) return finish(f, false, it);
    if (g > 0.0) {
      lo = f;
    } else {
      hi = f;
    }
    if (hi / lo < 1.0 + 1e-12) {
      if (lo >= options.f_max * (1.0 - 1e-9)) return finish(options.f_max, true, it);
      if (hi <= options.f_min * (1.0 + 1e-9)) return finish(options.f_min, true, it);
      return finish(f, false, it);
    }
    double next = curvature < 0.0 ? f - g / curvature : -1.0;
    if (!(next > lo && next < hi)) next = std::sqrt(lo * hi);
    f = next;
  }
  throw ConvergenceError("shape Newton-Raphson did not converge", f);
}

ShapeFit fit_shape(std::span<const double> coeffs, double tol, int max_iter) {
  ShapeFitOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  return fit_shape(coeffs, options);
}

}  // namespace onebit
