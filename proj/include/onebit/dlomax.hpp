#pragma once

// Double-Lomax marginal: density (eta/2) (1 + eta|x|/f)^-(f+1).
//
// The hierarchical form is the scale mixture
//   lambda ~ Gamma(shape f, rate f),  tau | lambda ~ Exp(rate lambda^2 / 2),
//   x | tau ~ N(0, tau)
// which yields the unit-scale (eta = 1) density. A draw x' from it is mapped
// to x = x' / eta; tau and lambda are rescaled to tau' / eta^2 and
// lambda' * eta so that x | tau ~ N(0, tau) and tau | lambda ~ Exp(lambda^2/2)
// still hold in the returned variables.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace onebit {

class DLParams {
 public:
  // Throws DomainError unless both are finite and positive.
  DLParams(double eta, double f);

  double eta() const { return eta_; }
  double f() const { return f_; }

  bool operator==(const DLParams&) const = default;

 private:
  double eta_;
  double f_;
};

struct HierarchicalSample {
  double x;
  double tau;
  double lambda;
};

double dl_pdf(double x, const DLParams& p);
double dl_log_pdf(double x, const DLParams& p);
double dl_cdf(double t, const DLParams& p);
// min(F(t), 1 - F(t)) computed without cancellation.
double dl_tail(double t, const DLParams& p);
// Throws DomainError unless 0 < u < 1.
double dl_inverse_cdf(double u, const DLParams& p);

std::vector<HierarchicalSample> sample_hierarchical(const DLParams& p, std::mt19937_64& rng,
                                                    std::size_t count);
std::vector<double> sample_dl(const DLParams& p, std::mt19937_64& rng, std::size_t count);

// Log-likelihood and its derivatives for a sample of magnitudes.
struct DLLikelihood {
  double value;
  double d_eta;
  double d_f;
  double d_eta_eta;
  double d_eta_f;
  double d_f_f;
};
DLLikelihood dl_log_likelihood(std::span<const double> coeffs, double eta, double f);

// Relative residual |eta * sum((f+1)|x| / (f + eta|x|)) - M| / M of the
// eta stationarity condition.
double eta_fixed_point_residual(std::span<const double> coeffs, double eta, double f);

struct EtaFitOptions {
  double tol = 1e-8;
  int max_iter = 500;
  double eta0 = 1.0;
};

// Fixed-point iteration for the ML scale at a given shape, damped by 0.5
// once the iterates start to oscillate. Throws DegenerateDataError for
// all-zero input and ConvergenceError (carrying the last iterate) when
// max_iter is exhausted.
double fit_eta(std::span<const double> coeffs, double f_hat, const EtaFitOptions& options = {});
double fit_eta(std::span<const double> coeffs, double f_hat, double tol, int max_iter);

struct ShapeFitOptions {
  double tol = 1e-8;
  int max_iter = 200;
  double f_min = 1e-3;
  double f_max = 1e3;
  double f0 = 3.0;
};

struct ShapeFit {
  DLParams params{1.0, 1.0};
  // Set when the likelihood kept increasing towards f_min or f_max.
  bool at_boundary = false;
  int iterations = 0;
  double grad_f = 0.0;
  double eta_residual = 0.0;
  double log_likelihood = 0.0;
};

// Joint ML fit: eta from the fixed point at each f, f from a bracketed
// Newton-Raphson step on the profile likelihood (bisection when the step
// leaves the bracket).
ShapeFit fit_shape(std::span<const double> coeffs, const ShapeFitOptions& options = {});
ShapeFit fit_shape(std::span<const double> coeffs, double tol, int max_iter);

}  // namespace onebit
