#pragma once

// Variational Bayes recovery of wavelet coefficients from one-bit
// measurements under the vine-copula / double-Lomax prior.
//
// Model, per coefficient j and measurement i:
//   x_j | tau_j ~ N(0, tau_j),  tau_j | lambda_j ~ Exp(lambda_j^2 / 2),
//   p(lambda_j) ~ 1 / lambda_j (the f -> 0 limit, improper),
//   n_i ~ N(0, sigma_n^2),  t_i = [a_i' x + n_i >= 0],
// with the sign likelihood replaced by the Jaakkola-Jordan bound and the
// copula entering as a quadratic penalty -x' W x / 2 frozen per sweep.
//
// Factorization q(x) q(n) prod_j q(tau_j) q(lambda_j); q(x) and q(n) are
// Gaussian, q(tau_j) is GIG(1/2, b_j, a_j), q(lambda_j) is Rayleigh. Every
// update below is the exact coordinate maximizer of the bound returned by
// evaluate_bound for a fixed CopulaTerm.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <optional>
#include <vector>

#include "onebit/copula.hpp"
#include "onebit/error.hpp"
#include "onebit/measurement.hpp"
#include "onebit/wavelet.hpp"

namespace onebit {

enum class SigmaRefit { PerIteration, Once };

struct RecoveryConfig {
  int max_iter = 300;
  double tol = 1e-6;
  double tau0 = 1e-8;
  double lambda0 = 1e-8;
  double delta0 = 1.0;
  bool copula_enabled = true;
  SigmaRefit sigma_refit = SigmaRefit::PerIteration;
  DirectionWeights direction_weights = DirectionWeights::equal_thirds();
  bool include_antidiagonal = false;
  int L = 3;
  double sigma_n = 0.0;
  bool refit_shape = true;
  double f_init = 3.0;
  double bound_slack = 1e-6;

  // Throws DomainError on non-positive initials, tol or L < 2.
  void validate() const;
};

struct VBState {
  Eigen::VectorXd mu_x;
  Eigen::MatrixXd sigma_x;
  Eigen::VectorXd tau_mean;
  Eigen::VectorXd tau_inv_mean;
  Eigen::VectorXd lambda_sq_mean;
  Eigen::VectorXd delta;
  Eigen::VectorXd mu_n;
  Eigen::VectorXd noise_var;
  int iteration = 0;

  // Cached by update_x.
  double log_det_sigma_x = 0.0;
  Eigen::VectorXd row_quad;  // a_i' Sigma_x a_i
  double ridge = 0.0;        // SPD safeguard added to the last precision
  // q(tau_j) = GIG(1/2, gig_b_j, gig_a_j), set by update_tau.
  Eigen::VectorXd gig_a;
  Eigen::VectorXd gig_b;
};

VBState initial_state(int n, int m, const RecoveryConfig& config);

// The copula penalty for one sweep: -1/2 sum_jk s_j P_jk s_k E[x_j x_k],
// except that with tau_linked_diagonal the diagonal uses <1/tau_j> in place
// of s_j^2. recover() uses s = sqrt(<1/tau>) frozen at the start of the
// sweep, so the copula acts on x_j / sqrt(tau_j) and D + W stays SPD.
struct CopulaTerm {
  Eigen::SparseMatrix<double> P;
  Eigen::VectorXd scale;
  bool tau_linked_diagonal = false;

  bool empty() const { return P.nonZeros() == 0; }
};

double jj_lambda(double delta);

// Moments of GIG(1/2, b, a), density proportional to tau^(-1/2) exp(-(a tau + b / tau) / 2).
struct GigMoments {
  double tau_mean;      // sqrt(b/a) + 1/a
  double tau_inv_mean;  // sqrt(a/b)
};
GigMoments gig_half_moments(double a, double b);

// One coefficient's share of the bound: E[ln N(x|0,tau)] + E[ln Exp(tau|lambda^2/2)]
// + E[ln p(lambda)] + H[q(tau)] + H[q(lambda)] with q(tau) = GIG(1/2, b, a),
// q(lambda) Rayleigh with <lambda^2> given, and p(lambda) = 1/lambda.
double coefficient_bound(double second_moment, double a, double b, double lambda_sq_mean);

// q(x): precision D + 2 A' Lambda_delta A + W, mean Sigma_x A'(s/2 - 2 Lambda_delta mu_n)
// with s = 2t - 1. Adds a ridge when the precision is not numerically SPD and
// throws LinearAlgebraError when that does not help.
void update_x(VBState& state, const Eigen::MatrixXd& A, const SignVector& t,
              const CopulaTerm* copula);
// Per-coordinate copula share c_j added to the GIG parameter b_j.
Eigen::VectorXd copula_share(const CopulaTerm* copula, const VBState& state);
// q(tau): GIG(1/2, b = <x^2> + c, a = <lambda^2>); <tau> = sqrt(b/a) + 1/a,
// <1/tau> = sqrt(a/b). b is clamped at 1e-12.
void update_tau(VBState& state, const Eigen::VectorXd& copula_share);
// q(lambda): Rayleigh with scale 1/sqrt(<tau>); <lambda^2> = 2 / <tau>.
void update_lambda(VBState& state);
// delta_i = sqrt(<y_i^2>), the point where the sign bound is tight.
void update_delta(VBState& state, const Eigen::MatrixXd& A);
// q(n): variance 1/(sigma_n^-2 + 2 lambda(delta)), mean var * (s/2 - 2 lambda(delta) A mu_x).
// sigma_n = 0 pins n to zero.
void update_noise(VBState& state, const Eigen::MatrixXd& A, const SignVector& t, double sigma_n);

// Evidence lower bound (up to constants that do not depend on q or delta)
// with the copula penalty of `copula`.
double evaluate_bound(const VBState& state, const Eigen::MatrixXd& A, const SignVector& t,
                      const CopulaTerm* copula, double sigma_n);

struct TraceRow {
  int iteration = 0;
  double bound_before = 0.0;  // same sweep's objective before its updates (NaN on sweep 1)
  double bound_value = 0.0;
  double eta = 0.0;  // finest detail scale
  double f = 0.0;
  double delta_mean = 0.0;
  double snr_if_known = 0.0;  // NaN when no reference signal is given
  double ridge = 0.0;
  double relative_change = 0.0;  // |mu - mu_prev| / |mu|
};

struct RecoveryResult {
  Eigen::VectorXd x_hat;  // unit norm
  std::vector<TraceRow> trace;
  VBState state;
  std::vector<DLParams> marginals;  // per detail scale, index 0 = scale 1
  std::vector<DirectionalCopula> copulas;
  int iterations = 0;
  bool converged = false;
  // Sweeps whose objective fell by more than bound_slack (relative).
  int bound_violations = 0;
};

// Numerical failure part-way through a run; carries the partial trace.
class RecoveryError : public Error {
 public:
  RecoveryError(const std::string& what, std::vector<TraceRow> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  std::vector<TraceRow> trace_;
};

RecoveryResult recover(const SignVector& t, const Eigen::MatrixXd& A, const PyramidLayout& layout,
                       const RecoveryConfig& config,
                       const Eigen::VectorXd* x_true = nullptr);

// CSV: iteration,bound_value,eta,f,delta_mean,snr_if_known
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);

}  // namespace onebit
