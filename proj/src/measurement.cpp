#include "onebit/measurement.hpp"

#include <cmath>
#include <random>

#include "onebit/error.hpp"
#include "onebit/simd.hpp"

namespace onebit {

namespace {

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

Eigen::MatrixXd generate_matrix(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw DimensionError("matrix dims must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, m);
  for (int j = 0; j < m; ++j) {
    double* col = a.col(j).data();
    for (int i = 0; i < n; ++i) col[i] = normal(rng);
    const double norm = std::sqrt(simd::sum_squares({col, static_cast<std::size_t>(n)}));
    for (int i = 0; i < n; ++i) col[i] /= norm;
  }
  return a;
}

SignVector measure(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, double sigma_n,
                   std::uint64_t seed, Eigen::VectorXd* y_out) {
  if (A.cols() != x.size()) throw DimensionError("A has " + std::to_string(A.cols()) +
                                                 " columns but x has " +
                                                 std::to_string(x.size()) + " entries");
  if (sigma_n < 0.0) throw DomainError("noise level must be non-negative");
  const auto n = static_cast<std::size_t>(A.rows());
  Eigen::VectorXd y(A.rows());
  simd::gemv(A.data(), n, static_cast<std::size_t>(A.cols()), view(x), {y.data(), n});
  if (sigma_n > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma_n);
    for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] += normal(rng);
  }
  SignVector t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = y[static_cast<Eigen::Index>(i)] >= 0.0 ? 1 : 0;
  if (y_out != nullptr) *y_out = std::move(y);
  return t;
}

SignVector measure(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, double sigma_n,
                   std::uint64_t seed) {
  return measure(A, x, sigma_n, seed, nullptr);
}

MeasurementEnsemble make_ensemble(int n, const Eigen::VectorXd& x, double sigma_n,
                                  std::uint64_t seed) {
  MeasurementEnsemble ens;
  ens.seed = seed;
  ens.sigma_n = sigma_n;
  ens.A = generate_matrix(n, static_cast<int>(x.size()), seed);
  // Distinct stream for the noise so A does not depend on sigma_n.
  ens.t = measure(ens.A, x, sigma_n, seed ^ 0x9e3779b97f4a7c15ULL);
  return ens;
}

Eigen::VectorXd signed_measurements(const SignVector& t) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) s[static_cast<Eigen::Index>(i)] = t[i] ? 1.0 : -1.0;
  return s;
}

double reconstruction_snr(const Eigen::VectorXd& x_true, const Eigen::VectorXd& x_hat) {
  if (x_true.size() != x_hat.size()) throw DimensionError("signal lengths differ");
  const double norm = x_true.norm();
  if (!(norm > 0.0)) throw DegenerateDataError("true signal is zero");
  if (std::abs(x_hat.norm() - 1.0) > 1e-9) throw DomainError("estimate must be unit-norm");
  const Eigen::VectorXd bar = x_true / norm;
  const double err = (bar - x_hat).squaredNorm();
  if (err <= 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(bar.squaredNorm() / err));
}

double sign_consistency(const Eigen::MatrixXd& A, const Eigen::VectorXd& x_hat,
                        const SignVector& t) {
  if (A.cols() != x_hat.size() || static_cast<std::size_t>(A.rows()) != t.size())
    throw DimensionError("sign_consistency dimension mismatch");
  const auto n = static_cast<std::size_t>(A.rows());
  Eigen::VectorXd y(A.rows());
  simd::gemv(A.data(), n, static_cast<std::size_t>(A.cols()), view(x_hat), {y.data(), n});
  const auto agree = simd::count_sign_agree({y.data(), n}, t);
  return static_cast<double>(agree) / static_cast<double>(n);
}

}  // namespace onebit
