#pragma once

// One-bit sensing: t = sign(A x + w) with t stored as {0,1} (1 for a
// non-negative measurement, so sign(0) counts as +).

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace onebit {

using SignVector = std::vector<std::uint8_t>;

struct MeasurementEnsemble {
  Eigen::MatrixXd A;
  SignVector t;
  double sigma_n = 0.0;
  std::uint64_t seed = 0;
};

// i.i.d. N(0,1) entries, columns rescaled to unit l2 norm.
Eigen::MatrixXd generate_matrix(int n, int m, std::uint64_t seed);

// Throws DimensionError when A and x disagree.
SignVector measure(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, double sigma_n,
                   std::uint64_t seed);
// Same, also returning the pre-quantization measurements.
SignVector measure(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, double sigma_n,
                   std::uint64_t seed, Eigen::VectorXd* y_out);

MeasurementEnsemble make_ensemble(int n, const Eigen::VectorXd& x, double sigma_n,
                                  std::uint64_t seed);

// {0,1} -> {-1,+1}
Eigen::VectorXd signed_measurements(const SignVector& t);

inline constexpr double kSnrCapDb = 150.0;

// 10 log10(|xbar|^2 / |xbar - x_hat|^2) with xbar = x_true / |x_true|,
// capped at kSnrCapDb. x_hat must be unit-norm (DomainError otherwise);
// a zero x_true throws DegenerateDataError.
double reconstruction_snr(const Eigen::VectorXd& x_true, const Eigen::VectorXd& x_hat);

// Fraction of measurements whose sign under x_hat matches t.
double sign_consistency(const Eigen::MatrixXd& A, const Eigen::VectorXd& x_hat,
                        const SignVector& t);

}  // namespace onebit
