#pragma once

// Binary iterative hard thresholding baseline.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>

#include "onebit/measurement.hpp"

namespace onebit {

struct BihtConfig {
  int sparsity_k = 1;
  double step = 1.0;
  int max_iter = 500;
  // Halve the step (and retry) whenever a step would raise the number of
  // sign mismatches; the step is restored after an accepted iteration.
  bool step_halving = true;
  int max_halvings = 30;

  // DomainError unless k >= 1, step > 0, max_iter >= 1.
  void validate() const;
};

struct BihtResult {
  Eigen::VectorXd x;  // unit norm
  int iterations = 0;
  std::size_t hamming = 0;  // sign mismatches of the final iterate
};

// Keeps the k largest-magnitude entries (ties go to the lower index).
Eigen::VectorXd hard_threshold(const Eigen::VectorXd& x, int k);

// Number of i with sign(a_i' x) != 2 t_i - 1, sign(0) = +1.
std::size_t sign_mismatches(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, const SignVector& t);

// One unguarded iteration x <- H_k(x + step/2 A'((2t - 1) - sign(Ax))).
Eigen::VectorXd biht_step(const Eigen::MatrixXd& A, const SignVector& t, const Eigen::VectorXd& x,
                          int k, double step);

// Starts from H_k(A'(2t - 1)) unless `start` is given. Throws RangeError for
// k > m and DimensionError when A, t (and start) disagree.
BihtResult biht_recover(const SignVector& t, const Eigen::MatrixXd& A, const BihtConfig& config,
                        const std::optional<Eigen::VectorXd>& start = std::nullopt);

// Smallest k whose largest-magnitude entries carry `fraction` of the energy.
int energy_support(const Eigen::VectorXd& x, double fraction = 0.95);

}  // namespace onebit
