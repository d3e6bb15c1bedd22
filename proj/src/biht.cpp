#include "onebit/biht.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "onebit/error.hpp"
#include "onebit/simd.hpp"

namespace onebit {

namespace {

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<double> view(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

std::vector<Eigen::Index> by_magnitude(const Eigen::VectorXd& x) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(x[a]) > std::abs(x[b]); });
  return order;
}

Eigen::VectorXd product(const Eigen::MatrixXd& A, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(A.rows());
  simd::gemv(A.data(), static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols()),
             view(x), view(y));
  return y;
}

}  // namespace

void BihtConfig::validate() const {
  if (sparsity_k < 1) throw DomainError("sparsity_k must be >= 1");
  if (!(step > 0.0)) throw DomainError("step must be positive");
  if (max_iter < 1) throw DomainError("max_iter must be >= 1");
}

Eigen::VectorXd hard_threshold(const Eigen::VectorXd& x, int k) {
  if (k < 0 || k > x.size()) throw RangeError("k outside [0, m]");
  if (k == x.size()) return x;
  const auto order = by_magnitude(x);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (int i = 0; i < k; ++i) out[order[static_cast<std::size_t>(i)]] = x[order[static_cast<std::size_t>(i)]];
  return out;
}

std::size_t sign_mismatches(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, const SignVector& t) {
  const Eigen::VectorXd y = product(A, x);
  return t.size() - simd::count_sign_agree(view(y), t);
}

Eigen::VectorXd biht_step(const Eigen::MatrixXd& A, const SignVector& t, const Eigen::VectorXd& x,
                          int k, double step) {
  const Eigen::VectorXd y = product(A, x);
  Eigen::VectorXd r(A.rows());
  simd::sign_residual(view(y), t, view(r));
  Eigen::VectorXd g(A.cols());
  simd::gemv_t(A.data(), static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols()),
               view(r), view(g));
  return hard_threshold(x + 0.5 * step * g, k);
}

BihtResult biht_recover(const SignVector& t, const Eigen::MatrixXd& A, const BihtConfig& config,
                        const std::optional<Eigen::VectorXd>& start) {
  config.validate();
  if (static_cast<std::size_t>(A.rows()) != t.size()) throw DimensionError("A rows and t length differ");
  if (config.sparsity_k > A.cols()) throw RangeError("sparsity_k exceeds the signal dimension");
  if (start && start->size() != A.cols()) throw DimensionError("start has the wrong length");
  const int k = config.sparsity_k;

  Eigen::VectorXd x;
  if (start) {
    x = hard_threshold(*start, k);
  } else {
    Eigen::VectorXd g(A.cols());
    const Eigen::VectorXd s = signed_measurements(t);
    simd::gemv_t(A.data(), static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols()),
                 view(s), view(g));
    x = hard_threshold(g, k);
    const double norm = x.norm();
    if (norm > 0.0) x /= norm;
  }

  BihtResult result;
  std::size_t hamming = sign_mismatches(A, x, t);
  int iter = 0;
  while (iter < config.max_iter && hamming > 0) {
    ++iter;
    double step = config.step;
    Eigen::VectorXd next = biht_step(A, t, x, k, step);
    std::size_t next_hamming = sign_mismatches(A, next, t);
    if (config.step_halving) {
      int halvings = 0;
      while (next_hamming > hamming && halvings < config.max_halvings) {
        step *= 0.5;
        ++halvings;
        next = biht_step(A, t, x, k, step);
        next_hamming = sign_mismatches(A, next, t);
      }
      if (next_hamming > hamming) break;  // no acceptable step left
    }
    if (next == x) break;
    x = std::move(next);
    hamming = next_hamming;
  }

  const double norm = x.norm();
  if (!(norm > 0.0)) throw DegenerateDataError("BIHT iterate collapsed to zero");
  result.x = x / norm;
  result.iterations = iter;
  result.hamming = hamming;
  return result;
}

int energy_support(const Eigen::VectorXd& x, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("fraction must lie in (0, 1]");
  const double total = x.squaredNorm();
  if (!(total > 0.0)) throw DegenerateDataError("signal is zero");
  const auto order = by_magnitude(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    acc += x[order[i]] * x[order[i]];
    if (acc >= fraction * total) return static_cast<int>(i + 1);
  }
  return static_cast<int>(x.size());
}

}  // namespace onebit
