#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "onebit/biht.hpp"
#include "onebit/error.hpp"

using namespace onebit;

namespace {

Eigen::VectorXd sparse_signal(int m, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < k; ++i) x[idx[i]] = normal(rng);
  return x / x.norm();
}

}  // namespace

TEST_CASE("hard threshold") {
  const Eigen::VectorXd x = Eigen::Vector4d(0.1, -3.0, 2.0, 0.5);
  CHECK(hard_threshold(x, 2) == Eigen::Vector4d(0.0, -3.0, 2.0, 0.0));
  CHECK(hard_threshold(x, 4) == x);
  CHECK(hard_threshold(x, 0).isZero());
  // Ties keep the lower index.
  CHECK(hard_threshold(Eigen::Vector3d(1.0, -1.0, 1.0), 1) == Eigen::Vector3d(1.0, 0.0, 0.0));
  CHECK_THROWS_AS(hard_threshold(x, 5), RangeError);
}

TEST_CASE("consistent sparse iterate is a fixed point") {
  const int m = 32, n = 200, k = 4;
  const auto x = sparse_signal(m, k, 1);
  const auto A = generate_matrix(n, m, 2);
  const auto t = measure(A, x, 0.0, 0);
  CHECK(sign_mismatches(A, x, t) == 0);
  CHECK(biht_step(A, t, x, k, 1.0) == x);
  BihtConfig cfg;
  cfg.sparsity_k = k;
  const auto r = biht_recover(t, A, cfg, x);
  CHECK(r.iterations == 0);
  CHECK(r.hamming == 0);
  CHECK((r.x - x).norm() < 1e-12);
}

TEST_CASE("output is k-sparse and unit norm; Hamming never rises") {
  const int m = 64, n = 384, k = 6;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = sparse_signal(m, k, 100 + seed);
    const auto A = generate_matrix(n, m, 200 + seed);
    const auto t = measure(A, x, 0.0, 0);
    BihtConfig cfg;
    cfg.sparsity_k = k;
    const auto r = biht_recover(t, A, cfg);
    CHECK(r.x.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((r.x.array() != 0.0).count() <= k);

    // Replay the iteration to watch the Hamming distance.
    Eigen::VectorXd it = hard_threshold(A.transpose() * signed_measurements(t), k);
    it /= it.norm();
    std::size_t h = sign_mismatches(A, it, t);
    for (int i = 0; i < 50 && h > 0; ++i) {
      cfg.max_iter = i + 1;
      const auto partial = biht_recover(t, A, cfg);
      CHECK(partial.hamming <= h);
      h = partial.hamming;
    }
  }
}

TEST_CASE("k = m disables thresholding") {
  const int m = 16, n = 64;
  const auto A = generate_matrix(n, m, 7);
  const auto x = sparse_signal(m, m, 8);
  const auto t = measure(A, x, 0.0, 0);
  BihtConfig cfg;
  cfg.sparsity_k = m;
  const auto r = biht_recover(t, A, cfg);
  CHECK((r.x.array() != 0.0).count() > 1);
  cfg.sparsity_k = m + 1;
  CHECK_THROWS_AS(biht_recover(t, A, cfg), RangeError);
  cfg.sparsity_k = 0;
  CHECK_THROWS_AS(biht_recover(t, A, cfg), DomainError);
}

TEST_CASE("sparse recovery is sign consistent") {
  const int m = 64, n = 6 * m, k = 4;
  std::vector<double> consistency;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = sparse_signal(m, k, 1000 + seed);
    const auto A = generate_matrix(n, m, 2000 + seed);
    const auto t = measure(A, x, 0.0, 0);
    BihtConfig cfg;
    cfg.sparsity_k = k;
    consistency.push_back(sign_consistency(A, biht_recover(t, A, cfg).x, t));
  }
  std::sort(consistency.begin(), consistency.end());
  CHECK((consistency[9] + consistency[10]) / 2.0 >= 0.9);
}

TEST_CASE("energy support") {
  CHECK(energy_support(Eigen::Vector4d(0.0, 3.0, 0.0, 4.0), 1.0) == 2);
  CHECK(energy_support(Eigen::Vector4d(0.0, 3.0, 0.0, 4.0), 0.6) == 1);
  CHECK(energy_support(Eigen::Vector4d(1.0, 1.0, 1.0, 1.0), 0.95) == 4);
  CHECK_THROWS_AS(energy_support(Eigen::Vector2d::Zero()), DegenerateDataError);
  CHECK_THROWS_AS(energy_support(Eigen::Vector2d::Ones(), 0.0), DomainError);
}
