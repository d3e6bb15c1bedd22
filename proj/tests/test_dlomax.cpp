#include <doctest.h>

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "onebit/dlomax.hpp"
#include "onebit/error.hpp"

using namespace onebit;

namespace {

double ks_distance(std::vector<double> xs, const DLParams& p) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = dl_cdf(xs[i], p);
    d = std::max({d, std::abs(F - i / n), std::abs((i + 1) / n - F)});
  }
  return d;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(DLParams(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(DLParams(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(DLParams(std::nan(""), 1.0), DomainError);
  CHECK_NOTHROW(DLParams(2.0, 3.0));
}

TEST_CASE("pdf closed form, symmetry and normalization") {
  const DLParams p(2.0, 3.0);
  CHECK(dl_pdf(0.0, p) == doctest::Approx(1.0));
  CHECK(dl_pdf(1.5, p) == doctest::Approx(1.0 * std::pow(1.0 + 2.0 * 1.5 / 3.0, -4.0)).epsilon(1e-14));
  CHECK(dl_pdf(-0.7, p) == dl_pdf(0.7, p));
  CHECK(dl_log_pdf(0.9, p) == doctest::Approx(std::log(dl_pdf(0.9, p))).epsilon(1e-14));
  for (double eta : {0.5, 2.0, 8.0})
    for (double f : {0.5, 3.0, 10.0}) {
      const DLParams q(eta, f);
      const double lim = 50.0 * f / eta;
      double err = 0.0;
      const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double x) { return dl_pdf(x, q); }, -lim, lim, 25, 1e-13, &err);
      // Exact tail mass outside the window, (1 + 50)^-f.
      const double inside = 1.0 - std::pow(51.0, -f);
      CAPTURE(eta);
      CAPTURE(f);
      CHECK(std::abs(integral - inside) < 1e-8);
      if (f >= 3.0) CHECK(std::abs(integral - 1.0) < 1e-4);
    }
}

TEST_CASE("cdf limits, symmetry, quadrature and finite differences") {
  const DLParams p(2.0, 3.0);
  CHECK(dl_cdf(0.0, p) == 0.5);
  CHECK(dl_cdf(1e12, p) == doctest::Approx(1.0));
  CHECK(dl_cdf(-1e12, p) == doctest::Approx(0.0));
  CHECK(dl_cdf(-0.3, p) == doctest::Approx(1.0 - dl_cdf(0.3, p)).epsilon(1e-15));
  // Split at the kink: (-inf, 0] by exp-sinh, [0, 1] by Gauss-Kronrod.
  const double below =
      boost::math::quadrature::exp_sinh<double>().integrate([&](double s) { return dl_pdf(-s, p); }) +
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate([&](double x) { return dl_pdf(x, p); },
                                                                    0.0, 1.0);
  CHECK(std::abs(dl_cdf(1.0, p) - below) < 1e-8);
  for (double eta : {0.5, 2.0, 8.0})
    for (double f : {0.5, 3.0, 10.0}) {
      const DLParams q(eta, f);
      for (double x : {-5.0, -1.0, -0.2, 0.05, 0.3, 1.0, 4.0}) {
        const double t = x / eta;
        const double h = 1e-5 * std::max(std::abs(t), 1e-3);
        const double fd = (dl_cdf(t + h, q) - dl_cdf(t - h, q)) / (2 * h);
        CHECK(std::abs(fd - dl_pdf(t, q)) < 1e-6 * dl_pdf(t, q));
      }
    }
  double prev = 0.0;
  for (double t = -20; t <= 20; t += 0.37) {
    const double F = dl_cdf(t, p);
    CHECK(F >= prev);
    prev = F;
  }
  CHECK(dl_tail(5.0, p) == doctest::Approx(1.0 - dl_cdf(5.0, p)).epsilon(1e-12));
  CHECK(dl_tail(-5.0, p) == doctest::Approx(dl_cdf(-5.0, p)).epsilon(1e-12));
}

TEST_CASE("inverse cdf round trip") {
  const DLParams p(2.0, 3.0);
  CHECK(dl_inverse_cdf(0.5, p) == 0.0);
  CHECK(dl_inverse_cdf(0.25, p) < 0.0);
  CHECK(dl_inverse_cdf(0.9, p) > 0.0);
  for (double u : {1e-12, 1e-6, 0.01, 0.25, 0.4999, 0.9, 0.999999})
    CHECK(std::abs(dl_cdf(dl_inverse_cdf(u, p), p) - u) < 1e-12);
  CHECK_THROWS_AS(dl_inverse_cdf(0.0, p), DomainError);
  CHECK_THROWS_AS(dl_inverse_cdf(1.0, p), DomainError);
  CHECK_THROWS_AS(dl_inverse_cdf(1.5, p), DomainError);
}

TEST_CASE("hierarchical sampler") {
  const DLParams p(1.0, 3.0);
  std::mt19937_64 rng(11);
  const auto draws = sample_hierarchical(p, rng, 100000);
  std::vector<double> xs;
  double sum = 0.0, sq = 0.0;
  for (const auto& d : draws) {
    xs.push_back(d.x);
    sum += d.x;
    sq += d.x * d.x;
    CHECK(d.tau > 0.0);
    CHECK(d.lambda > 0.0);
  }
  CHECK(ks_distance(xs, p) < 0.01);
  const double n = static_cast<double>(xs.size());
  const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(n));

  // eta rescaling keeps the hierarchy consistent: E[tau] = E[2 / lambda^2].
  std::mt19937_64 rng2(3);
  const auto scaled = sample_hierarchical(DLParams(4.0, 3.0), rng2, 100000);
  std::vector<double> ys;
  for (const auto& d : scaled) ys.push_back(d.x);
  CHECK(ks_distance(ys, DLParams(4.0, 3.0)) < 0.01);

  std::mt19937_64 a(99), b(99);
  CHECK(sample_dl(p, a, 1000) == sample_dl(p, b, 1000));
}

TEST_CASE("log-likelihood derivatives match finite differences") {
  std::mt19937_64 rng(2);
  const auto xs = sample_dl(DLParams(2.0, 3.0), rng, 500);
  const double eta = 1.7, f = 2.6, h = 1e-5;
  const auto L = dl_log_likelihood(xs, eta, f);
  auto val = [&](double e, double ff) { return dl_log_likelihood(xs, e, ff).value; };
  double direct = 0.0;
  for (double x : xs) direct += dl_log_pdf(x, DLParams(eta, f));
  CHECK(L.value == doctest::Approx(direct).epsilon(1e-12));
  CHECK(L.d_eta == doctest::Approx((val(eta + h, f) - val(eta - h, f)) / (2 * h)).epsilon(1e-6));
  CHECK(L.d_f == doctest::Approx((val(eta, f + h) - val(eta, f - h)) / (2 * h)).epsilon(1e-6));
  auto deta = [&](double e, double ff) { return dl_log_likelihood(xs, e, ff).d_eta; };
  auto df = [&](double e, double ff) { return dl_log_likelihood(xs, e, ff).d_f; };
  CHECK(L.d_eta_eta == doctest::Approx((deta(eta + h, f) - deta(eta - h, f)) / (2 * h)).epsilon(1e-5));
  CHECK(L.d_eta_f == doctest::Approx((deta(eta, f + h) - deta(eta, f - h)) / (2 * h)).epsilon(1e-5));
  CHECK(L.d_f_f == doctest::Approx((df(eta, f + h) - df(eta, f - h)) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("fit_eta") {
  std::mt19937_64 rng(5);
  const auto xs = sample_dl(DLParams(2.0, 3.0), rng, 100000);
  const double eta = fit_eta(xs, 3.0);
  CHECK(eta > 1.9);
  CHECK(eta < 2.1);
  CHECK(eta_fixed_point_residual(xs, eta, 3.0) < 1e-8);

  std::vector<double> scaled;
  for (double x : xs) scaled.push_back(4.0 * x);
  CHECK(fit_eta(scaled, 3.0) == doctest::Approx(eta / 4.0).epsilon(1e-7));

  CHECK_THROWS_AS(fit_eta(std::vector<double>(10, 0.0), 3.0), DegenerateDataError);
  try {
    fit_eta(xs, 3.0, 1e-14, 1);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_iterate() > 0.0);
  }
}

TEST_CASE("fit_shape") {
  std::mt19937_64 rng(8);
  const auto xs = sample_dl(DLParams(2.0, 3.0), rng, 100000);
  const ShapeFit fit = fit_shape(xs);
  CHECK(fit.params.eta() > 1.9);
  CHECK(fit.params.eta() < 2.1);
  CHECK(fit.params.f() > 2.7);
  CHECK(fit.params.f() < 3.3);
  CHECK_FALSE(fit.at_boundary);
  CHECK(fit.eta_residual < 1e-8);
  CHECK(std::abs(fit.grad_f) < 1e-8 * xs.size());

  // Local optimality against nearby perturbations.
  std::mt19937_64 jitter(1);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  const double best = dl_log_likelihood(xs, fit.params.eta(), fit.params.f()).value;
  for (int k = 0; k < 50; ++k) {
    const double e = fit.params.eta() * (1.0 + u(jitter));
    const double f = fit.params.f() * (1.0 + u(jitter));
    CHECK(dl_log_likelihood(xs, e, f).value <= best + 1e-9 * std::abs(best));
  }
}

TEST_CASE("fit_shape on Laplace-like data hits the upper bracket") {
  // Exponential magnitudes are the f -> infinity limit.
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution coin;
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(coin(rng) ? expo(rng) : -expo(rng));
  ShapeFitOptions opt;
  opt.f_max = 50.0;
  const ShapeFit fit = fit_shape(xs, opt);
  CHECK(fit.params.f() >= 20.0);
  CHECK_THROWS_AS(fit_shape(std::vector<double>(5, 0.0)), DegenerateDataError);
}
