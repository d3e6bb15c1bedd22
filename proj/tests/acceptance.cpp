// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance [--only N]... [--skip N]...
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "onebit/bench.hpp"
#include "onebit/copula.hpp"
#include "onebit/dlomax.hpp"
#include "onebit/measurement.hpp"
#include "onebit/vb.hpp"
#include "onebit/wavelet.hpp"

using namespace onebit;

namespace {

// ---- tolerances
constexpr int kRoundTripImages = 1000;
constexpr double kRoundTripTol = 1e-10;
constexpr double kRoundTripSeconds = 10.0;
constexpr double kCdfPdfRelTol = 1e-6;
constexpr std::size_t kKsSamples = 100000;
constexpr double kKsTol = 0.01;
constexpr std::size_t kFitSamples = 100000;
constexpr int kFitSeeds = 10;
constexpr double kEtaLo = 1.9, kEtaHi = 2.1, kShapeLo = 2.7, kShapeHi = 3.3;
constexpr double kEtaResidualTol = 1e-8;
constexpr double kCopulaMassTol = 1e-3;
constexpr int kVineMatrices = 100;
constexpr double kVineRelTol = 1e-8;
constexpr double kMomentRelTol = 1e-8;
constexpr int kBoundProblems = 20;
constexpr double kBoundSlack = 1e-6;
constexpr int kRecoverySeeds = 20;
constexpr double kSignConsistencyMin = 0.95;
constexpr double kRate6GapMin = 0.5;

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median_of(std::vector<double> v) { return median(std::move(v)); }

// ------------------------------------------------------------------ 1

Outcome wavelet_round_trip() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> side(1, 8);
  std::uniform_real_distribution<double> pixel(-1.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int k = 0; k < kRoundTripImages; ++k) {
    const int rows = 8 * side(rng), cols = 8 * side(rng);
    const int levels = 1 + k % 3;
    const auto filter = k % 2 ? WaveletFilter::Daubechies4 : WaveletFilter::Haar;
    Grid img(rows, cols);
    for (auto& v : img.reshaped()) v = pixel(rng);
    const Grid back = synthesize(analyze(img, levels, filter), filter);
    worst = std::max(worst, (back - img).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst < kRoundTripTol && secs < kRoundTripSeconds,
          fmt("max err %.2e over %d images, %.2f s", worst, kRoundTripImages, secs)};
}

// ------------------------------------------------------------------ 2

Outcome dl_consistency() {
  double worst_fd = 0.0, worst_ks = 0.0;
  std::uint64_t seed = 10;
  for (double eta : {0.5, 2.0, 8.0}) {
    for (double f : {0.5, 3.0, 10.0}) {
      const DLParams p(eta, f);
      // Five-point stencil on a grid in units of 1/eta, away from the kink at 0.
      for (double u = -20.0; u <= 20.0; u += 0.37) {
        if (std::abs(u) < 0.05) continue;
        const double x = u / eta, h = 1e-3 / eta;
        const double fd = (-dl_cdf(x + 2 * h, p) + 8 * dl_cdf(x + h, p) - 8 * dl_cdf(x - h, p) +
                           dl_cdf(x - 2 * h, p)) /
                          (12 * h);
        worst_fd = std::max(worst_fd, std::abs(fd - dl_pdf(x, p)) / dl_pdf(x, p));
      }
      std::mt19937_64 rng(seed++);
      const auto draws = sample_hierarchical(p, rng, kKsSamples);
      std::vector<double> xs;
      xs.reserve(draws.size());
      for (const auto& d : draws) xs.push_back(d.x);
      std::sort(xs.begin(), xs.end());
      double ks = 0.0;
      const double n = static_cast<double>(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = dl_cdf(xs[i], p);
        ks = std::max({ks, std::abs(F - i / n), std::abs((i + 1) / n - F)});
      }
      worst_ks = std::max(worst_ks, ks);
    }
  }
  return {worst_fd < kCdfPdfRelTol && worst_ks < kKsTol,
          fmt("max cdf' rel err %.2e, max KS %.4f", worst_fd, worst_ks)};
}

// ------------------------------------------------------------------ 3

Outcome estimator_consistency() {
  std::vector<double> etas, fs;
  double worst_residual = 0.0;
  for (int s = 0; s < kFitSeeds; ++s) {
    std::mt19937_64 rng(100 + s);
    const auto xs = sample_dl(DLParams(2.0, 3.0), rng, kFitSamples);
    const auto fit = fit_shape(xs);
    etas.push_back(fit.params.eta());
    fs.push_back(fit.params.f());
    worst_residual = std::max(worst_residual, fit.eta_residual);
  }
  const double eta = median_of(etas), f = median_of(fs);
  return {eta >= kEtaLo && eta <= kEtaHi && f >= kShapeLo && f <= kShapeHi &&
              worst_residual < kEtaResidualTol,
          fmt("median eta %.4f, f %.4f, max residual %.2e", eta, f, worst_residual)};
}

// ------------------------------------------------------------------ 4

double copula_mass(double rho) {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, rho, rho, 1.0;
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto inner = [&](double v1) {
    return GK::integrate(
        [&](double v2) {
          const double u[] = {normal_cdf(v1), normal_cdf(v2)};
          if (u[0] <= 0.0 || u[0] >= 1.0 || u[1] <= 0.0 || u[1] >= 1.0) return 0.0;
          return gaussian_copula_density(u, sigma) * c * std::exp(-0.5 * v1 * v1) * c *
                 std::exp(-0.5 * v2 * v2);
        },
        -8.0, 8.0, 15, 1e-11);
  };
  return GK::integrate(inner, -8.0, 8.0, 15, 1e-11);
}

Outcome copula_correctness() {
  double worst_mass = 0.0;
  for (double rho : {0.0, 0.5, 0.9}) worst_mass = std::max(worst_mass, std::abs(copula_mass(rho) - 1.0));

  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u01(0.005, 0.995);
  double worst_rel = 0.0;
  for (int d : {3, 4}) {
    for (int k = 0; k < kVineMatrices; ++k) {
      Eigen::MatrixXd g(d, d + 1);
      for (auto& v : g.reshaped()) v = normal(rng);
      Eigen::MatrixXd s = g * g.transpose();
      const Eigen::VectorXd inv = s.diagonal().cwiseSqrt().cwiseInverse();
      s = (inv.asDiagonal() * s * inv.asDiagonal()).eval();
      s.diagonal().setOnes();
      const auto vine = VineStructure::from_correlation(s);
      std::vector<double> u(d), v(d);
      for (int i = 0; i < d; ++i) {
        u[i] = u01(rng);
        v[i] = probit(u[i]);
      }
      const double direct = gaussian_copula_density(u, s);
      const double via_vine = std::exp(dvine_copula_log_density(v, vine));
      worst_rel = std::max(worst_rel, std::abs(via_vine - direct) / direct);
    }
  }
  return {worst_mass < kCopulaMassTol && worst_rel < kVineRelTol,
          fmt("max |mass - 1| %.2e, max vine rel err %.2e", worst_mass, worst_rel)};
}

// ------------------------------------------------------------------ 5

// Moments of the density proportional to tau^(-1/2) exp(-(a tau + b/tau)/2),
// normalized by quadrature. Integrates in u = ln(tau / sqrt(b/a)), split
// around the peak whose width is about (ab)^(-1/4).
std::array<double, 3> gig_oracle(double a, double b) {
  const double c = std::sqrt(b / a);
  const double r = std::sqrt(a * b);
  const double w = 1.0 / std::sqrt(std::sqrt(a * b));
  auto integral = [&](auto g) {
    auto fn = [&](double u) {
      // log of q(tau) dtau/du relative to its value at u = 0
      const double log_q = 0.5 * u - r * (std::cosh(u) - 1.0);
      return std::exp(log_q) * g(c * std::exp(u));
    };
    const double inner = std::min(12.0 * w, 40.0);
    double total = GK::integrate(fn, -inner, inner, 20, 1e-13);
    if (inner < 40.0) total += GK::integrate(fn, -40.0, -inner, 20, 1e-13) + GK::integrate(fn, inner, 40.0, 20, 1e-13);
    return total;
  };
  const double z = integral([](double) { return 1.0; });
  return {z, integral([](double tau) { return tau; }) / z, integral([](double tau) { return 1.0 / tau; }) / z};
}

double rayleigh_second_moment(double tau_mean) {
  // q(lambda) proportional to lambda exp(-lambda^2 <tau> / 2)
  const double s = 1.0 / std::sqrt(tau_mean);
  auto integral = [&](auto g) {
    return GK::integrate([&](double u) { return u * std::exp(-0.5 * u * u) * g(s * u); }, 0.0, 40.0, 20, 1e-13);
  };
  return integral([](double l) { return l * l; }) / integral([](double) { return 1.0; });
}

Outcome moments() {
  double worst = 0.0;
  for (int i = -4; i <= 4; ++i) {
    for (int j = -4; j <= 4; ++j) {
      for (double frac : {0.0, 0.5}) {
        const double a = std::pow(10.0, i + frac), b = std::pow(10.0, j);
        if (a > 1e4) continue;
        const auto closed = gig_half_moments(a, b);
        const auto q = gig_oracle(a, b);
        worst = std::max(worst, std::abs(closed.tau_mean - q[1]) / q[1]);
        worst = std::max(worst, std::abs(closed.tau_inv_mean - q[2]) / q[2]);
        VBState s;
        s.tau_mean = Eigen::VectorXd::Constant(1, closed.tau_mean);
        update_lambda(s);
        const double lsq = rayleigh_second_moment(closed.tau_mean);
        worst = std::max(worst, std::abs(s.lambda_sq_mean[0] - lsq) / lsq);
      }
    }
  }
  return {worst < kMomentRelTol, fmt("max rel err %.2e over a log grid of (a, b) in [1e-4, 1e4]", worst)};
}

// ------------------------------------------------------------------ 6, 7

struct SmallProblem {
  PyramidLayout layout;
  Eigen::VectorXd x;
  Eigen::MatrixXd A;
  SignVector t;
};

SmallProblem model_problem(int rate, std::uint64_t seed) {
  SmallProblem p;
  p.layout = PyramidLayout(8, 8, 2);
  p.x = synthesize_model_pyramid(8, 8, seed).coefficients();
  p.A = generate_matrix(rate * 64, 64, seed ^ 0xabcdefULL);
  p.t = measure(p.A, p.x, 0.0, 0);
  return p;
}

Outcome bound_monotonicity() {
  int plain_failures = 0, copula_failures = 0, errors = 0;
  double worst_drop = 0.0;
  for (int s = 0; s < kBoundProblems; ++s) {
    const auto p = model_problem(4, 500 + s);
    try {
      RecoveryConfig cfg;
      cfg.copula_enabled = false;
      const auto plain = recover(p.t, p.A, p.layout, cfg);
      bool ok = true;
      for (std::size_t k = 1; k < plain.trace.size(); ++k) {
        const double drop = plain.trace[k - 1].bound_value - plain.trace[k].bound_value;
        if (drop > 0.0) {
          ok = false;
          worst_drop = std::max(worst_drop, drop / std::abs(plain.trace[k - 1].bound_value));
        }
      }
      plain_failures += ok ? 0 : 1;

      cfg.copula_enabled = true;
      cfg.bound_slack = kBoundSlack;
      const auto coupled = recover(p.t, p.A, p.layout, cfg);
      copula_failures += coupled.bound_violations > 0 ? 1 : 0;
    } catch (const Error&) {
      ++errors;
    }
  }
  return {plain_failures == 0 && copula_failures == 0 && errors == 0,
          fmt("non-monotone without copula: %d/%d (worst rel drop %.2e); with copula: %d/%d; errors %d",
              plain_failures, kBoundProblems, worst_drop, copula_failures, kBoundProblems, errors)};
}

Outcome noiseless_recovery() {
  std::vector<double> consistency;
  int errors = 0;
  for (int s = 0; s < kRecoverySeeds; ++s) {
    const auto p = model_problem(6, 900 + s);
    try {
      RecoveryConfig cfg;
      const auto r = recover(p.t, p.A, p.layout, cfg);
      consistency.push_back(sign_consistency(p.A, r.x_hat, p.t));
    } catch (const Error&) {
      ++errors;
      consistency.push_back(0.0);
    }
  }
  const double med = median_of(consistency);
  return {med >= kSignConsistencyMin,
          fmt("median sign consistency %.4f (min %.4f, errors %d)", med,
              *std::min_element(consistency.begin(), consistency.end()), errors)};
}

// ------------------------------------------------------------------ 8

Outcome sweep_trend() {
  ExperimentSpec spec;  // model image, 32x32 (m = 1024), rates 2..6, 20 trials
  spec.output_dir = std::filesystem::temp_directory_path() / "onebit_acceptance_sweep";
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_sweep(spec);
  const double secs = seconds_since(t0);
  std::filesystem::create_directories(spec.output_dir);
  {
    std::ofstream os(spec.output_dir / "results.csv");
    write_results_csv(os, rows);
  }
  const auto summary = summarize(rows);
  auto med = [&](const std::string& alg, double rate) {
    for (const auto& r : summary)
      if (r.algorithm == alg && r.rate == rate) return r.median_snr_db;
    return std::nan("");
  };
  int failures = 0;
  for (const auto& r : rows) failures += r.ok ? 0 : 1;

  bool increasing = true, dominates = true, beats_biht = true;
  std::ostringstream table;
  for (std::size_t i = 0; i < spec.rates.size(); ++i) {
    const double rate = spec.rates[i];
    const double dg = med("dgvc-mdl", rate), ab = med("vb-ablation", rate), bi = med("biht", rate);
    table << fmt(" r%g:%.2f/%.2f/%.2f", rate, dg, ab, bi);
    if (i > 0 && !(dg > med("dgvc-mdl", spec.rates[i - 1]))) increasing = false;
    if (rate >= 4 && !(dg >= ab)) dominates = false;
    if (!(dg > bi && ab > bi)) beats_biht = false;
  }
  const double gap6 = med("dgvc-mdl", 6) - med("vb-ablation", 6);
  const bool pass = failures == 0 && increasing && dominates && gap6 >= kRate6GapMin && beats_biht;
  return {pass, fmt("(a) %s (b) %s, rate-6 gap %.2f dB (c) %s; failed cells %d; %.0f s; median dB dgvc/ablation/biht:",
                    increasing ? "ok" : "no", dominates ? "ok" : "no", gap6, beats_biht ? "ok" : "no",
                    failures, secs) +
                    table.str()};
}

// ------------------------------------------------------------------ 9

Outcome determinism() {
  ExperimentSpec spec;
  spec.rows = 16;
  spec.cols = 16;
  spec.rates = {2, 3};
  spec.trials = 2;
  spec.max_iter = 5;
  spec.sigma_n = 0.1;
  spec.noise_relative = true;
  spec.output_dir = std::filesystem::temp_directory_path() / "onebit_acceptance_det";
  auto csv = [&](int workers) {
    auto rows = run_sweep(spec, workers);
    for (auto& r : rows) r.wall_ms = 0.0;
    std::ostringstream os;
    write_results_csv(os, rows);
    return os.str();
  };
  const auto a = csv(1), b = csv(1), c = csv(2);
  return {a == b && a == c, fmt("%zu bytes; repeat %s, two workers %s", a.size(),
                                a == b ? "identical" : "differs", a == c ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, skip;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    const int n = std::atoi(argv[i + 1]);
    if (flag == "--only") only.insert(n);
    else if (flag == "--skip") skip.insert(n);
    else {
      std::fprintf(stderr, "usage: acceptance [--only N] [--skip N]\n");
      return 2;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"wavelet round trip", wavelet_round_trip},
      {"double-Lomax consistency", dl_consistency},
      {"estimator consistency", estimator_consistency},
      {"copula correctness", copula_correctness},
      {"GIG/Rayleigh moments", moments},
      {"bound monotonicity", bound_monotonicity},
      {"noiseless recovery quality", noiseless_recovery},
      {"oversampling sweep trend", sweep_trend},
      {"determinism", determinism},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if ((!only.empty() && !only.contains(id)) || skip.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %d %s: %s  %s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
