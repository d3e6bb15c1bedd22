#include "onebit/vb.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "onebit/simd.hpp"

namespace onebit {

namespace {

constexpr double kMinGigB = 1e-12;

Eigen::VectorXd signs_of(const SignVector& t) { return signed_measurements(t); }

Eigen::VectorXd times(const Eigen::MatrixXd& A, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(A.rows());
  simd::gemv(A.data(), static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols()),
             {x.data(), static_cast<std::size_t>(x.size())},
             {y.data(), static_cast<std::size_t>(y.size())});
  return y;
}

Eigen::VectorXd jj_lambdas(const Eigen::VectorXd& delta) {
  return delta.unaryExpr([](double d) { return jj_lambda(d); });
}

double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

void check_dims(const VBState& state, const Eigen::MatrixXd& A, const SignVector& t) {
  if (A.cols() != state.mu_x.size() || A.rows() != state.delta.size() ||
      static_cast<std::size_t>(A.rows()) != t.size())
    throw DimensionError("state, A and t dimensions disagree");
}

}  // namespace

void RecoveryConfig::validate() const {
  if (!(tau0 > 0.0 && lambda0 > 0.0 && delta0 > 0.0))
    throw DomainError("initial tau, lambda and delta must be positive");
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  if (max_iter < 1) throw DomainError("max_iter must be >= 1");
  if (L < 2) throw DomainError("neighborhood size must be >= 2");
  if (sigma_n < 0.0) throw DomainError("sigma_n must be non-negative");
}

VBState initial_state(int n, int m, const RecoveryConfig& config) {
  VBState s;
  s.mu_x = Eigen::VectorXd::Zero(m);
  s.sigma_x = Eigen::MatrixXd::Identity(m, m) * config.tau0;
  s.tau_mean = Eigen::VectorXd::Constant(m, config.tau0);
  s.tau_inv_mean = Eigen::VectorXd::Constant(m, 1.0 / config.tau0);
  s.lambda_sq_mean = Eigen::VectorXd::Constant(m, config.lambda0 * config.lambda0);
  s.delta = Eigen::VectorXd::Constant(n, config.delta0);
  s.mu_n = Eigen::VectorXd::Zero(n);
  s.noise_var = Eigen::VectorXd::Zero(n);
  s.row_quad = Eigen::VectorXd::Zero(n);
  s.gig_a = s.lambda_sq_mean;
  s.gig_b = Eigen::VectorXd::Constant(m, kMinGigB);
  return s;
}

double jj_lambda(double delta) {
  const double d = std::abs(delta);
  if (d < 1e-4) return 0.125 - d * d / 96.0;
  return std::tanh(0.5 * d) / (4.0 * d);
}

GigMoments gig_half_moments(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("GIG parameters must be positive");
  return {std::sqrt(b / a) + 1.0 / a, std::sqrt(a / b)};
}

double coefficient_bound(double second_moment, double a, double b, double lambda_sq_mean) {
  const GigMoments g = gig_half_moments(a, b);
  // The <ln tau> and <ln lambda> terms cancel; ln Z of the GIG is
  // ln(2 pi)/2 - ln(a)/2 - sqrt(a b), whose first part cancels the Gaussian
  // normalizer.
  return -0.5 * g.tau_inv_mean * second_moment - std::numbers::ln2 -
         0.5 * lambda_sq_mean * g.tau_mean + 1.0 + std::log(0.5 * lambda_sq_mean) -
         0.5 * std::log(a) - std::sqrt(a * b) + 0.5 * (a * g.tau_mean + b * g.tau_inv_mean);
}

void update_x(VBState& state, const Eigen::MatrixXd& A, const SignVector& t,
              const CopulaTerm* copula) {
  check_dims(state, A, t);
  const Eigen::Index m = A.cols();
  const Eigen::VectorXd lam = jj_lambdas(state.delta);

  // Lower triangle of 2 A' Lambda A + prior + copula.
  const Eigen::MatrixXd weighted = (2.0 * lam).cwiseSqrt().asDiagonal() * A;
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(m, m);
  precision.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
  precision.diagonal() += state.tau_inv_mean;
  if (copula != nullptr && !copula->empty()) {
    const auto& P = copula->P;
    for (Eigen::Index col = 0; col < P.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(P, col); it; ++it) {
        const Eigen::Index row = it.row();
        if (row < col) continue;
        if (row == col) {
          const double w = copula->tau_linked_diagonal
                               ? state.tau_inv_mean[row]
                               : copula->scale[row] * copula->scale[row];
          precision(row, row) += w * it.value();
        } else {
          precision(row, col) += copula->scale[row] * it.value() * copula->scale[col];
        }
      }
    }
  }

  const Eigen::VectorXd s = signs_of(t);
  const Eigen::VectorXd rhs = A.transpose() * (0.5 * s - 2.0 * lam.cwiseProduct(state.mu_n));

  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(precision);
  state.ridge = 0.0;
  if (llt.info() != Eigen::Success) {
    const double base = 1e-8 * precision.diagonal().mean();
    for (int attempt = 0; attempt < 8 && llt.info() != Eigen::Success; ++attempt) {
      const double eps = base * std::pow(10.0, attempt);
      precision.diagonal().array() += eps - state.ridge;
      state.ridge = eps;
      llt.compute(precision);
    }
    if (llt.info() != Eigen::Success)
      throw LinearAlgebraError("posterior precision is not positive definite after ridge");
  }

  state.mu_x = llt.solve(rhs);
  state.sigma_x = llt.solve(Eigen::MatrixXd::Identity(m, m));
  state.sigma_x = 0.5 * (state.sigma_x + state.sigma_x.transpose()).eval();
  const Eigen::MatrixXd& factor = llt.matrixLLT();
  double log_det_precision = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) log_det_precision += 2.0 * std::log(factor(i, i));
  state.log_det_sigma_x = -log_det_precision;

  Eigen::MatrixXd whitened = A.transpose();
  llt.matrixL().solveInPlace(whitened);
  state.row_quad = whitened.colwise().squaredNorm().transpose();
}

Eigen::VectorXd copula_share(const CopulaTerm* copula, const VBState& state) {
  Eigen::VectorXd share = Eigen::VectorXd::Zero(state.mu_x.size());
  if (copula == nullptr || copula->empty() || !copula->tau_linked_diagonal) return share;
  const auto& P = copula->P;
  for (Eigen::Index col = 0; col < P.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(P, col); it; ++it) {
      if (it.row() != col) continue;
      share[col] = it.value() * (state.mu_x[col] * state.mu_x[col] + state.sigma_x(col, col));
    }
  }
  return share;
}

void update_tau(VBState& state, const Eigen::VectorXd& copula_share) {
  const Eigen::Index m = state.mu_x.size();
  if (copula_share.size() != m) throw DimensionError("copula share has the wrong length");
  state.gig_a = state.lambda_sq_mean;
  state.gig_b.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double second = state.mu_x[j] * state.mu_x[j] + state.sigma_x(j, j);
    const double a = state.gig_a[j];
    const double b = std::max(second + copula_share[j], kMinGigB);
    state.gig_b[j] = b;
    const GigMoments g = gig_half_moments(a, b);
    state.tau_mean[j] = g.tau_mean;
    state.tau_inv_mean[j] = g.tau_inv_mean;
  }
}

void update_lambda(VBState& state) { state.lambda_sq_mean = 2.0 * state.tau_mean.cwiseInverse(); }

void update_delta(VBState& state, const Eigen::MatrixXd& A) {
  const Eigen::VectorXd mean_y = times(A, state.mu_x) + state.mu_n;
  const Eigen::VectorXd second = state.row_quad + mean_y.cwiseAbs2() + state.noise_var;
  state.delta = second.cwiseMax(0.0).cwiseSqrt();
}

void update_noise(VBState& state, const Eigen::MatrixXd& A, const SignVector& t, double sigma_n) {
  check_dims(state, A, t);
  if (sigma_n == 0.0) {
    state.mu_n.setZero();
    state.noise_var.setZero();
    return;
  }
  const Eigen::VectorXd lam = jj_lambdas(state.delta);
  const Eigen::VectorXd s = signs_of(t);
  const Eigen::VectorXd ax = times(A, state.mu_x);
  const double prior_precision = 1.0 / (sigma_n * sigma_n);
  state.noise_var = (Eigen::VectorXd::Constant(lam.size(), prior_precision) + 2.0 * lam).cwiseInverse();
  state.mu_n = state.noise_var.cwiseProduct(0.5 * s - 2.0 * lam.cwiseProduct(ax));
}

double evaluate_bound(const VBState& state, const Eigen::MatrixXd& A, const SignVector& t,
                      const CopulaTerm* copula, double sigma_n) {
  check_dims(state, A, t);
  const Eigen::Index m = state.mu_x.size();
  const Eigen::Index n = state.delta.size();
  const Eigen::VectorXd s = signs_of(t);
  const Eigen::VectorXd mean_y = times(A, state.mu_x) + state.mu_n;

  double bound = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = state.delta[i];
    const double second = state.row_quad[i] + mean_y[i] * mean_y[i] + state.noise_var[i];
    bound += log_sigmoid(d) + 0.5 * (s[i] * mean_y[i] - d) - jj_lambda(d) * (second - d * d);
  }

  // Entropy of q(x).
  bound += 0.5 * state.log_det_sigma_x + 0.5 * static_cast<double>(m) * (1.0 + std::log(2.0 * std::numbers::pi));

  for (Eigen::Index j = 0; j < m; ++j) {
    const double ex2 = state.mu_x[j] * state.mu_x[j] + state.sigma_x(j, j);
    bound += coefficient_bound(ex2, state.gig_a[j], state.gig_b[j], state.lambda_sq_mean[j]);
  }

  if (copula != nullptr && !copula->empty()) {
    double penalty = 0.0;
    const auto& P = copula->P;
    for (Eigen::Index col = 0; col < P.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(P, col); it; ++it) {
        const Eigen::Index row = it.row();
        const double exx = state.mu_x[row] * state.mu_x[col] + state.sigma_x(row, col);
        double w = 0.0;
        if (row == col) {
          w = copula->tau_linked_diagonal ? state.tau_inv_mean[row]
                                          : copula->scale[row] * copula->scale[row];
        } else {
          w = copula->scale[row] * copula->scale[col];
        }
        penalty += w * it.value() * exx;
      }
    }
    bound -= 0.5 * penalty;
  }

  if (sigma_n > 0.0) {
    const double var = sigma_n * sigma_n;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = state.noise_var[i];
      bound += -0.5 * std::log(2.0 * std::numbers::pi * var) -
               (state.mu_n[i] * state.mu_n[i] + v) / (2.0 * var) +
               0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * v);
    }
  }
  return bound;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

std::span<const double> segment(const Eigen::VectorXd& v, std::size_t offset, std::size_t size) {
  return {v.data() + offset, size};
}

struct Hyper {
  std::vector<DLParams> marginals;  // index scale - 1
  std::vector<DirectionalCopula> copulas;
  bool copulas_fitted = false;
};

void refit_marginals(const Eigen::VectorXd& mu, const PyramidLayout& layout,
                     const RecoveryConfig& config, Hyper& hyper) {
  for (int s = 1; s <= layout.levels(); ++s) {
    const auto bands = layout.detail_subbands(s);
    const auto coeffs = segment(mu, bands.front().offset, 3 * bands.front().size());
    auto& current = hyper.marginals[s - 1];
    try {
      if (config.refit_shape) {
        ShapeFitOptions options;
        options.f0 = current.f();
        current = fit_shape(coeffs, options).params;
      } else {
        EtaFitOptions options;
        options.eta0 = current.eta();
        current = DLParams(fit_eta(coeffs, current.f(), options), current.f());
      }
    } catch (const Error&) {
      // Keep the previous estimate; early means can be degenerate.
    }
  }
}

void refit_copulas(const Eigen::VectorXd& mu, const PyramidLayout& layout,
                   const RecoveryConfig& config, Hyper& hyper) {
  std::vector<Direction> directions{Direction::Row, Direction::Column, Direction::Diagonal};
  if (config.include_antidiagonal) directions.push_back(Direction::AntiDiagonal);
  std::vector<DirectionalCopula> fitted;
  for (int s = 1; s <= layout.levels(); ++s) {
    const auto bands = layout.detail_subbands(s);
    for (Direction dir : directions) {
      if (config.direction_weights.of(dir) == 0.0) continue;
      std::vector<NeighborhoodSet> sets;
      std::vector<const SubbandInfo*> used;
      for (const auto& sb : bands) {
        if (!supports_windows(sb.rows, sb.cols, dir, config.L)) continue;
        sets.push_back(extract_neighborhoods(sb.rows, sb.cols, dir, config.L));
        used.push_back(&sb);
      }
      if (sets.empty()) continue;
      std::vector<WindowSample> samples;
      for (std::size_t k = 0; k < sets.size(); ++k)
        samples.push_back({&sets[k], segment(mu, used[k]->offset, used[k]->size()),
                           hyper.marginals[s - 1]});
      try {
        fitted.push_back(fit_sigma(samples, s));
      } catch (const Error&) {
        // Too few windows or a degenerate slot: leave this direction out.
      }
    }
  }
  hyper.copulas = std::move(fitted);
  hyper.copulas_fitted = true;
}

CopulaTerm build_copula_term(const VBState& state, const PyramidLayout& layout,
                             const RecoveryConfig& config, const Hyper& hyper) {
  CopulaTerm term;
  term.P = assemble_precision_correction(hyper.copulas, layout, config.direction_weights);
  term.scale = state.tau_inv_mean.cwiseSqrt();
  term.tau_linked_diagonal = true;
  return term;
}

}  // namespace

RecoveryResult recover(const SignVector& t, const Eigen::MatrixXd& A, const PyramidLayout& layout,
                       const RecoveryConfig& config, const Eigen::VectorXd* x_true) {
  config.validate();
  if (static_cast<std::size_t>(A.rows()) != t.size())
    throw DimensionError("A rows and t length differ");
  if (static_cast<std::size_t>(A.cols()) != layout.size())
    throw DimensionError("A columns and pyramid size differ");
  if (x_true != nullptr && x_true->size() != A.cols())
    throw DimensionError("reference signal has the wrong length");

  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(A.cols());
  RecoveryResult result;
  VBState state = initial_state(n, m, config);
  Hyper hyper;
  hyper.marginals.assign(static_cast<std::size_t>(layout.levels()), DLParams(1.0, config.f_init));

  try {
    for (int iter = 1; iter <= config.max_iter; ++iter) {
      state.iteration = iter;
      const bool have_mean = state.mu_x.squaredNorm() > 0.0;
      if (have_mean) {
        refit_marginals(state.mu_x, layout, config, hyper);
        if (config.copula_enabled &&
            (config.sigma_refit == SigmaRefit::PerIteration || !hyper.copulas_fitted))
          refit_copulas(state.mu_x, layout, config, hyper);
      }
      std::optional<CopulaTerm> term;
      if (config.copula_enabled && !hyper.copulas.empty())
        term = build_copula_term(state, layout, config, hyper);
      const CopulaTerm* copula = term ? &*term : nullptr;

      TraceRow row;
      row.iteration = iter;
      row.bound_before = iter > 1 ? evaluate_bound(state, A, t, copula, config.sigma_n)
                                  : std::numeric_limits<double>::quiet_NaN();

      const Eigen::VectorXd previous = state.mu_x;
      update_x(state, A, t, copula);
      update_tau(state, copula_share(copula, state));
      update_lambda(state);
      update_delta(state, A);
      update_noise(state, A, t, config.sigma_n);

      row.bound_value = evaluate_bound(state, A, t, copula, config.sigma_n);
      row.eta = hyper.marginals.front().eta();
      row.f = hyper.marginals.front().f();
      row.delta_mean = state.delta.mean();
      row.ridge = state.ridge;
      const double norm = state.mu_x.norm();
      if (!std::isfinite(norm) || !std::isfinite(row.bound_value))
        throw LinearAlgebraError("non-finite posterior statistics");
      row.snr_if_known = (x_true != nullptr && norm > 0.0)
                             ? reconstruction_snr(*x_true, state.mu_x / norm)
                             : std::numeric_limits<double>::quiet_NaN();
      if (iter > 1 &&
          row.bound_value < row.bound_before - config.bound_slack * std::abs(row.bound_before))
        ++result.bound_violations;

      row.relative_change = norm > 0.0 ? (state.mu_x - previous).norm() / norm : 1.0;
      result.trace.push_back(row);
      result.iterations = iter;

      if (row.relative_change < config.tol) {
        result.converged = true;
        break;
      }
    }
  } catch (const Error& e) {
    throw RecoveryError(std::string("recovery failed: ") + e.what(), result.trace);
  }

  const double norm = state.mu_x.norm();
  if (!(norm > 0.0)) throw RecoveryError("recovery produced a zero mean", result.trace);
  result.x_hat = state.mu_x / norm;
  result.state = std::move(state);
  result.marginals = std::move(hyper.marginals);
  result.copulas = std::move(hyper.copulas);
  return result;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iteration,bound_value,eta,f,delta_mean,snr_if_known\n";
  os << std::setprecision(10);
  for (const auto& r : trace) {
    os << r.iteration << ',' << r.bound_value << ',' << r.eta << ',' << r.f << ',' << r.delta_mean
       << ',';
    if (std::isfinite(r.snr_if_known)) os << r.snr_if_known;
    os << '\n';
  }
}

}  // namespace onebit
