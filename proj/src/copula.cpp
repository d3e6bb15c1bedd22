#include "onebit/copula.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "onebit/error.hpp"

namespace onebit {

double normal_cdf(double v) { return 0.5 * std::erfc(-v / std::numbers::sqrt2); }

double probit(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("probit needs 0 < u < 1");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

double v_transform(double x, const DLParams& p) {
  if (x == 0.0) return 0.0;
  const double tail = std::max(dl_tail(x, p), kCdfClamp);
  const double v = probit(tail);
  return x < 0.0 ? v : -v;
}

Eigen::VectorXd v_transform(std::span<const double> coeffs, const DLParams& p) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t i = 0; i < coeffs.size(); ++i) v[static_cast<Eigen::Index>(i)] = v_transform(coeffs[i], p);
  return v;
}

double v_transform_derivative(double x, const DLParams& p) {
  if (dl_tail(x, p) < kCdfClamp) return 0.0;
  const double v = v_transform(x, p);
  const double phi = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
  return dl_pdf(x, p) / phi;
}

namespace {

void require_unit_diagonal(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
    throw DimensionError("correlation matrix must be square");
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
    if (std::abs(sigma(i, i) - 1.0) > 1e-9) throw DomainError("correlation diagonal must be 1");
  }
}

// log of the bivariate Gaussian copula density at probit-space (w1, w2).
double pair_log_density(double w1, double w2, double rho) {
  const double one_minus = 1.0 - rho * rho;
  return -0.5 * std::log(one_minus) -
         (rho * rho * (w1 * w1 + w2 * w2) - 2.0 * rho * w1 * w2) / (2.0 * one_minus);
}

// Gaussian h-function h(w1 | w2) in probit space.
double pair_conditional(double w1, double w2, double rho) {
  return (w1 - rho * w2) / std::sqrt(1.0 - rho * rho);
}

}  // namespace

double gaussian_copula_log_density(std::span<const double> u, const Eigen::MatrixXd& sigma) {
  require_unit_diagonal(sigma);
  if (static_cast<Eigen::Index>(u.size()) != sigma.rows())
    throw DimensionError("u and Sigma dimensions differ");
  Eigen::VectorXd v(sigma.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(u[i] > 0.0 && u[i] < 1.0)) throw DomainError("u must lie strictly inside (0,1)^d");
    v[i] = probit(u[i]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw LinearAlgebraError("Sigma is not positive definite");
  const Eigen::MatrixXd& l = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0)) throw LinearAlgebraError("Sigma is singular");
    log_det += 2.0 * std::log(l(i, i));
  }
  const double quad = v.dot(llt.solve(v)) - v.squaredNorm();
  return -0.5 * log_det - 0.5 * quad;
}

double gaussian_copula_density(std::span<const double> u, const Eigen::MatrixXd& sigma) {
  return std::exp(gaussian_copula_log_density(u, sigma));
}

// ---------------------------------------------------------------------------
// D-vine

VineStructure::VineStructure(int d, std::vector<std::vector<VineEdge>> trees)
    : d_(d), trees_(std::move(trees)) {
  if (d < 2) throw StructureError("a vine needs at least two nodes");
  if (static_cast<int>(trees_.size()) != d - 1)
    throw StructureError("a D-vine on d nodes has d-1 trees");
  for (int t = 1; t < d; ++t) {
    const auto& tree = trees_[t - 1];
    if (static_cast<int>(tree.size()) != d - t)
      throw StructureError("tree " + std::to_string(t) + " must have d-t edges");
    for (int i = 0; i < d - t; ++i) {
      const auto& e = tree[i];
      if (e.first != i || e.second != i + t)
        throw StructureError("edge does not follow the path order");
      if (static_cast<int>(e.conditioning.size()) != t - 1)
        throw StructureError("conditioning set has the wrong size");
      for (int k = 0; k < t - 1; ++k) {
        if (e.conditioning[k] != i + 1 + k) throw StructureError("conditioning set is not contiguous");
      }
      if (!(std::abs(e.rho) < 1.0)) throw StructureError("pair correlation must lie in (-1, 1)");
    }
  }
}

VineStructure VineStructure::independence(int d) {
  return from_correlation(Eigen::MatrixXd::Identity(d, d));
}

VineStructure VineStructure::from_correlation(const Eigen::MatrixXd& sigma) {
  require_unit_diagonal(sigma);
  const int d = static_cast<int>(sigma.rows());
  std::vector<std::vector<VineEdge>> trees;
  for (int t = 1; t < d; ++t) {
    std::vector<VineEdge> tree;
    for (int i = 0; i + t < d; ++i) {
      // Partial correlation of (i, i+t) given the nodes between them.
      const Eigen::MatrixXd precision = sigma.block(i, i, t + 1, t + 1).inverse();
      const double rho = -precision(0, t) / std::sqrt(precision(0, 0) * precision(t, t));
      std::vector<int> cond;
      for (int k = i + 1; k < i + t; ++k) cond.push_back(k);
      tree.push_back({i, i + t, std::move(cond), rho});
    }
    trees.push_back(std::move(tree));
  }
  return VineStructure(d, std::move(trees));
}

double dvine_copula_log_density(std::span<const double> v, const VineStructure& vine) {
  const int d = vine.node_count();
  if (static_cast<int>(v.size()) != d) throw DimensionError("point and vine dimensions differ");
  if (d < 2) throw StructureError("empty vine");
  // forward[i] = F(x_i | x_{i+1..i+t-1}), backward[i] = F(x_{i+t} | x_{i+1..i+t-1})
  std::vector<double> forward(v.begin(), v.end() - 1);
  std::vector<double> backward(v.begin() + 1, v.end());
  double log_density = 0.0;
  for (int t = 1; t < d; ++t) {
    const auto& tree = vine.trees()[t - 1];
    const int edges = d - t;
    for (int i = 0; i < edges; ++i)
      log_density += pair_log_density(forward[i], backward[i], tree[i].rho);
    if (t + 1 == d) break;
    std::vector<double> next_forward(edges - 1);
    std::vector<double> next_backward(edges - 1);
    for (int i = 0; i + 1 < edges; ++i) {
      next_forward[i] = pair_conditional(forward[i], backward[i], tree[i].rho);
      next_backward[i] = pair_conditional(backward[i + 1], forward[i + 1], tree[i + 1].rho);
    }
    forward = std::move(next_forward);
    backward = std::move(next_backward);
  }
  return log_density;
}

double dvine_log_density(std::span<const double> x, const DLParams& p, const VineStructure& vine) {
  if (static_cast<int>(x.size()) != vine.node_count())
    throw DimensionError("point and vine dimensions differ");
  double marginal = 0.0;
  for (double xi : x) marginal += dl_log_pdf(xi, p);
  const Eigen::VectorXd v = v_transform(x, p);
  return marginal + dvine_copula_log_density(std::span<const double>(v.data(), v.size()), vine);
}

// ---------------------------------------------------------------------------
// Estimation

Eigen::MatrixXd project_to_correlation(const Eigen::MatrixXd& matrix, double floor,
                                       bool* projected) {
  Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  bool clipped = false;
  if (eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() < floor) {
    Eigen::VectorXd values = eig.eigenvalues().cwiseMax(floor);
    sym = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    clipped = true;
  }
  const Eigen::VectorXd inv_sd = sym.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd corr = inv_sd.asDiagonal() * sym * inv_sd.asDiagonal();
  corr = 0.5 * (corr + corr.transpose());
  corr.diagonal().setOnes();
  if (projected != nullptr) *projected = clipped;
  return corr;
}

DirectionalCopula fit_sigma(std::span<const WindowSample> samples, int scale) {
  if (samples.empty()) throw EstimationError("no window samples");
  const int L = samples.front().windows->L;
  const Direction direction = samples.front().windows->direction;
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(L, L);
  std::size_t count = 0;
  Eigen::VectorXd window(L);
  for (const auto& sample : samples) {
    if (sample.windows->L != L) throw EstimationError("pooled windows differ in length");
    const Eigen::VectorXd v = v_transform(sample.coeffs, sample.marginal);
    for (const auto& w : sample.windows->windows) {
      for (int k = 0; k < L; ++k) window[k] = v[w[k]];
      second.selfadjointView<Eigen::Lower>().rankUpdate(window);
      ++count;
    }
  }
  if (count < static_cast<std::size_t>(L) + 1)
    throw EstimationError("need at least L+1 windows to estimate Sigma");
  second = second.selfadjointView<Eigen::Lower>();
  second /= static_cast<double>(count);
  if (second.diagonal().minCoeff() <= 0.0)
    throw EstimationError("zero-variance window slot");

  DirectionalCopula out;
  out.direction = direction;
  out.L = L;
  out.scale = scale;
  out.marginal = samples.front().marginal;
  out.window_count = count;
  out.sigma = project_to_correlation(second, 1e-6, &out.projected);
  Eigen::LLT<Eigen::MatrixXd> llt(out.sigma);
  if (llt.info() != Eigen::Success) throw EstimationError("Sigma estimate remained singular");
  return out;
}

DirectionalCopula fit_sigma(const NeighborhoodSet& windows, std::span<const double> coeffs,
                            const DLParams& p, int scale) {
  const WindowSample sample{&windows, coeffs, p};
  return fit_sigma(std::span<const WindowSample>(&sample, 1), scale);
}

// ---------------------------------------------------------------------------
// Precision correction

double DirectionWeights::of(Direction d) const {
  switch (d) {
    case Direction::Row: return row;
    case Direction::Column: return column;
    case Direction::Diagonal: return diagonal;
    case Direction::AntiDiagonal: return antidiagonal;
  }
  return 0.0;
}

DirectionWeights DirectionWeights::equal_thirds() {
  return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0};
}

Eigen::SparseMatrix<double> assemble_precision_correction(
    std::span<const DirectionalCopula> copulas, const PyramidLayout& layout,
    const DirectionWeights& weights) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& cop : copulas) {
    const double weight = weights.of(cop.direction);
    if (weight == 0.0) continue;
    Eigen::MatrixXd k = cop.sigma.inverse();
    k = 0.5 * (k + k.transpose());
    k.diagonal().array() -= 1.0;
    for (const auto& sb : layout.detail_subbands(cop.scale)) {
      if (!supports_windows(sb.rows, sb.cols, cop.direction, cop.L)) continue;
      const auto set = extract_neighborhoods(sb.rows, sb.cols, cop.direction, cop.L);
      std::vector<double> coverage(sb.size(), 0.0);
      for (const auto& w : set.windows)
        for (int idx : w) coverage[idx] += 1.0;
      for (const auto& w : set.windows) {
        for (int a = 0; a < cop.L; ++a) {
          for (int b = a; b < cop.L; ++b) {
            const double value =
                weight * k(a, b) / std::sqrt(coverage[w[a]] * coverage[w[b]]);
            if (value == 0.0) continue;
            const auto i = static_cast<int>(sb.offset + w[a]);
            const auto j = static_cast<int>(sb.offset + w[b]);
            // Mirrored entries are pushed together so duplicates sum in the
            // same order and P comes out exactly symmetric.
            triplets.emplace_back(i, j, value);
            if (i != j) triplets.emplace_back(j, i, value);
          }
        }
      }
    }
  }
  const auto m = static_cast<Eigen::Index>(layout.size());
  Eigen::SparseMatrix<double> p(m, m);
  p.setFromTriplets(triplets.begin(), triplets.end());
  return p;
}

// ---------------------------------------------------------------------------
// Snapshot I/O

void write_copulas(std::ostream& os, std::span<const DirectionalCopula> copulas) {
  os << "# direction L scale eta f sigma(row-major)\n";
  os << std::setprecision(17);
  for (const auto& c : copulas) {
    os << to_string(c.direction) << ' ' << c.L << ' ' << c.scale << ' ' << c.marginal.eta() << ' '
       << c.marginal.f();
    for (int i = 0; i < c.L; ++i)
      for (int j = 0; j < c.L; ++j) os << ' ' << c.sigma(i, j);
    os << '\n';
  }
}

std::vector<DirectionalCopula> read_copulas(std::istream& is) {
  std::vector<DirectionalCopula> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    std::string direction;
    DirectionalCopula c;
    double eta = 0.0;
    double f = 0.0;
    if (!(in >> direction >> c.L >> c.scale >> eta >> f) || c.L < 1)
      throw IoError("malformed copula line: " + line);
    c.direction = parse_direction(direction);
    c.marginal = DLParams(eta, f);
    c.sigma.resize(c.L, c.L);
    for (int i = 0; i < c.L; ++i)
      for (int j = 0; j < c.L; ++j)
        if (!(in >> c.sigma(i, j))) throw IoError("truncated sigma in copula line");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace onebit
