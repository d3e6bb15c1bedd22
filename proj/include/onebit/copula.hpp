#pragma once

// Gaussian copula and drawable (D-) vine machinery over double-Lomax
// marginals, correlation estimation per neighborhood direction, and the
// sparse precision correction the recovery engine adds to its prior.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <span>
#include <vector>

#include "onebit/dlomax.hpp"
#include "onebit/wavelet.hpp"

namespace onebit {

// Marginal CDF values are clamped to [kCdfClamp, 1 - kCdfClamp] before the
// probit so the transform stays finite.
inline constexpr double kCdfClamp = 1e-15;

double normal_cdf(double v);
double probit(double u);

// v = probit(F(x)); odd in x.
double v_transform(double x, const DLParams& p);
Eigen::VectorXd v_transform(std::span<const double> coeffs, const DLParams& p);
// dv/dx = f(x) / phi(v); zero where the CDF clamp is active.
double v_transform_derivative(double x, const DLParams& p);

// |Sigma|^(-1/2) exp(-v' (Sigma^-1 - I) v / 2) with v = probit(u).
// Throws DomainError for u outside the open cube or a non-unit diagonal and
// LinearAlgebraError when Sigma is not positive definite.
double gaussian_copula_log_density(std::span<const double> u, const Eigen::MatrixXd& sigma);
double gaussian_copula_density(std::span<const double> u, const Eigen::MatrixXd& sigma);

struct VineEdge {
  int first;   // conditioned node j(e)
  int second;  // conditioned node k(e)
  std::vector<int> conditioning;
  double rho;  // Gaussian pair-copula (partial) correlation
};

// D-vine on nodes 0..d-1 in path order: tree t (1-based) holds the edges
// (i, i+t | i+1..i+t-1).
class VineStructure {
 public:
  VineStructure() = default;
  // Throws StructureError when the trees are not a D-vine on d nodes.
  VineStructure(int d, std::vector<std::vector<VineEdge>> trees);

  static VineStructure independence(int d);
  // Partial correlations of a correlation matrix along the path order.
  static VineStructure from_correlation(const Eigen::MatrixXd& sigma);

  int node_count() const { return d_; }
  const std::vector<std::vector<VineEdge>>& trees() const { return trees_; }

 private:
  int d_ = 0;
  std::vector<std::vector<VineEdge>> trees_;
};

// Log-density of the vine-coupled multivariate double-Lomax law: marginal
// terms plus every Gaussian pair copula, with conditional CDFs from the
// Gaussian h-function (carried in probit space).
double dvine_log_density(std::span<const double> x, const DLParams& p, const VineStructure& vine);
// Copula part only, evaluated at probit-space points v.
double dvine_copula_log_density(std::span<const double> v, const VineStructure& vine);

struct DirectionalCopula {
  Direction direction = Direction::Row;
  int L = 0;
  Eigen::MatrixXd sigma;
  int scale = 0;
  DLParams marginal{1.0, 1.0};
  bool projected = false;
  std::size_t window_count = 0;
};

// Clips eigenvalues below `floor` and rescales to unit diagonal.
Eigen::MatrixXd project_to_correlation(const Eigen::MatrixXd& matrix, double floor,
                                       bool* projected = nullptr);

struct WindowSample {
  const NeighborhoodSet* windows;
  std::span<const double> coeffs;  // row-major subband coefficients
  DLParams marginal;
};

// Sample second moment of the probit-transformed windows, normalized to a
// unit-diagonal correlation and projected to SPD when needed. Throws
// EstimationError for fewer than L + 1 windows or a zero-variance slot.
DirectionalCopula fit_sigma(const NeighborhoodSet& windows, std::span<const double> coeffs,
                            const DLParams& p, int scale = 0);
// Pools windows from several subbands (each with its own marginal).
DirectionalCopula fit_sigma(std::span<const WindowSample> samples, int scale);

struct DirectionWeights {
  double row = 1.0;
  double column = 1.0;
  double diagonal = 1.0;
  double antidiagonal = 1.0;

  double of(Direction d) const;
  static DirectionWeights equal_thirds();
};

// P = sum over windows of E_w (Sigma^-1 - I) E_w^T, scaled entrywise by
// 1/sqrt(c_j c_k) where c counts the windows covering each coefficient, so
// diagonal entries are window averages. Each direction adds more than
// -weight * I, so I + P is positive definite when the weights sum to <= 1.
// Each copula is applied to every detail subband of its scale that fits
// its window length.
Eigen::SparseMatrix<double> assemble_precision_correction(
    std::span<const DirectionalCopula> copulas, const PyramidLayout& layout,
    const DirectionWeights& weights = {});

// Plain-text snapshot: one line per copula,
//   <direction> <L> <scale> <eta> <f> <L*L sigma entries, row-major>
void write_copulas(std::ostream& os, std::span<const DirectionalCopula> copulas);
std::vector<DirectionalCopula> read_copulas(std::istream& is);

}  // namespace onebit
