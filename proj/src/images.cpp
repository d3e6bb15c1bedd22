#include <cmath>
#include <random>

#include "onebit/bench.hpp"
#include "onebit/copula.hpp"
#include "onebit/dlomax.hpp"
#include "onebit/error.hpp"

namespace onebit {

namespace {

Grid blocks(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> level(0.0, 1.0);
  Grid image = Grid::Constant(rows, cols, level(rng));
  std::uniform_int_distribution<int> pick_r(0, rows - 1), pick_c(0, cols - 1);
  const int count = 4 + (rows + cols) / 8;
  for (int k = 0; k < count; ++k) {
    int r0 = pick_r(rng), r1 = pick_r(rng), c0 = pick_c(rng), c1 = pick_c(rng);
    if (r0 > r1) std::swap(r0, r1);
    if (c0 > c1) std::swap(c0, c1);
    image.block(r0, c0, r1 - r0 + 1, c1 - c0 + 1).setConstant(level(rng));
  }
  return image;
}

Grid gradient_edges(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double gx = u(rng) - 0.5, gy = u(rng) - 0.5, curve = 0.5 * (u(rng) - 0.5);
  const double cx = u(rng) * cols, cy = u(rng) * rows, radius = (0.15 + 0.2 * u(rng)) * std::min(rows, cols);
  const double angle = 2.0 * std::acos(-1.0) * u(rng), offset = u(rng) - 0.5;
  const double disk = 0.3 + 0.3 * u(rng), half = 0.2 + 0.2 * u(rng);
  Grid image(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double x = static_cast<double>(c) / cols - 0.5, y = static_cast<double>(r) / rows - 0.5;
      double v = 0.5 + gx * x + gy * y + curve * (x * x + y * y);
      if (std::hypot(c - cx, r - cy) < radius) v += disk;
      if (std::cos(angle) * x + std::sin(angle) * y > offset) v -= half;
      image(r, c) = v;
    }
  return image;
}

// Unit-variance field with corr rho along rows and columns (rho^2 diagonally).
Grid ar_field(int rows, int cols, double rho, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const double innov = std::sqrt(1.0 - rho * rho);
  Grid g(rows, cols);
  for (int r = 0; r < rows; ++r) {
    g(r, 0) = normal(rng);
    for (int c = 1; c < cols; ++c) g(r, c) = rho * g(r, c - 1) + innov * normal(rng);
  }
  for (int r = 1; r < rows; ++r) g.row(r) = rho * g.row(r - 1) + innov * g.row(r);
  return g;
}

}  // namespace

const std::vector<std::string>& image_kinds() {
  static const std::vector<std::string> kinds{"blocks", "gradient-edges", "model"};
  return kinds;
}

WaveletPyramid synthesize_model_pyramid(int rows, int cols, std::uint64_t seed,
                                        const ModelImageOptions& options) {
  if (!(options.rho > -1.0 && options.rho < 1.0)) throw DomainError("rho must lie in (-1, 1)");
  if (!(options.scale_growth > 0.0)) throw DomainError("scale_growth must be positive");
  PyramidLayout layout(rows, cols, options.levels);
  WaveletPyramid pyramid(layout);
  std::mt19937_64 rng(seed);
  for (const auto& sb : layout.subbands()) {
    double eta = options.eta_finest / std::pow(options.scale_growth, sb.scale - 1);
    double rho = options.rho;
    if (sb.orientation == Orientation::LL) {
      eta /= options.scale_growth * options.scale_growth;
      rho = 0.0;
    }
    const DLParams p(eta, options.f);
    const Grid g = ar_field(sb.rows, sb.cols, rho, rng);
    Grid values(sb.rows, sb.cols);
    for (int r = 0; r < sb.rows; ++r)
      for (int c = 0; c < sb.cols; ++c) {
        // Through the lower tail so large |g| keeps full precision.
        const double lower = dl_inverse_cdf(normal_cdf(-std::abs(g(r, c))), p);
        values(r, c) = g(r, c) >= 0.0 ? -lower : lower;
      }
    pyramid.set_subband(sb.scale, sb.orientation, values);
  }
  return pyramid;
}

Grid synthesize_test_image(const std::string& kind, int rows, int cols, std::uint64_t seed,
                           const ModelImageOptions& options) {
  if (rows < 2 || cols < 2) throw DomainError("image dims must be at least 2");
  std::mt19937_64 rng(seed);
  if (kind == "blocks") return blocks(rows, cols, rng);
  if (kind == "gradient-edges") return gradient_edges(rows, cols, rng);
  if (kind == "model") {
    try {
      return synthesize(synthesize_model_pyramid(rows, cols, seed, options));
    } catch (const RangeError& e) {
      throw DomainError(std::string("model image: ") + e.what());
    } catch (const DimensionError& e) {
      throw DomainError(std::string("model image: ") + e.what());
    }
  }
  throw DomainError("unknown image kind '" + kind + "'");
}

}  // namespace onebit
