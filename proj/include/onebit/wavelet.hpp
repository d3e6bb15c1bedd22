#pragma once

// Separable periodic 2-D DWT and the subband / neighborhood bookkeeping the
// statistical model is defined on.
//
// Flattening order: coarsest LL first, then for scale = levels .. 1 the
// LH, HL, HH subbands, each row-major. Scale 1 is the finest. Orientation
// letters name the horizontal then the vertical filter: HL is high-pass
// along rows and low-pass along columns.

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace onebit {

using Grid = Eigen::MatrixXd;

enum class Orientation { LL, LH, HL, HH };
enum class WaveletFilter { Haar, Daubechies4 };
enum class Direction { Row, Column, Diagonal, AntiDiagonal };

std::string_view to_string(Orientation o);
std::string_view to_string(WaveletFilter f);
std::string_view to_string(Direction d);
WaveletFilter parse_filter(std::string_view name);
Direction parse_direction(std::string_view name);

struct SubbandInfo {
  int scale = 0;
  Orientation orientation = Orientation::LL;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

struct GridPosition {
  int scale;
  Orientation orientation;
  int row;
  int col;
};

class PyramidLayout {
 public:
  PyramidLayout() = default;
  // Throws RangeError for levels < 1 or too deep, DimensionError when the
  // image is not divisible by 2^levels.
  PyramidLayout(int rows, int cols, int levels);

  int image_rows() const { return rows_; }
  int image_cols() const { return cols_; }
  int levels() const { return levels_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_) * cols_; }

  const std::vector<SubbandInfo>& subbands() const { return subbands_; }
  const SubbandInfo& subband(int scale, Orientation o) const;
  // Detail subbands (LH, HL, HH) of one scale.
  std::vector<SubbandInfo> detail_subbands(int scale) const;

  std::size_t index(const GridPosition& p) const;
  GridPosition locate(std::size_t index) const;

  bool operator==(const PyramidLayout& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && levels_ == other.levels_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  int levels_ = 0;
  std::vector<SubbandInfo> subbands_;
};

class WaveletPyramid {
 public:
  explicit WaveletPyramid(PyramidLayout layout);
  // Throws StructureError when coeffs does not match the layout.
  WaveletPyramid(PyramidLayout layout, Eigen::VectorXd coeffs);

  const PyramidLayout& layout() const { return layout_; }
  const Eigen::VectorXd& coefficients() const { return coeffs_; }
  Eigen::VectorXd& coefficients() { return coeffs_; }

  Grid subband(int scale, Orientation o) const;
  // Throws StructureError on a dims mismatch.
  void set_subband(int scale, Orientation o, const Grid& values);

 private:
  PyramidLayout layout_;
  Eigen::VectorXd coeffs_;
};

WaveletPyramid analyze(const Grid& image, int levels, WaveletFilter filter = WaveletFilter::Haar);
Grid synthesize(const WaveletPyramid& pyramid, WaveletFilter filter = WaveletFilter::Haar);

// Sliding windows of length L (stride 1) inside one subband. Indices are
// row-major positions local to that subband.
struct NeighborhoodSet {
  Direction direction = Direction::Row;
  int L = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<int>> windows;
};

NeighborhoodSet extract_neighborhoods(int rows, int cols, Direction direction, int L);
NeighborhoodSet extract_neighborhoods(const PyramidLayout& layout, int scale, Orientation o,
                                      Direction direction, int L);
NeighborhoodSet extract_neighborhoods(const WaveletPyramid& pyramid, int scale, Orientation o,
                                      Direction direction, int L);
// Whether a subband is large enough along `direction` for windows of length L.
bool supports_windows(int rows, int cols, Direction direction, int L);

}  // namespace onebit
