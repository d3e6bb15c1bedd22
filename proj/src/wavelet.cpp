#include "onebit/wavelet.hpp"

#include <array>
#include <cmath>
#include <span>

#include "onebit/error.hpp"

namespace onebit {

std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::LL: return "LL";
    case Orientation::LH: return "LH";
    case Orientation::HL: return "HL";
    case Orientation::HH: return "HH";
  }
  return "?";
}

std::string_view to_string(WaveletFilter f) {
  return f == WaveletFilter::Haar ? "haar" : "db4";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Row: return "row";
    case Direction::Column: return "column";
    case Direction::Diagonal: return "diagonal";
    case Direction::AntiDiagonal: return "antidiagonal";
  }
  return "?";
}

WaveletFilter parse_filter(std::string_view name) {
  if (name == "haar") return WaveletFilter::Haar;
  if (name == "db4" || name == "daubechies4") return WaveletFilter::Daubechies4;
  throw DomainError("unknown wavelet filter: " + std::string(name));
}

Direction parse_direction(std::string_view name) {
  for (Direction d : {Direction::Row, Direction::Column, Direction::Diagonal,
                      Direction::AntiDiagonal}) {
    if (to_string(d) == name) return d;
  }
  throw DomainError("unknown direction: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Layout

PyramidLayout::PyramidLayout(int rows, int cols, int levels)
    : rows_(rows), cols_(cols), levels_(levels) {
  if (rows < 1 || cols < 1) throw DimensionError("image must be non-empty");
  if (levels < 1) throw RangeError("levels must be >= 1");
  if (levels > 30 || (1 << levels) > std::min(rows, cols))
    throw RangeError("too many decomposition levels for a " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " image");
  const int block = 1 << levels;
  if (rows % block != 0 || cols % block != 0)
    throw DimensionError("image dims must be divisible by 2^levels");

  std::size_t offset = 0;
  auto push = [&](int scale, Orientation o) {
    SubbandInfo info{scale, o, rows >> scale, cols >> scale, offset};
    offset += info.size();
    subbands_.push_back(info);
  };
  push(levels, Orientation::LL);
  for (int s = levels; s >= 1; --s) {
    push(s, Orientation::LH);
    push(s, Orientation::HL);
    push(s, Orientation::HH);
  }
}

const SubbandInfo& PyramidLayout::subband(int scale, Orientation o) const {
  for (const auto& sb : subbands_) {
    if (sb.scale == scale && sb.orientation == o) return sb;
  }
  throw RangeError("no subband " + std::string(to_string(o)) + " at scale " +
                   std::to_string(scale));
}

std::vector<SubbandInfo> PyramidLayout::detail_subbands(int scale) const {
  std::vector<SubbandInfo> out;
  for (const auto& sb : subbands_) {
    if (sb.scale == scale && sb.orientation != Orientation::LL) out.push_back(sb);
  }
  return out;
}

std::size_t PyramidLayout::index(const GridPosition& p) const {
  const auto& sb = subband(p.scale, p.orientation);
  if (p.row < 0 || p.row >= sb.rows || p.col < 0 || p.col >= sb.cols)
    throw RangeError("grid position outside subband");
  return sb.offset + static_cast<std::size_t>(p.row) * sb.cols + p.col;
}

GridPosition PyramidLayout::locate(std::size_t index) const {
  for (const auto& sb : subbands_) {
    if (index >= sb.offset && index < sb.offset + sb.size()) {
      const auto local = static_cast<int>(index - sb.offset);
      return {sb.scale, sb.orientation, local / sb.cols, local % sb.cols};
    }
  }
  throw RangeError("flat index outside pyramid");
}

// ---------------------------------------------------------------------------
// Pyramid

WaveletPyramid::WaveletPyramid(PyramidLayout layout)
    : layout_(std::move(layout)), coeffs_(Eigen::VectorXd::Zero(layout_.size())) {}

WaveletPyramid::WaveletPyramid(PyramidLayout layout, Eigen::VectorXd coeffs)
    : layout_(std::move(layout)), coeffs_(std::move(coeffs)) {
  if (static_cast<std::size_t>(coeffs_.size()) != layout_.size())
    throw StructureError("coefficient count does not match pyramid layout");
}

Grid WaveletPyramid::subband(int scale, Orientation o) const {
  const auto& sb = layout_.subband(scale, o);
  Grid g(sb.rows, sb.cols);
  for (int r = 0; r < sb.rows; ++r)
    for (int c = 0; c < sb.cols; ++c) g(r, c) = coeffs_[sb.offset + r * sb.cols + c];
  return g;
}

void WaveletPyramid::set_subband(int scale, Orientation o, const Grid& values) {
  const auto& sb = layout_.subband(scale, o);
  if (values.rows() != sb.rows || values.cols() != sb.cols)
    throw StructureError("subband dims do not match layout");
  for (int r = 0; r < sb.rows; ++r)
    for (int c = 0; c < sb.cols; ++c) coeffs_[sb.offset + r * sb.cols + c] = values(r, c);
}

// ---------------------------------------------------------------------------
// Transform

namespace {

struct FilterBank {
  std::vector<double> lo;
  std::vector<double> hi;
};

FilterBank make_bank(WaveletFilter filter) {
  FilterBank bank;
  if (filter == WaveletFilter::Haar) {
    const double h = 1.0 / std::sqrt(2.0);
    bank.lo = {h, h};
  } else {
    const double s3 = std::sqrt(3.0);
    const double d = 4.0 * std::sqrt(2.0);
    bank.lo = {(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
  }
  const auto taps = bank.lo.size();
  bank.hi.resize(taps);
  for (std::size_t j = 0; j < taps; ++j)
    bank.hi[j] = ((j % 2 == 0) ? 1.0 : -1.0) * bank.lo[taps - 1 - j];
  return bank;
}

// One periodic analysis step on a strided line of even length n.
void analyze_line(const FilterBank& bank, std::span<double> line, std::vector<double>& scratch) {
  const std::size_t n = line.size();
  const std::size_t half = n / 2;
  scratch.assign(n, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t j = 0; j < bank.lo.size(); ++j) {
      const double v = line[(2 * k + j) % n];
      a += bank.lo[j] * v;
      d += bank.hi[j] * v;
    }
    scratch[k] = a;
    scratch[half + k] = d;
  }
  std::copy(scratch.begin(), scratch.end(), line.begin());
}

void synthesize_line(const FilterBank& bank, std::span<double> line,
                     std::vector<double>& scratch) {
  const std::size_t n = line.size();
  const std::size_t half = n / 2;
  scratch.assign(n, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    const double a = line[k];
    const double d = line[half + k];
    for (std::size_t j = 0; j < bank.lo.size(); ++j)
      scratch[(2 * k + j) % n] += bank.lo[j] * a + bank.hi[j] * d;
  }
  std::copy(scratch.begin(), scratch.end(), line.begin());
}

// Applies `step` to every row then every column of the top-left block.
template <typename Step>
void transform_block(Grid& g, int rows, int cols, const FilterBank& bank, Step step,
                     bool rows_first) {
  std::vector<double> line;
  std::vector<double> scratch;
  auto do_rows = [&] {
    line.resize(cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) line[c] = g(r, c);
      step(bank, std::span<double>(line), scratch);
      for (int c = 0; c < cols; ++c) g(r, c) = line[c];
    }
  };
  auto do_cols = [&] {
    line.resize(rows);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) line[r] = g(r, c);
      step(bank, std::span<double>(line), scratch);
      for (int r = 0; r < rows; ++r) g(r, c) = line[r];
    }
  };
  if (rows_first) {
    do_rows();
    do_cols();
  } else {
    do_cols();
    do_rows();
  }
}

// Quadrant of the in-place Mallat arrangement holding a subband.
std::pair<int, int> quadrant_origin(const SubbandInfo& sb) {
  switch (sb.orientation) {
    case Orientation::LL: return {0, 0};
    case Orientation::HL: return {0, sb.cols};
    case Orientation::LH: return {sb.rows, 0};
    case Orientation::HH: return {sb.rows, sb.cols};
  }
  return {0, 0};
}

}  // namespace

WaveletPyramid analyze(const Grid& image, int levels, WaveletFilter filter) {
  PyramidLayout layout(static_cast<int>(image.rows()), static_cast<int>(image.cols()), levels);
  const auto bank = make_bank(filter);
  Grid work = image;
  for (int s = 1; s <= levels; ++s) {
    transform_block(work, layout.image_rows() >> (s - 1), layout.image_cols() >> (s - 1), bank,
                    analyze_line, true);
  }
  WaveletPyramid pyramid(layout);
  for (const auto& sb : layout.subbands()) {
    const auto [r0, c0] = quadrant_origin(sb);
    pyramid.set_subband(sb.scale, sb.orientation, work.block(r0, c0, sb.rows, sb.cols));
  }
  return pyramid;
}

Grid synthesize(const WaveletPyramid& pyramid, WaveletFilter filter) {
  const auto& layout = pyramid.layout();
  if (static_cast<std::size_t>(pyramid.coefficients().size()) != layout.size())
    throw StructureError("pyramid coefficients inconsistent with layout");
  const auto bank = make_bank(filter);
  Grid work(layout.image_rows(), layout.image_cols());
  for (const auto& sb : layout.subbands()) {
    const auto [r0, c0] = quadrant_origin(sb);
    work.block(r0, c0, sb.rows, sb.cols) = pyramid.subband(sb.scale, sb.orientation);
  }
  for (int s = layout.levels(); s >= 1; --s) {
    transform_block(work, layout.image_rows() >> (s - 1), layout.image_cols() >> (s - 1), bank,
                    synthesize_line, false);
  }
  return work;
}

// ---------------------------------------------------------------------------
// Neighborhoods

namespace {

std::array<int, 2> step_of(Direction d) {
  switch (d) {
    case Direction::Row: return {0, 1};
    case Direction::Column: return {1, 0};
    case Direction::Diagonal: return {1, 1};
    case Direction::AntiDiagonal: return {1, -1};
  }
  return {0, 1};
}

}  // namespace

bool supports_windows(int rows, int cols, Direction direction, int L) {
  if (L < 2) return false;
  const auto [dr, dc] = step_of(direction);
  return (dr == 0 || rows >= L) && (dc == 0 || cols >= L);
}

NeighborhoodSet extract_neighborhoods(int rows, int cols, Direction direction, int L) {
  if (L < 2) throw RangeError("neighborhood size must be >= 2");
  if (!supports_windows(rows, cols, direction, L))
    throw RangeError("neighborhood size exceeds subband extent");
  const auto [dr, dc] = step_of(direction);
  NeighborhoodSet set{direction, L, rows, cols, {}};
  const int span = L - 1;
  const int r_end = rows - dr * span;
  const int c_begin = dc < 0 ? span : 0;
  const int c_end = dc > 0 ? cols - span : cols;
  for (int r = 0; r < r_end; ++r) {
    for (int c = c_begin; c < c_end; ++c) {
      std::vector<int> w(L);
      for (int k = 0; k < L; ++k) w[k] = (r + dr * k) * cols + (c + dc * k);
      set.windows.push_back(std::move(w));
    }
  }
  return set;
}

NeighborhoodSet extract_neighborhoods(const PyramidLayout& layout, int scale, Orientation o,
                                      Direction direction, int L) {
  const auto& sb = layout.subband(scale, o);
  return extract_neighborhoods(sb.rows, sb.cols, direction, L);
}

NeighborhoodSet extract_neighborhoods(const WaveletPyramid& pyramid, int scale, Orientation o,
                                      Direction direction, int L) {
  return extract_neighborhoods(pyramid.layout(), scale, o, direction, L);
}

}  // namespace onebit
