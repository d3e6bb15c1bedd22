#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "onebit/bench.hpp"
#include "onebit/error.hpp"

namespace onebit {

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string token(std::istream& is) {
  std::string out;
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (std::isspace(c)) {
      c = is.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c) && c != '#') {
    out.push_back(static_cast<char>(c));
    c = is.get();
  }
  if (c == '#') is.unget();
  return out;
}

int header_int(std::istream& is, const char* what) {
  const std::string t = token(is);
  try {
    std::size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used != t.size() || v < 1) throw IoError("");
    return v;
  } catch (const std::exception&) {
    throw IoError(std::string("PGM: bad ") + what + " '" + t + "'");
  }
}

}  // namespace

Grid read_pgm(std::istream& is) {
  const std::string magic = token(is);
  if (magic != "P5" && magic != "P2") throw IoError("PGM: unsupported magic '" + magic + "'");
  const int cols = header_int(is, "width");
  const int rows = header_int(is, "height");
  const int maxval = header_int(is, "maxval");
  if (maxval > 255) throw IoError("PGM: maxval above 255 is not supported");
  Grid image(rows, cols);
  if (magic == "P5") {
    // token() consumed the single whitespace byte after maxval.
    std::string raw(static_cast<std::size_t>(rows) * cols, '\0');
    is.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (is.gcount() != static_cast<std::streamsize>(raw.size())) throw IoError("PGM: truncated pixel data");
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        image(r, c) = static_cast<unsigned char>(raw[static_cast<std::size_t>(r) * cols + c]) /
                      static_cast<double>(maxval);
  } else {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const std::string t = token(is);
        if (t.empty()) throw IoError("PGM: truncated pixel data");
        const int v = std::stoi(t);
        if (v < 0 || v > maxval) throw IoError("PGM: pixel out of range");
        image(r, c) = v / static_cast<double>(maxval);
      }
  }
  return image;
}

Grid read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_pgm(is);
}

void write_pgm(std::ostream& os, const Grid& image) {
  if (image.size() == 0) throw DimensionError("empty image");
  const double lo = image.minCoeff();
  const double span = image.maxCoeff() - lo;
  os << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < image.rows(); ++r)
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = span > 0.0 ? (image(r, c) - lo) / span : 0.0;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
  if (!os) throw IoError("PGM: write failed");
}

void write_pgm(const std::filesystem::path& path, const Grid& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_pgm(os, image);
}

}  // namespace onebit
