#pragma once

// Oversampling-rate sweep harness: test images, the experiment spec, the
// per-cell runner and result summaries.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "onebit/wavelet.hpp"

namespace onebit {

// ---------------------------------------------------------------- images

// Binary P5 (maxval <= 255) or ASCII P2. Values are scaled to [0, 1].
Grid read_pgm(const std::filesystem::path& path);
Grid read_pgm(std::istream& is);
// 8-bit P5, min-max scaled (a constant image maps to 0).
void write_pgm(const std::filesystem::path& path, const Grid& image);
void write_pgm(std::ostream& os, const Grid& image);

struct ModelImageOptions {
  int levels = 2;
  double rho = 0.6;        // row and column neighbor correlation of the copula field
  double f = 3.0;          // DL shape of every detail subband
  double eta_finest = 8.0; // DL rate at scale 1
  double scale_growth = 2.0; // coefficient scale ratio between adjacent scales
};

// Known kinds: "blocks", "gradient-edges", "model". Throws DomainError for
// anything else and for dims the kind cannot produce.
Grid synthesize_test_image(const std::string& kind, int rows, int cols, std::uint64_t seed,
                           const ModelImageOptions& options = {});
// Pyramid behind the "model" kind: every detail subband carries DL marginals
// coupled by a separable AR(1) Gaussian copula field (row/column rho,
// diagonal rho^2); LL is i.i.d. DL with a larger scale.
WaveletPyramid synthesize_model_pyramid(int rows, int cols, std::uint64_t seed,
                                        const ModelImageOptions& options = {});
const std::vector<std::string>& image_kinds();

// ---------------------------------------------------------------- spec

struct ExperimentSpec {
  std::string image = "model";  // synthetic kind or path to a PGM
  int rows = 32;
  int cols = 32;
  int levels = 2;
  WaveletFilter filter = WaveletFilter::Haar;
  std::vector<double> rates{2, 3, 4, 5, 6};
  int trials = 20;
  std::vector<std::string> algorithms{"dgvc-mdl", "vb-ablation", "biht"};
  double sigma_n = 0.0;
  // When set, the noise level is sigma_n times the RMS of the clean
  // measurements A x.
  bool noise_relative = false;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "bench_out";
  int workers = 1;

  // Recovery settings shared by both VB arms. The sweep defaults trade the
  // library's near-flat start (lambda0 = 1e-8, which spends ~50 sweeps
  // tightening the prior) for a short fixed budget.
  int L = 3;
  int max_iter = 30;
  double tol = 1e-4;
  double tau0 = 1e-8;
  double lambda0 = 0.1;
  // Model-image generator.
  double rho = 0.6;
  double f = 3.0;
  // BIHT.
  double biht_step = 1.0;
  int biht_max_iter = 500;

  bool write_traces = false;

  bool synthetic() const;
  // Throws DomainError when a field is out of range.
  void validate() const;
};

// Flat key=value lines; '#' starts a comment. Unknown keys and malformed
// values throw DomainError naming the line.
ExperimentSpec parse_spec(std::istream& is);
ExperimentSpec load_spec(const std::filesystem::path& path);

// ---------------------------------------------------------------- sweep

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value);
// Stable per-cell seed; independent of the algorithm and of the other rates.
std::uint64_t cell_seed(std::uint64_t seed, double rate, int trial);
std::uint64_t image_seed(std::uint64_t seed, int trial);

struct CellResult {
  double rate = 0.0;
  int trial = 0;
  std::string algorithm;
  double snr_db = 0.0;
  double sign_consistency = 0.0;
  int iterations = 0;
  bool ok = false;
  double wall_ms = 0.0;
  std::string message;  // failure reason, not written to the CSV
};

// Runs every (rate, trial, algorithm) cell with up to `workers` threads and
// returns the rows in canonical order (rate, algorithm, trial).
std::vector<CellResult> run_sweep(const ExperimentSpec& spec, int workers);
// Same, with the worker count from the spec.
std::vector<CellResult> run_sweep(const ExperimentSpec& spec);
// Single cell; never throws for numerical failures (they become ok = false).
CellResult run_cell(const ExperimentSpec& spec, double rate, int trial,
                    const std::string& algorithm);

void write_results_csv(std::ostream& os, const std::vector<CellResult>& rows);
std::vector<CellResult> read_results_csv(std::istream& is);

// ---------------------------------------------------------------- summary

struct SummaryRow {
  double rate = 0.0;
  std::string algorithm;
  double median_snr_db = 0.0;
  double iqr_snr_db = 0.0;
  double median_sign_consistency = 0.0;
  int trials_ok = 0;
  int failures = 0;
};

double median(std::vector<double> values);
// Q3 - Q1 with quartiles taken as medians of the lower and upper halves
// (the middle value excluded for odd counts); 0 for fewer than two values.
double interquartile_range(std::vector<double> values);

// Throws DegenerateDataError on empty input.
std::vector<SummaryRow> summarize(const std::vector<CellResult>& rows);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& summary);
// One block per algorithm ("# algorithm" header, then "rate median_snr_db"
// lines), blocks separated by two blank lines.
void write_plot_data(std::ostream& os, const std::vector<SummaryRow>& summary);

}  // namespace onebit
