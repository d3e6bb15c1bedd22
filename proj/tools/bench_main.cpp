// bench: oversampling-rate sweeps for one-bit image recovery.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "onebit/bench.hpp"
#include "onebit/error.hpp"
#include "onebit/simd.hpp"

namespace fs = std::filesystem;
using namespace onebit;

namespace {

void write_summaries(const std::vector<CellResult>& rows, const fs::path& dir, const std::string& stem) {
  const auto summary = summarize(rows);
  {
    std::ofstream os(dir / (stem + "summary.csv"));
    if (!os) throw IoError("cannot write " + (dir / (stem + "summary.csv")).string());
    write_summary_csv(os, summary);
  }
  {
    std::ofstream os(dir / (stem + "plot.dat"));
    if (!os) throw IoError("cannot write " + (dir / (stem + "plot.dat")).string());
    write_plot_data(os, summary);
  }
  write_summary_csv(std::cout, summary);
}

int cmd_run(const fs::path& spec_path, int workers_flag) {
  ExperimentSpec spec = load_spec(spec_path);
  if (workers_flag > 0) spec.workers = workers_flag;
  fs::create_directories(spec.output_dir);
  std::cerr << "bench: " << spec.rates.size() * spec.algorithms.size() * spec.trials
            << " cells, kernels " << simd::isa_name(simd::active_isa()) << '\n';
  const auto rows = run_sweep(spec);
  const fs::path csv = spec.output_dir / "results.csv";
  {
    std::ofstream os(csv);
    if (!os) throw IoError("cannot write " + csv.string());
    write_results_csv(os, rows);
  }
  int failed = 0;
  for (const auto& r : rows) {
    if (r.ok) continue;
    ++failed;
    std::cerr << "failed: rate=" << r.rate << " trial=" << r.trial << " algorithm=" << r.algorithm
              << ": " << r.message << '\n';
  }
  write_summaries(rows, spec.output_dir, "");
  std::cerr << "bench: wrote " << csv.string() << " (" << failed << " failed)\n";
  return failed == 0 ? 0 : 1;
}

int cmd_summarize(const fs::path& csv, const fs::path& out_dir) {
  std::ifstream is(csv);
  if (!is) throw IoError("cannot open " + csv.string());
  const auto rows = read_results_csv(is);
  const fs::path dir = out_dir.empty() ? (csv.has_parent_path() ? csv.parent_path() : fs::path(".")) : out_dir;
  fs::create_directories(dir);
  write_summaries(rows, dir, csv.stem().string() + "_");
  for (const auto& r : rows)
    if (!r.ok) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-bit compressed sensing benchmark"};
  app.require_subcommand(1);

  fs::path spec_path;
  int workers = 0;
  auto* run = app.add_subcommand("run", "Run an oversampling-rate sweep");
  run->add_option("--spec", spec_path, "key=value experiment file")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "Worker threads (BENCH_WORKERS takes precedence)")
      ->check(CLI::PositiveNumber);

  fs::path csv, out_dir;
  auto* sum = app.add_subcommand("summarize", "Median / IQR table and plot data from a results CSV");
  sum->add_option("csv", csv, "results CSV")->required()->check(CLI::ExistingFile);
  sum->add_option("--out-dir", out_dir, "Directory for the summary files (default: next to the CSV)");

  std::string kind;
  fs::path out;
  int rows = 32, cols = 32;
  std::uint64_t seed = 1;
  ModelImageOptions model;
  auto* image = app.add_subcommand("image", "Write a synthetic test image as PGM");
  image->add_option("--kind", kind, "blocks | gradient-edges | model")->required();
  image->add_option("--out", out, "Output PGM")->required();
  image->add_option("--rows", rows, "Image rows")->capture_default_str();
  image->add_option("--cols", cols, "Image columns")->capture_default_str();
  image->add_option("--seed", seed, "Generator seed")->capture_default_str();
  image->add_option("--levels", model.levels, "Pyramid depth (model)")->capture_default_str();
  image->add_option("--rho", model.rho, "Neighbor correlation (model)")->capture_default_str();
  image->add_option("--f", model.f, "DL shape (model)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(spec_path, workers);
    if (*sum) return cmd_summarize(csv, out_dir);
    if (*image) {
      write_pgm(out, synthesize_test_image(kind, rows, cols, seed, model));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
