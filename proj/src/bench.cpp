#include "onebit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "onebit/biht.hpp"
#include "onebit/error.hpp"
#include "onebit/measurement.hpp"
#include "onebit/vb.hpp"

namespace onebit {

namespace {

const std::vector<std::string> kAlgorithms{"biht", "dgvc-mdl", "vb-ablation"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw DomainError("not a number: '" + text + "'");
  return value;
}

bool parse_bool(const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw DomainError("not a boolean: '" + text + "'");
}

// "2,3,4" or "2:6" or "2:6:0.5" (inclusive).
std::vector<double> parse_rates(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    const auto range = split(item, ':');
    if (range.size() == 1) {
      out.push_back(parse_number<double>(range[0]));
    } else if (range.size() == 2 || range.size() == 3) {
      const double lo = parse_number<double>(range[0]);
      const double hi = parse_number<double>(range[1]);
      const double step = range.size() == 3 ? parse_number<double>(range[2]) : 1.0;
      if (!(step > 0.0) || hi < lo) throw DomainError("bad rate range '" + item + "'");
      const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
      for (int k = 0; k <= count; ++k) out.push_back(lo + k * step);
    } else {
      throw DomainError("bad rate '" + item + "'");
    }
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kCellTag = 0x63656c6cULL;
constexpr std::uint64_t kImageTag = 0x696d6167ULL;
constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;

Eigen::VectorXd true_signal(const ExperimentSpec& spec, int trial, const Grid* loaded) {
  if (loaded != nullptr) return analyze(*loaded, spec.levels, spec.filter).coefficients();
  const std::uint64_t seed = image_seed(spec.seed, trial);
  if (spec.image == "model") {
    ModelImageOptions options;
    options.levels = spec.levels;
    options.rho = spec.rho;
    options.f = spec.f;
    return synthesize_model_pyramid(spec.rows, spec.cols, seed, options).coefficients();
  }
  const Grid image = synthesize_test_image(spec.image, spec.rows, spec.cols, seed);
  return analyze(image, spec.levels, spec.filter).coefficients();
}

std::string rate_tag(double rate) {
  std::string s = format_double(rate);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

CellResult run_cell_impl(const ExperimentSpec& spec, double rate, int trial,
                         const std::string& algorithm, const Grid* loaded) {
  CellResult cell;
  cell.rate = rate;
  cell.trial = trial;
  cell.algorithm = algorithm;
  const auto start = std::chrono::steady_clock::now();
  try {
    const Eigen::VectorXd x = true_signal(spec, trial, loaded);
    const auto m = static_cast<int>(x.size());
    const PyramidLayout layout = loaded != nullptr
                                     ? PyramidLayout(static_cast<int>(loaded->rows()),
                                                     static_cast<int>(loaded->cols()), spec.levels)
                                     : PyramidLayout(spec.rows, spec.cols, spec.levels);
    const int n = std::max(1, static_cast<int>(std::lround(rate * m)));
    const std::uint64_t seed = cell_seed(spec.seed, rate, trial);
    const Eigen::MatrixXd A = generate_matrix(n, m, seed);
    double sigma = spec.sigma_n;
    if (spec.noise_relative && sigma > 0.0) sigma *= (A * x).norm() / std::sqrt(static_cast<double>(n));
    const SignVector t = measure(A, x, sigma, mix_seed(seed, kNoiseTag));

    Eigen::VectorXd x_hat;
    if (algorithm == "biht") {
      BihtConfig config;
      config.sparsity_k = energy_support(x, 0.95);
      config.step = spec.biht_step;
      config.max_iter = spec.biht_max_iter;
      const auto r = biht_recover(t, A, config);
      x_hat = r.x;
      cell.iterations = r.iterations;
    } else {
      RecoveryConfig config;
      config.copula_enabled = algorithm == "dgvc-mdl";
      config.L = spec.L;
      config.max_iter = spec.max_iter;
      config.tol = spec.tol;
      config.tau0 = spec.tau0;
      config.lambda0 = spec.lambda0;
      config.sigma_n = sigma;
      const auto r = recover(t, A, layout, config, &x);
      x_hat = r.x_hat;
      cell.iterations = r.iterations;
      if (spec.write_traces) {
        const auto dir = spec.output_dir / "traces";
        std::filesystem::create_directories(dir);
        std::ofstream os(dir / (algorithm + "_rate" + rate_tag(rate) + "_trial" +
                                std::to_string(trial) + ".csv"));
        write_trace_csv(os, r.trace);
      }
    }
    cell.snr_db = reconstruction_snr(x, x_hat);
    cell.sign_consistency = sign_consistency(A, x_hat, t);
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.snr_db = std::nan("");
    cell.sign_consistency = std::nan("");
    cell.message = e.what();
  }
  cell.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

}  // namespace

// ---------------------------------------------------------------- spec

bool ExperimentSpec::synthetic() const {
  return std::find(image_kinds().begin(), image_kinds().end(), image) != image_kinds().end();
}

void ExperimentSpec::validate() const {
  if (rates.empty()) throw DomainError("rates must not be empty");
  for (double r : rates)
    if (!(r >= 1.0) || !std::isfinite(r)) throw DomainError("every rate must be >= 1");
  if (trials < 1) throw DomainError("trials must be >= 1");
  if (algorithms.empty()) throw DomainError("algorithms must not be empty");
  for (const auto& a : algorithms)
    if (std::find(kAlgorithms.begin(), kAlgorithms.end(), a) == kAlgorithms.end())
      throw DomainError("unknown algorithm '" + a + "'");
  if (sigma_n < 0.0) throw DomainError("sigma_n must be non-negative");
  if (workers < 1) throw DomainError("workers must be >= 1");
  if (L < 2) throw DomainError("L must be >= 2");
  if (max_iter < 1 || biht_max_iter < 1) throw DomainError("iteration limits must be >= 1");
  if (!(tol > 0.0) || !(biht_step > 0.0)) throw DomainError("tol and biht_step must be positive");
  if (!(tau0 > 0.0) || !(lambda0 > 0.0)) throw DomainError("tau0 and lambda0 must be positive");
  if (!(rho > -1.0 && rho < 1.0)) throw DomainError("rho must lie in (-1, 1)");
  if (!(f > 0.0)) throw DomainError("f must be positive");
  if (synthetic()) {
    try {
      PyramidLayout(rows, cols, levels);
    } catch (const Error& e) {
      throw DomainError(std::string("image dims: ") + e.what());
    }
  } else if (image.empty()) {
    throw DomainError("image must name a generator or a PGM file");
  }
}

ExperimentSpec parse_spec(std::istream& is) {
  ExperimentSpec spec;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DomainError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    try {
      if (key == "image") spec.image = value;
      else if (key == "rows") spec.rows = parse_number<int>(value);
      else if (key == "cols") spec.cols = parse_number<int>(value);
      else if (key == "m") {
        const int m = parse_number<int>(value);
        const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
        if (side * side != m) throw DomainError("m must be a perfect square; use rows and cols");
        spec.rows = spec.cols = side;
      }
      else if (key == "levels") spec.levels = parse_number<int>(value);
      else if (key == "filter") spec.filter = parse_filter(value);
      else if (key == "rates") spec.rates = parse_rates(value);
      else if (key == "trials") spec.trials = parse_number<int>(value);
      else if (key == "algorithms") spec.algorithms = split(value, ',');
      else if (key == "sigma_n") spec.sigma_n = parse_number<double>(value);
      else if (key == "noise_relative") spec.noise_relative = parse_bool(value);
      else if (key == "seed") spec.seed = parse_number<std::uint64_t>(value);
      else if (key == "output_dir") spec.output_dir = value;
      else if (key == "workers") spec.workers = parse_number<int>(value);
      else if (key == "L") spec.L = parse_number<int>(value);
      else if (key == "max_iter") spec.max_iter = parse_number<int>(value);
      else if (key == "tol") spec.tol = parse_number<double>(value);
      else if (key == "tau0") spec.tau0 = parse_number<double>(value);
      else if (key == "lambda0") spec.lambda0 = parse_number<double>(value);
      else if (key == "rho") spec.rho = parse_number<double>(value);
      else if (key == "f") spec.f = parse_number<double>(value);
      else if (key == "biht_step") spec.biht_step = parse_number<double>(value);
      else if (key == "biht_max_iter") spec.biht_max_iter = parse_number<int>(value);
      else if (key == "write_traces") spec.write_traces = parse_bool(value);
      else throw DomainError("unknown key '" + key + "'");
    } catch (const Error& e) {
      throw DomainError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return parse_spec(is);
}

// ---------------------------------------------------------------- sweep

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value));
}

std::uint64_t cell_seed(std::uint64_t seed, double rate, int trial) {
  const std::uint64_t h = mix_seed(mix_seed(seed, kCellTag), std::bit_cast<std::uint64_t>(rate));
  return mix_seed(h, static_cast<std::uint64_t>(trial));
}

std::uint64_t image_seed(std::uint64_t seed, int trial) {
  return mix_seed(mix_seed(seed, kImageTag), static_cast<std::uint64_t>(trial));
}

CellResult run_cell(const ExperimentSpec& spec, double rate, int trial, const std::string& algorithm) {
  std::optional<Grid> loaded;
  if (!spec.synthetic()) loaded = read_pgm(spec.image);
  return run_cell_impl(spec, rate, trial, algorithm, loaded ? &*loaded : nullptr);
}

std::vector<CellResult> run_sweep(const ExperimentSpec& spec, int workers) {
  spec.validate();
  std::optional<Grid> loaded;
  if (!spec.synthetic()) loaded = read_pgm(spec.image);

  std::vector<double> rates = spec.rates;
  std::sort(rates.begin(), rates.end());
  rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
  std::vector<std::string> algorithms = spec.algorithms;
  std::sort(algorithms.begin(), algorithms.end());
  algorithms.erase(std::unique(algorithms.begin(), algorithms.end()), algorithms.end());

  std::vector<CellResult> cells;
  for (double r : rates)
    for (const auto& a : algorithms)
      for (int t = 0; t < spec.trials; ++t) {
        CellResult c;
        c.rate = r;
        c.algorithm = a;
        c.trial = t;
        cells.push_back(std::move(c));
      }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++)
      cells[i] = run_cell_impl(spec, cells[i].rate, cells[i].trial, cells[i].algorithm,
                               loaded ? &*loaded : nullptr);
  };
  const auto count = static_cast<std::size_t>(std::clamp<int>(workers, 1, static_cast<int>(cells.size())));
  if (count == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < count; ++k) pool.emplace_back(work);
  }
  return cells;
}

std::vector<CellResult> run_sweep(const ExperimentSpec& spec) {
  int workers = spec.workers;
  if (const char* env = std::getenv("BENCH_WORKERS"); env != nullptr && *env != '\0') {
    try {
      workers = parse_number<int>(trim(env));
    } catch (const Error&) {
      throw DomainError(std::string("BENCH_WORKERS is not an integer: '") + env + "'");
    }
    if (workers < 1) throw DomainError("BENCH_WORKERS must be >= 1");
  }
  return run_sweep(spec, workers);
}

void write_results_csv(std::ostream& os, const std::vector<CellResult>& rows) {
  os << "rate,trial,algorithm,snr_db,sign_consistency,iterations,status,wall_ms\n";
  for (const auto& r : rows) {
    std::ostringstream wall;
    wall << std::fixed << std::setprecision(3) << r.wall_ms;
    os << format_double(r.rate) << ',' << r.trial << ',' << r.algorithm << ','
       << (r.ok ? format_double(r.snr_db) : "nan") << ','
       << (r.ok ? format_double(r.sign_consistency) : "nan") << ',' << r.iterations << ','
       << (r.ok ? "ok" : "failed") << ',' << wall.str() << '\n';
  }
}

std::vector<CellResult> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("results CSV is empty");
  if (trim(line) != "rate,trial,algorithm,snr_db,sign_consistency,iterations,status,wall_ms")
    throw IoError("unexpected results header: " + line);
  std::vector<CellResult> rows;
  int number = 1;
  while (std::getline(is, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw IoError("results line " + std::to_string(number) + ": expected 8 fields");
    try {
      CellResult r;
      r.rate = parse_number<double>(f[0]);
      r.trial = parse_number<int>(f[1]);
      r.algorithm = f[2];
      r.ok = f[6] == "ok";
      if (!r.ok && f[6] != "failed") throw DomainError("bad status '" + f[6] + "'");
      r.snr_db = f[3] == "nan" ? std::nan("") : parse_number<double>(f[3]);
      r.sign_consistency = f[4] == "nan" ? std::nan("") : parse_number<double>(f[4]);
      r.iterations = parse_number<int>(f[5]);
      r.wall_ms = parse_number<double>(f[7]);
      rows.push_back(std::move(r));
    } catch (const DomainError& e) {
      throw IoError("results line " + std::to_string(number) + ": " + e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------- summary

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double interquartile_range(std::vector<double> values) {
  if (values.size() < 2) return values.empty() ? std::nan("") : 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t half = values.size() / 2;
  const std::vector<double> lower(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<double> upper(values.end() - static_cast<std::ptrdiff_t>(half), values.end());
  return median(upper) - median(lower);
}

std::vector<SummaryRow> summarize(const std::vector<CellResult>& rows) {
  if (rows.empty()) throw DegenerateDataError("no results to summarize");
  struct Bucket {
    std::vector<double> snr, consistency;
    int failures = 0;
  };
  std::map<std::pair<double, std::string>, Bucket> buckets;
  for (const auto& r : rows) {
    auto& b = buckets[{r.rate, r.algorithm}];
    if (r.ok) {
      b.snr.push_back(r.snr_db);
      b.consistency.push_back(r.sign_consistency);
    } else {
      ++b.failures;
    }
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, b] : buckets) {
    SummaryRow s;
    s.rate = key.first;
    s.algorithm = key.second;
    s.median_snr_db = median(b.snr);
    s.iqr_snr_db = interquartile_range(b.snr);
    s.median_sign_consistency = median(b.consistency);
    s.trials_ok = static_cast<int>(b.snr.size());
    s.failures = b.failures;
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& summary) {
  os << "rate,algorithm,median_snr_db,iqr_snr_db,median_sign_consistency,trials_ok,failures\n";
  for (const auto& s : summary)
    os << format_double(s.rate) << ',' << s.algorithm << ',' << format_double(s.median_snr_db) << ','
       << format_double(s.iqr_snr_db) << ',' << format_double(s.median_sign_consistency) << ','
       << s.trials_ok << ',' << s.failures << '\n';
}

void write_plot_data(std::ostream& os, const std::vector<SummaryRow>& summary) {
  std::map<std::string, std::vector<const SummaryRow*>> series;
  for (const auto& s : summary) series[s.algorithm].push_back(&s);
  bool first = true;
  for (const auto& [algorithm, points] : series) {
    if (!first) os << "\n\n";
    first = false;
    os << "# " << algorithm << "\n# rate median_snr_db\n";
    for (const auto* p : points) os << format_double(p->rate) << ' ' << format_double(p->median_snr_db) << '\n';
  }
}

}  // namespace onebit
