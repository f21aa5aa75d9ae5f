#pragma once

// Subcommands of the tvmrf tool and the pipelines behind them.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvmrf/cli/matrix_io.hpp"
#include "tvmrf/estimator.hpp"

namespace tvmrf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

inline constexpr const char* kVersion = "0.1.0";

// Runs one invocation; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Thread count from TVMRF_THREADS, or 1 when unset or invalid.
unsigned default_threads();

// Off-diagonal coordinates whose zero/nonzero status differs.
std::size_t support_change_count(const SymMatrix& a, const SymMatrix& b);

struct BenchOptions {
  std::vector<std::size_t> dims;
  std::vector<std::size_t> horizons;
  std::vector<unsigned> threads{1};
  double samples_factor = 0.5;  // N_t = max(1, round(factor * d))
  std::size_t reps = 3;
  std::uint64_t seed = 0;
  double alpha = 0.7;
  double tau = 1.0;
  double c_lambda = 1.0;
  double c_nu = 2.0;
};

struct BenchRow {
  std::size_t dim = 0;
  std::size_t horizon = 0;
  std::size_t coordinates = 0;
  unsigned threads = 1;
  double wall_ms = 0.0;  // fastest solve + assembly over the repetitions
  double mapping_ms = 0.0;
};

// Edge-perturbation family with d edges and max(1, d / 100) changes per
// step, sampled and mapped per time, then timed on every (d, T, threads).
std::vector<BenchRow> run_bench(const BenchOptions& options);

struct IngestOptions {
  bool log_returns = true;
  bool standardize = false;
  std::size_t stride = 30;
  std::size_t start = 0;  // 0 means `stride`
  double bandwidth_scale = 0.3;  // h = scale * T^{-1/3}
  bool normalize_weights = true;
  double alpha = 0.9;
  double lambda0 = 1.0;  // lambda_t = lambda0 * sqrt(log d / (T h))
  double nu0 = 1.0;
  unsigned threads = 1;
};

struct IngestResult {
  std::vector<std::string> columns;
  std::size_t horizon = 0;
  PrecisionEstimate estimate;
  // changes[i] compares estimates at times[i] and times[i + 1].
  std::vector<std::size_t> change_times;
  std::vector<std::size_t> changes;
};

// Prices (or returns) per row -> log-returns -> centered columns -> one
// sample per time -> kernel estimates at the stride -> support changes.
IngestResult ingest_timeseries(const io::CsvTable& table, const IngestOptions& options);

}  // namespace tvmrf::cli
