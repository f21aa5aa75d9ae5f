#include "tvmrf/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "tvmrf/errors.hpp"
#include "tvmrf/parallel.hpp"
#include "tvmrf/segment_core.hpp"

namespace tvmrf {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_maps(const MatrixSequence& maps) {
  if (maps.empty()) throw DataError("no backward maps");
  const std::size_t d = maps.front().dim();
  if (d == 0) throw DataError("backward maps have dimension 0");
  for (std::size_t t = 0; t < maps.size(); ++t) {
    if (maps[t].dim() != d) {
      throw DataError("backward map " + std::to_string(t) + " has dimension " + std::to_string(maps[t].dim()) +
                      ", expected " + std::to_string(d));
    }
    for (double v : maps[t].packed()) {
      if (!std::isfinite(v)) throw DataError("backward map " + std::to_string(t) + " has non-finite entries");
    }
  }
}

std::vector<char> diagonal_mask(std::size_t d) {
  std::vector<char> mask(packed_size(d), 0);
  for (std::size_t i = 0; i < d; ++i) mask[packed_index(i, i, d)] = 1;
  return mask;
}

std::vector<double> min_eigenvalues(const MatrixSequence& matrices, unsigned threads) {
  std::vector<double> out(matrices.size(), std::numeric_limits<double>::quiet_NaN());
  if (matrices.empty() || matrices.front().dim() > 2000) return out;
  parallel_for_chunks(matrices.size(), 1, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrices[t].to_dense(), Eigen::EigenvaluesOnly);
      out[t] = es.eigenvalues().minCoeff();
    }
  });
  return out;
}

}  // namespace

PrecisionEstimate estimate_from_maps(const MatrixSequence& maps, const EstimatorConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw ArgumentError("alpha must lie in (0, 1]");
  check_maps(maps);
  config.schedule.validate(maps.size());

  const auto solve_start = Clock::now();
  const std::size_t d = maps.front().dim();
  const std::size_t p = packed_size(d);
  const std::size_t n = maps.size();
  const unsigned threads = std::max(config.threads, 1u);
  const std::vector<double>& lambda = config.schedule.lambda;
  const std::vector<char> is_diag = diagonal_mask(d);

  PrecisionEstimate est;
  est.matrices.assign(n, SymMatrix(d));
  est.per_coordinate_objectives.assign(p, 0.0);
  std::vector<std::int64_t> nonzeros(p, 0);
  std::vector<std::int64_t> changes(p, 0);

  const std::size_t chunk = std::max<std::size_t>(1, p / (8 * static_cast<std::size_t>(threads)));
  parallel_for_chunks(p, chunk, threads, [&](std::size_t begin, std::size_t end) {
    CoordinateSolver solver;
    std::vector<double> lo(n), hi(n), values(n);
    for (std::size_t k = begin; k < end; ++k) {
      for (std::size_t t = 0; t < n; ++t) {
        const double v = maps[t].packed()[k];
        lo[t] = v - lambda[t];
        hi[t] = v + lambda[t];
      }
      const bool exempt = config.exempt_diagonal && is_diag[k];
      const SolveSummary s = solver.solve({lo, hi}, exempt ? 1.0 : config.alpha, values);
      for (std::size_t t = 0; t < n; ++t) est.matrices[t].packed()[k] = values[t];
      est.per_coordinate_objectives[k] =
          exempt ? config.alpha * static_cast<double>(s.changes) : s.objective;
      nonzeros[k] = exempt ? 0 : static_cast<std::int64_t>(s.nonzeros);
      changes[k] = static_cast<std::int64_t>(s.changes);
    }
  });
  est.timings.solve_ms = elapsed_ms(solve_start);

  const auto assembly_start = Clock::now();
  for (std::size_t k = 0; k < p; ++k) {
    est.objective += est.per_coordinate_objectives[k];
    est.nonzeros += nonzeros[k];
    est.changes += changes[k];
  }
  est.times.resize(n);
  for (std::size_t t = 0; t < n; ++t) est.times[t] = t;
  if (config.eigen_diagnostics) est.min_eigenvalues = min_eigenvalues(est.matrices, threads);
  est.timings.assembly_ms = elapsed_ms(assembly_start);
  return est;
}

PrecisionEstimate estimate(const SampleDataset& dataset, const EstimatorConfig& config) {
  if (config.mode == MappingMode::Bypass) throw ArgumentError("bypass mode requires backward maps");
  const auto mapping_start = Clock::now();
  MappingOptions options;
  options.mode = config.mode;
  options.kernel = config.kernel;
  options.times = config.times;
  options.inversion = config.inversion;
  options.threads = config.threads;
  BackwardMaps bm = build_backward_maps(dataset, config.schedule, options);
  const double mapping_ms = elapsed_ms(mapping_start);

  PrecisionEstimate est = estimate_from_maps(bm.maps, config);
  est.times = std::move(bm.times);
  est.adjustments = std::move(bm.adjustments);
  est.timings.mapping_ms = mapping_ms;
  return est;
}

double full_objective(const MatrixSequence& matrices, double alpha, bool exempt_diagonal) {
  if (matrices.empty()) return 0.0;
  const std::size_t d = matrices.front().dim();
  const std::vector<char> is_diag = diagonal_mask(d);
  std::size_t nonzeros = 0;
  std::size_t changes = 0;
  for (std::size_t t = 0; t < matrices.size(); ++t) {
    if (matrices[t].dim() != d) throw DataError("matrix sequence has inconsistent dimensions");
    const auto cur = matrices[t].packed();
    for (std::size_t k = 0; k < cur.size(); ++k) {
      if (cur[k] != 0.0 && !(exempt_diagonal && is_diag[k])) ++nonzeros;
      if (t > 0 && cur[k] != matrices[t - 1].packed()[k]) ++changes;
    }
  }
  return objective_value(nonzeros, changes, alpha);
}

bool Theorem1Report::all_hold() const noexcept {
  return std::all_of(per_time.begin(), per_time.end(), [](const Theorem1Check& c) { return c.holds(); });
}

Theorem1Report verify_theorem1_conditions(const MatrixSequence& truth, const MatrixSequence& maps,
                                          const std::vector<double>& lambda) {
  if (truth.size() != maps.size() || truth.size() != lambda.size()) {
    throw DataError("truth, maps and lambda must have the same length");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  Theorem1Report report;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (truth[t].dim() != maps[t].dim() || truth[t].dim() != truth.front().dim()) {
      throw DataError("truth and maps differ in shape at time " + std::to_string(t));
    }
    Theorem1Check c;
    c.min_magnitude = inf;
    c.min_change = inf;
    const auto cur = truth[t].packed();
    const auto map = maps[t].packed();
    for (std::size_t k = 0; k < cur.size(); ++k) {
      c.approximation_error = std::max(c.approximation_error, std::abs(cur[k] - map[k]));
      if (cur[k] != 0.0) c.min_magnitude = std::min(c.min_magnitude, std::abs(cur[k]));
      if (t > 0) {
        const double diff = cur[k] - truth[t - 1].packed()[k];
        if (diff != 0.0) c.min_change = std::min(c.min_change, std::abs(diff));
      }
    }
    c.approximation = c.approximation_error < lambda[t];
    c.magnitude = 2.0 * lambda[t] <= c.min_magnitude;
    c.change = t == 0 || 2.0 * lambda[t] + 2.0 * lambda[t - 1] <= c.min_change;
    report.per_time.push_back(c);
  }
  return report;
}

}  // namespace tvmrf
