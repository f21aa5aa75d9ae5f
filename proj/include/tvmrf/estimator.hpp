#pragma once

// Full estimation problem over all upper-triangular coordinates of a
// sequence of precision matrices. The objective separates by coordinate, so
// each coordinate is an independent call into the segment solver.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tvmrf/gmrf_mapping.hpp"
#include "tvmrf/sym_matrix.hpp"

namespace tvmrf {

struct EstimatorConfig {
  double alpha = 0.5;  // weight of the change term; (1 - alpha) weighs nonzeros
  ParameterSchedule schedule;
  MappingMode mode = MappingMode::PerTime;
  std::optional<KernelSpec> kernel;
  std::vector<std::size_t> times;  // kernel mode estimation times; empty = all
  InversionOptions inversion;
  unsigned threads = 1;
  // Drop diagonal coordinates from the nonzero count (graph-only sparsity).
  bool exempt_diagonal = false;
  // Record the minimum eigenvalue of every estimate (d <= 2000).
  bool eigen_diagnostics = false;
};

struct PhaseTimings {
  double mapping_ms = 0.0;
  double solve_ms = 0.0;
  double assembly_ms = 0.0;
  double total_ms() const noexcept { return mapping_ms + solve_ms + assembly_ms; }
};

struct PrecisionEstimate {
  MatrixSequence matrices;
  std::vector<std::size_t> times;  // dataset time of each matrix
  double objective = 0.0;          // sum of per_coordinate_objectives in coordinate order
  std::vector<double> per_coordinate_objectives;
  std::int64_t nonzeros = 0;  // counted entries, excluding diagonals when exempt
  std::int64_t changes = 0;
  std::vector<RidgeAdjustment> adjustments;
  std::vector<double> min_eigenvalues;
  PhaseTimings timings;
};

// Maps samples to proxy precisions per config.mode (PerTime or Kernel), then
// solves. Mapping errors carry the time index.
PrecisionEstimate estimate(const SampleDataset& dataset, const EstimatorConfig& config);

// Solves directly on caller-supplied backward maps (bypass protocol). The
// config mode is ignored.
PrecisionEstimate estimate_from_maps(const MatrixSequence& maps, const EstimatorConfig& config);

// (1 - alpha) * sum_t ||theta_t||_0 + alpha * sum_t ||theta_t - theta_{t-1}||_0
// over packed coordinates, recounted from the matrices.
double full_objective(const MatrixSequence& matrices, double alpha, bool exempt_diagonal = false);

struct Theorem1Check {
  double approximation_error = 0.0;  // ||truth_t - map_t||_max
  double min_magnitude = 0.0;        // min over the support of truth_t (inf when empty)
  double min_change = 0.0;           // min over the support of truth_t - truth_{t-1} (inf when empty or t = 0)
  bool approximation = false;        // approximation_error < lambda_t
  bool magnitude = false;            // 2 lambda_t <= min_magnitude
  bool change = false;               // 2 lambda_t + 2 lambda_{t-1} <= min_change
  bool holds() const noexcept { return approximation && magnitude && change; }
};

struct Theorem1Report {
  std::vector<Theorem1Check> per_time;
  bool all_hold() const noexcept;
};

// Deterministic sufficient conditions for exact support recovery with
// ||est_t - truth_t||_max <= 2 lambda_t.
Theorem1Report verify_theorem1_conditions(const MatrixSequence& truth, const MatrixSequence& maps,
                                          const std::vector<double>& lambda);

}  // namespace tvmrf
