#pragma once

// Approximate backward mapping for Gaussian MRFs: from per-time samples to a
// proxy precision matrix [ST_nu(C_t)]^{-1}, where C_t is either the sample
// covariance at time t or a kernel-weighted pool of nearby sample
// covariances. Also builds the lambda/nu schedules and coordinate boxes.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tvmrf/sym_matrix.hpp"

namespace tvmrf {

// Zero-mean observations; blocks[t] is N_t x d.
struct SampleDataset {
  std::size_t dim = 0;
  std::vector<Eigen::MatrixXd> blocks;

  std::size_t horizon() const noexcept { return blocks.empty() ? 0 : blocks.size() - 1; }
  std::vector<std::size_t> samples_per_time() const;
  // Throws DataError on empty blocks, dimension mismatch or non-finite data.
  void validate() const;
};

enum class KernelFamily { TruncatedGaussian };

struct KernelSpec {
  KernelFamily family = KernelFamily::TruncatedGaussian;
  double bandwidth = 1.0;  // h
  bool normalize = true;   // rescale weights to sum to one over s = 0..t
};

// K(x) = exp(-x^2 / 2) / c on [-1, 1] and 0 outside, with c making the
// integral one.
double kernel_value(KernelFamily family, double x) noexcept;

// w(s, t) = K((s - t) / (T h)) / (T h); T is the dataset horizon (taken as 1
// when the horizon is 0).
double kernel_weight(const KernelSpec& kernel, std::size_t s, std::size_t t, std::size_t horizon);

// (1/N) X^T X.
SymMatrix sample_covariance(const Eigen::MatrixXd& block);

// sum_{s<=t} w(s, t) * sample_covariance(block s).
SymMatrix weighted_covariance(const SampleDataset& dataset, const KernelSpec& kernel, std::size_t t);

// Off-diagonals shrunk toward zero by nu; diagonal untouched.
SymMatrix soft_threshold(const SymMatrix& m, double nu);

struct InversionOptions {
  // Residual ||M M^{-1} - I||_max allowed, relative to ||M||_max.
  double residual_tolerance = 1e-8;
  bool verify_residual = true;
};

// Inverse through a Cholesky factorization. Throws NotPositiveDefinite with
// the failing pivot, or NumericalError when the residual check fails.
SymMatrix invert_spd(const SymMatrix& m, const InversionOptions& options = {});

enum class MappingMode { PerTime, Kernel, Bypass };

// lambda_t > 0 is the half-width of every coordinate box at time t; nu_t >= 0
// is the covariance soft-threshold.
struct ParameterSchedule {
  std::vector<double> lambda;
  std::vector<double> nu;

  std::size_t size() const noexcept { return lambda.size(); }
  void validate(std::size_t expected_length) const;
  static ParameterSchedule constant(std::size_t length, double lambda, double nu = 0.0);
};

enum class ScheduleForm {
  SquareRoot,  // c * sqrt(tau log d / N_t), or c * sqrt(tau log d) / T^{1/3} in kernel mode
  LogLinear,   // c * log d / N_t
};

struct ScheduleRequest {
  std::size_t dim = 2;
  std::size_t horizon = 0;                    // T of the underlying series (kernel mode)
  std::vector<std::size_t> samples_per_time;  // per-time mode; one entry per estimated time
  std::size_t length = 0;                     // kernel mode: number of estimated times
  double tau = 1.0;
  double c_lambda = 1.0;
  double c_nu = 1.0;
  MappingMode mode = MappingMode::PerTime;
  ScheduleForm form = ScheduleForm::SquareRoot;
};

ParameterSchedule default_schedule(const ScheduleRequest& request);

struct CoordinateBoxes {
  std::vector<double> lower;
  std::vector<double> upper;
};

// [map_k - lambda, map_k + lambda] for every packed coordinate k.
CoordinateBoxes build_bounds(const SymMatrix& backward_map, double lambda);

struct RidgeAdjustment {
  std::size_t time_index = 0;
  double ridge = 0.0;
};

struct BackwardMaps {
  MatrixSequence maps;
  std::vector<std::size_t> times;  // dataset time of each map
  std::vector<RidgeAdjustment> adjustments;
};

struct MappingOptions {
  MappingMode mode = MappingMode::PerTime;
  std::optional<KernelSpec> kernel;
  // Kernel mode only: dataset times to estimate at. Empty means every time.
  std::vector<std::size_t> times;
  InversionOptions inversion;
  unsigned threads = 1;
};

// One proxy precision per requested time. nu is read from schedule.nu. When
// a thresholded covariance is not positive definite, a ridge of
// 1e-6 * trace / d is added once and recorded; a second failure throws
// NotPositiveDefinite carrying the time index.
BackwardMaps build_backward_maps(const SampleDataset& dataset, const ParameterSchedule& schedule,
                                 const MappingOptions& options);

// Bypass protocol: caller-supplied maps are used unchanged.
BackwardMaps bypass_maps(MatrixSequence maps);

}  // namespace tvmrf
