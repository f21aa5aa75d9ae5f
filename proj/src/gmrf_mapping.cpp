#include "tvmrf/gmrf_mapping.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tvmrf/errors.hpp"
#include "tvmrf/parallel.hpp"

namespace tvmrf {
namespace {

// Integral of exp(-x^2/2) over [-1, 1].
const double kTruncatedGaussianMass = std::sqrt(2.0 * std::numbers::pi) * std::erf(1.0 / std::numbers::sqrt2);

// Index of the first non-positive pivot of an unblocked Cholesky sweep.
std::size_t failing_pivot(const Eigen::MatrixXd& a) {
  const Eigen::Index d = a.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double diag = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 0.0) || !std::isfinite(diag)) return static_cast<std::size_t>(j);
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return static_cast<std::size_t>(d);
}

SymMatrix add_ridge(SymMatrix m, double ridge) {
  for (std::size_t i = 0; i < m.dim(); ++i) m(i, i) += ridge;
  return m;
}

}  // namespace

std::vector<std::size_t> SampleDataset::samples_per_time() const {
  std::vector<std::size_t> n;
  n.reserve(blocks.size());
  for (const auto& b : blocks) n.push_back(static_cast<std::size_t>(b.rows()));
  return n;
}

void SampleDataset::validate() const {
  if (blocks.empty()) throw DataError("dataset has no time blocks");
  if (dim == 0) throw DataError("dataset dimension must be positive");
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    const auto& b = blocks[t];
    if (b.rows() < 1) throw DataError("time block " + std::to_string(t) + " has no samples");
    if (static_cast<std::size_t>(b.cols()) != dim) {
      throw DataError("time block " + std::to_string(t) + " has " + std::to_string(b.cols()) +
                      " columns, expected " + std::to_string(dim));
    }
    if (!b.allFinite()) throw DataError("time block " + std::to_string(t) + " contains non-finite values");
  }
}

double kernel_value(KernelFamily family, double x) noexcept {
  switch (family) {
    case KernelFamily::TruncatedGaussian:
      return std::abs(x) <= 1.0 ? std::exp(-0.5 * x * x) / kTruncatedGaussianMass : 0.0;
  }
  return 0.0;
}

double kernel_weight(const KernelSpec& kernel, std::size_t s, std::size_t t, std::size_t horizon) {
  if (!(kernel.bandwidth > 0.0) || !std::isfinite(kernel.bandwidth)) {
    throw ArgumentError("kernel bandwidth must be positive and finite");
  }
  const double scale = static_cast<double>(std::max<std::size_t>(horizon, 1)) * kernel.bandwidth;
  const double lag = static_cast<double>(s) - static_cast<double>(t);
  return kernel_value(kernel.family, lag / scale) / scale;
}

SymMatrix sample_covariance(const Eigen::MatrixXd& block) {
  if (block.rows() < 1) throw ArgumentError("sample_covariance: empty block");
  const Eigen::Index d = block.cols();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  acc.selfadjointView<Eigen::Upper>().rankUpdate(block.transpose(), 1.0 / static_cast<double>(block.rows()));
  return SymMatrix::from_dense(acc);
}

SymMatrix weighted_covariance(const SampleDataset& dataset, const KernelSpec& kernel, std::size_t t) {
  if (dataset.blocks.empty()) throw ArgumentError("weighted_covariance: empty dataset");
  if (t > dataset.horizon()) throw ArgumentError("weighted_covariance: time index past the horizon");
  const std::size_t horizon = dataset.horizon();

  std::vector<double> weights(t + 1);
  double total = 0.0;
  for (std::size_t s = 0; s <= t; ++s) {
    weights[s] = kernel_weight(kernel, s, t, horizon);
    total += weights[s];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegenerateWeights("kernel weights at time " + std::to_string(t) + " are all zero or non-finite");
  }

  SymMatrix out(dataset.dim);
  auto acc = out.packed();
  for (std::size_t s = 0; s <= t; ++s) {
    if (weights[s] == 0.0) continue;
    const double coef = kernel.normalize ? weights[s] / total : weights[s];
    const SymMatrix cs = sample_covariance(dataset.blocks[s]);
    const auto src = cs.packed();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += coef * src[k];
  }
  return out;
}

SymMatrix soft_threshold(const SymMatrix& m, double nu) {
  if (!(nu >= 0.0)) throw ArgumentError("soft_threshold: nu must be non-negative");
  SymMatrix out = m;
  const std::size_t d = m.dim();
  auto data = out.packed();
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) {
    ++k;  // diagonal
    for (std::size_t j = i + 1; j < d; ++j, ++k) {
      const double v = data[k];
      data[k] = v - std::copysign(std::min(std::abs(v), nu), v);
    }
  }
  return out;
}

SymMatrix invert_spd(const SymMatrix& m, const InversionOptions& options) {
  const Eigen::MatrixXd dense = m.to_dense();
  const Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(failing_pivot(dense));

  const auto d = static_cast<Eigen::Index>(m.dim());
  SymMatrix inv = SymMatrix::from_dense(llt.solve(Eigen::MatrixXd::Identity(d, d)));
  if (options.verify_residual) {
    const Eigen::MatrixXd residual = dense * inv.to_dense() - Eigen::MatrixXd::Identity(d, d);
    const double err = residual.cwiseAbs().maxCoeff();
    if (!(err <= options.residual_tolerance * m.max_abs())) {
      throw NumericalError("inverse residual " + std::to_string(err) + " exceeds tolerance");
    }
  }
  return inv;
}

void ParameterSchedule::validate(std::size_t expected_length) const {
  if (lambda.size() != expected_length || nu.size() != expected_length) {
    throw ArgumentError("schedule length " + std::to_string(lambda.size()) + " does not match " +
                        std::to_string(expected_length) + " estimated times");
  }
  for (std::size_t t = 0; t < lambda.size(); ++t) {
    if (!(lambda[t] > 0.0) || !std::isfinite(lambda[t])) throw ArgumentError("lambda must be positive and finite");
    if (!(nu[t] >= 0.0) || !std::isfinite(nu[t])) throw ArgumentError("nu must be non-negative and finite");
  }
}

ParameterSchedule ParameterSchedule::constant(std::size_t length, double lambda, double nu) {
  return {std::vector<double>(length, lambda), std::vector<double>(length, nu)};
}

ParameterSchedule default_schedule(const ScheduleRequest& r) {
  if (r.dim < 2) throw ArgumentError("default_schedule: dimension must be at least 2");
  if (!(r.tau > 0.0)) throw ArgumentError("default_schedule: tau must be positive");
  if (!(r.c_lambda > 0.0) || !(r.c_nu > 0.0)) throw ArgumentError("default_schedule: constants must be positive");
  const double log_d = std::log(static_cast<double>(r.dim));

  // Both forms share a rate; lambda and nu differ only by their constant.
  std::vector<double> rate;
  if (r.mode == MappingMode::Kernel) {
    const double horizon = static_cast<double>(std::max<std::size_t>(r.horizon, 1));
    const double value = r.form == ScheduleForm::SquareRoot ? std::sqrt(r.tau * log_d) / std::cbrt(horizon)
                                                            : log_d / std::pow(horizon, 2.0 / 3.0);
    rate.assign(r.length, value);
  } else {
    if (r.samples_per_time.empty()) throw ArgumentError("default_schedule: no sample counts given");
    for (std::size_t n : r.samples_per_time) {
      if (n == 0) throw ArgumentError("default_schedule: sample counts must be positive");
      const double nt = static_cast<double>(n);
      rate.push_back(r.form == ScheduleForm::SquareRoot ? std::sqrt(r.tau * log_d / nt) : log_d / nt);
    }
  }

  ParameterSchedule s;
  for (double v : rate) {
    s.lambda.push_back(r.c_lambda * v);
    s.nu.push_back(r.c_nu * v);
  }
  return s;
}

CoordinateBoxes build_bounds(const SymMatrix& backward_map, double lambda) {
  CoordinateBoxes boxes;
  const auto data = backward_map.packed();
  boxes.lower.reserve(data.size());
  boxes.upper.reserve(data.size());
  for (double v : data) {
    boxes.lower.push_back(v - lambda);
    boxes.upper.push_back(v + lambda);
  }
  return boxes;
}

BackwardMaps build_backward_maps(const SampleDataset& dataset, const ParameterSchedule& schedule,
                                 const MappingOptions& options) {
  if (options.mode == MappingMode::Bypass) throw ArgumentError("bypass mode takes maps, not samples");
  dataset.validate();

  BackwardMaps out;
  if (options.mode == MappingMode::Kernel) {
    if (!options.kernel) throw ArgumentError("kernel mode requires a kernel specification");
    if (options.times.empty()) {
      for (std::size_t t = 0; t <= dataset.horizon(); ++t) out.times.push_back(t);
    } else {
      for (std::size_t t : options.times) {
        if (t > dataset.horizon()) throw ArgumentError("estimation time past the dataset horizon");
      }
      out.times = options.times;
    }
  } else {
    if (!options.times.empty()) throw ArgumentError("explicit estimation times require kernel mode");
    for (std::size_t t = 0; t <= dataset.horizon(); ++t) out.times.push_back(t);
  }
  schedule.validate(out.times.size());

  const std::size_t count = out.times.size();
  out.maps.assign(count, SymMatrix{});
  std::vector<double> ridges(count, 0.0);
  parallel_for_chunks(count, 1, options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const std::size_t t = out.times[idx];
      const SymMatrix cov = options.mode == MappingMode::Kernel ? weighted_covariance(dataset, *options.kernel, t)
                                                                : sample_covariance(dataset.blocks[t]);
      const SymMatrix thresholded = soft_threshold(cov, schedule.nu[idx]);
      try {
        try {
          out.maps[idx] = invert_spd(thresholded, options.inversion);
        } catch (const NotPositiveDefinite&) {
          const double scale = thresholded.trace() / static_cast<double>(thresholded.dim());
          const double ridge = 1e-6 * (scale > 0.0 ? scale : 1.0);
          out.maps[idx] = invert_spd(add_ridge(thresholded, ridge), options.inversion);
          ridges[idx] = ridge;
        }
      } catch (const NotPositiveDefinite& e) {
        throw NotPositiveDefinite(e.pivot(), t);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at time index " + std::to_string(t));
      }
    }
  });
  for (std::size_t idx = 0; idx < count; ++idx) {
    if (ridges[idx] != 0.0) out.adjustments.push_back({out.times[idx], ridges[idx]});
  }
  return out;
}

BackwardMaps bypass_maps(MatrixSequence maps) {
  BackwardMaps out;
  out.times.resize(maps.size());
  for (std::size_t t = 0; t < maps.size(); ++t) out.times[t] = t;
  out.maps = std::move(maps);
  return out;
}

}  // namespace tvmrf
