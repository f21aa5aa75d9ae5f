#pragma once

// Support recovery and norm error metrics for estimated precision sequences.
// Estimated supports use an exact zero test; the solver produces exact zeros.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tvmrf/sym_matrix.hpp"

namespace tvmrf {

enum class SupportScope {
  PerTime,     // supports of Theta_t, t = 0..T
  Difference,  // supports of Theta_t - Theta_{t-1}, t = 1..T
};

std::string to_string(SupportScope scope);

struct SupportOptions {
  // Count diagonal coordinates. Off leaves only the graph (edge) pattern.
  bool include_diagonal = true;
  // Truth entries with |value| <= threshold count as zero.
  double truth_threshold = 0.0;
};

struct SupportReport {
  SupportScope scope = SupportScope::PerTime;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  // Named as in the experiments this reproduces: recall = TP / (TP + FP),
  // precision = TP / (TP + FN). F1 is the same either way.
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;

  // Conventional names: TP / (TP + FP) and TP / (TP + FN).
  double standard_precision() const noexcept { return recall; }
  double standard_recall() const noexcept { return precision; }
  std::size_t evaluated() const noexcept { return tp + fp + fn + tn; }
};

SupportReport support_metrics(const MatrixSequence& estimate, const MatrixSequence& truth, SupportScope scope,
                              const SupportOptions& options = {});

// Per-time support disagreements plus difference support disagreements.
std::size_t mismatch_error(const MatrixSequence& estimate, const MatrixSequence& truth,
                           const SupportOptions& options = {});

struct RateReport {
  std::optional<double> tpr;  // TP / true nonzeros; empty when there are none
  std::optional<double> fpr;  // FP / true zeros; empty when there are none
};

RateReport tpr_fpr(const MatrixSequence& estimate, const MatrixSequence& truth, SupportScope scope,
                   const SupportOptions& options = {});

struct NormErrors {
  double max_abs = 0.0;
  double frobenius = 0.0;
  std::optional<double> spectral;  // largest singular value; only for d <= 2000
  double normalized_max_abs = 0.0;
  double normalized_frobenius = 0.0;
  std::optional<double> normalized_spectral;
};

inline constexpr std::size_t kSpectralMaxDim = 2000;

// Errors of estimate_t - truth_t on full matrices, one entry per time.
std::vector<NormErrors> norm_errors(const MatrixSequence& estimate, const MatrixSequence& truth);

}  // namespace tvmrf
