#include "tvmrf/metrics.hpp"

#include <cmath>

#include "tvmrf/errors.hpp"

namespace tvmrf {
namespace {

void check_shapes(const MatrixSequence& a, const MatrixSequence& b) {
  if (a.size() != b.size()) {
    throw DataError("sequence lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].dim() != b[t].dim() || a[t].dim() != a.front().dim()) {
      throw DataError("matrix dimensions differ at time " + std::to_string(t));
    }
  }
}

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Counts count(const MatrixSequence& est, const MatrixSequence& truth, SupportScope scope, const SupportOptions& opt) {
  check_shapes(est, truth);
  Counts c;
  if (est.empty()) return c;
  const std::size_t d = est.front().dim();
  const std::size_t first = scope == SupportScope::Difference ? 1 : 0;
  for (std::size_t t = first; t < est.size(); ++t) {
    const auto e = est[t].packed();
    const auto g = truth[t].packed();
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j, ++k) {
        if (i == j && !opt.include_diagonal) continue;
        double ev = e[k];
        double gv = g[k];
        if (scope == SupportScope::Difference) {
          ev -= est[t - 1].packed()[k];
          gv -= truth[t - 1].packed()[k];
        }
        const bool est_on = ev != 0.0;
        const bool true_on = std::abs(gv) > opt.truth_threshold;
        if (est_on && true_on) ++c.tp;
        else if (est_on) ++c.fp;
        else if (true_on) ++c.fn;
        else ++c.tn;
      }
    }
  }
  return c;
}

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

double spectral_norm(const Eigen::MatrixXd& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

std::string to_string(SupportScope scope) {
  return scope == SupportScope::PerTime ? "per_time" : "difference";
}

SupportReport support_metrics(const MatrixSequence& estimate, const MatrixSequence& truth, SupportScope scope,
                              const SupportOptions& options) {
  const Counts c = count(estimate, truth, scope, options);
  SupportReport r;
  r.scope = scope;
  r.tp = c.tp;
  r.fp = c.fp;
  r.fn = c.fn;
  r.tn = c.tn;
  r.recall = ratio(c.tp, c.tp + c.fp);
  r.precision = ratio(c.tp, c.tp + c.fn);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::size_t mismatch_error(const MatrixSequence& estimate, const MatrixSequence& truth, const SupportOptions& options) {
  const Counts a = count(estimate, truth, SupportScope::PerTime, options);
  const Counts b = count(estimate, truth, SupportScope::Difference, options);
  return a.fp + a.fn + b.fp + b.fn;
}

RateReport tpr_fpr(const MatrixSequence& estimate, const MatrixSequence& truth, SupportScope scope,
                   const SupportOptions& options) {
  const Counts c = count(estimate, truth, scope, options);
  RateReport r;
  if (c.tp + c.fn > 0) r.tpr = ratio(c.tp, c.tp + c.fn);
  if (c.fp + c.tn > 0) r.fpr = ratio(c.fp, c.fp + c.tn);
  return r;
}

std::vector<NormErrors> norm_errors(const MatrixSequence& estimate, const MatrixSequence& truth) {
  check_shapes(estimate, truth);
  std::vector<NormErrors> out;
  out.reserve(estimate.size());
  for (std::size_t t = 0; t < estimate.size(); ++t) {
    const Eigen::MatrixXd g = truth[t].to_dense();
    const Eigen::MatrixXd diff = estimate[t].to_dense() - g;
    NormErrors n;
    n.max_abs = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
    n.frobenius = diff.norm();
    const double g_max = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    const double g_fro = g.norm();
    n.normalized_max_abs = g_max > 0.0 ? n.max_abs / g_max : std::nan("");
    n.normalized_frobenius = g_fro > 0.0 ? n.frobenius / g_fro : std::nan("");
    if (estimate[t].dim() <= kSpectralMaxDim && diff.size()) {
      n.spectral = spectral_norm(diff);
      const double g_spec = spectral_norm(g);
      n.normalized_spectral = g_spec > 0.0 ? *n.spectral / g_spec : std::nan("");
    }
    out.push_back(n);
  }
  return out;
}

}  // namespace tvmrf
