// Brute-force reference for the per-coordinate problem.
//
// Every trajectory splits into maximal constant runs. A run is either all
// zero (zero inside every interval) or a single nonzero value inside the
// intersection of its intervals. Charging alpha per run boundary can only
// overcount when two neighbouring runs share a value, and the merged
// segmentation is enumerated too, so the minimum over segmentations is the
// optimum.

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "tvmrf/errors.hpp"
#include "tvmrf/segment_core.hpp"

namespace tvmrf {
namespace {

struct Segment {
  bool valid = false;
  double cost = 0.0;
  double value = 0.0;
};

double nonzero_point(double lo, double hi) {
  if (lo > 0.0 || hi < 0.0) return 0.5 * lo + 0.5 * hi;
  return hi > 0.0 ? hi / 2.0 : lo / 2.0;
}

// Cheapest admissible segment covering [i, j].
Segment best_segment(const BoundsSeries& b, std::size_t i, std::size_t j, double alpha) {
  bool all_zero = true;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t t = i; t <= j; ++t) {
    all_zero = all_zero && b.lower[t] <= 0.0 && b.upper[t] >= 0.0;
    lo = std::max(lo, b.lower[t]);
    hi = std::min(hi, b.upper[t]);
  }
  if (all_zero) return {true, 0.0, 0.0};
  const bool has_nonzero = lo <= hi && !(lo == 0.0 && hi == 0.0);
  if (!has_nonzero) return {};
  return {true, (1.0 - alpha) * static_cast<double>(j - i + 1), nonzero_point(lo, hi)};
}

}  // namespace

CoordinateSolution oracle_solve(const BoundsSeries& bounds, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in (0, 1]");
  bounds.validate();
  if (bounds.horizon() > kOracleMaxHorizon) {
    throw ArgumentError("oracle_solve supports horizons up to " + std::to_string(kOracleMaxHorizon));
  }

  const std::size_t n = bounds.size();
  const double inf = std::numeric_limits<double>::infinity();
  // best[j]: cheapest segmentation of the prefix [0, j).
  std::vector<double> best(n + 1, inf);
  std::vector<std::size_t> cut(n + 1, 0);
  std::vector<double> seg_value(n + 1, 0.0);
  best[0] = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (best[i] == inf) continue;
      const Segment seg = best_segment(bounds, i, j - 1, alpha);
      if (!seg.valid) continue;
      const double cost = best[i] + seg.cost + (i > 0 ? alpha : 0.0);
      if (cost < best[j]) {
        best[j] = cost;
        cut[j] = i;
        seg_value[j] = seg.value;
      }
    }
  }

  std::vector<double> values(n, 0.0);
  for (std::size_t j = n; j > 0; j = cut[j]) {
    std::fill(values.begin() + static_cast<std::ptrdiff_t>(cut[j]), values.begin() + static_cast<std::ptrdiff_t>(j),
              seg_value[j]);
  }
  return evaluate_trajectory(std::move(values), alpha);
}

}  // namespace tvmrf
