#include "tvmrf/segment_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "tvmrf/errors.hpp"

namespace tvmrf {
namespace {

// Running intersection of consecutive intervals. A new run starts whenever
// the next interval misses the current intersection.
struct RunTracker {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t changes = 0;
  bool open = false;

  // Returns true when `[l, u]` starts a new run.
  bool push(double l, double u) noexcept {
    if (!open) {
      lo = l;
      hi = u;
      open = true;
      return false;
    }
    const double nlo = std::max(lo, l);
    const double nhi = std::min(hi, u);
    if (nlo <= nhi) {
      lo = nlo;
      hi = nhi;
      return false;
    }
    lo = l;
    hi = u;
    ++changes;
    return true;
  }
};

// Midpoint of [lo, hi], nudged off zero when the interval has other points.
double run_value(double lo, double hi) noexcept {
  if (lo == hi) return lo;
  const double mid = 0.5 * lo + 0.5 * hi;
  if (mid != 0.0) return mid;
  const double half = hi / 2.0;
  return half != 0.0 ? half : hi;
}

// Greedy fill of values[tau..last]; returns the change count and optionally
// the run boundaries.
std::size_t greedy_fill(BoundsView b, std::size_t tau, std::size_t last, std::span<double> values,
                        std::vector<std::size_t>* boundaries) {
  RunTracker run;
  std::size_t run_start = tau;
  for (std::size_t t = tau; t <= last; ++t) {
    const double lo = run.lo;
    const double hi = run.hi;
    if (run.push(b.lower[t], b.upper[t])) {
      std::fill(values.begin() + static_cast<std::ptrdiff_t>(run_start),
                values.begin() + static_cast<std::ptrdiff_t>(t), run_value(lo, hi));
      if (boundaries) boundaries->push_back(t - 1);
      run_start = t;
    }
  }
  std::fill(values.begin() + static_cast<std::ptrdiff_t>(run_start),
            values.begin() + static_cast<std::ptrdiff_t>(last + 1), run_value(run.lo, run.hi));
  if (boundaries) boundaries->push_back(last);
  return run.changes;
}

std::size_t greedy_changes(BoundsView b, std::size_t first, std::size_t last) {
  RunTracker run;
  for (std::size_t t = first; t <= last; ++t) run.push(b.lower[t], b.upper[t]);
  return run.changes;
}

bool contains_zero(BoundsView b, std::size_t t) noexcept { return b.lower[t] <= 0.0 && 0.0 <= b.upper[t]; }

void collect_zero_sequences(BoundsView b, std::vector<ZeroFeasibleSequence>& out) {
  out.clear();
  const std::size_t n = b.size();
  std::size_t t = 0;
  while (t < n) {
    if (!contains_zero(b, t)) {
      ++t;
      continue;
    }
    const std::size_t start = t;
    while (t + 1 < n && contains_zero(b, t + 1)) ++t;
    out.push_back({start, t});
    ++t;
  }
}

void count_terms(std::span<const double> values, std::size_t& nonzeros, std::size_t& changes) noexcept {
  nonzeros = 0;
  changes = 0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values[t] != 0.0) ++nonzeros;
    if (t > 0 && values[t] != values[t - 1]) ++changes;
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ArgumentError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

}  // namespace

BoundsSeries::BoundsSeries(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {}

void BoundsSeries::validate() const { validate_bounds(view()); }

void validate_bounds(BoundsView b) {
  if (b.lower.size() != b.upper.size()) throw ArgumentError("lower and upper bounds differ in length");
  if (b.lower.empty()) throw ArgumentError("bounds series is empty");
  for (std::size_t t = 0; t < b.size(); ++t) {
    if (!std::isfinite(b.lower[t]) || !std::isfinite(b.upper[t])) {
      throw ArgumentError("non-finite bound at time " + std::to_string(t));
    }
    if (b.lower[t] > b.upper[t]) throw ArgumentError("empty interval at time " + std::to_string(t));
  }
}

GreedyResult greedy(BoundsView bounds, std::size_t tau, std::size_t last) {
  if (bounds.lower.size() != bounds.upper.size()) throw ArgumentError("lower and upper bounds differ in length");
  if (tau > last) throw ArgumentError("greedy: start index exceeds end index");
  if (last >= bounds.size()) throw ArgumentError("greedy: end index outside the bounds series");
  for (std::size_t t = tau; t <= last; ++t) {
    if (!(bounds.lower[t] <= bounds.upper[t])) throw ArgumentError("empty interval at time " + std::to_string(t));
  }

  std::vector<double> full(last + 1, 0.0);
  GreedyResult result;
  result.changes = greedy_fill(bounds, tau, last, full, &result.boundaries);
  result.values.assign(full.begin() + static_cast<std::ptrdiff_t>(tau), full.end());
  return result;
}

std::vector<ZeroFeasibleSequence> find_zero_sequences(BoundsView bounds) {
  std::vector<ZeroFeasibleSequence> out;
  collect_zero_sequences(bounds, out);
  return out;
}

ArcCost arc_cost(std::size_t from, std::size_t to, std::span<const ZeroFeasibleSequence> sequences,
                 std::size_t horizon, std::size_t gap_changes) {
  const std::size_t z = sequences.size();
  if (from >= to) throw ArgumentError("arc must point forward (from < to)");
  if (to > z + 1) throw ArgumentError("arc endpoint outside the segment DAG");

  // Gap [first, past) between the two zero sequences.
  const std::int64_t first = from == 0 ? 0 : static_cast<std::int64_t>(sequences[from - 1].end) + 1;
  const std::int64_t past =
      to == z + 1 ? static_cast<std::int64_t>(horizon) + 1 : static_cast<std::int64_t>(sequences[to - 1].start);
  if (past <= first) return {};  // (0,1) with i_1 = 0 or (Z,Z+1) with j_Z = T

  ArcCost cost;
  cost.nonzeros = past - first;
  cost.changes = static_cast<std::int64_t>(gap_changes) + (from != 0 ? 1 : 0) + (to != z + 1 ? 1 : 0);
  return cost;
}

double arc_weight(std::size_t from, std::size_t to, std::span<const ZeroFeasibleSequence> sequences,
                  std::size_t horizon, std::size_t gap_changes, double alpha) {
  return arc_cost(from, to, sequences, horizon, gap_changes).weight(alpha);
}

SegmentDag build_segment_dag(BoundsView bounds, double alpha) {
  validate_bounds(bounds);
  check_alpha(alpha);
  const auto sequences = find_zero_sequences(bounds);
  const std::size_t z = sequences.size();
  const std::size_t horizon = bounds.size() - 1;

  SegmentDag dag;
  dag.vertex_count = z + 2;
  for (std::size_t k = 0; k <= z; ++k) {
    const std::size_t first = k == 0 ? 0 : sequences[k - 1].end + 1;
    for (std::size_t l = k + 1; l <= z + 1; ++l) {
      const std::size_t past = l == z + 1 ? horizon + 1 : sequences[l - 1].start;
      const std::size_t changes = past > first ? greedy_changes(bounds, first, past - 1) : 0;
      dag.arcs.push_back({k, l, arc_weight(k, l, sequences, horizon, changes, alpha)});
    }
  }
  return dag;
}

double objective_value(std::size_t nonzeros, std::size_t changes, double alpha) noexcept {
  return (1.0 - alpha) * static_cast<double>(nonzeros) + alpha * static_cast<double>(changes);
}

CoordinateSolution evaluate_trajectory(std::vector<double> values, double alpha) {
  CoordinateSolution sol;
  count_terms(values, sol.nonzeros, sol.changes);
  sol.objective = objective_value(sol.nonzeros, sol.changes, alpha);
  sol.values = std::move(values);
  return sol;
}

SolveSummary CoordinateSolver::solve_greedy(BoundsView b, double alpha, std::span<double> values) {
  greedy_fill(b, 0, b.size() - 1, values, nullptr);
  SolveSummary s;
  count_terms(values, s.nonzeros, s.changes);
  s.objective = objective_value(s.nonzeros, s.changes, alpha);
  return s;
}

SolveSummary CoordinateSolver::solve(BoundsView b, double alpha, std::span<double> values) {
  const std::size_t n = b.size();
  collect_zero_sequences(b, sequences_);
  const std::size_t z = sequences_.size();

  if (alpha >= 1.0 || z == 0) return solve_greedy(b, alpha, values);
  if (z == 1 && sequences_[0].start == 0 && sequences_[0].end == n - 1) {
    std::fill(values.begin(), values.end(), 0.0);
    return {0, 0, 1, 0.0};
  }

  // Arcs that jump over zero sequence m cost at least
  // (1-alpha)|m| + alpha*(changes forced around m) - 2*alpha more than the
  // path through m. When that margin is positive no arc from an earlier
  // source can usefully cross m, so the scan from that source stops there.
  const double margin = 1e-9 + 4e-12 * static_cast<double>(n);
  blocks_skip_.assign(z + 2, 0);
  for (std::size_t m = 1; m <= z; ++m) {
    const auto& seq = sequences_[m - 1];
    const std::size_t first = seq.start > 0 ? seq.start - 1 : 0;
    const std::size_t last = std::min(seq.end + 1, n - 1);
    const std::size_t forced = greedy_changes(b, first, last);
    const double gain = (1.0 - alpha) * static_cast<double>(seq.length()) +
                        alpha * (static_cast<double>(forced) - 2.0);
    blocks_skip_[m] = gain > margin ? 1 : 0;
  }

  // Lexicographic: smaller objective, then more zero sequences. Objectives
  // within rounding of each other count as equal.
  const auto prefer = [alpha](const Label& a, const Label& cur) {
    const std::int64_t dn = a.nonzeros - cur.nonzeros;
    const std::int64_t dc = a.changes - cur.changes;
    if (dn != 0 || dc != 0) {
      const double diff = (1.0 - alpha) * static_cast<double>(dn) + alpha * static_cast<double>(dc);
      const double tol = 1e-12 * static_cast<double>(std::llabs(dn) + std::llabs(dc));
      if (diff < -tol) return true;
      if (diff > tol) return false;
    }
    return a.zero_runs > cur.zero_runs;
  };

  labels_.assign(z + 2, Label{});
  labels_[0].reached = true;
  for (std::size_t k = 0; k <= z; ++k) {
    const Label source = labels_[k];
    const std::size_t first = k == 0 ? 0 : sequences_[k - 1].end + 1;
    RunTracker run;
    std::size_t pos = first;
    for (std::size_t l = k + 1; l <= z + 1; ++l) {
      const std::size_t past = l == z + 1 ? n : sequences_[l - 1].start;
      for (; pos < past; ++pos) run.push(b.lower[pos], b.upper[pos]);

      Label cand = source;
      cand.pred = k;
      cand.reached = true;
      if (past > first) {
        cand.nonzeros += static_cast<std::int64_t>(past - first);
        cand.changes += static_cast<std::int64_t>(run.changes) + (k != 0 ? 1 : 0) + (l != z + 1 ? 1 : 0);
      }
      if (l <= z) ++cand.zero_runs;
      if (!labels_[l].reached || prefer(cand, labels_[l])) labels_[l] = cand;
      if (l <= z && blocks_skip_[l]) break;
    }
  }

  path_.clear();
  for (std::size_t v = z + 1; v != 0; v = labels_[v].pred) path_.push_back(v);
  path_.push_back(0);
  std::reverse(path_.begin(), path_.end());

  SolveSummary summary;
  for (std::size_t h = 0; h + 1 < path_.size(); ++h) {
    const std::size_t k = path_[h];
    const std::size_t l = path_[h + 1];
    if (k >= 1) {
      const auto& seq = sequences_[k - 1];
      std::fill(values.begin() + static_cast<std::ptrdiff_t>(seq.start),
                values.begin() + static_cast<std::ptrdiff_t>(seq.end + 1), 0.0);
      ++summary.zero_sequences;
    }
    const std::size_t first = k == 0 ? 0 : sequences_[k - 1].end + 1;
    const std::size_t past = l == z + 1 ? n : sequences_[l - 1].start;
    if (past > first) greedy_fill(b, first, past - 1, values, nullptr);
  }

  count_terms(values, summary.nonzeros, summary.changes);
  summary.objective = objective_value(summary.nonzeros, summary.changes, alpha);
  return summary;
}

CoordinateSolution solve_coordinate(const BoundsSeries& bounds, double alpha) {
  check_alpha(alpha);
  bounds.validate();
  CoordinateSolver solver;
  CoordinateSolution sol;
  sol.values.assign(bounds.size(), 0.0);
  const SolveSummary s = solver.solve(bounds.view(), alpha, sol.values);
  sol.objective = s.objective;
  sol.nonzeros = s.nonzeros;
  sol.changes = s.changes;
  return sol;
}

}  // namespace tvmrf
