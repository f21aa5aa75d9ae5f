#pragma once

// Exact solver for the per-coordinate problem
//
//   minimize   (1 - alpha) * #{t : theta_t != 0} + alpha * #{t >= 1 : theta_t != theta_{t-1}}
//   subject to lower[t] <= theta_t <= upper[t],  t = 0..T.
//
// The horizon is split at the maximal runs of times where zero is feasible.
// Between two such runs the cheapest trajectory is the greedy interval
// schedule, so the optimum is a shortest path over a DAG whose vertices are
// the zero runs plus a source and a sink.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tvmrf {

// Non-owning view over per-time feasible intervals [lower[t], upper[t]].
struct BoundsView {
  std::span<const double> lower;
  std::span<const double> upper;

  std::size_t size() const noexcept { return lower.size(); }
};

struct BoundsSeries {
  std::vector<double> lower;
  std::vector<double> upper;

  BoundsSeries() = default;
  BoundsSeries(std::vector<double> lo, std::vector<double> hi);

  // Number of time points, T + 1.
  std::size_t size() const noexcept { return lower.size(); }
  std::size_t horizon() const noexcept { return lower.empty() ? 0 : lower.size() - 1; }
  BoundsView view() const noexcept { return {lower, upper}; }

  // Throws ArgumentError on length mismatch, empty series, non-finite
  // entries or an empty interval.
  void validate() const;
};

void validate_bounds(BoundsView bounds);

// Maximal run of consecutive times whose intervals all contain zero.
struct ZeroFeasibleSequence {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  std::size_t length() const noexcept { return end - start + 1; }
  friend bool operator==(const ZeroFeasibleSequence&, const ZeroFeasibleSequence&) = default;
};

struct GreedyResult {
  // values[t - tau] for t = tau..last.
  std::vector<double> values;
  std::size_t changes = 0;
  // Last time index of each maximal run with a common point.
  std::vector<std::size_t> boundaries;
};

// Minimum-change trajectory on [tau, last] (the alpha = 1 problem). Each
// maximal run shares one value, the midpoint of the run's interval
// intersection, moved off zero if the intersection allows it.
GreedyResult greedy(BoundsView bounds, std::size_t tau, std::size_t last);

std::vector<ZeroFeasibleSequence> find_zero_sequences(BoundsView bounds);

// Arc (from, to) of the segment DAG with vertices 0..Z+1. Vertex 0 is the
// source, Z+1 the sink, and vertex k in 1..Z the k-th zero sequence. The arc
// means: zero on `from` and `to`, nonzero strictly between them.
struct ArcCost {
  std::int64_t nonzeros = 0;
  std::int64_t changes = 0;

  double weight(double alpha) const noexcept {
    return (1.0 - alpha) * static_cast<double>(nonzeros) + alpha * static_cast<double>(changes);
  }
};

// Counted terms of W(from, to). `gap_changes` is the greedy change count on
// the times strictly between the two zero sequences (0 when that range is
// empty). Throws ArgumentError unless from < to <= Z + 1.
ArcCost arc_cost(std::size_t from, std::size_t to, std::span<const ZeroFeasibleSequence> sequences,
                 std::size_t horizon, std::size_t gap_changes);

double arc_weight(std::size_t from, std::size_t to, std::span<const ZeroFeasibleSequence> sequences,
                  std::size_t horizon, std::size_t gap_changes, double alpha);

struct SegmentArc {
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 0.0;
};

struct SegmentDag {
  std::size_t vertex_count = 0;
  std::vector<SegmentArc> arcs;
};

// Materializes every arc. Intended for inspection and small instances; the
// solver itself evaluates arcs on the fly.
SegmentDag build_segment_dag(BoundsView bounds, double alpha);

struct CoordinateSolution {
  std::vector<double> values;
  double objective = 0.0;
  std::size_t nonzeros = 0;
  std::size_t changes = 0;
};

double objective_value(std::size_t nonzeros, std::size_t changes, double alpha) noexcept;

// Recomputes counted terms of a trajectory.
CoordinateSolution evaluate_trajectory(std::vector<double> values, double alpha);

struct SolveSummary {
  std::size_t nonzeros = 0;
  std::size_t changes = 0;
  std::size_t zero_sequences = 0;
  double objective = 0.0;
};

// Reusable workspace for repeated coordinate solves. Not thread-safe; use
// one instance per thread.
class CoordinateSolver {
 public:
  // Writes the optimal trajectory into `values` (size T + 1). Bounds are
  // assumed valid; callers that cannot guarantee it should validate first.
  SolveSummary solve(BoundsView bounds, double alpha, std::span<double> values);

 private:
  struct Label {
    std::int64_t nonzeros = 0;
    std::int64_t changes = 0;
    std::int64_t zero_runs = 0;
    std::size_t pred = 0;
    bool reached = false;
  };

  SolveSummary solve_greedy(BoundsView bounds, double alpha, std::span<double> values);

  std::vector<ZeroFeasibleSequence> sequences_;
  std::vector<Label> labels_;
  std::vector<char> blocks_skip_;
  std::vector<std::size_t> path_;
};

// Global optimum of the per-coordinate problem. Throws ArgumentError for
// alpha outside (0, 1] or invalid bounds.
CoordinateSolution solve_coordinate(const BoundsSeries& bounds, double alpha);

// Independent dynamic program over all segmentations, O(T^3). Only for
// verification; throws ArgumentError when T exceeds kOracleMaxHorizon.
inline constexpr std::size_t kOracleMaxHorizon = 16;
CoordinateSolution oracle_solve(const BoundsSeries& bounds, double alpha);

}  // namespace tvmrf
