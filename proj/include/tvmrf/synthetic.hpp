#pragma once

// Ground-truth generators for sparsely-changing GMRFs and a Gaussian
// sampler. Each generation step draws from its own RNG stream derived from
// (seed, step), so results do not depend on evaluation order.

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tvmrf/gmrf_mapping.hpp"
#include "tvmrf/sym_matrix.hpp"

namespace tvmrf {

enum class GeneratorFamily { Example1, EdgePerturbation, Smooth };

struct GeneratorSpec {
  GeneratorFamily family = GeneratorFamily::EdgePerturbation;
  std::size_t dim = 50;
  std::size_t horizon = 9;       // T; matrices for t = 0..T
  std::size_t n_edges = 100;     // initial support size (off-diagonal edges)
  std::size_t n_changes = 20;    // edges removed and edges added per step (per change point when smooth)
  double edge_weight = 0.4;
  std::uint64_t seed = 0;
  // Smooth family only.
  std::size_t n_change_points = 5;
  std::size_t ramp_length = 20;

  void validate() const;
};

// Stream `stream` of a seed; distinct (seed, tag, stream) triples give
// independent generators.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t stream);

// Theta_0 = I + sum_{e in S} A_e where A_e has -w at (i, j) and +w at (i, i)
// and (j, j). Each step removes n_changes active edges and adds n_changes
// edges that are neither active nor just removed.
MatrixSequence generate_edge_perturbation(const GeneratorSpec& spec);

struct Example1Instance {
  MatrixSequence truth;
  MatrixSequence maps;  // truth + Unif(-a, a) on every packed entry
};

// d = 25, T = 4, 100 upper-triangular unit entries per time, diagonal
// 1 + row sum, 10 entries switched off and 10 on per step.
Example1Instance generate_example1(std::uint64_t seed, double amplitude);

struct ChangeWindow {
  std::size_t start = 0;  // ramp begins; value at start equals the old value
  std::size_t end = 0;    // ramp ends; value at end equals the new value
};

struct SmoothInstance {
  MatrixSequence truth;
  std::vector<ChangeWindow> windows;
};

// Theta(t) = I + sum_e m_e(t) A_e with m_e in [0, w]. Support is fixed
// between change windows; inside a window n_changes edges fade out and
// n_changes fade in along cosine ramps.
SmoothInstance generate_smooth(const GeneratorSpec& spec);

// Cosine interpolation from `from` to `to` over [0, length]; clamps outside.
double cosine_ramp(double from, double to, double elapsed, double length) noexcept;

// n i.i.d. rows from N(0, precision^{-1}) via the Cholesky factor L of
// precision: x = L^{-T} g. Throws NotPositiveDefinite.
Eigen::MatrixXd sample_gaussian(const SymMatrix& precision, std::size_t n, std::uint64_t seed,
                                std::uint64_t stream = 0);

// One block per time with samples_per_time[t] rows (or the first entry for
// every time when it has length one).
SampleDataset sample_sequence(const MatrixSequence& precisions, const std::vector<std::size_t>& samples_per_time,
                              std::uint64_t seed);

}  // namespace tvmrf
