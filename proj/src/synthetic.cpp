#include "tvmrf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_set>

#include "tvmrf/errors.hpp"

namespace tvmrf {
namespace {

constexpr std::uint64_t kTagEdgePerturbation = 0x65646765;
constexpr std::uint64_t kTagExample1 = 0x65783031;
constexpr std::uint64_t kTagExample1Noise = 0x6e6f6973;
constexpr std::uint64_t kTagSmooth = 0x736d6f6f;
constexpr std::uint64_t kTagSample = 0x73616d70;

std::size_t pair_count(std::size_t d) { return d * (d - 1) / 2; }

// Packed coordinate of an off-diagonal edge.
using EdgeId = std::size_t;

std::vector<EdgeId> sorted(std::vector<EdgeId> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// `count` distinct off-diagonal edges outside `excluded`, uniformly.
std::vector<EdgeId> pick_fresh(std::mt19937_64& rng, std::size_t d, std::size_t count,
                               const std::unordered_set<EdgeId>& excluded) {
  const std::size_t total = pair_count(d);
  if (excluded.size() + count > total) throw ArgumentError("not enough free edges for the requested changes");
  std::vector<EdgeId> out;
  out.reserve(count);
  if (count == 0) return out;

  if (2 * (excluded.size() + count) <= total) {
    std::uniform_int_distribution<std::size_t> node(0, d - 1);
    std::unordered_set<EdgeId> taken;
    while (out.size() < count) {
      std::size_t i = node(rng);
      std::size_t j = node(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      const EdgeId e = packed_index(i, j, d);
      if (excluded.count(e) || !taken.insert(e).second) continue;
      out.push_back(e);
    }
    return out;
  }

  std::vector<EdgeId> pool;
  pool.reserve(total - excluded.size());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const EdgeId e = packed_index(i, j, d);
      if (!excluded.count(e)) pool.push_back(e);
    }
  }
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
    out.push_back(pool[k]);
  }
  return out;
}

// `count` entries of `active` (sorted), uniformly without replacement.
std::vector<EdgeId> pick_removed(std::mt19937_64& rng, std::vector<EdgeId> active, std::size_t count) {
  if (count > active.size()) throw ArgumentError("cannot remove more edges than are active");
  std::vector<EdgeId> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, active.size() - 1);
    std::swap(active[k], active[pick(rng)]);
    out.push_back(active[k]);
  }
  return out;
}

struct StepChange {
  std::vector<EdgeId> removed;
  std::vector<EdgeId> added;
};

// Removes then adds `count` edges; the additions avoid everything active
// before the step, which includes the removed edges.
StepChange perturb(std::mt19937_64& rng, std::size_t d, std::vector<EdgeId>& active, std::size_t count) {
  StepChange c;
  c.removed = pick_removed(rng, active, count);
  const std::unordered_set<EdgeId> excluded(active.begin(), active.end());
  c.added = pick_fresh(rng, d, count, excluded);
  const std::unordered_set<EdgeId> gone(c.removed.begin(), c.removed.end());
  std::vector<EdgeId> next;
  next.reserve(active.size());
  for (EdgeId e : active) {
    if (!gone.count(e)) next.push_back(e);
  }
  next.insert(next.end(), c.added.begin(), c.added.end());
  active = sorted(std::move(next));
  return c;
}

void add_edge(SymMatrix& m, EdgeId e, double w) {
  const auto [i, j] = coordinate_pair(e, m.dim());
  m(i, j) -= w;
  m(i, i) += w;
  m(j, j) += w;
}

SymMatrix laplacian_sum(std::size_t d, const std::vector<EdgeId>& edges, double w) {
  SymMatrix m = SymMatrix::identity(d);
  for (EdgeId e : edges) add_edge(m, e, w);
  return m;
}

void require_pd(const SymMatrix& m, const char* what) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m.to_dense());
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": generated matrix is not positive definite");
}

}  // namespace

void GeneratorSpec::validate() const {
  if (family == GeneratorFamily::Example1) return;
  if (dim < 2) throw ArgumentError("generator dimension must be at least 2");
  if (n_edges > pair_count(dim)) throw ArgumentError("n_edges exceeds the number of off-diagonal pairs");
  if (n_changes > n_edges) throw ArgumentError("n_changes exceeds n_edges");
  if (n_changes > 0 && n_edges + n_changes > pair_count(dim)) {
    throw ArgumentError("n_edges + n_changes exceeds the number of off-diagonal pairs");
  }
  if (!(edge_weight > 0.0) || !std::isfinite(edge_weight)) throw ArgumentError("edge_weight must be positive");
  if (family == GeneratorFamily::Smooth && n_change_points > 0) {
    if (ramp_length == 0) throw ArgumentError("ramp_length must be positive");
    const std::size_t spacing = (horizon + 1) / (n_change_points + 1);
    if (spacing <= ramp_length) throw ArgumentError("change windows overlap or leave the horizon");
  }
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t stream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(tag), hi(tag), lo(stream), hi(stream)};
  return std::mt19937_64(seq);
}

MatrixSequence generate_edge_perturbation(const GeneratorSpec& spec) {
  spec.validate();
  const std::size_t d = spec.dim;
  auto rng0 = make_rng(spec.seed, kTagEdgePerturbation, 0);
  std::vector<EdgeId> active = sorted(pick_fresh(rng0, d, spec.n_edges, {}));

  MatrixSequence seq;
  seq.reserve(spec.horizon + 1);
  seq.push_back(laplacian_sum(d, active, spec.edge_weight));
  for (std::size_t t = 1; t <= spec.horizon; ++t) {
    auto rng = make_rng(spec.seed, kTagEdgePerturbation, t);
    perturb(rng, d, active, spec.n_changes);
    seq.push_back(laplacian_sum(d, active, spec.edge_weight));
  }
  return seq;
}

Example1Instance generate_example1(std::uint64_t seed, double amplitude) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw ArgumentError("noise amplitude must be non-negative");
  constexpr std::size_t d = 25;
  constexpr std::size_t horizon = 4;
  constexpr std::size_t ones = 100;
  constexpr std::size_t flips = 10;

  auto rng0 = make_rng(seed, kTagExample1, 0);
  std::vector<EdgeId> active = sorted(pick_fresh(rng0, d, ones, {}));
  auto build = [&] {
    SymMatrix m = SymMatrix::identity(d);
    for (EdgeId e : active) {
      const auto [i, j] = coordinate_pair(e, d);
      m(i, j) = 1.0;
      m(i, i) += 1.0;
      m(j, j) += 1.0;
    }
    require_pd(m, "example1");
    return m;
  };

  Example1Instance inst;
  inst.truth.push_back(build());
  for (std::size_t t = 1; t <= horizon; ++t) {
    auto rng = make_rng(seed, kTagExample1, t);
    perturb(rng, d, active, flips);
    inst.truth.push_back(build());
  }
  for (std::size_t t = 0; t <= horizon; ++t) {
    SymMatrix m = inst.truth[t];
    if (amplitude > 0.0) {
      auto rng = make_rng(seed, kTagExample1Noise, t);
      std::uniform_real_distribution<double> noise(-amplitude, amplitude);
      for (double& v : m.packed()) v += noise(rng);
    }
    inst.maps.push_back(std::move(m));
  }
  return inst;
}

double cosine_ramp(double from, double to, double elapsed, double length) noexcept {
  if (elapsed <= 0.0) return from;
  if (elapsed >= length) return to;
  const double s = 0.5 * (1.0 - std::cos(std::numbers::pi * elapsed / length));
  return from + (to - from) * s;
}

SmoothInstance generate_smooth(const GeneratorSpec& spec) {
  spec.validate();
  const std::size_t d = spec.dim;
  const double w = spec.edge_weight;
  const auto len = static_cast<double>(spec.ramp_length);

  SmoothInstance inst;
  const std::size_t spacing = (spec.horizon + 1) / (spec.n_change_points + 1);
  for (std::size_t k = 0; k < spec.n_change_points; ++k) {
    const std::size_t start = (k + 1) * spacing;
    inst.windows.push_back({start, start + spec.ramp_length});
  }

  auto rng0 = make_rng(spec.seed, kTagSmooth, 0);
  std::vector<EdgeId> active = sorted(pick_fresh(rng0, d, spec.n_edges, {}));
  std::vector<std::vector<EdgeId>> phases{active};  // support before window k
  std::vector<StepChange> steps;
  for (std::size_t k = 0; k < inst.windows.size(); ++k) {
    auto rng = make_rng(spec.seed, kTagSmooth, k + 1);
    steps.push_back(perturb(rng, d, active, spec.n_changes));
    phases.push_back(active);
  }

  inst.truth.reserve(spec.horizon + 1);
  std::size_t phase = 0;
  for (std::size_t t = 0; t <= spec.horizon; ++t) {
    while (phase < inst.windows.size() && t >= inst.windows[phase].end) ++phase;
    if (phase < inst.windows.size() && t > inst.windows[phase].start) {
      const ChangeWindow& win = inst.windows[phase];
      const StepChange& c = steps[phase];
      const double elapsed = static_cast<double>(t - win.start);
      const std::unordered_set<EdgeId> fading(c.removed.begin(), c.removed.end());
      SymMatrix m = SymMatrix::identity(d);
      for (EdgeId e : phases[phase]) add_edge(m, e, fading.count(e) ? cosine_ramp(w, 0.0, elapsed, len) : w);
      for (EdgeId e : c.added) add_edge(m, e, cosine_ramp(0.0, w, elapsed, len));
      inst.truth.push_back(std::move(m));
    } else {
      inst.truth.push_back(laplacian_sum(d, phases[phase], w));
    }
  }
  return inst;
}

Eigen::MatrixXd sample_gaussian(const SymMatrix& precision, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  const Eigen::MatrixXd dense = precision.to_dense();
  const Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(0);
  const auto d = static_cast<Eigen::Index>(precision.dim());

  auto rng = make_rng(seed, kTagSample, stream);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(d, static_cast<Eigen::Index>(n));
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < d; ++r) g(r, c) = normal(rng);
  }
  llt.matrixU().solveInPlace(g);
  return g.transpose();
}

SampleDataset sample_sequence(const MatrixSequence& precisions, const std::vector<std::size_t>& samples_per_time,
                              std::uint64_t seed) {
  if (precisions.empty()) throw ArgumentError("sample_sequence: no precision matrices");
  if (samples_per_time.size() != 1 && samples_per_time.size() != precisions.size()) {
    throw ArgumentError("sample_sequence: need one sample count or one per time");
  }
  SampleDataset ds;
  ds.dim = precisions.front().dim();
  for (std::size_t t = 0; t < precisions.size(); ++t) {
    const std::size_t n = samples_per_time.size() == 1 ? samples_per_time.front() : samples_per_time[t];
    if (n == 0) throw ArgumentError("sample_sequence: sample counts must be positive");
    try {
      ds.blocks.push_back(sample_gaussian(precisions[t], n, seed, t));
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite(e.pivot(), t);
    }
  }
  return ds;
}

}  // namespace tvmrf
