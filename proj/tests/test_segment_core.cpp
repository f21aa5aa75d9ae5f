#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "test_support.hpp"
#include "tvmrf/errors.hpp"
#include "tvmrf/segment_core.hpp"

using namespace tvmrf;
using tvmrf::testing::feasible;
using tvmrf::testing::random_bounds;

namespace {

BoundsSeries bounds(std::vector<double> lo, std::vector<double> hi) { return {std::move(lo), std::move(hi)}; }

constexpr double kAlphas[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

}  // namespace

TEST_CASE("greedy keeps one value when all intervals share a point") {
  const auto b = bounds({0, 0}, {1, 1});
  const GreedyResult g = greedy(b.view(), 0, 1);
  CHECK(g.changes == 0);
  REQUIRE(g.values.size() == 2);
  CHECK(g.values[0] == g.values[1]);
  CHECK(g.values[0] >= 0.0);
  CHECK(g.values[0] <= 1.0);
  CHECK(g.boundaries == std::vector<std::size_t>{1});
}

TEST_CASE("greedy splits disjoint intervals") {
  const auto b2 = bounds({0, 2}, {1, 3});
  const GreedyResult g2 = greedy(b2.view(), 0, 1);
  CHECK(g2.changes == 1);
  CHECK(g2.boundaries == std::vector<std::size_t>{0, 1});
  CHECK(oracle_solve(b2, 1.0).objective == doctest::Approx(1.0));

  const auto b3 = bounds({0, 2, 1}, {1, 3, 1.5});
  const GreedyResult g3 = greedy(b3.view(), 0, 2);
  CHECK(g3.changes == 2);
  CHECK(g3.boundaries == std::vector<std::size_t>{0, 1, 2});
  CHECK(oracle_solve(b3, 1.0).objective == doctest::Approx(2.0));
}

TEST_CASE("greedy over a suffix and argument checks") {
  const auto b = bounds({5, 0, 0.5}, {6, 1, 2});
  const GreedyResult g = greedy(b.view(), 1, 2);
  REQUIRE(g.values.size() == 2);
  CHECK(g.changes == 0);
  CHECK(g.values[0] == doctest::Approx(0.75));
  CHECK_THROWS_AS(greedy(b.view(), 2, 1), ArgumentError);
  CHECK_THROWS_AS(greedy(b.view(), 0, 3), ArgumentError);
}

TEST_CASE("greedy moves the run value off zero when possible") {
  const auto b = bounds({-1, -1}, {1, 1});
  const GreedyResult g = greedy(b.view(), 0, 1);
  CHECK(g.values[0] != 0.0);
  CHECK(g.values[0] == g.values[1]);
  const auto pinned = bounds({0}, {0});
  CHECK(greedy(pinned.view(), 0, 0).values[0] == 0.0);
}

TEST_CASE("touching intervals intersect") {
  const auto b = bounds({0, 1}, {1, 2});
  const GreedyResult g = greedy(b.view(), 0, 1);
  CHECK(g.changes == 0);
  CHECK(g.values[0] == 1.0);
}

TEST_CASE("zero-feasible sequences") {
  CHECK(find_zero_sequences(bounds({-1, 2, -0.5}, {1, 3, 0.5}).view()) ==
        std::vector<ZeroFeasibleSequence>{{0, 0}, {2, 2}});
  CHECK(find_zero_sequences(bounds({-1, -1}, {1, 1}).view()) == std::vector<ZeroFeasibleSequence>{{0, 1}});
  CHECK(find_zero_sequences(bounds({1, 2}, {2, 3}).view()).empty());
}

TEST_CASE("zero-feasible sequences are maximal, ordered and separated") {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 500; ++iter) {
    const auto b = random_bounds(rng, 1 + iter % 20);
    const auto seqs = find_zero_sequences(b.view());
    std::vector<char> covered(b.size(), 0);
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const auto& q = seqs[s];
      REQUIRE(q.start <= q.end);
      for (std::size_t t = q.start; t <= q.end; ++t) {
        CHECK(b.lower[t] <= 0.0);
        CHECK(b.upper[t] >= 0.0);
        covered[t] = 1;
      }
      if (q.start > 0) CHECK(!(b.lower[q.start - 1] <= 0.0 && b.upper[q.start - 1] >= 0.0));
      if (q.end + 1 < b.size()) CHECK(!(b.lower[q.end + 1] <= 0.0 && b.upper[q.end + 1] >= 0.0));
      if (s > 0) CHECK(q.start >= seqs[s - 1].end + 2);
    }
    for (std::size_t t = 0; t < b.size(); ++t) {
      if (b.lower[t] <= 0.0 && b.upper[t] >= 0.0) CHECK(covered[t]);
    }
  }
}

TEST_CASE("arc weights by hand") {
  // T = 2, zero feasible only at t = 0.
  const auto b = bounds({-1, 2, 2.5}, {1, 3, 4});
  const auto seqs = find_zero_sequences(b.view());
  REQUIRE(seqs == std::vector<ZeroFeasibleSequence>{{0, 0}});
  CHECK(arc_weight(0, 1, seqs, 2, 0, 0.5) == 0.0);
  CHECK(arc_weight(1, 2, seqs, 2, 0, 0.5) == doctest::Approx(1.5));
  CHECK(arc_weight(0, 2, seqs, 2, 1, 0.5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(arc_weight(1, 1, seqs, 2, 0, 0.5), ArgumentError);
  CHECK_THROWS_AS(arc_weight(2, 1, seqs, 2, 0, 0.5), ArgumentError);
  CHECK_THROWS_AS(arc_weight(0, 3, seqs, 2, 0, 0.5), ArgumentError);
  CHECK(oracle_solve(b, 0.5).objective == doctest::Approx(1.5));
}

TEST_CASE("arc into the sink is free when the last sequence reaches the horizon") {
  const auto b = bounds({1, -1}, {2, 1});
  const auto seqs = find_zero_sequences(b.view());
  REQUIRE(seqs == std::vector<ZeroFeasibleSequence>{{1, 1}});
  CHECK(arc_weight(1, 2, seqs, 1, 0, 0.4) == 0.0);
  CHECK(arc_weight(0, 1, seqs, 1, 0, 0.4) == doctest::Approx(0.6 + 0.4));
}

TEST_CASE("segment DAG is forward with nonnegative weights") {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 200; ++iter) {
    const auto b = random_bounds(rng, 1 + iter % 10);
    const SegmentDag dag = build_segment_dag(b.view(), 0.4);
    const std::size_t z = find_zero_sequences(b.view()).size();
    CHECK(dag.vertex_count == z + 2);
    CHECK(dag.arcs.size() == (z + 1) * (z + 2) / 2);
    for (const auto& a : dag.arcs) {
      CHECK(a.from < a.to);
      CHECK(a.weight >= 0.0);
    }
  }
}

TEST_CASE("DAG shortest path length equals the optimum") {
  std::mt19937_64 rng(6);
  for (int iter = 0; iter < 300; ++iter) {
    const auto b = random_bounds(rng, 1 + iter % 9);
    const double alpha = kAlphas[iter % 9];
    const SegmentDag dag = build_segment_dag(b.view(), alpha);
    std::vector<double> dist(dag.vertex_count, INFINITY);
    dist[0] = 0.0;
    for (const auto& a : dag.arcs) dist[a.to] = std::min(dist[a.to], dist[a.from] + a.weight);
    const double opt = oracle_solve(b, alpha).objective;
    CHECK(dist.back() == doctest::Approx(opt).epsilon(1e-12));
  }
}

TEST_CASE("solve_coordinate on small instances") {
  const auto b = bounds({-1, 2, 2.5}, {1, 3, 4});
  const CoordinateSolution s = solve_coordinate(b, 0.5);
  CHECK(s.objective == doctest::Approx(1.5));
  CHECK(s.values[0] == 0.0);
  CHECK(s.values[1] == s.values[2]);
  CHECK(s.values[1] >= 2.5);
  CHECK(s.values[1] <= 3.0);

  const CoordinateSolution z = solve_coordinate(bounds({-1, -0.5, 0}, {1, 0.5, 2}), 0.5);
  CHECK(z.values == std::vector<double>{0, 0, 0});
  CHECK(z.objective == 0.0);

  const CoordinateSolution c = solve_coordinate(bounds({1, 1}, {2, 2}), 0.3);
  CHECK(c.values[0] == c.values[1]);
  CHECK(c.objective == doctest::Approx(1.4));
  CHECK(oracle_solve(bounds({1, 1}, {2, 2}), 0.3).objective == doctest::Approx(1.4));
}

TEST_CASE("solve_coordinate argument checks") {
  const auto b = bounds({0, 0}, {1, 1});
  CHECK_THROWS_AS(solve_coordinate(b, 0.0), ArgumentError);
  CHECK_THROWS_AS(solve_coordinate(b, 1.5), ArgumentError);
  CHECK_THROWS_AS(solve_coordinate(b, std::nan("")), ArgumentError);
  CHECK_THROWS_AS(solve_coordinate(bounds({0, 2}, {1, 1}), 0.5), ArgumentError);
  CHECK_THROWS_AS(solve_coordinate(bounds({0}, {INFINITY}), 0.5), ArgumentError);
  CHECK_THROWS_AS(solve_coordinate(bounds({}, {}), 0.5), ArgumentError);
}

TEST_CASE("ties prefer the path with more zero sequences") {
  // Constant nonzero: 3 (1 - a). Zero in the middle: 2 (1 - a) + 2 a. Equal at a = 1/3.
  const auto b = bounds({1, -1, 1}, {2, 1, 2});
  const CoordinateSolution s = solve_coordinate(b, 1.0 / 3.0);
  CHECK(s.values[1] == 0.0);
  CHECK(s.objective == doctest::Approx(2.0));
  const CoordinateSolution dense = solve_coordinate(b, 0.4);
  CHECK(dense.values[1] != 0.0);
}

TEST_CASE("oracle edge cases") {
  CHECK(oracle_solve(bounds({0, 0, 0}, {0, 0, 0}), 0.5).objective == 0.0);
  const BoundsSeries big(std::vector<double>(kOracleMaxHorizon + 2, 0.0), std::vector<double>(kOracleMaxHorizon + 2, 1.0));
  CHECK_THROWS_AS(oracle_solve(big, 0.5), ArgumentError);

  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 500; ++iter) {
    const auto b = random_bounds(rng, 1 + iter % 9);
    const GreedyResult g = greedy(b.view(), 0, b.size() - 1);
    CHECK(oracle_solve(b, 1.0).objective == doctest::Approx(static_cast<double>(g.changes)));
  }
}

TEST_CASE("solver matches the oracle on random instances") {
  std::mt19937_64 rng(2024);
  for (int iter = 0; iter < 4000; ++iter) {
    const auto b = random_bounds(rng, 1 + iter % 9);
    const double alpha = kAlphas[iter % 10];
    const CoordinateSolution s = solve_coordinate(b, alpha);
    const CoordinateSolution o = oracle_solve(b, alpha);
    INFO("iteration " << iter);
    REQUIRE(feasible(b, s.values));
    REQUIRE(feasible(b, o.values));
    CHECK(s.objective == doctest::Approx(o.objective).epsilon(1e-12));
    const CoordinateSolution recount = evaluate_trajectory(s.values, alpha);
    CHECK(recount.nonzeros == s.nonzeros);
    CHECK(recount.changes == s.changes);
    CHECK(recount.objective == s.objective);
  }
}

TEST_CASE("greedy is optimal on every prefix") {
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 500; ++iter) {
    const auto b = random_bounds(rng, 1 + iter % 12);
    const GreedyResult full = greedy(b.view(), 0, b.size() - 1);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const BoundsSeries prefix({b.lower.begin(), b.lower.begin() + static_cast<std::ptrdiff_t>(j + 1)},
                                {b.upper.begin(), b.upper.begin() + static_cast<std::ptrdiff_t>(j + 1)});
      const double opt = oracle_solve(prefix, 1.0).objective;
      std::size_t prefix_changes = 0;
      for (std::size_t t = 1; t <= j; ++t) prefix_changes += full.values[t] != full.values[t - 1];
      CHECK(static_cast<double>(prefix_changes) == doctest::Approx(opt));
      CHECK(static_cast<double>(greedy(prefix.view(), 0, j).changes) == doctest::Approx(opt));
    }
  }
}

TEST_CASE("optima are all zero or nowhere zero on each zero-feasible sequence") {
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 3000; ++iter) {
    const auto b = random_bounds(rng, 1 + iter % 16);
    const double alpha = kAlphas[iter % 9];
    const CoordinateSolution s = solve_coordinate(b, alpha);
    for (const auto& q : find_zero_sequences(b.view())) {
      std::size_t zeros = 0;
      for (std::size_t t = q.start; t <= q.end; ++t) zeros += s.values[t] == 0.0;
      CHECK((zeros == 0 || zeros == q.length()));
    }
  }
}

TEST_CASE("solver is reentrant across threads") {
  std::mt19937_64 rng(8);
  std::vector<BoundsSeries> inst;
  for (int i = 0; i < 64; ++i) inst.push_back(random_bounds(rng, 200));
  std::vector<CoordinateSolution> serial;
  for (const auto& b : inst) serial.push_back(solve_coordinate(b, 0.6));
  std::vector<CoordinateSolution> par(inst.size());
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < 4; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < inst.size(); i += 4) par[i] = solve_coordinate(inst[i], 0.6);
      });
    }
  }
  for (std::size_t i = 0; i < inst.size(); ++i) CHECK(par[i].values == serial[i].values);
}

TEST_CASE("solve time grows at most 2.5x when the horizon doubles") {
  auto measure = [](std::size_t n) {
    std::mt19937_64 rng(n);
    std::vector<BoundsSeries> inst;
    for (int i = 0; i < 100; ++i) inst.push_back(random_bounds(rng, n));
    CoordinateSolver solver;
    std::vector<double> values(n);
    double best = INFINITY;
    for (int rep = 0; rep < 5; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      for (const auto& b : inst) solver.solve(b.view(), 0.5, values);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    return best;
  };
  const double small = measure(4000);
  const double large = measure(8000);
  INFO("T=4000: " << small << " s, T=8000: " << large << " s");
  CHECK(large / small <= 2.5);
}
