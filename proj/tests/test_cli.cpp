#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tvmrf/cli/commands.hpp"
#include "tvmrf/cli/matrix_io.hpp"
#include "tvmrf/errors.hpp"
#include "tvmrf/synthetic.hpp"

using namespace tvmrf;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("tvmrf_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::string& path) {
  std::ifstream is(path);
  return json::parse(is);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
}

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

MatrixSequence random_sequence(std::mt19937_64& rng, std::size_t d, std::size_t n) {
  std::normal_distribution<double> g;
  std::bernoulli_distribution zero(0.4);
  MatrixSequence seq(n, SymMatrix(d));
  for (SymMatrix& m : seq) {
    for (double& v : m.packed()) v = zero(rng) ? 0.0 : g(rng) * std::pow(10.0, g(rng) * 5);
  }
  return seq;
}

// Geometric random walk with two regimes of correlation between the columns.
std::string price_csv(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.01);
  std::ostringstream os;
  for (std::size_t c = 0; c < cols; ++c) os << (c ? "," : "") << "s" << c;
  os << '\n';
  std::vector<double> p(cols, 100.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) os << (c ? "," : "") << io::format_double(p[c]);
    os << '\n';
    const double common = g(rng);
    for (std::size_t c = 0; c < cols; ++c) {
      const double shock = (r < rows / 2 && c < 2) ? common + 0.3 * g(rng) : g(rng);
      p[c] *= std::exp(shock);
    }
  }
  return os.str();
}

}  // namespace

TEST_CASE("number formatting round-trips exactly") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 2000) {
    const std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    CHECK(io::parse_double(io::format_double(v)) == v);
    ++checked;
  }
  CHECK(io::parse_double("+1.5") == 1.5);
  CHECK(io::parse_double("-0") == 0.0);
  CHECK_THROWS_AS(io::parse_double("1.5x"), DataError);
  CHECK_THROWS_AS(io::parse_double(""), DataError);
  CHECK_THROWS_AS(io::parse_double("nan"), DataError);
  CHECK_THROWS_AS(io::parse_double("inf"), DataError);
  CHECK(io::parse_index("12") == 12);
  CHECK_THROWS_AS(io::parse_index("-1"), DataError);
  CHECK_THROWS_AS(io::parse_index("1.0"), DataError);
}

TEST_CASE("matrix sequences round-trip in both layouts") {
  std::mt19937_64 rng(2);
  for (io::Layout layout : {io::Layout::Sparse, io::Layout::Dense}) {
    for (std::size_t d : {1u, 2u, 7u}) {
      const MatrixSequence seq = random_sequence(rng, d, 4);
      std::stringstream ss;
      io::write_matrix_sequence(ss, seq, layout, {0, 3, 5, 9});
      const io::MatrixSequenceFile back = io::read_matrix_sequence(ss);
      CHECK(back.matrices == seq);
      CHECK(back.times == std::vector<std::size_t>{0, 3, 5, 9});
      CHECK(back.layout == layout);
    }
  }
  std::stringstream plain;
  io::write_matrix_sequence(plain, MatrixSequence(3, SymMatrix::identity(2)), io::Layout::Sparse);
  const io::MatrixSequenceFile back = io::read_matrix_sequence(plain);
  CHECK(back.times == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("sparse layout lists nonzero upper entries in row-major order") {
  SymMatrix m(3);
  m(0, 0) = 1.5;
  m(1, 2) = -0.25;
  m(0, 2) = 2.0;
  std::stringstream ss;
  io::write_matrix_sequence(ss, MatrixSequence{m}, io::Layout::Sparse);
  std::string header, columns, r1, r2, r3, rest;
  std::getline(ss, header);
  std::getline(ss, columns);
  std::getline(ss, r1);
  std::getline(ss, r2);
  std::getline(ss, r3);
  CHECK_FALSE(static_cast<bool>(std::getline(ss, rest)));
  const json h = json::parse(header);
  CHECK(h["format"] == "tvmrf-mseq");
  CHECK(h["d"] == 3);
  CHECK(h["T"] == 0);
  CHECK(h["ordering"] == "row-major-upper");
  CHECK(columns == "t,i,j,value");
  CHECK(r1 == "0,0,0,1.5");
  CHECK(r2 == "0,0,2,2");
  CHECK(r3 == "0,1,2,-0.25");
}

TEST_CASE("malformed matrix sequences are rejected") {
  const std::string head = R"({"format":"tvmrf-mseq","version":1,"d":2,"T":0,"ordering":"row-major-upper","layout":"sparse"})";
  auto parse = [](const std::string& text) {
    std::istringstream is(text);
    return io::read_matrix_sequence(is);
  };
  CHECK(parse(head + "\nt,i,j,value\n0,0,1,3\n").matrices[0](1, 0) == 3.0);
  CHECK_THROWS_AS(parse(head + "\nt,i,j,value\n0,0,1,3\n0,0,1,4\n"), DataError);
  CHECK_THROWS_AS(parse(head + "\nt,i,j,value\n0,1,0,3\n"), DataError);
  CHECK_THROWS_AS(parse(head + "\nt,i,j,value\n0,0,2,3\n"), DataError);
  CHECK_THROWS_AS(parse(head + "\nt,i,j,value\n1,0,0,3\n"), DataError);
  CHECK_THROWS_AS(parse(head + "\nt,i,j,value\n0,0,0\n"), DataError);
  CHECK_THROWS_AS(parse(head + "\nt,i,j,value\n0,0,0,abc\n"), DataError);
  CHECK_THROWS_AS(parse("not json\n"), DataError);
  CHECK_THROWS_AS(parse(R"({"format":"other"})" "\n"), DataError);
  try {
    parse(head + "\nt,i,j,value\n0,0,0,1\n0,0,0,x\n");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("samples round-trip") {
  const SampleDataset ds = sample_sequence(MatrixSequence(3, SymMatrix::identity(4)), {2, 3, 1}, 5);
  std::stringstream ss;
  io::write_samples(ss, ds);
  const SampleDataset back = io::read_samples(ss);
  CHECK(back.dim == 4);
  REQUIRE(back.blocks.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) CHECK(back.blocks[t] == ds.blocks[t]);
}

TEST_CASE("numeric csv parsing") {
  std::istringstream good("a,b\n1,2\n3,4.5\n");
  const io::CsvTable t = io::read_numeric_csv(good);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][1] == 4.5);
  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS_AS(io::read_numeric_csv(ragged), DataError);
  std::istringstream text("a,b\n1,x\n");
  CHECK_THROWS_AS(io::read_numeric_csv(text), DataError);
}

TEST_CASE("generate, estimate and evaluate the example1 family") {
  TempDir dir;
  REQUIRE(run({"generate", "--family", "example1", "--seed", "7", "--noise", "0.1", "--out", dir / "inst"}).code == 0);
  CHECK(fs::exists(dir / "inst/truth.mseq"));
  CHECK(fs::exists(dir / "inst/maps.mseq"));
  CHECK(read_json(dir / "inst/instance.json")["family"] == "example1");

  const Run e = run({"estimate", "--input", dir / "inst/maps.mseq", "--mode", "bypass", "--lambda", "0.1", "--alpha",
                     "0.3333333333333333", "--out", dir / "est"});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  const json manifest = read_json(dir / "est/manifest.json");
  CHECK(manifest["config"]["mode"] == "bypass");
  CHECK(manifest["objective"].get<double>() > 0.0);
  const json& tm = manifest["timings_ms"];
  CHECK(tm["total"].get<double>() ==
        doctest::Approx(tm["mapping"].get<double>() + tm["solve"].get<double>() + tm["assembly"].get<double>()));
  CHECK(manifest["versions"]["tvmrf"] == cli::kVersion);

  const Run v = run({"evaluate", "--estimate", dir / "est/estimate.mseq", "--truth", dir / "inst/truth.mseq", "--out",
                     dir / "metrics.json"});
  REQUIRE_MESSAGE(v.code == 0, v.err);
  const json metrics = read_json(dir / "metrics.json");
  CHECK(metrics["mismatch_error"] == 0);
  CHECK(metrics["per_time"]["f1"] == 1.0);
  CHECK(metrics["difference"]["f1"] == 1.0);
  CHECK(metrics["difference"]["fpr"] == 0.0);
  CHECK(metrics["norm_errors"].size() == 5);

  const Run stdout_run = run({"evaluate", "--estimate", dir / "est/estimate.mseq", "--truth", dir / "inst/truth.mseq"});
  CHECK(json::parse(stdout_run.out)["mismatch_error"] == 0);
}

TEST_CASE("estimate from samples in per-time and kernel mode") {
  TempDir dir;
  REQUIRE(run({"generate", "--family", "edge-perturbation", "--seed", "3", "--d", "8", "--T", "6", "--edges", "6",
               "--changes", "1", "--samples", "400", "--layout", "dense", "--out", dir / "inst"})
              .code == 0);
  CHECK(io::detect_format(dir / "inst/samples.csv") == "tvmrf-samples");
  CHECK(io::load_matrix_sequence(dir / "inst/truth.mseq").layout == io::Layout::Dense);

  REQUIRE(run({"estimate", "--input", dir / "inst/samples.csv", "--out", dir / "pt", "--eigen-diagnostics"}).code == 0);
  const json pt = read_json(dir / "pt/manifest.json");
  CHECK(pt["config"]["mode"] == "per-time");
  CHECK(pt["min_eigenvalues"].size() == 7);
  CHECK(pt["config"]["lambda"].size() == 7);
  CHECK(io::load_matrix_sequence(dir / "pt/estimate.mseq").matrices.size() == 7);

  REQUIRE(run({"estimate", "--input", dir / "inst/samples.csv", "--out", dir / "k", "--mode", "kernel", "--stride",
               "2", "--start", "1", "--threads", "2"})
              .code == 0);
  const io::MatrixSequenceFile k = io::load_matrix_sequence(dir / "k/estimate.mseq");
  CHECK(k.times == std::vector<std::size_t>{1, 3, 5});
  const json km = read_json(dir / "k/manifest.json");
  CHECK(km["config"]["bandwidth"].get<double>() == doctest::Approx(0.3 / std::cbrt(6.0)));
  CHECK(km["threads"] == 2);

  const Run v = run({"evaluate", "--estimate", dir / "k/estimate.mseq", "--truth", dir / "inst/truth.mseq",
                     "--exclude-diagonal"});
  REQUIRE(v.code == 0);
  const json m = json::parse(v.out);
  CHECK(m["times"] == json::array({1, 3, 5}));
  CHECK(m["include_diagonal"] == false);
}

TEST_CASE("smooth generation records its windows") {
  TempDir dir;
  REQUIRE(run({"generate", "--family", "smooth", "--seed", "1", "--d", "10", "--T", "200", "--edges", "10",
               "--changes", "2", "--change-points", "3", "--ramp", "10", "--out", dir / "s"})
              .code == 0);
  const json inst = read_json(dir / "s/instance.json");
  REQUIRE(inst["windows"].size() == 3);
  CHECK(inst["windows"][0]["start"] == 50);
  CHECK(inst["windows"][0]["end"] == 60);
}

TEST_CASE("bench writes one row per grid point and thread count") {
  TempDir dir;
  const Run r = run({"bench", "--grid", "d", "--values", "10", "20", "--fixed", "3", "--threads", "1", "2", "--reps",
                     "1", "--seed", "4", "--out", dir / "bench.csv"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream is(read_text(dir / "bench.csv"));
  std::string line;
  std::getline(is, line);
  CHECK(line == "d,T,p,threads,wall_ms,mapping_ms,speedup");
  std::vector<std::string> rows;
  while (std::getline(is, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("10,3,55,1,", 0) == 0);
  CHECK(rows[3].rfind("20,3,210,2,", 0) == 0);
  CHECK(run({"bench", "--grid", "d", "--values", "3", "--seed", "1"}).code == cli::kExitUsage);
}

TEST_CASE("ingest writes change counts") {
  TempDir dir;
  write_text(dir / "prices.csv", price_csv(400, 4, 9));
  const Run r = run({"ingest", "--input", dir / "prices.csv", "--out", dir / "changes.csv", "--estimates",
                     dir / "est.mseq", "--stride", "50"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream is(read_text(dir / "changes.csv"));
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,changes");
  std::vector<std::size_t> times;
  while (std::getline(is, line)) times.push_back(std::stoul(line.substr(0, line.find(','))));
  CHECK(times == std::vector<std::size_t>{100, 150, 200, 250, 300, 350});
  const io::MatrixSequenceFile est = io::load_matrix_sequence(dir / "est.mseq");
  CHECK(est.times.front() == 50);
  CHECK(est.matrices.front().dim() == 4);

  const io::CsvTable table = [&] {
    std::istringstream in(price_csv(400, 4, 9));
    return io::read_numeric_csv(in);
  }();
  cli::IngestOptions opt;
  opt.stride = 50;
  const cli::IngestResult res = cli::ingest_timeseries(table, opt);
  CHECK(res.horizon == 398);
  CHECK(res.columns.size() == 4);
  for (std::size_t i = 0; i < res.changes.size(); ++i) {
    CHECK(res.changes[i] ==
          cli::support_change_count(res.estimate.matrices[i], res.estimate.matrices[i + 1]));
  }
}

TEST_CASE("ingest rejects bad series") {
  TempDir dir;
  write_text(dir / "ragged.csv", "a,b\n1,2\n3\n");
  write_text(dir / "text.csv", "a,b\n1,2\n3,x\n");
  write_text(dir / "short.csv", "a,b\n1,2\n");
  write_text(dir / "negative.csv", "a,b\n1,2\n-1,3\n2,2\n");
  std::string constant = "a,b\n";
  for (int r = 0; r < 300; ++r) constant += "5," + std::to_string(1.0 + 0.01 * (r % 7)) + "\n";
  write_text(dir / "constant.csv", constant);
  write_text(dir / "few.csv", price_csv(6, 3, 1));
  for (const char* name : {"ragged.csv", "text.csv", "short.csv", "negative.csv", "constant.csv", "few.csv"}) {
    const Run r = run({"ingest", "--input", dir / name, "--out", dir / "o.csv", "--stride", "5"});
    CHECK_MESSAGE(r.code == cli::kExitData, std::string(name));
    CHECK_FALSE(r.err.empty());
  }
  CHECK(run({"ingest", "--input", dir / "missing.csv", "--out", dir / "o.csv"}).code == cli::kExitData);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
  const Run version = run({"--version"});
  CHECK(version.code == cli::kExitOk);
  CHECK(version.out.find(cli::kVersion) != std::string::npos);
  CHECK(run({"generate", "--family", "example1", "--out", dir / "x"}).code == cli::kExitUsage);
  CHECK(run({"generate", "--family", "nope", "--seed", "1", "--out", dir / "x"}).code == cli::kExitUsage);
  CHECK(run({"generate", "--family", "edge-perturbation", "--seed", "1", "--d", "4", "--edges", "7", "--out",
             dir / "x"})
            .code == cli::kExitUsage);
  CHECK(run({"estimate", "--input", dir / "missing.mseq", "--out", dir / "e"}).code == cli::kExitData);

  REQUIRE(run({"generate", "--family", "example1", "--seed", "2", "--samples", "5", "--out", dir / "inst"}).code ==
          0);
  CHECK(run({"estimate", "--input", dir / "inst/maps.mseq", "--out", dir / "e"}).code == cli::kExitUsage);
  CHECK(run({"estimate", "--input", dir / "inst/maps.mseq", "--mode", "per-time", "--out", dir / "e"}).code ==
        cli::kExitUsage);
  CHECK(run({"estimate", "--input", dir / "inst/samples.csv", "--mode", "per-time", "--stride", "2", "--out",
             dir / "e"})
            .code == cli::kExitUsage);
  CHECK(run({"estimate", "--input", dir / "inst/maps.mseq", "--lambda", "0.1", "--alpha", "0", "--out", dir / "e"})
            .code == cli::kExitUsage);
  const Run degenerate = run({"estimate", "--input", dir / "inst/samples.csv", "--mode", "kernel", "--bandwidth",
                              "1e-320", "--out", dir / "e"});
  CHECK(degenerate.code == cli::kExitNumerical);

  write_text(dir / "bad.mseq", R"({"format":"tvmrf-mseq","version":1,"d":2,"T":0,"ordering":"row-major-upper","layout":"sparse"})"
                               "\nt,i,j,value\n0,0,5,1\n");
  CHECK(run({"estimate", "--input", dir / "bad.mseq", "--lambda", "0.1", "--out", dir / "e"}).code == cli::kExitData);
}

TEST_CASE("config files fill options the command line leaves unset") {
  TempDir dir;
  REQUIRE(run({"generate", "--family", "example1", "--seed", "4", "--out", dir / "inst"}).code == 0);
  write_text(dir / "cfg.json", R"({"lambda": 0.1, "alpha": 0.5, "threads": 2})");
  REQUIRE(run({"estimate", "--config", dir / "cfg.json", "--input", dir / "inst/maps.mseq", "--alpha", "0.25",
               "--out", dir / "e"})
              .code == 0);
  const json m = read_json(dir / "e/manifest.json");
  CHECK(m["config"]["alpha"] == 0.25);
  CHECK(m["config"]["lambda"][0] == 0.1);
  CHECK(m["threads"] == 2);

  write_text(dir / "extra.json", R"({"lambda": 0.1, "bogus": 1})");
  CHECK(run({"estimate", "--config", dir / "extra.json", "--input", dir / "inst/maps.mseq", "--out", dir / "e"})
            .code == cli::kExitUsage);
  write_text(dir / "broken.json", "{");
  CHECK(run({"estimate", "--config", dir / "broken.json", "--input", dir / "inst/maps.mseq", "--out", dir / "e"})
            .code == cli::kExitUsage);
}

TEST_CASE("thread default comes from the environment") {
  setenv("TVMRF_THREADS", "3", 1);
  CHECK(cli::default_threads() == 3);
  setenv("TVMRF_THREADS", "zero", 1);
  CHECK(cli::default_threads() == 1);
  unsetenv("TVMRF_THREADS");
  CHECK(cli::default_threads() == 1);
}

TEST_CASE("support change count ignores the diagonal") {
  SymMatrix a = SymMatrix::identity(3);
  SymMatrix b(3);
  b(0, 1) = 1.0;
  b(1, 2) = 2.0;
  a(1, 2) = -1.0;
  CHECK(cli::support_change_count(a, b) == 1);
  CHECK_THROWS_AS(cli::support_change_count(a, SymMatrix(2)), DataError);
}
