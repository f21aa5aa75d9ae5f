#include "tvmrf/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvmrf/errors.hpp"
#include "tvmrf/metrics.hpp"
#include "tvmrf/synthetic.hpp"

namespace tvmrf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void add_config(CLI::App* sub) {
  sub->add_option("--config", "JSON file of option values; command-line flags take precedence");
}

std::string config_scalar(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw ArgumentError("config key '" + key + "' must be a string, number, boolean or list");
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Config files are flat JSON objects keyed by long option names. Their
// entries become extra arguments for options absent from the command line;
// unknown keys then fail the parse like any unknown option.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ArgumentError("--config needs a file name");
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (!path) return args;

  std::ifstream is(*path);
  if (!is) throw DataError("cannot open config file " + *path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ArgumentError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw ArgumentError("config file must hold a JSON object");

  std::vector<std::string> out = args;
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (key == "config") throw ArgumentError("config files cannot nest");
    if (given_on_command_line(args, flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_array()) {
      if (value.empty()) continue;
      out.push_back(flag);
      for (const auto& v : value) out.push_back(config_scalar(key, v));
    } else {
      out.push_back(flag);
      out.push_back(config_scalar(key, value));
    }
  }
  return out;
}

json versions() {
  return {{"tvmrf", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}};
}

double round_ms(double ms) { return std::round(ms * 1000.0) / 1000.0; }

void write_json(const fs::path& path, const json& doc) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << doc.dump(2) << '\n';
  if (!os) throw DataError("write failed: " + path.string());
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
}

io::Layout parse_layout(const std::string& s) { return s == "dense" ? io::Layout::Dense : io::Layout::Sparse; }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string family;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t dim = 50;
  std::size_t horizon = 9;
  std::size_t edges = 100;
  std::size_t changes = 20;
  double weight = 0.4;
  std::size_t change_points = 5;
  std::size_t ramp = 20;
  double noise = 0.1;
  std::size_t samples = 0;
  std::string layout = "sparse";
};

void register_generate(CLI::App& app, GenerateArgs& a) {
  auto* sub = app.add_subcommand("generate", "Generate a synthetic ground-truth instance");
  sub->add_option("--family", a.family, "example1 | edge-perturbation | smooth")
      ->required()
      ->check(CLI::IsMember({"example1", "edge-perturbation", "smooth"}));
  sub->add_option("--seed", a.seed, "RNG seed")->required();
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--d", a.dim, "Dimension")->capture_default_str();
  sub->add_option("--T", a.horizon, "Horizon; matrices for t = 0..T")->capture_default_str();
  sub->add_option("--edges", a.edges, "Initial number of edges")->capture_default_str();
  sub->add_option("--changes", a.changes, "Edges removed and added per step")->capture_default_str();
  sub->add_option("--weight", a.weight, "Edge weight w")->capture_default_str();
  sub->add_option("--change-points", a.change_points, "Smooth family: number of change windows")->capture_default_str();
  sub->add_option("--ramp", a.ramp, "Smooth family: ramp length in steps")->capture_default_str();
  sub->add_option("--noise", a.noise, "example1 family: map noise amplitude a")->capture_default_str();
  sub->add_option("--samples", a.samples, "Also write this many Gaussian samples per time");
  sub->add_option("--layout", a.layout, "sparse | dense")->check(CLI::IsMember({"sparse", "dense"}));
  add_config(sub);
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const fs::path dir(a.out);
  ensure_directory(dir);
  const io::Layout layout = parse_layout(a.layout);

  GeneratorSpec spec;
  spec.dim = a.dim;
  spec.horizon = a.horizon;
  spec.n_edges = a.edges;
  spec.n_changes = a.changes;
  spec.edge_weight = a.weight;
  spec.seed = a.seed;
  spec.n_change_points = a.change_points;
  spec.ramp_length = a.ramp;

  json summary = {{"family", a.family}, {"seed", a.seed}, {"versions", versions()}};
  MatrixSequence truth;
  if (a.family == "example1") {
    Example1Instance inst = generate_example1(a.seed, a.noise);
    truth = std::move(inst.truth);
    io::save_matrix_sequence(dir / "maps.mseq", inst.maps, layout);
    summary["noise"] = a.noise;
    summary["maps"] = (dir / "maps.mseq").string();
    out << "wrote " << (dir / "maps.mseq").string() << '\n';
  } else if (a.family == "edge-perturbation") {
    spec.family = GeneratorFamily::EdgePerturbation;
    truth = generate_edge_perturbation(spec);
  } else {
    spec.family = GeneratorFamily::Smooth;
    SmoothInstance inst = generate_smooth(spec);
    truth = std::move(inst.truth);
    json windows = json::array();
    for (const auto& w : inst.windows) windows.push_back({{"start", w.start}, {"end", w.end}});
    summary["windows"] = windows;
  }
  if (a.family != "example1") {
    summary["d"] = a.dim;
    summary["T"] = a.horizon;
    summary["edges"] = a.edges;
    summary["changes"] = a.changes;
    summary["weight"] = a.weight;
    if (a.family == "smooth") {
      summary["change_points"] = a.change_points;
      summary["ramp"] = a.ramp;
    }
  }

  io::save_matrix_sequence(dir / "truth.mseq", truth, layout);
  summary["truth"] = (dir / "truth.mseq").string();
  out << "wrote " << (dir / "truth.mseq").string() << " (d=" << truth.front().dim() << ", T=" << truth.size() - 1
      << ")\n";
  if (a.samples > 0) {
    const SampleDataset ds = sample_sequence(truth, {a.samples}, a.seed);
    io::save_samples(dir / "samples.csv", ds);
    summary["samples"] = (dir / "samples.csv").string();
    summary["samples_per_time"] = a.samples;
    out << "wrote " << (dir / "samples.csv").string() << " (" << a.samples << " per time)\n";
  }
  write_json(dir / "instance.json", summary);
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string input;
  std::string out;
  std::string mode = "auto";
  double alpha = 0.7;
  double tau = 1.0;
  double clambda = 1.0;
  double cnu = 1.0;
  std::string form = "sqrt";
  std::optional<double> lambda;
  std::optional<double> nu;
  std::optional<double> bandwidth;
  double bandwidth_scale = 0.3;
  bool raw_weights = false;
  std::vector<std::size_t> times;
  std::size_t stride = 0;
  std::size_t start = 0;
  unsigned threads = 1;
  bool exempt_diagonal = false;
  bool eigen_diagnostics = false;
  bool no_residual_check = false;
  std::string layout = "sparse";
};

void register_estimate(CLI::App& app, EstimateArgs& a) {
  auto* sub = app.add_subcommand("estimate", "Estimate a sparsely-changing precision sequence");
  sub->add_option("--input", a.input, "Samples file or backward-map sequence")->required();
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--mode", a.mode, "auto | per-time | kernel | bypass")
      ->check(CLI::IsMember({"auto", "per-time", "kernel", "bypass"}))
      ->capture_default_str();
  sub->add_option("--alpha", a.alpha, "Change weight in (0, 1]")->capture_default_str();
  sub->add_option("--tau", a.tau, "Schedule tau")->capture_default_str();
  sub->add_option("--clambda", a.clambda, "Schedule constant for lambda")->capture_default_str();
  sub->add_option("--cnu", a.cnu, "Schedule constant for nu")->capture_default_str();
  sub->add_option("--schedule-form", a.form, "sqrt | loglinear")
      ->check(CLI::IsMember({"sqrt", "loglinear"}))
      ->capture_default_str();
  sub->add_option("--lambda", a.lambda, "Constant lambda for every time (required in bypass mode)");
  sub->add_option("--nu", a.nu, "Constant nu for every time");
  sub->add_option("--bandwidth", a.bandwidth, "Kernel bandwidth h");
  sub->add_option("--bandwidth-scale", a.bandwidth_scale, "h = scale * T^(-1/3) when --bandwidth is absent")
      ->capture_default_str();
  sub->add_flag("--raw-weights", a.raw_weights, "Do not renormalize kernel weights");
  sub->add_option("--times", a.times, "Kernel mode: estimation times");
  sub->add_option("--stride", a.stride, "Kernel mode: estimate every stride-th time");
  sub->add_option("--start", a.start, "Kernel mode: first estimation time with --stride");
  sub->add_option("--threads", a.threads, "Worker threads")->capture_default_str();
  sub->add_flag("--exempt-diagonal", a.exempt_diagonal, "Leave diagonals out of the nonzero count");
  sub->add_flag("--eigen-diagnostics", a.eigen_diagnostics, "Report the minimum eigenvalue per time");
  sub->add_flag("--no-residual-check", a.no_residual_check, "Skip the inverse residual check");
  sub->add_option("--layout", a.layout, "sparse | dense")->check(CLI::IsMember({"sparse", "dense"}));
  add_config(sub);
}

json echo(const EstimateArgs& a, const std::string& mode, const EstimatorConfig& cfg) {
  json j = {{"mode", mode},
            {"alpha", a.alpha},
            {"tau", a.tau},
            {"clambda", a.clambda},
            {"cnu", a.cnu},
            {"schedule-form", a.form},
            {"threads", cfg.threads},
            {"exempt-diagonal", a.exempt_diagonal},
            {"eigen-diagnostics", a.eigen_diagnostics},
            {"residual-check", !a.no_residual_check},
            {"layout", a.layout},
            {"lambda", cfg.schedule.lambda},
            {"nu", cfg.schedule.nu}};
  if (cfg.kernel) {
    j["bandwidth"] = cfg.kernel->bandwidth;
    j["normalize-weights"] = cfg.kernel->normalize;
    j["times"] = cfg.times;
  }
  return j;
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const auto wall_start = std::chrono::steady_clock::now();
  const fs::path input(a.input);
  const std::string format = io::detect_format(input);
  if (format != "tvmrf-mseq" && format != "tvmrf-samples") {
    throw DataError(input.string() + " is neither a matrix sequence nor a samples file");
  }
  std::string mode = a.mode;
  if (mode == "auto") mode = format == "tvmrf-mseq" ? "bypass" : "per-time";
  if ((mode == "bypass") != (format == "tvmrf-mseq")) {
    throw ArgumentError("mode " + mode + " does not match input format " + format);
  }
  if (!a.times.empty() && a.stride > 0) throw ArgumentError("--times and --stride are exclusive");

  EstimatorConfig cfg;
  cfg.alpha = a.alpha;
  cfg.threads = std::max(a.threads, 1u);
  cfg.exempt_diagonal = a.exempt_diagonal;
  cfg.eigen_diagnostics = a.eigen_diagnostics;
  cfg.inversion.verify_residual = !a.no_residual_check;
  const ScheduleForm form = a.form == "loglinear" ? ScheduleForm::LogLinear : ScheduleForm::SquareRoot;

  PrecisionEstimate est;
  if (mode == "bypass") {
    if (!a.lambda) throw ArgumentError("bypass mode requires --lambda");
    const io::MatrixSequenceFile maps = io::load_matrix_sequence(input);
    cfg.mode = MappingMode::Bypass;
    cfg.schedule = ParameterSchedule::constant(maps.matrices.size(), *a.lambda, a.nu.value_or(0.0));
    est = estimate_from_maps(maps.matrices, cfg);
    est.times = maps.times;
  } else {
    const SampleDataset ds = io::load_samples(input);
    ScheduleRequest req;
    req.dim = ds.dim;
    req.horizon = ds.horizon();
    req.tau = a.tau;
    req.c_lambda = a.clambda;
    req.c_nu = a.cnu;
    req.form = form;
    if (mode == "kernel") {
      cfg.mode = MappingMode::Kernel;
      KernelSpec k;
      const double horizon = static_cast<double>(std::max<std::size_t>(ds.horizon(), 1));
      k.bandwidth = a.bandwidth ? *a.bandwidth : a.bandwidth_scale / std::cbrt(horizon);
      k.normalize = !a.raw_weights;
      cfg.kernel = k;
      if (!a.times.empty()) {
        cfg.times = a.times;
      } else if (a.stride > 0) {
        for (std::size_t t = a.start; t <= ds.horizon(); t += a.stride) cfg.times.push_back(t);
      } else {
        for (std::size_t t = 0; t <= ds.horizon(); ++t) cfg.times.push_back(t);
      }
      req.mode = MappingMode::Kernel;
      req.length = cfg.times.size();
    } else {
      if (!a.times.empty() || a.stride > 0) throw ArgumentError("--times and --stride need kernel mode");
      cfg.mode = MappingMode::PerTime;
      req.samples_per_time = ds.samples_per_time();
    }
    cfg.schedule = default_schedule(req);
    if (a.lambda) std::fill(cfg.schedule.lambda.begin(), cfg.schedule.lambda.end(), *a.lambda);
    if (a.nu) std::fill(cfg.schedule.nu.begin(), cfg.schedule.nu.end(), *a.nu);
    est = estimate(ds, cfg);
  }

  const fs::path dir(a.out);
  ensure_directory(dir);
  const fs::path est_path = dir / "estimate.mseq";
  io::save_matrix_sequence(est_path, est.matrices, parse_layout(a.layout), est.times);

  json adjustments = json::array();
  for (const auto& r : est.adjustments) adjustments.push_back({{"time", r.time_index}, {"ridge", r.ridge}});
  json eig = json::array();
  for (double v : est.min_eigenvalues) eig.push_back(finite_or_null(v));
  const double mapping = round_ms(est.timings.mapping_ms);
  const double solve = round_ms(est.timings.solve_ms);
  const double assembly = round_ms(est.timings.assembly_ms);
  json manifest = {
      {"command", "estimate"},
      {"config", echo(a, mode, cfg)},
      {"input", input.string()},
      {"outputs", {{"estimate", est_path.string()}, {"manifest", (dir / "manifest.json").string()}}},
      {"timings_ms",
       {{"mapping", mapping}, {"solve", solve}, {"assembly", assembly}, {"total", round_ms(mapping + solve + assembly)}}},
      {"wall_ms", round_ms(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall_start).count())},
      {"threads", cfg.threads},
      {"versions", versions()},
      {"objective", est.objective},
      {"nonzeros", est.nonzeros},
      {"changes", est.changes},
      {"ridge_adjustments", adjustments},
      {"min_eigenvalues", eig}};
  write_json(dir / "manifest.json", manifest);
  out << "wrote " << est_path.string() << " (objective " << est.objective << ", " << est.matrices.size()
      << " times)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string estimate;
  std::string truth;
  std::string out;
  bool exclude_diagonal = false;
  double threshold = 0.0;
};

void register_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* sub = app.add_subcommand("evaluate", "Compare an estimate against the truth");
  sub->add_option("--estimate", a.estimate, "Estimated matrix sequence")->required();
  sub->add_option("--truth", a.truth, "True matrix sequence")->required();
  sub->add_option("--out", a.out, "Metrics JSON path (stdout when absent)");
  sub->add_flag("--exclude-diagonal", a.exclude_diagonal, "Score off-diagonal (graph) entries only");
  sub->add_option("--threshold", a.threshold, "Truth entries with |value| <= threshold count as zero");
  add_config(sub);
}

json report_json(const SupportReport& r, const RateReport& rates) {
  return {{"scope", to_string(r.scope)},
          {"tp", r.tp},
          {"fp", r.fp},
          {"fn", r.fn},
          {"tn", r.tn},
          {"recall", r.recall},
          {"precision", r.precision},
          {"f1", r.f1},
          {"standard_precision", r.standard_precision()},
          {"standard_recall", r.standard_recall()},
          {"tpr", optional_number(rates.tpr)},
          {"fpr", optional_number(rates.fpr)}};
}

json evaluation_json(const MatrixSequence& est, const MatrixSequence& truth, const SupportOptions& opt) {
  const SupportReport per_time = support_metrics(est, truth, SupportScope::PerTime, opt);
  const SupportReport diff = support_metrics(est, truth, SupportScope::Difference, opt);
  json norms = json::array();
  for (const auto& n : norm_errors(est, truth)) {
    norms.push_back({{"max_abs", n.max_abs},
                     {"frobenius", n.frobenius},
                     {"spectral", optional_number(n.spectral)},
                     {"normalized_max_abs", finite_or_null(n.normalized_max_abs)},
                     {"normalized_frobenius", finite_or_null(n.normalized_frobenius)},
                     {"normalized_spectral", n.normalized_spectral ? finite_or_null(*n.normalized_spectral) : json(nullptr)}});
  }
  return {{"mismatch_error", mismatch_error(est, truth, opt)},
          {"per_time", report_json(per_time, tpr_fpr(est, truth, SupportScope::PerTime, opt))},
          {"difference", report_json(diff, tpr_fpr(est, truth, SupportScope::Difference, opt))},
          {"norm_errors", norms},
          {"include_diagonal", opt.include_diagonal},
          {"truth_threshold", opt.truth_threshold}};
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const io::MatrixSequenceFile est = io::load_matrix_sequence(a.estimate);
  const io::MatrixSequenceFile truth = io::load_matrix_sequence(a.truth);
  // Align truth to the estimate's times (kernel runs estimate a subset).
  MatrixSequence aligned;
  for (std::size_t t : est.times) {
    const auto it = std::find(truth.times.begin(), truth.times.end(), t);
    if (it == truth.times.end()) throw DataError("truth has no matrix for estimated time " + std::to_string(t));
    aligned.push_back(truth.matrices[static_cast<std::size_t>(it - truth.times.begin())]);
  }
  SupportOptions opt;
  opt.include_diagonal = !a.exclude_diagonal;
  opt.truth_threshold = a.threshold;
  json doc = evaluation_json(est.matrices, aligned, opt);
  doc["times"] = est.times;
  if (a.out.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    write_json(a.out, doc);
    out << "wrote " << a.out << " (mismatch error " << doc["mismatch_error"].get<std::size_t>() << ")\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string grid;
  std::vector<std::size_t> values;
  std::optional<std::size_t> fixed;
  std::vector<unsigned> threads{1};
  std::optional<double> samples_factor;
  std::size_t reps = 3;
  std::uint64_t seed = 0;
  std::string out;
};

void register_bench(CLI::App& app, BenchArgs& a) {
  auto* sub = app.add_subcommand("bench", "Time the solver over a dimension or horizon grid");
  sub->add_option("--grid", a.grid, "d | T")->required()->check(CLI::IsMember({"d", "T"}));
  sub->add_option("--values", a.values, "Grid values")->required();
  sub->add_option("--fixed", a.fixed, "Fixed T for the d grid (default 10) or fixed d for the T grid (default 200)");
  sub->add_option("--threads", a.threads, "Thread counts to time");
  sub->add_option("--samples-factor", a.samples_factor, "N_t = factor * d (default 0.5 on the d grid, 2 on the T grid)");
  sub->add_option("--reps", a.reps, "Repetitions; the fastest is reported")->capture_default_str();
  sub->add_option("--seed", a.seed, "RNG seed")->required();
  sub->add_option("--out", a.out, "CSV path (stdout when absent)");
  add_config(sub);
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  BenchOptions o;
  o.seed = a.seed;
  o.reps = std::max<std::size_t>(a.reps, 1);
  o.threads = a.threads;
  if (a.grid == "d") {
    o.dims = a.values;
    o.horizons = {a.fixed.value_or(10)};
    o.samples_factor = a.samples_factor.value_or(0.5);
  } else {
    o.dims = {a.fixed.value_or(200)};
    o.horizons = a.values;
    o.samples_factor = a.samples_factor.value_or(2.0);
  }
  const std::vector<BenchRow> rows = run_bench(o);

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw DataError("cannot open " + a.out + " for writing");
  }
  std::ostream& os = a.out.empty() ? out : file;
  os << "d,T,p,threads,wall_ms,mapping_ms,speedup\n";
  for (const BenchRow& r : rows) {
    double base = r.wall_ms;
    for (const BenchRow& q : rows) {
      if (q.dim == r.dim && q.horizon == r.horizon) {
        base = q.wall_ms;
        break;
      }
    }
    os << r.dim << ',' << r.horizon << ',' << r.coordinates << ',' << r.threads << ',' << round_ms(r.wall_ms) << ','
       << round_ms(r.mapping_ms) << ',' << (r.wall_ms > 0.0 ? base / r.wall_ms : 1.0) << '\n';
  }
  if (!a.out.empty()) out << "wrote " << a.out << " (" << rows.size() << " rows)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string input;
  std::string out;
  std::string estimates;
  IngestOptions options;
  bool levels = false;
  bool raw_weights = false;
};

void register_ingest(CLI::App& app, IngestArgs& a) {
  auto* sub = app.add_subcommand("ingest", "Change counts of a kernel-estimated network from a CSV time series");
  sub->add_option("--input", a.input, "CSV with one named column per series and one row per time")->required();
  sub->add_option("--out", a.out, "Change-count CSV (t,changes)")->required();
  sub->add_option("--estimates", a.estimates, "Also write the estimated matrix sequence here");
  sub->add_flag("--levels", a.levels, "Use the values as given instead of log-returns");
  sub->add_flag("--standardize", a.options.standardize, "Scale each column to unit variance");
  sub->add_option("--stride", a.options.stride, "Estimate every stride-th time")->capture_default_str();
  sub->add_option("--start", a.options.start, "First estimation time (default: stride)");
  sub->add_option("--bandwidth-scale", a.options.bandwidth_scale, "h = scale * T^(-1/3)")->capture_default_str();
  sub->add_flag("--raw-weights", a.raw_weights, "Do not renormalize kernel weights");
  sub->add_option("--alpha", a.options.alpha, "Change weight in (0, 1]")->capture_default_str();
  sub->add_option("--lambda0", a.options.lambda0, "lambda_t = lambda0 * sqrt(log d / (T h))")->capture_default_str();
  sub->add_option("--nu0", a.options.nu0, "nu_t = nu0 * sqrt(log d / (T h))")->capture_default_str();
  sub->add_option("--threads", a.options.threads, "Worker threads")->capture_default_str();
  add_config(sub);
}

int cmd_ingest(IngestArgs a, std::ostream& out) {
  std::ifstream is(a.input);
  if (!is) throw DataError("cannot open " + a.input);
  const io::CsvTable table = io::read_numeric_csv(is);
  a.options.log_returns = !a.levels;
  a.options.normalize_weights = !a.raw_weights;
  const IngestResult r = ingest_timeseries(table, a.options);

  std::ofstream os(a.out);
  if (!os) throw DataError("cannot open " + a.out + " for writing");
  os << "t,changes\n";
  for (std::size_t i = 0; i < r.changes.size(); ++i) os << r.change_times[i] << ',' << r.changes[i] << '\n';
  if (!os) throw DataError("write failed: " + a.out);
  if (!a.estimates.empty()) io::save_matrix_sequence(a.estimates, r.estimate.matrices, io::Layout::Sparse, r.estimate.times);
  out << "wrote " << a.out << " (" << r.changes.size() << " rows, d=" << r.columns.size() << ", T=" << r.horizon << ")\n";
  return kExitOk;
}

}  // namespace

unsigned default_threads() {
  const char* env = std::getenv("TVMRF_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 1024) return 1;
  return static_cast<unsigned>(v);
}

std::size_t support_change_count(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DataError("support_change_count: dimension mismatch");
  const std::size_t d = a.dim();
  const auto pa = a.packed();
  const auto pb = b.packed();
  std::size_t n = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) {
    ++k;
    for (std::size_t j = i + 1; j < d; ++j, ++k) {
      if ((pa[k] != 0.0) != (pb[k] != 0.0)) ++n;
    }
  }
  return n;
}

std::vector<BenchRow> run_bench(const BenchOptions& o) {
  if (o.dims.empty() || o.horizons.empty() || o.threads.empty()) throw ArgumentError("bench grid is empty");
  std::vector<BenchRow> rows;
  for (std::size_t d : o.dims) {
    for (std::size_t horizon : o.horizons) {
      if (d < 4) throw ArgumentError("bench dimension must be at least 4");
      GeneratorSpec spec;
      spec.family = GeneratorFamily::EdgePerturbation;
      spec.dim = d;
      spec.horizon = horizon;
      spec.n_edges = d;
      spec.n_changes = std::max<std::size_t>(1, d / 100);
      spec.seed = o.seed;
      const MatrixSequence truth = generate_edge_perturbation(spec);
      const auto n = static_cast<std::size_t>(std::max(1.0, std::round(o.samples_factor * static_cast<double>(d))));
      const SampleDataset ds = sample_sequence(truth, {n}, o.seed);

      ScheduleRequest req;
      req.dim = d;
      req.horizon = horizon;
      req.samples_per_time = ds.samples_per_time();
      req.tau = o.tau;
      req.c_lambda = o.c_lambda;
      req.c_nu = o.c_nu;
      EstimatorConfig cfg;
      cfg.alpha = o.alpha;
      cfg.schedule = default_schedule(req);

      const auto map_start = std::chrono::steady_clock::now();
      MappingOptions mo;
      mo.threads = *std::max_element(o.threads.begin(), o.threads.end());
      const BackwardMaps maps = build_backward_maps(ds, cfg.schedule, mo);
      const double mapping_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - map_start).count();

      for (unsigned threads : o.threads) {
        cfg.threads = std::max(threads, 1u);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < o.reps; ++r) {
          const PrecisionEstimate est = estimate_from_maps(maps.maps, cfg);
          best = std::min(best, est.timings.solve_ms + est.timings.assembly_ms);
        }
        rows.push_back({d, horizon, packed_size(d), cfg.threads, best, mapping_ms});
      }
    }
  }
  return rows;
}

IngestResult ingest_timeseries(const io::CsvTable& table, const IngestOptions& o) {
  const std::size_t d = table.header.size();
  if (d < 2) throw DataError("need at least two series columns");
  if (o.stride == 0) throw ArgumentError("stride must be positive");
  if (!(o.bandwidth_scale > 0.0)) throw ArgumentError("bandwidth scale must be positive");
  if (!(o.lambda0 > 0.0) || !(o.nu0 >= 0.0)) throw ArgumentError("lambda0 must be positive and nu0 non-negative");

  const std::size_t raw_rows = table.rows.size();
  const std::size_t n = o.log_returns ? (raw_rows > 0 ? raw_rows - 1 : 0) : raw_rows;
  if (n < 2) throw DataError("too few rows: need at least two time steps after preprocessing");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      double v = table.rows[r][c];
      if (o.log_returns) {
        const double prev = table.rows[r][c];
        const double next = table.rows[r + 1][c];
        if (!(prev > 0.0) || !(next > 0.0)) {
          throw DataError("column '" + table.header[c] + "' has a non-positive value; log-returns need prices > 0");
        }
        v = std::log(next / prev);
      }
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    auto col = x.col(c);
    col.array() -= col.mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    if (!(sd > 0.0)) throw DataError("column '" + table.header[static_cast<std::size_t>(c)] + "' has zero variance");
    if (o.standardize) col /= sd;
  }

  const std::size_t horizon = n - 1;
  const double h = o.bandwidth_scale / std::cbrt(static_cast<double>(horizon));
  const double span = static_cast<double>(horizon) * h;
  if (span < 1.0) throw DataError("too few rows for the bandwidth: T * h = " + std::to_string(span) + " < 1");

  EstimatorConfig cfg;
  cfg.alpha = o.alpha;
  cfg.mode = MappingMode::Kernel;
  cfg.kernel = KernelSpec{KernelFamily::TruncatedGaussian, h, o.normalize_weights};
  cfg.threads = std::max(o.threads, 1u);
  for (std::size_t t = o.start == 0 ? o.stride : o.start; t <= horizon; t += o.stride) cfg.times.push_back(t);
  if (cfg.times.empty()) throw DataError("no estimation time fits in the series");
  const double rate = std::sqrt(std::log(static_cast<double>(d)) / span);
  cfg.schedule = ParameterSchedule::constant(cfg.times.size(), o.lambda0 * rate, o.nu0 * rate);

  SampleDataset ds;
  ds.dim = d;
  ds.blocks.reserve(n);
  for (std::size_t r = 0; r < n; ++r) ds.blocks.emplace_back(x.row(static_cast<Eigen::Index>(r)));

  IngestResult res;
  res.columns = table.header;
  res.horizon = horizon;
  res.estimate = estimate(ds, cfg);
  for (std::size_t i = 1; i < res.estimate.matrices.size(); ++i) {
    res.change_times.push_back(res.estimate.times[i]);
    res.changes.push_back(support_change_count(res.estimate.matrices[i - 1], res.estimate.matrices[i]));
  }
  return res;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparsely-changing Gaussian MRF estimation", "tvmrf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  GenerateArgs gen;
  EstimateArgs est;
  est.threads = default_threads();
  EvaluateArgs eval;
  BenchArgs bench;
  IngestArgs ingest;
  ingest.options.threads = default_threads();
  register_generate(app, gen);
  register_estimate(app, est);
  register_evaluate(app, eval);
  register_bench(app, bench);
  register_ingest(app, ingest);

  try {
    const std::vector<std::string> expanded = expand_config(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }
    if (app.got_subcommand("generate")) return cmd_generate(gen, out);
    if (app.got_subcommand("estimate")) return cmd_estimate(est, out);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(eval, out);
    if (app.got_subcommand("bench")) return cmd_bench(bench, out);
    if (app.got_subcommand("ingest")) return cmd_ingest(ingest, out);
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace tvmrf::cli
