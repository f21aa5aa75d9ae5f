#include "tvmrf/cli/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "tvmrf/errors.hpp"

namespace tvmrf::io {
namespace {

using nlohmann::json;

constexpr const char* kMatrixFormat = "tvmrf-mseq";
constexpr const char* kSamplesFormat = "tvmrf-samples";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

json read_header(std::istream& is, const char* format) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty file: missing JSON header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed JSON header: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != format) {
    throw DataError(std::string("expected a ") + format + " header");
  }
  if (header.value("version", 0) != 1) throw DataError("unsupported format version");
  return header;
}

std::size_t header_size(const json& h, const char* key) {
  if (!h.contains(key) || !h[key].is_number_unsigned()) {
    throw DataError(std::string("header field '") + key + "' must be a non-negative integer");
  }
  return h[key].get<std::size_t>();
}

std::string line_context(std::size_t line_no) { return " (line " + std::to_string(line_no) + ")"; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  return is;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw DataError("not a finite number: '" + std::string(field) + "'");
  }
  return v;
}

std::size_t parse_index(std::string_view field) {
  field = trim(field);
  std::size_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw DataError("not a non-negative integer: '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

void write_matrix_sequence(std::ostream& os, const MatrixSequence& seq, Layout layout,
                           const std::vector<std::size_t>& times) {
  if (seq.empty()) throw ArgumentError("cannot write an empty matrix sequence");
  const std::size_t d = seq.front().dim();
  for (const auto& m : seq) {
    if (m.dim() != d) throw ArgumentError("matrix sequence has inconsistent dimensions");
  }
  if (!times.empty() && times.size() != seq.size()) throw ArgumentError("times length must match the sequence");

  json header = {{"format", kMatrixFormat},
                 {"version", 1},
                 {"d", d},
                 {"T", seq.size() - 1},
                 {"ordering", "row-major-upper"},
                 {"layout", layout == Layout::Sparse ? "sparse" : "dense"}};
  if (!times.empty()) header["times"] = times;
  os << header.dump() << '\n';

  if (layout == Layout::Sparse) {
    os << "t,i,j,value\n";
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const auto data = seq[t].packed();
      std::size_t k = 0;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j, ++k) {
          if (data[k] != 0.0) os << t << ',' << i << ',' << j << ',' << format_double(data[k]) << '\n';
        }
      }
    }
  } else {
    os << "t,row";
    for (std::size_t j = 0; j < d; ++j) os << ",v" << j;
    os << '\n';
    for (std::size_t t = 0; t < seq.size(); ++t) {
      for (std::size_t i = 0; i < d; ++i) {
        os << t << ',' << i;
        for (std::size_t j = 0; j < d; ++j) os << ',' << format_double(seq[t](i, j));
        os << '\n';
      }
    }
  }
  if (!os) throw DataError("write failed");
}

MatrixSequenceFile read_matrix_sequence(std::istream& is) {
  const json header = read_header(is, kMatrixFormat);
  if (header.value("ordering", "") != "row-major-upper") throw DataError("unsupported coordinate ordering");
  const std::size_t d = header_size(header, "d");
  const std::size_t horizon = header_size(header, "T");
  const std::string layout = header.value("layout", "sparse");
  if (d == 0) throw DataError("dimension must be positive");

  MatrixSequenceFile file;
  file.matrices.assign(horizon + 1, SymMatrix(d));
  if (header.contains("times")) {
    try {
      file.times = header["times"].get<std::vector<std::size_t>>();
    } catch (const json::exception&) {
      throw DataError("header field 'times' must be a list of indices");
    }
    if (file.times.size() != horizon + 1) throw DataError("header 'times' length must be T + 1");
  } else {
    for (std::size_t t = 0; t <= horizon; ++t) file.times.push_back(t);
  }

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw DataError("missing CSV header");
  ++line_no;

  if (layout == "sparse") {
    file.layout = Layout::Sparse;
    std::vector<bool> seen((horizon + 1) * packed_size(d), false);
    while (std::getline(is, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != 4) throw DataError("expected 4 fields" + line_context(line_no));
      try {
        const std::size_t t = parse_index(f[0]);
        const std::size_t i = parse_index(f[1]);
        const std::size_t j = parse_index(f[2]);
        const double v = parse_double(f[3]);
        if (t > horizon || i > j || j >= d) throw DataError("entry index out of range");
        const std::size_t slot = t * packed_size(d) + packed_index(i, j, d);
        if (seen[slot]) throw DataError("duplicate entry");
        seen[slot] = true;
        file.matrices[t](i, j) = v;
      } catch (const DataError& e) {
        throw DataError(e.what() + line_context(line_no));
      }
    }
  } else if (layout == "dense") {
    file.layout = Layout::Dense;
    std::vector<bool> seen((horizon + 1) * d, false);
    while (std::getline(is, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != d + 2) throw DataError("expected " + std::to_string(d + 2) + " fields" + line_context(line_no));
      try {
        const std::size_t t = parse_index(f[0]);
        const std::size_t i = parse_index(f[1]);
        if (t > horizon || i >= d) throw DataError("row index out of range");
        if (seen[t * d + i]) throw DataError("duplicate row");
        seen[t * d + i] = true;
        for (std::size_t j = i; j < d; ++j) file.matrices[t](i, j) = parse_double(f[j + 2]);
      } catch (const DataError& e) {
        throw DataError(e.what() + line_context(line_no));
      }
    }
    for (bool s : seen) {
      if (!s) throw DataError("dense layout is missing rows");
    }
  } else {
    throw DataError("unknown layout '" + layout + "'");
  }
  return file;
}

void write_samples(std::ostream& os, const SampleDataset& ds) {
  ds.validate();
  const json header = {{"format", kSamplesFormat}, {"version", 1}, {"d", ds.dim}, {"T", ds.horizon()}};
  os << header.dump() << '\n';
  os << 't';
  for (std::size_t j = 0; j < ds.dim; ++j) os << ",x" << j;
  os << '\n';
  for (std::size_t t = 0; t < ds.blocks.size(); ++t) {
    const auto& b = ds.blocks[t];
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      os << t;
      for (Eigen::Index c = 0; c < b.cols(); ++c) os << ',' << format_double(b(r, c));
      os << '\n';
    }
  }
  if (!os) throw DataError("write failed");
}

SampleDataset read_samples(std::istream& is) {
  const json header = read_header(is, kSamplesFormat);
  const std::size_t d = header_size(header, "d");
  const std::size_t horizon = header_size(header, "T");
  if (d == 0) throw DataError("dimension must be positive");

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw DataError("missing CSV header");
  ++line_no;
  std::vector<std::vector<double>> rows(horizon + 1);
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != d + 1) throw DataError("expected " + std::to_string(d + 1) + " fields" + line_context(line_no));
    try {
      const std::size_t t = parse_index(f[0]);
      if (t > horizon) throw DataError("time index out of range");
      for (std::size_t j = 0; j < d; ++j) rows[t].push_back(parse_double(f[j + 1]));
    } catch (const DataError& e) {
      throw DataError(e.what() + line_context(line_no));
    }
  }

  SampleDataset ds;
  ds.dim = d;
  for (std::size_t t = 0; t <= horizon; ++t) {
    const auto n = static_cast<Eigen::Index>(rows[t].size() / d);
    Eigen::MatrixXd block(n, static_cast<Eigen::Index>(d));
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = rows[t][static_cast<std::size_t>(r) * d + static_cast<std::size_t>(c)];
    }
    ds.blocks.push_back(std::move(block));
  }
  ds.validate();
  return ds;
}

std::string detect_format(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line)) return {};
  try {
    const json header = json::parse(line);
    return header.is_object() ? header.value("format", "") : "";
  } catch (const json::exception&) {
    return {};
  }
}

void save_matrix_sequence(const std::filesystem::path& path, const MatrixSequence& seq, Layout layout,
                          const std::vector<std::size_t>& times) {
  auto os = open_out(path);
  write_matrix_sequence(os, seq, layout, times);
}

MatrixSequenceFile load_matrix_sequence(const std::filesystem::path& path) {
  auto is = open_in(path);
  try {
    return read_matrix_sequence(is);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_samples(const std::filesystem::path& path, const SampleDataset& ds) {
  auto os = open_out(path);
  write_samples(os, ds);
}

SampleDataset load_samples(const std::filesystem::path& path) {
  auto is = open_in(path);
  try {
    return read_samples(is);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

CsvTable read_numeric_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty CSV");
  for (auto name : split_csv_line(line)) table.header.emplace_back(name);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != table.header.size()) {
      throw DataError("ragged row: expected " + std::to_string(table.header.size()) + " fields, got " +
                      std::to_string(f.size()) + line_context(line_no));
    }
    std::vector<double> row;
    row.reserve(f.size());
    for (auto cell : f) {
      try {
        row.push_back(parse_double(cell));
      } catch (const DataError& e) {
        throw DataError(e.what() + line_context(line_no));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace tvmrf::io
