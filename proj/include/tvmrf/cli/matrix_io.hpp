#pragma once

// Text formats shared by the CLI commands.
//
// Matrix sequence (.mseq): a one-line JSON header
//   {"format":"tvmrf-mseq","version":1,"d":D,"T":T,"ordering":"row-major-upper",
//    "layout":"sparse"|"dense","times":[...]}
// followed by CSV. Sparse layout: a "t,i,j,value" header, then one row per
// nonzero upper-triangular entry (i <= j) in row-major order. Dense layout: a
// "t,row,v0,...,v{D-1}" header, then D full rows per time. Values use the
// shortest decimal form that round-trips exactly.
//
// Samples: a one-line JSON header {"format":"tvmrf-samples","version":1,"d":D,"T":T}
// followed by a "t,x0,...,x{D-1}" header and one row per observation.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tvmrf/gmrf_mapping.hpp"
#include "tvmrf/sym_matrix.hpp"

namespace tvmrf::io {

enum class Layout { Sparse, Dense };

struct MatrixSequenceFile {
  MatrixSequence matrices;
  std::vector<std::size_t> times;  // defaults to 0..T
  Layout layout = Layout::Sparse;
};

std::string format_double(double v);
// Throws DataError unless the whole field is a finite number.
double parse_double(std::string_view field);
std::size_t parse_index(std::string_view field);

std::vector<std::string_view> split_csv_line(std::string_view line);

void write_matrix_sequence(std::ostream& os, const MatrixSequence& seq, Layout layout,
                           const std::vector<std::size_t>& times = {});
MatrixSequenceFile read_matrix_sequence(std::istream& is);

void write_samples(std::ostream& os, const SampleDataset& ds);
SampleDataset read_samples(std::istream& is);

// Value of "format" in the first line of a file, empty when absent.
std::string detect_format(const std::filesystem::path& path);

void save_matrix_sequence(const std::filesystem::path& path, const MatrixSequence& seq, Layout layout,
                          const std::vector<std::size_t>& times = {});
MatrixSequenceFile load_matrix_sequence(const std::filesystem::path& path);
void save_samples(const std::filesystem::path& path, const SampleDataset& ds);
SampleDataset load_samples(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Header row then numeric rows. Throws DataError on ragged rows or
// non-numeric cells, naming the line.
CsvTable read_numeric_csv(std::istream& is);

}  // namespace tvmrf::io
