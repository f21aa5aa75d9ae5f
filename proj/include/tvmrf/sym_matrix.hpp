#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tvmrf {

inline constexpr std::size_t packed_size(std::size_t dim) noexcept { return dim * (dim + 1) / 2; }

// Row-major upper-triangular index of (i, j), i <= j. This ordering is the
// coordinate numbering used throughout: coordinate k of the canonical
// parameter vector is entry packed_index(i, j) of the precision matrix.
inline constexpr std::size_t packed_index(std::size_t i, std::size_t j, std::size_t dim) noexcept {
  return i * dim - i * (i - 1) / 2 + (j - i);
}

// Inverse of packed_index.
std::pair<std::size_t, std::size_t> coordinate_pair(std::size_t k, std::size_t dim);

// Symmetric matrix stored as its packed upper triangle. Symmetry is exact by
// construction: (i, j) and (j, i) address the same storage.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim, double fill = 0.0) : dim_(dim), data_(tvmrf::packed_size(dim), fill) {}

  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(std::span<const double> diag);
  // Reads the upper triangle of a square matrix.
  static SymMatrix from_dense(const Eigen::MatrixXd& dense);

  Eigen::MatrixXd to_dense() const;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t packed_size() const noexcept { return data_.size(); }

  double operator()(std::size_t i, std::size_t j) const noexcept {
    return i <= j ? data_[packed_index(i, j, dim_)] : data_[packed_index(j, i, dim_)];
  }
  double& operator()(std::size_t i, std::size_t j) noexcept {
    return i <= j ? data_[packed_index(i, j, dim_)] : data_[packed_index(j, i, dim_)];
  }

  std::span<const double> packed() const noexcept { return data_; }
  std::span<double> packed() noexcept { return data_; }

  double max_abs() const noexcept;
  double trace() const noexcept;

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

using MatrixSequence = std::vector<SymMatrix>;

}  // namespace tvmrf
