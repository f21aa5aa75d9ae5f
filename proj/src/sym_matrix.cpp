#include "tvmrf/sym_matrix.hpp"

#include <cmath>

#include "tvmrf/errors.hpp"

namespace tvmrf {

std::pair<std::size_t, std::size_t> coordinate_pair(std::size_t k, std::size_t dim) {
  if (k >= packed_size(dim)) throw ArgumentError("coordinate index out of range");
  std::size_t i = 0;
  std::size_t row_start = 0;
  while (row_start + (dim - i) <= k) {
    row_start += dim - i;
    ++i;
  }
  return {i, i + (k - row_start)};
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& dense) {
  if (dense.rows() != dense.cols()) throw ArgumentError("matrix must be square");
  const auto dim = static_cast<std::size_t>(dense.rows());
  SymMatrix m(dim);
  std::size_t k = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      m.data_[k++] = dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return m;
}

Eigen::MatrixXd SymMatrix::to_dense() const {
  const auto d = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd out(d, d);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      out(i, j) = data_[k];
      out(j, i) = data_[k];
      ++k;
    }
  }
  return out;
}

double SymMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double SymMatrix::trace() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) s += (*this)(i, i);
  return s;
}

}  // namespace tvmrf
