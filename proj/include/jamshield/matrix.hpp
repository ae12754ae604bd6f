// Dense row-major matrix with the small set of operations the learners and
// feature-selection code need. No external linear algebra dependency.
#pragma once

#include <cstddef>
#include <vector>

namespace jamshield {

class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  std::vector<double> row(std::size_t r) const;
  std::vector<double> col(std::size_t c) const;

  Matrix transposed() const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// C = A * B. Dimensions must agree.
Matrix matmul(const Matrix& a, const Matrix& b);

// y = A * x for a single vector.
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

// Per-column mean over rows.
std::vector<double> column_means(const Matrix& m);

// Per-column population variance (divides by row count).
std::vector<double> column_variances(const Matrix& m);

// Covariance matrix (population: divides by n) of the rows of `m` after
// centering by the column means.
Matrix covariance(const Matrix& m);

// Squared Euclidean distance between two equal-length vectors.
double squared_distance(const double* a, const double* b, std::size_t n);

double dot(const double* a, const double* b, std::size_t n);

}  // namespace jamshield
