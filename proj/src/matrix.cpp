#include "jamshield/matrix.hpp"

#include "jamshield/common.hpp"

namespace jamshield {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols())
      throw ContractError("from_rows: ragged row lengths");
    for (std::size_t c = 0; c < m.cols(); ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

std::vector<double> Matrix::row(std::size_t r) const {
  return std::vector<double>(row_ptr(r), row_ptr(r) + cols_);
}

std::vector<double> Matrix::col(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t.at(c, r) = at(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ContractError("matmul: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  // i-k-j loop order keeps the inner loop contiguous in both B and C.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.row_ptr(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
  if (a.cols() != x.size()) throw ContractError("matvec: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row_ptr(i), x.data(), a.cols());
  return y;
}

std::vector<double> column_means(const Matrix& m) {
  std::vector<double> mean(m.cols(), 0.0);
  if (m.rows() == 0) return mean;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row_ptr(r);
    for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

std::vector<double> column_variances(const Matrix& m) {
  std::vector<double> var(m.cols(), 0.0);
  if (m.rows() == 0) return var;
  const std::vector<double> mean = column_means(m);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row_ptr(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double d = row[c] - mean[c];
      var[c] += d * d;
    }
  }
  for (double& v : var) v /= static_cast<double>(m.rows());
  return var;
}

Matrix covariance(const Matrix& m) {
  if (m.rows() == 0) throw ContractError("covariance: empty matrix");
  const std::vector<double> mean = column_means(m);
  const std::size_t n = m.rows();
  const std::size_t d = m.cols();
  Matrix cov(d, d);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = m.row_ptr(r);
    for (std::size_t c = 0; c < d; ++c) centered[c] = row[c] - mean[c];
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = centered[i];
      if (ci == 0.0) continue;
      double* crow = cov.row_ptr(i);
      for (std::size_t j = i; j < d; ++j) crow[j] += ci * centered[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const double v = cov.at(i, j) / static_cast<double>(n);
      cov.at(i, j) = v;
      cov.at(j, i) = v;
    }
  return cov;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace jamshield
