#include "jamshield/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jamshield/common.hpp"

namespace jamshield {

void jacobi_eigen(const Matrix& matrix, std::vector<double>& eigenvalues,
                  Matrix& eigenvectors) {
  const std::size_t n = matrix.rows();
  if (matrix.cols() != n) throw ContractError("jacobi_eigen: matrix not square");
  Matrix a = matrix;
  Matrix v = Matrix::identity(n);

  const auto off_norm = [&a, n] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a.at(i, j) * a.at(i, j);
    return std::sqrt(2.0 * s);
  };

  double frob = 0.0;
  for (const double x : a.data()) frob += x * x;
  frob = std::sqrt(frob);
  const double tol = 1e-14 * std::max(frob, 1.0);

  for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (std::abs(apq) <= tol / static_cast<double>(n)) continue;
        const double app = a.at(p, p);
        const double aqq = a.at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p);
          const double akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k);
          const double aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v.at(k, p);
          const double vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a.at(i, i);
  // Columns of v are eigenvectors; hand them back as rows.
  eigenvectors = v.transposed();
}

PcaModel pca_fit(const Matrix& scaled) {
  if (scaled.rows() < 2) throw InputError("pca_fit: need at least 2 samples");
  const std::size_t d = scaled.cols();

  PcaModel model;
  model.mean = column_means(scaled);
  const Matrix cov = covariance(scaled);

  std::vector<double> eig;
  Matrix vec;
  jacobi_eigen(cov, eig, vec);

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&eig](std::size_t a, std::size_t b) {
    return eig[a] > eig[b];
  });

  model.components = Matrix(d, d);
  model.explained_variance.resize(d);
  double total = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    const std::size_t src = order[r];
    // Clamp tiny negative eigenvalues produced by round-off; covariance is PSD.
    const double ev = std::max(eig[src], 0.0);
    model.explained_variance[r] = ev;
    total += ev;
    // Sign convention: largest-magnitude entry positive.
    std::size_t arg = 0;
    for (std::size_t c = 1; c < d; ++c)
      if (std::abs(vec.at(src, c)) > std::abs(vec.at(src, arg))) arg = c;
    const double sign = vec.at(src, arg) < 0.0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < d; ++c)
      model.components.at(r, c) = sign * vec.at(src, c);
  }
  if (total <= 0.0)
    throw InputError("pca_fit: training data has zero total variance");
  model.explained_variance_ratio.resize(d);
  for (std::size_t r = 0; r < d; ++r)
    model.explained_variance_ratio[r] = model.explained_variance[r] / total;
  return model;
}

std::vector<double> pca_feature_scores(const PcaModel& model, std::size_t retain) {
  const std::size_t d = model.n_features();
  if (retain < 1 || retain > d)
    throw InputError("pca_feature_scores: retain must be in [1, " +
                     std::to_string(d) + "]");
  std::vector<double> scores(d, 0.0);
  for (std::size_t c = 0; c < retain; ++c) {
    const double ratio = model.explained_variance_ratio[c];
    for (std::size_t f = 0; f < d; ++f) {
      const double loading = model.components.at(c, f);
      scores[f] += ratio * loading * loading;
    }
  }
  return scores;
}

std::size_t components_for_cumulative(const PcaModel& model, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InputError("components_for_cumulative: fraction must be in (0, 1]");
  double acc = 0.0;
  for (std::size_t c = 0; c < model.explained_variance_ratio.size(); ++c) {
    acc += model.explained_variance_ratio[c];
    if (acc >= fraction - 1e-12) return c + 1;
  }
  return model.explained_variance_ratio.size();
}

Matrix pca_project(const PcaModel& model, const Matrix& rows) {
  if (rows.cols() != model.n_features())
    throw ContractError("pca_project: width mismatch");
  Matrix centered = rows;
  for (std::size_t r = 0; r < centered.rows(); ++r) {
    double* row = centered.row_ptr(r);
    for (std::size_t c = 0; c < centered.cols(); ++c) row[c] -= model.mean[c];
  }
  return matmul(centered, model.components.transposed());
}

Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected) {
  if (projected.cols() != model.components.rows())
    throw ContractError("pca_reconstruct: width mismatch");
  Matrix out = matmul(projected, model.components);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* row = out.row_ptr(r);
    for (std::size_t c = 0; c < out.cols(); ++c) row[c] += model.mean[c];
  }
  return out;
}

}  // namespace jamshield
