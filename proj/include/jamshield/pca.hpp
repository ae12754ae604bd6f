// Principal component analysis on the feature covariance matrix, computed
// with a cyclic Jacobi eigendecomposition (no external solver).
#pragma once

#include <cstddef>
#include <vector>

#include "jamshield/matrix.hpp"

namespace jamshield {

struct PcaModel {
  std::vector<double> mean;          // per-feature mean of the training data
  Matrix components;                 // rows = components, orthonormal
  std::vector<double> explained_variance;        // eigenvalues, non-increasing
  std::vector<double> explained_variance_ratio;  // sums to 1

  std::size_t n_features() const { return mean.size(); }
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
// (eigenvalues, eigenvectors as rows), unsorted. `matrix` must be symmetric.
void jacobi_eigen(const Matrix& matrix, std::vector<double>& eigenvalues,
                  Matrix& eigenvectors);

// Fits PCA on an already-scaled training matrix (>= 2 rows). Components are
// sorted by non-increasing eigenvalue; each component is flipped so its
// largest-magnitude entry is positive.
PcaModel pca_fit(const Matrix& scaled);

// Per-feature attribution: score(f) = sum over the top `retain` components c
// of ratio(c) * loading(c, f)^2. Requires 1 <= retain <= feature count.
std::vector<double> pca_feature_scores(const PcaModel& model, std::size_t retain);

// Smallest component count whose cumulative variance ratio reaches `fraction`.
std::size_t components_for_cumulative(const PcaModel& model, double fraction);

// Projects a centered-and-rotated view of `rows`; used by tests to verify
// orthogonality and reconstruction.
Matrix pca_project(const PcaModel& model, const Matrix& rows);
Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected);

}  // namespace jamshield
