#include "jamshield/learners/knn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "jamshield/common.hpp"

namespace jamshield {

KnnModel::KnnModel(KnnParams params, Matrix train_x, std::vector<int> train_y)
    : params_(params), x_(std::move(train_x)), y_(std::move(train_y)) {
  if (params_.k < 1) {
    throw ContractError("knn: k must be >= 1");
  }
  if (x_.rows() == 0 || x_.rows() != y_.size()) {
    throw ContractError("knn: training rows and labels must be non-empty and aligned");
  }
}

double KnnModel::score(const std::vector<double>& x) const {
  if (x.size() != x_.cols()) {
    throw InputError("knn: query width " + std::to_string(x.size()) +
                     " does not match training width " + std::to_string(x_.cols()));
  }
  const std::size_t n = x_.rows();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(params_.k), n);

  std::vector<std::pair<double, std::size_t>> by_distance(n);
  for (std::size_t i = 0; i < n; ++i) {
    by_distance[i] = {squared_distance(x_.row_ptr(i), x.data(), x_.cols()), i};
  }
  // Pair ordering breaks distance ties by the lower training index.
  std::partial_sort(by_distance.begin(), by_distance.begin() + static_cast<std::ptrdiff_t>(k),
                    by_distance.end());

  bool any_exact = false;
  for (std::size_t j = 0; j < k; ++j) {
    if (by_distance[j].first == 0.0) {
      any_exact = true;
      break;
    }
  }

  double weight_attack = 0.0;
  double weight_total = 0.0;
  if (any_exact) {
    // Zero-distance neighbors dominate the inverse-distance weighting: the
    // vote reduces to an equal-weight vote over the exact matches.
    for (std::size_t j = 0; j < k; ++j) {
      if (by_distance[j].first != 0.0) continue;
      weight_total += 1.0;
      weight_attack += static_cast<double>(y_[by_distance[j].second]);
    }
  } else {
    for (std::size_t j = 0; j < k; ++j) {
      const double w = 1.0 / std::sqrt(by_distance[j].first);
      weight_total += w;
      weight_attack += w * static_cast<double>(y_[by_distance[j].second]);
    }
  }
  return weight_attack / weight_total;
}

}  // namespace jamshield
