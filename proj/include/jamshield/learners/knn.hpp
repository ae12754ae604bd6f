// Distance-weighted k-nearest-neighbors over the stored training set.
#pragma once

#include "jamshield/learners.hpp"

namespace jamshield {

class KnnModel : public Model {
public:
  KnnModel(KnnParams params, Matrix train_x, std::vector<int> train_y);

  Algo algo() const override { return Algo::Knn; }
  std::size_t input_width() const override { return x_.cols(); }
  // Inverse-distance weighted vote over the k nearest training points.
  // Zero-distance neighbors dominate: the vote reduces to exact matches.
  double score(const std::vector<double>& x) const override;

  const KnnParams& params() const { return params_; }
  const Matrix& train_x() const { return x_; }
  const std::vector<int>& train_y() const { return y_; }

private:
  KnnParams params_;
  Matrix x_;
  std::vector<int> y_;
};

}  // namespace jamshield
