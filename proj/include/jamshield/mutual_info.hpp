// Mutual information between each feature and the binary label, estimated by
// equal-frequency (quantile-edge) binning with a plug-in estimator, in nats.
#pragma once

#include <cstddef>
#include <vector>

#include "jamshield/matrix.hpp"

namespace jamshield {

// MI of one feature column with the binary label. Bin count is
// min(ceil(sqrt(n)), 64); equal-frequency edges; plug-in estimate. The result
// is >= 0 and <= the label entropy.
double mi_feature(const std::vector<double>& values, const std::vector<int>& labels);

// Per-feature MI for all columns of x. Requires both classes present.
std::vector<double> mi_scores(const Matrix& x, const std::vector<int>& labels);

// Shannon entropy of a binary label vector, in nats.
double label_entropy(const std::vector<int>& labels);

}  // namespace jamshield
