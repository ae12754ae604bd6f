#include "jamshield/mutual_info.hpp"

#include <algorithm>
#include <cmath>

#include "jamshield/common.hpp"

namespace jamshield {

namespace {

// Equal-frequency bin edges: the b-th edge is the value at sorted position
// floor(b*n/B). Duplicate edges collapse, so discrete features fall into one
// bin per distinct value. Bin assignment uses "first edge greater than x",
// which is invariant under strictly monotone transforms.
std::vector<double> quantile_edges(std::vector<double> sorted, std::size_t bins) {
  std::vector<double> edges;
  const std::size_t n = sorted.size();
  for (std::size_t b = 1; b < bins; ++b) {
    const std::size_t pos = b * n / bins;
    edges.push_back(sorted[std::min(pos, n - 1)]);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace

double label_entropy(const std::vector<int>& labels) {
  if (labels.empty()) throw InputError("label_entropy: empty labels");
  double pos = 0.0;
  for (const int y : labels) pos += y != 0 ? 1.0 : 0.0;
  const double p = pos / static_cast<double>(labels.size());
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

double mi_feature(const std::vector<double>& values, const std::vector<int>& labels) {
  const std::size_t n = values.size();
  if (n == 0 || labels.size() != n)
    throw InputError("mi_feature: values and labels must be equal-length, non-empty");
  bool has0 = false, has1 = false;
  for (const int y : labels) (y != 0 ? has1 : has0) = true;
  if (!has0 || !has1) throw InputError("mi_feature: both classes must be present");

  const std::size_t bins = std::min<std::size_t>(
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))), 64);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::vector<double> edges = quantile_edges(std::move(sorted), bins);

  const std::size_t n_bins = edges.size() + 1;
  std::vector<double> joint(n_bins * 2, 0.0);
  std::vector<double> bin_marginal(n_bins, 0.0);
  double label_marginal[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), values[i]) - edges.begin());
    const int y = labels[i] != 0 ? 1 : 0;
    joint[b * 2 + y] += 1.0;
    bin_marginal[b] += 1.0;
    label_marginal[y] += 1.0;
  }

  const double total = static_cast<double>(n);
  double mi = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    for (int y = 0; y < 2; ++y) {
      const double c = joint[b * 2 + y];
      if (c <= 0.0) continue;
      mi += (c / total) *
            std::log(c * total / (bin_marginal[b] * label_marginal[y]));
    }
  }
  return std::max(mi, 0.0);
}

std::vector<double> mi_scores(const Matrix& x, const std::vector<int>& labels) {
  if (x.rows() != labels.size())
    throw InputError("mi_scores: row count must match label count");
  std::vector<double> scores(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c) scores[c] = mi_feature(x.col(c), labels);
  return scores;
}

}  // namespace jamshield
