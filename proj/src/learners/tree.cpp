#include "jamshield/learners/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "jamshield/common.hpp"

namespace jamshield {

namespace {

// Gains below this are treated as zero so floating-point noise never splits a
// node that a split cannot actually improve.
constexpr double kMinGain = 1e-12;

double impurity(double p, SplitCriterion criterion) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  if (criterion == SplitCriterion::Gini) return 2.0 * p * (1.0 - p);
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

struct Builder {
  const Matrix& x;
  const std::vector<int>& y;
  SplitCriterion criterion;
  int max_depth;
  int min_samples_split;
  int mtry;
  Rng* rng;
  std::vector<TreeNode> nodes;

  // Candidate features for one node, ascending so that exact gain ties always
  // resolve toward the lower feature index.
  std::vector<std::size_t> candidate_features() {
    const std::size_t d = x.cols();
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), 0);
    if (mtry <= 0 || static_cast<std::size_t>(mtry) >= d || rng == nullptr) return all;
    for (std::size_t j = 0; j < static_cast<std::size_t>(mtry); ++j) {
      const std::size_t pick = j + rng->uniform_index(d - j);
      std::swap(all[j], all[pick]);
    }
    all.resize(static_cast<std::size_t>(mtry));
    std::sort(all.begin(), all.end());
    return all;
  }

  int build(std::vector<std::size_t>& rows, int depth) {
    const std::size_t m = rows.size();
    std::size_t attacks = 0;
    for (std::size_t r : rows) attacks += static_cast<std::size_t>(y[r]);
    const double p_attack = static_cast<double>(attacks) / static_cast<double>(m);

    const int node_index = static_cast<int>(nodes.size());
    TreeNode node;
    node.p_attack = p_attack;
    node.count = static_cast<std::uint32_t>(m);
    nodes.push_back(node);

    const bool pure = (attacks == 0 || attacks == m);
    if (pure || depth >= max_depth || m < static_cast<std::size_t>(min_samples_split)) {
      return node_index;
    }

    const double parent_imp = impurity(p_attack, criterion);
    double best_gain = kMinGain;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, int>> values(m);
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < m; ++i) {
        values[i] = {x.at(rows[i], f), y[rows[i]]};
      }
      std::sort(values.begin(), values.end());

      std::size_t left_attacks = 0;
      for (std::size_t i = 1; i < m; ++i) {
        left_attacks += static_cast<std::size_t>(values[i - 1].second);
        const double lo = values[i - 1].first;
        const double hi = values[i].first;
        if (!(lo < hi)) continue;
        double threshold = 0.5 * (lo + hi);
        // The predicate is x <= threshold; if the midpoint rounded up to the
        // right value, fall back to the left value, which realizes the same
        // partition exactly.
        if (threshold >= hi) threshold = lo;

        const double p_left = static_cast<double>(left_attacks) / static_cast<double>(i);
        const double p_right = static_cast<double>(attacks - left_attacks) /
                               static_cast<double>(m - i);
        const double child_imp =
            (static_cast<double>(i) * impurity(p_left, criterion) +
             static_cast<double>(m - i) * impurity(p_right, criterion)) /
            static_cast<double>(m);
        const double gain = parent_imp - child_imp;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = threshold;
        }
      }
    }

    if (best_feature < 0) return node_index;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    left_rows.reserve(m);
    right_rows.reserve(m);
    for (std::size_t r : rows) {
      if (x.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold) {
        left_rows.push_back(r);
      } else {
        right_rows.push_back(r);
      }
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes[static_cast<std::size_t>(node_index)].feature = best_feature;
    nodes[static_cast<std::size_t>(node_index)].threshold = best_threshold;
    const int left_index = build(left_rows, depth + 1);
    nodes[static_cast<std::size_t>(node_index)].left = left_index;
    const int right_index = build(right_rows, depth + 1);
    nodes[static_cast<std::size_t>(node_index)].right = right_index;
    return node_index;
  }
};

}  // namespace

double TreeStructure::leaf_score(const double* x, std::size_t width) const {
  std::size_t i = 0;
  while (true) {
    const TreeNode& node = nodes[i];
    if (node.feature < 0) return node.p_attack;
    if (static_cast<std::size_t>(node.feature) >= width) {
      throw ContractError("tree: split feature index exceeds sample width");
    }
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
}

double TreeStructure::leaf_score(const std::vector<double>& x) const {
  return leaf_score(x.data(), x.size());
}

TreeStructure build_tree(const Matrix& x, const std::vector<int>& y,
                         const std::vector<std::size_t>& rows, SplitCriterion criterion,
                         int max_depth, int min_samples_split, int mtry, Rng* rng) {
  if (rows.empty()) throw ContractError("tree: cannot build on zero rows");
  if (max_depth < 1 || min_samples_split < 2) {
    throw ContractError("tree: max_depth >= 1 and min_samples_split >= 2 required");
  }
  Builder builder{x, y, criterion, max_depth, min_samples_split, mtry, rng, {}};
  std::vector<std::size_t> root_rows = rows;
  builder.build(root_rows, 0);
  TreeStructure tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

TreeModel::TreeModel(DtParams params, TreeStructure tree, std::size_t width)
    : params_(params), tree_(std::move(tree)), width_(width) {}

double TreeModel::score(const std::vector<double>& x) const {
  if (x.size() != width_) {
    throw InputError("dt: query width " + std::to_string(x.size()) +
                     " does not match training width " + std::to_string(width_));
  }
  return tree_.leaf_score(x);
}

ForestModel::ForestModel(RfParams params, std::vector<TreeStructure> trees, std::size_t width)
    : params_(params), trees_(std::move(trees)), width_(width) {
  if (trees_.empty()) throw ContractError("rf: forest needs at least one tree");
}

double ForestModel::score(const std::vector<double>& x) const {
  if (x.size() != width_) {
    throw InputError("rf: query width " + std::to_string(x.size()) +
                     " does not match training width " + std::to_string(width_));
  }
  std::size_t votes = 0;
  for (const TreeStructure& tree : trees_) {
    if (tree.leaf_score(x.data(), x.size()) >= 0.5) ++votes;
  }
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

}  // namespace jamshield
