// Decision-tree induction (exhaustive midpoint splits) and the bagged forest
// built on it. Entropy criterion for the standalone tree, Gini for forest
// trees, per the pinned hyperparameters.
#pragma once

#include "jamshield/learners.hpp"

namespace jamshield {

enum class SplitCriterion { Entropy, Gini };

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // midpoint; x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double p_attack = 0.0;   // training fraction of attack at this node
  std::uint32_t count = 0;
};

struct TreeStructure {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double leaf_score(const std::vector<double>& x) const;
  double leaf_score(const double* x, std::size_t width) const;
};

// Builds a tree on x[rows]. mtry = 0 considers every feature; mtry > 0 draws
// that many candidate features per node from `rng` (forest mode). Split ties
// break toward the lower feature index, then the lower threshold; splits that
// do not strictly decrease weighted impurity become leaves.
TreeStructure build_tree(const Matrix& x, const std::vector<int>& y,
                         const std::vector<std::size_t>& rows,
                         SplitCriterion criterion, int max_depth,
                         int min_samples_split, int mtry, Rng* rng);

class TreeModel : public Model {
public:
  TreeModel(DtParams params, TreeStructure tree, std::size_t width);

  Algo algo() const override { return Algo::Dt; }
  std::size_t input_width() const override { return width_; }
  double score(const std::vector<double>& x) const override;

  const DtParams& params() const { return params_; }
  const TreeStructure& tree() const { return tree_; }

private:
  DtParams params_;
  TreeStructure tree_;
  std::size_t width_ = 0;
};

class ForestModel : public Model {
public:
  ForestModel(RfParams params, std::vector<TreeStructure> trees, std::size_t width);

  Algo algo() const override { return Algo::Rf; }
  std::size_t input_width() const override { return width_; }
  // Fraction of trees voting attack (per-tree hard vote at 0.5).
  double score(const std::vector<double>& x) const override;

  const RfParams& params() const { return params_; }
  const std::vector<TreeStructure>& trees() const { return trees_; }

private:
  RfParams params_;
  std::vector<TreeStructure> trees_;
  std::size_t width_ = 0;
};

}  // namespace jamshield
