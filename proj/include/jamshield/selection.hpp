// Hybrid feature selection: PCA and MI scores fused by weighted rank voting,
// reducing the 40 raw features to the top 20.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jamshield/matrix.hpp"

namespace jamshield {

struct SelectionMask {
  std::size_t n_features = 0;          // source width (40)
  std::vector<std::size_t> selected;   // retained indices, best combined first
  std::vector<double> pca_score;       // raw attribution per source feature
  std::vector<double> mi_score;        // raw MI per source feature
  std::vector<double> combined_score;  // weighted rank-score per source feature
  double w_pca = 0.5;
  double w_mi = 0.5;
  std::string dataset_hash;            // provenance
  std::uint64_t seed = 0;              // provenance

  std::string to_json_text() const;
  static SelectionMask from_json_text(const std::string& text);
  static SelectionMask load(const std::string& path);
  void save(const std::string& path) const;

  // Content id used for provenance checks in the online state machine.
  std::string content_id() const;
};

// Converts raw scores to rank-scores: descending rank r (1-based) of n maps
// to (n - r)/(n - 1); ties take the lower original index first. All outputs
// lie in [0, 1]; the best-ranked feature gets exactly 1.
std::vector<double> rank_scores(const std::vector<double>& scores);

// Combines per-method scores by weighted rank voting and keeps the top k.
// Ties on the combined score break toward the lower original index.
SelectionMask weighted_vote_select(const std::vector<double>& pca_scores,
                                   const std::vector<double>& mi_scores,
                                   std::size_t k, double w_pca, double w_mi);

// Values at the mask's selected indices, in mask order.
std::vector<double> apply_mask(const SelectionMask& mask,
                               const std::vector<double>& values);
Matrix apply_mask(const SelectionMask& mask, const Matrix& rows);

// Full hybrid selection on scaled data: PCA attribution over the leading
// components that reach `pca_cumulative` explained variance, MI against the
// binary labels, then the weighted rank vote keeping the top k. Fills the
// mask's provenance hash from the inputs.
SelectionMask hybrid_select(const Matrix& scaled, const std::vector<int>& labels,
                            std::size_t k, double w_pca, double w_mi,
                            double pca_cumulative = 0.95);

}  // namespace jamshield
