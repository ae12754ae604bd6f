// Unsupervised pseudo-labeling of buffered telemetry: k-means picks two
// cluster centers, expectation-maximization refines them into a two-component
// diagonal-covariance Gaussian mixture, and every sample is labeled by its
// argmax posterior. The attack component is the one whose mean scores higher
// on the link-layer distress features.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "jamshield/common.hpp"
#include "jamshield/matrix.hpp"
#include "jamshield/schema.hpp"

namespace jamshield {

// One pseudo-labeled sample: a binary verdict plus the posterior probability
// of the winning mixture component. A two-way argmax always wins with
// probability >= 0.5, so confidence lies in [0.5, 1].
struct PseudoLabel {
  int label = 0;  // 1 = attack, 0 = benign
  double confidence = 0.5;
};

// A fitted two-component diagonal-covariance Gaussian mixture, together with
// the k-means centroids that seeded it and the log-likelihood trace of the EM
// iterations (total log-likelihood, non-decreasing within 1e-9).
struct ClusterModel {
  Matrix centroids;   // 2 x width: the k-means solution handed to EM
  std::array<double, 2> weights{0.5, 0.5};  // positive, sum 1 within 1e-9
  Matrix means;       // 2 x width
  Matrix variances;   // 2 x width: diagonal covariances, each >= the floor
  std::vector<double> ll_trace;
  int attack_component = 0;

  // Posterior responsibility of each component for one sample of `width`
  // values (the mixture's own width).
  std::array<double, 2> posteriors(const double* row, std::size_t width) const;
};

// Lloyd's algorithm with k-means++ seeding, deterministic under `seed`.
// Iterates to an assignment fixed point or for at most 300 rounds; a cluster
// emptied by reassignment is re-seeded with the point farthest from its
// current center. The within-cluster sum of squares never increases from one
// round to the next.
// Throws InputError when the input has fewer distinct rows than clusters.
Matrix kmeans_fit(const Matrix& x, int k, std::uint64_t seed);

// Refines k-means centroids into a Gaussian mixture via EM. The initial
// parameters come from the hard nearest-centroid partition of `x`; iteration
// stops when the log-likelihood gain drops below 1e-6 or after 200 rounds.
// Every covariance entry is floored at 1e-6 so components cannot collapse.
//
// `distress_columns` selects the columns averaged into each component's
// distress score; the component with the higher score becomes the attack
// component (an exact tie resolves to component 1). An empty list means all
// columns. Pass distress_feature_indices() when `x` holds full-width scaled
// telemetry.
ClusterModel em_refine(const Matrix& x, const Matrix& centroids,
                       const std::vector<std::size_t>& distress_columns = {});

// Indices of the link-layer error features (retries, failed frames, FCS
// errors, losses, drops, timeouts) whose elevated levels mark a component as
// attack traffic.
std::vector<std::size_t> distress_feature_indices(const FeatureManifest& manifest);

// Argmax-posterior label for every row: attack when the attack component's
// posterior is >= 0.5 (exact ties go to attack), confidence = the winning
// posterior. Throws InputError on a width mismatch.
std::vector<PseudoLabel> assign_labels(const ClusterModel& model, const Matrix& x);

// Convenience composition over already-scaled data:
// kmeans_fit(k=2) -> em_refine -> assign_labels.
std::vector<PseudoLabel> pseudo_label(const Matrix& scaled,
                                      const std::vector<std::size_t>& distress_columns,
                                      std::uint64_t seed);

}  // namespace jamshield
