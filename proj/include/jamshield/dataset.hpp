// Dataset I/O (CSV), per-class summaries, standard scaling, stratified
// train/test splitting, and stratified k-fold planning.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jamshield/matrix.hpp"
#include "jamshield/schema.hpp"

namespace jamshield {

using Dataset = std::vector<LabeledSample>;

// Reads a dataset CSV whose header matches the manifest column order:
// timestamp,<40 names...>,kind,variant. Validates numbers, labels, and
// monotone timestamps.
Dataset load_dataset(const std::string& path, const FeatureManifest& manifest);
void save_dataset(const std::string& path, const Dataset& data,
                  const FeatureManifest& manifest);

Dataset parse_dataset_csv(std::istream& in, const FeatureManifest& manifest,
                          const std::string& origin);
void write_dataset_csv(std::ostream& out, const Dataset& data,
                       const FeatureManifest& manifest);

// Formats one sample as a CSV row (no trailing newline), and parses one row.
std::string sample_to_csv_row(const LabeledSample& sample);
LabeledSample sample_from_csv_row(const std::string& line,
                                  const FeatureManifest& manifest);

struct DatasetSummary {
  std::size_t total = 0;
  std::size_t benign = 0;
  std::size_t attack = 0;
  std::map<std::string, std::size_t> per_kind;
  std::map<std::string, std::size_t> per_variant;  // keyed kind/variant
};

DatasetSummary summarize(const Dataset& data);

// Per-feature standardization fitted on training data only. Population
// standard deviation, floored at 1e-12 so constant columns map to zero.
struct StandardScaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t size() const { return mean.size(); }
  void transform_inplace(std::vector<double>& values) const;
  std::vector<double> transform(const std::vector<double>& values) const;
  Matrix transform(const Matrix& rows) const;
};

StandardScaler fit_scaler(const Dataset& train);
StandardScaler fit_scaler(const Matrix& rows);
Dataset apply_scaler(const StandardScaler& scaler, const Dataset& data);

// Matrix/label views of a dataset.
Matrix to_matrix(const Dataset& data);
std::vector<int> binary_labels(const Dataset& data);

// Stratified (on the binary label) split; deterministic under seed; the two
// parts are disjoint and exhaustive. Requires every present class to have at
// least 2 samples.
struct SplitResult {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

SplitResult split_train_test(const Dataset& data, double ratio, std::uint64_t seed);
Dataset take(const Dataset& data, const std::vector<std::size_t>& indices);

// Stratified k-fold plan: folds partition the index set, sizes differ by at
// most one, per-fold class ratios track the global ratio.
struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // sample index -> fold id

  std::vector<std::size_t> fold_indices(int fold) const;
  std::vector<std::size_t> complement_indices(int fold) const;
};

FoldPlan make_folds(const Dataset& data, int k, std::uint64_t seed);
// Same plan from bare binary labels (for pseudo-labeled buffers).
FoldPlan make_folds(const std::vector<int>& labels, int k, std::uint64_t seed);

}  // namespace jamshield
