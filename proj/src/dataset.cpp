#include "jamshield/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "jamshield/common.hpp"

namespace jamshield {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (const char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else if (ch != '\r') {
      current.push_back(ch);
    }
  }
  fields.push_back(current);
  return fields;
}

std::string expected_header(const FeatureManifest& manifest) {
  std::string header = "timestamp";
  for (const FeatureDef& f : manifest.features()) {
    header += ',';
    header += f.name;
  }
  header += ",kind,variant";
  return header;
}

}  // namespace

std::string sample_to_csv_row(const LabeledSample& sample) {
  std::string row = format_g9(sample.timestamp);
  for (const double v : sample.values) {
    row += ',';
    row += format_g9(v);
  }
  row += ',';
  row += kind_to_string(sample.label.kind);
  row += ',';
  row += sample.label.variant;
  return row;
}

LabeledSample sample_from_csv_row(const std::string& line,
                                  const FeatureManifest& manifest) {
  const std::vector<std::string> fields = split_csv_line(line);
  const std::size_t expected = 1 + manifest.size() + 2;
  if (fields.size() != expected) {
    throw InputError("row has " + std::to_string(fields.size()) +
                     " columns, expected " + std::to_string(expected));
  }
  LabeledSample sample;
  sample.timestamp = parse_double(fields[0]);
  sample.values.resize(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const double v = parse_double(fields[1 + i]);
    sample.values[i] = v;
  }
  const JammerKind kind = kind_from_string(fields[1 + manifest.size()]);
  const std::string& variant = fields[2 + manifest.size()];
  if (kind == JammerKind::Benign) {
    if (!variant.empty())
      throw InputError("benign rows must have an empty variant, got '" + variant + "'");
    sample.label = ClassLabel::benign();
  } else {
    if (variant.empty()) throw InputError("jammer rows require a variant");
    sample.label = ClassLabel::attack(kind, variant);
  }
  return sample;
}

Dataset parse_dataset_csv(std::istream& in, const FeatureManifest& manifest,
                          const std::string& origin) {
  std::string line;
  if (!std::getline(in, line))
    throw InputError(origin + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string expected = expected_header(manifest);
  if (line != expected) {
    throw InputError(origin + ": header does not match manifest column order");
  }
  Dataset data;
  std::size_t line_no = 1;
  double prev_ts = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      LabeledSample sample = sample_from_csv_row(line, manifest);
      if (sample.timestamp <= prev_ts) {
        throw InputError("timestamps must be strictly increasing");
      }
      prev_ts = sample.timestamp;
      data.push_back(std::move(sample));
    } catch (const InputError& e) {
      throw InputError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

Dataset load_dataset(const std::string& path, const FeatureManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  return parse_dataset_csv(in, manifest, path);
}

void write_dataset_csv(std::ostream& out, const Dataset& data,
                       const FeatureManifest& manifest) {
  out << expected_header(manifest) << "\n";
  for (const LabeledSample& s : data) {
    if (s.values.size() != manifest.size())
      throw ContractError("write_dataset_csv: sample width differs from manifest");
    out << sample_to_csv_row(s) << "\n";
  }
}

void save_dataset(const std::string& path, const Dataset& data,
                  const FeatureManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path);
  write_dataset_csv(out, data, manifest);
  if (!out) throw IoError("failed writing dataset file: " + path);
}

DatasetSummary summarize(const Dataset& data) {
  DatasetSummary s;
  s.total = data.size();
  for (const LabeledSample& sample : data) {
    if (sample.label.is_attack()) {
      ++s.attack;
      ++s.per_kind[kind_to_string(sample.label.kind)];
      ++s.per_variant[kind_to_string(sample.label.kind) + "/" + sample.label.variant];
    } else {
      ++s.benign;
      ++s.per_kind["benign"];
    }
  }
  return s;
}

namespace {
constexpr double kStdFloor = 1e-12;
}

void StandardScaler::transform_inplace(std::vector<double>& values) const {
  if (values.size() != mean.size())
    throw ContractError("scaler: value width differs from fitted width");
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = (values[i] - mean[i]) / stddev[i];
}

std::vector<double> StandardScaler::transform(const std::vector<double>& values) const {
  std::vector<double> out = values;
  transform_inplace(out);
  return out;
}

Matrix StandardScaler::transform(const Matrix& rows) const {
  if (rows.cols() != mean.size())
    throw ContractError("scaler: matrix width differs from fitted width");
  Matrix out = rows;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* row = out.row_ptr(r);
    for (std::size_t c = 0; c < out.cols(); ++c)
      row[c] = (row[c] - mean[c]) / stddev[c];
  }
  return out;
}

StandardScaler fit_scaler(const Matrix& rows) {
  if (rows.rows() == 0) throw InputError("fit_scaler: empty training set");
  StandardScaler scaler;
  scaler.mean = column_means(rows);
  scaler.stddev = column_variances(rows);
  for (double& v : scaler.stddev) v = std::max(std::sqrt(v), kStdFloor);
  return scaler;
}

StandardScaler fit_scaler(const Dataset& train) {
  if (train.empty()) throw InputError("fit_scaler: empty training set");
  return fit_scaler(to_matrix(train));
}

Dataset apply_scaler(const StandardScaler& scaler, const Dataset& data) {
  Dataset out = data;
  for (LabeledSample& s : out) scaler.transform_inplace(s.values);
  return out;
}

Matrix to_matrix(const Dataset& data) {
  if (data.empty()) return Matrix();
  Matrix m(data.size(), data[0].values.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data[r].values.size() != m.cols())
      throw ContractError("to_matrix: ragged sample widths");
    double* row = m.row_ptr(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] = data[r].values[c];
  }
  return m;
}

std::vector<int> binary_labels(const Dataset& data) {
  std::vector<int> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) y[i] = data[i].label.binary();
  return y;
}

namespace {

// Indices of each binary class, attack last so that fold round-robin
// continuation is deterministic.
std::array<std::vector<std::size_t>, 2> class_indices(const Dataset& data) {
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[data[i].label.binary()].push_back(i);
  return by_class;
}

}  // namespace

SplitResult split_train_test(const Dataset& data, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw InputError("split ratio must be in (0, 1)");
  auto by_class = class_indices(data);
  Rng rng(derive_seed(seed, 1));
  SplitResult result;
  for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
    std::vector<std::size_t>& idx = by_class[cls];
    if (idx.empty()) continue;
    if (idx.size() < 2) {
      throw InputError("class " + std::to_string(cls) +
                       " has fewer than 2 samples; cannot split");
    }
    rng.shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    result.train_indices.insert(result.train_indices.end(), idx.begin(),
                                idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    result.test_indices.insert(result.test_indices.end(),
                               idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                               idx.end());
  }
  std::sort(result.train_indices.begin(), result.train_indices.end());
  std::sort(result.test_indices.begin(), result.test_indices.end());
  return result;
}

Dataset take(const Dataset& data, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.reserve(indices.size());
  for (const std::size_t i : indices) out.push_back(data[i]);
  return out;
}

std::vector<std::size_t> FoldPlan::fold_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::complement_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(i);
  return out;
}

FoldPlan make_folds(const Dataset& data, int k, std::uint64_t seed) {
  return make_folds(binary_labels(data), k, seed);
}

FoldPlan make_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw InputError("fold count must be at least 2");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i] ? 1 : 0].push_back(i);
  }
  for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
    if (!by_class[cls].empty() &&
        by_class[cls].size() < static_cast<std::size_t>(k)) {
      throw InputError("class " + std::to_string(cls) + " has " +
                       std::to_string(by_class[cls].size()) +
                       " samples, fewer than " + std::to_string(k) + " folds");
    }
  }
  Rng rng(derive_seed(seed, 2));
  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(labels.size(), 0);
  // Deal each class round-robin, continuing the fold cursor across classes so
  // global fold sizes stay within one of each other.
  int cursor = 0;
  for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
    std::vector<std::size_t>& idx = by_class[cls];
    rng.shuffle(idx);
    for (const std::size_t sample : idx) {
      plan.assignments[sample] = cursor;
      cursor = (cursor + 1) % k;
    }
  }
  return plan;
}

}  // namespace jamshield
