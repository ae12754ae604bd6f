#include "jamshield/selection.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "jamshield/common.hpp"
#include "jamshield/mutual_info.hpp"
#include "jamshield/pca.hpp"

namespace jamshield {

using nlohmann::json;

std::vector<double> rank_scores(const std::vector<double>& scores) {
  const std::size_t n = scores.size();
  if (n == 0) throw InputError("rank_scores: empty scores");
  if (n == 1) return {1.0};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&scores](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    out[order[r]] = static_cast<double>(n - 1 - r) / static_cast<double>(n - 1);
  }
  return out;
}

SelectionMask weighted_vote_select(const std::vector<double>& pca_scores,
                                   const std::vector<double>& mi_scores,
                                   std::size_t k, double w_pca, double w_mi) {
  const std::size_t n = pca_scores.size();
  if (mi_scores.size() != n)
    throw InputError("weighted_vote_select: score lengths differ");
  if (k < 1 || k > n)
    throw InputError("weighted_vote_select: k must be in [1, " +
                     std::to_string(n) + "]");
  if (w_pca < 0.0 || w_mi < 0.0 || (w_pca == 0.0 && w_mi == 0.0))
    throw InputError("weighted_vote_select: weights must be >= 0 and not both 0");

  SelectionMask mask;
  mask.n_features = n;
  mask.pca_score = pca_scores;
  mask.mi_score = mi_scores;
  mask.w_pca = w_pca;
  mask.w_mi = w_mi;

  const std::vector<double> rs_pca = rank_scores(pca_scores);
  const std::vector<double> rs_mi = rank_scores(mi_scores);
  mask.combined_score.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    mask.combined_score[i] = w_pca * rs_pca[i] + w_mi * rs_mi[i];

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&mask](std::size_t a, std::size_t b) {
                     return mask.combined_score[a] > mask.combined_score[b];
                   });
  mask.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  return mask;
}

std::vector<double> apply_mask(const SelectionMask& mask,
                               const std::vector<double>& values) {
  if (values.size() != mask.n_features)
    throw InputError("apply_mask: expected " + std::to_string(mask.n_features) +
                     " values, got " + std::to_string(values.size()));
  std::vector<double> out;
  out.reserve(mask.selected.size());
  for (const std::size_t i : mask.selected) out.push_back(values[i]);
  return out;
}

Matrix apply_mask(const SelectionMask& mask, const Matrix& rows) {
  if (rows.cols() != mask.n_features)
    throw InputError("apply_mask: matrix width differs from mask source width");
  Matrix out(rows.rows(), mask.selected.size());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const double* src = rows.row_ptr(r);
    double* dst = out.row_ptr(r);
    for (std::size_t c = 0; c < mask.selected.size(); ++c)
      dst[c] = src[mask.selected[c]];
  }
  return out;
}

std::string SelectionMask::to_json_text() const {
  json root;
  root["version"] = 1;
  root["n_features"] = n_features;
  root["selected"] = selected;
  root["pca_score"] = pca_score;
  root["mi_score"] = mi_score;
  root["combined_score"] = combined_score;
  root["weights"] = {{"w_pca", w_pca}, {"w_mi", w_mi}};
  root["provenance"] = {{"dataset_hash", dataset_hash}, {"seed", seed}};
  return root.dump(2) + "\n";
}

SelectionMask SelectionMask::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("mask: invalid JSON: ") + e.what());
  }
  SelectionMask mask;
  try {
    mask.n_features = root.at("n_features").get<std::size_t>();
    mask.selected = root.at("selected").get<std::vector<std::size_t>>();
    mask.pca_score = root.at("pca_score").get<std::vector<double>>();
    mask.mi_score = root.at("mi_score").get<std::vector<double>>();
    mask.combined_score = root.at("combined_score").get<std::vector<double>>();
    mask.w_pca = root.at("weights").at("w_pca").get<double>();
    mask.w_mi = root.at("weights").at("w_mi").get<double>();
    mask.dataset_hash = root.at("provenance").value("dataset_hash", std::string());
    mask.seed = root.at("provenance").value("seed", 0ull);
  } catch (const json::exception& e) {
    throw InputError(std::string("mask: missing or mistyped field: ") + e.what());
  }
  for (const std::size_t i : mask.selected) {
    if (i >= mask.n_features)
      throw InputError("mask: selected index " + std::to_string(i) +
                       " out of range");
  }
  std::vector<std::size_t> uniq = mask.selected;
  std::sort(uniq.begin(), uniq.end());
  if (std::adjacent_find(uniq.begin(), uniq.end()) != uniq.end())
    throw InputError("mask: selected indices must be unique");
  return mask;
}

SelectionMask SelectionMask::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mask file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json_text(buf.str());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void SelectionMask::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mask file: " + path);
  out << to_json_text();
  if (!out) throw IoError("failed writing mask file: " + path);
}

std::string SelectionMask::content_id() const {
  return hash_hex(fnv1a(to_json_text()));
}

SelectionMask hybrid_select(const Matrix& scaled, const std::vector<int>& labels,
                            std::size_t k, double w_pca, double w_mi,
                            double pca_cumulative) {
  if (scaled.rows() != labels.size()) {
    throw InputError("hybrid_select: " + std::to_string(scaled.rows()) +
                     " rows vs " + std::to_string(labels.size()) + " labels");
  }
  if (!(pca_cumulative > 0.0 && pca_cumulative <= 1.0)) {
    throw InputError("hybrid_select: cumulative variance fraction must be in (0, 1]");
  }
  const PcaModel pca = pca_fit(scaled);
  const std::size_t retain = components_for_cumulative(pca, pca_cumulative);
  const std::vector<double> pca_s = pca_feature_scores(pca, retain);
  const std::vector<double> mi_s = mi_scores(scaled, labels);
  SelectionMask mask = weighted_vote_select(pca_s, mi_s, k, w_pca, w_mi);
  const std::uint64_t h_data = fnv1a(
      scaled.data().data(), scaled.data().size() * sizeof(double));
  const std::uint64_t h_labels =
      fnv1a(labels.data(), labels.size() * sizeof(int));
  mask.dataset_hash = hash_hex(h_data ^ (h_labels * 0x9e3779b97f4a7c15ULL));
  return mask;
}

}  // namespace jamshield
