#include "jamshield/autocm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jamshield/labeling.hpp"

namespace jamshield {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Sensitivity monitoring
// ---------------------------------------------------------------------------

std::optional<double> sensitivity(std::uint64_t tp, std::uint64_t fn) {
  if (tp + fn == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

ThresholdTable ThresholdTable::defaults() {
  ThresholdTable table;
  table.values = {{Algo::Knn, 0.91}, {Algo::Dt, 0.925}, {Algo::Lstm, 0.905},
                  {Algo::Svm, 0.90}, {Algo::Mlp, 0.915}, {Algo::Rf, 0.91}};
  return table;
}

double ThresholdTable::threshold_for(Algo algo) const {
  const auto it = values.find(algo);
  if (it == values.end()) {
    throw ContractError("no sensitivity threshold for algorithm '" +
                        algo_to_string(algo) + "'");
  }
  return it->second;
}

SensitivityWindow::SensitivityWindow(std::size_t capacity)
    : capacity_(capacity) {
  if (capacity == 0) throw ContractError("sensitivity window capacity must be positive");
}

void SensitivityWindow::add(bool predicted_attack, bool reference_attack) {
  if (ring_.size() == capacity_) {
    const auto [old_pred, old_ref] = ring_.front();
    ring_.pop_front();
    if (old_ref) {
      if (old_pred) {
        --tp_;
      } else {
        --fn_;
      }
    }
  }
  ring_.emplace_back(predicted_attack, reference_attack);
  if (reference_attack) {
    if (predicted_attack) {
      ++tp_;
    } else {
      ++fn_;
    }
  }
}

void SensitivityWindow::clear() {
  ring_.clear();
  tp_ = 0;
  fn_ = 0;
}

std::optional<double> SensitivityWindow::sensitivity() const {
  return jamshield::sensitivity(tp_, fn_);
}

bool check_threshold(const SensitivityWindow& window, const ThresholdTable& table,
                     Algo active) {
  const std::optional<double> se = window.sensitivity();
  if (!se.has_value()) return false;
  return *se < table.threshold_for(active);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void AutoCmConfig::validate() const {
  for (const auto& [algo, t] : thresholds.values) {
    if (!(t > 0.0 && t < 1.0)) {
      throw InputError("config: threshold for " + algo_to_string(algo) +
                       " must be in (0, 1)");
    }
  }
  if (window == 0) throw InputError("config: window must be positive");
  if (min_buffer == 0) throw InputError("config: min_buffer must be positive");
  if (w_pca < 0.0 || w_mi < 0.0 || w_pca + w_mi <= 0.0) {
    throw InputError("config: vote weights must be non-negative and not both zero");
  }
  if (top_k == 0) throw InputError("config: top_k must be positive");
  if (!(pca_cumulative > 0.0 && pca_cumulative <= 1.0)) {
    throw InputError("config: pca_cumulative must be in (0, 1]");
  }
  if (selection_rule != "f1") {
    throw InputError("config: unknown selection rule '" + selection_rule + "'");
  }
  if (cv_folds < 2) throw InputError("config: cv_folds must be at least 2");
  if (cv_budget < 2 * static_cast<std::size_t>(cv_folds)) {
    throw InputError("config: cv_budget must be at least twice cv_folds");
  }
  if (cv_epoch_cap < 1) throw InputError("config: cv_epoch_cap must be positive");
  if (label_source != "auto" && label_source != "pseudo" &&
      label_source != "truth") {
    throw InputError("config: label_source must be auto, pseudo, or truth");
  }
  if (buffer_policy != "fresh" && buffer_policy != "rolling") {
    throw InputError("config: buffer_policy must be fresh or rolling");
  }
}

namespace {

json parse_config_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
}

}  // namespace

AutoCmConfig AutoCmConfig::from_json_text(const std::string& text) {
  const json root = parse_config_json(text);
  if (!root.is_object()) throw InputError("config: top level must be an object");

  static const std::set<std::string> kKnown = {
      "thresholds",  "window",       "min_buffer",    "w_pca",
      "w_mi",        "top_k",        "pca_cumulative", "selection_rule",
      "cv_folds",    "cv_budget",    "cv_epoch_cap",  "label_source",
      "buffer_policy", "seed"};
  for (const auto& [key, value] : root.items()) {
    if (kKnown.find(key) == kKnown.end()) {
      throw InputError("config: unknown key '" + key + "'");
    }
  }

  AutoCmConfig config;
  try {
    if (root.contains("thresholds")) {
      const json& th = root.at("thresholds");
      if (!th.is_object()) throw InputError("config: thresholds must be an object");
      for (const auto& [name, value] : th.items()) {
        config.thresholds.values[algo_from_string(name)] =
            value.get<double>();
      }
    }
    if (root.contains("window")) config.window = root.at("window").get<std::size_t>();
    if (root.contains("min_buffer")) {
      config.min_buffer = root.at("min_buffer").get<std::size_t>();
    }
    if (root.contains("w_pca")) config.w_pca = root.at("w_pca").get<double>();
    if (root.contains("w_mi")) config.w_mi = root.at("w_mi").get<double>();
    if (root.contains("top_k")) config.top_k = root.at("top_k").get<std::size_t>();
    if (root.contains("pca_cumulative")) {
      config.pca_cumulative = root.at("pca_cumulative").get<double>();
    }
    if (root.contains("selection_rule")) {
      config.selection_rule = root.at("selection_rule").get<std::string>();
    }
    if (root.contains("cv_folds")) config.cv_folds = root.at("cv_folds").get<int>();
    if (root.contains("cv_budget")) {
      config.cv_budget = root.at("cv_budget").get<std::size_t>();
    }
    if (root.contains("cv_epoch_cap")) {
      config.cv_epoch_cap = root.at("cv_epoch_cap").get<int>();
    }
    if (root.contains("label_source")) {
      config.label_source = root.at("label_source").get<std::string>();
    }
    if (root.contains("buffer_policy")) {
      config.buffer_policy = root.at("buffer_policy").get<std::string>();
    }
    if (root.contains("seed")) config.seed = root.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  config.validate();
  return config;
}

AutoCmConfig AutoCmConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json_text(buf.str());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::string AutoCmConfig::to_json_text() const {
  json th = json::object();
  for (const auto& [algo, t] : thresholds.values) th[algo_to_string(algo)] = t;
  const json root = {{"thresholds", th},
                     {"window", window},
                     {"min_buffer", min_buffer},
                     {"w_pca", w_pca},
                     {"w_mi", w_mi},
                     {"top_k", top_k},
                     {"pca_cumulative", pca_cumulative},
                     {"selection_rule", selection_rule},
                     {"cv_folds", cv_folds},
                     {"cv_budget", cv_budget},
                     {"cv_epoch_cap", cv_epoch_cap},
                     {"label_source", label_source},
                     {"buffer_policy", buffer_policy},
                     {"seed", seed}};
  return root.dump(2);
}

// ---------------------------------------------------------------------------
// Candidate evaluation
// ---------------------------------------------------------------------------

namespace {

MetricStats stats_of(const std::vector<double>& values) {
  MetricStats s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& indices) {
  Matrix out(indices.size(), src.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const double* in = src.row_ptr(indices[r]);
    double* dst = out.row_ptr(r);
    for (std::size_t c = 0; c < src.cols(); ++c) dst[c] = in[c];
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels[i]);
  return out;
}

json stats_to_json(const MetricStats& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}};
}

// Position used for the fixed-order tie-break; candidates outside the
// rotation sort after the six, by enum value.
std::size_t fixed_order_index(Algo algo) {
  for (std::size_t i = 0; i < kAutoCmAlgos.size(); ++i) {
    if (kAutoCmAlgos[i] == algo) return i;
  }
  return kAutoCmAlgos.size() + static_cast<std::size_t>(algo);
}

}  // namespace

std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels,
                                              std::size_t budget,
                                              std::uint64_t seed) {
  if (budget == 0) throw ContractError("stratified_subsample: zero budget");
  const std::size_t n = labels.size();
  std::vector<std::size_t> out;
  if (n <= budget) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i] ? 1 : 0].push_back(i);

  Rng rng(derive_seed(seed, 0));
  if (by_class[0].empty() || by_class[1].empty()) {
    std::vector<std::size_t>& only =
        by_class[0].empty() ? by_class[1] : by_class[0];
    rng.shuffle(only);
    out.assign(only.begin(), only.begin() + static_cast<std::ptrdiff_t>(budget));
    std::sort(out.begin(), out.end());
    return out;
  }

  const double ratio =
      static_cast<double>(by_class[1].size()) / static_cast<double>(n);
  std::size_t n1 = static_cast<std::size_t>(std::clamp<long long>(
      std::llround(ratio * static_cast<double>(budget)), 1,
      static_cast<long long>(budget) - 1));
  std::size_t n0 = budget - n1;
  if (n0 > by_class[0].size()) {
    n1 += n0 - by_class[0].size();
    n0 = by_class[0].size();
  }
  if (n1 > by_class[1].size()) {
    n0 += n1 - by_class[1].size();
    n1 = by_class[1].size();
  }
  rng.shuffle(by_class[0]);
  rng.shuffle(by_class[1]);
  out.assign(by_class[0].begin(),
             by_class[0].begin() + static_cast<std::ptrdiff_t>(n0));
  out.insert(out.end(), by_class[1].begin(),
             by_class[1].begin() + static_cast<std::ptrdiff_t>(n1));
  std::sort(out.begin(), out.end());
  return out;
}

EvaluationReport evaluate_all(const Matrix& raw, const std::vector<int>& labels,
                              const SelectionMask& mask,
                              const std::vector<LearnerSpec>& specs,
                              const FoldPlan& folds) {
  if (raw.rows() != labels.size()) {
    throw ContractError("evaluate_all: rows and labels disagree");
  }
  if (folds.assignments.size() != labels.size()) {
    throw ContractError("evaluate_all: fold plan does not cover the data");
  }
  if (specs.empty()) throw ContractError("evaluate_all: no specs");

  EvaluationReport report;
  for (const LearnerSpec& spec : specs) {
    AlgoEvaluation row;
    row.algo = spec.algo;
    try {
      std::vector<double> precision, recall, f1, accuracy, far, mdr, times;
      for (int f = 0; f < folds.k; ++f) {
        const std::vector<std::size_t> test_idx = folds.fold_indices(f);
        const std::vector<std::size_t> train_idx = folds.complement_indices(f);
        const Matrix train_raw = gather_rows(raw, train_idx);
        const Matrix test_raw = gather_rows(raw, test_idx);
        const std::vector<int> train_y = gather_labels(labels, train_idx);
        const std::vector<int> test_y = gather_labels(labels, test_idx);

        const StandardScaler scaler = fit_scaler(train_raw);
        const Matrix train_x = apply_mask(mask, scaler.transform(train_raw));
        const Matrix test_x = apply_mask(mask, scaler.transform(test_raw));

        LearnerSpec fold_spec = spec;
        fold_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(f));
        const std::unique_ptr<Model> model = train(fold_spec, train_x, train_y);

        ConfusionMatrix cm;
        for (std::size_t i = 0; i < test_x.rows(); ++i) {
          const Prediction p = predict(*model, test_x.row(i));
          if (test_y[i] != 0) {
            if (p.attack) {
              ++cm.tp;
            } else {
              ++cm.fn;
            }
          } else {
            if (p.attack) {
              ++cm.fp;
            } else {
              ++cm.tn;
            }
          }
        }
        const MetricsReport m = compute_metrics(cm);
        precision.push_back(m.precision);
        recall.push_back(m.recall);
        f1.push_back(m.f1);
        accuracy.push_back(m.detection_rate);
        far.push_back(m.far);
        mdr.push_back(m.mdr);
        times.push_back(inference_time(*model, test_x));
      }
      row.folds = folds.k;
      row.precision = stats_of(precision);
      row.recall = stats_of(recall);
      row.f1 = stats_of(f1);
      row.detection_rate = stats_of(accuracy);
      row.far = stats_of(far);
      row.mdr = stats_of(mdr);
      row.inference_seconds = stats_of(times).mean;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      row.folds = 0;
    }
    report.rows.push_back(std::move(row));
  }

  try {
    const Algo best = select_best(report);
    report.chosen = best;
    const AlgoEvaluation* best_row = nullptr;
    bool f1_tie = false;
    for (const AlgoEvaluation& row : report.rows) {
      if (row.algo == best) best_row = &row;
    }
    for (const AlgoEvaluation& row : report.rows) {
      if (row.ok && row.algo != best &&
          std::fabs(row.f1.mean - best_row->f1.mean) <= 1e-9) {
        f1_tie = true;
      }
    }
    report.reason = algo_to_string(best) + ": highest mean F1 " +
                    format_g9(best_row->f1.mean);
    if (f1_tie) report.reason += " (tie broken by inference time)";
  } catch (const InputError&) {
    report.chosen = std::nullopt;
    report.reason = "no algorithm completed evaluation";
  }
  return report;
}

Algo select_best(const EvaluationReport& report) {
  const AlgoEvaluation* best = nullptr;
  for (const AlgoEvaluation& row : report.rows) {
    if (!row.ok) continue;
    if (best == nullptr) {
      best = &row;
      continue;
    }
    if (row.f1.mean > best->f1.mean + 1e-9) {
      best = &row;
    } else if (std::fabs(row.f1.mean - best->f1.mean) <= 1e-9) {
      if (row.inference_seconds < best->inference_seconds) {
        best = &row;
      } else if (row.inference_seconds == best->inference_seconds &&
                 fixed_order_index(row.algo) < fixed_order_index(best->algo)) {
        best = &row;
      }
    }
  }
  if (best == nullptr) {
    throw InputError("evaluation failed for every algorithm");
  }
  return best->algo;
}

std::string EvaluationReport::to_json_text() const {
  json rows_json = json::array();
  for (const AlgoEvaluation& row : rows) {
    rows_json.push_back({{"algo", algo_to_string(row.algo)},
                         {"ok", row.ok},
                         {"error", row.error},
                         {"folds", row.folds},
                         {"precision", stats_to_json(row.precision)},
                         {"recall", stats_to_json(row.recall)},
                         {"f1", stats_to_json(row.f1)},
                         {"detection_rate", stats_to_json(row.detection_rate)},
                         {"far", stats_to_json(row.far)},
                         {"mdr", stats_to_json(row.mdr)},
                         {"inference_seconds", row.inference_seconds}});
  }
  const json root = {
      {"version", 1},
      {"rows", rows_json},
      {"chosen", chosen.has_value() ? json(algo_to_string(*chosen)) : json()},
      {"reason", reason}};
  return root.dump(2);
}

std::string EvaluationReport::digest() const {
  return hash_hex(fnv1a(to_json_text()));
}

// ---------------------------------------------------------------------------
// Offline optimization pipeline
// ---------------------------------------------------------------------------

OptimizationOutcome offline_optimize(const std::vector<BufferedSample>& buffer,
                                     const AutoCmConfig& config,
                                     const FeatureManifest& manifest) {
  config.validate();
  if (buffer.size() < config.min_buffer) {
    throw InputError("optimization buffer has " + std::to_string(buffer.size()) +
                     " samples; minimum is " + std::to_string(config.min_buffer));
  }
  const std::size_t width = manifest.size();
  Matrix raw(buffer.size(), width);
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    if (buffer[i].values.size() != width) {
      throw InputError("buffered sample " + std::to_string(i) + " has " +
                       std::to_string(buffer[i].values.size()) +
                       " values; expected " + std::to_string(width));
    }
    double* row = raw.row_ptr(i);
    for (std::size_t c = 0; c < width; ++c) row[c] = buffer[i].values[c];
  }

  // Labels: ground truth when requested/available, pseudo-labels otherwise.
  bool all_truth = true;
  for (const BufferedSample& s : buffer) {
    if (!s.truth.has_value()) {
      all_truth = false;
      break;
    }
  }
  if (config.label_source == "truth" && !all_truth) {
    throw InputError(
        "label source 'truth' requires every buffered sample to carry a label");
  }
  const bool use_truth =
      (config.label_source == "truth") ||
      (config.label_source == "auto" && all_truth);

  const StandardScaler scaler = fit_scaler(raw);
  const Matrix scaled = scaler.transform(raw);

  std::vector<int> labels(buffer.size());
  std::string source;
  if (use_truth) {
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      labels[i] = buffer[i].truth->binary();
    }
    source = "truth";
  } else {
    const std::vector<PseudoLabel> pl =
        pseudo_label(scaled, distress_feature_indices(manifest),
                     derive_seed(config.seed, 0));
    for (std::size_t i = 0; i < pl.size(); ++i) labels[i] = pl[i].label;
    source = "pseudo";
  }
  const bool has_both =
      std::find(labels.begin(), labels.end(), 0) != labels.end() &&
      std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (!has_both) {
    throw InputError("buffered data labels to a single class; cannot optimize");
  }

  SelectionMask mask = hybrid_select(scaled, labels, config.top_k, config.w_pca,
                                     config.w_mi, config.pca_cumulative);
  mask.seed = config.seed;

  // Cross-validation on a stratified subsample, with capped epochs for the
  // iterative learners; the final model below trains uncapped on everything.
  const std::vector<std::size_t> sub =
      stratified_subsample(labels, config.cv_budget, derive_seed(config.seed, 1));
  const Matrix sub_raw = gather_rows(raw, sub);
  const std::vector<int> sub_labels = gather_labels(labels, sub);
  const FoldPlan folds =
      make_folds(sub_labels, config.cv_folds, derive_seed(config.seed, 2));

  std::vector<LearnerSpec> cv_specs;
  for (std::size_t i = 0; i < kAutoCmAlgos.size(); ++i) {
    LearnerSpec spec = LearnerSpec::defaults(
        kAutoCmAlgos[i], derive_seed(config.seed, 3 + i));
    spec.net.epochs = std::min(spec.net.epochs, config.cv_epoch_cap);
    spec.lstm.epochs = std::min(spec.lstm.epochs, config.cv_epoch_cap);
    cv_specs.push_back(spec);
  }

  OptimizationOutcome outcome;
  outcome.report = evaluate_all(sub_raw, sub_labels, mask, cv_specs, folds);
  const Algo chosen = select_best(outcome.report);

  const std::size_t chosen_index = fixed_order_index(chosen);
  LearnerSpec final_spec =
      LearnerSpec::defaults(chosen, derive_seed(config.seed, 3 + chosen_index));
  const Matrix full_x = apply_mask(mask, scaled);
  std::unique_ptr<Model> model = train(final_spec, full_x, labels);

  outcome.bundle.spec = final_spec;
  outcome.bundle.scaler = scaler;
  outcome.bundle.mask = mask;
  outcome.bundle.model = std::shared_ptr<const Model>(std::move(model));
  outcome.bundle.scaler_id = scaler_content_id(scaler);
  outcome.bundle.mask_id = mask.content_id();
  outcome.label_source = source;
  return outcome;
}

// ---------------------------------------------------------------------------
// Online state machine
// ---------------------------------------------------------------------------

std::string Verdict::to_json_text() const {
  const json root = {{"timestamp", timestamp},
                     {"class", attack ? "attack" : "benign"},
                     {"score", score},
                     {"active_algo", algo_to_string(algo)}};
  return root.dump();
}

std::string Event::to_json_text() const {
  json root = {{"timestamp", timestamp}, {"type", type}};
  for (const auto& [key, value] : fields) root[key] = value;
  return root.dump();
}

std::string mode_to_string(Mode mode) {
  return mode == Mode::Online ? "online" : "optimizing";
}

namespace {

const AutoCmConfig& validated(const AutoCmConfig& config) {
  config.validate();
  return config;
}

}  // namespace

AutoCm::AutoCm(AutoCmConfig config, ModelBundle initial, FeatureManifest manifest)
    : config_(std::move(config)),
      active_(std::move(initial)),
      manifest_(std::move(manifest)),
      window_(validated(config_).window) {
  if (active_.scaler.size() != manifest_.size()) {
    throw ContractError("initial model expects " +
                        std::to_string(active_.scaler.size()) +
                        " features; manifest has " +
                        std::to_string(manifest_.size()));
  }
  if (active_.model == nullptr) {
    throw ContractError("initial bundle has no model");
  }
  push_event("start", {{"algo", algo_to_string(active_algo())},
                       {"mode", mode_to_string(mode_)},
                       {"window", std::to_string(config_.window)},
                       {"min_buffer", std::to_string(config_.min_buffer)}});
}

void AutoCm::set_event_sink(std::function<void(const Event&)> sink) {
  sink_ = std::move(sink);
}

void AutoCm::push_event(std::string type,
                        std::map<std::string, std::string> fields) {
  Event event;
  event.timestamp = last_timestamp_;
  event.type = std::move(type);
  event.fields = std::move(fields);
  events_.push_back(event);
  if (sink_) sink_(events_.back());
}

std::optional<Verdict> AutoCm::online_step(
    double timestamp, const std::vector<double>& values,
    const std::optional<ClassLabel>& reference) {
  // Validation failures leave every piece of state untouched.
  std::string error;
  if (!(timestamp >= 0.0) || !std::isfinite(timestamp)) {
    error = "timestamp must be finite and non-negative";
  } else if (timestamp < last_timestamp_) {
    error = "timestamp " + format_g9(timestamp) + " is behind the stream at " +
            format_g9(last_timestamp_);
  } else if (values.size() != manifest_.size()) {
    error = "expected " + std::to_string(manifest_.size()) + " values, got " +
            std::to_string(values.size());
  } else {
    for (double v : values) {
      if (!std::isfinite(v)) {
        error = "sample contains a non-finite value";
        break;
      }
    }
  }
  if (!error.empty()) {
    push_event("verdict_error", {{"error", error}});
    return std::nullopt;
  }

  last_timestamp_ = timestamp;

  // Scale -> mask -> predict with the active stack. Sequence models score the
  // rolling history of masked rows; everything else scores the single row.
  const std::vector<double> masked =
      apply_mask(active_.mask, active_.scaler.transform(values));
  double score = 0.0;
  if (active_.model->is_sequence()) {
    history_.push_back(masked);
    const std::size_t span = active_.model->window_length();
    while (history_.size() > span) history_.pop_front();
    Matrix window_rows(history_.size(), masked.size());
    for (std::size_t r = 0; r < history_.size(); ++r) {
      double* dst = window_rows.row_ptr(r);
      for (std::size_t c = 0; c < masked.size(); ++c) dst[c] = history_[r][c];
    }
    score = active_.model->score_sequence(window_rows);
  } else {
    score = active_.model->score(masked);
  }
  score = std::clamp(score, 0.0, 1.0);

  Verdict verdict;
  verdict.timestamp = timestamp;
  verdict.attack = score >= 0.5;
  verdict.score = score;
  verdict.algo = active_algo();

  buffer_.push_back(BufferedSample{timestamp, values, reference});
  while (buffer_.size() > config_.min_buffer) buffer_.pop_front();

  if (reference.has_value()) {
    window_.add(verdict.attack, reference->is_attack());
    if (mode_ == Mode::Online && !trigger_pending_ && window_.full() &&
        check_threshold(window_, config_.thresholds, active_algo())) {
      trigger_pending_ = true;
      trigger_se_ = *window_.sensitivity();
      push_event("trigger",
                 {{"algo", algo_to_string(active_algo())},
                  {"sensitivity", format_g9(trigger_se_)},
                  {"threshold",
                   format_g9(config_.thresholds.threshold_for(active_algo()))},
                  {"buffer_policy", config_.buffer_policy}});
      if (config_.buffer_policy == "fresh") buffer_.clear();
    }
  }
  return verdict;
}

bool AutoCm::optimization_ready() const {
  return trigger_pending_ && mode_ == Mode::Online &&
         buffer_.size() >= config_.min_buffer;
}

std::vector<BufferedSample> AutoCm::snapshot_buffer() const {
  return std::vector<BufferedSample>(buffer_.begin(), buffer_.end());
}

void AutoCm::begin_optimization() {
  if (mode_ != Mode::Online) {
    throw ContractError("begin_optimization: already optimizing");
  }
  mode_ = Mode::Optimizing;
  push_event("optimize_begin", {{"from", "online"},
                                {"to", "optimizing"},
                                {"algo", algo_to_string(active_algo())},
                                {"buffer", std::to_string(buffer_.size())}});
}

void AutoCm::apply_optimization(const OptimizationOutcome& outcome) {
  if (mode_ != Mode::Optimizing) {
    throw ContractError("apply_optimization: no optimization in progress");
  }
  if (outcome.bundle.scaler.size() != manifest_.size()) {
    throw ContractError("apply_optimization: bundle width does not match manifest");
  }
  if (outcome.bundle.model == nullptr) {
    throw ContractError("apply_optimization: bundle has no model");
  }

  const Algo old_algo = active_algo();
  std::set<std::size_t> old_sel(active_.mask.selected.begin(),
                                active_.mask.selected.end());
  std::set<std::size_t> new_sel(outcome.bundle.mask.selected.begin(),
                                outcome.bundle.mask.selected.end());
  std::string added;
  std::string removed;
  for (std::size_t i : new_sel) {
    if (old_sel.find(i) == old_sel.end()) {
      if (!added.empty()) added += ",";
      added += std::to_string(i);
    }
  }
  for (std::size_t i : old_sel) {
    if (new_sel.find(i) == new_sel.end()) {
      if (!removed.empty()) removed += ",";
      removed += std::to_string(i);
    }
  }

  // The swap is one assignment of the whole stack; the window, sequence
  // history, and buffer restart so nothing from the old regime leaks in, and
  // the refilling window debounces back-to-back triggers.
  active_ = outcome.bundle;
  history_.clear();
  window_.clear();
  buffer_.clear();
  trigger_pending_ = false;
  mode_ = Mode::Online;
  push_event("swap", {{"from", "optimizing"},
                      {"to", "online"},
                      {"old_algo", algo_to_string(old_algo)},
                      {"new_algo", algo_to_string(active_algo())},
                      {"sensitivity_at_trigger", format_g9(trigger_se_)},
                      {"report_digest", outcome.report.digest()},
                      {"mask_added", added.empty() ? "none" : added},
                      {"mask_removed", removed.empty() ? "none" : removed},
                      {"label_source", outcome.label_source},
                      {"reason", outcome.report.reason}});
}

void AutoCm::fail_optimization(const std::string& error) {
  if (mode_ != Mode::Optimizing) {
    throw ContractError("fail_optimization: no optimization in progress");
  }
  mode_ = Mode::Online;
  trigger_pending_ = false;
  push_event("optimize_failed",
             {{"from", "optimizing"}, {"to", "online"}, {"error", error}});
  log_warn("offline optimization failed: " + error);
}

bool AutoCm::run_offline_optimization() {
  if (mode_ != Mode::Online) {
    throw ContractError("run_offline_optimization: already optimizing");
  }
  if (buffer_.size() < config_.min_buffer) {
    push_event("optimize_skipped",
               {{"reason", "buffer too small"},
                {"buffer", std::to_string(buffer_.size())},
                {"minimum", std::to_string(config_.min_buffer)}});
    log_warn("optimization skipped: buffer has " +
             std::to_string(buffer_.size()) + " samples; minimum is " +
             std::to_string(config_.min_buffer));
    return false;
  }
  begin_optimization();
  try {
    const OptimizationOutcome outcome =
        offline_optimize(snapshot_buffer(), config_, manifest_);
    apply_optimization(outcome);
    return true;
  } catch (const std::exception& e) {
    fail_optimization(e.what());
    return false;
  }
}

}  // namespace jamshield
