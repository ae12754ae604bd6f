// The adaptive control plane: online detection with sensitivity-threshold
// monitoring, and an offline optimization pipeline that re-labels the buffered
// traffic, re-selects features, cross-validates every candidate algorithm,
// and swaps in the winner as one atomic (model, mask, scaler) replacement.
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jamshield/common.hpp"
#include "jamshield/dataset.hpp"
#include "jamshield/learners.hpp"
#include "jamshield/metrics.hpp"
#include "jamshield/schema.hpp"
#include "jamshield/selection.hpp"

namespace jamshield {

// ---------------------------------------------------------------------------
// Sensitivity monitoring
// ---------------------------------------------------------------------------

// Se = TP / (TP + FN); empty when no positives were observed (undefined).
std::optional<double> sensitivity(std::uint64_t tp, std::uint64_t fn);

// Per-algorithm minimum acceptable sensitivity. Immutable at runtime; a config
// file may override individual entries before the state machine starts.
struct ThresholdTable {
  std::map<Algo, double> values;

  // knn 0.91, dt 0.925, lstm 0.905, svm 0.90, mlp 0.915, rf 0.91.
  static ThresholdTable defaults();
  // Throws ContractError for an algorithm without an entry.
  double threshold_for(Algo algo) const;
};

// Sliding window over the last `capacity` reference-labeled ticks, keeping
// (predicted, reference) pairs and running TP/FN counts. TP + FN always equals
// the number of reference-positive entries currently in the window.
class SensitivityWindow {
public:
  explicit SensitivityWindow(std::size_t capacity);

  void add(bool predicted_attack, bool reference_attack);
  void clear();

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return ring_.size(); }
  bool full() const { return ring_.size() == capacity_; }
  std::uint64_t tp() const { return tp_; }
  std::uint64_t fn() const { return fn_; }
  // Undefined (empty optional) while the window holds no positives.
  std::optional<double> sensitivity() const;

private:
  std::size_t capacity_;
  std::deque<std::pair<bool, bool>> ring_;
  std::uint64_t tp_ = 0;
  std::uint64_t fn_ = 0;
};

// True when the window's sensitivity is defined and strictly below the active
// algorithm's threshold (the boundary itself keeps the current model).
bool check_threshold(const SensitivityWindow& window, const ThresholdTable& table,
                     Algo active);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct AutoCmConfig {
  ThresholdTable thresholds = ThresholdTable::defaults();
  std::size_t window = 200;       // sensitivity window W, in ticks
  std::size_t min_buffer = 2000;  // minimum samples before optimizing
  double w_pca = 0.5;             // feature-selection vote weights
  double w_mi = 0.5;
  std::size_t top_k = 20;         // retained feature count
  double pca_cumulative = 0.95;   // variance covered by PCA attribution
  std::string selection_rule = "f1";  // only shipped rule: F1 argmax
  int cv_folds = 10;
  // Cross-validation cost controls: the buffer is stratified-subsampled to at
  // most cv_budget rows for fold evaluation, and the iterative learners train
  // at most cv_epoch_cap epochs per fold. The final model always trains on
  // the full buffer with its stock epoch count.
  std::size_t cv_budget = 2500;
  int cv_epoch_cap = 8;
  std::string label_source = "auto";    // auto | pseudo | truth
  std::string buffer_policy = "fresh";  // fresh | rolling
  std::uint64_t seed = 0;

  void validate() const;  // throws InputError on out-of-range fields
  static AutoCmConfig from_json_text(const std::string& text);
  static AutoCmConfig load(const std::string& path);
  std::string to_json_text() const;
};

// ---------------------------------------------------------------------------
// Candidate evaluation
// ---------------------------------------------------------------------------

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // population, over completed folds
};

struct AlgoEvaluation {
  Algo algo = Algo::Knn;
  bool ok = false;
  std::string error;  // set when !ok; other algorithms are unaffected
  int folds = 0;
  MetricStats precision;
  MetricStats recall;
  MetricStats f1;
  MetricStats detection_rate;
  MetricStats far;
  MetricStats mdr;
  double inference_seconds = 0.0;  // mean per-sample, over held-out folds
};

struct EvaluationReport {
  std::vector<AlgoEvaluation> rows;  // one per evaluated algorithm
  std::optional<Algo> chosen;
  std::string reason;

  std::string to_json_text() const;
  // Content hash of the serialized report, quoted in swap events.
  std::string digest() const;
};

// Deterministic stratified subsample of at most `budget` indices (sorted).
// Class proportions track the input within one sample; every present class
// keeps at least one representative.
std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels,
                                              std::size_t budget,
                                              std::uint64_t seed);

// Cross-validates every spec on the raw data: per fold, the scaler is refit
// on the training part only, both parts are masked, the model is trained
// (fold-derived seed) and scored on the held-out part. A failing algorithm is
// recorded with its error and does not abort the rest. `chosen`/`reason` are
// filled by the F1-argmax rule when at least one algorithm completed.
EvaluationReport evaluate_all(const Matrix& raw, const std::vector<int>& labels,
                              const SelectionMask& mask,
                              const std::vector<LearnerSpec>& specs,
                              const FoldPlan& folds);

// Argmax of mean F1 over the completed rows; ties within 1e-9 break toward
// lower mean inference time, then toward the fixed algorithm order (knn, dt,
// lstm, svm, mlp, rf). Throws InputError when every row failed.
Algo select_best(const EvaluationReport& report);

// ---------------------------------------------------------------------------
// Offline optimization pipeline
// ---------------------------------------------------------------------------

// One buffered tick: raw manifest-order values plus the reference label when
// the stream carried one.
struct BufferedSample {
  double timestamp = 0.0;
  std::vector<double> values;
  std::optional<ClassLabel> truth;
};

struct OptimizationOutcome {
  ModelBundle bundle;  // freshly trained stack: scaler + mask + model
  EvaluationReport report;
  std::string label_source;  // "truth" or "pseudo"
};

// The full pipeline on a buffer snapshot: label (ground truth when the config
// allows and every sample has one, otherwise k-means+EM pseudo-labels) ->
// hybrid feature selection -> stratified-subsampled cross-validation of all
// candidate algorithms -> train the winner on the full buffer. Deterministic
// under config.seed. Throws InputError when the buffer is smaller than
// config.min_buffer, and propagates evaluation/training failures.
OptimizationOutcome offline_optimize(const std::vector<BufferedSample>& buffer,
                                     const AutoCmConfig& config,
                                     const FeatureManifest& manifest);

// ---------------------------------------------------------------------------
// Online state machine
// ---------------------------------------------------------------------------

struct Verdict {
  double timestamp = 0.0;
  bool attack = false;
  double score = 0.0;
  Algo algo = Algo::Knn;

  std::string to_json_text() const;  // {timestamp, class, score, active_algo}
};

// One event-log line. Fields are flat string key/values; serialization is a
// single sorted-key JSON object with timestamp and type merged in.
struct Event {
  double timestamp = 0.0;
  std::string type;
  std::map<std::string, std::string> fields;

  std::string to_json_text() const;
};

enum class Mode { Online, Optimizing };
std::string mode_to_string(Mode mode);

// Single-owner state machine covering the online path (scale -> mask ->
// predict -> verdict; sensitivity window on reference labels; threshold
// trigger) and the handover points for offline optimization. Verdicts keep
// flowing from the active stack while an optimization is in flight; the swap
// replaces the whole (model, mask, scaler) stack in one assignment, so no
// verdict ever mixes provenance.
class AutoCm {
public:
  // The initial bundle's scaler width must match the manifest.
  AutoCm(AutoCmConfig config, ModelBundle initial, FeatureManifest manifest);

  // Processes one tick. A malformed sample (wrong width, non-finite value,
  // backwards timestamp) yields an error event and no verdict, with all state
  // unchanged. A reference label updates the sensitivity window; a full
  // window whose Se drops strictly below the active threshold raises the
  // trigger (once), which clears the buffer under the "fresh" policy.
  std::optional<Verdict> online_step(double timestamp,
                                     const std::vector<double>& values,
                                     const std::optional<ClassLabel>& reference);

  Mode mode() const { return mode_; }
  Algo active_algo() const { return active_.spec.algo; }
  const ModelBundle& active() const { return active_; }
  const SensitivityWindow& window() const { return window_; }
  const AutoCmConfig& config() const { return config_; }
  const FeatureManifest& manifest() const { return manifest_; }
  std::size_t buffer_size() const { return buffer_.size(); }
  bool trigger_pending() const { return trigger_pending_; }
  const std::vector<Event>& events() const { return events_; }

  // Invoked for every appended event (e.g. to stream JSON lines to a file).
  void set_event_sink(std::function<void(const Event&)> sink);

  // True when a trigger is pending, the machine is online, and the buffer has
  // reached the configured minimum.
  bool optimization_ready() const;

  // Runs the whole optimization synchronously on the current buffer: skips
  // with a warning event when the buffer is too small, otherwise transitions
  // to optimizing, executes the pipeline, and applies the swap. Returns true
  // when a swap happened. Pipeline failures are logged and leave the current
  // stack active.
  bool run_offline_optimization();

  // Asynchronous decomposition of run_offline_optimization(): the owner takes
  // a snapshot and enters optimizing mode, computes the outcome elsewhere,
  // then applies (or fails) it back on the owner thread.
  std::vector<BufferedSample> snapshot_buffer() const;
  void begin_optimization();
  void apply_optimization(const OptimizationOutcome& outcome);
  void fail_optimization(const std::string& error);

private:
  void push_event(std::string type, std::map<std::string, std::string> fields);

  AutoCmConfig config_;
  ModelBundle active_;
  FeatureManifest manifest_;
  SensitivityWindow window_;
  Mode mode_ = Mode::Online;
  bool trigger_pending_ = false;
  double trigger_se_ = 0.0;  // Se at the most recent trigger
  double last_timestamp_ = 0.0;
  std::deque<BufferedSample> buffer_;
  // Rolling masked-row history for sequence models (cleared on swap).
  std::deque<std::vector<double>> history_;
  std::vector<Event> events_;
  std::function<void(const Event&)> sink_;
};

}  // namespace jamshield
