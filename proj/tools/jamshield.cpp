// jamshield — adaptive RF-jamming detection.
//
// One binary, seven subcommands covering the two operational phases:
//   simulate        generate labeled telemetry from jamming scenarios
//   label           pseudo-label a dataset by k-means + EM clustering
//   select-features hybrid PCA + MI feature selection to a mask file
//   train           fit one classifier behind a scaler + mask bundle
//   evaluate        score model bundles against a labeled dataset
//   run             online detection over a stream, with adaptive switching
//   benchmark       jamshield's auto-selected model vs the comparison nets
//
// Exit codes: 0 success, 1 internal error, 2 usage error (unknown flag/bad
// value), 3 missing input file, 4 input schema/content mismatch.
#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "jamshield/autocm.hpp"
#include "jamshield/common.hpp"
#include "jamshield/dataset.hpp"
#include "jamshield/labeling.hpp"
#include "jamshield/learners.hpp"
#include "jamshield/metrics.hpp"
#include "jamshield/selection.hpp"
#include "jamshield/simulator.hpp"

namespace fs = std::filesystem;
using namespace jamshield;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitSchemaMismatch = 4;

FeatureManifest manifest_from_flag(const std::string& path) {
  return path.empty() ? FeatureManifest::builtin() : FeatureManifest::load(path);
}

void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void print_metrics_table(const std::vector<NamedMetrics>& rows,
                         std::ostream& out) {
  out << "model        precision  recall     f1         det_rate   far        mdr\n";
  for (const NamedMetrics& row : rows) {
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%-12s %-10.4f %-10.4f %-10.4f %-10.4f %-10.4f %-10.4f\n",
                  row.model.c_str(), row.metrics.precision, row.metrics.recall,
                  row.metrics.f1, row.metrics.detection_rate, row.metrics.far,
                  row.metrics.mdr);
    out << line;
  }
}

ConfusionMatrix confusion_of(const ModelBundle& bundle, const Dataset& data) {
  ConfusionMatrix cm;
  for (const LabeledSample& s : data) {
    const Prediction p = bundle.predict_raw(s.values);
    if (s.label.is_attack()) {
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
  return cm;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::vector<std::string> scenarios;
  std::string out;
  std::string manifest;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_simulate(const SimulateOpts& opts) {
  const FeatureManifest manifest = manifest_from_flag(opts.manifest);
  Dataset data;
  double offset = 0.0;
  for (std::size_t i = 0; i < opts.scenarios.size(); ++i) {
    ScenarioConfig config = ScenarioConfig::load(opts.scenarios[i]);
    if (opts.seed_set) config.seed = derive_seed(opts.seed, i);
    const Dataset part = simulate(config, manifest, GenParams{}, offset);
    data.insert(data.end(), part.begin(), part.end());
    offset += config.duration_s;
  }
  ensure_parent_dir(opts.out);
  save_dataset(opts.out, data, manifest);

  const DatasetSummary summary = summarize(data);
  std::cerr << "wrote " << summary.total << " samples (" << summary.benign
            << " benign, " << summary.attack << " attack) to " << opts.out
            << "\n";
  for (const auto& [kind, count] : summary.per_kind) {
    std::cerr << "  " << kind << ": " << count << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// label
// ---------------------------------------------------------------------------

struct LabelOpts {
  std::string in;
  std::string out;
  std::string manifest;
  std::uint64_t seed = 0;
};

int cmd_label(const LabelOpts& opts) {
  const FeatureManifest manifest = manifest_from_flag(opts.manifest);
  const Dataset data = load_dataset(opts.in, manifest);
  if (data.empty()) throw InputError(opts.in + ": dataset is empty");

  const Matrix raw = to_matrix(data);
  const StandardScaler scaler = fit_scaler(raw);
  const std::vector<PseudoLabel> labels =
      pseudo_label(scaler.transform(raw), distress_feature_indices(manifest),
                   opts.seed);

  ensure_parent_dir(opts.out);
  std::ofstream out(opts.out);
  if (!out) throw IoError("cannot write labeled file: " + opts.out);
  out << "timestamp";
  for (const FeatureDef& f : manifest.features()) out << ',' << f.name;
  out << ",kind,variant,pseudo_label,confidence\n";
  std::size_t agree = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << sample_to_csv_row(data[i]) << ',' << labels[i].label << ','
        << format_g9(labels[i].confidence) << "\n";
    if ((labels[i].label == 1) == data[i].label.is_attack()) ++agree;
  }
  if (!out) throw IoError("failed writing labeled file: " + opts.out);

  std::cerr << "pseudo-labeled " << data.size() << " samples to " << opts.out
            << "; agreement with ground truth "
            << format_g9(static_cast<double>(agree) /
                         static_cast<double>(data.size()))
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// select-features
// ---------------------------------------------------------------------------

struct SelectOpts {
  std::string in;
  std::string out;
  std::string manifest;
  std::size_t k = 20;
  double w_pca = 0.5;
  double w_mi = 0.5;
  double pca_cumulative = 0.95;
  std::uint64_t seed = 0;
};

int cmd_select_features(const SelectOpts& opts) {
  const FeatureManifest manifest = manifest_from_flag(opts.manifest);
  const Dataset data = load_dataset(opts.in, manifest);
  const Matrix raw = to_matrix(data);
  const std::vector<int> labels = binary_labels(data);

  const StandardScaler scaler = fit_scaler(raw);
  SelectionMask mask = hybrid_select(scaler.transform(raw), labels, opts.k,
                                     opts.w_pca, opts.w_mi, opts.pca_cumulative);
  mask.seed = opts.seed;
  ensure_parent_dir(opts.out);
  mask.save(opts.out);

  std::cerr << "selected " << mask.selected.size() << " of " << mask.n_features
            << " features -> " << opts.out << "\n";
  for (const std::size_t idx : mask.selected) {
    std::cerr << "  " << manifest.feature(idx).name << " (combined "
              << format_g9(mask.combined_score[idx]) << ")\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
  std::string algo;
  std::string in;
  std::string mask;
  std::string out;
  std::string manifest;
  std::uint64_t seed = 0;
  int epochs = 0;  // 0 = the algorithm's stock epoch count
};

int cmd_train(const TrainOpts& opts) {
  const FeatureManifest manifest = manifest_from_flag(opts.manifest);
  const Dataset data = load_dataset(opts.in, manifest);
  const SelectionMask mask = SelectionMask::load(opts.mask);
  if (mask.n_features != manifest.size()) {
    throw InputError(opts.mask + ": mask covers " +
                     std::to_string(mask.n_features) +
                     " features but the manifest has " +
                     std::to_string(manifest.size()));
  }

  ModelBundle bundle;
  bundle.spec = LearnerSpec::defaults(algo_from_string(opts.algo), opts.seed);
  if (opts.epochs > 0) {
    bundle.spec.net.epochs = opts.epochs;
    bundle.spec.lstm.epochs = opts.epochs;
  }
  const Matrix raw = to_matrix(data);
  bundle.scaler = fit_scaler(raw);
  bundle.mask = mask;
  bundle.model = std::shared_ptr<const Model>(
      train(bundle.spec, apply_mask(mask, bundle.scaler.transform(raw)),
            binary_labels(data)));
  bundle.scaler_id = scaler_content_id(bundle.scaler);
  bundle.mask_id = mask.content_id();
  ensure_parent_dir(opts.out);
  bundle.save(opts.out);

  std::cerr << "trained " << opts.algo << " on " << data.size() << " samples ("
            << mask.selected.size() << " features) -> " << opts.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOpts {
  std::string in;
  std::string models;
  std::string report;
  std::string manifest;
};

int cmd_evaluate(const EvaluateOpts& opts) {
  const FeatureManifest manifest = manifest_from_flag(opts.manifest);
  const Dataset data = load_dataset(opts.in, manifest);

  std::vector<fs::path> model_paths;
  if (fs::is_directory(opts.models)) {
    for (const auto& entry : fs::directory_iterator(opts.models)) {
      if (entry.is_regular_file() && entry.path().extension() == ".model") {
        model_paths.push_back(entry.path());
      }
    }
    std::sort(model_paths.begin(), model_paths.end());
  } else if (fs::exists(opts.models)) {
    model_paths.push_back(opts.models);
  } else {
    throw IoError("cannot open models path: " + opts.models);
  }
  if (model_paths.empty()) {
    throw InputError(opts.models + ": no .model files found");
  }

  std::vector<NamedMetrics> rows;
  for (const fs::path& path : model_paths) {
    const ModelBundle bundle = ModelBundle::load(path.string());
    if (bundle.scaler.size() != manifest.size()) {
      throw InputError(path.string() + ": model expects " +
                       std::to_string(bundle.scaler.size()) +
                       " features but the manifest has " +
                       std::to_string(manifest.size()));
    }
    NamedMetrics row;
    row.model = path.stem().string();
    row.metrics = compute_metrics(confusion_of(bundle, data));
    rows.push_back(std::move(row));
  }

  fs::create_directories(opts.report);
  const std::string json_path = (fs::path(opts.report) / "report.json").string();
  const std::string csv_path = (fs::path(opts.report) / "report.csv").string();
  render_report(rows, json_path, csv_path);

  print_metrics_table(rows, std::cout);
  std::cerr << "report written to " << json_path << " and " << csv_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunOpts {
  std::string model;
  std::string config;
  std::string in;      // stream file; empty = stdin (unless --listen)
  std::string listen;  // host:port TCP line server
  std::string out;     // verdict NDJSON; empty = stdout
  std::string events;  // event NDJSON file
  std::string manifest;
  bool async_optimize = false;
  bool once = false;  // listen mode: serve one connection, then exit
};

struct StreamStats {
  std::size_t samples = 0;
  std::size_t malformed = 0;
  std::size_t attacks = 0;
};

// Parses `timestamp,<width values>[,kind,variant]`. Returns false on a
// malformed record.
bool parse_stream_line(const std::string& line, const FeatureManifest& manifest,
                       double& timestamp, std::vector<double>& values,
                       std::optional<ClassLabel>& reference,
                       std::string& error) {
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

  const std::size_t width = manifest.size();
  try {
    if (fields.size() == 1 + width + 2) {
      const LabeledSample sample = sample_from_csv_row(line, manifest);
      timestamp = sample.timestamp;
      values = sample.values;
      reference = sample.label;
      return true;
    }
    if (fields.size() == 1 + width) {
      timestamp = parse_double(fields[0]);
      values.resize(width);
      for (std::size_t i = 0; i < width; ++i) {
        values[i] = parse_double(fields[1 + i]);
      }
      reference.reset();
      return true;
    }
    error = "expected " + std::to_string(1 + width) + " or " +
            std::to_string(3 + width) + " fields, got " +
            std::to_string(fields.size());
  } catch (const std::exception& e) {
    error = e.what();
  }
  return false;
}

class OptimizationDriver {
 public:
  OptimizationDriver(AutoCm& cm, bool async) : cm_(cm), async_(async) {}

  // Called after every step and at stream end; launches, polls, and applies
  // background optimizations (or runs them inline when synchronous).
  void pump(bool drain) {
    if (pending_.valid()) {
      const auto status = drain ? std::future_status::ready
                                : pending_.wait_for(std::chrono::seconds(0));
      if (status == std::future_status::ready) {
        try {
          cm_.apply_optimization(pending_.get());
        } catch (const std::exception& e) {
          cm_.fail_optimization(e.what());
        }
        pending_ = {};
      }
    }
    if (!pending_.valid() && cm_.optimization_ready()) {
      if (!async_) {
        cm_.run_offline_optimization();
        return;
      }
      const std::vector<BufferedSample> snapshot = cm_.snapshot_buffer();
      const AutoCmConfig config = cm_.config();
      const FeatureManifest manifest = cm_.manifest();
      cm_.begin_optimization();
      pending_ = std::async(std::launch::async, [snapshot, config, manifest] {
        return offline_optimize(snapshot, config, manifest);
      });
    }
  }

 private:
  AutoCm& cm_;
  bool async_;
  std::future<OptimizationOutcome> pending_;
};

// Minimal sequential line-oriented TCP server for `run --listen`.
class LineServer {
 public:
  explicit LineServer(const std::string& address) {
    const std::size_t colon = address.rfind(':');
    if (colon == std::string::npos) {
      throw InputError("listen address must be host:port, got '" + address + "'");
    }
    std::string host = address.substr(0, colon);
    if (host.empty()) host = "0.0.0.0";
    if (host == "localhost") host = "127.0.0.1";
    int port = 0;
    try {
      port = std::stoi(address.substr(colon + 1));
    } catch (const std::exception&) {
      throw InputError("invalid listen port in '" + address + "'");
    }
    if (port < 0 || port > 65535) {
      throw InputError("listen port out of range in '" + address + "'");
    }

    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError("socket: " + std::string(std::strerror(errno)));
    const int on = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &on, sizeof(on));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw InputError("invalid listen host '" + host + "' (IPv4 only)");
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw IoError("bind " + address + ": " + why);
    }
    if (::listen(fd_, 1) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw IoError("listen " + address + ": " + why);
    }
    // Report the actual port (useful when 0 requested an ephemeral one).
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }

  ~LineServer() {
    if (fd_ >= 0) ::close(fd_);
  }

  int port() const { return port_; }

  int accept_client() {
    const int client = ::accept(fd_, nullptr, nullptr);
    if (client < 0) throw IoError("accept: " + std::string(std::strerror(errno)));
    return client;
  }

 private:
  int fd_ = -1;
  int port_ = 0;
};

bool send_all(int fd, const std::string& text) {
  std::size_t sent = 0;
  while (sent < text.size()) {
    const ssize_t n = ::send(fd, text.data() + sent, text.size() - sent, 0);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

int cmd_run(const RunOpts& opts) {
  const FeatureManifest manifest = manifest_from_flag(opts.manifest);
  const ModelBundle bundle = ModelBundle::load(opts.model);
  if (bundle.scaler.size() != manifest.size()) {
    throw InputError(opts.model + ": model expects " +
                     std::to_string(bundle.scaler.size()) +
                     " features but the manifest has " +
                     std::to_string(manifest.size()));
  }
  const AutoCmConfig config =
      opts.config.empty() ? AutoCmConfig{} : AutoCmConfig::load(opts.config);

  std::ofstream verdict_file;
  if (!opts.out.empty()) {
    ensure_parent_dir(opts.out);
    verdict_file.open(opts.out);
    if (!verdict_file) throw IoError("cannot write verdicts file: " + opts.out);
  }
  std::ostream& verdicts = opts.out.empty() ? std::cout : verdict_file;

  std::ofstream event_file;
  if (!opts.events.empty()) {
    ensure_parent_dir(opts.events);
    event_file.open(opts.events);
    if (!event_file) throw IoError("cannot write events file: " + opts.events);
  }

  AutoCm cm(config, bundle, manifest);
  if (event_file.is_open()) {
    // The start event predates the sink; persist it explicitly.
    for (const Event& e : cm.events()) event_file << e.to_json_text() << "\n";
    cm.set_event_sink([&event_file](const Event& e) {
      event_file << e.to_json_text() << "\n";
      event_file.flush();
    });
  }

  OptimizationDriver driver(cm, opts.async_optimize);
  StreamStats stats;

  // Processes one input line; returns the verdict JSON (empty if withheld).
  const auto process_line = [&](const std::string& line) -> std::string {
    if (line.empty()) return {};
    if (line.rfind("timestamp,", 0) == 0) return {};  // tolerated CSV header
    double timestamp = 0.0;
    std::vector<double> values;
    std::optional<ClassLabel> reference;
    std::string error;
    if (!parse_stream_line(line, manifest, timestamp, values, reference, error)) {
      ++stats.malformed;
      log_warn("malformed stream record: " + error);
      return {};
    }
    const std::optional<Verdict> verdict =
        cm.online_step(timestamp, values, reference);
    driver.pump(false);
    if (!verdict.has_value()) {
      ++stats.malformed;
      return {};
    }
    ++stats.samples;
    if (verdict->attack) ++stats.attacks;
    return verdict->to_json_text();
  };

  if (!opts.listen.empty()) {
    LineServer server(opts.listen);
    std::cerr << "listening on port " << server.port() << "\n";
    bool serving = true;
    while (serving) {
      const int client = server.accept_client();
      std::string carry;
      char buf[4096];
      for (;;) {
        const ssize_t n = ::recv(client, buf, sizeof(buf), 0);
        if (n <= 0) break;
        carry.append(buf, static_cast<std::size_t>(n));
        std::size_t pos = 0;
        std::size_t nl;
        while ((nl = carry.find('\n', pos)) != std::string::npos) {
          const std::string line = carry.substr(pos, nl - pos);
          pos = nl + 1;
          const std::string verdict = process_line(line);
          if (!verdict.empty()) {
            verdicts << verdict << "\n";
            if (!send_all(client, verdict + "\n")) break;
          }
        }
        carry.erase(0, pos);
      }
      if (!carry.empty()) {
        const std::string verdict = process_line(carry);
        if (!verdict.empty()) {
          verdicts << verdict << "\n";
          send_all(client, verdict + "\n");
        }
      }
      ::close(client);
      if (opts.once) serving = false;
    }
  } else {
    std::ifstream stream_file;
    if (!opts.in.empty()) {
      stream_file.open(opts.in);
      if (!stream_file) throw IoError("cannot open stream file: " + opts.in);
    }
    std::istream& in = opts.in.empty() ? std::cin : stream_file;
    std::string line;
    while (std::getline(in, line)) {
      const std::string verdict = process_line(line);
      if (!verdict.empty()) verdicts << verdict << "\n";
    }
  }
  driver.pump(true);  // finish any in-flight optimization

  std::size_t triggers = 0;
  std::size_t swaps = 0;
  for (const Event& e : cm.events()) {
    if (e.type == "trigger") ++triggers;
    if (e.type == "swap") ++swaps;
  }
  std::cerr << "processed " << stats.samples << " samples (" << stats.malformed
            << " malformed), " << stats.attacks << " attack verdicts, "
            << triggers << " triggers, " << swaps << " swaps; active model "
            << algo_to_string(cm.active_algo()) << ", mode "
            << mode_to_string(cm.mode()) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

struct BenchmarkOpts {
  std::string in;
  std::string report;
  std::string manifest;
  double ratio = 0.7;
  int folds = 10;
  std::size_t k = 20;
  std::size_t budget = 2500;  // 0 = use the whole training split for CV
  int epochs = 0;             // 0 = stock epoch counts
  std::uint64_t seed = 0;
};

int cmd_benchmark(const BenchmarkOpts& opts) {
  const FeatureManifest manifest = manifest_from_flag(opts.manifest);
  const Dataset data = load_dataset(opts.in, manifest);

  const SplitResult split = split_train_test(data, opts.ratio, opts.seed);
  const Dataset train_set = take(data, split.train_indices);
  const Dataset test_set = take(data, split.test_indices);
  std::cerr << "split: " << train_set.size() << " train / " << test_set.size()
            << " test\n";

  const Matrix train_raw = to_matrix(train_set);
  const std::vector<int> train_labels = binary_labels(train_set);
  const StandardScaler scaler = fit_scaler(train_raw);
  const Matrix train_scaled = scaler.transform(train_raw);
  SelectionMask mask =
      hybrid_select(train_scaled, train_labels, opts.k, 0.5, 0.5);
  mask.seed = opts.seed;

  // Cross-validate the six rotation algorithms on the training split.
  std::size_t budget = opts.budget == 0 ? train_labels.size() : opts.budget;
  const std::vector<std::size_t> sub =
      stratified_subsample(train_labels, budget, derive_seed(opts.seed, 1));
  Matrix sub_raw(sub.size(), train_raw.cols());
  std::vector<int> sub_labels(sub.size());
  for (std::size_t i = 0; i < sub.size(); ++i) {
    std::copy(train_raw.row_ptr(sub[i]), train_raw.row_ptr(sub[i]) + train_raw.cols(),
              sub_raw.row_ptr(i));
    sub_labels[i] = train_labels[sub[i]];
  }
  const FoldPlan folds =
      make_folds(sub_labels, opts.folds, derive_seed(opts.seed, 2));

  std::vector<LearnerSpec> specs;
  for (std::size_t i = 0; i < kAutoCmAlgos.size(); ++i) {
    LearnerSpec spec =
        LearnerSpec::defaults(kAutoCmAlgos[i], derive_seed(opts.seed, 3 + i));
    if (opts.epochs > 0) {
      spec.net.epochs = opts.epochs;
      spec.lstm.epochs = opts.epochs;
    }
    specs.push_back(spec);
  }
  const EvaluationReport cv = evaluate_all(sub_raw, sub_labels, mask, specs, folds);
  std::cerr << "cross-validation (" << folds.k << "-fold, " << sub.size()
            << " samples):\n";
  for (const AlgoEvaluation& row : cv.rows) {
    if (row.ok) {
      std::cerr << "  " << algo_to_string(row.algo) << ": f1 "
                << format_g9(row.f1.mean) << " +/- " << format_g9(row.f1.stddev)
                << "\n";
    } else {
      std::cerr << "  " << algo_to_string(row.algo) << ": failed (" << row.error
                << ")\n";
    }
  }
  const Algo chosen = select_best(cv);
  std::cerr << "selected: " << cv.reason << "\n";

  // Train the selected model and the three comparison baselines on the full
  // training split (same scaler and mask for an apples-to-apples read).
  const Matrix train_masked = apply_mask(mask, train_scaled);
  std::vector<NamedMetrics> rows;
  const std::vector<std::pair<std::string, Algo>> contenders = {
      {"jamshield", chosen},
      {"comp1", Algo::Comp1},
      {"comp2", Algo::Comp2},
      {"comp3", Algo::Comp3}};
  for (std::size_t i = 0; i < contenders.size(); ++i) {
    const auto& [name, algo] = contenders[i];
    LearnerSpec spec = LearnerSpec::defaults(algo, derive_seed(opts.seed, 20 + i));
    if (opts.epochs > 0) {
      spec.net.epochs = opts.epochs;
      spec.lstm.epochs = opts.epochs;
    }
    ModelBundle bundle;
    bundle.spec = spec;
    bundle.scaler = scaler;
    bundle.mask = mask;
    bundle.model = std::shared_ptr<const Model>(
        train(spec, train_masked, train_labels));
    bundle.scaler_id = scaler_content_id(scaler);
    bundle.mask_id = mask.content_id();

    NamedMetrics row;
    row.model = name;
    row.metrics = compute_metrics(confusion_of(bundle, test_set));
    rows.push_back(std::move(row));
    std::cerr << "evaluated " << name << " (" << algo_to_string(algo) << ")\n";
  }

  print_metrics_table(rows, std::cout);
  std::cout << "jamshield = " << algo_to_string(chosen) << "\n";
  if (!opts.report.empty()) {
    fs::create_directories(opts.report);
    const std::string json_path =
        (fs::path(opts.report) / "report.json").string();
    const std::string csv_path = (fs::path(opts.report) / "report.csv").string();
    render_report(rows, json_path, csv_path);
    std::cerr << "report written to " << json_path << " and " << csv_path
              << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "jamshield: adaptive detection of RF jamming from cross-layer 802.11 "
      "telemetry"};
  app.require_subcommand(1);

  SimulateOpts sim_opts;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Generate a labeled dataset from jamming scenario files");
  sim->add_option("--scenario", sim_opts.scenarios,
                  "Scenario JSON file (repeatable; concatenated in order)")
      ->required();
  sim->add_option("--out", sim_opts.out, "Output dataset CSV")->required();
  CLI::Option* sim_seed =
      sim->add_option("--seed", sim_opts.seed,
                      "Base seed; scenario i runs with a seed derived from "
                      "(seed, i), overriding the files");
  sim->add_option("--manifest", sim_opts.manifest,
                  "Feature manifest JSON (default: builtin 40-feature set)");

  LabelOpts label_opts;
  CLI::App* label = app.add_subcommand(
      "label", "Pseudo-label a dataset by k-means + EM clustering");
  label->add_option("--in", label_opts.in, "Input dataset CSV")->required();
  label->add_option("--out", label_opts.out,
                    "Output CSV with pseudo_label,confidence columns appended")
      ->required();
  label->add_option("--seed", label_opts.seed, "Clustering seed (default 0)");
  label->add_option("--manifest", label_opts.manifest,
                    "Feature manifest JSON (default: builtin)");

  SelectOpts select_opts;
  CLI::App* select = app.add_subcommand(
      "select-features", "Rank features by PCA + MI weighted voting");
  select->add_option("--in", select_opts.in, "Input dataset CSV")->required();
  select->add_option("--out", select_opts.out, "Output mask JSON")->required();
  select->add_option("--k", select_opts.k, "Features to keep (default 20)");
  select->add_option("--w-pca", select_opts.w_pca,
                     "PCA vote weight (default 0.5)");
  select->add_option("--w-mi", select_opts.w_mi, "MI vote weight (default 0.5)");
  select->add_option("--pca-cum", select_opts.pca_cumulative,
                     "Cumulative explained variance for PCA attribution "
                     "(default 0.95)");
  select->add_option("--seed", select_opts.seed,
                     "Provenance seed recorded in the mask (default 0)");
  select->add_option("--manifest", select_opts.manifest,
                     "Feature manifest JSON (default: builtin)");

  TrainOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand(
      "train", "Train one classifier and save the scaler+mask+model bundle");
  train_cmd
      ->add_option("--algo", train_opts.algo,
                   "knn | dt | lstm | svm | mlp | rf | comp1 | comp2 | comp3")
      ->required();
  train_cmd->add_option("--in", train_opts.in, "Training dataset CSV")
      ->required();
  train_cmd->add_option("--mask", train_opts.mask, "Feature mask JSON")
      ->required();
  train_cmd->add_option("--out", train_opts.out, "Output model bundle path")
      ->required();
  train_cmd->add_option("--seed", train_opts.seed, "Training seed (default 0)");
  train_cmd->add_option("--epochs", train_opts.epochs,
                        "Epoch override for the neural learners (0 = stock)");
  train_cmd->add_option("--manifest", train_opts.manifest,
                        "Feature manifest JSON (default: builtin)");

  EvaluateOpts eval_opts;
  CLI::App* eval = app.add_subcommand(
      "evaluate", "Score model bundles against a labeled dataset");
  eval->add_option("--in", eval_opts.in, "Labeled dataset CSV")->required();
  eval->add_option("--models", eval_opts.models,
                   "Model bundle file or directory of .model files")
      ->required();
  eval->add_option("--report", eval_opts.report,
                   "Report directory (report.json + report.csv)")
      ->required();
  eval->add_option("--manifest", eval_opts.manifest,
                   "Feature manifest JSON (default: builtin)");

  RunOpts run_opts;
  CLI::App* run = app.add_subcommand(
      "run",
      "Online detection over a telemetry stream with adaptive switching");
  run->add_option("--model", run_opts.model, "Initial model bundle")->required();
  run->add_option("--config", run_opts.config,
                  "Control-plane config JSON (default: built-in defaults)");
  CLI::Option* run_in =
      run->add_option("--in", run_opts.in, "Stream CSV file (default: stdin)");
  run->add_option("--listen", run_opts.listen,
                  "Serve a TCP line stream on host:port instead of reading "
                  "--in/stdin")
      ->excludes(run_in);
  run->add_option("--out", run_opts.out,
                  "Verdict NDJSON file (default: stdout)");
  run->add_option("--events", run_opts.events, "Event NDJSON file");
  run->add_flag("--async-optimize", run_opts.async_optimize,
                "Run offline optimization in a background thread (verdicts "
                "continue on the old model)");
  run->add_flag("--once", run_opts.once,
                "Listen mode: serve exactly one connection, then exit");
  run->add_option("--manifest", run_opts.manifest,
                  "Feature manifest JSON (default: builtin)");

  BenchmarkOpts bench_opts;
  CLI::App* bench = app.add_subcommand(
      "benchmark",
      "Auto-select a detector by cross-validation and compare it with the "
      "comp1/comp2/comp3 baselines on a held-out split");
  bench->add_option("--in", bench_opts.in, "Labeled dataset CSV")->required();
  bench->add_option("--report", bench_opts.report, "Report directory");
  bench->add_option("--ratio", bench_opts.ratio,
                    "Training fraction of the stratified split (default 0.7)");
  bench->add_option("--folds", bench_opts.folds,
                    "Cross-validation folds (default 10)");
  bench->add_option("--k", bench_opts.k, "Mask size (default 20)");
  bench->add_option("--budget", bench_opts.budget,
                    "Max training samples used during cross-validation "
                    "(0 = all; default 2500)");
  bench->add_option("--epochs", bench_opts.epochs,
                    "Epoch override for the neural learners (0 = stock)");
  bench->add_option("--seed", bench_opts.seed, "Pipeline seed (default 0)");
  bench->add_option("--manifest", bench_opts.manifest,
                    "Feature manifest JSON (default: builtin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);  // prints the diagnostic
    return kExitUsage;
  }
  sim_opts.seed_set = sim_seed->count() > 0;

  try {
    if (sim->parsed()) return cmd_simulate(sim_opts);
    if (label->parsed()) return cmd_label(label_opts);
    if (select->parsed()) return cmd_select_features(select_opts);
    if (train_cmd->parsed()) return cmd_train(train_opts);
    if (eval->parsed()) return cmd_evaluate(eval_opts);
    if (run->parsed()) return cmd_run(run_opts);
    if (bench->parsed()) return cmd_benchmark(bench_opts);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchemaMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
