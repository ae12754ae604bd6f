// Confusion-matrix metrics (positive class = attack) and report rendering.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jamshield {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
};

struct MetricsReport {
  ConfusionMatrix cm;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double detection_rate = 0.0;  // overall accuracy (tp+tn)/total
  double far = 0.0;             // fp/(fp+tn)
  double mdr = 0.0;             // fn/(fn+tp) = 1 - recall
  // Set when a metric's denominator was zero and the value was forced to 0.
  std::vector<std::string> undefined_flags;
};

MetricsReport compute_metrics(const ConfusionMatrix& cm);

// A named row for rendered reports.
struct NamedMetrics {
  std::string model;
  MetricsReport metrics;
};

// Serializes reports as versioned JSON and writes a long-format CSV
// (model,metric,value) with one row per metric, for external plotting.
std::string reports_to_json_text(const std::vector<NamedMetrics>& reports);
std::string reports_to_csv_text(const std::vector<NamedMetrics>& reports);
void render_report(const std::vector<NamedMetrics>& reports,
                   const std::string& json_path, const std::string& csv_path);

}  // namespace jamshield
