#include "jamshield/metrics.hpp"

#include <fstream>

#include <json.hpp>

#include "jamshield/common.hpp"

namespace jamshield {

using nlohmann::json;

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0)
    throw InputError("compute_metrics: empty confusion matrix");
  MetricsReport r;
  r.cm = cm;
  const auto ratio = [&r](std::uint64_t num, std::uint64_t den,
                          const char* name) -> double {
    if (den == 0) {
      r.undefined_flags.push_back(name);
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
  r.recall = ratio(cm.tp, cm.tp + cm.fn, "recall");
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.undefined_flags.push_back("f1");
    r.f1 = 0.0;
  }
  r.detection_rate = static_cast<double>(cm.tp + cm.tn) /
                     static_cast<double>(cm.total());
  r.far = ratio(cm.fp, cm.fp + cm.tn, "far");
  // Misdetection rate shares recall's denominator; when defined it equals
  // 1 - recall exactly.
  if (cm.fn + cm.tp == 0) {
    r.undefined_flags.push_back("mdr");
    r.mdr = 0.0;
  } else {
    r.mdr = 1.0 - r.recall;
  }
  return r;
}

namespace {

json report_to_json(const NamedMetrics& nm) {
  const MetricsReport& m = nm.metrics;
  return json{{"model", nm.model},
              {"confusion",
               {{"tp", m.cm.tp}, {"fp", m.cm.fp}, {"tn", m.cm.tn}, {"fn", m.cm.fn}}},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"detection_rate", m.detection_rate},
              {"far", m.far},
              {"mdr", m.mdr},
              {"undefined", m.undefined_flags}};
}

}  // namespace

std::string reports_to_json_text(const std::vector<NamedMetrics>& reports) {
  if (reports.empty()) throw InputError("render_report: no reports");
  json root;
  root["version"] = 1;
  root["reports"] = json::array();
  for (const NamedMetrics& nm : reports) root["reports"].push_back(report_to_json(nm));
  return root.dump(2) + "\n";
}

std::string reports_to_csv_text(const std::vector<NamedMetrics>& reports) {
  if (reports.empty()) throw InputError("render_report: no reports");
  std::string out = "model,metric,value\n";
  for (const NamedMetrics& nm : reports) {
    const MetricsReport& m = nm.metrics;
    const std::pair<const char*, double> rows[] = {
        {"precision", m.precision}, {"recall", m.recall},
        {"f1", m.f1},               {"detection_rate", m.detection_rate},
        {"far", m.far},             {"mdr", m.mdr}};
    for (const auto& [name, value] : rows) {
      out += nm.model;
      out += ',';
      out += name;
      out += ',';
      out += format_g9(value);
      out += '\n';
    }
  }
  return out;
}

void render_report(const std::vector<NamedMetrics>& reports,
                   const std::string& json_path, const std::string& csv_path) {
  std::ofstream j(json_path);
  if (!j) throw IoError("cannot write report file: " + json_path);
  j << reports_to_json_text(reports);
  if (!j) throw IoError("failed writing report file: " + json_path);
  std::ofstream c(csv_path);
  if (!c) throw IoError("cannot write report file: " + csv_path);
  c << reports_to_csv_text(reports);
  if (!c) throw IoError("failed writing report file: " + csv_path);
}

}  // namespace jamshield
