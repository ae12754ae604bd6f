#include "jamshield/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jamshield/common.hpp"

namespace jamshield {

using nlohmann::json;

std::string layer_to_string(FeatureLayer layer) {
  switch (layer) {
    case FeatureLayer::Physical: return "physical";
    case FeatureLayer::Link: return "link";
    case FeatureLayer::Application: return "application";
  }
  throw ContractError("layer_to_string: bad enum");
}

FeatureLayer layer_from_string(const std::string& text) {
  if (text == "physical") return FeatureLayer::Physical;
  if (text == "link") return FeatureLayer::Link;
  if (text == "application") return FeatureLayer::Application;
  throw InputError("unknown layer tag: '" + text + "'");
}

FeatureManifest::FeatureManifest(std::vector<FeatureDef> features)
    : features_(std::move(features)) {
  if (features_.size() != kFeatureCount) {
    throw InputError("manifest: expected " + std::to_string(kFeatureCount) +
                     " features, found " + std::to_string(features_.size()));
  }
  std::set<std::string> seen;
  bool has_layer[3] = {false, false, false};
  for (const FeatureDef& f : features_) {
    if (f.name.empty()) throw InputError("manifest: empty feature name");
    if (!seen.insert(f.name).second)
      throw InputError("manifest: duplicate feature name '" + f.name + "'");
    has_layer[static_cast<int>(f.layer)] = true;
  }
  for (int i = 0; i < 3; ++i) {
    if (!has_layer[i]) {
      throw InputError("manifest: layer '" +
                       layer_to_string(static_cast<FeatureLayer>(i)) +
                       "' has no features");
    }
  }
}

const FeatureManifest& FeatureManifest::builtin() {
  static const FeatureManifest manifest([] {
    const FeatureLayer P = FeatureLayer::Physical;
    const FeatureLayer L = FeatureLayer::Link;
    const FeatureLayer A = FeatureLayer::Application;
    std::vector<FeatureDef> f = {
        // Physical layer (12)
        {"rssi_dbm", P, "dBm"},
        {"snr_db", P, "dB"},
        {"noise_floor_dbm", P, "dBm"},
        {"channel_busy_fraction", P, "fraction"},
        {"tx_phy_rate_mbps", P, "Mbps"},
        {"rx_phy_rate_mbps", P, "Mbps"},
        {"channel_energy_dbm", P, "dBm"},
        {"interference_dbm", P, "dBm"},
        {"spectral_flatness", P, "ratio"},
        {"mcs_index", P, "index"},
        {"phy_error_rate", P, "fraction"},
        {"signal_quality", P, "fraction"},
        // Link layer (16)
        {"tx_frames", L, "frames/tick"},
        {"rx_frames", L, "frames/tick"},
        {"tx_bytes", L, "bytes/tick"},
        {"rx_bytes", L, "bytes/tick"},
        {"retry_count", L, "frames/tick"},
        {"retry_rate", L, "fraction"},
        {"failed_frame_count", L, "frames/tick"},
        {"fcs_error_count", L, "frames/tick"},
        {"beacon_loss_count", L, "beacons/tick"},
        {"tx_drops", L, "frames/tick"},
        {"rx_drops", L, "frames/tick"},
        {"ack_timeout_count", L, "frames/tick"},
        {"mac_latency_ms", L, "ms"},
        {"queue_depth", L, "frames"},
        {"cw_backoff_mean", L, "slots"},
        {"aggregation_frames", L, "frames"},
        // Application layer (12)
        {"udp_throughput_up_mbps", A, "Mbps"},
        {"udp_throughput_down_mbps", A, "Mbps"},
        {"probe_rtt_mean_ms", A, "ms"},
        {"probe_rtt_p95_ms", A, "ms"},
        {"jitter_ms", A, "ms"},
        {"loss_fraction_up", A, "fraction"},
        {"loss_fraction_down", A, "fraction"},
        {"offered_load_mbps", A, "Mbps"},
        {"reorder_rate", A, "fraction"},
        {"goodput_ratio", A, "fraction"},
        {"probe_loss_fraction", A, "fraction"},
        {"conn_stall_events", A, "events/tick"},
    };
    return FeatureManifest(std::move(f));
  }());
  return manifest;
}

FeatureManifest FeatureManifest::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("manifest: invalid JSON: ") + e.what());
  }
  if (!root.is_array()) throw InputError("manifest: top level must be an array");
  std::vector<FeatureDef> features;
  features.reserve(root.size());
  for (const json& entry : root) {
    if (!entry.is_object() || !entry.contains("name") || !entry.contains("layer"))
      throw InputError("manifest: entries need 'name' and 'layer' fields");
    FeatureDef def;
    def.name = entry.at("name").get<std::string>();
    def.layer = layer_from_string(entry.at("layer").get<std::string>());
    def.unit = entry.value("unit", std::string());
    features.push_back(std::move(def));
  }
  return FeatureManifest(std::move(features));
}

std::string FeatureManifest::to_json_text() const {
  json root = json::array();
  for (const FeatureDef& f : features_) {
    root.push_back(
        {{"name", f.name}, {"layer", layer_to_string(f.layer)}, {"unit", f.unit}});
  }
  return root.dump(2) + "\n";
}

FeatureManifest FeatureManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

void FeatureManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest file: " + path);
  out << to_json_text();
  if (!out) throw IoError("failed writing manifest file: " + path);
}

std::size_t FeatureManifest::index_of(const std::string& name) const {
  const auto idx = find(name);
  if (!idx) throw InputError("manifest: no feature named '" + name + "'");
  return *idx;
}

std::optional<std::size_t> FeatureManifest::find(const std::string& name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::size_t> FeatureManifest::layer_indices(FeatureLayer layer) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].layer == layer) out.push_back(i);
  return out;
}

std::string kind_to_string(JammerKind kind) {
  switch (kind) {
    case JammerKind::Benign: return "benign";
    case JammerKind::Constant: return "constant";
    case JammerKind::Reactive: return "reactive";
    case JammerKind::Random: return "random";
  }
  throw ContractError("kind_to_string: bad enum");
}

JammerKind kind_from_string(const std::string& text) {
  if (text == "benign") return JammerKind::Benign;
  if (text == "constant") return JammerKind::Constant;
  if (text == "reactive") return JammerKind::Reactive;
  if (text == "random") return JammerKind::Random;
  throw InputError("unknown class kind: '" + text + "'");
}

namespace {

const std::set<std::string>& variant_waveforms() {
  static const std::set<std::string> wfs = {"gaussian", "cos",   "sine",  "triangle",
                                            "pulse",    "saw_tooth", "square"};
  return wfs;
}

bool variant_ok(const std::string& variant) {
  if (variant == "gaussian_additional_devices") return true;
  // Split into <waveform>_<suffix>, longest waveform match first so that
  // "saw_tooth_nlos" parses correctly.
  for (const std::string& wf : variant_waveforms()) {
    if (variant.size() <= wf.size() + 1) continue;
    if (variant.compare(0, wf.size(), wf) != 0 || variant[wf.size()] != '_') continue;
    const std::string suffix = variant.substr(wf.size() + 1);
    if (suffix == "dynamic_gain" || suffix == "los" || suffix == "nlos") return true;
    // <gain>db with integer gain in [10, 30]
    if (suffix.size() >= 3 && suffix.compare(suffix.size() - 2, 2, "db") == 0) {
      const std::string digits = suffix.substr(0, suffix.size() - 2);
      if (digits.empty() ||
          digits.find_first_not_of("0123456789") != std::string::npos)
        continue;
      const int gain = std::stoi(digits);
      if (gain >= 10 && gain <= 30) return true;
    }
  }
  return false;
}

}  // namespace

bool is_valid_variant(const std::string& variant) { return variant_ok(variant); }

void validate_variant(const std::string& variant) {
  if (!variant_ok(variant)) throw InputError("unknown variant: '" + variant + "'");
}

ClassLabel ClassLabel::attack(JammerKind kind, const std::string& variant) {
  if (kind == JammerKind::Benign)
    throw ContractError("ClassLabel::attack: kind must be a jammer kind");
  validate_variant(variant);
  return ClassLabel{kind, variant};
}

}  // namespace jamshield
