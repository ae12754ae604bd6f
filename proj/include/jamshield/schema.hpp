// Canonical cross-layer feature schema and class taxonomy: the 40-feature
// manifest shared by the loader and the simulator, and the benign/jammer
// label grammar.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace jamshield {

enum class FeatureLayer { Physical, Link, Application };

std::string layer_to_string(FeatureLayer layer);
FeatureLayer layer_from_string(const std::string& text);

struct FeatureDef {
  std::string name;
  FeatureLayer layer;
  std::string unit;
};

// Ordered schema of the 40 raw features. The ordering is the authoritative
// column order for all CSV I/O.
class FeatureManifest {
public:
  static constexpr std::size_t kFeatureCount = 40;

  explicit FeatureManifest(std::vector<FeatureDef> features);

  // The manifest shipped with the tool (12 physical, 16 link, 12 application
  // features mirroring the metrics an 802.11 station exposes per layer).
  static const FeatureManifest& builtin();

  static FeatureManifest load(const std::string& path);
  void save(const std::string& path) const;
  static FeatureManifest from_json_text(const std::string& text);
  std::string to_json_text() const;

  std::size_t size() const { return features_.size(); }
  const FeatureDef& feature(std::size_t i) const { return features_[i]; }
  const std::vector<FeatureDef>& features() const { return features_; }

  // Index of a feature by exact name; throws InputError when absent.
  std::size_t index_of(const std::string& name) const;
  std::optional<std::size_t> find(const std::string& name) const;
  std::vector<std::size_t> layer_indices(FeatureLayer layer) const;

private:
  std::vector<FeatureDef> features_;
};

enum class JammerKind { Benign, Constant, Reactive, Random };

std::string kind_to_string(JammerKind kind);
JammerKind kind_from_string(const std::string& text);

// Class label: benign carries no variant; jammer kinds carry exactly one
// variant of the form <waveform>_(<gain>db | dynamic_gain | los | nlos) with
// waveform in {gaussian, cos, sine, triangle, pulse, saw_tooth, square} and
// integer gain in [10, 30], plus the literal "gaussian_additional_devices".
struct ClassLabel {
  JammerKind kind = JammerKind::Benign;
  std::string variant;

  bool is_attack() const { return kind != JammerKind::Benign; }
  int binary() const { return is_attack() ? 1 : 0; }

  static ClassLabel benign() { return ClassLabel{}; }
  static ClassLabel attack(JammerKind kind, const std::string& variant);

  bool operator==(const ClassLabel& other) const = default;
};

// Validates a variant identifier against the taxonomy grammar; throws
// InputError with the offending token when invalid.
void validate_variant(const std::string& variant);
bool is_valid_variant(const std::string& variant);

// One 0.5 s observation tick.
struct LabeledSample {
  double timestamp = 0.0;
  std::vector<double> values;  // manifest order, length 40
  ClassLabel label;
};

}  // namespace jamshield
