// Behavioral emulator of an 802.11 testbed under benign traffic and
// constant/random/reactive jamming. Produces labeled cross-layer feature
// streams for training data and drift scenarios.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jamshield/common.hpp"
#include "jamshield/schema.hpp"

namespace jamshield {

enum class Waveform { Awgn, Cos, Sine, Triangle, Pulse, Sawtooth, Square };

std::string waveform_to_string(Waveform wf);
Waveform waveform_from_string(const std::string& text);

struct GainPoint {
  double start_s = 0.0;
  double gain_dbi = 20.0;
};

struct ScenarioConfig {
  double duration_s = 60.0;
  double tick_s = 0.5;
  JammerKind jammer_kind = JammerKind::Benign;  // "none" in the JSON form
  Waveform waveform = Waveform::Awgn;
  std::vector<GainPoint> gain_schedule = {{0.0, 20.0}};  // single entry = fixed gain
  bool nlos = false;
  double reactive_threshold_dbm = -65.0;
  std::uint64_t seed = 0;

  double gain_at(double t_s) const;
  bool dynamic_gain() const { return gain_schedule.size() > 1; }

  void validate() const;
  static ScenarioConfig from_json_text(const std::string& text);
  static ScenarioConfig load(const std::string& path);
  std::string to_json_text() const;

  // Canonical variant identifier for attack labels produced by this scenario
  // (waveform prefix plus gain/geometry tag, e.g. "gaussian_20db", "cos_nlos").
  std::string variant_tag() const;
};

struct ChannelState {
  double ambient_noise_dbm = -95.0;
  double legitimate_signal_dbm = -55.0;
  std::optional<double> jammer_rx_dbm;
  double channel_energy_dbm = -95.0;
  double sinr_db = 0.0;
};

struct JammerState {
  bool active = false;
  JammerKind kind = JammerKind::Benign;
  double next_toggle_s = 0.0;  // random jammer only
};

// Coefficients of the generative feature map. Every invented constant lives
// here so the whole map can be re-fit against real captures in one place.
struct GenParams {
  double ambient_noise_dbm = -95.0;
  double legit_signal_dbm = -55.0;
  double legit_fading_std_db = 1.5;
  double distance_m = 6.0;
  double ref_loss_db = 40.0;      // path loss at 1 m
  double exponent_los = 2.0;
  double exponent_nlos = 3.0;
  double nlos_penalty_db = 10.0;
  double per_midpoint_db = 12.0;  // SINR where PER = 0.5
  double per_slope_db = 2.0;
  double offered_load_mbps = 1.0;  // each direction
  double packet_bytes = 1000.0;
  int retry_limit = 7;
  double mean_on_s = 2.0;   // random jammer holding times
  double mean_off_s = 5.0;
  double pulse_duty = 0.25;
};

// Fixed effective-interference offset of each waveform, in dB.
double waveform_offset_db(Waveform wf, const GenParams& params);

// Log-distance path loss for the scenario geometry, in dB.
double path_loss_db(bool nlos, const GenParams& params);

// Expected packet-error rate at a given SINR (logistic curve).
double per_curve(double sinr_db, const GenParams& params);

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

// One jammer decision step: constant is always on while the scenario runs;
// random follows exponential on/off holding times drawn from `rng`; reactive
// is active iff the previous tick's channel energy exceeded the threshold.
JammerState jammer_decision(const JammerState& state, const ChannelState& channel,
                            const ScenarioConfig& config, const GenParams& params,
                            double now_s, Rng& rng);

// Channel update for one tick given the jammer activity and scheduled gain.
// `legit_fading_db` is the tick's fluctuation of the legitimate signal.
ChannelState step_channel(const JammerState& jammer, const ScenarioConfig& config,
                          const GenParams& params, double gain_dbi,
                          double legit_fading_db);

// Maps a channel state to the 40 builtin-manifest features with additive
// measurement noise drawn from `rng`. The jammer flag selects waveform
// specific spectral features.
std::vector<double> features_from_state(const ChannelState& channel,
                                        const JammerState& jammer,
                                        const ScenarioConfig& config,
                                        const GenParams& params, Rng& rng);

// Runs a full scenario: duration/tick samples, each labeled by the ground
// truth jammer activity at that tick. Deterministic under config.seed.
// `timestamp_offset_s` shifts the emitted timestamps (for concatenating
// scenarios into one monotone stream).
std::vector<LabeledSample> simulate(const ScenarioConfig& config,
                                    const FeatureManifest& manifest,
                                    const GenParams& params = GenParams{},
                                    double timestamp_offset_s = 0.0);

}  // namespace jamshield
