#include "jamshield/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "jamshield/common.hpp"

namespace jamshield {

using nlohmann::json;

std::string waveform_to_string(Waveform wf) {
  switch (wf) {
    case Waveform::Awgn: return "awgn";
    case Waveform::Cos: return "cos";
    case Waveform::Sine: return "sine";
    case Waveform::Triangle: return "triangle";
    case Waveform::Pulse: return "pulse";
    case Waveform::Sawtooth: return "sawtooth";
    case Waveform::Square: return "square";
  }
  throw ContractError("waveform_to_string: bad enum");
}

Waveform waveform_from_string(const std::string& text) {
  if (text == "awgn") return Waveform::Awgn;
  if (text == "cos") return Waveform::Cos;
  if (text == "sine") return Waveform::Sine;
  if (text == "triangle") return Waveform::Triangle;
  if (text == "pulse") return Waveform::Pulse;
  if (text == "sawtooth") return Waveform::Sawtooth;
  if (text == "square") return Waveform::Square;
  throw InputError("unknown waveform: '" + text + "'");
}

double ScenarioConfig::gain_at(double t_s) const {
  double gain = gain_schedule.front().gain_dbi;
  for (const GainPoint& p : gain_schedule) {
    if (p.start_s <= t_s) gain = p.gain_dbi;
    else break;
  }
  return gain;
}

void ScenarioConfig::validate() const {
  if (!(duration_s > 0.0)) throw InputError("scenario: duration must be positive");
  if (!(tick_s > 0.0)) throw InputError("scenario: tick must be positive");
  if (gain_schedule.empty()) throw InputError("scenario: gain schedule is empty");
  double prev_start = -std::numeric_limits<double>::infinity();
  for (const GainPoint& p : gain_schedule) {
    if (p.gain_dbi < 10.0 || p.gain_dbi > 30.0)
      throw InputError("scenario: gain " + format_g9(p.gain_dbi) +
                       " outside [10, 30] dBi");
    if (p.start_s < prev_start)
      throw InputError("scenario: gain schedule start times must be sorted");
    prev_start = p.start_s;
  }
  if (gain_schedule.front().start_s != 0.0)
    throw InputError("scenario: gain schedule must start at 0 s");
}

namespace {

std::string kind_to_json_string(JammerKind kind) {
  return kind == JammerKind::Benign ? "none" : kind_to_string(kind);
}

JammerKind kind_from_json_string(const std::string& text) {
  if (text == "none") return JammerKind::Benign;
  const JammerKind kind = kind_from_string(text);
  if (kind == JammerKind::Benign)
    throw InputError("scenario: jammer_kind must be none/constant/random/reactive");
  return kind;
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw InputError("scenario: top level must be an object");
  static const std::vector<std::string> known = {
      "duration", "tick", "jammer_kind", "waveform", "gain_dbi",
      "geometry", "reactive_threshold_dbm", "seed"};
  for (const auto& [key, value] : root.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InputError("scenario: unknown field '" + key + "'");
  }
  ScenarioConfig c;
  if (!root.contains("duration")) throw InputError("scenario: missing 'duration'");
  c.duration_s = root.at("duration").get<double>();
  c.tick_s = root.value("tick", 0.5);
  c.jammer_kind = kind_from_json_string(root.value("jammer_kind", std::string("none")));
  c.waveform = waveform_from_string(root.value("waveform", std::string("awgn")));
  if (root.contains("gain_dbi")) {
    const json& g = root.at("gain_dbi");
    if (g.is_number()) {
      c.gain_schedule = {{0.0, g.get<double>()}};
    } else if (g.is_array()) {
      c.gain_schedule.clear();
      for (const json& p : g) {
        if (p.is_array() && p.size() == 2) {
          c.gain_schedule.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        } else if (p.is_object()) {
          c.gain_schedule.push_back(
              {p.at("start_s").get<double>(), p.at("gain_dbi").get<double>()});
        } else {
          throw InputError("scenario: gain schedule entries must be [start_s, gain]");
        }
      }
    } else {
      throw InputError("scenario: gain_dbi must be a number or a schedule array");
    }
  }
  const std::string geometry = root.value("geometry", std::string("los"));
  if (geometry == "los") c.nlos = false;
  else if (geometry == "nlos") c.nlos = true;
  else throw InputError("scenario: geometry must be 'los' or 'nlos'");
  c.reactive_threshold_dbm = root.value("reactive_threshold_dbm", -65.0);
  c.seed = root.value("seed", 0ull);
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json_text(buf.str());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::string ScenarioConfig::to_json_text() const {
  json root;
  root["duration"] = duration_s;
  root["tick"] = tick_s;
  root["jammer_kind"] = kind_to_json_string(jammer_kind);
  root["waveform"] = waveform_to_string(waveform);
  if (gain_schedule.size() == 1) {
    root["gain_dbi"] = gain_schedule.front().gain_dbi;
  } else {
    json sched = json::array();
    for (const GainPoint& p : gain_schedule)
      sched.push_back(json::array({p.start_s, p.gain_dbi}));
    root["gain_dbi"] = sched;
  }
  root["geometry"] = nlos ? "nlos" : "los";
  root["reactive_threshold_dbm"] = reactive_threshold_dbm;
  root["seed"] = seed;
  return root.dump(2) + "\n";
}

std::string ScenarioConfig::variant_tag() const {
  static const char* prefix[] = {"gaussian", "cos",       "sine", "triangle",
                                 "pulse",    "saw_tooth", "square"};
  const std::string wf = prefix[static_cast<int>(waveform)];
  if (dynamic_gain()) return wf + "_dynamic_gain";
  if (jammer_kind == JammerKind::Reactive) return wf + (nlos ? "_nlos" : "_los");
  if (nlos) return wf + "_nlos";
  const long gain = std::lround(gain_schedule.front().gain_dbi);
  return wf + "_" + std::to_string(gain) + "db";
}

double waveform_offset_db(Waveform wf, const GenParams& params) {
  switch (wf) {
    case Waveform::Awgn: return 0.0;
    case Waveform::Cos: return -3.0;
    case Waveform::Sine: return -3.0;
    case Waveform::Triangle: return -4.8;
    case Waveform::Sawtooth: return -4.8;
    case Waveform::Square: return -1.0;
    case Waveform::Pulse: return 10.0 * std::log10(params.pulse_duty);
  }
  throw ContractError("waveform_offset_db: bad enum");
}

double path_loss_db(bool nlos, const GenParams& params) {
  const double exponent = nlos ? params.exponent_nlos : params.exponent_los;
  double loss = params.ref_loss_db + 10.0 * exponent * std::log10(params.distance_m);
  if (nlos) loss += params.nlos_penalty_db;
  return loss;
}

double per_curve(double sinr_db, const GenParams& params) {
  return 1.0 / (1.0 + std::exp((sinr_db - params.per_midpoint_db) / params.per_slope_db));
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

JammerState jammer_decision(const JammerState& state, const ChannelState& channel,
                            const ScenarioConfig& config, const GenParams& params,
                            double now_s, Rng& rng) {
  JammerState next = state;
  next.kind = config.jammer_kind;
  switch (config.jammer_kind) {
    case JammerKind::Benign:
      next.active = false;
      break;
    case JammerKind::Constant:
      next.active = true;
      break;
    case JammerKind::Random:
      while (now_s >= next.next_toggle_s) {
        next.active = !next.active;
        const double mean = next.active ? params.mean_on_s : params.mean_off_s;
        next.next_toggle_s += rng.exponential(1.0 / mean);
      }
      break;
    case JammerKind::Reactive:
      next.active = channel.channel_energy_dbm > config.reactive_threshold_dbm;
      break;
  }
  return next;
}

ChannelState step_channel(const JammerState& jammer, const ScenarioConfig& config,
                          const GenParams& params, double gain_dbi,
                          double legit_fading_db) {
  ChannelState ch;
  ch.ambient_noise_dbm = params.ambient_noise_dbm;
  ch.legitimate_signal_dbm = params.legit_signal_dbm + legit_fading_db;
  const double p_ambient = dbm_to_mw(ch.ambient_noise_dbm);
  const double p_legit = dbm_to_mw(ch.legitimate_signal_dbm);
  double p_jam = 0.0;
  if (jammer.active) {
    const double rx = gain_dbi + waveform_offset_db(config.waveform, params) -
                      path_loss_db(config.nlos, params);
    ch.jammer_rx_dbm = rx;
    p_jam = dbm_to_mw(rx);
  }
  ch.sinr_db = ch.legitimate_signal_dbm - mw_to_dbm(p_ambient + p_jam);
  ch.channel_energy_dbm = mw_to_dbm(p_ambient + p_legit + p_jam);
  return ch;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::vector<double> features_from_state(const ChannelState& channel,
                                        const JammerState& jammer,
                                        const ScenarioConfig& config,
                                        const GenParams& params, Rng& rng) {
  const double s = channel.sinr_db;
  const double per = per_curve(s, params);
  const int attempts_max = params.retry_limit + 1;
  // Expected MAC attempts per frame under truncated-geometric retransmission.
  double expected_attempts = 0.0;
  double pk = 1.0;
  for (int i = 0; i < attempts_max; ++i) {
    expected_attempts += pk;
    pk *= per;
  }
  const double frame_fail = std::pow(per, attempts_max);  // exceeds retry limit
  const double delivery = 1.0 - frame_fail;
  const double retries = expected_attempts - 1.0;

  const double p_ambient = dbm_to_mw(channel.ambient_noise_dbm);
  const double p_jam =
      channel.jammer_rx_dbm ? dbm_to_mw(*channel.jammer_rx_dbm) : 0.0;
  const double noise_floor = mw_to_dbm(p_ambient + p_jam);
  const double jam_frac = p_jam / (p_ambient + p_jam);

  // Spectral signature of the interference: wideband noise raises flatness,
  // tones concentrate energy and lower it.
  double flat_shift = 0.0;
  if (jammer.active) {
    switch (config.waveform) {
      case Waveform::Awgn: flat_shift = 0.5; break;
      case Waveform::Cos:
      case Waveform::Sine:
      case Waveform::Triangle:
      case Waveform::Sawtooth: flat_shift = -0.15; break;
      case Waveform::Pulse:
      case Waveform::Square: flat_shift = 0.1; break;
    }
  }

  const double frames = params.offered_load_mbps * 1e6 / 8.0 / params.packet_bytes *
                        config.tick_s;  // per direction
  const double tx_rate = 6.0 + 48.0 * sigmoid((s - 15.0) / 4.0);
  const double rx_rate = 6.0 + 48.0 * sigmoid((s - 16.0) / 4.0);
  const double tx_frames = frames * expected_attempts;
  const double rx_frames = frames * delivery + 2.0;
  const double retry_count = frames * retries;
  const double rtt_mean = 2.0 + 1.2 * retries + 18.0 * per * per;

  std::vector<double> v;
  v.reserve(FeatureManifest::kFeatureCount);
  const auto noisy = [&rng](double value, double sd) {
    return value + rng.gaussian(0.0, sd);
  };
  // Physical layer, builtin manifest order.
  v.push_back(noisy(channel.legitimate_signal_dbm, 1.0));            // rssi_dbm
  v.push_back(noisy(s, 0.7));                                        // snr_db
  v.push_back(noisy(noise_floor, 0.8));                              // noise_floor_dbm
  v.push_back(clip(noisy(0.08 + 0.55 * per + 0.12 * (jammer.active ? 1.0 : 0.0), 0.02),
                   0.0, 1.0));                                       // channel_busy_fraction
  v.push_back(std::max(1.0, noisy(tx_rate, 1.2)));                   // tx_phy_rate_mbps
  v.push_back(std::max(1.0, noisy(rx_rate, 1.2)));                   // rx_phy_rate_mbps
  v.push_back(noisy(channel.channel_energy_dbm, 0.8));               // channel_energy_dbm
  v.push_back(noisy(noise_floor, 1.0));                              // interference_dbm
  v.push_back(clip(noisy(0.35 + flat_shift * jam_frac, 0.03), 0.01, 1.0));  // spectral_flatness
  v.push_back(clip(noisy(std::round((tx_rate - 6.0) / 6.0), 0.3), 0.0, 9.0));  // mcs_index
  v.push_back(clip(noisy(per, 0.015), 0.0, 1.0));                    // phy_error_rate
  v.push_back(clip(noisy(sigmoid((s - 10.0) / 5.0), 0.02), 0.0, 1.0));  // signal_quality
  // Link layer.
  v.push_back(std::max(0.0, noisy(tx_frames, 1.5)));                 // tx_frames
  v.push_back(std::max(0.0, noisy(rx_frames, 1.5)));                 // rx_frames
  v.push_back(std::max(0.0, noisy(tx_frames * params.packet_bytes, 800.0)));  // tx_bytes
  v.push_back(std::max(0.0, noisy(rx_frames * params.packet_bytes, 800.0)));  // rx_bytes
  v.push_back(std::max(0.0, noisy(retry_count, 1.2)));               // retry_count
  v.push_back(clip(noisy(retries / expected_attempts, 0.01), 0.0, 1.0));  // retry_rate
  v.push_back(std::max(0.0, noisy(frames * frame_fail, 0.8)));       // failed_frame_count
  v.push_back(std::max(0.0, noisy(frames * per * 0.7, 1.0)));        // fcs_error_count
  v.push_back(std::max(0.0, noisy(4.88 * per, 0.3)));                // beacon_loss_count
  v.push_back(std::max(0.0, noisy(frames * frame_fail * 0.6, 0.5))); // tx_drops
  v.push_back(std::max(0.0, noisy(0.3 + 2.5 * per, 0.3)));           // rx_drops
  v.push_back(std::max(0.0, noisy(frames * per, 1.2)));              // ack_timeout_count
  v.push_back(std::max(0.0, noisy(0.8 + 1.1 * retries, 0.08)));      // mac_latency_ms
  v.push_back(std::max(0.0, noisy(2.0 + 60.0 * per * per, 1.0)));    // queue_depth
  v.push_back(std::max(1.0, noisy(7.5 * expected_attempts, 0.5)));   // cw_backoff_mean
  v.push_back(std::max(0.0, noisy(1.0 + 7.0 * delivery, 0.4)));      // aggregation_frames
  // Application layer.
  v.push_back(std::max(0.0, noisy(params.offered_load_mbps * delivery, 0.01)));  // udp_throughput_up_mbps
  v.push_back(std::max(0.0, noisy(params.offered_load_mbps * delivery, 0.01)));  // udp_throughput_down_mbps
  v.push_back(std::max(0.1, noisy(rtt_mean, 0.15)));                 // probe_rtt_mean_ms
  v.push_back(std::max(0.1, noisy(rtt_mean * (1.8 + 0.6 * per), 0.4)));  // probe_rtt_p95_ms
  v.push_back(std::max(0.0, noisy(0.3 + 4.0 * per, 0.05)));          // jitter_ms
  v.push_back(clip(noisy(frame_fail, 0.004), 0.0, 1.0));             // loss_fraction_up
  v.push_back(clip(noisy(frame_fail, 0.004), 0.0, 1.0));             // loss_fraction_down
  v.push_back(std::max(0.0, noisy(params.offered_load_mbps, 0.01))); // offered_load_mbps
  v.push_back(clip(noisy(0.001 + 0.05 * per, 0.002), 0.0, 1.0));     // reorder_rate
  v.push_back(clip(noisy(delivery, 0.01), 0.0, 1.0));                // goodput_ratio
  v.push_back(clip(noisy(per, 0.01), 0.0, 1.0));                     // probe_loss_fraction
  v.push_back(std::max(0.0, noisy(3.0 * std::pow(per, 4.0), 0.2)));  // conn_stall_events
  return v;
}

std::vector<LabeledSample> simulate(const ScenarioConfig& config,
                                    const FeatureManifest& manifest,
                                    const GenParams& params,
                                    double timestamp_offset_s) {
  config.validate();
  // Map builtin generator order onto the caller's manifest order.
  const FeatureManifest& builtin = FeatureManifest::builtin();
  std::vector<std::size_t> position(builtin.size());
  for (std::size_t i = 0; i < builtin.size(); ++i) {
    const auto idx = manifest.find(builtin.feature(i).name);
    if (!idx) {
      throw InputError("simulate: manifest feature set must match the builtin "
                       "feature names; missing '" +
                       builtin.feature(i).name + "'");
    }
    position[i] = *idx;
  }

  const long n_ticks = std::lround(config.duration_s / config.tick_s);
  if (n_ticks < 1) throw InputError("scenario: duration shorter than one tick");

  Rng rng_noise(derive_seed(config.seed, 0));
  Rng rng_jammer(derive_seed(config.seed, 1));
  Rng rng_fading(derive_seed(config.seed, 2));

  JammerState jstate;
  jstate.kind = config.jammer_kind;
  if (config.jammer_kind == JammerKind::Random) {
    jstate.next_toggle_s = rng_jammer.exponential(1.0 / params.mean_off_s);
  }
  // Energy of "before the scenario": nothing observed yet, so the reactive
  // jammer starts inactive.
  ChannelState prev_channel;
  prev_channel.channel_energy_dbm = -std::numeric_limits<double>::infinity();

  const std::string variant = config.variant_tag();
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(n_ticks));
  for (long i = 0; i < n_ticks; ++i) {
    const double t = static_cast<double>(i) * config.tick_s;
    const double gain = config.gain_at(t);
    const double fading = rng_fading.gaussian(0.0, params.legit_fading_std_db);
    jstate = jammer_decision(jstate, prev_channel, config, params, t, rng_jammer);
    const ChannelState channel = step_channel(jstate, config, params, gain, fading);
    const std::vector<double> builtin_values =
        features_from_state(channel, jstate, config, params, rng_noise);

    LabeledSample sample;
    sample.timestamp = timestamp_offset_s + t;
    sample.values.resize(manifest.size());
    for (std::size_t f = 0; f < builtin.size(); ++f)
      sample.values[position[f]] = builtin_values[f];
    sample.label = jstate.active ? ClassLabel::attack(config.jammer_kind, variant)
                                 : ClassLabel::benign();
    out.push_back(std::move(sample));
    prev_channel = channel;
  }
  return out;
}

}  // namespace jamshield
