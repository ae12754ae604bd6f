#include "jamshield/common.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <mutex>

namespace jamshield {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master;
  std::uint64_t out = 0;
  for (std::uint64_t i = 0; i <= index; ++i) out = splitmix64(state);
  return out;
}

double Rng::uniform() {
  // 53 random bits -> double in [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw ContractError("uniform_index: n must be positive");
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double Rng::exponential(double rate) {
  if (rate <= 0.0) throw ContractError("exponential: rate must be positive");
  double u = 0.0;
  do {
    u = uniform();
  } while (u <= 0.0);
  return -std::log(u) / rate;
}

void Rng::shuffle(std::vector<std::size_t>& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(i);
    std::swap(items[i - 1], items[j]);
  }
}

Rng Rng::spawn(std::uint64_t index) const {
  // Read-only: derive from a copy of the engine's next output.
  std::mt19937_64 copy = engine_;
  return Rng(derive_seed(copy(), index));
}

std::uint64_t fnv1a(const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& text) { return fnv1a(text.data(), text.size()); }

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string format_g9(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return std::string(buf);
}

double parse_double(const std::string& text) {
  if (text.empty()) throw InputError("empty numeric field");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size())
    throw InputError("malformed numeric field: '" + text + "'");
  if (errno == ERANGE) throw InputError("numeric field out of range: '" + text + "'");
  if (!std::isfinite(v)) throw InputError("non-finite numeric field: '" + text + "'");
  return v;
}

LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("JAMSHIELD_LOG");
    if (env == nullptr) return LogLevel::Warn;
    const std::string v(env);
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    if (v == "warn") return LogLevel::Warn;
    if (v == "error") return LogLevel::Error;
    if (v == "off") return LogLevel::Off;
    return LogLevel::Warn;
  }();
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) < static_cast<int>(log_threshold())) return;
  static std::mutex mu;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[jamshield:" << names[static_cast<int>(level)] << "] " << message << "\n";
}

}  // namespace jamshield
