// Shared utilities: error types, deterministic RNG, hashing, number formatting,
// and a small stderr logger gated by the JAMSHIELD_LOG environment variable.
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace jamshield {

// Thrown when user-supplied input (CSV rows, JSON configs, CLI values) fails
// validation. The CLI maps this to its own exit code so scripts can tell bad
// input apart from internal failures.
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a file or stream cannot be opened, read, or written.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an API precondition is violated by calling code.
class ContractError : public std::logic_error {
public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// splitmix64 step; used to derive independent child seeds from a master seed
// so that adding a consumer never perturbs the streams of existing ones.
std::uint64_t splitmix64(std::uint64_t& state);

// Derives the n-th child seed of `master` (n = 0, 1, ...).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Deterministic RNG wrapper. All stochastic code in the project draws through
// this class; the gaussian/exponential transforms are implemented here rather
// than with std::*_distribution so that sequences are stable across standard
// library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). Requires n > 0.
  std::size_t uniform_index(std::size_t n);
  // Standard normal via Box-Muller (caches the second variate).
  double gaussian();
  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }
  // Exponential with the given rate (inverse transform).
  double exponential(double rate);

  // Fisher-Yates shuffle of an index vector.
  void shuffle(std::vector<std::size_t>& items);

  // Child RNG with an independent stream.
  Rng spawn(std::uint64_t index) const;

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a 64-bit hash; used for content digests in logs and model provenance.
std::uint64_t fnv1a(const void* data, std::size_t len);
std::uint64_t fnv1a(const std::string& text);
std::string hash_hex(std::uint64_t h);

// Formats a double with 9 significant digits, the precision used by all CSV
// output. Parsing the result and re-formatting it is stable.
std::string format_g9(double value);

// Parses a double, rejecting trailing junk, NaN and infinities.
double parse_double(const std::string& text);

// Log levels for the stderr logger. JAMSHIELD_LOG selects the minimum level:
// "debug", "info", "warn", "error", or "off". Default is "warn".
enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

LogLevel log_threshold();
void log_message(LogLevel level, const std::string& message);

inline void log_debug(const std::string& m) { log_message(LogLevel::Debug, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::Info, m); }
inline void log_warn(const std::string& m) { log_message(LogLevel::Warn, m); }
inline void log_error(const std::string& m) { log_message(LogLevel::Error, m); }

}  // namespace jamshield
