#pragma once

// Time-to-solution statistics and performance-portability arithmetic.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "portrng/engine.hpp"
#include "portrng/error.hpp"

namespace portrng {

enum class ApiMode { buffer, usm, hostdirect };

constexpr std::string_view to_string(ApiMode mode) noexcept {
  switch (mode) {
    case ApiMode::buffer: return "buffer";
    case ApiMode::usm: return "usm";
    case ApiMode::hostdirect: return "hostdirect";
  }
  return "?";
}

/// "native" is accepted as an alias of hostdirect, the baseline role.
inline ApiMode parse_api_mode(std::string_view text) {
  if (text == "buffer") return ApiMode::buffer;
  if (text == "usm") return ApiMode::usm;
  if (text == "hostdirect" || text == "native") return ApiMode::hostdirect;
  throw Error(ErrorCode::config_error, "unknown api mode '" + std::string(text) + "'");
}

using TimingSample = std::chrono::nanoseconds;

/// One benchmark measurement series: all iterations of one batch size.
struct RunRecord {
  std::string platform;
  ApiMode api = ApiMode::buffer;
  std::string backend;
  EngineKind engine = EngineKind::philox4x32x10;
  std::string distribution;
  std::uint64_t batch = 1;
  std::vector<TimingSample> samples;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct TtsStats {
  double mean = 0.0;
  double stddev = 0.0;  // n-1 denominator; 0 for a single sample
  double min = 0.0;
  double median = 0.0;
};

inline TtsStats tts_stats(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::empty_samples, "no timing samples");
  const auto n = static_cast<double>(samples.size());
  TtsStats s;
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

inline TtsStats tts_stats(std::span<const TimingSample> samples) {
  std::vector<double> ns;
  ns.reserve(samples.size());
  for (auto d : samples) ns.push_back(static_cast<double>(d.count()));
  return tts_stats(std::span<const double>(ns));
}

/// TTS_portable / TTS_native.
inline double vavs(double tts_portable, double tts_native) {
  if (!(tts_portable > 0.0) || !(tts_native > 0.0)) {
    throw Error(ErrorCode::non_positive_time, "time-to-solution must be positive");
  }
  return tts_portable / tts_native;
}

/// Efficiency fed into the portability mean: the reciprocal of VAVS.
inline double application_efficiency(double tts_portable, double tts_native) {
  return 1.0 / vavs(tts_portable, tts_native);
}

/// Platform label -> efficiency; std::nullopt marks an unsupported platform.
using EfficiencyTable = std::map<std::string, std::optional<double>, std::less<>>;

/// Harmonic mean of efficiencies over `platforms`; 0 if any of them is
/// unsupported or missing from the table.
inline double perf_portability(const EfficiencyTable& effs,
                               std::span<const std::string> platforms) {
  if (platforms.empty()) throw Error(ErrorCode::empty_platform_set, "platform set is empty");
  double inverse_sum = 0.0;
  double only = 0.0;
  for (const auto& name : platforms) {
    const auto it = effs.find(name);
    if (it == effs.end() || !it->second) return 0.0;
    const double e = *it->second;
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw Error(ErrorCode::invalid_parameter, "efficiency for '" + name + "' must be positive");
    }
    inverse_sum += 1.0 / e;
    only = e;
  }
  if (platforms.size() == 1) return only;
  return static_cast<double>(platforms.size()) / inverse_sum;
}

/// Convenience overload evaluating over every platform in the table.
inline double perf_portability(const EfficiencyTable& effs) {
  std::vector<std::string> all;
  for (const auto& [name, e] : effs) all.push_back(name);
  return perf_portability(effs, all);
}

}  // namespace portrng
