#pragma once

// RNG burner benchmark: repeated full generation cycles (construct engine,
// allocate, generate, transform, copy back) over a sweep of batch sizes,
// persisted as CSV, plus the VAVS / portability comparison of two runs.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "portrng/device_rng.hpp"
#include "portrng/distributions.hpp"
#include "portrng/engine.hpp"
#include "portrng/error.hpp"
#include "portrng/execution.hpp"
#include "portrng/metrics.hpp"

namespace portrng {

/// Decades 1 .. 10^7.
inline std::vector<std::uint64_t> default_batches() {
  std::vector<std::uint64_t> b;
  for (std::uint64_t v = 1; v <= 10'000'000; v *= 10) b.push_back(v);
  return b;
}

struct BurnConfig {
  EngineKind engine = EngineKind::philox4x32x10;
  DistributionSpec distribution = DistributionSpec::uniform(0.0, 1.0);
  ApiMode api = ApiMode::buffer;
  Backend backend = Serial{};
  std::vector<std::uint64_t> batches = default_batches();
  std::uint64_t iterations = 100;
  Seed seed{};
  std::string platform = "host";
  std::size_t arena_bytes = default_arena_bytes;

  void validate() const {
    distribution.validate();
    if (batches.empty()) throw Error(ErrorCode::config_error, "no batch sizes given");
    for (auto b : batches) {
      if (b < 1) throw Error(ErrorCode::config_error, "batch sizes must be >= 1");
    }
    if (iterations < 1) throw Error(ErrorCode::config_error, "iterations must be >= 1");
    if (platform.empty() || platform.find_first_of(",\n\r") != std::string::npos) {
      throw Error(ErrorCode::config_error, "platform label must be non-empty without commas");
    }
    if (const auto* p = std::get_if<Parallel>(&backend); p && p->workers < 1) {
      throw Error(ErrorCode::config_error, "parallel backend needs at least one worker");
    }
  }
};

/// Arena cap from RNGBURN_ARENA_BYTES, or `fallback` when unset.
inline std::size_t arena_bytes_from_env(std::size_t fallback = default_arena_bytes) {
  const char* raw = std::getenv("RNGBURN_ARENA_BYTES");
  if (raw == nullptr || *raw == '\0') return fallback;
  const std::string_view text(raw);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::config_error, "RNGBURN_ARENA_BYTES is not a byte count: " +
                                             std::string(text));
  }
  return value;
}

/// One complete generation cycle for `batch` samples; returns the host copy.
inline std::vector<float> burn_cycle(const BurnConfig& config, std::uint64_t batch) {
  Engine engine(config.engine, config.seed);
  const auto n = static_cast<std::size_t>(batch);
  if (config.api == ApiMode::hostdirect) {
    DeviceArena arena(config.arena_bytes);
    arena.reserve(n * sizeof(float));
    std::vector<float> device(n);
    generate<float>(engine.state(), device, config.distribution);
    return std::vector<float>(device.begin(), device.end());
  }
  TaskGraph graph(config.arena_bytes);
  const BufferHandle buf = graph.create_buffer<float>(n);
  submit_generation<float>(graph, config.api, engine.state(), buf, config.distribution);
  graph.run(config.backend);
  return graph.copy_to_host<float>(buf);
}

/// Times `iterations` full cycles per batch size. Each sample covers engine
/// construction through copy-back.
inline std::vector<RunRecord> run_burner(const BurnConfig& config) {
  config.validate();
  std::vector<RunRecord> records;
  for (auto batch : config.batches) {
    RunRecord rec{config.platform,  config.api, backend_label(config.backend), config.engine,
                  config.distribution.label(), batch, {}};
    rec.samples.reserve(config.iterations);
    for (std::uint64_t it = 0; it < config.iterations; ++it) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto host = burn_cycle(config, batch);
      const auto t1 = std::chrono::steady_clock::now();
      if (host.size() != batch) {
        throw Error(ErrorCode::kernel_panic, "host copy has the wrong length");
      }
      rec.samples.push_back(std::max(TimingSample{1}, TimingSample{t1 - t0}));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// --------------------------------------------------------------------------
// CSV

inline constexpr std::string_view csv_header = "platform,api,backend,engine,dist,batch,iter,tts_ns";

inline void write_csv(std::ostream& out, std::span<const RunRecord> records) {
  out << csv_header << '\n';
  for (const auto& r : records) {
    for (const auto* label : {&r.platform, &r.backend, &r.distribution}) {
      if (label->empty() || label->find_first_of(",\n\r") != std::string::npos) {
        throw Error(ErrorCode::invalid_parameter, "CSV labels must be non-empty without commas");
      }
    }
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      out << r.platform << ',' << to_string(r.api) << ',' << r.backend << ','
          << to_string(r.engine) << ',' << r.distribution << ',' << r.batch << ',' << i << ','
          << r.samples[i].count() << '\n';
    }
  }
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

template <class Int>
Int parse_int(std::string_view text, ErrorCode code, std::string_view what) {
  Int value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(code, std::string(what) + " is not an integer: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace detail

/// Parses rows written by write_csv, regrouping consecutive iterations into
/// records. Rows for one record must carry iter 0, 1, 2, ... in order.
inline std::vector<RunRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != csv_header) {
    throw Error(ErrorCode::schema_mismatch,
                "expected header '" + std::string(csv_header) + "', got '" + line + "'");
  }
  std::vector<RunRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_commas(line);
    if (f.size() != 8) {
      throw Error(ErrorCode::schema_mismatch,
                  "line " + std::to_string(lineno) + ": expected 8 fields");
    }
    ApiMode api;
    EngineKind engine;
    try {
      api = parse_api_mode(f[1]);
      engine = parse_engine_kind(f[3]);
    } catch (const Error& e) {
      throw Error(ErrorCode::schema_mismatch, "line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto batch = detail::parse_int<std::uint64_t>(f[5], ErrorCode::schema_mismatch, "batch");
    const auto iter = detail::parse_int<std::uint64_t>(f[6], ErrorCode::schema_mismatch, "iter");
    const auto tts = detail::parse_int<std::int64_t>(f[7], ErrorCode::schema_mismatch, "tts_ns");
    if (tts < 0) throw Error(ErrorCode::schema_mismatch, "negative tts_ns");
    const bool continues = !records.empty() && iter != 0 && records.back().platform == f[0] &&
                           records.back().api == api && records.back().backend == f[2] &&
                           records.back().engine == engine &&
                           records.back().distribution == f[4] && records.back().batch == batch;
    if (continues) {
      if (iter != records.back().samples.size()) {
        throw Error(ErrorCode::schema_mismatch,
                    "line " + std::to_string(lineno) + ": iterations out of order");
      }
    } else {
      if (iter != 0) {
        throw Error(ErrorCode::schema_mismatch,
                    "line " + std::to_string(lineno) + ": series must start at iter 0");
      }
      records.push_back(RunRecord{std::string(f[0]), api, std::string(f[2]), engine,
                                  std::string(f[4]), batch, {}});
    }
    records.back().samples.emplace_back(tts);
  }
  return records;
}

inline void write_csv_file(const std::string& path, std::span<const RunRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path + " for writing");
  write_csv(out, records);
  if (!out) throw Error(ErrorCode::io_error, "write to " + path + " failed");
}

inline std::vector<RunRecord> read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  return read_csv(in);
}

// --------------------------------------------------------------------------
// Comparison

struct ComparisonPair {
  std::string platform;
  EngineKind engine = EngineKind::philox4x32x10;
  std::string distribution;
  std::uint64_t batch = 0;
  double tts_a_mean_ns = 0.0;
  double tts_b_mean_ns = 0.0;
  double vavs = 0.0;
  double efficiency = 0.0;
};

struct Comparison {
  std::vector<ComparisonPair> pairs;
  std::vector<std::string> platforms;  // the set P is evaluated over
  EfficiencyTable efficiencies;        // per platform: mean of per-batch efficiency
  double portability = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["pairs"] = nlohmann::json::array();
    for (const auto& p : pairs) {
      j["pairs"].push_back({{"platform", p.platform},
                            {"engine", std::string(to_string(p.engine))},
                            {"dist", p.distribution},
                            {"batch", p.batch},
                            {"tts_a_mean_ns", p.tts_a_mean_ns},
                            {"tts_b_mean_ns", p.tts_b_mean_ns},
                            {"vavs", p.vavs},
                            {"efficiency", p.efficiency}});
    }
    nlohmann::json effs = nlohmann::json::object();
    for (const auto& [name, e] : efficiencies) {
      effs[name] = e ? nlohmann::json(*e) : nlohmann::json(nullptr);
    }
    j["portability"] = {{"platforms", platforms}, {"efficiencies", effs}, {"P", portability}};
    return j;
  }
};

/// Pairs runs `a` (portable) and `b` (native baseline) by (platform, engine,
/// distribution, batch), computes VAVS of the mean TTS per pair, and P over
/// `group` (all paired platforms when empty). A platform in `group` with no
/// pairs counts as unsupported.
inline Comparison compare(std::span<const RunRecord> a, std::span<const RunRecord> b,
                          std::vector<std::string> group = {}) {
  using Key = std::tuple<std::string, EngineKind, std::string, std::uint64_t>;
  auto index = [](std::span<const RunRecord> records, const char* which) {
    std::map<Key, const RunRecord*> out;
    for (const auto& r : records) {
      if (r.samples.empty()) {
        throw Error(ErrorCode::schema_mismatch, std::string(which) + ": record without samples");
      }
      Key key{r.platform, r.engine, r.distribution, r.batch};
      if (!out.emplace(key, &r).second) {
        throw Error(ErrorCode::schema_mismatch,
                    std::string(which) + ": several series for platform '" + r.platform +
                        "' batch " + std::to_string(r.batch) + " (mixed api/backend?)");
      }
    }
    return out;
  };
  const auto ia = index(a, "run A");
  const auto ib = index(b, "run B");

  Comparison result;
  std::map<std::string, std::vector<double>> per_platform;
  for (const auto& [key, ra] : ia) {
    const auto it = ib.find(key);
    if (it == ib.end()) continue;
    ComparisonPair p;
    std::tie(p.platform, p.engine, p.distribution, p.batch) = key;
    p.tts_a_mean_ns = tts_stats(std::span<const TimingSample>(ra->samples)).mean;
    p.tts_b_mean_ns = tts_stats(std::span<const TimingSample>(it->second->samples)).mean;
    p.vavs = vavs(p.tts_a_mean_ns, p.tts_b_mean_ns);
    p.efficiency = 1.0 / p.vavs;
    per_platform[p.platform].push_back(p.efficiency);
    result.pairs.push_back(std::move(p));
  }
  if (result.pairs.empty()) {
    throw Error(ErrorCode::no_overlapping_keys, "no (platform, engine, dist, batch) in common");
  }
  for (const auto& [name, effs] : per_platform) {
    double sum = 0.0;
    for (double e : effs) sum += e;
    result.efficiencies[name] = sum / static_cast<double>(effs.size());
  }
  if (group.empty()) {
    for (const auto& [name, e] : result.efficiencies) group.push_back(name);
  }
  for (const auto& name : group) {
    if (!result.efficiencies.contains(name)) result.efficiencies[name] = std::nullopt;
  }
  result.platforms = std::move(group);
  result.portability = perf_portability(result.efficiencies, result.platforms);
  return result;
}

}  // namespace portrng
