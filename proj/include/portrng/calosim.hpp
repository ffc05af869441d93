#pragma once

// Toy parameterized calorimeter simulation. Each hit consumes three unit
// uniforms (cell choice, energy bin, position within the bin); the uniforms
// for an event are generated in one batch on the task graph, padded up to a
// minimum allocation. Hit multiplicities, particle kinematics and
// parameterization choices come from a separate control stream so the hit
// stream's accounting stays exactly 3 words per hit.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "portrng/burner.hpp"
#include "portrng/device_rng.hpp"
#include "portrng/distributions.hpp"
#include "portrng/engine.hpp"
#include "portrng/error.hpp"
#include "portrng/execution.hpp"

namespace portrng::calo {

inline constexpr std::size_t default_min_batch = 200'000;
inline constexpr std::size_t default_cell_count = 190'000;
inline constexpr std::size_t default_region_count = 24;

// --------------------------------------------------------------------------
// Geometry

struct Cell {
  std::uint32_t id = 0;
  std::uint32_t region = 0;
  std::array<double, 3> position{};
};

class Geometry {
 public:
  Geometry() = default;

  /// Takes cells with dense ids [0, n) in any order; every region index
  /// below the largest one must own at least one cell.
  explicit Geometry(std::vector<Cell> cells) : cells_(std::move(cells)) {
    if (cells_.empty()) throw Error(ErrorCode::invalid_counts, "geometry has no cells");
    std::sort(cells_.begin(), cells_.end(), [](const Cell& a, const Cell& b) { return a.id < b.id; });
    std::uint32_t max_region = 0;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (cells_[i].id != i) {
        throw Error(ErrorCode::invalid_counts, "cell ids must be unique and dense from 0");
      }
      max_region = std::max(max_region, cells_[i].region);
    }
    by_region_.assign(std::size_t{max_region} + 1, {});
    for (const auto& c : cells_) by_region_[c.region].push_back(c.id);
    for (std::size_t r = 0; r < by_region_.size(); ++r) {
      if (by_region_[r].empty()) {
        throw Error(ErrorCode::invalid_counts, "region " + std::to_string(r) + " has no cells");
      }
    }
  }

  std::size_t size() const noexcept { return cells_.size(); }
  std::size_t region_count() const noexcept { return by_region_.size(); }
  const std::vector<Cell>& cells() const noexcept { return cells_; }
  const Cell& cell(std::uint32_t id) const { return cells_.at(id); }
  std::span<const std::uint32_t> cells_in(std::size_t region) const { return by_region_.at(region); }

 private:
  std::vector<Cell> cells_;
  std::vector<std::vector<std::uint32_t>> by_region_;
};

/// `n` cells dealt round-robin over `regions` azimuthal sectors; cell i sits
/// in region i mod regions at a deterministic position inside its sector.
inline Geometry synth_geometry(std::size_t n, std::size_t regions) {
  if (regions < 1 || n < regions) {
    throw Error(ErrorCode::invalid_counts, "need n >= regions >= 1");
  }
  std::vector<Cell> cells(n);
  const double sector = 2.0 * std::numbers::pi / static_cast<double>(regions);
  for (std::size_t i = 0; i < n; ++i) {
    const auto region = static_cast<std::uint32_t>(i % regions);
    const std::size_t slot = i / regions;
    const std::size_t per_region = (n - region + regions - 1) / regions;
    const double phi = -std::numbers::pi + sector * (region + (slot + 0.5) / per_region);
    const double radius = 1500.0 + 10.0 * static_cast<double>(slot % 50);
    const double z = -3000.0 + 6000.0 * static_cast<double>(slot) / static_cast<double>(per_region);
    cells[i] = Cell{static_cast<std::uint32_t>(i), region,
                    {radius * std::cos(phi), radius * std::sin(phi), z}};
  }
  return Geometry(std::move(cells));
}

/// Azimuthal sector of a direction, matching synth_geometry's layout.
inline std::size_t region_of(const std::array<double, 3>& direction, std::size_t regions) {
  const double phi = std::atan2(direction[1], direction[0]);
  const double frac = (phi + std::numbers::pi) / (2.0 * std::numbers::pi);
  return std::min(regions - 1, static_cast<std::size_t>(frac * static_cast<double>(regions)));
}

inline constexpr std::string_view geometry_header = "cell_id,region,x,y,z";

inline void write_geometry(std::ostream& out, const Geometry& g) {
  out << geometry_header << '\n';
  out.precision(17);
  for (const auto& c : g.cells()) {
    out << c.id << ',' << c.region << ',' << c.position[0] << ',' << c.position[1] << ','
        << c.position[2] << '\n';
  }
}

inline Geometry read_geometry(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != geometry_header) {
    throw Error(ErrorCode::schema_mismatch, "geometry header must be '" +
                                                std::string(geometry_header) + "'");
  }
  std::vector<Cell> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = portrng::detail::split_commas(line);
    if (f.size() != 5) throw Error(ErrorCode::schema_mismatch, "geometry row needs 5 fields");
    Cell c;
    c.id = portrng::detail::parse_int<std::uint32_t>(f[0], ErrorCode::schema_mismatch, "cell_id");
    c.region = portrng::detail::parse_int<std::uint32_t>(f[1], ErrorCode::schema_mismatch, "region");
    for (int k = 0; k < 3; ++k) c.position[k] = portrng::detail::parse_double(f[2 + k]);
    cells.push_back(c);
  }
  return Geometry(std::move(cells));
}

inline Geometry read_geometry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  return read_geometry(in);
}

// --------------------------------------------------------------------------
// Parameterizations

/// Hit multiplicity range and deposit spectrum for one particle kind and
/// energy slot. Bin `b` spans [bin_edges[b], bin_edges[b+1]).
struct Parameterization {
  std::uint32_t id = 0;
  std::string kind;
  std::vector<double> bin_edges;
  std::vector<double> weights;
  std::uint64_t hit_lo = 1;
  std::uint64_t hit_hi = 1;

  void validate() const {
    auto fail = [this](const std::string& why) {
      throw Error(ErrorCode::invalid_parameterization,
                  "parameterization " + std::to_string(id) + ": " + why);
    };
    if (kind.empty() || kind.find_first_of(",\n") != std::string::npos) fail("bad kind");
    if (hit_lo < 1 || hit_lo > hit_hi) fail("hit range must satisfy 1 <= lo <= hi");
    if (weights.empty() || bin_edges.size() != weights.size() + 1) fail("bins malformed");
    if (!(bin_edges.front() >= 0.0)) fail("bin edges must be non-negative");
    for (std::size_t i = 1; i < bin_edges.size(); ++i) {
      if (!(bin_edges[i] > bin_edges[i - 1]) || !std::isfinite(bin_edges[i])) {
        fail("bin edges must be strictly increasing");
      }
    }
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) fail("weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("weights must sum to 1");
  }

  /// Cumulative weights, last entry forced to exactly 1.
  std::vector<double> cdf() const {
    std::vector<double> c(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) c[i] = acc += weights[i];
    c.back() = 1.0;
    return c;
  }
};

class ParameterizationSet {
 public:
  ParameterizationSet() = default;

  explicit ParameterizationSet(std::vector<Parameterization> params) : params_(std::move(params)) {
    std::sort(params_.begin(), params_.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < params_.size(); ++i) {
      params_[i].validate();
      if (i > 0 && params_[i].id == params_[i - 1].id) {
        throw Error(ErrorCode::invalid_parameterization,
                    "duplicate parameterization id " + std::to_string(params_[i].id));
      }
      by_kind_[params_[i].kind].push_back(i);
      cdfs_.push_back(params_[i].cdf());
    }
  }

  std::size_t size() const noexcept { return params_.size(); }
  const std::vector<Parameterization>& all() const noexcept { return params_; }
  bool has_kind(std::string_view kind) const { return by_kind_.find(kind) != by_kind_.end(); }

  /// Index of the parameterization serving `kind` at `energy`: among that
  /// kind's entries (by id), slot floor(log2(max(E, 1))) mod count.
  std::size_t select(std::string_view kind, double energy) const {
    const auto it = by_kind_.find(kind);
    if (it == by_kind_.end()) {
      throw Error(ErrorCode::missing_parameterization,
                  "no parameterization for kind '" + std::string(kind) + "'");
    }
    const auto slot = static_cast<std::size_t>(std::floor(std::log2(std::max(energy, 1.0))));
    return it->second[slot % it->second.size()];
  }

  const Parameterization& at(std::size_t index) const { return params_.at(index); }
  const std::vector<double>& cdf(std::size_t index) const { return cdfs_.at(index); }

 private:
  std::vector<Parameterization> params_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_kind_;
  std::vector<std::vector<double>> cdfs_;
};

inline constexpr std::string_view param_header = "param_id,kind,hit_lo,hit_hi";
inline constexpr std::string_view bin_header = "param_id,bin_lo,bin_hi,weight";

/// Two sections: parameter rows under param_header, then bin rows under
/// bin_header. Bins of one parameterization must be listed in order and
/// contiguous (each bin_lo equals the previous bin_hi).
inline void write_parameterizations(std::ostream& out, const ParameterizationSet& set) {
  out.precision(17);
  out << param_header << '\n';
  for (const auto& p : set.all()) {
    out << p.id << ',' << p.kind << ',' << p.hit_lo << ',' << p.hit_hi << '\n';
  }
  out << bin_header << '\n';
  for (const auto& p : set.all()) {
    for (std::size_t b = 0; b < p.weights.size(); ++b) {
      out << p.id << ',' << p.bin_edges[b] << ',' << p.bin_edges[b + 1] << ',' << p.weights[b]
          << '\n';
    }
  }
}

inline ParameterizationSet read_parameterizations(std::istream& in) {
  using portrng::detail::parse_double;
  using portrng::detail::parse_int;
  std::string line;
  if (!std::getline(in, line) || line != param_header) {
    throw Error(ErrorCode::schema_mismatch, "expected header '" + std::string(param_header) + "'");
  }
  std::map<std::uint32_t, Parameterization> params;
  bool in_bins = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == bin_header) {
      in_bins = true;
      continue;
    }
    const auto f = portrng::detail::split_commas(line);
    if (f.size() != 4) throw Error(ErrorCode::schema_mismatch, "rows need 4 fields: " + line);
    const auto id = parse_int<std::uint32_t>(f[0], ErrorCode::schema_mismatch, "param_id");
    if (!in_bins) {
      Parameterization p;
      p.id = id;
      p.kind = std::string(f[1]);
      p.hit_lo = parse_int<std::uint64_t>(f[2], ErrorCode::schema_mismatch, "hit_lo");
      p.hit_hi = parse_int<std::uint64_t>(f[3], ErrorCode::schema_mismatch, "hit_hi");
      if (!params.emplace(id, std::move(p)).second) {
        throw Error(ErrorCode::invalid_parameterization, "duplicate id " + std::to_string(id));
      }
      continue;
    }
    auto it = params.find(id);
    if (it == params.end()) {
      throw Error(ErrorCode::invalid_parameterization, "bin for unknown id " + std::to_string(id));
    }
    auto& p = it->second;
    const double lo = parse_double(f[1]);
    const double hi = parse_double(f[2]);
    if (p.bin_edges.empty()) {
      p.bin_edges.push_back(lo);
    } else if (lo != p.bin_edges.back()) {
      throw Error(ErrorCode::invalid_parameterization,
                  "bins of parameterization " + std::to_string(id) + " are not contiguous");
    }
    p.bin_edges.push_back(hi);
    p.weights.push_back(parse_double(f[3]));
  }
  std::vector<Parameterization> list;
  for (auto& [id, p] : params) list.push_back(std::move(p));
  return ParameterizationSet(std::move(list));
}

inline ParameterizationSet read_parameterizations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  return read_parameterizations(in);
}

/// Knobs of the synthetic parameterization set.
struct SynthParamsOptions {
  std::uint64_t electron_hit_lo = 4000;
  std::uint64_t electron_hit_hi = 6500;
  /// Target ratio of mean t-tbar hits per event to mean single-electron hits.
  double ttbar_hit_ratio = 700.0;
  /// Mean number of secondaries per t-tbar event the hit ranges are tuned for.
  double ttbar_mean_multiplicity = 200.0;
  std::vector<std::string> secondary_kinds = {"photon", "pion", "kaon", "proton", "neutron"};
  std::size_t params_per_kind = 5;
};

/// One "electron" parameterization (id 0) plus params_per_kind entries for
/// each secondary kind. Secondary slot s scales the per-particle hit target
/// by 0.6 + 0.8*s/(params_per_kind-1), which averages to 1 over slots.
inline ParameterizationSet synth_parameterizations(const SynthParamsOptions& opt = {}) {
  auto spectrum = [](std::size_t variant, Parameterization& p) {
    constexpr std::size_t bins = 8;
    p.bin_edges.clear();
    p.weights.clear();
    p.bin_edges.push_back(0.0);
    double total = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      p.bin_edges.push_back(std::ldexp(1.0, static_cast<int>(b)) * 0.05);
      const double w = std::exp(-0.35 * static_cast<double>(b) * (1.0 + 0.1 * variant));
      p.weights.push_back(w);
      total += w;
    }
    for (double& w : p.weights) w /= total;
  };

  std::vector<Parameterization> params;
  Parameterization electron;
  electron.id = 0;
  electron.kind = "electron";
  electron.hit_lo = opt.electron_hit_lo;
  electron.hit_hi = opt.electron_hit_hi;
  spectrum(0, electron);
  params.push_back(electron);

  const double electron_mean = 0.5 * static_cast<double>(opt.electron_hit_lo + opt.electron_hit_hi);
  const double per_particle = opt.ttbar_hit_ratio * electron_mean / opt.ttbar_mean_multiplicity;
  std::uint32_t next_id = 1;
  for (std::size_t k = 0; k < opt.secondary_kinds.size(); ++k) {
    for (std::size_t s = 0; s < opt.params_per_kind; ++s) {
      const double factor =
          opt.params_per_kind == 1
              ? 1.0
              : 0.6 + 0.8 * static_cast<double>(s) / static_cast<double>(opt.params_per_kind - 1);
      const double center = per_particle * factor;
      Parameterization p;
      p.id = next_id++;
      p.kind = opt.secondary_kinds[k];
      p.hit_lo = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(0.9 * center)));
      p.hit_hi = std::max(p.hit_lo, static_cast<std::uint64_t>(std::llround(1.1 * center)));
      spectrum(k + s + 1, p);
      params.push_back(std::move(p));
    }
  }
  return ParameterizationSet(std::move(params));
}

// --------------------------------------------------------------------------
// Events and simulation

struct Particle {
  std::string kind;
  double energy = 0.0;  // GeV
  std::array<double, 3> direction{1.0, 0.0, 0.0};
};

struct EventInput {
  std::uint64_t id = 0;
  std::vector<Particle> particles;

  void validate() const {
    for (const auto& p : particles) {
      if (!(p.energy > 0.0) || !std::isfinite(p.energy)) {
        throw Error(ErrorCode::invalid_parameter, "particle energy must be positive");
      }
      const auto& d = p.direction;
      const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      if (!(std::abs(norm - 1.0) <= 1e-6)) {
        throw Error(ErrorCode::invalid_parameter, "particle direction must be a unit vector");
      }
    }
  }
};

/// Independent engine states feeding one simulation.
struct SimStreams {
  EngineState hits;     // three uniforms per hit, generated in batches
  EngineState control;  // multiplicities, kinematics, parameterization choice

  /// `hits` is `kind` seeded with `seed`; `control` is Philox under the same
  /// key but offset to counter lane 3 = 1, disjoint from the hit stream.
  static SimStreams from_seed(EngineKind kind, Seed seed) {
    const auto base = seed_engine(EngineKind::philox4x32x10, seed);
    return SimStreams{seed_engine(kind, seed),
                      EngineState(PhiloxState::at(base.philox().key, {0, 0, 0, 1}))};
  }
};

/// Parameterizations loaded so far; a first use costs `load_delay`.
class ParameterCache {
 public:
  explicit ParameterCache(std::chrono::microseconds load_delay = {}) : delay_(load_delay) {}

  void require(std::uint32_t id) {
    if (loaded_.insert(id).second && delay_.count() > 0) std::this_thread::sleep_for(delay_);
  }

  std::size_t loaded_count() const noexcept { return loaded_.size(); }

 private:
  std::chrono::microseconds delay_;
  std::set<std::uint32_t> loaded_;
};

struct SimOptions {
  std::size_t min_batch = default_min_batch;
  double sampling_fraction = 1.0;
  ApiMode api = ApiMode::buffer;
  Backend backend = Serial{};
  std::size_t arena_bytes = default_arena_bytes;
};

struct SimResult {
  std::vector<double> deposits;          // per cell id
  std::vector<double> particle_deposits; // total deposited per particle
  std::uint64_t hits = 0;
  std::uint64_t randoms_consumed = 0;
  std::uint64_t randoms_allocated = 0;
  std::chrono::nanoseconds wall{};
};

/// Uniform integer in [lo, hi] from one control word.
inline std::uint64_t draw_count(EngineState& control, std::uint64_t lo, std::uint64_t hi) {
  const double u = word_to_unit<double>(next_word(control));
  const auto span = static_cast<double>(hi - lo + 1);
  return std::min(hi, lo + static_cast<std::uint64_t>(u * span));
}

/// Simulates one event. Hit counts per particle are drawn from
/// `streams.control`; max(3*hits, min_batch) uniforms are then generated on
/// the task graph from `streams.hits` and the first 3*hits consumed. Each
/// particle's deposits are normalized to energy * sampling_fraction.
inline SimResult simulate_event(const EventInput& event, const Geometry& geometry,
                                const ParameterizationSet& params, SimStreams& streams,
                                const SimOptions& options, ParameterCache* cache = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  event.validate();
  if (!(options.sampling_fraction > 0.0) || !std::isfinite(options.sampling_fraction)) {
    throw Error(ErrorCode::invalid_parameter, "sampling fraction must be positive");
  }

  struct Plan {
    std::size_t param;
    std::size_t region;
    std::uint64_t hits;
  };
  std::vector<Plan> plans;
  plans.reserve(event.particles.size());
  std::uint64_t total_hits = 0;
  for (const auto& particle : event.particles) {
    const std::size_t index = params.select(particle.kind, particle.energy);
    const auto& p = params.at(index);
    if (cache != nullptr) cache->require(p.id);
    const std::uint64_t hits = draw_count(streams.control, p.hit_lo, p.hit_hi);
    plans.push_back({index, region_of(particle.direction, geometry.region_count()), hits});
    total_hits += hits;
  }

  SimResult result;
  result.hits = total_hits;
  result.randoms_allocated = std::max<std::uint64_t>(3 * total_hits, options.min_batch);

  std::vector<float> uniforms;
  const auto unit = DistributionSpec::uniform(0.0, 1.0);
  const auto n = static_cast<std::size_t>(result.randoms_allocated);
  if (options.api == ApiMode::hostdirect) {
    uniforms.resize(n);
    generate<float>(streams.hits, uniforms, unit);
  } else {
    TaskGraph graph(options.arena_bytes);
    const auto buf = graph.create_buffer<float>(n);
    submit_generation<float>(graph, options.api, streams.hits, buf, unit);
    graph.run(options.backend);
    uniforms = graph.copy_to_host<float>(buf);
  }

  result.deposits.assign(geometry.size(), 0.0);
  result.particle_deposits.reserve(plans.size());
  std::vector<std::uint32_t> hit_cells;
  std::vector<double> hit_weights;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& plan = plans[i];
    const auto& p = params.at(plan.param);
    const auto& cdf = params.cdf(plan.param);
    const auto cells = geometry.cells_in(plan.region);
    hit_cells.resize(plan.hits);
    hit_weights.resize(plan.hits);
    double weight_sum = 0.0;
    for (std::uint64_t h = 0; h < plan.hits; ++h, cursor += 3) {
      const float u_cell = uniforms[cursor];
      const float u_bin = uniforms[cursor + 1];
      const float u_frac = uniforms[cursor + 2];
      const auto c = std::min(cells.size() - 1,
                              static_cast<std::size_t>(static_cast<double>(u_cell) * cells.size()));
      const auto b = std::min<std::size_t>(
          cdf.size() - 1,
          static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), double{u_bin}) - cdf.begin()));
      const double w = p.bin_edges[b] + double{u_frac} * (p.bin_edges[b + 1] - p.bin_edges[b]);
      hit_cells[h] = cells[c];
      hit_weights[h] = w;
      weight_sum += w;
    }
    const double target = event.particles[i].energy * options.sampling_fraction;
    double deposited = 0.0;
    for (std::uint64_t h = 0; h < plan.hits; ++h) {
      const double share = weight_sum > 0.0 ? hit_weights[h] / weight_sum
                                            : 1.0 / static_cast<double>(plan.hits);
      const double e = target * share;
      result.deposits[hit_cells[h]] += e;
      deposited += e;
    }
    result.particle_deposits.push_back(deposited);
  }
  result.randoms_consumed = cursor;
  result.wall = std::chrono::steady_clock::now() - t0;
  return result;
}

// --------------------------------------------------------------------------
// Scenarios

enum class Scenario { single_electron, ttbar };

constexpr std::string_view to_string(Scenario s) noexcept {
  return s == Scenario::single_electron ? "electron" : "ttbar";
}

inline Scenario parse_scenario(std::string_view text) {
  if (text == "electron" || text == "single_electron") return Scenario::single_electron;
  if (text == "ttbar") return Scenario::ttbar;
  throw Error(ErrorCode::config_error, "scenario must be electron or ttbar");
}

struct ScenarioConfig {
  Scenario scenario = Scenario::single_electron;
  std::size_t events = 0;  // 0: 1000 single-electron or 500 t-tbar events
  Seed seed{};
  EngineKind engine = EngineKind::philox4x32x10;
  SimOptions sim;
  std::chrono::microseconds load_delay{0};
  double electron_energy = 65.0;  // GeV
  std::uint64_t ttbar_multiplicity_lo = 150;
  std::uint64_t ttbar_multiplicity_hi = 250;
  double ttbar_energy_lo = 1.0;  // GeV, log-uniform up to ttbar_energy_hi
  double ttbar_energy_hi = 1024.0;
  std::vector<std::string> ttbar_kinds = {"photon", "pion", "kaon", "proton", "neutron"};

  std::size_t event_count() const noexcept {
    if (events != 0) return events;
    return scenario == Scenario::single_electron ? 1000 : 500;
  }
};

struct EventSummary {
  std::uint64_t hits = 0;
  std::uint64_t randoms_consumed = 0;
  std::uint64_t randoms_allocated = 0;
  std::chrono::nanoseconds wall{};
};

struct ScenarioReport {
  Scenario scenario = Scenario::single_electron;
  std::uint64_t events = 0;
  std::uint64_t total_hits = 0;
  std::uint64_t randoms_consumed = 0;
  std::uint64_t randoms_allocated = 0;
  std::size_t params_loaded = 0;
  double mean_event_ms = 0.0;
  double total_ms = 0.0;
  std::vector<EventSummary> per_event;
  std::vector<double> total_deposits;  // summed over all events, per cell

  double mean_hits_per_event() const noexcept {
    return events == 0 ? 0.0 : static_cast<double>(total_hits) / static_cast<double>(events);
  }

  nlohmann::json to_json() const {
    return {{"scenario", std::string(to_string(scenario))},
            {"events", events},
            {"total_hits", total_hits},
            {"randoms_consumed", randoms_consumed},
            {"randoms_allocated", randoms_allocated},
            {"params_loaded", params_loaded},
            {"mean_event_ms", mean_event_ms},
            {"total_ms", total_ms}};
  }
};

inline std::array<double, 3> unit_direction(double phi, double cos_theta) {
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  return {sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
}

/// Builds event `id` of the scenario from the control stream.
inline EventInput make_event(const ScenarioConfig& cfg, std::uint64_t id, EngineState& control) {
  auto uniform = [&control] { return word_to_unit<double>(next_word(control)); };
  EventInput ev{id, {}};
  if (cfg.scenario == Scenario::single_electron) {
    // Narrow cone around phi = 0.15, eta ~ 0.
    const double phi = 0.1 + 0.1 * uniform();
    const double cos_theta = -0.05 + 0.1 * uniform();
    ev.particles.push_back({"electron", cfg.electron_energy, unit_direction(phi, cos_theta)});
    return ev;
  }
  const auto multiplicity =
      draw_count(control, cfg.ttbar_multiplicity_lo, cfg.ttbar_multiplicity_hi);
  ev.particles.reserve(multiplicity);
  const double log_span = std::log(cfg.ttbar_energy_hi / cfg.ttbar_energy_lo);
  for (std::uint64_t i = 0; i < multiplicity; ++i) {
    const auto k = draw_count(control, 0, cfg.ttbar_kinds.size() - 1);
    const double energy = cfg.ttbar_energy_lo * std::exp(log_span * uniform());
    const double phi = -std::numbers::pi + 2.0 * std::numbers::pi * uniform();
    const double cos_theta = -1.0 + 2.0 * uniform();
    ev.particles.push_back({cfg.ttbar_kinds[k], energy, unit_direction(phi, cos_theta)});
  }
  return ev;
}

/// Runs every event of the scenario sequentially; generation inside each
/// event uses the configured backend.
inline ScenarioReport run_scenario(const ScenarioConfig& cfg, const Geometry& geometry,
                                   const ParameterizationSet& params) {
  const auto t0 = std::chrono::steady_clock::now();
  auto streams = SimStreams::from_seed(cfg.engine, cfg.seed);
  ParameterCache cache(cfg.load_delay);
  ScenarioReport report;
  report.scenario = cfg.scenario;
  report.total_deposits.assign(geometry.size(), 0.0);
  const std::size_t events = cfg.event_count();
  report.per_event.reserve(events);
  for (std::size_t e = 0; e < events; ++e) {
    const auto event = make_event(cfg, e, streams.control);
    const auto r = simulate_event(event, geometry, params, streams, cfg.sim, &cache);
    if (r.randoms_consumed != 3 * r.hits) {
      throw Error(ErrorCode::kernel_panic, "random accounting violated");
    }
    report.per_event.push_back({r.hits, r.randoms_consumed, r.randoms_allocated, r.wall});
    report.total_hits += r.hits;
    report.randoms_consumed += r.randoms_consumed;
    report.randoms_allocated += r.randoms_allocated;
    for (std::size_t c = 0; c < r.deposits.size(); ++c) report.total_deposits[c] += r.deposits[c];
  }
  report.events = events;
  report.params_loaded = cache.loaded_count();
  const std::chrono::duration<double, std::milli> total = std::chrono::steady_clock::now() - t0;
  report.total_ms = total.count();
  double event_ms = 0.0;
  for (const auto& s : report.per_event) {
    event_ms += std::chrono::duration<double, std::milli>(s.wall).count();
  }
  report.mean_event_ms = events == 0 ? 0.0 : event_ms / static_cast<double>(events);
  return report;
}

}  // namespace portrng::calo
