// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `acceptance --only 3,5` runs a subset.

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "portrng/portrng.hpp"

using namespace portrng;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

struct Criterion {
  int number;
  std::string title;
  double budget_s;
  std::function<void(Outcome&)> body;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// 1 ------------------------------------------------------------------------

void philox_kats(Outcome& out) {
  struct Kat {
    PhiloxKey key;
    PhiloxCounter counter;
    PhiloxBlock expected;
  };
  const Kat kats[] = {
      {{0, 0}, {0, 0, 0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}},
      {{0xffffffff, 0xffffffff},
       {0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
       {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}},
      {{0xa4093822, 0x299f31d0},
       {0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
       {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}},
  };
  for (std::size_t i = 0; i < 3; ++i) {
    out.require(philox_block(kats[i].key, kats[i].counter) == kats[i].expected,
                "vector " + std::to_string(i) + " mismatch");
  }
  // Same block through the seeded stream path.
  Engine e(EngineKind::philox4x32x10, Seed{0});
  for (auto w : kats[0].expected) out.require(e() == w, "seed 0 stream differs from block");
}

// 2 ------------------------------------------------------------------------

std::vector<float> generate_on(const Backend& backend, std::size_t n) {
  TaskGraph g;
  auto s = seed_engine(EngineKind::philox4x32x10, Seed{20240101});
  const auto buf = g.create_buffer<float>(n);
  submit_generation<float>(g, ApiMode::buffer, s, buf, DistributionSpec::uniform(-1.0, 1.0));
  g.run(backend);
  return g.copy_to_host<float>(buf);
}

void stream_properties(Outcome& out) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint64_t> offset(0, 100'000);
  for (int trial = 0; trial < 128; ++trial) {
    const auto origin = seed_engine(EngineKind::philox4x32x10, Seed{rng()});
    const std::uint64_t n = offset(rng);
    auto stepped = origin;
    for (std::uint64_t i = 0; i < n; ++i) next_word(stepped);
    auto skipped = skip_ahead(origin, n);
    out.require(skipped == stepped, "skip_ahead state differs at offset " + std::to_string(n));
    for (int k = 0; k < 8; ++k) {
      out.require(next_word(skipped) == next_word(stepped),
                  "skip_ahead word differs at offset " + std::to_string(n));
    }
  }
  for (std::size_t n : {std::size_t{1}, std::size_t{1000}, std::size_t{1'000'000}}) {
    const auto reference = generate_on(Serial{}, n);
    for (unsigned w : {2u, 4u, 8u}) {
      out.require(generate_on(Parallel{w}, n) == reference,
                  "Parallel{" + std::to_string(w) + "} differs at batch " + std::to_string(n));
    }
  }
}

// 3 ------------------------------------------------------------------------

void statistics(Outcome& out) {
  const boost::math::chi_squared chi(99);
  const double lo = boost::math::quantile(chi, 0.01);
  const double hi = boost::math::quantile(chi, 0.99);

  auto s = seed_engine(EngineKind::philox4x32x10, Seed{1});
  const auto u = fill_uniform_unit(s, 1'000'000);
  std::vector<double> bins(100, 0.0);
  double sum = 0.0;
  for (float x : u.values) {
    sum += x;
    bins[static_cast<std::size_t>(double{x} * 100.0)] += 1.0;
  }
  double stat = 0.0;
  for (double c : bins) stat += (c - 10000.0) * (c - 10000.0) / 10000.0;
  const double mean = sum / 1e6;

  auto g = seed_engine(EngineKind::philox4x32x10, Seed{2});
  const auto z = fill_gaussian(g, 1'000'000, 0.0, 1.0);
  double zs = 0.0, zz = 0.0;
  for (float x : z.values) {
    zs += x;
    zz += double{x} * x;
  }
  const double zmean = zs / 1e6;
  const double zsd = std::sqrt((zz - 1e6 * zmean * zmean) / (1e6 - 1.0));

  out.detail = "uniform mean " + fmt(mean) + ", chi2 " + fmt(stat) + " in [" + fmt(lo) + ", " +
               fmt(hi) + "], normal mean " + fmt(zmean) + " sd " + fmt(zsd);
  out.require(std::abs(mean - 0.5) <= 0.002, out.detail);
  out.require(stat > lo && stat < hi, out.detail);
  out.require(std::abs(zmean) <= 0.005, out.detail);
  out.require(std::abs(zsd - 1.0) <= 0.005, out.detail);
}

// 4 ------------------------------------------------------------------------

std::uint32_t mix(std::uint32_t h, std::uint32_t v) {
  h ^= v + 0x9E3779B9u + (h << 6) + (h >> 2);
  return h * 0x85EBCA6Bu;
}

struct GraphRun {
  std::vector<std::vector<std::uint32_t>> buffers;
  bool topological = true;
};

GraphRun run_random_graph(std::uint64_t seed, const Backend& backend) {
  std::mt19937_64 rng(seed);
  const std::size_t nbuf = 1 + rng() % 6;
  const std::size_t len = 1 + rng() % 50000;
  const std::size_t ntasks = 1 + rng() % 20;
  TaskGraph g;
  std::vector<BufferHandle> handles;
  for (std::size_t b = 0; b < nbuf; ++b) handles.push_back(g.create_buffer<std::uint32_t>(len));
  for (std::size_t t = 0; t < ntasks; ++t) {
    std::vector<std::size_t> ids(nbuf);
    for (std::size_t i = 0; i < nbuf; ++i) ids[i] = i;
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<Accessor> acc;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(3, nbuf);
    for (std::size_t i = 0; i < k; ++i) acc.push_back({handles[ids[i]], static_cast<AccessMode>(rng() % 3)});
    g.submit_with_accessors(
        Kernel{"t" + std::to_string(t), len, 1, true,
               [acc, t](const KernelContext& ctx, ElementRange r) {
                 for (auto i = r.begin; i < r.end; ++i) {
                   std::uint32_t h = static_cast<std::uint32_t>(t * 7919 + i);
                   for (const auto& a : acc) {
                     if (reads(a.mode)) h = mix(h, ctx.read<std::uint32_t>(a.buffer)[i]);
                   }
                   for (const auto& a : acc) {
                     if (writes(a.mode)) {
                       ctx.write<std::uint32_t>(a.buffer)[i] = mix(h, static_cast<std::uint32_t>(a.buffer.id));
                     }
                   }
                 }
               }},
        acc);
  }
  const auto report = g.run(backend);
  GraphRun result;
  std::vector<const TaskTiming*> by_id(g.task_count(), nullptr);
  for (const auto& t : report.tasks) by_id[t.task_id] = &t;
  for (auto [p, c] : g.edges()) {
    if (by_id[p] == nullptr || by_id[c] == nullptr || by_id[p]->start_order >= by_id[c]->start_order ||
        by_id[c]->start < by_id[p]->end) {
      result.topological = false;
    }
  }
  for (const auto& h : handles) result.buffers.push_back(g.copy_to_host<std::uint32_t>(h));
  return result;
}

void dag_correctness(Outcome& out) {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto serial = run_random_graph(trial, Serial{});
    out.require(serial.topological, "serial start order not topological, graph " + std::to_string(trial));
    for (unsigned w : {2u, 4u, 8u}) {
      const auto par = run_random_graph(trial, Parallel{w, 2048});
      out.require(par.buffers == serial.buffers,
                  "graph " + std::to_string(trial) + " differs on " + std::to_string(w) + " workers");
      out.require(par.topological, "graph " + std::to_string(trial) + " started out of order");
    }
  }
}

// 5 ------------------------------------------------------------------------

void table_arithmetic(Outcome& out) {
  const std::vector<std::string> h{"vega56", "a100"};
  const double buffer = perf_portability({{"vega56", 0.974}, {"a100", 1.186}}, h);
  const double usm = perf_portability({{"vega56", 1.076}, {"a100", 0.240}}, h);
  const std::vector<std::string> x{"x"};
  const double unsupported = perf_portability({{"x", std::nullopt}}, x);
  out.detail = "buffer P " + fmt(buffer) + ", usm P " + fmt(usm) + ", unsupported " + fmt(unsupported);
  out.require(std::abs(buffer - 1.070) <= 0.001, out.detail);
  out.require(std::abs(usm - 0.393) <= 0.001, out.detail);
  out.require(unsupported == 0.0, out.detail);
}

// 6, 7 ----------------------------------------------------------------------

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "portrng_acceptance";
  std::filesystem::create_directories(dir);
  return dir;
}

void burner_protocol(Outcome& out) {
  const std::vector<std::uint64_t> batches{1, 100, 10'000, 1'000'000};
  std::vector<std::vector<std::vector<float>>> outputs;
  for (auto api : {ApiMode::buffer, ApiMode::usm, ApiMode::hostdirect}) {
    BurnConfig cfg;
    cfg.api = api;
    cfg.backend = Parallel{4};
    cfg.batches = batches;
    cfg.iterations = 100;
    cfg.seed = Seed{99};
    const auto records = run_burner(cfg);
    const auto path = (scratch_dir() / ("sweep_" + std::string(to_string(api)) + ".csv")).string();
    write_csv_file(path, records);
    std::ifstream in(path);
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    out.require(lines == 1 + batches.size() * 100,
                std::string(to_string(api)) + " wrote " + std::to_string(lines) + " lines");
    const auto back = read_csv_file(path);
    out.require(back == records, std::string(to_string(api)) + " CSV does not round-trip");
    std::vector<std::vector<float>> per_batch;
    for (auto b : batches) per_batch.push_back(burn_cycle(cfg, b));
    outputs.push_back(std::move(per_batch));
  }
  out.require(outputs[0] == outputs[2] && outputs[1] == outputs[2], "outputs differ across modes");
}

void vavs_consistency(Outcome& out) {
  BurnConfig cfg;
  cfg.batches = {1, 100, 10'000};
  cfg.iterations = 20;
  const auto path = (scratch_dir() / "self.csv").string();
  write_csv_file(path, run_burner(cfg));
  const auto a = read_csv_file(path);
  const auto self = compare(a, read_csv_file(path));
  for (const auto& p : self.pairs) out.require(p.vavs == 1.0, "self VAVS " + fmt(p.vavs, 17));
  auto doubled = a;
  for (auto& r : doubled) {
    for (auto& t : r.samples) t *= 2;
  }
  const auto doubled_path = (scratch_dir() / "doubled.csv").string();
  write_csv_file(doubled_path, doubled);
  const auto half = compare(a, read_csv_file(doubled_path));
  for (const auto& p : half.pairs) out.require(p.vavs == 0.5, "doubled VAVS " + fmt(p.vavs, 17));
  out.require(self.pairs.size() == 3 && half.pairs.size() == 3, "missing pairs");
}

// 8, 9 ---------------------------------------------------------------------

void calorimeter_scaling(Outcome& out) {
  const auto geometry = calo::synth_geometry(calo::default_cell_count, calo::default_region_count);
  const auto params = calo::synth_parameterizations();

  calo::ScenarioConfig electron;
  electron.scenario = calo::Scenario::single_electron;
  electron.seed = Seed{1};
  electron.sim.backend = Parallel{4};
  const auto e = calo::run_scenario(electron, geometry, params);
  out.require(e.events == 1000, "electron events " + std::to_string(e.events));
  for (const auto& ev : e.per_event) {
    out.require(ev.randoms_consumed >= 12000 && ev.randoms_consumed <= 19500,
                "electron event consumed " + std::to_string(ev.randoms_consumed));
    out.require(ev.randoms_consumed == 3 * ev.hits, "electron consumed != 3 hits");
  }

  calo::ScenarioConfig ttbar;
  ttbar.scenario = calo::Scenario::ttbar;
  ttbar.seed = Seed{2};
  ttbar.sim.backend = Parallel{4};
  const auto t = calo::run_scenario(ttbar, geometry, params);
  out.require(t.events == 500, "ttbar events " + std::to_string(t.events));
  for (const auto& ev : t.per_event) {
    out.require(ev.randoms_consumed == 3 * ev.hits, "ttbar consumed != 3 hits");
  }
  const double ratio = t.mean_hits_per_event() / e.mean_hits_per_event();
  out.detail = "ttbar consumed " + fmt(static_cast<double>(t.randoms_consumed), 4) + ", params loaded " +
               std::to_string(t.params_loaded) + ", hit ratio " + fmt(ratio, 4);
  out.require(t.randoms_consumed >= 10'000'000, out.detail);
  out.require(t.params_loaded >= 20 && t.params_loaded <= 30, out.detail);
  out.require(ratio >= 600.0 && ratio <= 800.0, out.detail);
}

void energy_conservation(Outcome& out) {
  const auto geometry = calo::synth_geometry(calo::default_cell_count, calo::default_region_count);
  const auto params = calo::synth_parameterizations();
  const std::vector<std::string> kinds{"electron", "photon", "pion", "kaon", "proton", "neutron"};
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto streams = calo::SimStreams::from_seed(EngineKind::philox4x32x10, Seed{5});
  std::size_t checked = 0;
  double worst = 0.0;
  for (int event = 0; event < 10; ++event) {
    calo::EventInput ev{static_cast<std::uint64_t>(event), {}};
    for (int i = 0; i < 100; ++i) {
      ev.particles.push_back({kinds[rng() % kinds.size()], std::exp(std::log(0.1) + unit(rng) * std::log(1e4)),
                              calo::unit_direction(-3.14159 + 6.28318 * unit(rng), -1.0 + 2.0 * unit(rng))});
    }
    calo::SimOptions opt;
    opt.sampling_fraction = 0.05 + 0.95 * unit(rng);
    const auto r = calo::simulate_event(ev, geometry, params, streams, opt);
    for (std::size_t i = 0; i < ev.particles.size(); ++i) {
      const double want = ev.particles[i].energy * opt.sampling_fraction;
      worst = std::max(worst, std::abs(r.particle_deposits[i] - want) / want);
      ++checked;
    }
  }
  out.detail = std::to_string(checked) + " particles, worst relative error " + fmt(worst, 3);
  out.require(checked == 1000 && worst <= 1e-6, out.detail);
}

std::set<int> parse_only(const std::string& list) {
  std::set<int> out;
  for (auto field : detail::split_commas(list)) out.insert(detail::parse_int<int>(field, ErrorCode::config_error, "criterion"));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only;
  app.add_option("--only", only, "comma-separated criterion numbers");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "Philox known-answer vectors", 1.0, philox_kats},
      {2, "skip-ahead coherence and cross-backend determinism", 30.0, stream_properties},
      {3, "uniform and normal sample statistics", 10.0, statistics},
      {4, "random DAGs: parallel equals serial, topological start", 60.0, dag_correctness},
      {5, "portability arithmetic of the two-platform table", 1.0, table_arithmetic},
      {6, "burner sweep rows and mode invariance", 300.0, burner_protocol},
      {7, "VAVS self-consistency", 60.0, vavs_consistency},
      {8, "calorimeter scenario scaling", 600.0, calorimeter_scaling},
      {9, "per-particle energy conservation", 60.0, energy_conservation},
  };

  std::set<int> selected;
  try {
    if (!only.empty()) selected = parse_only(only);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.number)) continue;
    Outcome outcome;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(outcome);
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (outcome.ok && seconds >= c.budget_s) {
      outcome.ok = false;
      outcome.detail = "over time budget of " + fmt(c.budget_s) + " s";
    }
    if (!outcome.ok) ++failures;
    std::cout << (outcome.ok ? "PASS" : "FAIL") << " [" << c.number << "] " << c.title << " ("
              << fmt(seconds, 3) << " s)";
    if (!outcome.detail.empty()) std::cout << ": " << outcome.detail;
    std::cout << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
