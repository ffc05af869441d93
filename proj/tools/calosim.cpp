// calosim: toy parameterized calorimeter simulation driven by the RNG stack.
//
//   calosim run --scenario ttbar --geometry synth:190000:24 --params synth
//               --seed 1 --backend parallel:4 --min-batch 200000 --out report.json

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <string_view>

#include "CLI11.hpp"
#include "portrng/calosim.hpp"

namespace {

portrng::calo::Geometry load_geometry(const std::string& spec) {
  constexpr std::string_view prefix = "synth:";
  if (std::string_view(spec).starts_with(prefix)) {
    const auto rest = std::string_view(spec).substr(prefix.size());
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) {
      throw portrng::Error(portrng::ErrorCode::config_error, "geometry must be synth:N:R");
    }
    using portrng::detail::parse_int;
    return portrng::calo::synth_geometry(
        parse_int<std::size_t>(rest.substr(0, colon), portrng::ErrorCode::config_error, "cell count"),
        parse_int<std::size_t>(rest.substr(colon + 1), portrng::ErrorCode::config_error, "region count"));
  }
  return portrng::calo::read_geometry_file(spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameterized calorimeter simulation benchmark"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "simulate a scenario and write a JSON report");
  std::string scenario = "electron", geometry = "synth:190000:24", params = "synth";
  std::string backend = "serial", api = "buffer", engine = "philox", out_json;
  std::uint64_t seed = 0, events = 0, load_delay_us = 0;
  std::size_t min_batch = portrng::calo::default_min_batch;
  double sampling_fraction = 1.0;
  run->add_option("--scenario", scenario, "electron | ttbar")->capture_default_str();
  run->add_option("--geometry", geometry, "CSV file or synth:N:R")->capture_default_str();
  run->add_option("--params", params, "CSV file or synth")->capture_default_str();
  run->add_option("--seed", seed, "64-bit seed")->capture_default_str();
  run->add_option("--backend", backend, "serial | parallel:N")->capture_default_str();
  run->add_option("--min-batch", min_batch, "minimum uniforms generated per event")
      ->capture_default_str();
  run->add_option("--api", api, "buffer | usm | hostdirect")->capture_default_str();
  run->add_option("--engine", engine, "philox | mrg32k3a")->capture_default_str();
  run->add_option("--events", events, "event count (0: scenario default)")->capture_default_str();
  run->add_option("--load-delay-us", load_delay_us, "simulated parameterization load time")
      ->capture_default_str();
  run->add_option("--sampling-fraction", sampling_fraction, "deposited share of energy")
      ->capture_default_str();
  run->add_option("--out", out_json, "output JSON path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto geo = load_geometry(geometry);
    const auto param_set = params == "synth" ? portrng::calo::synth_parameterizations()
                                             : portrng::calo::read_parameterizations_file(params);
    portrng::calo::ScenarioConfig cfg;
    cfg.scenario = portrng::calo::parse_scenario(scenario);
    cfg.events = events;
    cfg.seed = portrng::Seed{seed};
    cfg.engine = portrng::parse_engine_kind(engine);
    cfg.load_delay = std::chrono::microseconds(load_delay_us);
    cfg.sim.min_batch = min_batch;
    cfg.sim.sampling_fraction = sampling_fraction;
    cfg.sim.api = portrng::parse_api_mode(api);
    cfg.sim.backend = portrng::parse_backend(backend);
    cfg.sim.arena_bytes = portrng::arena_bytes_from_env();
    const auto report = portrng::calo::run_scenario(cfg, geo, param_set);
    const std::string text = report.to_json().dump(2);
    if (out_json.empty()) {
      std::cout << text << '\n';
    } else {
      std::ofstream out(out_json);
      if (!out) throw portrng::Error(portrng::ErrorCode::io_error, "cannot write " + out_json);
      out << text << '\n';
    }
  } catch (const portrng::Error& e) {
    std::cerr << "calosim: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
