// rngburn: RNG burner benchmark and run comparison.
//
//   rngburn run --engine philox --dist uniform:-1:1 --api buffer --backend parallel:4
//               --batches 1,100,10000 --iters 100 --seed 7 --platform host --out run.csv
//   rngburn compare portable.csv native.csv --group vega56,a100 --out cmp.json

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "portrng/burner.hpp"

namespace {

std::vector<std::uint64_t> parse_batches(const std::string& list) {
  std::vector<std::uint64_t> out;
  for (auto field : portrng::detail::split_commas(list)) {
    out.push_back(portrng::detail::parse_int<std::uint64_t>(field, portrng::ErrorCode::config_error,
                                                            "batch size"));
  }
  return out;
}

std::vector<std::string> parse_labels(const std::string& list) {
  std::vector<std::string> out;
  if (list.empty()) return out;
  for (auto field : portrng::detail::split_commas(list)) out.emplace_back(field);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RNG burner: time full generate/transform/copy cycles over batch sizes"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a batch-size sweep and write CSV");
  std::string engine = "philox", dist = "uniform:0:1", api = "buffer", backend = "serial";
  std::string batches, platform = "host", out_csv;
  std::uint64_t iters = 100, seed = 0;
  run->add_option("--engine", engine, "philox | mrg32k3a")->capture_default_str();
  run->add_option("--dist", dist, "uniform:LO:HI | gaussian:MEAN:STD")->capture_default_str();
  run->add_option("--api", api, "buffer | usm | hostdirect")->capture_default_str();
  run->add_option("--backend", backend, "serial | parallel:N")->capture_default_str();
  run->add_option("--batches", batches, "comma-separated batch sizes (default 1..10^7 decades)");
  run->add_option("--iters", iters, "iterations per batch size")->capture_default_str();
  run->add_option("--seed", seed, "64-bit seed")->capture_default_str();
  run->add_option("--platform", platform, "platform label recorded in the CSV")
      ->capture_default_str();
  run->add_option("--out", out_csv, "output CSV path")->required();

  auto* cmp = app.add_subcommand("compare", "VAVS and portability of run A against baseline B");
  std::string csv_a, csv_b, group, out_json;
  cmp->add_option("a", csv_a, "portable run CSV")->required();
  cmp->add_option("b", csv_b, "native baseline CSV")->required();
  cmp->add_option("--group", group, "comma-separated platform labels for P");
  cmp->add_option("--out", out_json, "output JSON path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      portrng::BurnConfig config;
      config.engine = portrng::parse_engine_kind(engine);
      config.distribution = portrng::DistributionSpec::parse(dist);
      config.api = portrng::parse_api_mode(api);
      config.backend = portrng::parse_backend(backend);
      if (!batches.empty()) config.batches = parse_batches(batches);
      config.iterations = iters;
      config.seed = portrng::Seed{seed};
      config.platform = platform;
      config.arena_bytes = portrng::arena_bytes_from_env();
      const auto records = portrng::run_burner(config);
      portrng::write_csv_file(out_csv, records);
      for (const auto& r : records) {
        const auto s = portrng::tts_stats(std::span<const portrng::TimingSample>(r.samples));
        std::cout << "batch " << r.batch << ": mean " << s.mean << " ns, min " << s.min
                  << " ns\n";
      }
    } else {
      const auto a = portrng::read_csv_file(csv_a);
      const auto b = portrng::read_csv_file(csv_b);
      const auto result = portrng::compare(a, b, parse_labels(group));
      const std::string text = result.to_json().dump(2);
      if (out_json.empty()) {
        std::cout << text << '\n';
      } else {
        std::ofstream out(out_json);
        if (!out) throw portrng::Error(portrng::ErrorCode::io_error, "cannot write " + out_json);
        out << text << '\n';
      }
    }
  } catch (const portrng::Error& e) {
    std::cerr << "rngburn: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
