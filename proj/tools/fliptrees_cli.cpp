// Command-line front end: build instances, run the invariant and
// distortion suites, benchmark the distance engine, export artifacts.
//
// Exit codes: 0 all checks pass, 1 an inequality or invariant was violated,
// 2 usage or config error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fliptrees/export.hpp"
#include "fliptrees/harness.hpp"
#include "fliptrees/instance.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fliptrees::InstanceConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fliptrees::ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw fliptrees::ConfigError("config is not valid JSON: " +
                                 std::string(e.what()));
  }
  return fliptrees::parse_config(j);
}

void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fliptrees::Error("cannot write " + path.string());
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree-of-spaces models of flip graph-manifold covers and "
               "their embeddings into products of three trees"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int pairs = 0;
  std::uint64_t seed_override = 0;
  bool has_seed = false;
  double radii_scale = 1.5;
  int queries = 50;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "instance config (JSON)")
        ->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option_function<std::uint64_t>(
           "--seed",
           [&](const std::uint64_t& s) {
             seed_override = s;
             has_seed = true;
           },
           "override the config seed");
  };

  auto* cmd_generate = app.add_subcommand("generate", "build an instance and write its build log");
  add_common(cmd_generate);
  auto* cmd_invariants = app.add_subcommand("invariants", "run the invariant suite");
  add_common(cmd_invariants);
  auto* cmd_distortion = app.add_subcommand("distortion", "measure distortion over safe-core pairs");
  add_common(cmd_distortion);
  cmd_distortion->add_option("--pairs", pairs, "number of sampled pairs");
  cmd_distortion->add_option("--radii-scale", radii_scale,
                             "radius factor for the doubling complex");
  auto* cmd_bench = app.add_subcommand("bench", "build and query timings");
  add_common(cmd_bench);
  cmd_bench->add_option("--queries", queries, "number of timed queries");
  auto* cmd_export = app.add_subcommand("export", "write DOT/CSV artifacts");
  add_common(cmd_export);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    fliptrees::InstanceConfig cfg = load_config(config_path);
    if (has_seed) cfg.seed = seed_override;

    if (cmd_generate->parsed()) {
      const auto inst = fliptrees::build_instance(cfg);
      write_text(fs::path(out_dir) / "build_log.txt", inst.build_log);
      std::cout << inst.build_log;
      return 0;
    }
    if (cmd_invariants->parsed()) {
      const auto inst = fliptrees::build_instance(cfg);
      const auto report = fliptrees::run_invariants(inst, cfg.seed);
      std::cout << report.to_text();
      return report.all_pass() ? 0 : 1;
    }
    if (cmd_distortion->parsed()) {
      const auto inst = fliptrees::build_instance(cfg);
      fliptrees::InstanceConfig big_cfg = cfg;
      big_cfg.radii.base =
          static_cast<int>(std::ceil(cfg.radii.base * radii_scale));
      big_cfg.radii.line =
          static_cast<int>(std::ceil(cfg.radii.line * radii_scale));
      big_cfg.radii.z = static_cast<int>(std::ceil(cfg.radii.z * radii_scale));
      const auto big = fliptrees::build_instance(big_cfg);
      const int n = pairs > 0 ? pairs : cfg.sample_count;
      const auto report = fliptrees::run_distortion(inst, big, n, cfg.seed);
      write_text(fs::path(out_dir) / "distortion.csv", report.to_csv());
      write_text(fs::path(out_dir) / "summary.json",
                 report.to_json().dump(2) + "\n");
      std::cout << report.to_json().dump(2) << "\n";
      return report.clean() ? 0 : 1;
    }
    if (cmd_bench->parsed()) {
      const auto report = fliptrees::run_bench(cfg, queries, cfg.seed);
      write_text(fs::path(out_dir) / "bench.json",
                 report.to_json().dump(2) + "\n");
      std::cout << report.to_text();
      return 0;
    }
    if (cmd_export->parsed()) {
      const auto inst = fliptrees::build_instance(cfg);
      const auto files = fliptrees::export_artifacts(inst, out_dir);
      for (const auto& f : files) std::cout << f.string() << "\n";
      return 0;
    }
  } catch (const fliptrees::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
