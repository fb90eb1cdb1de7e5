// Exercises the installed CLI surface end to end: subcommands, flags, file
// outputs and the documented exit codes (0 pass, 1 violation, 2 config).
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return FLIPTREES_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "fliptrees_cli_test";
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream out(path);
  out << body;
  return path;
}

const char* kGoodConfig = R"({
  "name": "cli-a",
  "bs_tree": {"shape": "path", "length": 3},
  "piece_kind": "synthetic",
  "radii": {"base": 5, "line": 5, "z": 5},
  "margin": 2,
  "sample_count": 40,
  "seed": 11
})";

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("generate, invariants, distortion, bench, export all exit zero") {
  const fs::path cfg = write_config("good.json", kGoodConfig);
  const fs::path out = fs::temp_directory_path() / "fliptrees_cli_out";
  fs::remove_all(out);
  CHECK(run("generate --config " + cfg.string() + " --out " + out.string()) ==
        0);
  CHECK(fs::exists(out / "build_log.txt"));
  CHECK(run("invariants --config " + cfg.string()) == 0);
  CHECK(run("distortion --config " + cfg.string() + " --out " + out.string() +
            " --pairs 30") == 0);
  CHECK(fs::exists(out / "distortion.csv"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(run("bench --config " + cfg.string() + " --out " + out.string() +
            " --queries 5") == 0);
  CHECK(fs::exists(out / "bench.json"));
  CHECK(run("export --config " + cfg.string() + " --out " + out.string()) ==
        0);
  CHECK(fs::exists(out / "t1.dot"));
  fs::remove_all(out);
}

TEST_CASE("seed override yields byte-identical regeneration") {
  const fs::path cfg = write_config("seeded.json", kGoodConfig);
  const fs::path out1 = fs::temp_directory_path() / "fliptrees_seed1";
  const fs::path out2 = fs::temp_directory_path() / "fliptrees_seed2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  REQUIRE(run("generate --config " + cfg.string() + " --seed 424242 --out " +
              out1.string()) == 0);
  REQUIRE(run("generate --config " + cfg.string() + " --seed 424242 --out " +
              out2.string()) == 0);
  std::ifstream in1(out1 / "build_log.txt"), in2(out2 / "build_log.txt");
  const std::string b1((std::istreambuf_iterator<char>(in1)),
                       std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(in2)),
                       std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK_FALSE(b1.empty());
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("invariant violations exit with code one") {
  const fs::path cfg = write_config("broken.json", R"({
    "name": "cli-broken",
    "bs_tree": {"shape": "path", "length": 3},
    "radii": {"base": 4, "line": 4, "z": 4},
    "margin": 1,
    "seed": 3,
    "negative_control": "broken_shadow"
  })");
  CHECK(run("invariants --config " + cfg.string()) == 1);

  const fs::path cycle = write_config("cycle.json", R"({
    "name": "cli-cycle",
    "bs_tree": {"shape": "path", "length": 3},
    "radii": {"base": 4, "line": 4, "z": 4},
    "margin": 1,
    "seed": 3,
    "negative_control": "missing_gluing"
  })");
  CHECK(run("invariants --config " + cycle.string()) == 1);
}

TEST_CASE("usage and config errors exit with code two") {
  CHECK(run("") == 2);                      // missing subcommand
  CHECK(run("invariants") == 2);            // missing --config
  CHECK(run("frobnicate --config x") == 2); // unknown subcommand
  const fs::path nocfg = fs::temp_directory_path() / "does_not_exist.json";
  CHECK(run("invariants --config " + nocfg.string()) == 2);
  const fs::path unknown_key = write_config("unknown.json", R"({
    "name": "u",
    "bs_tree": {"shape": "path", "length": 3},
    "radii": {"base": 4, "line": 4, "z": 4},
    "mystery": true
  })");
  CHECK(run("invariants --config " + unknown_key.string()) == 2);
  const fs::path bad_json = write_config("bad.json", "{not json");
  CHECK(run("invariants --config " + bad_json.string()) == 2);
}

TEST_SUITE_END();
