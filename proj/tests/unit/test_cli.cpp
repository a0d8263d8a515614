#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "manifest.hpp"

using portirl::test::scratch_dir;
namespace cli = portirl::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    const auto dir = scratch_dir("cli_usage");
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"bogus"}).code == cli::kExitUsage);
    CHECK(run({"--out", dir.string(), "synth", "--vessels", "0"}).code == cli::kExitUsage);
    CHECK(run({"--out", dir.string(), "synth", "--arrival-prob", "1.5"}).code == cli::kExitUsage);
    CHECK(run({"--help"}).code == cli::kExitOk);
  }

  TEST_CASE("synth is reproducible and recorded in the manifest") {
    const auto a = scratch_dir("cli_synth_a");
    const auto b = scratch_dir("cli_synth_b");
    for (const auto& d : {a, b})
      REQUIRE(run({"--seed", "7", "--out", d.string(), "synth", "--vessels", "40", "--horizon", "300"}).code == 0);
    for (const char* f : {"visits.csv", "registry.csv", "arrivals.csv", "run.json"})
      CHECK(cli::sha256_file(a / f) == cli::sha256_file(b / f));

    const auto j = nlohmann::json::parse(slurp(a / "run.json"));
    const auto& rec = j["commands"]["synth"];
    CHECK(rec["seed"] == 7);
    CHECK(rec["config"]["vessels"] == "40");
    CHECK(rec["outputs"]["visits.csv"] == cli::sha256_file(a / "visits.csv"));
  }

  TEST_CASE("config file supplies defaults") {
    const auto dir = scratch_dir("cli_config");
    std::ofstream(dir / "run.cfg") << "# comment\nvessels = 12\nhorizon=50\n";
    REQUIRE(run({"--config", (dir / "run.cfg").string(), "--out", (dir / "o").string(), "synth"}).code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "o" / "run.json"));
    CHECK(j["commands"]["synth"]["config"]["vessels"] == "12");
    // Flags override the file.
    REQUIRE(run({"--config", (dir / "run.cfg").string(), "--out", (dir / "o").string(), "synth", "--vessels", "9"}).code == 0);
    const auto k = nlohmann::json::parse(slurp(dir / "o" / "run.json"));
    CHECK(k["commands"]["synth"]["config"]["vessels"] == "9");

    std::ofstream(dir / "bad.cfg") << "no_such_key=1\n";
    CHECK(run({"--config", (dir / "bad.cfg").string(), "--out", (dir / "o").string(), "synth"}).code == cli::kExitUsage);
  }

  TEST_CASE("missing upstream artifacts exit 1") {
    const auto dir = scratch_dir("cli_missing");
    REQUIRE(run({"--out", dir.string(), "synth", "--horizon", "200"}).code == 0);
    REQUIRE(run({"--out", dir.string(), "ingest"}).code == 0);
    const auto r = run({"--out", dir.string(), "evaluate"});
    CHECK(r.code == cli::kExitFailure);
    CHECK(r.err.find("reward") != std::string::npos);
    CHECK(run({"--out", (dir / "empty").string(), "ingest"}).code == cli::kExitFailure);
  }

  TEST_CASE("ingest rejects berth double occupancy") {
    const auto dir = scratch_dir("cli_overlap");
    std::ofstream(dir / "registry.csv") << "imo,size_class,carrier_code\n1,1,1\n2,2,2\n";
    std::ofstream(dir / "visits.csv") << "imo,arrival_ts,waiting_enter_ts,waiting_exit_ts,berth_enter_ts,berth_exit_ts,berth_id\n"
                                      << "1,28800000,,,28810000,28900000,3\n"
                                      << "2,28800100,,,28850000,28950000,3\n";
    const auto r = run({"--out", dir.string(), "ingest"});
    CHECK(r.code == cli::kExitFailure);
    CHECK(r.err.find("window") != std::string::npos);
  }

  TEST_CASE("short chain") {
    const auto dir = scratch_dir("cli_chain");
    const std::string out = dir.string();
    REQUIRE(run({"--out", out, "synth", "--vessels", "20", "--horizon", "300"}).code == 0);
    REQUIRE(run({"--out", out, "ingest"}).code == 0);
    REQUIRE(run({"--out", out, "stats"}).code == 0);
    REQUIRE(run({"--out", out, "train-ae", "--epochs", "2", "--hidden", "8", "--bottleneck", "4"}).code == 0);
    REQUIRE(run({"--out", out, "extract"}).code == 0);
    REQUIRE(run({"--out", out, "train-irl", "--iterations", "20"}).code == 0);
    REQUIRE(run({"--out", out, "predict"}).code == 0);
    const auto r = run({"--out", out, "evaluate"});
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report.contains("action_accuracy"));
    CHECK(report.contains("leave_accuracy"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "run.json"));
    for (const char* cmd : {"synth", "ingest", "stats", "train-ae", "extract", "train-irl", "predict", "evaluate"})
      CHECK(manifest["commands"].contains(cmd));
    for (const auto& [path, hash] : manifest["commands"]["evaluate"]["outputs"].items())
      CHECK(cli::sha256_file(dir / path) == hash.get<std::string>());
    CHECK(run({"--out", out, "gradcheck", "--samples", "50"}).code == 0);
  }
}
