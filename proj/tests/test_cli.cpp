#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lorentz/cli/config.hpp"
#include "lorentz/cli/report.hpp"
#include "lorentz/cli/runner.hpp"
#include "lorentz/cli/svg.hpp"

using namespace lorentz;
using namespace lorentz::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "lorentz_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const auto path = dir / "config.json";
  std::ofstream(path) << doc.dump(2);
  return path;
}

json billiard_doc() {
  return json::parse(R"({
    "experiment": "validate", "seed": 7,
    "system": {"kind": "billiard", "n_rays": 20000,
               "scatterers": [{"center": [0, 0], "radius": 0.45}, {"center": [0.5, 0.5], "radius": 0.2}]}
  })");
}

std::vector<std::string> violations_of(const json& doc) {
  try {
    (void)parse_config(doc);
  } catch (const SchemaError& e) {
    return e.violations;
  }
  return {};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_CASE("well-formed configs parse") {
  const auto cfg = parse_config(billiard_doc());
  CHECK(cfg.experiment == "validate");
  CHECK(cfg.seed == 7);
  CHECK(cfg.system.kind == "billiard");
  CHECK(cfg.system.scatterers.size() == 2);
}

TEST_CASE("schema violations are all reported together") {
  auto doc = billiard_doc();
  doc["system"]["scatterers"][0]["radius"] = 0.6;
  doc.erase("seed");
  doc["colour"] = "red";
  const auto v = violations_of(doc);
  CHECK(v.size() >= 3);
  auto mentions = [&](const std::string& s) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& m) { return m.find(s) != std::string::npos; });
  };
  CHECK(mentions("radius"));
  CHECK(mentions("seed"));
  CHECK(mentions("colour"));
}

TEST_CASE("unknown experiments and nested keys are rejected") {
  auto doc = billiard_doc();
  doc["experiment"] = "dance";
  CHECK_FALSE(violations_of(doc).empty());
  doc = billiard_doc();
  doc["system"]["scatterers"][1]["colour"] = 1;
  CHECK_FALSE(violations_of(doc).empty());
  doc = billiard_doc();
  doc["system"]["scatterers"][1]["center"] = json::array({1.2, 0.5});
  CHECK_FALSE(violations_of(doc).empty());
}

TEST_CASE("table errors surface from validation") {
  const auto dir = scratch("table_errors");
  auto doc = billiard_doc();
  doc["system"]["scatterers"] = json::parse(R"([{"center": [0, 0], "radius": 0.3}])");
  CHECK_THROWS_AS((void)validate_config(write_config(dir, doc)), billiard::CorridorError);
  doc["system"]["scatterers"] = json::parse(R"([{"center": [0, 0], "radius": 0.45}, {"center": [0.5, 0.5], "radius": 0.26}])");
  CHECK_THROWS_AS((void)validate_config(write_config(dir, doc)), billiard::OverlapError);
}

TEST_CASE("validate records the horizon bound") {
  const auto dir = scratch("validate");
  const auto cfg = validate_config(write_config(dir, billiard_doc()));
  CHECK(cfg.horizon_bound > 1.0);
  REQUIRE(cfg.table.has_value());
  CHECK(cfg.table->validated());
  const int code = run_experiment(cfg, {dir / "out", ExecPolicy::serial(), true});
  CHECK(code == kPass);
  const auto bundle = read_json(dir / "out" / "results.json");
  CHECK(bundle["verdict"] == "PASS");
  CHECK(bundle["exit_code"] == 0);
}

TEST_CASE("oracle identities pass and the report reads them back") {
  const auto dir = scratch("identities");
  const auto doc = json::parse(R"({"experiment": "oracle-identities", "seed": 1,
                                   "system": {"kind": "markov", "preset": "random3"},
                                   "params": {"n_max": 30}})");
  const auto cfg = validate_config(write_config(dir, doc));
  CHECK(run_experiment(cfg, {dir / "out", {}, true}) == kPass);
  std::ostringstream out;
  CHECK(emit_report(dir / "out", out) == 0);
  CHECK(out.str().find("PASS") != std::string::npos);
  CHECK_THROWS_AS((void)emit_report(dir / "missing", out), MissingBundle);
}

TEST_CASE("results do not depend on the worker count") {
  const auto dir = scratch("workers");
  const auto doc = json::parse(R"({"experiment": "mixing", "seed": 3,
                                   "system": {"kind": "markov", "preset": "srw"},
                                   "observables": {"u": {"preset": "indicator_cell"}, "v": {"preset": "indicator_cell"}},
                                   "params": {"n_grid": [20, 40], "N": 20000}})");
  const auto cfg = validate_config(write_config(dir, doc));
  (void)run_experiment(cfg, {dir / "a", ExecPolicy::serial(), true});
  (void)run_experiment(cfg, {dir / "b", ExecPolicy::threads(4), true});
  auto a = read_json(dir / "a" / "results.json");
  auto b = read_json(dir / "b" / "results.json");
  a.erase("timing");
  b.erase("timing");
  CHECK(a.dump() == b.dump());
  std::ifstream ca(dir / "a" / "mixing.csv");
  std::ifstream cb(dir / "b" / "mixing.csv");
  std::stringstream sa, sb;
  sa << ca.rdbuf();
  sb << cb.rdbuf();
  CHECK_FALSE(sa.str().empty());
  CHECK(sa.str() == sb.str());
}

TEST_CASE("svg output is well formed") {
  svg::Plot plot{"t <1>", "n", "y", true, {{"a", {{1, 1}, {10, 2}, {100, 3}}}}};
  const auto s = svg::render(plot);
  CHECK(s.rfind("<svg", 0) == 0);
  CHECK(s.find("</svg>") != std::string::npos);
  CHECK(s.find("t &lt;1&gt;") != std::string::npos);
  CHECK(s.find("<polyline") != std::string::npos);
}
