#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hym/harness.hpp"

using namespace hym;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hymlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

// Small, fast run: split L1 + L0 on a 16-grid.
json small_doc() {
  return json::parse(R"({
    "geometry": {"tau": [0.0, 1.0], "n_grid": 16},
    "bundle": {"degrees": [1, 0]},
    "flow": {"t_end": 0.05, "epsilon": 1e-12, "sample_every": 10},
    "perturbation": {"seed": 2, "magnitude": 0.2}
  })");
}

}  // namespace

TEST_CASE("minimal config takes documented defaults") {
  const RunConfig c = config_from_json(json::parse(R"({"bundle": {"degrees": [1, 0]}})"));
  CHECK(c.n_grid == 64);
  CHECK(c.flow.dt == 1e-3);
  CHECK(c.flow.epsilon == 1e-4);
  CHECK(c.tau == cd(0.0, 1.0));
  CHECK(c.stencil_order == 8);
  CHECK(c.cocycle.kind == CocycleKind::kNone);
  CHECK(c.seed == 1);
  CHECK(c.sweep_amplitudes.empty());
}

TEST_CASE("config errors name the key") {
  auto error_of = [](const std::string& text) -> std::string {
    try {
      config_from_json(json::parse(text));
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(error_of(R"({"bundle": {"degrees": [0, 1]}})") ==
        "bundle.degrees: degrees must be block-sorted non-increasing");
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0]}, "foo": 1})").find("\"foo\"") != std::string::npos);
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0], "foo": 1}})").find("bundle.foo") != std::string::npos);
  CHECK(error_of(R"({"geometry": {"n_grid": 64}})") == "bundle: missing required section");
  CHECK(error_of(R"({"bundle": {}})") == "bundle.degrees: missing required key");
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0]}, "flow": {"dt": "fast"}})") == "flow.dt: expected a number");
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0]}, "flow": {"dt": -1}})") == "flow.dt: must be positive");
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0]}, "flow": {"sample_every": 0}})").rfind("flow.sample_every", 0) == 0);
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0]}, "geometry": {"n_grid": 15}})").rfind("geometry", 0) == 0);
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0]}, "geometry": {"tau": [0, -1]}})").rfind("geometry.tau", 0) == 0);
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0], "cocycle": "spline"}})").rfind("bundle.cocycle", 0) == 0);
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0]}, "perturbation": {"seed": -3}})").rfind("perturbation.seed", 0) ==
        0);
  CHECK(error_of(R"({"bundle": {"degrees": [1, 0, 0, 0, 0]}})").rfind("bundle.degrees", 0) == 0);
  CHECK(error_of(R"([1, 2])") == "config: expected an object");
}

TEST_CASE("overrides and round trip") {
  json doc = small_doc();
  apply_override(doc, "flow.dt=5e-4");
  apply_override(doc, "bundle.degrees=[2,1,0]");
  apply_override(doc, "bundle.cocycle=theta");
  apply_override(doc, "sweep.amplitude=[0.5,1]");
  const RunConfig c = config_from_json(doc);
  CHECK(c.flow.dt == 5e-4);
  CHECK(c.degrees == std::vector<int>{2, 1, 0});
  CHECK(c.cocycle.kind == CocycleKind::kTheta);
  CHECK(c.sweep_amplitudes == std::vector<double>{0.5, 1.0});
  const RunConfig again = config_from_json(config_to_json(c));
  CHECK(config_to_json(again) == config_to_json(c));
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "flow..dt=1"), ConfigError);

  const fs::path dir = scratch("parse");
  const fs::path p = write_config(dir, small_doc());
  CHECK(parse_config(p, {"perturbation.seed=9"}).seed == 9);
  CHECK_THROWS_AS(parse_config(dir / "missing.json"), ConfigError);
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(parse_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("run writes trace, manifest and summary") {
  const fs::path dir = scratch("run");
  RunConfig c = config_from_json(small_doc());
  const RunResult r = execute_run(c, dir);
  CHECK(r.exit_code == kExitNotConverged);
  REQUIRE(fs::exists(dir / "trace.csv"));
  REQUIRE(fs::exists(dir / "manifest.json"));
  REQUIRE(fs::exists(dir / "summary.txt"));

  std::istringstream csv(slurp(dir / "trace.csv"));
  std::string header, line;
  std::getline(csv, header);
  CHECK(header.rfind("t,ym_energy,hym_energy,Y,P,M,sff_1,spec_1,spec_2,keyineq_slack,gauge_residual", 0) == 0);
  const auto cols = std::count(header.begin(), header.end(), ',') + 1;
  int rows = 0;
  double prev_t = -1.0;
  while (std::getline(csv, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') + 1 == cols);
    const double t = std::stod(line.substr(0, line.find(',')));
    CHECK(t > prev_t);
    prev_t = t;
    ++rows;
  }
  CHECK(rows == static_cast<int>(r.trace.samples.size()));
  CHECK(rows == 6);

  const json m = json::parse(slurp(dir / "manifest.json"));
  CHECK(m["version"] == kVersion);
  CHECK(m["status"] == "not_converged");
  CHECK(config_from_json(m["config"]).seed == 2);
  CHECK(m["calibration"]["lambda_f0"].size() == 2);
  CHECK(m["terminal"]["sup_phi_squared"].get<double>() == doctest::Approx(1.0));
  CHECK(m["columns"].size() == static_cast<std::size_t>(cols));

  const std::string summary = slurp(dir / "summary.txt");
  CHECK(summary.find("atiyah-bott inf ||LF||^2") != std::string::npos);
  CHECK(summary.find("dominance   PASS") != std::string::npos);
}

TEST_CASE("identical config and seed give a byte-identical trace") {
  const RunConfig c = config_from_json(small_doc());
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  execute_run(c, a);
  execute_run(c, b);
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  RunConfig other = c;
  other.seed = 3;
  const fs::path d = scratch("det_c");
  execute_run(other, d);
  CHECK(slurp(a / "trace.csv") != slurp(d / "trace.csv"));
}

TEST_CASE("trivial bundle converges to zero energy") {
  json doc = small_doc();
  doc["bundle"]["degrees"] = {0, 0};
  doc["flow"] = {{"t_end", 20.0}, {"epsilon", 1e-7}, {"sample_every", 500}, {"track_gauge", false}};
  const RunResult r = execute_run(config_from_json(doc), "");
  CHECK(r.exit_code == kExitOk);
  CHECK(r.summary.hym_energy <= 1e-6);
  CHECK(r.summary.dominance);
}

TEST_CASE("sweep writes one directory per amplitude and an index") {
  json doc = small_doc();
  doc["bundle"]["cocycle"] = "theta";
  doc["sweep"] = {{"amplitude", {0.5, 1.0, 2.0}}};
  const fs::path dir = scratch("sweep");
  const int code = execute_sweep(config_from_json(doc), dir, 2);
  CHECK(code == kExitNotConverged);
  const json index = json::parse(slurp(dir / "index.json"));
  REQUIRE(index["runs"].size() == 3);
  for (int k = 0; k < 3; ++k) {
    const std::string sub = index["runs"][k]["dir"];
    CHECK(fs::exists(dir / sub / "trace.csv"));
    const json m = json::parse(slurp(dir / sub / "manifest.json"));
    CHECK(m["config"]["bundle"]["amplitude"] == index["runs"][k]["amplitude"]);
  }
  CHECK(index["runs"][2]["amplitude"] == 2.0);
  RunConfig no_sweep = config_from_json(small_doc());
  CHECK_THROWS_AS(execute_sweep(no_sweep, scratch("sweep_empty")), ConfigError);
}

TEST_CASE("verify battery") {
  json doc = small_doc();
  doc["geometry"]["n_grid"] = 32;
  doc["bundle"]["cocycle"] = "theta";
  const RunConfig c = config_from_json(doc);
  SUBCASE("all items pass") {
    const auto items = run_verify(c);
    CHECK(items.size() == verify_item_names().size());
    for (const VerifyItem& it : items) {
      CAPTURE(it.name);
      CAPTURE(it.residual);
      CHECK(it.pass);
    }
  }
  SUBCASE("fault injection fails exactly the named item") {
    const auto items = run_verify(c, {"psi_square", "dominance_order"});
    for (const VerifyItem& it : items) {
      CAPTURE(it.name);
      CHECK(it.pass == (it.name != "psi_square" && it.name != "dominance_order"));
    }
    CHECK_THROWS_AS(run_verify(c, {"no_such_item"}), ConfigError);
  }
  SUBCASE("rank 1 is degenerate but valid") {
    json r1 = doc;
    r1["bundle"] = {{"degrees", {3}}};
    for (const VerifyItem& it : run_verify(config_from_json(r1))) {
      CAPTURE(it.name);
      CHECK(it.pass);
    }
  }
}
