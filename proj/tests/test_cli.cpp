#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "bohmchsh/run_config.hpp"
#include "bohmchsh/state_io.hpp"
#include "support.hpp"

using namespace bohmchsh;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Workspace {
 public:
  Workspace() {
    dir_ = fs::temp_directory_path() / ("bohmchsh_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path write_config(const json& j, const std::string& name = "config.json") const {
    std::ofstream(path(name)) << j.dump(2);
    return path(name);
  }

 private:
  static inline int counter_ = 0;
  fs::path dir_;
};

int run_cli(const std::string& args) {
  const std::string command = std::string(BOHMCHSH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json small_config() {
  return {{"grid", {{"n_x", 64}, {"n_y", 64}, {"x_range", {-12.0, 12.0}}, {"y_range", {-12.0, 12.0}}}},
          {"settings", {{"alice_times", {0.0, 1.0}}, {"bob_times", {0.0, 1.0}}}},
          {"search", {{"time_candidates", {0.0, 1.0}}, {"basis_functions", 6}}},
          {"samples", 200}};
}

json product_terms() {
  return {{"terms",
           {{{"coefficient", {1.0, 0.0}},
             {"a", {{"center", 0.5}, {"width", 1.0}, {"momentum", 0.3}}},
             {"b", {{"center", -0.5}, {"width", 1.2}, {"momentum", 0.0}}}}}}};
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  Workspace ws;
  CHECK(run_cli("") == 1);
  CHECK(run_cli("prepare") == 1);
  CHECK(run_cli("prepare --config " + ws.path("missing.json").string()) == 1);
  CHECK(run_cli("frobnicate --config x") == 1);
  CHECK(run_cli("--help") == 0);
  std::ofstream(ws.path("broken.json")) << "{ not json";
  CHECK(run_cli("prepare --config " + ws.path("broken.json").string() + " --out " + ws.path("o").string()) == 1);
}

TEST_CASE("prepare round-trips a product state and refuses to overwrite") {
  Workspace ws;
  auto j = small_config();
  j["state"] = product_terms();
  const auto config = ws.write_config(j);
  const auto out = ws.path("prep");
  REQUIRE(run_cli("prepare --config " + config.string() + " --out " + out.string()) == 0);
  const auto loaded = load_state(out / "state.bin");
  const auto expected = cli::initial_state(cli::load_config(config));
  CHECK(max_abs_difference(loaded, expected) < 1e-14);
  CHECK(loaded.grid_x() == expected.grid_x());
  CHECK(fs::exists(out / "density.csv"));
  CHECK(fs::exists(out / "config.json"));
  CHECK(run_cli("prepare --config " + config.string() + " --out " + out.string()) == 1);
}

TEST_CASE("prepare reports even quadrant masses for the entangled default") {
  Workspace ws;
  const auto config = ws.write_config(small_config());
  const auto out = ws.path("prep");
  REQUIRE(run_cli("prepare --config " + config.string() + " --out " + out.string()) == 0);
  const auto report = json::parse(slurp(out / "prepare.json"));
  CHECK(report["quadrant_mass"]["x+y-"].get<double>() == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(report["quadrant_mass"]["x-y+"].get<double>() == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(report["norm_squared"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("invalid specifications exit 1, numerical failures exit 2") {
  Workspace ws;
  auto zero = small_config();
  zero["state"] = product_terms();
  zero["state"]["terms"][0]["coefficient"] = {0.0, 0.0};
  CHECK(run_cli("prepare --config " + ws.write_config(zero, "zero.json").string() + " --out " +
                ws.path("a").string()) == 1);

  auto estimator = small_config();
  estimator["estimator"] = "bogus";
  CHECK(run_cli("run --config " + ws.write_config(estimator, "est.json").string() + " --out " +
                ws.path("b").string()) == 1);
  CHECK(run_cli("run --estimator nope --config " + ws.write_config(small_config(), "ok.json").string() + " --out " +
                ws.path("c").string()) == 1);

  auto edge = small_config();
  edge["state"] = product_terms();
  edge["state"]["terms"][0]["a"]["center"] = 11.0;
  CHECK(run_cli("prepare --config " + ws.write_config(edge, "edge.json").string() + " --out " +
                ws.path("d").string()) == 2);

  auto negative = small_config();
  negative["settings"]["bob_times"] = {-1.0, 0.0};
  CHECK(run_cli("run --config " + ws.write_config(negative, "neg.json").string() + " --out " +
                ws.path("e").string()) == 1);
}

TEST_CASE("search: degenerate candidates fail, repeated runs are byte-identical") {
  Workspace ws;
  auto degenerate = small_config();
  degenerate["search"]["time_candidates"] = {1.0};
  CHECK(run_cli("search --config " + ws.write_config(degenerate, "deg.json").string() + " --out " +
                ws.path("x").string()) == 1);

  auto j = small_config();
  j["search"]["time_candidates"] = {0.0, 1.0, 2.0};
  const auto config = ws.write_config(j);
  REQUIRE(run_cli("search --config " + config.string() + " --seed 4 --out " + ws.path("s1").string()) == 0);
  REQUIRE(run_cli("search --config " + config.string() + " --seed 4 --threads 2 --out " + ws.path("s2").string()) ==
          0);
  CHECK(slurp(ws.path("s1") / "scan.json") == slurp(ws.path("s2") / "scan.json"));
  CHECK(slurp(ws.path("s1") / "best_state.bin") == slurp(ws.path("s2") / "best_state.bin"));
  const auto scan = json::parse(slurp(ws.path("s1") / "scan.json"));
  CHECK(scan["combinations"].size() == 9);
}

TEST_CASE("run: quantum on a product state, then every estimator on a saved state") {
  Workspace ws;
  auto product = small_config();
  product["state"] = product_terms();
  product["estimator"] = "quantum";
  REQUIRE(run_cli("run --config " + ws.write_config(product, "p.json").string() + " --out " +
                  ws.path("q").string()) == 0);
  const auto results = json::parse(slurp(ws.path("q") / "results.json"));
  REQUIRE(results["tables"].size() == 1);
  CHECK(results["tables"][0]["S"].get<double>() <= 2.0 + 1e-10);

  // Save a state with prepare, point a run config at it.
  REQUIRE(run_cli("prepare --config " + ws.write_config(small_config(), "prep.json").string() + " --out " +
                  ws.path("prep").string()) == 0);
  auto saved = small_config();
  saved["state"] = {{"file", "prep/state.bin"}};
  const auto config = ws.write_config(saved, "saved.json");
  REQUIRE(run_cli("run --config " + config.string() + " --samples 100 --out " + ws.path("r1").string()) == 0);
  REQUIRE(run_cli("run --config " + config.string() + " --samples 100 --out " + ws.path("r2").string()) == 0);
  CHECK(slurp(ws.path("r1") / "results.json") == slurp(ws.path("r2") / "results.json"));
  std::istringstream csv(slurp(ws.path("r1") / "tables.csv"));
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 13);
  const auto all = json::parse(slurp(ws.path("r1") / "results.json"));
  CHECK(all["tables"].size() == 3);
  CHECK(all["tables"][1]["estimator"] == "naive");
  CHECK(all["tables"][2]["cells"].size() == 4);
}

TEST_CASE("equivariance: zero samples rejected, time zero is pure sampling noise") {
  Workspace ws;
  auto j = small_config();
  j["equivariance"] = {{"time", 0.0}, {"samples", 4000}};
  const auto config = ws.write_config(j);
  CHECK(run_cli("equivariance --config " + config.string() + " --samples 0 --out " + ws.path("z").string()) == 1);
  REQUIRE(run_cli("equivariance --config " + config.string() + " --out " + ws.path("e").string()) == 0);
  const auto report = json::parse(slurp(ws.path("e") / "equivariance.json"));
  const double critical = 1.63 / std::sqrt(4000.0);
  CHECK(report["ks_A"].get<double>() < critical);
  CHECK(report["ks_B"].get<double>() < critical);
  CHECK(fs::exists(ws.path("e") / "histogram_A.csv"));
  CHECK(fs::exists(ws.path("e") / "histogram_B.csv"));
}

TEST_CASE("config parsing defaults and snapshot") {
  const auto c = cli::config_from_json(json::object());
  CHECK(c.grid_x.n == 256);
  CHECK(c.grid_x.lower_edge() == doctest::Approx(-20.0));
  CHECK(c.samples == 4000);
  CHECK(c.terms.size() == 2);
  CHECK(c.estimator == "all");
  const auto again = cli::config_from_json(cli::to_json(c));
  CHECK(cli::to_json(again).dump() == cli::to_json(c).dump());
  CHECK_THROWS_AS(cli::config_from_json(json{{"samples", 0}}), InvalidArgument);
  CHECK_THROWS_AS(cli::config_from_json(json{{"grid", {{"n_x", 100}}}}), InvalidArgument);
}

TEST_CASE("state file format") {
  const auto gx = Grid1D::spanning(16, -4.0, 4.0), gy = Grid1D::spanning(8, -2.0, 6.0);
  const auto psi = support::random_state(gx, gy, 3);
  std::stringstream buffer;
  write_state(buffer, psi);
  const std::string bytes = buffer.str();
  CHECK(bytes.size() == 8 + 2 * 8 + 4 * 8 + 16 * 8 * 16);
  CHECK(bytes.substr(0, 8) == "BCHSHWF1");
  const auto back = read_state(buffer);
  CHECK(back.grid_x() == gx);
  CHECK(back.grid_y() == gy);
  CHECK(max_abs_difference(back, psi) == 0.0);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_state(truncated), InvalidArgument);
  std::stringstream bad("NOTASTATEFILE...");
  CHECK_THROWS_AS(read_state(bad), InvalidArgument);
}
