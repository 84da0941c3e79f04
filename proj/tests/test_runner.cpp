#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "lfire/config.hpp"
#include "lfire/engine.hpp"
#include "lfire/error.hpp"
#include "lfire/io.hpp"
#include "lfire/runner.hpp"

using namespace lfire;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lfire_runner_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel.find("timings") != std::string::npos) continue;
    out[rel] = read_text_file(e.path());
  }
  return out;
}

RunContext arch_context(const fs::path& out, int reps = 2) {
  json j = json::parse(R"({
    "seed": 21,
    "model": {"type": "arch"},
    "observed": {"theta": [0.3, 0.7]},
    "method": {"names": ["lfire", "synthlik", "exact"], "n_theta": 40,
               "grid": [{"lo": -1, "hi": 1, "n": 3}, {"lo": 0, "hi": 1, "n": 3}],
               "lambda": {"count": 20}}
  })");
  j["observed"]["replications"] = reps;
  j["output"] = out.string();
  return {parse_config(j), out, 1};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LFIRE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("simulate writes one file per replication, reproducibly") {
  const fs::path out = scratch("simulate");
  RunContext ctx = arch_context(out, 3);
  const auto files = cmd_simulate(ctx);
  REQUIRE(files.size() == 3);
  const Eigen::MatrixXd x = read_matrix_csv(out / files[1]);
  CHECK(x.rows() == 1);
  CHECK(x.cols() == 100);
  CHECK(x == simulate_observed(ctx.config, 1));
  const auto first = snapshot(out);
  cmd_simulate(ctx);
  CHECK(snapshot(out) == first);
  CHECK(fs::exists(out / "simulate.manifest.json"));
  CHECK(fs::exists(out / "simulate.timings.json"));
}

TEST_CASE("zero replications write no datasets") {
  const fs::path out = scratch("zero");
  RunContext ctx = arch_context(out, 0);
  CHECK(cmd_simulate(ctx).empty());
  CHECK_FALSE(fs::exists(out / "observed"));
}

TEST_CASE("grid and sample CSVs round-trip exactly") {
  const fs::path out = scratch("csv");
  const GridAxes axes{cell_centered_axis(-1, 1, 4), cell_centered_axis(0, 1, 3)};
  Eigen::VectorXd lv(12);
  for (int i = 0; i < 12; ++i) lv[i] = -0.37 * i + 0.1 * (i % 3);
  std::vector<char> sup(12, 1);
  sup[5] = 0;
  lv[5] = -INFINITY;
  const GridPosterior gp = normalize_grid(axes, lv, sup);
  write_grid_csv(out / "g.csv", gp, {"a", "b"});
  const GridPosterior back = read_grid_csv(out / "g.csv", 2);
  CHECK(back.axes[0] == gp.axes[0]);
  CHECK(back.axes[1] == gp.axes[1]);
  CHECK(back.density == gp.density);
  CHECK(back.log_values == gp.log_values);
  CHECK(back.in_support == gp.in_support);
  CHECK(back.cell == gp.cell);

  Eigen::MatrixXd p(3, 2);
  p << 0.1, 0.2, 1.0 / 3.0, -5e-300, 7, 8;
  const WeightedSample ws = normalize_weights(p, Eigen::Vector3d(0.0, -1.0, -2.0));
  write_sample_csv(out / "s.csv", ws, {"a", "b"});
  const WeightedSample wb = read_sample_csv(out / "s.csv", 2);
  CHECK(wb.particles == ws.particles);
  CHECK(wb.weights == ws.weights);
  CHECK(read_artifact(out / "s.csv", 2).grid == false);
  CHECK(read_artifact(out / "g.csv", 2).grid == true);
  CHECK_THROWS_AS((void)read_grid_csv(out / "g.csv", 1), ConfigError);
  CHECK_THROWS_AS((void)read_artifact(out / "missing.csv", 2), ConfigError);
}

TEST_CASE("infer needs matching data files") {
  const fs::path out = scratch("missing");
  RunContext ctx = arch_context(out, 1);
  CHECK_THROWS_AS(cmd_infer(ctx), ConfigError);
  write_matrix_csv(out / dataset_path(0), Eigen::MatrixXd::Zero(1, 7));
  try {
    cmd_infer(ctx);
    FAIL("expected a shape error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("dataset 0") != std::string::npos);
  }
}

TEST_CASE("infer output is independent of the worker count and replays per dataset") {
  const fs::path out = scratch("determinism");
  RunContext ctx = arch_context(out, 2);
  cmd_simulate(ctx);
  cmd_infer(ctx);
  const auto one = snapshot(out);
  ctx.workers = 3;
  cmd_infer(ctx);
  CHECK(snapshot(out) == one);
  CHECK(one.count("posterior/lfire_001.csv") == 1);
  CHECK(one.count("posterior/exact_000.csv") == 1);
  CHECK(one.count("posterior/lfire_coefficients.csv") == 1);

  // Dataset 1 alone gives the same posterior files as the full run.
  const fs::path solo = scratch("determinism_solo");
  RunContext single = ctx;
  single.out = solo;
  single.config.subset = {1};
  fs::create_directories(solo / "observed");
  fs::copy_file(out / dataset_path(1), solo / dataset_path(1));
  cmd_infer(single);
  for (const std::string m : {"lfire", "synthlik", "exact"}) {
    CHECK(read_text_file(solo / posterior_path(m, 1)) == one.at(posterior_path(m, 1).generic_string()));
  }
  CHECK_FALSE(fs::exists(solo / posterior_path("lfire", 0)));
}

TEST_CASE("compare emits the method summary table and self comparison gives zero deltas") {
  const fs::path out = scratch("compare");
  RunContext ctx = arch_context(out, 3);
  cmd_simulate(ctx);
  cmd_infer(ctx);
  const auto files = cmd_compare(ctx);
  CHECK(std::find(files.begin(), files.end(), "compare/table.csv") != files.end());
  const std::string table = read_text_file(out / "compare/table.csv");
  CHECK(table.rfind("method,n_s,datasets,mean_skl\n", 0) == 0);
  CHECK(table.find("lfire,40,3,") != std::string::npos);
  CHECK(table.find("synthlik,40,3,") != std::string::npos);

  cmd_compare(ctx, "lfire", "lfire");
  const std::string d = read_text_file(out / "compare/delta.csv");
  std::size_t rows = 0;
  for (std::size_t pos = d.find('\n'); pos != std::string::npos && pos + 1 < d.size(); pos = d.find('\n', pos + 1)) {
    const std::size_t end = d.find('\n', pos + 1);
    const std::string line = d.substr(pos + 1, end - pos - 1);
    CHECK(line.substr(line.rfind(',') + 1) == "0");
    ++rows;
  }
  CHECK(rows == 3 * (1 + 2 * 2));
  const std::string w = read_text_file(out / "compare/wilcoxon.csv");
  CHECK(w.find("skl,all,3,0,0,1,1") != std::string::npos);
}

TEST_CASE("forecast gain limits") {
  LorenzModelSpec spec;
  spec.T = 20;
  spec = std::get<LorenzModelSpec>(resolved(spec));
  Rng rng(4, 0);
  const Dataset x0 = simulate_lorenz(spec, 2.0, 0.1, rng);
  const Eigen::Vector2d th0(2.0, 0.1);
  const Eigen::Vector2d other(1.4, 0.2);
  const Eigen::VectorXd ones = forecast_zeta(spec, x0, th0, th0, other, 80, 9, 0);
  CHECK(ones.size() == 80);
  CHECK((ones.array() == 1.0).all());
  const Eigen::VectorXd zeros = forecast_zeta(spec, x0, th0, other, other, 80, 9, 0);
  CHECK((zeros.array() == 0.0).all());
  const Eigen::VectorXd both = forecast_zeta(spec, x0, th0, th0, th0, 5, 9, 0);
  CHECK((both.array() == 0.0).all());
}

TEST_CASE("forecast needs the lorenz model") {
  RunContext ctx = arch_context(scratch("forecast_arch"), 1);
  CHECK_THROWS_AS(cmd_forecast(ctx), ConfigError);
}

TEST_CASE("forecast end to end on a small lorenz run") {
  const fs::path out = scratch("forecast");
  json j = preset_json("lorenz-scaled");
  j["observed"]["replications"] = 2;
  j["model"]["T"] = 40;
  j["method"]["particles"] = 6;
  j["method"]["n_theta"] = 20;
  j["method"]["n_m"] = 20;
  j["method"]["lambda"] = {{"count", 10}, {"folds", 2}};
  j["forecast"]["steps"] = 8;
  j["output"] = out.string();
  RunContext ctx{parse_config(j), out, 1};
  cmd_simulate(ctx);
  cmd_infer(ctx);
  cmd_forecast(ctx);
  const Table band = read_table_csv(out / "forecast/bands.csv");
  REQUIRE(band.rows.rows() == 8);
  CHECK(band.rows(0, 0) == doctest::Approx(40 * 0.025 + 0.025));
  CHECK(band.rows(7, 0) == doctest::Approx(40 * 0.025 + 8 * 0.025));
  CHECK(band.rows.col(1).allFinite());
  CHECK((band.rows.col(2).array() <= band.rows.col(3).array()).all());
  const Table z = read_table_csv(out / "forecast/zeta.csv");
  CHECK(z.rows.rows() == 16);
}

TEST_CASE("cli exit codes") {
  const fs::path out = scratch("cli");
  fs::create_directories(out);
  CHECK(run_cli("simulate --preset nope") == 2);
  CHECK(run_cli("simulate") == 2);
  CHECK(run_cli("frobnicate") == 2);
  write_text_file(out / "bad.json", R"({"seed": 1, "model": {"type": "arch", "typo": 1}, "observed": {"theta": [0.3, 0.7]}})");
  CHECK(run_cli("simulate --config " + (out / "bad.json").string()) == 2);
  write_text_file(out / "broken.json", "{");
  CHECK(run_cli("simulate --config " + (out / "broken.json").string()) == 2);

  // Every grid node lies outside the prior: the posterior is degenerate.
  write_text_file(out / "outside.json", R"({"seed": 1, "model": {"type": "gaussian"},
    "observed": {"theta": [2.3], "replications": 1},
    "method": {"names": ["lfire"], "n_theta": 20, "grid": [{"lo": 30, "hi": 40, "n": 3}]}})");
  const std::string cfg = "--config " + (out / "outside.json").string() + " --out " + (out / "run").string();
  CHECK(run_cli("simulate " + cfg) == 0);
  CHECK(run_cli("infer " + cfg) == 3);
  CHECK(run_cli("infer --seed 5 --workers 2 " + cfg) == 3);
  CHECK(run_cli("infer --workers 0 " + cfg) == 2);
  CHECK(run_cli("presets") == 0);
}
