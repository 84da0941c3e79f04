#include <doctest.h>

#include <filesystem>
#include <string>

#include "lfire/config.hpp"
#include "lfire/error.hpp"
#include "lfire/io.hpp"

using namespace lfire;
using nlohmann::json;

namespace {

json minimal_arch() {
  return json::parse(R"({
    "seed": 11,
    "model": {"type": "arch"},
    "observed": {"theta": [0.3, 0.7], "replications": 2},
    "method": {"names": ["lfire"], "n_theta": 50, "grid": [{"lo": -1, "hi": 1, "n": 3}, {"lo": 0, "hi": 1, "n": 3}]}
  })");
}

std::string error_of(const json& j) {
  try {
    (void)parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config resolves defaults") {
  const ExperimentConfig c = parse_config(minimal_arch());
  CHECK(c.seed == 11);
  CHECK(std::holds_alternative<ArchModelSpec>(c.simulator));
  CHECK(c.summary.base == BaseMap::Arch);
  CHECK(c.summary.expansion == Expansion::None);
  CHECK(c.method.n_m == 50);  // n_m follows n_theta unless given
  CHECK(c.method.folds == 10);
  CHECK(c.method.n_lambda == 100);
  CHECK(c.datasets() == std::vector<int>{0, 1});
}

TEST_CASE("unknown keys fail loudly with their path") {
  json j = minimal_arch();
  j["methd"] = 1;
  j["model"]["TT"] = 100;
  j["method"]["lambda"] = {{"cuont", 5}};
  const std::string e = error_of(j);
  CHECK(e.find("methd: unknown key") != std::string::npos);
  CHECK(e.find("model.TT: unknown key") != std::string::npos);
  CHECK(e.find("method.lambda.cuont: unknown key") != std::string::npos);
}

TEST_CASE("every offending field is listed") {
  json j = minimal_arch();
  j.erase("seed");
  j["observed"]["theta"] = {0.3, 1.7};
  j["method"]["n_theta"] = 1;
  j["method"]["names"] = {"lfire", "magic"};
  const std::string e = error_of(j);
  CHECK(e.find("seed: required") != std::string::npos);
  CHECK(e.find("observed.theta: outside the prior") != std::string::npos);
  CHECK(e.find("method.n_theta") != std::string::npos);
  CHECK(e.find("unknown method 'magic'") != std::string::npos);
}

TEST_CASE("seed must be a non-negative integer") {
  json j = minimal_arch();
  j["seed"] = -3;
  CHECK(error_of(j).find("seed") != std::string::npos);
  j["seed"] = 1.5;
  CHECK(error_of(j).find("seed") != std::string::npos);
  j["seed"] = 18446744073709551615ULL;
  CHECK(parse_config(j).seed == 18446744073709551615ULL);
}

TEST_CASE("method block consistency") {
  json j = minimal_arch();
  j["method"]["particles"] = 10;
  CHECK(error_of(j).find("either grid or particles") != std::string::npos);
  j = minimal_arch();
  j["method"]["grid"] = json::array({{{"lo", -1}, {"hi", 1}, {"n", 3}}});
  CHECK(error_of(j).find("expected 2 axes") != std::string::npos);
  j = minimal_arch();
  j["method"]["abc"] = {{"rate", 0.02}, {"threshold", 0.1}};
  CHECK(error_of(j).find("exactly one of rate, threshold") != std::string::npos);
  j = minimal_arch();
  j["model"] = {{"type", "ricker"}};
  j["observed"]["theta"] = {3.8, 0.3, 10.0};
  j["method"] = {{"names", {"exact"}}, {"grid", json::array({{{"lo", 3}, {"hi", 5}, {"n", 2}},
                                                              {{"lo", 0}, {"hi", 0.6}, {"n", 2}},
                                                              {{"lo", 5}, {"hi", 15}, {"n", 2}}})}};
  CHECK(error_of(j).find("only available for gaussian and arch") != std::string::npos);
}

TEST_CASE("model validation errors surface as config errors") {
  json j = minimal_arch();
  j["model"]["T"] = 0;
  CHECK_FALSE(error_of(j).empty());
  j = minimal_arch();
  j["model"]["type"] = "garch";
  CHECK(error_of(j).find("unknown model 'garch'") != std::string::npos);
  j = minimal_arch();
  j["summary"] = {{"base", "arch"}, {"expansion", "pairwise"}};
  CHECK_NOTHROW((void)parse_config(j));  // pairing is checked when the model is built
}

TEST_CASE("subset indices are range checked") {
  json j = minimal_arch();
  j["observed"]["subset"] = {1};
  CHECK(parse_config(j).datasets() == std::vector<int>{1});
  j["observed"]["subset"] = {2};
  CHECK(error_of(j).find("out of range") != std::string::npos);
}

TEST_CASE("zero replications is valid") {
  json j = minimal_arch();
  j["observed"]["replications"] = 0;
  CHECK(parse_config(j).datasets().empty());
}

TEST_CASE("resolved config round-trips") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const ExperimentConfig c = load_preset(name);
    const json once = to_json(c);
    const json twice = to_json(parse_config(once));
    CHECK(once == twice);
  }
}

TEST_CASE("lorenz initial state is resolved into the snapshot") {
  const json j = to_json(load_preset("lorenz-scaled"));
  CHECK(j["model"]["initial_state"].size() == 40);
}

TEST_CASE("shipped config files mirror the presets") {
  const std::filesystem::path dir = std::filesystem::path(LFIRE_SOURCE_DIR) / "configs";
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto path = dir / (name + ".json");
    REQUIRE(std::filesystem::exists(path));
    CHECK(json::parse(read_text_file(path)) == preset_json(name));
  }
  CHECK_THROWS_AS((void)preset_json("nope"), ConfigError);
}

TEST_CASE("fit options carry the lambda block") {
  json j = minimal_arch();
  j["method"]["lambda"] = {{"count", 30}, {"min_ratio", 1e-3}, {"folds", 5}, {"fixed", 0.01}};
  const FitOptions f = fit_options(parse_config(j).method);
  CHECK(f.path.n_lambda == 30);
  CHECK(f.path.lambda_ratio == 1e-3);
  CHECK(f.folds == 5);
  REQUIRE(f.fixed_lambda.has_value());
  CHECK(*f.fixed_lambda == 0.01);
}
