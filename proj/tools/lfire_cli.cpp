#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lfire/config.hpp"
#include "lfire/error.hpp"
#include "lfire/io.hpp"
#include "lfire/runner.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct Flags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)");
  cmd->add_option("--preset", f.preset, "built-in experiment preset");
  cmd->add_option("--seed", f.seed, "override the master seed");
  cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
}

lfire::RunContext context(const Flags& f) {
  if (f.config.empty() == f.preset.empty()) throw lfire::ConfigError("give exactly one of --config, --preset");
  nlohmann::json j;
  if (!f.config.empty()) {
    try {
      j = nlohmann::json::parse(lfire::read_text_file(f.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw lfire::ConfigError("config '" + f.config + "': " + e.what());
    }
  } else {
    j = lfire::preset_json(f.preset);
  }
  if (f.seed) j["seed"] = *f.seed;
  if (!f.out.empty()) j["output"] = f.out;
  lfire::RunContext ctx;
  ctx.config = lfire::parse_config(j);
  ctx.out = ctx.config.output;
  ctx.workers = f.workers;
  return ctx;
}

void report(const std::vector<std::string>& artifacts, const lfire::RunContext& ctx, const std::string& command) {
  std::cout << command << ": wrote " << artifacts.size() << " artifacts under " << ctx.out.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-free inference by ratio estimation"};
  app.require_subcommand(1);
  Flags flags;
  std::string compare_a = "lfire";
  std::string compare_b = "synthlik";
  std::string preset_dir;

  auto* simulate = app.add_subcommand("simulate", "simulate observed datasets at theta0");
  auto* infer = app.add_subcommand("infer", "run the configured methods on every observed dataset");
  auto* compare = app.add_subcommand("compare", "metric tables from posterior artifacts");
  auto* forecast = app.add_subcommand("forecast", "Lorenz forecast gain from posterior means");
  auto* presets = app.add_subcommand("presets", "list built-in presets or write them as config files");
  for (auto* c : {simulate, infer, compare, forecast}) add_flags(c, flags);
  compare->add_option("--a", compare_a, "method a of the difference a - b");
  compare->add_option("--b", compare_b, "method b of the difference a - b");
  presets->add_option("--write", preset_dir, "directory to write <preset>.json files into");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (presets->parsed()) {
      for (const auto& name : lfire::preset_names()) {
        if (preset_dir.empty()) {
          std::cout << name << "\n";
        } else {
          lfire::write_text_file(std::filesystem::path(preset_dir) / (name + ".json"),
                                 lfire::preset_json(name).dump(2) + "\n");
        }
      }
      return 0;
    }
    const lfire::RunContext ctx = context(flags);
    if (simulate->parsed()) report(lfire::cmd_simulate(ctx), ctx, "simulate");
    if (infer->parsed()) report(lfire::cmd_infer(ctx), ctx, "infer");
    if (compare->parsed()) report(lfire::cmd_compare(ctx, compare_a, compare_b), ctx, "compare");
    if (forecast->parsed()) report(lfire::cmd_forecast(ctx), ctx, "forecast");
  } catch (const lfire::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const lfire::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
  return 0;
}
