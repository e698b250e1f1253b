#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "newtonscat/experiment.hpp"
#include "newtonscat/records.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Classical scattering solver: fixed-point scattering data, high-energy sweeps, reconstruction"};
  app.set_version_flag("--version", std::string(newtonscat::version()));
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int jobs = -1;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Experiment config (JSON)")->required();
    sub->add_option("--out", out, "Output directory (overrides the config)");
    sub->add_option("--jobs", jobs, "Worker threads; 0 uses all cores")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed, "Seed for random inputs (overrides the config)");
  };
  auto* validate = app.add_subcommand("validate", "Check a config and print the feasibility table");
  auto* run = app.add_subcommand("run", "Run an experiment and write its records");
  add_common(validate);
  add_common(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  newtonscat::ConfigOverrides overrides;
  if (!out.empty()) overrides.out = out;
  if (jobs >= 0) overrides.jobs = jobs;
  auto* active = validate->parsed() ? validate : run;
  if (active->count("--seed")) overrides.seed = seed;

  if (validate->parsed()) return newtonscat::validate_command(config, overrides, std::cout, std::cerr);
  return newtonscat::run_command(config, overrides, std::cout, std::cerr);
}
