#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "newtonscat/free_dynamics.hpp"
#include "newtonscat/oracle.hpp"
#include "newtonscat/reconstruction.hpp"

namespace newtonscat {

enum class ExperimentKind { kFree, kScatter, kSweep, kReconstruct, kVerify, kOracleCheck };

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// One scattering input (v_-, x_-).
struct InputPair {
  Vec v, x;
};

/// A line with the speeds to run on it. `factors` are multiples of the
/// line threshold and are resolved into `speeds` when parsed.
struct LineSpec {
  LineParam line;
  std::vector<double> speeds;
};

struct FreeParams {
  Vec w, x, h;
  FlowSign sign = FlowSign::kPlus;
  FreeBackend backend = FreeBackend::kExactFixedPoint;
  int order = 0;
  bool write_trajectory = true;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kScatter;
  ForceField field;
  std::string output_dir = "out";
  int jobs = 1;
  std::uint64_t seed = 1;
  /// Canonical config (overrides applied, output and jobs removed) and its hash.
  nlohmann::json canonical;
  std::string hash;

  ScatterConfig solver;
  std::vector<Flavor> flavors{Flavor::kStandard};
  FreeParams free;
  std::vector<InputPair> inputs;
  std::vector<LineSpec> lines;
  int extrapolation_order = 2;
  bool write_y_plus = false;
  ReconstructionSpec reconstruct;
  OracleConfig oracle;
  double oracle_tolerance = 1e-5;
};

struct ConfigOverrides {
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
};

/// Parses and validates a config. Unknown keys, wrong types and values
/// outside their admissible ranges throw ConfigError naming the field.
/// Random inputs are drawn here from the seed, so the parsed config fixes
/// every work item.
///
/// Layout: {"kind", "field", "output", "jobs", "seed", "solver": {...},
/// "<kind>": {...}} with the kind block named free, scatter, sweep,
/// reconstruct, verify or oracle_check.
ExperimentConfig parse_config(const nlohmann::json& doc, const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::string& path, const ConfigOverrides& overrides = {});

/// Feasibility table (mu, rho, lambda, s0 per work item). Warnings for
/// speeds below mu carry the suggested minimum.
std::string feasibility_report(const ExperimentConfig& cfg, std::vector<std::string>* warnings = nullptr);

/// Runs the experiment and writes its files under output_dir. Returns the
/// paths written. Throws the library errors on failure.
std::vector<std::string> run_experiment(const ExperimentConfig& cfg);

/// Exit code for the in-flight exception: 2 infeasible, 3 convergence or
/// numerical failure, 4 configuration or usage error. Fills a one-line
/// JSON error record.
int classify_error(std::exception_ptr error, nlohmann::json* record);

/// CLI entry points; both return the process exit code.
int validate_command(const std::string& path, const ConfigOverrides& overrides, std::ostream& out,
                     std::ostream& err);
int run_command(const std::string& path, const ConfigOverrides& overrides, std::ostream& out,
                std::ostream& err);

}  // namespace newtonscat
