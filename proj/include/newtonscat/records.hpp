#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "newtonscat/high_energy.hpp"
#include "newtonscat/oracle.hpp"
#include "newtonscat/reconstruction.hpp"

namespace newtonscat {

/// Library version string.
const char* version();

/// FNV-1a (64 bit) of the compact, key-sorted JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const EstimateCheck& c);
/// Everything except y_+ (written separately as CSV when wanted).
nlohmann::json to_json(const ScatteringDatum& d);
nlohmann::json to_json(const SweepResult& s);
nlohmann::json to_json(const TheoremReport& r);
nlohmann::json to_json(const OracleResult& r);
nlohmann::json to_json(const SolverDiagnostics& d);

/// Appends one JSON object per line, stamped with the config hash and the
/// library version.
class RecordWriter {
 public:
  RecordWriter(const std::string& path, std::string hash);
  void write(nlohmann::json record);

 private:
  std::ofstream out_;
  std::string hash_;
};

/// CSV of a reconstruction: x, y, then reconstructed and true values per
/// component.
void write_reconstruction_csv(std::ostream& out, const ReconstructionResult& r);

/// Shortest round-trip decimal form of a double, for CSV cells.
std::string format_double(double x);

}  // namespace newtonscat
