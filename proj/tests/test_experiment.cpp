#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "newtonscat/errors.hpp"
#include "newtonscat/experiment.hpp"
#include "newtonscat/records.hpp"

using namespace newtonscat;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("newtonscat_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json scatter_doc() {
  return {{"kind", "scatter"},
          {"field", {{"builtin", "demo"}}},
          {"scatter", {{"flavors", {"standard", "modified"}}, {"random", {{"count", 3}, {"speed_factor", 2.0}}}}}};
}

}  // namespace

TEST(Config, RejectsUnknownKeys) {
  json doc = scatter_doc();
  doc["colour"] = 1;
  EXPECT_THROW(parse_config(doc), ConfigError);
  doc = scatter_doc();
  doc["scatter"]["speed"] = 1;
  EXPECT_THROW(parse_config(doc), ConfigError);
  doc = scatter_doc();
  doc["solver"] = {{"tolerance", 1e-3}};
  EXPECT_THROW(parse_config(doc), ConfigError);
}

TEST(Config, RadiusOutOfRangeNamesTheField) {
  json doc = scatter_doc();
  doc["solver"] = {{"r", 1.5}};
  try {
    parse_config(doc);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("solver.r"), std::string::npos);
  }
}

TEST(Config, KindAndTypeErrors) {
  EXPECT_THROW(parse_config({{"kind", "dance"}, {"field", {{"builtin", "demo"}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"field", {{"builtin", "demo"}}}}), ConfigError);
  json doc = scatter_doc();
  doc["scatter"]["random"]["count"] = "three";
  EXPECT_THROW(parse_config(doc), ConfigError);
  doc = scatter_doc();
  doc["scatter"]["inputs"] = {{{"v", {1000.0, 0.0}}, {"x", {1.0, 0.0}}}};
  EXPECT_THROW(parse_config(doc), ConfigError);
}

TEST(Config, SeedFixesRandomInputsAndHash) {
  const ExperimentConfig a = parse_config(scatter_doc()), b = parse_config(scatter_doc());
  ASSERT_EQ(a.inputs.size(), 3u);
  for (std::size_t k = 0; k < a.inputs.size(); ++k) EXPECT_EQ((a.inputs[k].v - b.inputs[k].v).norm(), 0.0);
  EXPECT_EQ(a.hash, b.hash);
  ConfigOverrides o;
  o.seed = 99;
  const ExperimentConfig c = parse_config(scatter_doc(), o);
  EXPECT_NE(a.hash, c.hash);
  EXPECT_NE((a.inputs[0].v - c.inputs[0].v).norm(), 0.0);
  o = {};
  o.jobs = 4;
  o.out = "/elsewhere";
  EXPECT_EQ(parse_config(scatter_doc(), o).hash, a.hash);
}

TEST(Config, HashIsFnv1a) {
  // FNV-1a of the empty object "{}".
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : std::string("{}")) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  EXPECT_EQ(config_hash(json::object()), buf);
}

TEST(Cli, ValidatePrintsFeasibilityTable) {
  std::ostringstream out, err;
  EXPECT_EQ(validate_command(std::string(NEWTONSCAT_CONFIG_DIR) + "/demo_scatter.json", {}, out, err), 0);
  EXPECT_NE(out.str().find("lambda"), std::string::npos);
  EXPECT_NE(out.str().find("s0"), std::string::npos);
}

TEST(Cli, ValidateWarnsBelowMu) {
  const fs::path dir = scratch("below_mu");
  const json doc = {{"kind", "scatter"},
                    {"field", {{"builtin", "demo"}}},
                    {"scatter", {{"inputs", {{{"v", {1.0, 0.0}}, {"x", {0.0, 0.5}}}}}}}};
  std::ostringstream out, err;
  EXPECT_EQ(validate_command(write_config(dir, doc), {}, out, err), 0);
  EXPECT_NE(err.str().find("suggested minimum"), std::string::npos);
}

TEST(Cli, MalformedConfigExitsFour) {
  const fs::path dir = scratch("malformed");
  std::ofstream(dir / "bad.json") << "{ \"kind\": ";
  std::ostringstream out, err;
  EXPECT_EQ(validate_command((dir / "bad.json").string(), {}, out, err), 4);
  EXPECT_EQ(run_command((dir / "bad.json").string(), {}, out, err), 4);
  EXPECT_EQ(json::parse(err.str().substr(0, err.str().find('\n')))["exit_code"], 4);
}

TEST(Cli, ZeroFieldScatterRecordsZeroData) {
  const fs::path dir = scratch("zero");
  ConfigOverrides o;
  o.out = (dir / "out").string();
  std::ostringstream out, err;
  ASSERT_EQ(run_command(std::string(NEWTONSCAT_CONFIG_DIR) + "/zero_scatter.json", o, out, err), 0) << err.str();
  std::ifstream in(dir / "out" / "scatter.jsonl");
  std::string line;
  int records = 0;
  while (std::getline(in, line)) {
    const json r = json::parse(line);
    for (int i = 0; i < 2; ++i) {
      EXPECT_LE(std::abs(r["a_sc"][i].get<double>()), 1e-12);
      EXPECT_LE(std::abs(r["b_sc"][i].get<double>()), 1e-12);
    }
    EXPECT_EQ(r["version"], version());
    EXPECT_EQ(r["config_hash"].get<std::string>().size(), 16u);
    ++records;
  }
  EXPECT_EQ(records, 2);
}

TEST(Cli, VerifyBelowThresholdExitsTwo) {
  const fs::path dir = scratch("verify_low");
  const json doc = {{"kind", "verify"},
                    {"field", {{"builtin", "demo"}}},
                    {"output", (dir / "out").string()},
                    {"verify", {{"speeds", {300.0}}, {"lines", {{{"phi", 0.0}, {"p", 0.5}}}}}}};
  std::ostringstream out, err;
  EXPECT_EQ(run_command(write_config(dir, doc), {}, out, err), 2);
  const json rec = json::parse(err.str());
  EXPECT_EQ(rec["condition"], "threshold s0");
  EXPECT_EQ(rec["error"], "infeasible");
}

TEST(Cli, ErrorClassification) {
  json rec;
  EXPECT_EQ(classify_error(std::make_exception_ptr(ConvergenceError("x", {1.0, 0.5})), &rec), 3);
  EXPECT_EQ(rec["last_residual"], 0.5);
  EXPECT_EQ(classify_error(std::make_exception_ptr(InfeasibleError("c", "x")), &rec), 2);
  EXPECT_EQ(classify_error(std::make_exception_ptr(NumericError("x")), &rec), 3);
  EXPECT_EQ(classify_error(std::make_exception_ptr(ConfigError("x")), &rec), 4);
  EXPECT_EQ(classify_error(std::make_exception_ptr(DomainError("x")), &rec), 4);
}

// Outputs are byte-identical across reruns and worker counts.
TEST(Cli, RunsAreReproducible) {
  const fs::path dir = scratch("repro");
  const std::string cfg = write_config(dir, scatter_doc());
  std::ostringstream out, err;
  ConfigOverrides o;
  o.out = (dir / "a").string();
  o.jobs = 1;
  ASSERT_EQ(run_command(cfg, o, out, err), 0) << err.str();
  o.out = (dir / "b").string();
  o.jobs = 3;
  ASSERT_EQ(run_command(cfg, o, out, err), 0) << err.str();
  EXPECT_EQ(slurp(dir / "a" / "scatter.jsonl"), slurp(dir / "b" / "scatter.jsonl"));
  EXPECT_FALSE(slurp(dir / "a" / "scatter.jsonl").empty());
}

TEST(Cli, SweepAndFreeKindsWriteFiles) {
  const fs::path dir = scratch("kinds");
  std::ostringstream out, err;
  for (const std::string name : {"demo_sweep", "demo_free", "demo_verify"}) {
    ConfigOverrides o;
    o.out = (dir / name).string();
    ASSERT_EQ(run_command(std::string(NEWTONSCAT_CONFIG_DIR) + "/" + name + ".json", o, out, err), 0) << err.str();
  }
  EXPECT_TRUE(fs::exists(dir / "demo_sweep" / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "demo_free" / "free_trajectory.csv"));
  std::ifstream in(dir / "demo_verify" / "verify.jsonl");
  std::string line;
  while (std::getline(in, line)) EXPECT_TRUE(json::parse(line)["pass"].get<bool>());
}
