#include "newtonscat/records.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "newtonscat/errors.hpp"

namespace newtonscat {

const char* version() { return NEWTONSCAT_VERSION; }

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

nlohmann::json number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const Vec& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

nlohmann::json to_json(const EstimateCheck& c) {
  return {{"name", c.name}, {"lhs", number(c.lhs)}, {"rhs", number(c.rhs)}, {"pass", c.pass}};
}

namespace {

nlohmann::json checks_json(const std::vector<EstimateCheck>& checks) {
  auto a = nlohmann::json::array();
  for (const auto& c : checks) a.push_back(to_json(c));
  return a;
}

}  // namespace

nlohmann::json to_json(const ScatteringDatum& d) {
  nlohmann::json j = {{"flavor", to_string(d.flavor)},
                      {"v_minus", to_json(d.v_minus)},
                      {"x_minus", to_json(d.x_minus)},
                      {"a", to_json(d.a)},
                      {"b", to_json(d.b)},
                      {"a_sc", to_json(d.a_sc)},
                      {"b_sc", to_json(d.b_sc)},
                      {"r", number(d.r)},
                      {"iterations", d.iterations},
                      {"energy_error", number(d.energy_error)},
                      {"decomposition_residual", number(d.decomposition_residual)},
                      {"guaranteed", d.guaranteed},
                      {"checks", checks_json(d.checks)},
                      {"warnings", d.warnings}};
  if (d.l.size()) {
    j["l"] = to_json(d.l);
    j["l1"] = to_json(d.l1);
    j["l2"] = to_json(d.l2);
  }
  if (d.w.size()) {
    j["w"] = to_json(d.w);
    j["w_error"] = number(d.w_error);
  }
  if (d.flavor == Flavor::kModified) {
    j["g_contraction"] = number(d.g_contraction);
    j["g_ball"] = number(d.g_ball);
  }
  return j;
}

nlohmann::json to_json(const SweepResult& s) {
  auto rows = nlohmann::json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"s", number(r.s)},
                    {"a_scaled", to_json(r.a_scaled)},
                    {"b_scaled", number(r.b_scaled)},
                    {"a_sc", to_json(r.a_sc)},
                    {"b_sc", to_json(r.b_sc)},
                    {"w", to_json(r.w)}});
  nlohmann::json j = {{"flavor", to_string(s.flavor)},
                      {"theta", to_json(s.line.theta)},
                      {"x", to_json(s.line.x)},
                      {"rows", rows},
                      {"a_limit", to_json(s.a_limit)},
                      {"b_limit", number(s.b_limit)}};
  if (s.a_target.size()) {
    j["a_target"] = to_json(s.a_target);
    j["b_target"] = number(s.b_target);
    j["a_rel_error"] = number(s.a_rel_error);
    j["b_rel_error"] = number(s.b_rel_error);
    j["a_slope"] = number(s.a_slope);
    j["b_slope"] = number(s.b_slope);
  }
  return j;
}

nlohmann::json to_json(const TheoremReport& r) {
  return {{"flavor", to_string(r.flavor)}, {"s", number(r.s)},
          {"threshold", number(r.threshold)}, {"r", number(r.r)},
          {"checks", checks_json(r.checks)}, {"pass", r.pass},
          {"datum", to_json(r.datum)}};
}

nlohmann::json to_json(const OracleResult& r) {
  nlohmann::json j = {{"captured", r.captured},
                      {"scattering", r.capture.scattering},
                      {"epsilon", number(r.capture.epsilon)},
                      {"growth_exponent", number(r.capture.growth_exponent)},
                      {"fit_residual", number(r.fit_residual)},
                      {"energy_drift", number(r.energy_drift)}};
  if (!r.captured) j["datum"] = to_json(r.datum);
  return j;
}

nlohmann::json to_json(const SolverDiagnostics& d) {
  auto hist = nlohmann::json::array();
  for (double x : d.residual_history) hist.push_back(number(x));
  return {{"iterations", d.iterations},
          {"residual", number(d.residual)},
          {"residual_history", hist},
          {"tail_error", number(d.tail_error)},
          {"deviation_constant", number(d.deviation_constant)},
          {"deviation_ratio", number(d.deviation_ratio)},
          {"warnings", d.warnings}};
}

RecordWriter::RecordWriter(const std::string& path, std::string hash) : out_(path), hash_(std::move(hash)) {
  if (!out_) throw ConfigError("cannot open output file " + path);
}

void RecordWriter::write(nlohmann::json record) {
  record["config_hash"] = hash_;
  record["version"] = version();
  out_ << record.dump() << '\n';
  out_.flush();
}

void write_reconstruction_csv(std::ostream& out, const ReconstructionResult& r) {
  const auto& xs = r.reconstruction.xs;
  const std::size_t comps = r.truth.size();
  out << "x,y";
  for (std::size_t c = 0; c < comps; ++c) out << ",recon_" << c;
  for (std::size_t c = 0; c < comps; ++c) out << ",truth_" << c;
  out << '\n';
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j) {
      out << format_double(xs[j]) << ',' << format_double(xs[i]);
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      for (std::size_t c = 0; c < comps; ++c) out << ',' << format_double(r.reconstruction.values[c](ii, jj));
      for (std::size_t c = 0; c < comps; ++c) out << ',' << format_double(r.truth[c](ii, jj));
      out << '\n';
    }
}

}  // namespace newtonscat
