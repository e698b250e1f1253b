#include "newtonscat/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "newtonscat/errors.hpp"
#include "newtonscat/estimates.hpp"
#include "newtonscat/parallel.hpp"
#include "newtonscat/records.hpp"

namespace newtonscat {

using nlohmann::json;

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kFree: return "free";
    case ExperimentKind::kScatter: return "scatter";
    case ExperimentKind::kSweep: return "sweep";
    case ExperimentKind::kReconstruct: return "reconstruct";
    case ExperimentKind::kVerify: return "verify";
    case ExperimentKind::kOracleCheck: return "oracle-check";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::kFree, ExperimentKind::kScatter, ExperimentKind::kSweep,
                 ExperimentKind::kReconstruct, ExperimentKind::kVerify, ExperimentKind::kOracleCheck})
    if (name == to_string(k)) return k;
  throw ConfigError("kind: unknown experiment kind '" + name + "'");
}

namespace {

const char* block_name(ExperimentKind kind) {
  return kind == ExperimentKind::kOracleCheck ? "oracle_check" : to_string(kind);
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

double positive(const json& obj, const char* key, double fallback, const std::string& where) {
  const double x = get(obj, key, fallback, where);
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(where + "." + key + " must be positive");
  return x;
}

int positive_int(const json& obj, const char* key, int fallback, const std::string& where) {
  const int x = get(obj, key, fallback, where);
  if (x < 1) throw ConfigError(where + "." + key + " must be at least 1");
  return x;
}

Vec vec(const json& j, int dim, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError(where + " must be an array of " + std::to_string(dim) + " numbers");
  Vec v(dim);
  for (int i = 0; i < dim; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw ConfigError(where + " must contain numbers");
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(where + " must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

ScatterConfig parse_solver(const json& j) {
  const std::string where = "solver";
  ScatterConfig c;
  if (j.is_null()) return c;
  reject_unknown(j, {"r", "radius_halvings", "picard_tol", "max_iter", "free_tol", "free_max_iter",
                     "grid_length", "core_panel", "far_panel", "grid_order", "check_preconditions",
                     "refine_w"},
                 where);
  c.r = get(j, "r", c.r, where);
  if (!(c.r == 0.0 || (c.r > 0.0 && c.r < 1.0)))
    throw ConfigError("solver.r = " + format_double(c.r) + " outside the admissible range (0, 1); use 0 for the default");
  c.radius_halvings = get(j, "radius_halvings", c.radius_halvings, where);
  if (c.radius_halvings < 0) throw ConfigError("solver.radius_halvings must be >= 0");
  c.picard_tol = positive(j, "picard_tol", c.picard_tol, where);
  c.max_iter = positive_int(j, "max_iter", c.max_iter, where);
  c.free_tol = positive(j, "free_tol", c.free_tol, where);
  c.free_max_iter = positive_int(j, "free_max_iter", c.free_max_iter, where);
  c.grid_length = positive(j, "grid_length", c.grid_length, where);
  c.core_panel = positive(j, "core_panel", c.core_panel, where);
  c.far_panel = positive(j, "far_panel", c.far_panel, where);
  c.grid_order = positive_int(j, "grid_order", c.grid_order, where);
  c.check_preconditions = get(j, "check_preconditions", c.check_preconditions, where);
  c.refine_w = get(j, "refine_w", c.refine_w, where);
  return c;
}

std::vector<Flavor> parse_flavors(const json& block, const std::string& where, bool allow_oracle) {
  std::vector<std::string> names;
  if (block.contains("flavor") && block.contains("flavors"))
    throw ConfigError(where + ": give flavor or flavors, not both");
  if (block.contains("flavors")) {
    const json& f = block.at("flavors");
    if (!f.is_array() || f.empty()) throw ConfigError(where + ".flavors must be a non-empty array");
    for (const auto& x : f) {
      if (!x.is_string()) throw ConfigError(where + ".flavors must contain strings");
      names.push_back(x.get<std::string>());
    }
  } else {
    names.push_back(get<std::string>(block, "flavor", "standard", where));
  }
  std::vector<Flavor> out;
  for (const auto& n : names) {
    Flavor f;
    try {
      f = flavor_from_string(n);
    } catch (const ConfigError&) {
      throw ConfigError(where + ".flavor: unknown flavor '" + n + "'");
    }
    if (f == Flavor::kOracle && !allow_oracle) throw ConfigError(where + ".flavor: oracle is not allowed here");
    out.push_back(f);
  }
  return out;
}

Flavor threshold_flavor(Flavor f) { return f == Flavor::kModified ? Flavor::kModified : Flavor::kStandard; }

std::vector<InputPair> parse_inputs(const json& block, const ExperimentConfig& cfg, const std::string& where) {
  const int n = cfg.field.dim();
  std::vector<InputPair> out;
  if (block.contains("inputs")) {
    const json& arr = block.at("inputs");
    if (!arr.is_array()) throw ConfigError(where + ".inputs must be an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string w = where + ".inputs[" + std::to_string(k) + "]";
      reject_unknown(arr[k], {"v", "x"}, w);
      if (!arr[k].contains("v")) throw ConfigError(w + ".v is required");
      InputPair p{vec(arr[k].at("v"), n, w + ".v"), zero_vec(n)};
      if (arr[k].contains("x")) p.x = vec(arr[k].at("x"), n, w + ".x");
      if (!(p.v.norm() > 0.0)) throw ConfigError(w + ".v must be nonzero");
      if (std::abs(p.v.dot(p.x)) > 1e-12 * p.v.norm() * std::max(p.x.norm(), 1.0))
        throw ConfigError(w + ": x must be orthogonal to v");
      out.push_back(p);
    }
  }
  if (block.contains("random")) {
    const std::string w = where + ".random";
    const json& r = block.at("random");
    reject_unknown(r, {"count", "speed", "speed_factor", "x_max"}, w);
    const int count = positive_int(r, "count", 10, w);
    const double x_max = get(r, "x_max", 1.0, w);
    if (!(x_max >= 0.0)) throw ConfigError(w + ".x_max must be >= 0");
    const bool absolute = r.contains("speed");
    const double speed = absolute ? positive(r, "speed", 1.0, w) : 0.0;
    const double factor = positive(r, "speed_factor", 2.0, w);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    for (int k = 0; k < count; ++k) {
      Vec theta(n), x(n);
      for (int i = 0; i < n; ++i) theta(i) = normal(rng);
      for (int i = 0; i < n; ++i) x(i) = normal(rng);
      theta.normalize();
      x -= x.dot(theta) * theta;
      x *= x_max * unit(rng) / x.norm();
      double s = speed;
      if (!absolute) {
        double s0 = 0.0;
        for (Flavor f : cfg.flavors)
          s0 = std::max(s0, line_threshold(cfg.field, x.norm(), threshold_flavor(f), cfg.solver));
        if (!(s0 > 0.0)) throw ConfigError(w + ".speed_factor needs a positive threshold; give " + w + ".speed");
        s = factor * s0;
      }
      out.push_back({s * theta, x});
    }
  }
  if (out.empty()) throw ConfigError(where + " needs inputs or random");
  return out;
}

std::vector<LineSpec> parse_lines(const json& block, const ExperimentConfig& cfg, Flavor flavor,
                                  const std::string& where) {
  const int n = cfg.field.dim();
  if (!block.contains("lines") || !block.at("lines").is_array() || block.at("lines").empty())
    throw ConfigError(where + ".lines must be a non-empty array");
  if (block.contains("speeds") == block.contains("factors"))
    throw ConfigError(where + ": give exactly one of speeds or factors");
  const bool factors = block.contains("factors");
  const std::vector<double> ladder = number_list(block.at(factors ? "factors" : "speeds"),
                                                 where + (factors ? ".factors" : ".speeds"));
  for (double s : ladder)
    if (!(s > 0.0)) throw ConfigError(where + (factors ? ".factors" : ".speeds") + " must be positive");
  std::vector<LineSpec> out;
  const json& arr = block.at("lines");
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string w = where + ".lines[" + std::to_string(k) + "]";
    const json& l = arr[k];
    LineSpec spec;
    try {
      if (l.contains("phi")) {
        reject_unknown(l, {"phi", "p"}, w);
        if (n != 2) throw ConfigError(w + ": phi/p lines need n = 2");
        spec.line = LineParam::planar(get(l, "phi", 0.0, w), get(l, "p", 0.0, w));
      } else {
        reject_unknown(l, {"theta", "x"}, w);
        if (!l.contains("theta")) throw ConfigError(w + " needs phi or theta");
        spec.line = LineParam::make(vec(l.at("theta"), n, w + ".theta"),
                                    l.contains("x") ? vec(l.at("x"), n, w + ".x") : zero_vec(n));
      }
    } catch (const DomainError& e) {
      throw ConfigError(w + ": " + e.what());
    }
    const double s0 = factors ? line_threshold(cfg.field, spec.line.x.norm(), threshold_flavor(flavor), cfg.solver) : 1.0;
    if (factors && !(s0 > 0.0)) throw ConfigError(where + ".factors needs a positive threshold; give speeds");
    for (double s : ladder) spec.speeds.push_back(factors ? s * s0 : s);
    out.push_back(spec);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const ConfigOverrides& overrides) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  if (!doc.contains("kind") || !doc.at("kind").is_string()) throw ConfigError("kind is required");
  cfg.kind = experiment_kind_from_string(doc.at("kind").get<std::string>());
  const std::string block = block_name(cfg.kind);
  for (const auto& [key, _] : doc.items())
    if (key != "kind" && key != "field" && key != "output" && key != "jobs" && key != "seed" &&
        key != "solver" && key != block)
      throw ConfigError("unknown key '" + key + "' at top level");
  if (!doc.contains("field")) throw ConfigError("field is required");
  try {
    cfg.field = field_from_json(doc.at("field"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("field: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("field: ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field: ") + e.what());
  }

  cfg.output_dir = overrides.out.value_or(get<std::string>(doc, "output", "out", "config"));
  const int jobs = overrides.jobs.value_or(get(doc, "jobs", 0, "config"));
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  cfg.jobs = jobs == 0 ? std::max(1, static_cast<int>(std::thread::hardware_concurrency())) : jobs;
  cfg.seed = overrides.seed.value_or(get<std::uint64_t>(doc, "seed", 1, "config"));
  cfg.solver = parse_solver(doc.contains("solver") ? doc.at("solver") : json());

  const json params = doc.contains(block) ? doc.at(block) : json::object();
  if (!params.is_object()) throw ConfigError(block + " must be an object");
  const int n = cfg.field.dim();
  switch (cfg.kind) {
    case ExperimentKind::kFree: {
      reject_unknown(params, {"w", "x", "h", "sign", "backend", "order", "write_trajectory"}, block);
      if (!params.contains("w")) throw ConfigError("free.w is required");
      cfg.free.w = vec(params.at("w"), n, "free.w");
      cfg.free.x = params.contains("x") ? vec(params.at("x"), n, "free.x") : zero_vec(n);
      cfg.free.h = params.contains("h") ? vec(params.at("h"), n, "free.h") : zero_vec(n);
      const std::string sign = get<std::string>(params, "sign", "plus", block);
      if (sign != "plus" && sign != "minus") throw ConfigError("free.sign must be plus or minus");
      cfg.free.sign = sign == "plus" ? FlowSign::kPlus : FlowSign::kMinus;
      const std::string backend = get<std::string>(params, "backend", "exact", block);
      if (backend != "exact" && backend != "iterate") throw ConfigError("free.backend must be exact or iterate");
      cfg.free.backend = backend == "exact" ? FreeBackend::kExactFixedPoint : FreeBackend::kIterateN;
      cfg.free.order = get(params, "order", 0, block);
      if (cfg.free.order < 0) throw ConfigError("free.order must be >= 0");
      cfg.free.write_trajectory = get(params, "write_trajectory", true, block);
      if (!(cfg.free.w.norm() > 0.0)) throw ConfigError("free.w must be nonzero");
      break;
    }
    case ExperimentKind::kScatter:
      reject_unknown(params, {"flavor", "flavors", "inputs", "random", "write_y_plus"}, block);
      cfg.flavors = parse_flavors(params, block, true);
      cfg.inputs = parse_inputs(params, cfg, block);
      cfg.write_y_plus = get(params, "write_y_plus", false, block);
      break;
    case ExperimentKind::kSweep:
      reject_unknown(params, {"flavor", "lines", "speeds", "factors", "order"}, block);
      cfg.flavors = parse_flavors(params, block, false);
      if (params.contains("flavors")) throw ConfigError("sweep takes a single flavor");
      cfg.extrapolation_order = get(params, "order", 2, block);
      if (cfg.extrapolation_order < 0) throw ConfigError("sweep.order must be >= 0");
      cfg.lines = parse_lines(params, cfg, cfg.flavors.front(), block);
      break;
    case ExperimentKind::kVerify:
      reject_unknown(params, {"flavor", "lines", "speeds", "factors"}, block);
      cfg.flavors = parse_flavors(params, block, false);
      if (params.contains("flavors")) throw ConfigError("verify takes a single flavor");
      if (cfg.flavors.front() == Flavor::kIterateN)
        throw ConfigError("verify.flavor: the high-energy bounds cover standard and modified only");
      cfg.lines = parse_lines(params, cfg, cfg.flavors.front(), block);
      break;
    case ExperimentKind::kReconstruct: {
      reject_unknown(params, {"target", "flavor", "factors", "order", "angles", "offsets", "offset_max", "grid"},
                     block);
      if (n != 2) throw ConfigError("reconstruct needs a two-dimensional field");
      ReconstructionSpec& r = cfg.reconstruct;
      try {
        r.target = recon_target_from_string(get<std::string>(params, "target", "force_from_a", block));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("reconstruct.target: ") + e.what());
      }
      cfg.flavors = parse_flavors(params, block, false);
      r.flavor = cfg.flavors.front();
      if (params.contains("factors")) r.ladder_factors = number_list(params.at("factors"), "reconstruct.factors");
      for (double f : r.ladder_factors)
        if (!(f > 1.0)) throw ConfigError("reconstruct.factors must exceed 1");
      r.extrapolation_order = get(params, "order", r.extrapolation_order, block);
      if (r.extrapolation_order < 0) throw ConfigError("reconstruct.order must be >= 0");
      r.angle_count = positive_int(params, "angles", r.angle_count, block);
      r.offset_count = positive_int(params, "offsets", r.offset_count, block);
      if (r.offset_count < 2) throw ConfigError("reconstruct.offsets must be at least 2");
      r.offset_max = positive(params, "offset_max", r.offset_max, block);
      if (params.contains("grid")) {
        const json& g = params.at("grid");
        reject_unknown(g, {"size", "half_width"}, "reconstruct.grid");
        r.grid.size = positive_int(g, "size", r.grid.size, "reconstruct.grid");
        r.grid.half_width = positive(g, "half_width", r.grid.half_width, "reconstruct.grid");
      }
      r.scatter = cfg.solver;
      r.jobs = cfg.jobs;
      break;
    }
    case ExperimentKind::kOracleCheck: {
      reject_unknown(params, {"inputs", "random", "tolerance", "oracle"}, block);
      cfg.flavors = {Flavor::kStandard};
      cfg.inputs = parse_inputs(params, cfg, block);
      cfg.oracle_tolerance = positive(params, "tolerance", cfg.oracle_tolerance, block);
      if (params.contains("oracle")) {
        const json& o = params.at("oracle");
        const std::string w = "oracle_check.oracle";
        reject_unknown(o, {"rel_tol", "abs_tol", "t_launch", "t_capture_limit", "fit_window", "fit_rounds", "samples"}, w);
        cfg.oracle.rel_tol = positive(o, "rel_tol", cfg.oracle.rel_tol, w);
        cfg.oracle.abs_tol = positive(o, "abs_tol", cfg.oracle.abs_tol, w);
        cfg.oracle.t_launch = get(o, "t_launch", cfg.oracle.t_launch, w);
        if (!(cfg.oracle.t_launch < 0.0)) throw ConfigError(w + ".t_launch must be negative");
        cfg.oracle.t_capture_limit = positive(o, "t_capture_limit", cfg.oracle.t_capture_limit, w);
        cfg.oracle.fit_window = positive(o, "fit_window", cfg.oracle.fit_window, w);
        if (!(cfg.oracle.fit_window < 1.0)) throw ConfigError(w + ".fit_window must be below 1");
        cfg.oracle.fit_rounds = positive_int(o, "fit_rounds", cfg.oracle.fit_rounds, w);
        cfg.oracle.samples = positive_int(o, "samples", cfg.oracle.samples, w);
        if (cfg.oracle.samples < 16) throw ConfigError(w + ".samples must be at least 16");
      }
      cfg.oracle.free = cfg.solver;
      break;
    }
  }

  cfg.canonical = doc;
  cfg.canonical.erase("output");
  cfg.canonical.erase("jobs");
  cfg.canonical["seed"] = cfg.seed;
  cfg.hash = config_hash(cfg.canonical);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return parse_config(doc, overrides);
}

namespace {

struct FeasibilityRow {
  std::string label;
  Flavor flavor;
  double speed, x_norm;
};

std::string cell(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%11.4g", x);
  return buf;
}

}  // namespace

std::string feasibility_report(const ExperimentConfig& cfg, std::vector<std::string>* warnings) {
  const DecayProfile& p = cfg.field.profile();
  std::vector<FeasibilityRow> rows;
  switch (cfg.kind) {
    case ExperimentKind::kFree:
      rows.push_back({"free", Flavor::kStandard, cfg.free.w.norm(), cfg.free.x.norm()});
      break;
    case ExperimentKind::kScatter:
    case ExperimentKind::kOracleCheck:
      for (std::size_t k = 0; k < cfg.inputs.size(); ++k)
        for (Flavor f : cfg.flavors)
          if (f != Flavor::kOracle)
            rows.push_back({"input " + std::to_string(k), f, cfg.inputs[k].v.norm(), cfg.inputs[k].x.norm()});
      break;
    case ExperimentKind::kSweep:
    case ExperimentKind::kVerify:
      for (std::size_t k = 0; k < cfg.lines.size(); ++k)
        for (double s : cfg.lines[k].speeds)
          rows.push_back({"line " + std::to_string(k), cfg.flavors.front(), s, cfg.lines[k].line.x.norm()});
      break;
    case ExperimentKind::kReconstruct: {
      const auto& r = cfg.reconstruct;
      const double f = *std::min_element(r.ladder_factors.begin(), r.ladder_factors.end());
      for (double pn : {0.0, r.offset_max}) {
        const double s0 = line_threshold(cfg.field, pn, threshold_flavor(r.flavor), cfg.solver);
        rows.push_back({"|p| = " + format_double(pn), r.flavor, f * s0, pn});
      }
      break;
    }
  }

  std::ostringstream os;
  os << "field " << cfg.field.name() << ", n = " << p.dim << ", alpha = " << p.alpha << ", mu = " << mu_threshold(p)
     << "\n";
  os << "item        flavor        |v_-|       |x_-|          mu           r         rho      lambda   rho_tilde"
        "          s0    s0_tilde  status\n";
  for (const auto& row : rows) {
    const bool modified = row.flavor == Flavor::kModified;
    const double mu = modified ? mu_of_sigma(p, row.x_norm) : mu_threshold(p);
    const double r = cfg.solver.r > 0.0 ? cfg.solver.r : default_radius(row.x_norm, modified);
    BoundConstants c;
    try {
      c = bound_constants(p, row.x_norm, row.speed, r);
    } catch (const DomainError& e) {
      throw ConfigError("solver.r = " + format_double(r) + " is not admissible for " + row.label + ": " + e.what());
    }
    const double s0 = line_threshold(cfg.field, row.x_norm, Flavor::kStandard, cfg.solver);
    const double s0t = line_threshold(cfg.field, row.x_norm, Flavor::kModified, cfg.solver);
    std::string status = "ok";
    if (row.speed < mu) {
      status = "below mu";
      if (warnings)
        warnings->push_back(row.label + ": |v_-| = " + format_double(row.speed) + " is below mu = " +
                            format_double(mu) + "; suggested minimum |v_-| >= " + format_double(mu));
    } else if (!((modified ? c.rho_tilde : c.rho) <= r && c.lambda < 1.0)) {
      status = "self-map fails at r";
    }
    char label[32];
    std::snprintf(label, sizeof label, "%-12s%-10s", row.label.substr(0, 11).c_str(), to_string(row.flavor));
    os << label << cell(row.speed) << ' ' << cell(row.x_norm) << ' ' << cell(mu) << ' ' << cell(r) << ' '
       << cell(c.rho) << ' ' << cell(c.lambda) << ' ' << cell(c.rho_tilde) << ' ' << cell(s0) << ' ' << cell(s0t)
       << "  " << status << "\n";
  }
  return os.str();
}

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

ScatteringDatum scatter_any(const ExperimentConfig& cfg, const InputPair& in, Flavor f) {
  if (f == Flavor::kOracle) {
    OracleConfig oc = cfg.oracle;
    oc.free = cfg.solver;
    const OracleResult r = oracle_scattering(cfg.field, in.v, in.x, oc);
    if (r.captured) throw NumericError("oracle trajectory was captured; no scattering data");
    return r.datum;
  }
  return scatter(cfg.field, in.v, in.x, f, cfg.solver);
}

void write_path_csv(const std::string& path, const std::vector<double>& times, const Path& values) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << "t";
  for (Eigen::Index i = 0; i < values.rows(); ++i) out << ",y" << i + 1;
  out << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    out << format_double(times[k]);
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      out << ',' << format_double(values(i, static_cast<Eigen::Index>(k)));
    out << '\n';
  }
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  std::vector<std::string> files;
  auto open = [&](const std::string& name) {
    files.push_back(join(cfg.output_dir, name));
    return RecordWriter(files.back(), cfg.hash);
  };

  switch (cfg.kind) {
    case ExperimentKind::kFree: {
      const FreeParams& fp = cfg.free;
      FreeFlowConfig fc;
      fc.sign = fp.sign;
      fc.picard_tol = cfg.solver.free_tol;
      fc.max_iter = cfg.solver.free_max_iter;
      fc.backend = fp.backend;
      fc.iterate_order = fp.order;
      const auto grid = make_scatter_grid(fp.w.norm(), cfg.field.profile().alpha, cfg.solver);
      const FreeFlow flow = solve_free(cfg.field, fp.w, fp.x, fp.h, fc, grid);
      auto rec = open("free.jsonl");
      rec.write({{"kind", "free"},
                 {"sign", to_string(fp.sign)},
                 {"w", to_json(fp.w)},
                 {"x", to_json(fp.x)},
                 {"h", to_json(fp.h)},
                 {"backend", fp.backend == FreeBackend::kExactFixedPoint ? "exact" : "iterate"},
                 {"position_at_zero", to_json(flow.position_at(0.0))},
                 {"diagnostics", to_json(flow.diagnostics)}});
      if (fp.write_trajectory) {
        files.push_back(join(cfg.output_dir, "free_trajectory.csv"));
        std::ofstream out(files.back());
        flow.trajectory().write_csv(out);
      }
      break;
    }
    case ExperimentKind::kScatter: {
      struct Item {
        std::size_t input;
        Flavor flavor;
      };
      std::vector<Item> items;
      for (std::size_t k = 0; k < cfg.inputs.size(); ++k)
        for (Flavor f : cfg.flavors) items.push_back({k, f});
      const auto data = parallel_map<ScatteringDatum>(items.size(), cfg.jobs, [&](std::size_t i) {
        return scatter_any(cfg, cfg.inputs[items[i].input], items[i].flavor);
      });
      auto rec = open("scatter.jsonl");
      for (std::size_t i = 0; i < items.size(); ++i) {
        json j = to_json(data[i]);
        j["kind"] = "scatter";
        j["input"] = items[i].input;
        rec.write(j);
        if (cfg.write_y_plus && data[i].y_plus.cols() > 0) {
          files.push_back(join(cfg.output_dir, "y_plus_" + std::to_string(items[i].input) + "_" +
                                                   to_string(items[i].flavor) + ".csv"));
          write_path_csv(files.back(), data[i].y_plus_times, data[i].y_plus);
        }
      }
      break;
    }
    case ExperimentKind::kSweep: {
      SweepOptions opts;
      opts.extrapolation_order = cfg.extrapolation_order;
      const auto sweeps = parallel_map<SweepResult>(cfg.lines.size(), cfg.jobs, [&](std::size_t k) {
        return high_energy_sweep(cfg.field, cfg.lines[k].line, cfg.lines[k].speeds, cfg.flavors.front(),
                                 cfg.solver, opts);
      });
      auto rec = open("sweep.jsonl");
      files.push_back(join(cfg.output_dir, "sweep.csv"));
      std::ofstream csv(files.back());
      csv << "line,s,b_scaled";
      for (int i = 0; i < cfg.field.dim(); ++i) csv << ",a_scaled_" << i + 1;
      csv << '\n';
      for (std::size_t k = 0; k < sweeps.size(); ++k) {
        json j = to_json(sweeps[k]);
        j["kind"] = "sweep";
        j["line"] = k;
        rec.write(j);
        for (const auto& row : sweeps[k].rows) {
          csv << k << ',' << format_double(row.s) << ',' << format_double(row.b_scaled);
          for (Eigen::Index i = 0; i < row.a_scaled.size(); ++i) csv << ',' << format_double(row.a_scaled(i));
          csv << '\n';
        }
      }
      break;
    }
    case ExperimentKind::kVerify: {
      struct Item {
        std::size_t line;
        double s;
      };
      std::vector<Item> items;
      for (std::size_t k = 0; k < cfg.lines.size(); ++k)
        for (double s : cfg.lines[k].speeds) items.push_back({k, s});
      const auto reports = parallel_map<TheoremReport>(items.size(), cfg.jobs, [&](std::size_t i) {
        return verify_theorem_bounds(cfg.field, cfg.lines[items[i].line].line, items[i].s, cfg.flavors.front(),
                                     cfg.solver);
      });
      auto rec = open("verify.jsonl");
      for (std::size_t i = 0; i < items.size(); ++i) {
        json j = to_json(reports[i]);
        j["kind"] = "verify";
        j["line"] = items[i].line;
        rec.write(j);
      }
      break;
    }
    case ExperimentKind::kReconstruct: {
      const ReconstructionResult r = reconstruct_short_range(cfg.field, cfg.reconstruct);
      auto rec = open("reconstruct.jsonl");
      rec.write({{"kind", "reconstruct"},
                 {"target", to_string(cfg.reconstruct.target)},
                 {"flavor", to_string(cfg.reconstruct.flavor)},
                 {"angles", cfg.reconstruct.angle_count},
                 {"offsets", cfg.reconstruct.offset_count},
                 {"grid_size", cfg.reconstruct.grid.size},
                 {"s_max", r.s_max},
                 {"field_error", r.field_error},
                 {"sinogram_error", r.sinogram_error},
                 {"inversion_floor", r.inversion_floor},
                 {"data_error", r.data_error},
                 {"warnings", r.warnings}});
      files.push_back(join(cfg.output_dir, "reconstruction.csv"));
      {
        std::ofstream out(files.back());
        write_reconstruction_csv(out, r);
      }
      files.push_back(join(cfg.output_dir, "sinogram.csv"));
      std::ofstream out(files.back());
      r.data.write_csv(out);
      break;
    }
    case ExperimentKind::kOracleCheck: {
      struct Pair {
        ScatteringDatum solver;
        OracleResult oracle;
      };
      const auto pairs = parallel_map<Pair>(cfg.inputs.size(), cfg.jobs, [&](std::size_t k) {
        const InputPair& in = cfg.inputs[k];
        Pair p{scatter(cfg.field, in.v, in.x, Flavor::kStandard, cfg.solver),
               oracle_scattering(cfg.field, in.v, in.x, cfg.oracle)};
        p.oracle.trajectory = {};
        return p;
      });
      auto rec = open("oracle_check.jsonl");
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& s = pairs[k].solver;
        const auto& o = pairs[k].oracle;
        json j = {{"kind", "oracle-check"}, {"input", k}, {"solver", to_json(s)}, {"oracle", to_json(o)}};
        if (!o.captured) {
          const double ea = (s.a - o.datum.a).norm() / o.datum.a.norm();
          const double eb = (s.b - o.datum.b).norm() / std::max(o.datum.b.norm(), 1.0);
          j["a_rel_error"] = ea;
          j["b_rel_error"] = eb;
          j["pass"] = ea <= cfg.oracle_tolerance && eb <= cfg.oracle_tolerance;
        } else {
          j["pass"] = false;
        }
        rec.write(j);
      }
      break;
    }
  }
  return files;
}

int classify_error(std::exception_ptr error, json* record) {
  json r;
  int code = 4;
  try {
    std::rethrow_exception(error);
  } catch (const InfeasibleError& e) {
    code = 2;
    r = {{"error", "infeasible"}, {"condition", e.condition()}, {"message", e.what()}};
  } catch (const ConvergenceError& e) {
    code = 3;
    r = {{"error", "convergence"}, {"message", e.what()},
         {"last_residual", e.residuals().empty() ? json(nullptr) : json(e.residuals().back())}};
  } catch (const NumericError& e) {
    code = 3;
    r = {{"error", "numeric"}, {"message", e.what()}};
  } catch (const ConfigError& e) {
    r = {{"error", "config"}, {"message", e.what()}};
  } catch (const DomainError& e) {
    r = {{"error", "domain"}, {"message", e.what()}};
  } catch (const UsageError& e) {
    r = {{"error", "usage"}, {"message", e.what()}};
  } catch (const json::exception& e) {
    r = {{"error", "config"}, {"message", e.what()}};
  } catch (const std::filesystem::filesystem_error& e) {
    r = {{"error", "config"}, {"message", e.what()}};
  } catch (const std::exception& e) {
    code = 3;
    r = {{"error", "internal"}, {"message", e.what()}};
  }
  r["exit_code"] = code;
  r["version"] = version();
  if (record) *record = r;
  return code;
}

int validate_command(const std::string& path, const ConfigOverrides& overrides, std::ostream& out,
                     std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_config(path, overrides);
    std::vector<std::string> warnings;
    out << "config " << path << " (" << to_string(cfg.kind) << ", hash " << cfg.hash << ") is well-formed\n";
    out << feasibility_report(cfg, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    return 0;
  } catch (...) {
    json rec;
    int code = classify_error(std::current_exception(), &rec);
    // validate does no computation, so every failure is a config error.
    code = 4;
    rec["exit_code"] = code;
    err << rec.dump() << "\n";
    return code;
  }
}

int run_command(const std::string& path, const ConfigOverrides& overrides, std::ostream& out, std::ostream& err) {
  std::string hash;
  try {
    const ExperimentConfig cfg = load_config(path, overrides);
    hash = cfg.hash;
    for (const auto& f : run_experiment(cfg)) out << f << "\n";
    return 0;
  } catch (...) {
    json rec;
    const int code = classify_error(std::current_exception(), &rec);
    if (!hash.empty()) rec["config_hash"] = hash;
    err << rec.dump() << "\n";
    return code;
  }
}

}  // namespace newtonscat
