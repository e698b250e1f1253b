#include "newtonscat/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "newtonscat/errors.hpp"

namespace newtonscat {

void DecayProfile::validate() const {
  if (dim < 2 || dim > kMaxDim) throw DomainError("dimension must lie in [2, " + std::to_string(kMaxDim) + "]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  for (double b : beta_long)
    if (!(b >= 0.0)) throw DomainError("long-range decay constants must be nonnegative");
  for (double b : beta_short)
    if (!(b >= 0.0)) throw DomainError("short-range decay constants must be nonnegative");
}

double DecayProfile::beta2() const { return std::max(beta_long[2], beta_short[1]); }

double DecayProfile::beta_max() const {
  return std::max({beta_long[1], beta_long[2], beta_short[1], beta_short[2]});
}

PotentialTerm PotentialTerm::power(int dim, double strength, double exponent, double core) {
  PotentialTerm t;
  t.family = TermFamily::kPower;
  t.strength = strength;
  t.exponent = exponent;
  t.core = core;
  t.center = Vec::Zero(dim);
  t.scales = Vec::Ones(dim);
  return t;
}

PotentialTerm PotentialTerm::gaussian(int dim, double strength, double width) {
  PotentialTerm t;
  t.family = TermFamily::kGaussian;
  t.strength = strength;
  t.center = Vec::Zero(dim);
  t.scales = Vec::Constant(dim, width);
  return t;
}

double PotentialTerm::value(const Vec& x) const {
  double v = 0.0;
  accumulate(x, v, nullptr, nullptr);
  return v;
}

void PotentialTerm::accumulate(const Vec& x, double& v, Vec* gradient, Mat* hessian) const {
  const int n = static_cast<int>(x.size());
  Vec d(n), dw(n);  // offset, offset / scale^2
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    d(i) = x(i) - center(i);
    const double inv = 1.0 / (scales(i) * scales(i));
    dw(i) = d(i) * inv;
    q += d(i) * dw(i);
  }
  if (family == TermFamily::kPower) {
    q += core * core;
    const double base = strength * std::pow(q, -0.5 * exponent);
    v += base;
    if (gradient) *gradient -= (exponent * base / q) * dw;
    if (hessian) {
      const double c = exponent * base / (q * q);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double h = (exponent + 2.0) * dw(i) * dw(j);
          if (i == j) h -= q / (scales(i) * scales(i));
          (*hessian)(i, j) += c * h;
        }
    }
  } else {
    const double g = strength * std::exp(-q);
    v += g;
    if (gradient) *gradient -= (2.0 * g) * dw;
    if (hessian) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double h = 4.0 * dw(i) * dw(j);
          if (i == j) h -= 2.0 / (scales(i) * scales(i));
          (*hessian)(i, j) += g * h;
        }
    }
  }
}

double Potential::value(const Vec& x) const {
  double v = 0.0;
  for (const auto& t : terms_) t.accumulate(x, v, nullptr, nullptr);
  return v;
}

Vec Potential::force(const Vec& x) const {
  Vec g = Vec::Zero(x.size());
  double v = 0.0;
  for (const auto& t : terms_) t.accumulate(x, v, &g, nullptr);
  return -g;
}

Mat Potential::force_jacobian(const Vec& x) const {
  Vec g = Vec::Zero(x.size());
  Mat h = Mat::Zero(x.size(), x.size());
  double v = 0.0;
  for (const auto& t : terms_) t.accumulate(x, v, &g, &h);
  return -h;
}

void Potential::derivatives(const Vec& x, double& v, Vec& gradient, Mat& hessian) const {
  v = 0.0;
  gradient = Vec::Zero(x.size());
  hessian = Mat::Zero(x.size(), x.size());
  for (const auto& t : terms_) t.accumulate(x, v, &gradient, &hessian);
}

ForceField::ForceField(std::string name, Potential long_part, Potential short_part,
                       DecayProfile profile)
    : name_(std::move(name)), long_(std::move(long_part)), short_(std::move(short_part)),
      profile_(profile) {
  profile_.validate();
  for (const auto* p : {&long_, &short_})
    for (const auto& t : p->terms())
      if (t.center.size() != profile_.dim || t.scales.size() != profile_.dim)
        throw DomainError("potential term dimension does not match the field dimension");
}

double ForceField::energy(const Vec& x, const Vec& xdot) const {
  return 0.5 * xdot.squaredNorm() + potential(x);
}

ForceField ForceField::scaled(double factor) const {
  auto scale_terms = [factor](const Potential& p) {
    std::vector<PotentialTerm> terms = p.terms();
    for (auto& t : terms) t.strength *= factor;
    return Potential(std::move(terms));
  };
  DecayProfile prof = profile_;
  const double a = std::abs(factor);
  for (double& b : prof.beta_long) b *= a;
  for (double& b : prof.beta_short) b *= a;
  return ForceField(name_ + "*" + std::to_string(factor), scale_terms(long_), scale_terms(short_),
                    prof);
}

ForceField ForceField::long_range_only() const {
  DecayProfile prof = profile_;
  prof.beta_short = {0.0, 0.0, 0.0};
  return ForceField(name_ + "/long", long_, Potential{}, prof);
}

std::pair<Vec, Vec> eval_split_force(const ForceField& field, const Vec& x) {
  if (x.size() != field.dim()) throw DomainError("point dimension does not match the field");
  if (!x.allFinite()) throw DomainError("non-finite evaluation point");
  return {field.long_force(x), field.short_force(x)};
}

namespace {

double ratio(double observed, double bound) {
  if (observed == 0.0) return 0.0;
  if (bound <= 0.0) return std::numeric_limits<double>::infinity();
  return observed / bound;
}

std::vector<Vec> decay_samples(int dim, std::size_t count, double radius_max, std::uint64_t seed) {
  std::vector<Vec> pts;
  pts.reserve(count);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  pts.push_back(Vec::Zero(dim));
  const double r_min = 1e-3;
  const std::size_t radial = std::max<std::size_t>(1, count - 1);
  for (std::size_t k = 0; k + 1 < count; ++k) {
    const double frac = radial > 1 ? static_cast<double>(k) / static_cast<double>(radial - 1) : 1.0;
    const double r = r_min * std::pow(radius_max / r_min, frac);
    Vec dir(dim);
    if (dim == 2) {
      const double phi = 2.0 * std::numbers::pi * std::uniform_real_distribution<double>()(rng);
      dir << std::cos(phi), std::sin(phi);
    } else {
      for (int i = 0; i < dim; ++i) dir(i) = normal(rng);
      dir.normalize();
    }
    pts.push_back(r * dir);
  }
  return pts;
}

}  // namespace

DecayReport verify_decay(const ForceField& field, std::size_t sample_count, double radius_max,
                         std::uint64_t seed) {
  if (sample_count == 0) throw DomainError("sample_count must be positive");
  const auto& prof = field.profile();
  const double a = prof.alpha;
  DecayReport rep;
  for (const Vec& x : decay_samples(field.dim(), sample_count, radius_max, seed)) {
    const double w = 1.0 + x.norm();
    double v;
    Vec g;
    Mat h;
    for (int part = 0; part < 2; ++part) {
      const Potential& p = part == 0 ? field.long_part() : field.short_part();
      auto& out = part == 0 ? rep.long_ratio : rep.short_ratio;
      const auto& beta = part == 0 ? prof.beta_long : prof.beta_short;
      const double base = part == 0 ? a : a + 1.0;
      p.derivatives(x, v, g, h);
      out[0] = std::max(out[0], ratio(std::abs(v) * std::pow(w, base), beta[0]));
      out[1] = std::max(out[1], ratio(g.cwiseAbs().maxCoeff() * std::pow(w, base + 1.0), beta[1]));
      out[2] = std::max(out[2], ratio(h.cwiseAbs().maxCoeff() * std::pow(w, base + 2.0), beta[2]));
    }
    ++rep.samples;
  }
  for (int k = 0; k < 3; ++k)
    if (!(rep.long_ratio[k] <= 1.0) || !(rep.short_ratio[k] <= 1.0)) rep.pass = false;
  return rep;
}

double mu_threshold(const DecayProfile& profile) { return mu_of_sigma(profile, 0.0); }

double mu_of_sigma(const DecayProfile& profile, double sigma) {
  if (!(profile.alpha > 0.0)) throw DomainError("alpha must be positive");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be nonnegative");
  const double b = std::max(profile.beta_long[1], profile.beta_long[2]);
  return std::sqrt(32.0 * profile.dim * b /
                   (profile.alpha * std::pow(1.0 + sigma / std::numbers::sqrt2, profile.alpha)));
}

double gradient_consistency_error(const ForceField& field, std::size_t count, double radius,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int n = field.dim();
  double worst = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    Vec x(n);
    do {
      for (int i = 0; i < n; ++i) x(i) = unif(rng);
    } while (x.norm() > 1.0);
    x *= radius;
    const double h = 1e-5 * (1.0 + x.norm());
    for (int part = 0; part < 2; ++part) {
      const Potential& p = part == 0 ? field.long_part() : field.short_part();
      const Vec f = p.force(x);
      Vec fd(n);
      for (int i = 0; i < n; ++i) {
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        fd(i) = -(p.value(xp) - p.value(xm)) / (2.0 * h);
      }
      const double err = (f - fd).norm() / (f.norm() + 1e-8);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

namespace {

Vec vec2(double a, double b) { return make_vec({a, b}); }

ForceField demo_field(double factor, const std::string& name) {
  auto tail = PotentialTerm::power(2, 0.05 * factor, 1.0);
  auto bump = PotentialTerm::gaussian(2, 0.02 * factor, 0.7);
  bump.center = vec2(0.3, -0.2);
  DecayProfile prof;
  prof.dim = 2;
  prof.alpha = 1.0;
  prof.beta_long = {0.08 * factor, 0.095 * factor, 0.2 * factor};
  prof.beta_short = {0.055 * factor, 0.2 * factor, 1.1 * factor};
  return ForceField(name, Potential({tail}), Potential({bump}), prof);
}

ForceField fractional_field(double factor, const std::string& name) {
  auto tail = PotentialTerm::power(2, 0.05 * factor, 0.75);
  auto bump = PotentialTerm::gaussian(2, 0.02 * factor, 0.7);
  bump.center = vec2(0.3, -0.2);
  DecayProfile prof;
  prof.dim = 2;
  prof.alpha = 0.75;
  prof.beta_long = {0.075 * factor, 0.065 * factor, 0.125 * factor};
  prof.beta_short = {0.047 * factor, 0.17 * factor, 0.9 * factor};
  return ForceField(name, Potential({tail}), Potential({bump}), prof);
}

}  // namespace

std::vector<std::string> builtin_field_names() {
  return {"zero",        "demo",         "demo_weak",   "long_only",  "short_only", "short_power",
          "coulomb_like", "anisotropic", "fractional", "fractional_weak", "well"};
}

ForceField builtin_field(const std::string& name) {
  if (name == "zero") {
    DecayProfile prof;
    return ForceField("zero", Potential{}, Potential{}, prof);
  }
  if (name == "demo") return demo_field(1.0, "demo");
  if (name == "demo_weak") return demo_field(0.25, "demo_weak");
  if (name == "long_only") {
    ForceField f = demo_field(1.0, "long_only");
    return ForceField("long_only", f.long_part(), Potential{},
                      DecayProfile{2, 1.0, f.profile().beta_long, {0.0, 0.0, 0.0}});
  }
  if (name == "short_only") {
    ForceField f = demo_field(1.0, "short_only");
    return ForceField("short_only", Potential{}, f.short_part(),
                      DecayProfile{2, 1.0, {0.0, 0.0, 0.0}, f.profile().beta_short});
  }
  if (name == "short_power") {
    DecayProfile prof{2, 1.0, {0.0, 0.0, 0.0}, {0.115, 0.26, 0.82}};
    return ForceField("short_power", Potential{},
                      Potential({PotentialTerm::power(2, 0.05, 2.0)}), prof);
  }
  if (name == "coulomb_like") {
    auto tail = PotentialTerm::power(2, 0.05, 1.0, 0.5);
    auto bump = PotentialTerm::gaussian(2, 0.02, 0.7);
    DecayProfile prof{2, 1.0, {0.13, 0.19, 0.65}, {0.033, 0.12, 0.62}};
    return ForceField("coulomb_like", Potential({tail}), Potential({bump}), prof);
  }
  if (name == "anisotropic") {
    auto tail = PotentialTerm::power(2, 0.05, 1.0);
    auto bump = PotentialTerm::gaussian(2, 0.02, 1.0);
    bump.scales = vec2(0.9, 0.5);
    bump.center = vec2(-0.2, 0.25);
    DecayProfile prof{2, 1.0, {0.08, 0.095, 0.2}, {0.053, 0.215, 1.43}};
    return ForceField("anisotropic", Potential({tail}), Potential({bump}), prof);
  }
  if (name == "fractional") return fractional_field(1.0, "fractional");
  if (name == "fractional_weak") return fractional_field(0.25, "fractional_weak");
  if (name == "well") {
    DecayProfile prof{2, 1.0, {0.0, 0.0, 0.0}, {4.1, 14.0, 67.0}};
    return ForceField("well", Potential{}, Potential({PotentialTerm::gaussian(2, -2.0, 1.0)}),
                      prof);
  }
  throw ConfigError("unknown builtin field '" + name + "'");
}

namespace {

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

Vec json_vec(const nlohmann::json& j, int dim, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError(where + " must be an array of " + std::to_string(dim) + " numbers");
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = j.at(i).get<double>();
  return v;
}

std::array<double, 3> json_triple(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

PotentialTerm term_from_json(const nlohmann::json& j, int dim, double default_exponent,
                             const std::string& where) {
  reject_unknown(j, {"family", "strength", "exponent", "core", "center", "scales", "width"}, where);
  const std::string family = j.value("family", "power");
  PotentialTerm t;
  if (family == "power") {
    t = PotentialTerm::power(dim, j.at("strength").get<double>(),
                             j.value("exponent", default_exponent), j.value("core", 1.0));
  } else if (family == "gaussian") {
    t = PotentialTerm::gaussian(dim, j.at("strength").get<double>(), j.value("width", 1.0));
  } else {
    throw ConfigError("unknown potential family '" + family + "' in " + where);
  }
  if (j.contains("center")) t.center = json_vec(j["center"], dim, where + ".center");
  if (j.contains("scales")) t.scales = json_vec(j["scales"], dim, where + ".scales");
  if (!(t.scales.minCoeff() > 0.0)) throw ConfigError(where + ": scales must be positive");
  if (t.family == TermFamily::kPower && !(t.core > 0.0))
    throw ConfigError(where + ": core must be positive");
  return t;
}

}  // namespace

ForceField field_from_json(const nlohmann::json& spec) {
  try {
    if (spec.contains("builtin")) {
      reject_unknown(spec, {"builtin", "scale"}, "field");
      ForceField f = builtin_field(spec["builtin"].get<std::string>());
      if (spec.contains("scale")) f = f.scaled(spec["scale"].get<double>());
      return f;
    }
    reject_unknown(spec, {"name", "dimension", "alpha", "long_range", "short_range", "profile"},
                   "field");
    DecayProfile prof;
    prof.dim = spec.value("dimension", 2);
    prof.alpha = spec.value("alpha", 1.0);
    if (prof.dim < 2 || prof.dim > kMaxDim) throw ConfigError("field.dimension out of range");
    const auto& p = spec.at("profile");
    reject_unknown(p, {"beta_long", "beta_short"}, "field.profile");
    prof.beta_long = json_triple(p.at("beta_long"), "field.profile.beta_long");
    prof.beta_short = json_triple(p.at("beta_short"), "field.profile.beta_short");
    std::vector<PotentialTerm> lt, st;
    if (spec.contains("long_range"))
      for (std::size_t i = 0; i < spec["long_range"].size(); ++i)
        lt.push_back(term_from_json(spec["long_range"][i], prof.dim, prof.alpha,
                                    "field.long_range[" + std::to_string(i) + "]"));
    if (spec.contains("short_range"))
      for (std::size_t i = 0; i < spec["short_range"].size(); ++i)
        st.push_back(term_from_json(spec["short_range"][i], prof.dim, prof.alpha + 1.0,
                                    "field.short_range[" + std::to_string(i) + "]"));
    return ForceField(spec.value("name", "custom"), Potential(std::move(lt)),
                      Potential(std::move(st)), prof);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("field: ") + e.what());
  }
}

}  // namespace newtonscat
