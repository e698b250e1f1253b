#pragma once

#include <algorithm>
#include <random>

#include "newtonscat/estimates.hpp"
#include "newtonscat/high_energy.hpp"

namespace newtonscat::gen {

using Rng = std::mt19937_64;

inline Vec random_unit(Rng& rng, int n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v / v.norm();
}

/// Random vector orthogonal to theta with length uniform in [0, max_norm].
inline Vec random_perp(Rng& rng, const Vec& theta, double max_norm) {
  Vec x = random_unit(rng, static_cast<int>(theta.size()));
  x -= x.dot(theta) * theta;
  std::uniform_real_distribution<double> u(0.0, max_norm);
  return x * (u(rng) / x.norm());
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

struct Input {
  Vec v, x;
};

/// (v_-, x_-) with |x_-| <= x_max and |v_-| = factor times the high-energy
/// threshold of the flavor at |x_-|.
inline Input admissible_input(const ForceField& field, Rng& rng, double factor, double x_max,
                              Flavor flavor = Flavor::kStandard) {
  const Vec theta = random_unit(rng, field.dim());
  const Vec x = random_perp(rng, theta, x_max);
  const Flavor tf = flavor == Flavor::kModified ? Flavor::kModified : Flavor::kStandard;
  const double s = factor * std::max(line_threshold(field, x.norm(), tf), mu_threshold(field.profile()));
  return {s * theta, x};
}

}  // namespace newtonscat::gen

#include "newtonscat/scattering.hpp"

namespace newtonscat::gen {

/// Random smooth element of M_r on the grid with norm uniform in (0, r].
/// `speed` sets the time scale of the oscillation.
inline MrFunction random_mr(Rng& rng, std::shared_ptr<const TimeGrid> grid, int dim, double r, double speed) {
  Vec amp(dim), freq(dim), phase(dim);
  for (int i = 0; i < dim; ++i) {
    amp(i) = uniform(rng, -1.0, 1.0);
    freq(i) = uniform(rng, 0.5, 4.0);
    phase(i) = uniform(rng, 0.0, 6.283185307179586);
  }
  const double growth = uniform(rng, 0.0, 1.0);
  auto eval = [&](const std::vector<double>& ts) {
    Path p(dim, static_cast<Eigen::Index>(ts.size()));
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double t = ts[k];
      const double envelope = t > 0.0 ? 1.0 + growth * t : 1.0;
      for (int i = 0; i < dim; ++i)
        p(i, static_cast<Eigen::Index>(k)) = amp(i) * std::sin(freq(i) * std::tanh(speed * t) + phase(i)) * envelope;
    }
    return p;
  };
  MrFunction f;
  f.grid = grid;
  f.r = r;
  f.values = eval(grid->times());
  f.edges = eval(grid->edge_times());
  const double scale = uniform(rng, 0.05, 1.0) * r / mr_norm(*grid, f.values, &f.edges);
  f.values *= scale;
  f.edges *= scale;
  return f;
}

inline MrFunction difference(const MrFunction& a, const MrFunction& b) {
  MrFunction d = a;
  d.values -= b.values;
  d.edges -= b.edges;
  d.rates.resize(0, 0);
  return d;
}

}  // namespace newtonscat::gen
