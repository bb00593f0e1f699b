#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/geometry.hpp"
#include "speclab/rng.hpp"

namespace speclab {

/// Smooth scalar mollifier: e * exp(1/(64 t^2 - 1)) for t < 1/8, else 0.
/// The leading constant makes the peak value mollifier(0) = 1.
inline double mollifier(double t) {
  if (t >= 0.125) return 0.0;
  return std::exp(1.0) * std::exp(1.0 / (64.0 * t * t - 1.0));
}

inline double mollifier_deriv(double t) {
  if (t >= 0.125 || t <= 0.0) return 0.0;
  const double q = 64.0 * t * t - 1.0;
  return mollifier(t) * (-128.0 * t) / (q * q);
}

enum class DensityKind { Uniform, Bump };

/// Density on a manifold: uniform (1/volume) or the bump-perturbed family
///   rho_c = 1 + m^{-2} sum_i c_i a_i,  a_i = phi(m(x - b_i)),
/// where the template phi is a positive/negative mollifier pair per cube of
/// the m^d partition of the torus, each bump of support radius 1/(8m).
struct DensityModel {
  ManifoldModel model;
  DensityKind kind = DensityKind::Uniform;
  int m = 0;                  // cubes per axis (bump only)
  std::vector<int> signs;     // one entry in {-1,+1} per cube (bump only)
  double rho_min = 1.0;
  double rho_max = 1.0;

  std::string name() const {
    if (kind == DensityKind::Uniform) return "uniform";
    std::string s = "bump(m=" + std::to_string(m) + ",signs=";
    for (int c : signs) s += (c > 0 ? '+' : '-');
    return s + ")";
  }

  int cube_index(const Vec3& x) const {
    int id = 0;
    for (int a = 0; a < model.intrinsic_dim; ++a) {
      int c = static_cast<int>(std::floor(x[a] * m));
      c = std::min(m - 1, std::max(0, c));
      id = id * m + c;
    }
    return id;
  }

  // local template value/gradient in cube coordinates y = m (x - b_i)
  double template_value(const Vec3& y) const {
    const int d = model.intrinsic_dim;
    double rp = 0.0, rm = 0.0;
    for (int a = 0; a < d; ++a) {
      rp += (y[a] - 0.25) * (y[a] - 0.25);
      rm += (y[a] + 0.25) * (y[a] + 0.25);
    }
    return mollifier(std::sqrt(rp)) - mollifier(std::sqrt(rm));
  }

  Vec3 template_grad(const Vec3& y) const {
    const int d = model.intrinsic_dim;
    Vec3 g{0.0, 0.0, 0.0};
    double rp = 0.0, rm = 0.0;
    for (int a = 0; a < d; ++a) {
      rp += (y[a] - 0.25) * (y[a] - 0.25);
      rm += (y[a] + 0.25) * (y[a] + 0.25);
    }
    rp = std::sqrt(rp);
    rm = std::sqrt(rm);
    if (rp > 0.0 && rp < 0.125) {
      const double f = mollifier_deriv(rp) / rp;
      for (int a = 0; a < d; ++a) g[a] += f * (y[a] - 0.25);
    }
    if (rm > 0.0 && rm < 0.125) {
      const double f = mollifier_deriv(rm) / rm;
      for (int a = 0; a < d; ++a) g[a] -= f * (y[a] + 0.25);
    }
    return g;
  }

  double evaluate(const Vec3& x) const {
    if (kind == DensityKind::Uniform) return 1.0 / model.volume;
    const int i = cube_index(x);
    Vec3 y{0.0, 0.0, 0.0};
    int id = i;
    int coords[3] = {0, 0, 0};
    for (int a = model.intrinsic_dim - 1; a >= 0; --a) {
      coords[a] = id % m;
      id /= m;
    }
    for (int a = 0; a < model.intrinsic_dim; ++a) {
      const double b = (coords[a] + 0.5) / m;
      y[a] = m * wrap_diff(x[a], b);
    }
    return 1.0 + signs[i] * template_value(y) / (static_cast<double>(m) * m);
  }

  Vec3 gradient(const Vec3& x) const {
    Vec3 g{0.0, 0.0, 0.0};
    if (kind == DensityKind::Uniform) return g;
    const int i = cube_index(x);
    Vec3 y{0.0, 0.0, 0.0};
    int id = i;
    int coords[3] = {0, 0, 0};
    for (int a = model.intrinsic_dim - 1; a >= 0; --a) {
      coords[a] = id % m;
      id /= m;
    }
    for (int a = 0; a < model.intrinsic_dim; ++a) {
      const double b = (coords[a] + 0.5) / m;
      y[a] = m * wrap_diff(x[a], b);
    }
    const Vec3 gy = template_grad(y);
    for (int a = 0; a < model.intrinsic_dim; ++a) g[a] = signs[i] * gy[a] / m;
    return g;
  }
};

inline DensityModel uniform_density(const ManifoldModel& model) {
  DensityModel rho;
  rho.model = model;
  rho.kind = DensityKind::Uniform;
  rho.rho_min = rho.rho_max = 1.0 / model.volume;
  return rho;
}

inline DensityModel bump_density(const ManifoldModel& model, int m, std::vector<int> signs) {
  if (!model.is_torus()) throw CapabilityError("bump_density: torus only");
  if (m < 2) throw ConfigError("bump_density: m must be >= 2");
  std::size_t expected = 1;
  for (int a = 0; a < model.intrinsic_dim; ++a) expected *= static_cast<std::size_t>(m);
  if (signs.size() != expected)
    throw ConfigError("bump_density: sign vector must have length m^d = " +
                      std::to_string(expected));
  for (int c : signs)
    if (c != 1 && c != -1) throw ConfigError("bump_density: signs must be +1 or -1");
  DensityModel rho;
  rho.model = model;
  rho.kind = DensityKind::Bump;
  rho.m = m;
  rho.signs = std::move(signs);
  rho.rho_min = 1.0 - 1.0 / (static_cast<double>(m) * m);
  rho.rho_max = 1.0 + 1.0 / (static_cast<double>(m) * m);
  return rho;
}

/// Rejection sampling with the uniform proposal and envelope rho_max.
/// `proposals_out`, when given, receives the total proposal count.
inline PointCloud sample(const DensityModel& rho, std::size_t n, std::uint64_t seed,
                         std::size_t* proposals_out = nullptr) {
  if (rho.kind == DensityKind::Uniform) {
    if (proposals_out) *proposals_out = n;
    return sample_uniform(rho.model, n, seed);
  }
  PointCloud cloud;
  cloud.model = rho.model;
  cloud.seed = seed;
  cloud.points.reserve(n);
  CounterRng rng(seed);
  CounterRng accept_rng = rng.substream(0x5151);
  std::size_t proposals = 0;
  const int d = rho.model.intrinsic_dim;
  while (cloud.points.size() < n) {
    Vec3 p{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) p[a] = rng.uniform();
    ++proposals;
    if (accept_rng.uniform() * rho.rho_max <= rho.evaluate(p)) cloud.points.push_back(p);
  }
  if (proposals_out) *proposals_out = proposals;
  return cloud;
}

/// KL(rho1 || rho2) by periodic trapezoid quadrature on a uniform grid; a
/// half-resolution pass must agree to 1e-8 or the value is rejected.
inline double kl_divergence(const DensityModel& rho1, const DensityModel& rho2,
                            int grid_per_axis = 0) {
  if (!rho1.model.is_torus() || !rho2.model.is_torus())
    throw CapabilityError("kl_divergence: torus densities only");
  if (rho1.model.intrinsic_dim != rho2.model.intrinsic_dim)
    throw ConfigError("kl_divergence: dimension mismatch");
  const int d = rho1.model.intrinsic_dim;
  if (grid_per_axis <= 0) grid_per_axis = (d == 1) ? 2048 : 512;
  if (d > 2) throw CapabilityError("kl_divergence: d <= 2 grids only");

  auto quad = [&](int N) {
    double acc = 0.0;
    std::size_t count = 0;
    const int ny = (d == 2) ? N : 1;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < ny; ++j) {
        Vec3 x{(i + 0.5) / N, (j + 0.5) / ny, 0.0};
        if (d == 1) x[1] = 0.0;
        const double r1 = rho1.evaluate(x);
        const double r2 = rho2.evaluate(x);
        if (r2 <= 0.0) throw DomainError("kl_divergence: rho2 must be positive");
        if (r1 > 0.0) acc += r1 * std::log(r1 / r2);
        ++count;
      }
    return acc / static_cast<double>(count);
  };
  const double fine = quad(grid_per_axis);
  const double coarse = quad(grid_per_axis / 2);
  if (std::abs(fine - coarse) > 1e-8)
    throw NumericalError("kl_divergence: quadrature not resolved (Richardson check failed)");
  return fine;
}

/// chi^2-style upper bound for KL: integral (rho1-rho2)^2 / rho2.
inline double kl_chi2_bound(const DensityModel& rho1, const DensityModel& rho2,
                            int grid_per_axis = 0) {
  if (!rho1.model.is_torus()) throw CapabilityError("kl_chi2_bound: torus densities only");
  const int d = rho1.model.intrinsic_dim;
  if (grid_per_axis <= 0) grid_per_axis = (d == 1) ? 2048 : 512;
  double acc = 0.0;
  std::size_t count = 0;
  const int ny = (d == 2) ? grid_per_axis : 1;
  for (int i = 0; i < grid_per_axis; ++i)
    for (int j = 0; j < ny; ++j) {
      Vec3 x{(i + 0.5) / grid_per_axis, (j + 0.5) / ny, 0.0};
      const double r1 = rho1.evaluate(x);
      const double r2 = rho2.evaluate(x);
      acc += (r1 - r2) * (r1 - r2) / r2;
      ++count;
    }
  return acc / static_cast<double>(count);
}

/// Packing predicate: at least `fraction` of the entries disagree
/// (boundary inclusive; defaults to 1/4 over the full index set).
inline bool sufficiently_different(const std::vector<int>& c1, const std::vector<int>& c2,
                                   double fraction = 0.25) {
  if (c1.size() != c2.size()) throw ConfigError("sufficiently_different: length mismatch");
  std::size_t disagreements = 0;
  for (std::size_t i = 0; i < c1.size(); ++i)
    if (c1[i] != c2[i]) ++disagreements;
  return static_cast<double>(disagreements) >= fraction * static_cast<double>(c1.size()) - 1e-12;
}

}  // namespace speclab
