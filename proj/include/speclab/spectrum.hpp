#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/geometry.hpp"

namespace speclab {

/// One continuum eigenpair of the weighted operator -(1/rho) div(rho^2 grad f)
/// for the constant density 1/volume, normalized to unit L^2(rho) norm.
struct ContinuumEigenpair {
  double lambda = 0.0;
  int multiplicity = 1;
  std::function<double(const Vec3&)> eval;
  std::function<Vec3(const Vec3&)> grad;
};

/// The eigenspace a given 1-based index l falls into.
struct EigenLevel {
  double lambda = 0.0;
  std::vector<ContinuumEigenpair> basis;
};

namespace detail {

constexpr double kTwoPi = 6.28318530717958647692;

inline void torus_emit(std::vector<ContinuumEigenpair>& out, const std::array<int, 3>& k, int d) {
  const double k2 = static_cast<double>(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
  const double lambda = 4.0 * M_PI * M_PI * k2;
  auto phase = [k, d](const Vec3& x) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += k[a] * x[a];
    return kTwoPi * s;
  };
  if (k[0] == 0 && k[1] == 0 && k[2] == 0) {
    ContinuumEigenpair c;
    c.lambda = 0.0;
    c.eval = [](const Vec3&) { return 1.0; };
    c.grad = [](const Vec3&) { return Vec3{0.0, 0.0, 0.0}; };
    out.push_back(std::move(c));
    return;
  }
  const double amp = std::sqrt(2.0);
  ContinuumEigenpair cc;
  cc.lambda = lambda;
  cc.eval = [=](const Vec3& x) { return amp * std::cos(phase(x)); };
  cc.grad = [=](const Vec3& x) {
    const double s = -amp * kTwoPi * std::sin(phase(x));
    Vec3 g{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) g[a] = s * k[a];
    return g;
  };
  ContinuumEigenpair cs;
  cs.lambda = lambda;
  cs.eval = [=](const Vec3& x) { return amp * std::sin(phase(x)); };
  cs.grad = [=](const Vec3& x) {
    const double c = amp * kTwoPi * std::cos(phase(x));
    Vec3 g{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) g[a] = c * k[a];
    return g;
  };
  out.push_back(std::move(cc));
  out.push_back(std::move(cs));
}

/// Fourier modes of the flat unit torus, sorted by |k|^2; one representative
/// per {k,-k} pair, emitting cos and sin entries.
inline std::vector<ContinuumEigenpair> torus_spectrum(int d, std::size_t count) {
  std::vector<std::array<int, 3>> reps;
  int radius = 1;
  while (true) {
    reps.clear();
    for (int k0 = -radius; k0 <= radius; ++k0)
      for (int k1 = (d > 1 ? -radius : 0); k1 <= (d > 1 ? radius : 0); ++k1)
        for (int k2 = (d > 2 ? -radius : 0); k2 <= (d > 2 ? radius : 0); ++k2) {
          std::array<int, 3> k{k0, k1, k2};
          const bool zero = (k0 == 0 && k1 == 0 && k2 == 0);
          const bool positive = (k0 > 0) || (k0 == 0 && k1 > 0) || (k0 == 0 && k1 == 0 && k2 > 0);
          if (zero || positive) reps.push_back(k);
        }
    std::sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) {
      const int na = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
      const int nb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
      if (na != nb) return na < nb;
      return a < b;
    });
    // representatives fully inside the ball |k|^2 <= radius^2 are complete
    std::size_t complete = 0;
    for (const auto& k : reps) {
      if (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] <= radius * radius) ++complete;
    }
    if (2 * complete - 1 >= count) break;  // each nonzero rep yields 2 functions
    ++radius;
  }
  std::vector<ContinuumEigenpair> out;
  for (const auto& k : reps) {
    torus_emit(out, k, d);
    if (out.size() >= count + 8) break;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
  return out;
}

struct SpherePoly {
  int ell;
  double coeff;                                      // unit L^2(rho) scaling
  std::function<double(const Vec3&)> p;              // homogeneous harmonic polynomial
  std::function<Vec3(const Vec3&)> dp;               // its ambient gradient
};

/// Real spherical harmonics through ell = 3 as homogeneous harmonic
/// polynomials, scaled so the mean square over the sphere is 1.
inline const std::vector<SpherePoly>& sphere_table() {
  static const std::vector<SpherePoly> table = [] {
    std::vector<SpherePoly> t;
    auto add = [&t](int ell, double coeff, std::function<double(const Vec3&)> p,
                    std::function<Vec3(const Vec3&)> dp) {
      t.push_back(SpherePoly{ell, coeff, std::move(p), std::move(dp)});
    };
    add(0, 1.0, [](const Vec3&) { return 1.0; },
        [](const Vec3&) { return Vec3{0, 0, 0}; });
    const double c1 = std::sqrt(3.0);
    add(1, c1, [](const Vec3& v) { return v[0]; }, [](const Vec3&) { return Vec3{1, 0, 0}; });
    add(1, c1, [](const Vec3& v) { return v[1]; }, [](const Vec3&) { return Vec3{0, 1, 0}; });
    add(1, c1, [](const Vec3& v) { return v[2]; }, [](const Vec3&) { return Vec3{0, 0, 1}; });
    const double c2a = std::sqrt(15.0);
    add(2, c2a, [](const Vec3& v) { return v[0] * v[1]; },
        [](const Vec3& v) { return Vec3{v[1], v[0], 0}; });
    add(2, c2a, [](const Vec3& v) { return v[1] * v[2]; },
        [](const Vec3& v) { return Vec3{0, v[2], v[1]}; });
    add(2, c2a, [](const Vec3& v) { return v[0] * v[2]; },
        [](const Vec3& v) { return Vec3{v[2], 0, v[0]}; });
    add(2, std::sqrt(15.0) / 2.0, [](const Vec3& v) { return v[0] * v[0] - v[1] * v[1]; },
        [](const Vec3& v) { return Vec3{2 * v[0], -2 * v[1], 0}; });
    add(2, std::sqrt(5.0) / 2.0,
        [](const Vec3& v) { return 2 * v[2] * v[2] - v[0] * v[0] - v[1] * v[1]; },
        [](const Vec3& v) { return Vec3{-2 * v[0], -2 * v[1], 4 * v[2]}; });
    add(3, std::sqrt(7.0) / 2.0,
        [](const Vec3& v) {
          return 2 * v[2] * v[2] * v[2] - 3 * v[2] * (v[0] * v[0] + v[1] * v[1]);
        },
        [](const Vec3& v) {
          return Vec3{-6 * v[0] * v[2], -6 * v[1] * v[2],
                      6 * v[2] * v[2] - 3 * (v[0] * v[0] + v[1] * v[1])};
        });
    const double c3b = std::sqrt(21.0 / 8.0);
    add(3, c3b,
        [](const Vec3& v) { return v[0] * (4 * v[2] * v[2] - v[0] * v[0] - v[1] * v[1]); },
        [](const Vec3& v) {
          return Vec3{4 * v[2] * v[2] - 3 * v[0] * v[0] - v[1] * v[1], -2 * v[0] * v[1],
                      8 * v[0] * v[2]};
        });
    add(3, c3b,
        [](const Vec3& v) { return v[1] * (4 * v[2] * v[2] - v[0] * v[0] - v[1] * v[1]); },
        [](const Vec3& v) {
          return Vec3{-2 * v[0] * v[1], 4 * v[2] * v[2] - v[0] * v[0] - 3 * v[1] * v[1],
                      8 * v[1] * v[2]};
        });
    add(3, std::sqrt(105.0) / 2.0,
        [](const Vec3& v) { return v[2] * (v[0] * v[0] - v[1] * v[1]); },
        [](const Vec3& v) {
          return Vec3{2 * v[0] * v[2], -2 * v[1] * v[2], v[0] * v[0] - v[1] * v[1]};
        });
    add(3, std::sqrt(105.0), [](const Vec3& v) { return v[0] * v[1] * v[2]; },
        [](const Vec3& v) { return Vec3{v[1] * v[2], v[0] * v[2], v[0] * v[1]}; });
    const double c3d = std::sqrt(35.0 / 8.0);
    add(3, c3d, [](const Vec3& v) { return v[0] * (v[0] * v[0] - 3 * v[1] * v[1]); },
        [](const Vec3& v) {
          return Vec3{3 * (v[0] * v[0] - v[1] * v[1]), -6 * v[0] * v[1], 0};
        });
    add(3, c3d, [](const Vec3& v) { return v[1] * (3 * v[0] * v[0] - v[1] * v[1]); },
        [](const Vec3& v) {
          return Vec3{6 * v[0] * v[1], 3 * (v[0] * v[0] - v[1] * v[1]), 0};
        });
    return t;
  }();
  return table;
}

inline std::vector<ContinuumEigenpair> sphere_spectrum(std::size_t count) {
  const auto& table = sphere_table();
  if (count > table.size())
    throw CapabilityError("exact_spectrum: spherical harmonics implemented through order 3 (" +
                          std::to_string(table.size()) + " functions)");
  const double rho_bar = 1.0 / (4.0 * M_PI);
  std::vector<ContinuumEigenpair> out;
  for (const auto& sp : table) {
    ContinuumEigenpair e;
    e.lambda = sp.ell * (sp.ell + 1) * rho_bar;
    const double c = sp.coeff;
    const int ell = sp.ell;
    auto p = sp.p;
    auto dp = sp.dp;
    e.eval = [c, p](const Vec3& x) { return c * p(x); };
    e.grad = [c, ell, p, dp](const Vec3& x) {
      const Vec3 g = dp(x);
      const double radial = ell * p(x);  // x . grad p for homogeneous degree ell
      return Vec3{c * (g[0] - radial * x[0]), c * (g[1] - radial * x[1]),
                  c * (g[2] - radial * x[2])};
    };
    out.push_back(std::move(e));
  }
  return out;
}

inline void fill_multiplicity(std::vector<ContinuumEigenpair>& spec) {
  const double tol = 1e-9;
  std::size_t i = 0;
  while (i < spec.size()) {
    std::size_t j = i;
    while (j < spec.size() && std::abs(spec[j].lambda - spec[i].lambda) <=
                                  tol * std::max(1.0, std::abs(spec[i].lambda)))
      ++j;
    for (std::size_t k = i; k < j; ++k) spec[k].multiplicity = static_cast<int>(j - i);
    i = j;
  }
}

}  // namespace detail

/// The first `count` eigenpairs of the constant-density operator on `m`,
/// sorted ascending with multiplicity.
inline std::vector<ContinuumEigenpair> exact_spectrum(const ManifoldModel& m, std::size_t count) {
  if (count < 1) throw ConfigError("exact_spectrum: count must be >= 1");
  std::vector<ContinuumEigenpair> spec;
  if (m.is_torus())
    spec = detail::torus_spectrum(m.intrinsic_dim, count);
  else
    spec = detail::sphere_spectrum(count);
  if (spec.size() < count)
    throw CapabilityError("exact_spectrum: requested more eigenpairs than implemented");
  detail::fill_multiplicity(spec);
  spec.resize(count);
  return spec;
}

/// Eigenspace containing the 1-based index l. The basis always spans the full
/// eigenspace even when l sits in its middle.
inline EigenLevel eigen_level(const ManifoldModel& m, std::size_t l) {
  if (l < 1) throw ConfigError("eigen_level: l must be >= 1");
  // enough entries that the level containing l is complete
  std::size_t count = l + 8;
  if (!m.is_torus()) count = 16;
  std::vector<ContinuumEigenpair> spec;
  while (true) {
    spec = exact_spectrum(m, count);
    const double lam = spec[l - 1].lambda;
    if (std::abs(spec.back().lambda - lam) > 1e-9 * std::max(1.0, lam)) break;
    if (!m.is_torus() && count >= 16) break;  // table exhausted; level 16 is complete
    count += 8;
  }
  EigenLevel level;
  level.lambda = spec[l - 1].lambda;
  for (auto& e : spec) {
    if (std::abs(e.lambda - level.lambda) <= 1e-9 * std::max(1.0, level.lambda))
      level.basis.push_back(e);
  }
  return level;
}

/// Spectral gap: distance from lambda_l to the nearest distinct eigenvalue.
inline double spectral_gap(const ManifoldModel& m, std::size_t l) {
  std::size_t count = std::max<std::size_t>(l + 10, 16);
  if (!m.is_torus()) count = 16;
  const auto spec = exact_spectrum(m, count);
  const double lam = spec[l - 1].lambda;
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& e : spec) {
    const double d = std::abs(e.lambda - lam);
    if (d > 1e-9 * std::max(1.0, lam)) gap = std::min(gap, d);
  }
  if (!m.is_torus() && l >= 9) {
    // ell=3 level: the next distinct value ell=4 is outside the table
    const double next = 20.0 / (4.0 * M_PI);
    gap = std::min(gap, std::abs(next - lam));
  }
  if (!std::isfinite(gap)) throw CapabilityError("spectral_gap: spectrum table too short");
  return gap;
}

}  // namespace speclab
