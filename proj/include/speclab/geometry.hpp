#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/rng.hpp"

namespace speclab {

/// Ambient coordinates; at most 3 components are used.
using Vec3 = std::array<double, 3>;

inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

enum class ManifoldKind { Torus, Sphere2 };

/// Flat torus T^d (unit box with wrap metric, d in {1,2,3}) or the unit
/// sphere S^2 in R^3. Torus points live in [0,1)^d; sphere points are unit
/// vectors. The wrap metric doubles as the graph ("ambient") metric on the
/// torus; the sphere uses chordal distance for graphs and arc length as the
/// geodesic distance.
struct ManifoldModel {
  ManifoldKind kind = ManifoldKind::Torus;
  int intrinsic_dim = 2;
  int ambient_dim = 2;
  double volume = 1.0;

  bool is_torus() const { return kind == ManifoldKind::Torus; }
  std::string name() const {
    if (is_torus()) return "torus" + std::to_string(intrinsic_dim);
    return "sphere2";
  }
};

inline ManifoldModel make_manifold(ManifoldKind kind, int d = 2) {
  ManifoldModel m;
  m.kind = kind;
  if (kind == ManifoldKind::Torus) {
    if (d < 1 || d > 3) throw ConfigError("make_manifold: torus dimension must be 1, 2 or 3");
    m.intrinsic_dim = d;
    m.ambient_dim = d;
    m.volume = 1.0;
  } else {
    m.intrinsic_dim = 2;
    m.ambient_dim = 3;
    m.volume = 4.0 * M_PI;
  }
  return m;
}

inline ManifoldModel make_manifold(const std::string& name) {
  if (name == "torus1") return make_manifold(ManifoldKind::Torus, 1);
  if (name == "torus2") return make_manifold(ManifoldKind::Torus, 2);
  if (name == "torus3") return make_manifold(ManifoldKind::Torus, 3);
  if (name == "sphere2") return make_manifold(ManifoldKind::Sphere2);
  throw ConfigError("make_manifold: unknown manifold '" + name + "'");
}

/// n sample points with their sampling metadata.
struct PointCloud {
  ManifoldModel model;
  std::vector<Vec3> points;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
};

inline double wrap_unit(double t) {
  t -= std::floor(t);
  return t < 1.0 ? t : 0.0;  // guards floor(0.9999...) edge
}

/// Signed wrapped difference a-b in (-1/2, 1/2].
inline double wrap_diff(double a, double b) {
  double d = a - b;
  d -= std::round(d);
  return d;
}

/// Component-wise wrapped difference x-y on the torus (zero-padded past d).
inline Vec3 torus_diff(const Vec3& x, const Vec3& y, int d) {
  Vec3 out{0.0, 0.0, 0.0};
  for (int k = 0; k < d; ++k) out[k] = wrap_diff(x[k], y[k]);
  return out;
}

/// Distance used to build graphs: wrap metric on the torus, chordal
/// (Euclidean) distance on the sphere.
inline double ambient_distance(const ManifoldModel& m, const Vec3& x, const Vec3& y) {
  if (m.is_torus()) {
    double s = 0.0;
    for (int k = 0; k < m.intrinsic_dim; ++k) {
      const double d = wrap_diff(x[k], y[k]);
      s += d * d;
    }
    return std::sqrt(s);
  }
  Vec3 d{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
  return norm3(d);
}

/// Geodesic distance.
inline double distance(const ManifoldModel& m, const Vec3& x, const Vec3& y) {
  if (m.is_torus()) return ambient_distance(m, x, y);
  double c = dot3(x, y);
  c = std::fmin(1.0, std::fmax(-1.0, c));
  return std::acos(c);
}

/// Logarithmic map at x evaluated at y: the tangent vector v with
/// |v| = d(x,y) and exp_x(v) = y.
inline Vec3 log_map(const ManifoldModel& m, const Vec3& x, const Vec3& y) {
  if (m.is_torus()) return torus_diff(y, x, m.intrinsic_dim);
  double c = dot3(x, y);
  c = std::fmin(1.0, std::fmax(-1.0, c));
  const double theta = std::acos(c);
  if (theta > M_PI - 1e-9)
    throw DomainError("log_map: antipodal points are at the cut locus");
  if (theta < 1e-14) return Vec3{0.0, 0.0, 0.0};
  // y - <x,y> x is the tangential part of y; rescale to length theta.
  Vec3 t{y[0] - c * x[0], y[1] - c * x[1], y[2] - c * x[2]};
  const double tn = norm3(t);
  const double s = theta / tn;
  return Vec3{s * t[0], s * t[1], s * t[2]};
}

/// Exponential map at x of a tangent vector v.
inline Vec3 exp_map(const ManifoldModel& m, const Vec3& x, const Vec3& v) {
  if (m.is_torus()) {
    Vec3 out{0.0, 0.0, 0.0};
    for (int k = 0; k < m.intrinsic_dim; ++k) out[k] = wrap_unit(x[k] + v[k]);
    return out;
  }
  const double vn = norm3(v);
  if (vn < 1e-300) return x;
  const double c = std::cos(vn), s = std::sin(vn) / vn;
  Vec3 out{c * x[0] + s * v[0], c * x[1] + s * v[1], c * x[2] + s * v[2]};
  const double on = norm3(out);
  return Vec3{out[0] / on, out[1] / on, out[2] / on};
}

/// Projects an ambient vector onto the tangent space at x.
inline Vec3 tangent_project(const ManifoldModel& m, const Vec3& x, const Vec3& v) {
  if (m.is_torus()) {
    Vec3 out = v;
    for (int k = m.intrinsic_dim; k < 3; ++k) out[k] = 0.0;
    return out;
  }
  const double c = dot3(x, v);
  return Vec3{v[0] - c * x[0], v[1] - c * x[1], v[2] - c * x[2]};
}

/// n i.i.d. uniform samples: per-coordinate uniform on the torus, normalized
/// Gaussians on the sphere.
inline PointCloud sample_uniform(const ManifoldModel& m, std::size_t n, std::uint64_t seed) {
  PointCloud cloud;
  cloud.model = m;
  cloud.seed = seed;
  cloud.points.resize(n);
  CounterRng rng(seed);
  if (m.is_torus()) {
    for (auto& p : cloud.points) {
      p = Vec3{0.0, 0.0, 0.0};
      for (int k = 0; k < m.intrinsic_dim; ++k) p[k] = rng.uniform();
    }
  } else {
    for (auto& p : cloud.points) {
      double nrm;
      do {
        p = Vec3{rng.normal(), rng.normal(), rng.normal()};
        nrm = norm3(p);
      } while (nrm < 1e-12);
      p = Vec3{p[0] / nrm, p[1] / nrm, p[2] / nrm};
    }
  }
  return cloud;
}

/// An orthonormal tangent basis at x (2 vectors on the sphere / T^2, d on T^d).
inline std::vector<Vec3> tangent_basis(const ManifoldModel& m, const Vec3& x) {
  std::vector<Vec3> basis;
  if (m.is_torus()) {
    for (int k = 0; k < m.intrinsic_dim; ++k) {
      Vec3 e{0.0, 0.0, 0.0};
      e[k] = 1.0;
      basis.push_back(e);
    }
    return basis;
  }
  // pick the ambient axis least aligned with x, then Gram-Schmidt
  int axis = 0;
  double best = std::abs(x[0]);
  for (int k = 1; k < 3; ++k)
    if (std::abs(x[k]) < best) best = std::abs(x[k]), axis = k;
  Vec3 e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  Vec3 t1 = tangent_project(m, x, e);
  const double n1 = norm3(t1);
  t1 = Vec3{t1[0] / n1, t1[1] / n1, t1[2] / n1};
  Vec3 t2{x[1] * t1[2] - x[2] * t1[1], x[2] * t1[0] - x[0] * t1[2], x[0] * t1[1] - x[1] * t1[0]};
  basis.push_back(t1);
  basis.push_back(t2);
  return basis;
}

}  // namespace speclab
