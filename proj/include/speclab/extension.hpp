#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/geometry.hpp"
#include "speclab/graph.hpp"
#include "speclab/kernels.hpp"
#include "speclab/norms.hpp"
#include "speclab/quadrature.hpp"
#include "speclab/spectrum.hpp"

namespace speclab {

/// psi(t) = integral_t^1 eta(s) s ds, the profile of the interpolation kernel
/// k_r(x,y) = r^{-d} psi(|x-y|/r). Closed form for the tent kernel; otherwise
/// a 2048-knot cubic Hermite table with exact endpoint slopes psi' = -eta(t) t
/// (relative error well below 1e-10).
class ExtensionKernel {
 public:
  ExtensionKernel(const Kernel& eta, double r, int dim) : eta_(eta), r_(r), dim_(dim) {
    if (!(r > 0.0)) throw ConfigError("ExtensionKernel: bandwidth must be positive");
    if (eta_.kind != KernelKind::Tent) build_table();
  }

  double bandwidth() const { return r_; }
  int dim() const { return dim_; }
  const Kernel& base() const { return eta_; }

  double psi(double t) const {
    if (t >= 1.0) return 0.0;
    if (t < 0.0) t = 0.0;
    if (eta_.kind == KernelKind::Tent)
      return 1.0 / 6.0 - 0.5 * t * t + t * t * t / 3.0;
    const double u = t * kKnots;
    std::size_t k = static_cast<std::size_t>(u);
    if (k >= kKnots) k = kKnots - 1;
    const double h = 1.0 / kKnots;
    const double s = u - k;  // in [0,1)
    const double p0 = table_[k], p1 = table_[k + 1];
    const double d0 = slope(k * h) * h, d1 = slope((k + 1) * h) * h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * p1 +
           (s3 - s2) * d1;
  }

 private:
  static constexpr std::size_t kKnots = 2048;
  Kernel eta_;
  double r_;
  int dim_;
  std::vector<double> table_;

  double slope(double t) const { return -eta_(t) * t; }

  void build_table() {
    table_.assign(kKnots + 1, 0.0);
    const double h = 1.0 / kKnots;
    // suffix sums of per-segment integrals
    for (std::size_t k = kKnots; k-- > 0;) {
      const double seg =
          integrate([this](double s) { return eta_(s) * s; }, k * h, (k + 1) * h, 1e-15);
      table_[k] = table_[k + 1] + seg;
    }
  }
};

struct ExtensionValue {
  double value = 0.0;
  Vec3 gradient{0.0, 0.0, 0.0};
  double theta = 0.0;  // kernel mass seen at the point, (1/(n r^d)) sum psi
};

/// Normalized kernel interpolation of graph functions to the manifold,
///   (Lambda_r u)(x) = sum_j u_j k_r(x, x_j) / sum_j k_r(x, x_j),
/// with its tangential gradient from the analytic quotient rule.
class Extender {
 public:
  Extender(const PointCloud& cloud, double r, const Kernel& eta)
      : cloud_(&cloud),
        r_(r),
        kernel_(eta, r, cloud.model.intrinsic_dim),
        index_(cloud, r) {}

  double bandwidth() const { return r_; }
  const ExtensionKernel& kernel() const { return kernel_; }

  /// Lambda_r u at x; throws CoverageError when no sample lies within r.
  double value(const std::vector<double>& u, const Vec3& x) const {
    double num = 0.0, den = 0.0;
    index_.for_candidates(x, [&](int j) {
      const double dist = ambient_distance(cloud_->model, x, cloud_->points[j]);
      if (dist >= r_) return;
      const double w = kernel_.psi(dist / r_);
      num += u[j] * w;
      den += w;
    });
    if (den <= 0.0) throw CoverageError("extend: no samples within bandwidth");
    return num / den;
  }

  /// Value and tangential gradient in one sweep.
  ExtensionValue value_and_grad(const std::vector<double>& u, const Vec3& x) const {
    const auto& m = cloud_->model;
    double num = 0.0, den = 0.0;
    Vec3 gnum{0.0, 0.0, 0.0}, gden{0.0, 0.0, 0.0};
    index_.for_candidates(x, [&](int j) {
      const Vec3& p = cloud_->points[j];
      const double dist = ambient_distance(m, x, p);
      if (dist >= r_) return;
      const double t = dist / r_;
      const double w = kernel_.psi(t);
      num += u[j] * w;
      den += w;
      const double e = kernel_.base()(t);
      if (e > 0.0) {
        // grad_x k_r = r^{-(d+2)} eta(|x-y|/r) P_x(y - x), common factors deferred
        Vec3 diff;
        if (m.is_torus())
          diff = torus_diff(p, x, m.intrinsic_dim);
        else
          diff = Vec3{p[0] - x[0], p[1] - x[1], p[2] - x[2]};
        gnum[0] += u[j] * e * diff[0];
        gnum[1] += u[j] * e * diff[1];
        gnum[2] += u[j] * e * diff[2];
        gden[0] += e * diff[0];
        gden[1] += e * diff[1];
        gden[2] += e * diff[2];
      }
    });
    if (den <= 0.0) throw CoverageError("extend: no samples within bandwidth");
    ExtensionValue out;
    out.value = num / den;
    const double inv = 1.0 / (r_ * r_ * den);
    Vec3 g{(gnum[0] - out.value * gden[0]) * inv, (gnum[1] - out.value * gden[1]) * inv,
           (gnum[2] - out.value * gden[2]) * inv};
    out.gradient = tangent_project(m, x, g);
    const double nd = static_cast<double>(cloud_->size());
    out.theta = den / (nd * std::pow(r_, m.intrinsic_dim));
    return out;
  }

  Vec3 gradient(const std::vector<double>& u, const Vec3& x) const {
    return value_and_grad(u, x).gradient;
  }

 private:
  const PointCloud* cloud_;
  double r_;
  ExtensionKernel kernel_;
  CellIndex index_;
};

/// One-off evaluations (tests, diagnostics). Studies should hold an Extender.
inline double extend(const std::vector<double>& u, const PointCloud& cloud, double r,
                     const Kernel& eta, const Vec3& x) {
  return Extender(cloud, r, eta).value(u, x);
}

inline Vec3 extend_grad(const std::vector<double>& u, const PointCloud& cloud, double r,
                        const Kernel& eta, const Vec3& x) {
  return Extender(cloud, r, eta).gradient(u, x);
}

struct ExtensionErrorResult {
  double l2_err = 0.0;  // || Lambda_{eps/2} phi - f ||_L2(M), Monte Carlo
  double h1_err = 0.0;  // || grad Lambda_{eps/2} phi - grad f ||_L2(M)
  double se_l2_sq = 0.0;
  double se_h1_sq = 0.0;
  std::size_t mc_points = 0;
  std::size_t coverage_misses = 0;
  bool coverage_flag = false;  // raised when misses reach 0.1%
};

/// Monte Carlo H1(M) error of the extended eigenvector against the aligned
/// continuum eigenfunction; bandwidth fixed at eps/2. Points without coverage
/// are excluded from the estimate but counted and flagged.
inline ExtensionErrorResult extension_h1_error(const std::vector<double>& phi,
                                               const EigenLevel& level, const PointCloud& cloud,
                                               double epsilon, std::size_t n_mc,
                                               std::uint64_t seed, const Kernel& eta) {
  const auto& model = cloud.model;
  const AlignedEigenfunction aligned = align_to_level(phi, level, cloud);
  Extender ext(cloud, epsilon / 2.0, eta);
  const PointCloud mc = sample_uniform(model, n_mc, seed);

  double sa = 0.0, sa2 = 0.0, sb = 0.0, sb2 = 0.0;
  std::size_t used = 0, misses = 0;
  for (const auto& x : mc.points) {
    ExtensionValue ev;
    try {
      ev = ext.value_and_grad(phi, x);
    } catch (const CoverageError&) {
      ++misses;
      continue;
    }
    const double dv = ev.value - aligned.eval(x);
    const Vec3 gf = aligned.grad(x);
    const double gx = ev.gradient[0] - gf[0];
    const double gy = ev.gradient[1] - gf[1];
    const double gz = ev.gradient[2] - gf[2];
    const double a = dv * dv;
    const double b = gx * gx + gy * gy + gz * gz;
    sa += a;
    sa2 += a * a;
    sb += b;
    sb2 += b * b;
    ++used;
  }
  ExtensionErrorResult out;
  out.mc_points = n_mc;
  out.coverage_misses = misses;
  out.coverage_flag = (static_cast<double>(misses) >= 0.001 * static_cast<double>(n_mc));
  if (used == 0) throw CoverageError("extension_h1_error: no covered Monte Carlo points");
  const double nm = static_cast<double>(used);
  const double vol = model.volume;
  out.l2_err = std::sqrt(vol * sa / nm);
  out.h1_err = std::sqrt(vol * sb / nm);
  out.se_l2_sq = vol * std::sqrt(std::max(0.0, sa2 / nm - (sa / nm) * (sa / nm)) / nm);
  out.se_h1_sq = vol * std::sqrt(std::max(0.0, sb2 / nm - (sb / nm) * (sb / nm)) / nm);
  return out;
}

}  // namespace speclab
