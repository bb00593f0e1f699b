#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/geometry.hpp"
#include "speclab/graph.hpp"
#include "speclab/linalg.hpp"
#include "speclab/spectrum.hpp"

namespace speclab {

/// Discrete H1 energy (the squared seminorm):
///   (1/(n^2 eps^{d+2})) sum_{x,y} eta(|x-y|/eps) (u(x)-u(y))^2.
/// Zero iff u is constant on every connected component.
inline double h1_disc(const std::vector<double>& u, const WeightedGraph& g) {
  if (u.size() != g.n) throw ConfigError("h1_disc: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::uint64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
      const double d = u[i] - u[g.col[k]];
      acc += g.weight[k] * d * d;
    }
  const double nn = static_cast<double>(g.n) * static_cast<double>(g.n);
  return 2.0 * acc / (nn * std::pow(g.epsilon, g.dim + 2));
}

inline double h1_norm(const std::vector<double>& u, const WeightedGraph& g) {
  return std::sqrt(std::max(0.0, h1_disc(u, g)));
}

/// Exact dual seminorm via the pseudoinverse quadratic form:
///   ||h||_{H^-1} = sqrt(<h~, (sigma_eta L)^+ h~>).
inline double hminus1_exact(const std::vector<double>& h, const LaplacianOperator& rescaled,
                            double sigma_eta, double tol = 1e-10) {
  if (rescaled.components() != 1)
    throw DisconnectedGraphError("hminus1_exact: graph has " +
                                     std::to_string(rescaled.components()) + " components",
                                 rescaled.components());
  ScaledOperator<LaplacianOperator> energy(rescaled, sigma_eta);
  return std::sqrt(pinv_quadform(energy, h, tol));
}

/// Nested triadic partitions of the unit torus from scale ~eps (level 1) up
/// to the whole torus (level m), with per-cell point-index lists. The level-p
/// cell side is 3^{p-m} with 3^m the smallest power of three >= 1/eps.
class CubeHierarchy {
 public:
  CubeHierarchy(const PointCloud& cloud, double epsilon) {
    const auto& model = cloud.model;
    if (!model.is_torus()) throw CapabilityError("CubeHierarchy: torus only");
    if (!(epsilon > 0.0) || epsilon > 1.0) throw ConfigError("CubeHierarchy: bad epsilon");
    d_ = model.intrinsic_dim;
    n_ = cloud.size();
    m_ = 1;
    while (std::pow(3.0, m_) + 1e-12 < 1.0 / epsilon) ++m_;
    levels_.resize(m_);
    for (int p = 1; p <= m_; ++p) {
      Level& lv = levels_[p - 1];
      lv.cells_per_axis = 1;
      for (int q = 0; q < m_ - p; ++q) lv.cells_per_axis *= 3;
      int total = 1;
      for (int a = 0; a < d_; ++a) total *= lv.cells_per_axis;
      lv.cell_count = total;
      std::vector<int> counts(total + 1, 0);
      std::vector<int> ids(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        ids[i] = cell_of(cloud.points[i], lv.cells_per_axis);
        ++counts[ids[i] + 1];
      }
      for (int c = 0; c < total; ++c) counts[c + 1] += counts[c];
      lv.start = counts;
      lv.point = std::vector<int>(n_);
      std::vector<int> cursor(lv.start.begin(), lv.start.end() - 1);
      for (std::size_t i = 0; i < n_; ++i) lv.point[cursor[ids[i]]++] = static_cast<int>(i);
    }
  }

  int levels() const { return m_; }
  int dim() const { return d_; }
  std::size_t points() const { return n_; }

  struct Level {
    int cells_per_axis = 1;
    int cell_count = 1;
    std::vector<int> start;  // size cell_count+1
    std::vector<int> point;  // point ids grouped by cell
  };

  const Level& level(int p) const { return levels_.at(p - 1); }

 private:
  int d_ = 2;
  int m_ = 1;
  std::size_t n_ = 0;
  std::vector<Level> levels_;

  int cell_of(const Vec3& x, int per_axis) const {
    int id = 0;
    for (int a = 0; a < d_; ++a) {
      int c = static_cast<int>(std::floor(x[a] * per_axis));
      c = std::min(per_axis - 1, std::max(0, c));
      id = id * per_axis + c;
    }
    return id;
  }
};

/// Multiscale dual-norm estimate (unit constants on both terms):
///   eps ||h||_L2 + sum_p 3^{p-m} ( mean over level-p cells of
///                                  |mean of h over cell points|^2 )^{1/2},
/// empty cells contributing zero.
inline double multiscale_hminus1(const std::vector<double>& h, const CubeHierarchy& hier,
                                 double epsilon) {
  if (h.size() != hier.points()) throw ConfigError("multiscale_hminus1: dimension mismatch");
  double out = epsilon * l2bar_norm(h);
  for (int p = 1; p <= hier.levels(); ++p) {
    const auto& lv = hier.level(p);
    double acc = 0.0;
    for (int c = 0; c < lv.cell_count; ++c) {
      const int b = lv.start[c], e = lv.start[c + 1];
      if (b == e) continue;
      double s = 0.0;
      for (int k = b; k < e; ++k) s += h[lv.point[k]];
      const double cell_mean = s / (e - b);
      acc += cell_mean * cell_mean;
    }
    out += std::pow(3.0, p - hier.levels()) * std::sqrt(acc / lv.cell_count);
  }
  return out;
}

inline double multiscale_hminus1(const std::vector<double>& h, const PointCloud& cloud,
                                 double epsilon) {
  CubeHierarchy hier(cloud, epsilon);
  return multiscale_hminus1(h, hier, epsilon);
}

/// Restriction of a continuum function to the sample points.
inline std::vector<double> restrict_to_cloud(const std::function<double(const Vec3&)>& f,
                                             const PointCloud& cloud) {
  std::vector<double> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = f(cloud.points[i]);
  return out;
}

/// A continuum eigenfunction aligned to a discrete eigenvector: the L2bar
/// projection of phi onto the restricted exact eigenspace, renormalized to
/// unit continuum L2(rho) norm. Handles multiplicity and sign.
struct AlignedEigenfunction {
  std::vector<double> coeffs;      // in the level's orthonormal basis, |c|=1
  std::vector<double> restricted;  // combination evaluated on the cloud
  std::function<double(const Vec3&)> eval;
  std::function<Vec3(const Vec3&)> grad;
};

inline AlignedEigenfunction align_to_level(const std::vector<double>& phi, const EigenLevel& level,
                                           const PointCloud& cloud) {
  const std::size_t n = phi.size();
  const std::size_t b = level.basis.size();
  if (b == 0) throw DegenerateAlignmentError("align_to_level: empty basis");
  std::vector<std::vector<double>> F(b);
  for (std::size_t a = 0; a < b; ++a) F[a] = restrict_to_cloud(level.basis[a].eval, cloud);

  // Gram solve (basis is tiny: Gaussian elimination with partial pivoting)
  std::vector<double> G(b * b), rhs(b);
  for (std::size_t a = 0; a < b; ++a) {
    for (std::size_t c = 0; c < b; ++c) G[a * b + c] = l2bar_dot(F[a], F[c]);
    rhs[a] = l2bar_dot(F[a], phi);
  }
  std::vector<double> x(rhs);
  {
    std::vector<double> A(G);
    std::vector<std::size_t> piv(b);
    for (std::size_t c = 0; c < b; ++c) piv[c] = c;
    for (std::size_t c = 0; c < b; ++c) {
      std::size_t best = c;
      for (std::size_t r = c + 1; r < b; ++r)
        if (std::abs(A[r * b + c]) > std::abs(A[best * b + c])) best = r;
      if (std::abs(A[best * b + c]) < 1e-12)
        throw DegenerateAlignmentError("align_to_level: singular restricted Gram matrix");
      if (best != c) {
        for (std::size_t k = 0; k < b; ++k) std::swap(A[c * b + k], A[best * b + k]);
        std::swap(x[c], x[best]);
      }
      for (std::size_t r = c + 1; r < b; ++r) {
        const double f = A[r * b + c] / A[c * b + c];
        for (std::size_t k = c; k < b; ++k) A[r * b + k] -= f * A[c * b + k];
        x[r] -= f * x[c];
      }
    }
    for (std::size_t c = b; c-- > 0;) {
      for (std::size_t k = c + 1; k < b; ++k) x[c] -= A[c * b + k] * x[k];
      x[c] /= A[c * b + c];
    }
  }
  double cn = 0.0;
  for (double v : x) cn += v * v;
  cn = std::sqrt(cn);
  if (cn < 1e-10)
    throw DegenerateAlignmentError("align_to_level: eigenvector is orthogonal to the eigenspace");
  for (double& v : x) v /= cn;

  AlignedEigenfunction out;
  out.coeffs = x;
  out.restricted.assign(n, 0.0);
  for (std::size_t a = 0; a < b; ++a)
    for (std::size_t i = 0; i < n; ++i) out.restricted[i] += x[a] * F[a][i];
  std::vector<std::function<double(const Vec3&)>> evals;
  std::vector<std::function<Vec3(const Vec3&)>> grads;
  for (const auto& e : level.basis) {
    evals.push_back(e.eval);
    grads.push_back(e.grad);
  }
  auto coeffs = x;
  out.eval = [coeffs, evals](const Vec3& p) {
    double s = 0.0;
    for (std::size_t a = 0; a < coeffs.size(); ++a) s += coeffs[a] * evals[a](p);
    return s;
  };
  out.grad = [coeffs, grads](const Vec3& p) {
    Vec3 g{0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < coeffs.size(); ++a) {
      const Vec3 ga = grads[a](p);
      g[0] += coeffs[a] * ga[0];
      g[1] += coeffs[a] * ga[1];
      g[2] += coeffs[a] * ga[2];
    }
    return g;
  };
  return out;
}

/// Scale-invariant eigenpair error and its components.
struct ErrorRecord {
  double lambda_rel_err = 0.0;
  double l2_err = 0.0;
  double h1_err = 0.0;
  double e_l = 0.0;
};

/// E_l = |l_n - l|/l + (gamma/l) ||phi - f||_L2 + (gamma/sqrt(l)) ||phi - f||_H1,
/// with f realized by eigenspace projection of phi (multiplicity- and
/// sign-robust).
inline ErrorRecord error_functional(double lambda_nl, const std::vector<double>& phi_nl,
                                    const EigenLevel& level, double gamma_l,
                                    const WeightedGraph& graph, const PointCloud& cloud) {
  if (!(level.lambda > 0.0))
    throw ConfigError("error_functional: requires a positive continuum eigenvalue (l >= 2)");
  const AlignedEigenfunction aligned = align_to_level(phi_nl, level, cloud);
  std::vector<double> diff(phi_nl.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = phi_nl[i] - aligned.restricted[i];
  ErrorRecord rec;
  rec.lambda_rel_err = std::abs(lambda_nl - level.lambda) / level.lambda;
  rec.l2_err = l2bar_norm(diff);
  rec.h1_err = h1_norm(diff, graph);
  rec.e_l = rec.lambda_rel_err + (gamma_l / level.lambda) * rec.l2_err +
            (gamma_l / std::sqrt(level.lambda)) * rec.h1_err;
  return rec;
}

/// Gram-Schmidt projection residual ||phi - proj(phi)||_L2bar against a
/// restricted basis; invariant under rotations of the basis.
inline double subspace_residual(const std::vector<double>& phi,
                                const std::vector<std::vector<double>>& basis) {
  if (basis.empty()) throw ConfigError("subspace_residual: basis must be nonempty");
  std::vector<std::vector<double>> q;
  for (const auto& v : basis) {
    std::vector<double> w(v);
    for (const auto& u : q) {
      const double c = l2bar_dot(w, u);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * u[i];
    }
    const double nrm = l2bar_norm(w);
    const double orig = l2bar_norm(v);
    if (nrm < 1e-8 * std::max(1.0, orig))
      throw DegenerateAlignmentError("subspace_residual: numerically dependent basis");
    for (double& x : w) x /= nrm;
    q.push_back(std::move(w));
  }
  std::vector<double> res(phi);
  for (const auto& u : q) {
    const double c = l2bar_dot(res, u);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= c * u[i];
  }
  return l2bar_norm(res);
}

/// A scalar field with a tangential gradient, for Monte Carlo norms.
struct Field {
  std::function<double(const Vec3&)> eval;
  std::function<Vec3(const Vec3&)> grad;
};

struct McH1Result {
  double l2_sq = 0.0;  // estimate of integral (F-G)^2 dx
  double h1_sq = 0.0;  // estimate of integral |grad F - grad G|^2 dx
  double se_l2_sq = 0.0;
  double se_h1_sq = 0.0;
  std::size_t n_mc = 0;
};

/// Unbiased Monte Carlo estimates of the squared L2 and H1-seminorm
/// distances between two fields, with standard errors.
inline McH1Result mc_h1_error(const Field& F, const Field& G, const ManifoldModel& model,
                              std::size_t n_mc, std::uint64_t seed) {
  const PointCloud mc = sample_uniform(model, n_mc, seed);
  double sa = 0.0, sa2 = 0.0, sb = 0.0, sb2 = 0.0;
  for (const auto& x : mc.points) {
    const double dv = F.eval(x) - G.eval(x);
    const Vec3 gf = F.grad(x), gg = G.grad(x);
    const double a = dv * dv;
    const double b = (gf[0] - gg[0]) * (gf[0] - gg[0]) + (gf[1] - gg[1]) * (gf[1] - gg[1]) +
                     (gf[2] - gg[2]) * (gf[2] - gg[2]);
    sa += a;
    sa2 += a * a;
    sb += b;
    sb2 += b * b;
  }
  const double nm = static_cast<double>(n_mc);
  const double vol = model.volume;
  McH1Result r;
  r.n_mc = n_mc;
  r.l2_sq = vol * sa / nm;
  r.h1_sq = vol * sb / nm;
  const double var_a = std::max(0.0, sa2 / nm - (sa / nm) * (sa / nm));
  const double var_b = std::max(0.0, sb2 / nm - (sb / nm) * (sb / nm));
  r.se_l2_sq = vol * std::sqrt(var_a / nm);
  r.se_h1_sq = vol * std::sqrt(var_b / nm);
  return r;
}

}  // namespace speclab
