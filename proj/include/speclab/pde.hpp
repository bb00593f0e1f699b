#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "speclab/density.hpp"
#include "speclab/errors.hpp"
#include "speclab/geometry.hpp"
#include "speclab/linalg.hpp"

namespace speclab {

/// Uniform periodic grid on the unit torus, d in {1,2}; nodes at cell
/// centers, row-major storage.
struct PeriodicGrid {
  int d = 1;
  int n_per_axis = 16;

  PeriodicGrid(int dim, int n) : d(dim), n_per_axis(n) {
    if (dim < 1 || dim > 2) throw ConfigError("PeriodicGrid: d must be 1 or 2");
    if (n < 16) throw ConfigError("PeriodicGrid: resolution must be >= 16");
  }

  double h() const { return 1.0 / n_per_axis; }
  std::size_t nodes() const {
    return d == 1 ? static_cast<std::size_t>(n_per_axis)
                  : static_cast<std::size_t>(n_per_axis) * n_per_axis;
  }
  Vec3 node(std::size_t idx) const {
    if (d == 1) return Vec3{(idx + 0.5) * h(), 0.0, 0.0};
    const std::size_t i = idx / n_per_axis, j = idx % n_per_axis;
    return Vec3{(i + 0.5) * h(), (j + 0.5) * h(), 0.0};
  }
};

/// Flux-form discretization of f -> -div(rho^2 grad f) on the periodic grid:
/// stiffness K (integrated, symmetric PSD, K 1 = 0) with face densities
/// ((rho_i + rho_j)/2)^2, and mass M = diag(rho_i h^d).
class GridOperator {
 public:
  GridOperator(const PeriodicGrid& grid, std::vector<double> rho)
      : grid_(grid), rho_(std::move(rho)) {
    if (rho_.size() != grid_.nodes()) throw ConfigError("GridOperator: rho size mismatch");
    const int N = grid_.n_per_axis;
    const double h = grid_.h();
    const double scale = std::pow(h, grid_.d - 2);
    if (grid_.d == 1) {
      face_x_.resize(N);
      for (int i = 0; i < N; ++i) {
        const double f = 0.5 * (rho_[i] + rho_[(i + 1) % N]);
        face_x_[i] = f * f * scale;
      }
    } else {
      face_x_.resize(grid_.nodes());
      face_y_.resize(grid_.nodes());
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const std::size_t id = static_cast<std::size_t>(i) * N + j;
          const std::size_t ix = static_cast<std::size_t>((i + 1) % N) * N + j;
          const std::size_t iy = static_cast<std::size_t>(i) * N + (j + 1) % N;
          const double fx = 0.5 * (rho_[id] + rho_[ix]);
          const double fy = 0.5 * (rho_[id] + rho_[iy]);
          face_x_[id] = fx * fx * scale;
          face_y_[id] = fy * fy * scale;
        }
    }
    mass_.resize(grid_.nodes());
    const double hd = std::pow(h, grid_.d);
    for (std::size_t i = 0; i < grid_.nodes(); ++i) mass_[i] = rho_[i] * hd;
  }

  const PeriodicGrid& grid() const { return grid_; }
  const std::vector<double>& rho() const { return rho_; }
  const std::vector<double>& mass() const { return mass_; }

  /// y = K x.
  void apply_stiffness(const double* x, double* y) const {
    const int N = grid_.n_per_axis;
    if (grid_.d == 1) {
      for (int i = 0; i < N; ++i) {
        const int ip = (i + 1) % N, im = (i + N - 1) % N;
        y[i] = face_x_[i] * (x[i] - x[ip]) + face_x_[im] * (x[i] - x[im]);
      }
    } else {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const std::size_t id = static_cast<std::size_t>(i) * N + j;
          const std::size_t xp = static_cast<std::size_t>((i + 1) % N) * N + j;
          const std::size_t xm = static_cast<std::size_t>((i + N - 1) % N) * N + j;
          const std::size_t yp = static_cast<std::size_t>(i) * N + (j + 1) % N;
          const std::size_t ym = static_cast<std::size_t>(i) * N + (j + N - 1) % N;
          y[id] = face_x_[id] * (x[id] - x[xp]) + face_x_[xm] * (x[id] - x[xm]) +
                  face_y_[id] * (x[id] - x[yp]) + face_y_[ym] * (x[id] - x[ym]);
        }
    }
  }

 private:
  PeriodicGrid grid_;
  std::vector<double> rho_;
  std::vector<double> face_x_, face_y_;
  std::vector<double> mass_;
};

namespace detail {

/// Direct solver for the shifted system (K + c M) x = b when d = 1: the
/// matrix is cyclic tridiagonal, handled by a bordered Thomas elimination.
class CyclicTridiagSolver {
 public:
  CyclicTridiagSolver(const GridOperator& op, double c) {
    const auto& grid = op.grid();
    if (grid.d != 1) throw ConfigError("CyclicTridiagSolver: d=1 only");
    n_ = grid.n_per_axis;
    diag_.resize(n_);
    sub_.resize(n_);  // sub_[i] couples i and i+1 (wrap at n-1)
    std::vector<double> unit(n_, 0.0), col(n_);
    // extract stencil from one stiffness apply per band
    std::vector<double> x(n_, 0.0), y(n_);
    for (int i = 0; i < n_; ++i) diag_[i] = c * op.mass()[i];
    // face coefficients via probing: K e_i gives row i pattern
    // cheaper: recompute from rho as the operator does
    const double h = grid.h();
    const double scale = std::pow(h, grid.d - 2);
    for (int i = 0; i < n_; ++i) {
      const double f = 0.5 * (op.rho()[i] + op.rho()[(i + 1) % n_]);
      sub_[i] = -f * f * scale;
      diag_[i] += f * f * scale;
      diag_[(i + 1) % n_] += f * f * scale;
    }
    factor();
  }

  void solve(const double* b, double* x) const {
    const int m = n_ - 1;
    std::vector<double> y1(m);
    thomas(b, y1.data());
    double corr = 0.0;
    corr += b[n_ - 1];
    corr -= sub_[n_ - 1] * y1[0] + sub_[m - 1] * y1[m - 1];
    const double xm = corr / schur_;
    for (int i = 0; i < m; ++i) x[i] = y1[i] - xm * y2_[i];
    x[n_ - 1] = xm;
  }

 private:
  int n_ = 0;
  std::vector<double> diag_, sub_;
  std::vector<double> cp_, dp_;  // Thomas factorization of the leading block
  std::vector<double> y2_;
  double schur_ = 1.0;

  void thomas(const double* b, double* x) const {
    const int m = n_ - 1;
    std::vector<double> d(m);
    d[0] = b[0];
    for (int i = 1; i < m; ++i) d[i] = b[i] - cp_[i - 1] * d[i - 1];
    x[m - 1] = d[m - 1] / dp_[m - 1];
    for (int i = m - 2; i >= 0; --i) x[i] = (d[i] - sub_[i] * x[i + 1]) / dp_[i];
  }

  void factor() {
    const int m = n_ - 1;
    dp_.resize(m);
    cp_.resize(m);
    dp_[0] = diag_[0];
    for (int i = 1; i < m; ++i) {
      cp_[i - 1] = sub_[i - 1] / dp_[i - 1];
      dp_[i] = diag_[i] - cp_[i - 1] * sub_[i - 1];
    }
    // border column b: entries at rows 0 (sub_[n-1]) and m-1 (sub_[m-1])
    std::vector<double> bcol(m, 0.0);
    bcol[0] = sub_[n_ - 1];
    bcol[m - 1] = sub_[m - 1];
    y2_.resize(m);
    thomas(bcol.data(), y2_.data());
    schur_ = diag_[n_ - 1] - (sub_[n_ - 1] * y2_[0] + sub_[m - 1] * y2_[m - 1]);
  }
};

/// S = M^{1/2} (K + c M)^{-1} M^{1/2}: symmetric, positive definite, with
/// eigenvalues 1/(lambda + c) for the generalized problem K f = lambda M f.
class ShiftInvertOperator {
 public:
  ShiftInvertOperator(const GridOperator& op, double c) : op_(&op), c_(c) {
    const auto& mass = op.mass();
    sqrt_m_.resize(mass.size());
    for (std::size_t i = 0; i < mass.size(); ++i) sqrt_m_[i] = std::sqrt(mass[i]);
    if (op.grid().d == 1) direct_ = std::make_unique<CyclicTridiagSolver>(op, c);
  }

  std::size_t dim() const { return sqrt_m_.size(); }

  void apply(const double* x, double* y) const {
    const std::size_t n = dim();
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = sqrt_m_[i] * x[i];
    std::vector<double> sol(n);
    if (direct_) {
      direct_->solve(b.data(), sol.data());
    } else {
      ShiftedStiffness shifted{op_, c_};
      sol = conjugate_solve(shifted, b);
    }
    for (std::size_t i = 0; i < n; ++i) y[i] = sqrt_m_[i] * sol[i];
  }

 private:
  struct ShiftedStiffness {
    const GridOperator* op;
    double c;
    std::size_t dim() const { return op->mass().size(); }
    void apply(const double* x, double* y) const {
      op->apply_stiffness(x, y);
      const auto& m = op->mass();
      for (std::size_t i = 0; i < m.size(); ++i) y[i] += c * m[i] * x[i];
    }
  };

  // plain conjugate gradients (the shifted operator is SPD)
  static std::vector<double> conjugate_solve(const ShiftedStiffness& A,
                                             const std::vector<double>& b) {
    const std::size_t n = b.size();
    std::vector<double> x(n, 0.0), r(b), p(b), Ap(n);
    double rr = 0.0;
    for (double v : r) rr += v * v;
    const double stop = 1e-26 * rr;
    for (int it = 0; it < 200000 && rr > stop; ++it) {
      A.apply(p.data(), Ap.data());
      double pAp = 0.0;
      for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
      const double alpha = rr / pAp;
      double rr_new = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * Ap[i];
        rr_new += r[i] * r[i];
      }
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    return x;
  }

  const GridOperator* op_;
  double c_;
  std::vector<double> sqrt_m_;
  std::unique_ptr<CyclicTridiagSolver> direct_;
};

}  // namespace detail

/// The k smallest generalized eigenpairs K f = lambda M f, solved through the
/// symmetric reduction and a shift-inverted Lanczos; eigenfunctions are
/// normalized to sum f_i^2 rho_i h^d = 1, eigenvalues ascending.
inline std::vector<EigPair> grid_eigenpairs(const GridOperator& op, std::size_t k,
                                            std::uint64_t seed = 0x9d1f) {
  if (k < 1 || k > 30) throw ConfigError("grid_eigenpairs: need 1 <= k <= 30");
  const double c = 1.0;
  detail::ShiftInvertOperator S(op, c);
  // largest eigenvalues of S are 1/(lambda+c) for the smallest lambda
  ScaledOperator<detail::ShiftInvertOperator> negS(S, -1.0);
  LanczosOptions opt;
  opt.tol = 1e-11;
  opt.max_iter = std::min<std::size_t>(S.dim(), std::max<std::size_t>(200, 8 * k));
  opt.seed = seed;
  auto pairs = lanczos_smallest(negS, k, opt);
  const auto& mass = op.mass();
  std::vector<EigPair> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out[i].value = -1.0 / pairs[i].value - c;
    if (std::abs(out[i].value) < 1e-9) out[i].value = std::max(out[i].value, 0.0);
    out[i].vector.resize(mass.size());
    double norm2 = 0.0;
    for (std::size_t j = 0; j < mass.size(); ++j) {
      out[i].vector[j] = pairs[i].vector[j] / std::sqrt(mass[j]);
      norm2 += out[i].vector[j] * out[i].vector[j] * mass[j];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : out[i].vector) v *= inv;
    out[i].residual = pairs[i].residual;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const EigPair& a, const EigPair& b) { return a.value < b.value; });
  return out;
}

/// Wrapped-Gaussian kernel density estimate on the grid: image shifts over
/// {-1,0,1}^d (per-axis factorization), floored at 1e-6 and renormalized to
/// unit mass.
inline std::vector<double> kde_torus(const PointCloud& samples, double r,
                                     const PeriodicGrid& grid) {
  if (!samples.model.is_torus()) throw ConfigError("kde_torus: torus clouds only");
  if (samples.model.intrinsic_dim != grid.d) throw ConfigError("kde_torus: dimension mismatch");
  if (!(r > 0.0 && r < 0.25)) throw ConfigError("kde_torus: bandwidth must lie in (0, 1/4)");
  const std::size_t nn = grid.nodes();
  const double inv2r2 = 1.0 / (2.0 * r * r);
  // contributions beyond 8r are below 1e-14 of the peak and are skipped
  const double cut = 8.0 * r;
  auto axis_sum = [&](double delta) {
    double s = 0.0;
    for (int shift = -1; shift <= 1; ++shift) {
      const double z = delta + shift;
      if (std::abs(z) > cut) continue;
      s += std::exp(-z * z * inv2r2);
    }
    return s;
  };
  std::vector<double> rho(nn, 0.0);
  const double n = static_cast<double>(samples.size());
  for (std::size_t idx = 0; idx < nn; ++idx) {
    const Vec3 x = grid.node(idx);
    double acc = 0.0;
    for (const auto& p : samples.points) {
      double f = axis_sum(wrap_diff(x[0], p[0]));
      if (grid.d == 2) f *= axis_sum(wrap_diff(x[1], p[1]));
      acc += f;
    }
    rho[idx] = acc / (n * std::pow(2.0 * M_PI * r * r, grid.d / 2.0));
  }
  double mean_val = 0.0;
  for (auto& v : rho) {
    v = std::max(v, 1e-6);
    mean_val += v;
  }
  mean_val /= static_cast<double>(nn);
  for (auto& v : rho) v /= mean_val;  // grid quadrature of rho h^d becomes exactly 1
  return rho;
}

struct PluginEstimate {
  double lambda = 0.0;
  std::vector<double> eigenfunction;  // on the grid, unit L2(rho_hat) norm
  double bandwidth = 0.0;
  std::vector<double> rho_hat;
};

/// Plug-in eigenpair estimator: KDE with r = c_bw n^{-1/(d+4)}, then the
/// level-l eigenpair of the discretized density-weighted operator.
inline PluginEstimate plugin_estimate(const PointCloud& samples, std::size_t l,
                                      const PeriodicGrid& grid, double c_bw) {
  if (l < 1) throw ConfigError("plugin_estimate: l must be >= 1");
  const double n = static_cast<double>(samples.size());
  const double r = c_bw * std::pow(n, -1.0 / (grid.d + 4));
  PluginEstimate out;
  out.bandwidth = r;
  out.rho_hat = kde_torus(samples, r, grid);
  GridOperator op(grid, out.rho_hat);
  const auto pairs = grid_eigenpairs(op, l + 2);
  out.lambda = pairs[l - 1].value;
  out.eigenfunction = pairs[l - 1].vector;
  return out;
}

/// Central-difference tangential gradient of a grid function, per axis.
inline std::vector<double> grid_gradient(const std::vector<double>& f, const PeriodicGrid& grid,
                                         int axis) {
  const int N = grid.n_per_axis;
  const double inv2h = 0.5 / grid.h();
  std::vector<double> g(f.size());
  if (grid.d == 1) {
    for (int i = 0; i < N; ++i) g[i] = (f[(i + 1) % N] - f[(i + N - 1) % N]) * inv2h;
  } else if (axis == 0) {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        g[static_cast<std::size_t>(i) * N + j] =
            (f[static_cast<std::size_t>((i + 1) % N) * N + j] -
             f[static_cast<std::size_t>((i + N - 1) % N) * N + j]) *
            inv2h;
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        g[static_cast<std::size_t>(i) * N + j] =
            (f[static_cast<std::size_t>(i) * N + (j + 1) % N] -
             f[static_cast<std::size_t>(i) * N + (j + N - 1) % N]) *
            inv2h;
  }
  return g;
}

/// Distance between the level-l eigenpairs of two densities:
///   |lambda_1 - lambda_2| + ||f_1 - f_2||_{L2(dx)} + ||grad f_1 - grad f_2||_{L2(dx)},
/// with the second eigenfunction realized by projecting f_1 onto the
/// eigenvalue cluster of the second operator (multiplicity and sign robust).
inline double eigenpair_separation(const DensityModel& rho1, const DensityModel& rho2,
                                   std::size_t l, const PeriodicGrid& grid) {
  if (!rho1.model.is_torus() || !rho2.model.is_torus())
    throw CapabilityError("eigenpair_separation: torus densities only");
  if (rho1.model.intrinsic_dim != grid.d || rho2.model.intrinsic_dim != grid.d)
    throw ConfigError("eigenpair_separation: dimension mismatch");
  const std::size_t nn = grid.nodes();
  std::vector<double> r1(nn), r2(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    const Vec3 x = grid.node(i);
    r1[i] = rho1.evaluate(x);
    r2[i] = rho2.evaluate(x);
  }
  GridOperator op1(grid, r1), op2(grid, r2);
  const std::size_t k = l + 3;
  const auto p1 = grid_eigenpairs(op1, k);
  const auto p2 = grid_eigenpairs(op2, k);
  const double lam1 = p1[l - 1].value, lam2 = p2[l - 1].value;

  auto cluster = [&](const std::vector<EigPair>& p, double lam) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (std::abs(p[i].value - lam) <= 1e-6 * std::max(1.0, std::abs(lam))) idx.push_back(i);
    return idx;
  };
  const auto cl2 = cluster(p2, lam2);
  // project f1 onto the span of rho2's cluster in L2(dx)
  const auto& f1 = p1[l - 1].vector;
  const std::size_t b = cl2.size();
  std::vector<double> G(b * b), rhs(b);
  auto dot_dx = [&](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < nn; ++i) s += a[i] * c[i];
    return s / static_cast<double>(nn);
  };
  for (std::size_t a = 0; a < b; ++a) {
    for (std::size_t c = 0; c < b; ++c) G[a * b + c] = dot_dx(p2[cl2[a]].vector, p2[cl2[c]].vector);
    rhs[a] = dot_dx(p2[cl2[a]].vector, f1);
  }
  // small SPD solve by Cholesky-free Gaussian elimination
  std::vector<double> coef(rhs);
  {
    std::vector<double> A(G);
    for (std::size_t c = 0; c < b; ++c) {
      std::size_t best = c;
      for (std::size_t rr = c + 1; rr < b; ++rr)
        if (std::abs(A[rr * b + c]) > std::abs(A[best * b + c])) best = rr;
      if (std::abs(A[best * b + c]) < 1e-14)
        throw DegenerateAlignmentError("eigenpair_separation: degenerate cluster basis");
      if (best != c) {
        for (std::size_t kk = 0; kk < b; ++kk) std::swap(A[c * b + kk], A[best * b + kk]);
        std::swap(coef[c], coef[best]);
      }
      for (std::size_t rr = c + 1; rr < b; ++rr) {
        const double f = A[rr * b + c] / A[c * b + c];
        for (std::size_t kk = c; kk < b; ++kk) A[rr * b + kk] -= f * A[c * b + kk];
        coef[rr] -= f * coef[c];
      }
    }
    for (std::size_t c = b; c-- > 0;) {
      for (std::size_t kk = c + 1; kk < b; ++kk) coef[c] -= A[c * b + kk] * coef[kk];
      coef[c] /= A[c * b + c];
    }
  }
  std::vector<double> f2(nn, 0.0);
  for (std::size_t a = 0; a < b; ++a)
    for (std::size_t i = 0; i < nn; ++i) f2[i] += coef[a] * p2[cl2[a]].vector[i];
  // renormalize to the eigenvector normalization sum f^2 rho2 h^d = 1
  double norm2 = 0.0;
  const double hd = std::pow(grid.h(), grid.d);
  for (std::size_t i = 0; i < nn; ++i) norm2 += f2[i] * f2[i] * r2[i] * hd;
  if (norm2 < 1e-20)
    throw DegenerateAlignmentError("eigenpair_separation: zero projection onto cluster");
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& v : f2) v *= inv;

  double dl2 = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    const double d = f1[i] - f2[i];
    dl2 += d * d;
  }
  dl2 = std::sqrt(dl2 / static_cast<double>(nn));
  double dh1 = 0.0;
  for (int axis = 0; axis < grid.d; ++axis) {
    const auto g1 = grid_gradient(f1, grid, axis);
    const auto g2 = grid_gradient(f2, grid, axis);
    for (std::size_t i = 0; i < nn; ++i) {
      const double d = g1[i] - g2[i];
      dh1 += d * d;
    }
  }
  dh1 = std::sqrt(dh1 / static_cast<double>(nn));
  return std::abs(lam1 - lam2) + dl2 + dh1;
}

}  // namespace speclab
