#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/graph.hpp"
#include "speclab/rng.hpp"

namespace speclab {

/// Inner product of the discrete L2 space: <u,v> = (1/n) sum u v.
inline double l2bar_dot(const std::vector<double>& u, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s / static_cast<double>(u.size());
}

inline double l2bar_norm(const std::vector<double>& u) { return std::sqrt(l2bar_dot(u, u)); }

inline double mean(const std::vector<double>& u) {
  double s = 0.0;
  for (double x : u) s += x;
  return u.empty() ? 0.0 : s / static_cast<double>(u.size());
}

inline void project_meanzero(std::vector<double>& u) {
  const double m = mean(u);
  for (double& x : u) x -= m;
}

struct EigPair {
  double value = 0.0;
  std::vector<double> vector;  // unit norm in L2bar
  double residual = 0.0;       // ||A v - value v|| in L2bar
};

/// Multiplies an operator by a scalar.
template <class Op>
class ScaledOperator {
 public:
  ScaledOperator(const Op& op, double factor) : op_(&op), factor_(factor) {}
  std::size_t dim() const { return op_->dim(); }
  void apply(const double* x, double* y) const {
    op_->apply(x, y);
    const std::size_t n = dim();
    for (std::size_t i = 0; i < n; ++i) y[i] *= factor_;
  }

 private:
  const Op* op_;
  double factor_;
};

class DiagonalOperator {
 public:
  explicit DiagonalOperator(std::vector<double> d) : d_(std::move(d)) {}
  std::size_t dim() const { return d_.size(); }
  void apply(const double* x, double* y) const {
    for (std::size_t i = 0; i < d_.size(); ++i) y[i] = d_[i] * x[i];
  }

 private:
  std::vector<double> d_;
};

/// Dense symmetric operator (row-major), for small fixtures.
class DenseOperator {
 public:
  DenseOperator(std::size_t n, std::vector<double> a) : n_(n), a_(std::move(a)) {}
  std::size_t dim() const { return n_; }
  void apply(const double* x, double* y) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      const double* row = a_.data() + i * n_;
      for (std::size_t j = 0; j < n_; ++j) s += row[j] * x[j];
      y[i] = s;
    }
  }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

namespace detail {

/// Eigen-decomposition of a symmetric tridiagonal matrix (implicit QL with
/// Wilkinson shifts, adapted from the classic tql2 routine). diag/off are
/// overwritten; z returns eigenvectors by column, eigenvalues land in diag,
/// both sorted ascending.
inline void tridiag_eig(std::vector<double>& diag, std::vector<double>& off,
                        std::vector<double>& z) {
  const int n = static_cast<int>(diag.size());
  z.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i) * n + i] = 1.0;
  if (n == 1) return;
  std::vector<double> e(off.begin(), off.end());
  e.resize(n, 0.0);

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
        if (std::abs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) throw NumericalError("tridiag_eig: too many QL iterations");
        double g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = diag[m] - diag[l] + e[l] / (g + (g >= 0 ? r : -r));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e[i], b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            diag[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = diag[i + 1] - p;
          r = (diag[i] - g) * s + 2.0 * c * b;
          p = s * r;
          diag[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = z[static_cast<std::size_t>(k) * n + i + 1];
            z[static_cast<std::size_t>(k) * n + i + 1] =
                s * z[static_cast<std::size_t>(k) * n + i] + c * f;
            z[static_cast<std::size_t>(k) * n + i] =
                c * z[static_cast<std::size_t>(k) * n + i] - s * f;
          }
        }
        if (underflow && i >= l) continue;
        diag[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  // sort ascending, carrying columns
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return diag[a] < diag[b]; });
  std::vector<double> d2(n), z2(z.size());
  for (int c = 0; c < n; ++c) {
    d2[c] = diag[order[c]];
    for (int r = 0; r < n; ++r)
      z2[static_cast<std::size_t>(r) * n + c] = z[static_cast<std::size_t>(r) * n + order[c]];
  }
  diag.swap(d2);
  z.swap(z2);
}

}  // namespace detail

struct LanczosOptions {
  double tol = 1e-8;     // residual tolerance relative to the operator norm estimate
  int max_iter = 600;    // Krylov dimension cap
  std::uint64_t seed = 1;
};

/// The k algebraically smallest eigenpairs of a symmetric PSD operator under
/// the L2bar inner product. Full reorthogonalization of the Krylov basis;
/// deterministic given the seed.
template <class Op>
std::vector<EigPair> lanczos_smallest(const Op& op, std::size_t k, const LanczosOptions& opt = {}) {
  const std::size_t n = op.dim();
  if (k < 1 || k > n) throw ConfigError("lanczos_smallest: need 1 <= k <= dim");
  const int max_dim = std::min<std::size_t>(opt.max_iter, n);

  CounterRng rng(opt.seed);
  std::vector<std::vector<double>> basis;
  basis.reserve(max_dim);
  std::vector<double> alpha, beta;  // beta[j] couples v_j and v_{j+1}

  auto reorth = [&](std::vector<double>& w) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) {
        const double c = l2bar_dot(w, q);
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i];
      }
  };
  auto fresh_direction = [&]() {
    std::vector<double> v(n);
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (auto& x : v) x = rng.normal();
      reorth(v);
      const double nrm = l2bar_norm(v);
      if (nrm > 1e-8) {
        for (auto& x : v) x /= nrm;
        return v;
      }
    }
    throw NumericalError("lanczos_smallest: could not generate a fresh direction");
  };

  basis.push_back(fresh_direction());
  std::vector<double> w(n);
  std::vector<double> ritz_val, ritz_z;
  double op_norm_est = 0.0;
  int converged = 0;

  for (int j = 0; j < max_dim; ++j) {
    const auto& v = basis[j];
    op.apply(v.data(), w.data());
    const double a = l2bar_dot(w, v);
    alpha.push_back(a);
    for (std::size_t i = 0; i < n; ++i) w[i] -= a * v[i];
    if (j > 0 && beta[j - 1] != 0.0) {
      const auto& vp = basis[j - 1];
      for (std::size_t i = 0; i < n; ++i) w[i] -= beta[j - 1] * vp[i];
    }
    reorth(w);
    double b = l2bar_norm(w);

    const int m = j + 1;
    const bool full = (m == max_dim);
    const bool check = full || (m >= static_cast<int>(k) + 2 && m % 8 == 0) || b < 1e-12;
    bool done = false;
    if (check) {
      std::vector<double> d(alpha), e(beta);
      detail::tridiag_eig(d, e, ritz_z);
      ritz_val = d;
      op_norm_est = std::max(op_norm_est, std::abs(d.back()));
      const double tol_abs = opt.tol * std::max(op_norm_est, 1e-300);
      converged = 0;
      for (std::size_t i = 0; i < std::min<std::size_t>(k, d.size()); ++i) {
        const double res = std::abs(b * ritz_z[static_cast<std::size_t>(m - 1) * m + i]);
        if (res <= tol_abs)
          ++converged;
        else
          break;
      }
      done = (converged >= static_cast<int>(k) && m >= static_cast<int>(k));
    }
    if (done || full) break;

    if (b < 1e-12) {
      // invariant subspace: restart with a fresh orthogonal direction
      if (basis.size() == n) break;
      beta.push_back(0.0);
      basis.push_back(fresh_direction());
    } else {
      beta.push_back(b);
      std::vector<double> vn(n);
      for (std::size_t i = 0; i < n; ++i) vn[i] = w[i] / b;
      basis.push_back(std::move(vn));
    }
  }

  if (ritz_val.empty()) {
    std::vector<double> d(alpha), e(beta);
    detail::tridiag_eig(d, e, ritz_z);
    ritz_val = d;
  }
  const int m = static_cast<int>(alpha.size());
  if (static_cast<int>(ritz_val.size()) < static_cast<int>(k))
    throw ConvergenceError("lanczos_smallest: Krylov space too small", 0.0);

  std::vector<EigPair> out(k);
  double worst = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    EigPair& p = out[i];
    p.value = ritz_val[i];
    p.vector.assign(n, 0.0);
    for (int j = 0; j < m; ++j) {
      const double y = ritz_z[static_cast<std::size_t>(j) * m + i];
      if (y == 0.0) continue;
      const auto& v = basis[j];
      for (std::size_t r = 0; r < n; ++r) p.vector[r] += y * v[r];
    }
    const double nrm = l2bar_norm(p.vector);
    for (auto& x : p.vector) x /= nrm;
    op.apply(p.vector.data(), w.data());
    double r2 = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = w[r] - p.value * p.vector[r];
      r2 += d * d;
    }
    p.residual = std::sqrt(r2 / n);
    worst = std::max(worst, p.residual);
  }
  const double tol_abs = opt.tol * std::max(op_norm_est, 1e-300);
  if (worst > 10.0 * tol_abs)
    throw ConvergenceError("lanczos_smallest: not converged within max_iter (worst residual " +
                               std::to_string(worst) + ")",
                           worst);
  std::stable_sort(out.begin(), out.end(),
                   [](const EigPair& a, const EigPair& b) { return a.value < b.value; });
  return out;
}

/// Laplacian overload: spectral operations refuse disconnected graphs.
inline std::vector<EigPair> lanczos_smallest(const LaplacianOperator& op, std::size_t k,
                                             const LanczosOptions& opt = {}) {
  if (op.components() != 1)
    throw DisconnectedGraphError("lanczos_smallest: graph has " +
                                     std::to_string(op.components()) + " components",
                                 op.components());
  return lanczos_smallest<LaplacianOperator>(op, k, opt);
}

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> residual_history;  // L2bar norms, one per iteration
};

/// Solves op u = rhs - mean(rhs) on the mean-zero subspace with the conjugate
/// residual iteration (residual norms are non-increasing for PSD operators).
/// Iterates are re-projected to mean zero every step.
template <class Op>
std::vector<double> cg_solve_meanzero(const Op& op, const std::vector<double>& rhs, double tol,
                                      int max_iter, SolveReport* report = nullptr,
                                      const std::vector<double>* x0 = nullptr) {
  const std::size_t n = op.dim();
  if (rhs.size() != n) throw ConfigError("cg_solve_meanzero: dimension mismatch");
  std::vector<double> b(rhs);
  project_meanzero(b);
  const double rhs_norm = l2bar_norm(rhs);
  const double stop = tol * (rhs_norm > 0.0 ? rhs_norm : 1.0);

  std::vector<double> x(n, 0.0);
  std::vector<double> r(b), Ar(n), p, Ap(n), tmp(n);
  if (x0) {
    x = *x0;
    project_meanzero(x);
    op.apply(x.data(), tmp.data());
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    project_meanzero(r);
  }
  if (report) {
    report->iterations = 0;
    report->residual_history.clear();
    report->residual_history.push_back(l2bar_norm(r));
  }
  if (l2bar_norm(r) <= stop) {
    if (report) report->relative_residual = l2bar_norm(r) / (rhs_norm > 0 ? rhs_norm : 1.0);
    return x;
  }

  op.apply(r.data(), Ar.data());
  p = r;
  Ap = Ar;
  double rAr = l2bar_dot(r, Ar);
  int it = 0;
  for (; it < max_iter; ++it) {
    const double ApAp = l2bar_dot(Ap, Ap);
    if (ApAp <= 0.0) break;
    const double alpha = rAr / ApAp;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    project_meanzero(r);
    const double rn = l2bar_norm(r);
    if (report) report->residual_history.push_back(rn);
    if (rn <= stop) {
      ++it;
      break;
    }
    op.apply(r.data(), Ar.data());
    const double rAr_new = l2bar_dot(r, Ar);
    const double beta = rAr_new / rAr;
    rAr = rAr_new;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = r[i] + beta * p[i];
      Ap[i] = Ar[i] + beta * Ap[i];
    }
  }
  project_meanzero(x);
  op.apply(x.data(), tmp.data());
  double rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = tmp[i] - b[i];
    rr += d * d;
  }
  const double final_res = std::sqrt(rr / n);
  if (report) {
    report->iterations = it;
    report->relative_residual = final_res / (rhs_norm > 0 ? rhs_norm : 1.0);
  }
  if (final_res > stop * 1.000001)
    throw ConvergenceError("cg_solve_meanzero: no convergence in " + std::to_string(max_iter) +
                               " iterations",
                           final_res / (rhs_norm > 0 ? rhs_norm : 1.0));
  return x;
}

/// <h~, op^+ h~> with h~ = h - mean(h): the squared dual seminorm of h when
/// op is the energy-scaled Laplacian.
template <class Op>
double pinv_quadform(const Op& op, const std::vector<double>& h, double tol = 1e-10,
                     int max_iter = 20000) {
  std::vector<double> ht(h);
  project_meanzero(ht);
  if (l2bar_norm(ht) == 0.0) return 0.0;
  const std::vector<double> u = cg_solve_meanzero(op, ht, tol, max_iter);
  return std::max(0.0, l2bar_dot(ht, u));
}

}  // namespace speclab
