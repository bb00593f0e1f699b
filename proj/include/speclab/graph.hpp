#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/geometry.hpp"
#include "speclab/kernels.hpp"

namespace speclab {

/// Uniform bucketing of a point cloud for radius queries. Wraps on the torus.
/// Cell side is at least the query radius, so a radius search only needs the
/// 3^d neighborhood of the query's cell.
class CellIndex {
 public:
  CellIndex(const PointCloud& cloud, double radius) : cloud_(&cloud), radius_(radius) {
    const auto& m = cloud.model;
    wrap_ = m.is_torus();
    dim_ = m.is_torus() ? m.intrinsic_dim : 3;
    lo_ = wrap_ ? 0.0 : -1.0;
    extent_ = wrap_ ? 1.0 : 2.0;
    nc_ = std::max(1, static_cast<int>(std::floor(extent_ / radius)));
    if (nc_ > 1024) nc_ = 1024;
    int total = 1;
    for (int a = 0; a < dim_; ++a) total *= nc_;
    // counting sort of point ids by cell
    std::vector<int> count(total + 1, 0);
    cell_of_.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      cell_of_[i] = cell_id(cloud.points[i]);
      ++count[cell_of_[i] + 1];
    }
    std::partial_sum(count.begin(), count.end(), count.begin());
    start_ = count;
    ids_.resize(cloud.size());
    std::vector<int> cursor(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < cloud.size(); ++i) ids_[cursor[cell_of_[i]]++] = i;
  }

  int cell_count() const {
    int total = 1;
    for (int a = 0; a < dim_; ++a) total *= nc_;
    return total;
  }

  int cell_id(const Vec3& p) const {
    int id = 0;
    for (int a = 0; a < dim_; ++a) {
      int c = static_cast<int>(std::floor((p[a] - lo_) / extent_ * nc_));
      c = std::min(nc_ - 1, std::max(0, c));
      id = id * nc_ + c;
    }
    return id;
  }

  /// Distinct cells within one cell-offset of `cell` (wrapping if periodic),
  /// in ascending id order.
  void neighbor_cells(int cell, std::vector<int>& out) const {
    out.clear();
    int coords[3] = {0, 0, 0};
    int c = cell;
    for (int a = dim_ - 1; a >= 0; --a) {
      coords[a] = c % nc_;
      c /= nc_;
    }
    int offs[3] = {-1, -1, -1};
    while (true) {
      bool ok = true;
      int id = 0;
      for (int a = 0; a < dim_ && ok; ++a) {
        int v = coords[a] + offs[a];
        if (wrap_) {
          v = (v % nc_ + nc_) % nc_;
        } else if (v < 0 || v >= nc_) {
          ok = false;
        }
        id = id * nc_ + v;
      }
      if (ok) out.push_back(id);
      int a = dim_ - 1;
      while (a >= 0 && offs[a] == 1) offs[a--] = -1;
      if (a < 0) break;
      ++offs[a];
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }

  /// Calls fn(point id) for every sample within `radius_` neighborhood cells
  /// of x (callers still check the exact distance).
  template <class Fn>
  void for_candidates(const Vec3& x, Fn&& fn) const {
    std::vector<int> nbrs;
    neighbor_cells(cell_id(x), nbrs);
    for (int cell : nbrs)
      for (int k = start_[cell]; k < start_[cell + 1]; ++k) fn(ids_[k]);
  }

  const std::vector<int>& cell_starts() const { return start_; }
  const std::vector<int>& sorted_ids() const { return ids_; }
  const std::vector<int>& cell_of() const { return cell_of_; }

 private:
  const PointCloud* cloud_;
  double radius_;
  bool wrap_ = true;
  int dim_ = 2;
  int nc_ = 1;
  double lo_ = 0.0, extent_ = 1.0;
  std::vector<int> start_;
  std::vector<int> ids_;
  std::vector<int> cell_of_;

  friend class PairSweep;
};

/// Enumerates each unordered candidate pair exactly once: for every cell, the
/// neighbor cells with id >= own id; within a cell, index-ordered pairs.
class PairSweep {
 public:
  explicit PairSweep(const CellIndex& index) : idx_(&index) {}

  template <class Fn>
  void run(Fn&& fn) const {
    const auto& start = idx_->start_;
    const auto& ids = idx_->ids_;
    std::vector<int> nbrs;
    const int cells = idx_->cell_count();
    for (int c = 0; c < cells; ++c) {
      const int cb = start[c], ce = start[c + 1];
      if (cb == ce) continue;
      idx_->neighbor_cells(c, nbrs);
      for (int d : nbrs) {
        if (d < c) continue;
        const int db = start[d], de = start[d + 1];
        if (d == c) {
          for (int p = cb; p < ce; ++p)
            for (int q = p + 1; q < ce; ++q) fn(ids[p], ids[q]);
        } else {
          for (int p = cb; p < ce; ++p)
            for (int q = db; q < de; ++q) fn(ids[p], ids[q]);
        }
      }
    }
  }

 private:
  const CellIndex* idx_;
};

/// epsilon-proximity graph in compressed sparse rows over the strict upper
/// triangle; weights are eta(dist/eps) in (0,1], no self loops. Symmetry is
/// by construction: entry (i,j), i<j, stands for both directions.
struct WeightedGraph {
  std::size_t n = 0;
  double epsilon = 0.0;
  Kernel kernel;
  int dim = 2;  // intrinsic dimension of the sampled manifold
  std::string metric = "wrap";
  std::vector<std::uint64_t> row_ptr;  // size n+1
  std::vector<std::uint32_t> col;      // j > i entries
  std::vector<double> weight;
  int components = 0;

  std::size_t edge_count() const { return col.size(); }
  double mean_degree() const { return n ? 2.0 * static_cast<double>(col.size()) / n : 0.0; }

  /// Weighted degree vector (sum of incident weights).
  std::vector<double> weighted_degree() const {
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::uint64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        deg[i] += weight[k];
        deg[col[k]] += weight[k];
      }
    return deg;
  }
};

namespace detail {

inline int count_components(const WeightedGraph& g) {
  std::vector<int> parent(g.n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> rank(g.n, 0);
  auto find = [&parent](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::uint64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
      int ra = find(static_cast<int>(i)), rb = find(static_cast<int>(g.col[k]));
      if (ra == rb) continue;
      if (rank[ra] < rank[rb]) std::swap(ra, rb);
      parent[rb] = ra;
      if (rank[ra] == rank[rb]) ++rank[ra];
    }
  int comps = 0;
  for (std::size_t i = 0; i < g.n; ++i)
    if (find(static_cast<int>(i)) == static_cast<int>(i)) ++comps;
  return comps;
}

inline double max_epsilon(const ManifoldModel& m) {
  // metric validity: on the torus the wrap ball stays embedded below the
  // diameter sqrt(d)/2; on the sphere chordal eps below 1 keeps caps local
  if (m.is_torus()) return 0.5 * std::sqrt(static_cast<double>(m.intrinsic_dim));
  return 1.0;
}

}  // namespace detail

/// Builds the epsilon-graph with cell-list neighbor search. Runs two sweeps
/// over candidate pairs (count, then fill) so only the final CSR is held.
inline WeightedGraph build_graph(const PointCloud& cloud, double epsilon, const Kernel& kernel) {
  const auto& m = cloud.model;
  if (!(epsilon > 0.0) || epsilon >= detail::max_epsilon(m))
    throw ConfigError("build_graph: epsilon out of range for " + m.name());
  WeightedGraph g;
  g.n = cloud.size();
  g.epsilon = epsilon;
  g.kernel = kernel;
  g.dim = m.intrinsic_dim;
  g.metric = m.is_torus() ? "wrap" : "chordal";
  g.row_ptr.assign(g.n + 1, 0);
  if (g.n == 0) {
    g.components = 0;
    return g;
  }

  CellIndex index(cloud, epsilon);
  PairSweep sweep(index);
  const auto& pts = cloud.points;

  std::vector<std::uint32_t> row_count(g.n, 0);
  sweep.run([&](int a, int b) {
    const double dist = ambient_distance(m, pts[a], pts[b]);
    if (dist > epsilon) return;
    if (kernel(dist / epsilon) <= 0.0) return;
    ++row_count[std::min(a, b)];
  });
  for (std::size_t i = 0; i < g.n; ++i) g.row_ptr[i + 1] = g.row_ptr[i] + row_count[i];
  g.col.resize(g.row_ptr[g.n]);
  g.weight.resize(g.row_ptr[g.n]);

  std::vector<std::uint64_t> cursor(g.row_ptr.begin(), g.row_ptr.end() - 1);
  sweep.run([&](int a, int b) {
    const double dist = ambient_distance(m, pts[a], pts[b]);
    if (dist > epsilon) return;
    const double w = kernel(dist / epsilon);
    if (w <= 0.0) return;
    const int i = std::min(a, b), j = std::max(a, b);
    const std::uint64_t k = cursor[i]++;
    g.col[k] = static_cast<std::uint32_t>(j);
    g.weight[k] = w;
  });
  // deterministic column order inside each row
  for (std::size_t i = 0; i < g.n; ++i) {
    const std::uint64_t b = g.row_ptr[i], e = g.row_ptr[i + 1];
    std::vector<std::pair<std::uint32_t, double>> row(e - b);
    for (std::uint64_t k = b; k < e; ++k) row[k - b] = {g.col[k], g.weight[k]};
    std::sort(row.begin(), row.end());
    for (std::uint64_t k = b; k < e; ++k) {
      g.col[k] = row[k - b].first;
      g.weight[k] = row[k - b].second;
    }
  }
  g.components = detail::count_components(g);
  return g;
}

/// Graph Laplacian as a matvec: y = scale * (D - W) x over the symmetric
/// weights. scale = 1/(n eps^{d+2}) gives Delta_n; a further 2/sigma_eta
/// gives the rescaled operator whose spectrum approximates the continuum.
class LaplacianOperator {
 public:
  LaplacianOperator(const WeightedGraph& g, double scale) : g_(&g), scale_(scale) {}

  std::size_t dim() const { return g_->n; }
  int components() const { return g_->components; }
  const WeightedGraph& graph() const { return *g_; }
  double scale() const { return scale_; }

  void apply(const double* x, double* y) const {
    const std::size_t n = g_->n;
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x[i];
      double acc = 0.0;
      for (std::uint64_t k = g_->row_ptr[i]; k < g_->row_ptr[i + 1]; ++k) {
        const std::uint32_t j = g_->col[k];
        const double w = g_->weight[k];
        const double diff = xi - x[j];
        acc += w * diff;
        y[j] -= w * diff;
      }
      y[i] += acc;
    }
    for (std::size_t i = 0; i < n; ++i) y[i] *= scale_;
  }

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.resize(x.size());
    apply(x.data(), y.data());
  }

 private:
  const WeightedGraph* g_;
  double scale_;
};

struct GraphOperators {
  LaplacianOperator delta_n;   // (1/(n eps^{d+2})) (D - W)
  LaplacianOperator rescaled;  // (2/sigma_eta) Delta_n
  double sigma_eta = 0.0;
};

/// Both Laplacian operators for a built graph; sigma_eta is taken for the
/// graph's intrinsic dimension.
inline GraphOperators graph_laplacian(const WeightedGraph& g) {
  const double sigma = kernel_moments(g.kernel, g.dim).sigma_eta;
  const double base = 1.0 / (static_cast<double>(g.n) * std::pow(g.epsilon, g.dim + 2));
  return GraphOperators{LaplacianOperator(g, base), LaplacianOperator(g, base * 2.0 / sigma),
                        sigma};
}

/// Connectivity-rate bandwidth: eps = c_eps (ln n / n)^{1/(d+4)}. Warns when
/// the result sits below twice the connectivity threshold (ln n / n)^{1/d}.
inline double default_epsilon(std::size_t n, int d, double c_eps) {
  if (n < 2) throw ConfigError("default_epsilon: n must be >= 2");
  const double ratio = std::log(static_cast<double>(n)) / static_cast<double>(n);
  const double eps = c_eps * std::pow(ratio, 1.0 / (d + 4));
  const double threshold = 2.0 * std::pow(ratio, 1.0 / d);
  if (eps < threshold)
    std::fprintf(stderr,
                 "[speclab] warning: eps=%.4g below connectivity guide %.4g (n=%zu, d=%d)\n", eps,
                 threshold, n, d);
  return eps;
}

}  // namespace speclab
