#pragma once

// Uniform periodic grids on the n-torus with period 2 pi per axis.
// Node index is axis-0 fastest.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace trgeom {

class GridShape {
 public:
  GridShape() = default;
  explicit GridShape(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) fail(ErrorKind::DimensionMismatch, "grid needs at least one axis");
    for (int d : dims_)
      if (d < 5) fail(ErrorKind::DimensionMismatch, "grid axes need at least 5 nodes");
    strides_.resize(dims_.size());
    int s = 1;
    for (size_t a = 0; a < dims_.size(); ++a) {
      strides_[a] = s;
      s *= dims_[a];
    }
    size_ = s;
  }

  int axes() const { return static_cast<int>(dims_.size()); }
  int dim(int a) const { return dims_[a]; }
  const std::vector<int>& dims() const { return dims_; }
  int size() const { return size_; }
  double spacing(int a) const { return 2.0 * M_PI / dims_[a]; }
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < axes(); ++a) v *= spacing(a);
    return v;
  }

  int coord(int node, int a) const { return (node / strides_[a]) % dims_[a]; }
  double theta(int node, int a) const { return coord(node, a) * spacing(a); }
  std::vector<int> multi(int node) const {
    std::vector<int> m(dims_.size());
    for (int a = 0; a < axes(); ++a) m[a] = coord(node, a);
    return m;
  }
  int index(const std::vector<int>& m) const {
    int i = 0;
    for (int a = 0; a < axes(); ++a) i += m[a] * strides_[a];
    return i;
  }

  struct Neighbor {
    int node;
    int wraps;  // number of periods crossed (positive forwards)
  };

  Neighbor neighbor(int node, int a, int offset) const {
    int c = coord(node, a);
    int t = c + offset;
    int wraps = 0;
    while (t >= dims_[a]) t -= dims_[a], ++wraps;
    while (t < 0) t += dims_[a], --wraps;
    return {node + (t - c) * strides_[a], wraps};
  }

  bool operator==(const GridShape& o) const { return dims_ == o.dims_; }

 private:
  std::vector<int> dims_;
  std::vector<int> strides_;
  int size_ = 0;
};

enum class DiffScheme { Spectral, FD4 };

/// Periodic first-derivative matrix on N nodes of [0, 2 pi).
inline Eigen::MatrixXd diff_matrix(int N, DiffScheme scheme) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
  const double h = 2.0 * M_PI / N;
  if (scheme == DiffScheme::FD4) {
    for (int i = 0; i < N; ++i) {
      D(i, (i + 1) % N) += 8.0 / (12 * h);
      D(i, (i + N - 1) % N) -= 8.0 / (12 * h);
      D(i, (i + 2) % N) -= 1.0 / (12 * h);
      D(i, (i + N - 2) % N) += 1.0 / (12 * h);
    }
    return D;
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      int k = i - j;
      double sign = (k % 2 == 0) ? 1.0 : -1.0;
      double x = k * h / 2.0;
      D(i, j) = (N % 2 == 0) ? 0.5 * sign / std::tan(x) : 0.5 * sign / std::sin(x);
    }
  return D;
}

/// Cached differentiation matrix shared between fields of the same size.
inline const Eigen::MatrixXd& cached_diff_matrix(int N, DiffScheme scheme) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<Eigen::MatrixXd>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{N, static_cast<int>(scheme)}];
  if (!slot) slot = std::make_unique<Eigen::MatrixXd>(diff_matrix(N, scheme));
  return *slot;
}

/// Applies an N x N matrix along one axis of a grid field.
inline Eigen::VectorXd apply_axis(const GridShape& g, const Eigen::MatrixXd& M, const Eigen::VectorXd& f, int a) {
  Eigen::VectorXd out(g.size());
  const int N = g.dim(a);
  Eigen::VectorXd line(N);
  for (int node = 0; node < g.size(); ++node) {
    if (g.coord(node, a) != 0) continue;
    for (int k = 0; k < N; ++k) line[k] = f[g.neighbor(node, a, k).node];
    Eigen::VectorXd r = M * line;
    for (int k = 0; k < N; ++k) out[g.neighbor(node, a, k).node] = r[k];
  }
  return out;
}

/// Central first-derivative weights for offsets -m..m (order 2m, m = 1..4), unit spacing.
inline std::vector<double> central_weights(int order) {
  switch (order) {
    case 2: return {-0.5, 0.0, 0.5};
    case 4: return {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
    case 6: return {-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60};
    case 8: return {1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0, 4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
    default: fail(ErrorKind::DimensionMismatch, "stencil order must be 2, 4, 6 or 8");
  }
}

}  // namespace trgeom
