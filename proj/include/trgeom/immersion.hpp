#pragma once

// Periodic grid immersions of the n-torus (or a deck-twisted circle) into a chart,
// induced geometry and intrinsic calculus on grid fields.
//
// Field layouts: scalar = RVec(nodes); 1-form and tangent vector field = RMat(nodes x n)
// in the grid coordinate frame; 2-form = one n x n antisymmetric RMat per node;
// ambient vector field = one CVec per node.

#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "grid.hpp"
#include "kahler.hpp"
#include "trlinalg.hpp"

namespace trgeom {

using ChartPtr = std::shared_ptr<const KahlerChart>;
using GridTwoForm = std::vector<RMat>;

class GridImmersion {
 public:
  GridImmersion() = default;
  /// Ambient quantities (tangents, frame fields) are differentiated spectrally along untwisted
  /// axes and with central differences of this order along twisted ones.
  static constexpr int kDefaultStencil = 8;

  GridImmersion(ChartPtr chart, GridShape shape, std::vector<CVec> points, std::vector<int> twist = {},
                int stencil = kDefaultStencil, bool spectral = true, double tol = kTotallyRealTol)
      : chart_(std::move(chart)),
        shape_(std::move(shape)),
        points_(std::move(points)),
        twist_(std::move(twist)),
        weights_(central_weights(stencil)),
        spectral_(spectral) {
    if (twist_.empty()) twist_.assign(shape_.axes(), -1);
    if (static_cast<int>(points_.size()) != shape_.size())
      fail(ErrorKind::DimensionMismatch, "point count does not match grid size");
    if (shape_.axes() != chart_->n() || static_cast<int>(twist_.size()) != shape_.axes())
      fail(ErrorKind::DimensionMismatch, "grid axes must equal the chart dimension");
    for (int t : twist_)
      if (t >= static_cast<int>(chart_->decks().size()))
        fail(ErrorKind::InvalidImmersion, "twist names an undeclared deck transformation");
    build(tol);
  }

  const KahlerChart& chart() const { return *chart_; }
  const ChartPtr& chart_ptr() const { return chart_; }
  const GridShape& shape() const { return shape_; }
  int n() const { return shape_.axes(); }
  int size() const { return shape_.size(); }
  const std::vector<CVec>& points() const { return points_; }
  const CVec& point(int node) const { return points_[node]; }
  const std::vector<int>& twist() const { return twist_; }
  bool valid() const { return valid_; }
  const std::string& invalid_reason() const { return reason_; }

  void require_valid() const {
    if (!valid_) fail(ErrorKind::InvalidImmersion, reason_);
  }

  const TangentFrame& tangent_frame(int node) const {
    require_valid();
    return frames_[node];
  }
  const std::vector<TangentFrame>& frames() const {
    require_valid();
    return frames_;
  }
  const HermitianStructure& metric(int node) const {
    require_valid();
    return metrics_[node];
  }

  /// Same chart, grid and twist, new node positions.
  GridImmersion with_points(std::vector<CVec> pts) const {
    return GridImmersion(chart_, shape_, std::move(pts), twist_, stencil(), spectral_);
  }
  GridImmersion with_chart(ChartPtr chart) const {
    return GridImmersion(std::move(chart), shape_, points_, twist_, stencil(), spectral_);
  }
  int stencil() const { return static_cast<int>(weights_.size()) - 1; }
  bool spectral() const { return spectral_; }

  /// Position of node continued across `wraps` periods of axis a.
  CVec continued_point(int node, int a, int wraps) const {
    CVec z = points_[node];
    if (wraps == 0 || twist_[a] < 0) return z;
    const auto& g = chart_->decks()[twist_[a]];
    DeckTransform gi = g.inverse();
    for (int w = 0; w < std::abs(wraps); ++w) z = wraps > 0 ? g.apply(z) : gi.apply(z);
    return z;
  }

  /// Complex Jacobian carrying vectors at node to its continuation across `wraps` periods.
  CMat continuation_jacobian(int node, int a, int wraps) const {
    const int n = this->n();
    if (wraps == 0 || twist_[a] < 0) return CMat::Identity(n, n);
    const auto& g = chart_->decks()[twist_[a]];
    DeckTransform gi = g.inverse();
    CVec z = points_[node];
    CMat J = CMat::Identity(n, n);
    for (int w = 0; w < std::abs(wraps); ++w) {
      const DeckTransform& step = wraps > 0 ? g : gi;
      J = step.derivative(z) * J;
      z = step.apply(z);
    }
    return J;
  }

  /// Derivative along axis a of a per-node quantity. Untwisted axes are periodic and use
  /// Fourier differentiation; twisted axes use central differences where
  /// `transport(value, node, jac)` carries a value across the seam with the continuation Jacobian.
  template <class T, class Transport>
  std::vector<T> differentiate(const std::vector<T>& field, int a, Transport transport) const {
    std::vector<T> out(field.size());
    if (spectral_ && twist_[a] < 0) {
      const auto& D = cached_diff_matrix(shape_.dim(a), DiffScheme::Spectral);
      const int N = shape_.dim(a);
      std::vector<int> line(N);
      for (int node = 0; node < size(); ++node) {
        if (shape_.coord(node, a) != 0) continue;
        for (int k = 0; k < N; ++k) line[k] = shape_.neighbor(node, a, k).node;
        for (int k = 0; k < N; ++k) {
          T acc = field[line[k]] * 0.0;
          for (int j = 0; j < N; ++j)
            if (j != k) acc = acc + field[line[j]] * D(k, j);
          out[line[k]] = acc;
        }
      }
      return out;
    }
    const double h = shape_.spacing(a);
    for (int node = 0; node < size(); ++node) {
      T acc = field[node] * 0.0;
      const int m = stencil() / 2;
      for (int k = -m; k <= m; ++k) {
        if (k == 0) continue;
        auto nb = shape_.neighbor(node, a, k);
        const double w = weights_[k + m] / h;
        if (nb.wraps == 0 || twist_[a] < 0)
          acc = acc + field[nb.node] * w;
        else
          acc = acc + transport(field[nb.node], nb.node, continuation_jacobian(nb.node, a, nb.wraps)) * w;
      }
      out[node] = acc;
    }
    return out;
  }

  /// Derivative of ambient vectors (columns of each matrix) along axis a.
  std::vector<CMat> differentiate_vectors(const std::vector<CMat>& field, int a) const {
    return differentiate(field, a, [](const CMat& v, int, const CMat& J) -> CMat { return J * v; });
  }

  std::vector<CVec> differentiate_points(int a) const {
    if (spectral_ && twist_[a] < 0) return differentiate(points_, a, [](const CVec& v, int, const CMat&) { return v; });
    std::vector<CVec> out(size());
    const double h = shape_.spacing(a);
    for (int node = 0; node < size(); ++node) {
      CVec acc = CVec::Zero(n());
      const int m = stencil() / 2;
      for (int k = -m; k <= m; ++k) {
        if (k == 0) continue;
        auto nb = shape_.neighbor(node, a, k);
        acc += (weights_[k + m] / h) * continued_point(nb.node, a, nb.wraps);
      }
      out[node] = acc;
    }
    return out;
  }

 private:
  void build(double tol) {
    valid_ = true;
    for (int i = 0; i < size(); ++i)
      if (!chart_->in_domain(points_[i])) {
        valid_ = false;
        reason_ = "node " + std::to_string(i) + " outside chart domain";
        return;
      }
    frames_.assign(size(), TangentFrame::Zero(n(), n()));
    for (int a = 0; a < n(); ++a) {
      auto d = differentiate_points(a);
      for (int i = 0; i < size(); ++i) frames_[i].col(a) = d[i];
    }
    metrics_.resize(size());
    for (int i = 0; i < size(); ++i) {
      double defect = totally_real_defect(frames_[i]);
      if (!(defect > tol)) {
        valid_ = false;
        reason_ = "tangent frame not totally real at node " + std::to_string(i);
        return;
      }
      try {
        metrics_[i] = metric_at(*chart_, points_[i]);
      } catch (const Error& e) {
        valid_ = false;
        reason_ = e.what();
        return;
      }
    }
  }

  ChartPtr chart_;
  GridShape shape_;
  std::vector<CVec> points_;
  std::vector<int> twist_;
  std::vector<double> weights_;
  bool spectral_ = true;
  std::vector<TangentFrame> frames_;
  std::vector<HermitianStructure> metrics_;
  bool valid_ = false;
  std::string reason_;
};

inline ChartPtr share(KahlerChart chart) { return std::make_shared<const KahlerChart>(std::move(chart)); }

// ---- immersion families ---------------------------------------------------

inline GridImmersion circle(ChartPtr chart, double r, int N, cd center = 0.0) {
  GridShape g({N});
  std::vector<CVec> pts(N);
  for (int i = 0; i < N; ++i) pts[i] = CVec::Constant(1, center + r * std::exp(cd(0, g.theta(i, 0))));
  return GridImmersion(std::move(chart), g, std::move(pts));
}

/// (r e^{i theta_1}, ..., r e^{i theta_n}).
inline GridImmersion clifford_torus(ChartPtr chart, int N, double r = 1.0) {
  const int n = chart->n();
  GridShape g(std::vector<int>(n, N));
  std::vector<CVec> pts(g.size(), CVec(n));
  for (int i = 0; i < g.size(); ++i)
    for (int k = 0; k < n; ++k) pts[i][k] = r * std::exp(cd(0, g.theta(i, k)));
  return GridImmersion(std::move(chart), g, std::move(pts));
}

/// base + sum_a theta_a V_a, closed up by the translations 2 pi V_a (added as decks).
inline GridImmersion linear_torus(const KahlerChart& chart, const CMat& V, int N, CVec base = {}) {
  const int n = chart.n();
  if (V.rows() != n || V.cols() != n) fail(ErrorKind::DimensionMismatch, "linear torus frame must be n x n");
  if (base.size() == 0) base = CVec::Zero(n);
  KahlerChart ch = chart;
  std::vector<int> twist(n);
  for (int a = 0; a < n; ++a) {
    twist[a] = static_cast<int>(ch.decks().size());
    ch.add_deck(DeckTransform::translation(2.0 * M_PI * V.col(a)));
  }
  GridShape g(std::vector<int>(n, N));
  std::vector<CVec> pts(g.size());
  for (int i = 0; i < g.size(); ++i) {
    pts[i] = base;
    for (int a = 0; a < n; ++a) pts[i] += g.theta(i, a) * V.col(a);
  }
  return GridImmersion(share(std::move(ch)), g, std::move(pts), twist);
}

/// Core geodesic theta -> i exp(ell theta / 2 pi) of the cylinder UHP / <z -> e^ell z>.
inline GridImmersion core_geodesic(double ell, double c, int N) {
  GridShape g({N});
  std::vector<CVec> pts(N);
  for (int i = 0; i < N; ++i) pts[i] = CVec::Constant(1, cd(0, std::exp(ell * g.theta(i, 0) / (2 * M_PI))));
  return GridImmersion(share(hyperbolic_cylinder(ell, c)), g, std::move(pts), {0});
}

/// Clifford-type torus of radius r plus random low-frequency complex modes of size amp.
inline GridImmersion random_torus(ChartPtr chart, int N, unsigned seed, double r = 0.5, double amp = 0.08,
                                  int max_mode = 2) {
  const int n = chart->n();
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  GridShape g(std::vector<int>(n, N));
  std::vector<std::vector<int>> modes;
  std::vector<int> m(n, -max_mode);
  while (true) {
    int l1 = 0;
    for (int v : m) l1 += std::abs(v);
    if (l1 <= max_mode) modes.push_back(m);
    int a = 0;
    while (a < n && ++m[a] > max_mode) m[a++] = -max_mode;
    if (a == n) break;
  }
  std::vector<CVec> coeff(modes.size(), CVec(n));
  for (size_t j = 0; j < modes.size(); ++j) {
    double l2 = 0;
    for (int v : modes[j]) l2 += v * v;
    for (int k = 0; k < n; ++k) coeff[j][k] = cd(normal(rng), normal(rng)) * (amp / (1.0 + l2));
  }
  std::vector<CVec> pts(g.size(), CVec(n));
  for (int i = 0; i < g.size(); ++i) {
    for (int k = 0; k < n; ++k) pts[i][k] = r * std::exp(cd(0, g.theta(i, k)));
    for (size_t j = 0; j < modes.size(); ++j) {
      double phase = 0;
      for (int a = 0; a < n; ++a) phase += modes[j][a] * g.theta(i, a);
      pts[i] += coeff[j] * std::exp(cd(0, phase));
    }
  }
  return GridImmersion(std::move(chart), g, std::move(pts));
}

// ---- serialization --------------------------------------------------------

inline void write_csv(const GridImmersion& imm, std::ostream& os) {
  os << "# dims=";
  for (int a = 0; a < imm.n(); ++a) os << (a ? "," : "") << imm.shape().dim(a);
  os << " twist=";
  for (int a = 0; a < imm.n(); ++a) os << (a ? "," : "") << imm.twist()[a];
  os << "\nnode";
  for (int a = 0; a < imm.n(); ++a) os << ",i" << a;
  for (int k = 0; k < imm.n(); ++k) os << ",re_z" << k + 1 << ",im_z" << k + 1;
  os << "\n";
  os.precision(17);
  for (int i = 0; i < imm.size(); ++i) {
    os << i;
    for (int a = 0; a < imm.n(); ++a) os << "," << imm.shape().coord(i, a);
    for (int k = 0; k < imm.n(); ++k) os << "," << imm.point(i)[k].real() << "," << imm.point(i)[k].imag();
    os << "\n";
  }
}

inline GridImmersion read_csv(ChartPtr chart, std::istream& is) {
  std::string line;
  std::getline(is, line);
  auto parse_list = [](const std::string& s) {
    std::vector<int> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stoi(tok));
    return v;
  };
  auto dpos = line.find("dims="), tpos = line.find("twist=");
  if (line.rfind("#", 0) != 0 || dpos == std::string::npos || tpos == std::string::npos)
    fail(ErrorKind::ConfigError, "immersion CSV: missing '# dims=... twist=...' header");
  std::vector<int> dims = parse_list(line.substr(dpos + 5, line.find(' ', dpos) - dpos - 5));
  std::vector<int> twist = parse_list(line.substr(tpos + 6));
  GridShape g(dims);
  const int n = static_cast<int>(dims.size());
  std::getline(is, line);  // column names
  std::vector<CVec> pts(g.size(), CVec::Zero(n));
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (static_cast<int>(vals.size()) != 1 + n + 2 * n) fail(ErrorKind::ConfigError, "immersion CSV: bad row");
    std::vector<int> m(n);
    for (int a = 0; a < n; ++a) m[a] = static_cast<int>(vals[1 + a]);
    CVec z(n);
    for (int k = 0; k < n; ++k) z[k] = cd(vals[1 + n + 2 * k], vals[2 + n + 2 * k]);
    pts[g.index(m)] = z;
    ++rows;
  }
  if (rows != g.size()) fail(ErrorKind::ConfigError, "immersion CSV: row count does not match dims");
  return GridImmersion(std::move(chart), g, std::move(pts), twist);
}

// ---- induced geometry -----------------------------------------------------

struct VolumeFields {
  RVec volg, rho, volj;
};

/// Induced metric g_ab = Re h(d_a iota, d_b iota) per node.
inline std::vector<RMat> induced_metric(const GridImmersion& imm) {
  std::vector<RMat> g(imm.size(), RMat(imm.n(), imm.n()));
  for (int i = 0; i < imm.size(); ++i) {
    const auto& F = imm.tangent_frame(i);
    g[i] = hermitian_gram(F, imm.metric(i)).real();
  }
  return g;
}

inline VolumeFields volume_fields(const GridImmersion& imm) {
  imm.require_valid();
  VolumeFields v{RVec(imm.size()), RVec(imm.size()), RVec(imm.size())};
  for (int i = 0; i < imm.size(); ++i) {
    const auto& F = imm.tangent_frame(i);
    v.volg[i] = std::sqrt(hermitian_gram(F, imm.metric(i)).real().determinant());
    v.rho[i] = rho_j(F, imm.metric(i));
    v.volj[i] = v.rho[i] * v.volg[i];
  }
  return v;
}

struct TotalVolumes {
  double volg, volj;
};

inline TotalVolumes total_volumes(const GridImmersion& imm) {
  auto v = volume_fields(imm);
  double c = imm.shape().cell_volume();
  return {v.volg.sum() * c, v.volj.sum() * c};
}

/// Components form(d_a iota, d_b iota) of a real 2-form given on (Re, Im) coordinates.
template <class Supplier>
GridTwoForm pullback_two_form(const GridImmersion& imm, Supplier&& form) {
  imm.require_valid();
  const int n = imm.n();
  GridTwoForm out(imm.size(), RMat::Zero(n, n));
  if (n == 1) return out;
  for (int i = 0; i < imm.size(); ++i) {
    RMat F = form(imm.point(i));
    RMat B(2 * n, n);
    for (int a = 0; a < n; ++a) B.col(a) = to_real(imm.tangent_frame(i).col(a));
    RMat P = B.transpose() * F * B;
    out[i] = 0.5 * (P - P.transpose());
  }
  return out;
}

inline GridTwoForm pullback_kahler_form(const GridImmersion& imm) {
  return pullback_two_form(imm, [&](const CVec& z) { return hermitian_to_two_form(metric_at(imm.chart(), z).h); });
}
inline GridTwoForm pullback_ricci_form(const GridImmersion& imm) {
  return pullback_two_form(imm, [&](const CVec& z) { return ricci_form_at(imm.chart(), z).form; });
}

inline double sup_norm(const GridTwoForm& f) {
  double s = 0;
  for (const auto& m : f) s = std::max(s, m.cwiseAbs().maxCoeff());
  return s;
}

// ---- intrinsic calculus ---------------------------------------------------

class IntrinsicCalculus {
 public:
  IntrinsicCalculus(const GridShape& shape, std::vector<RMat> g, DiffScheme scheme = DiffScheme::Spectral)
      : shape_(shape), g_(std::move(g)) {
    for (int a = 0; a < shape_.axes(); ++a) D_.push_back(cached_diff_matrix(shape_.dim(a), scheme));
    ginv_.resize(g_.size());
    sqrtg_.resize(static_cast<Eigen::Index>(g_.size()));
    for (size_t i = 0; i < g_.size(); ++i) {
      ginv_[i] = g_[i].inverse();
      sqrtg_[static_cast<Eigen::Index>(i)] = std::sqrt(g_[i].determinant());
    }
  }
  explicit IntrinsicCalculus(const GridImmersion& imm, DiffScheme scheme = DiffScheme::Spectral)
      : IntrinsicCalculus(imm.shape(), induced_metric(imm), scheme) {}

  const GridShape& shape() const { return shape_; }
  int n() const { return shape_.axes(); }
  int size() const { return shape_.size(); }
  const std::vector<RMat>& g() const { return g_; }
  const std::vector<RMat>& ginv() const { return ginv_; }
  const RVec& sqrtg() const { return sqrtg_; }
  const RMat& D(int a) const { return D_[a]; }

  RVec partial(const RVec& f, int a) const { return apply_axis(shape_, D_[a], f, a); }

  RMat d(const RVec& f) const {
    RMat out(size(), n());
    for (int a = 0; a < n(); ++a) out.col(a) = partial(f, a);
    return out;
  }

  GridTwoForm d(const RMat& beta) const {
    std::vector<RMat> db(n(), RMat(size(), n()));
    for (int a = 0; a < n(); ++a) db[a] = d(RVec(beta.col(a)));  // db[b](i, a) = d_a beta_b
    GridTwoForm out(size(), RMat::Zero(n(), n()));
    for (int i = 0; i < size(); ++i)
      for (int a = 0; a < n(); ++a)
        for (int b = 0; b < n(); ++b) out[i](a, b) = db[b](i, a) - db[a](i, b);
    return out;
  }

  RMat sharp(const RMat& beta) const {
    RMat out(size(), n());
    for (int i = 0; i < size(); ++i) out.row(i) = (ginv_[i] * beta.row(i).transpose()).transpose();
    return out;
  }
  RMat flat(const RMat& V) const {
    RMat out(size(), n());
    for (int i = 0; i < size(); ++i) out.row(i) = (g_[i] * V.row(i).transpose()).transpose();
    return out;
  }

  /// (1/w) d_a(w V^a) for a positive density w.
  RVec div_density(const RMat& V, const RVec& w) const {
    RVec acc = RVec::Zero(size());
    for (int a = 0; a < n(); ++a) acc += partial(RVec(w.cwiseProduct(V.col(a))), a);
    return acc.cwiseQuotient(w);
  }
  RVec div(const RMat& V) const { return div_density(V, sqrtg_); }
  RMat grad(const RVec& f) const { return sharp(d(f)); }
  RVec codiff(const RMat& beta) const { return -div(sharp(beta)); }
  RVec laplacian(const RVec& f) const { return codiff(d(f)); }

  /// Integral of f vol_g.
  double integrate(const RVec& f) const { return f.cwiseProduct(sqrtg_).sum() * shape_.cell_volume(); }
  /// Integral of a density given in grid coordinates.
  double integrate_density(const RVec& density) const { return density.sum() * shape_.cell_volume(); }
  /// L2 pairing of 1-forms against vol_g.
  double inner(const RMat& a, const RMat& b) const {
    double s = 0;
    for (int i = 0; i < size(); ++i) s += (a.row(i) * ginv_[i]).dot(b.row(i)) * sqrtg_[i];
    return s * shape_.cell_volume();
  }

 private:
  GridShape shape_;
  std::vector<RMat> g_, ginv_;
  RVec sqrtg_;
  std::vector<RMat> D_;
};

}  // namespace trgeom
