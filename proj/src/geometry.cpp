#include "hym/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hym {

namespace {

constexpr double kPi = std::numbers::pi;

void require_layout(const GridField& a, const GridField& b, const char* what) {
  if (!a.same_layout(b)) {
    throw GeometryError(std::string(what) + ": automorphy weights or shapes do not match");
  }
}

struct Partials {
  std::vector<cd> dx;
  std::vector<cd> dy;
};

// Antisymmetric central-difference weights c_q for offsets q = 1..m.
std::span<const double> stencil_weights(int order) {
  static constexpr double c4[] = {2.0 / 3.0, -1.0 / 12.0};
  static constexpr double c6[] = {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
  static constexpr double c8[] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  switch (order) {
    case 4: return c4;
    case 6: return c6;
    case 8: return c8;
    default: throw GeometryError("stencil order must be 4, 6 or 8");
  }
}

// Central differences of one matrix entry in x and y. The x direction is
// periodic; the y direction wraps with the unit-modulus automorphy phase.
Partials entry_partials(const GridField& field, const TorusGeometry& geo, int a, int b) {
  const int n = geo.n_grid;
  const int k = field.weights()(a, b);
  const std::span<const double> c = stencil_weights(geo.stencil_order);
  const int m = static_cast<int>(c.size());
  const double inv_h = 1.0 / geo.h();

  std::vector<cd> f(geo.size());
  for (std::size_t p = 0; p < geo.size(); ++p) f[p] = field[p](a, b);

  Partials out{std::vector<cd>(geo.size()), std::vector<cd>(geo.size())};

  for (int j = 0; j < n; ++j) {
    const cd* row = &f[static_cast<std::size_t>(j) * n];
    for (int i = 0; i < n; ++i) {
      cd acc = 0.0;
      for (int q = 1; q <= m; ++q) acc += c[q - 1] * (row[(i + q) % n] - row[(i - q + n) % n]);
      out.dx[geo.index(i, j)] = acc * inv_h;
    }
  }

  // Ghost phases: row n + q comes from row q shifted by +tau, row -1 - q from
  // row n - 1 - q shifted by -tau.
  std::vector<cd> up(static_cast<std::size_t>(m) * n, 1.0), dn(static_cast<std::size_t>(m) * n, 1.0);
  if (k != 0) {
    for (int q = 0; q < m; ++q) {
      for (int i = 0; i < n; ++i) {
        const double xi = geo.x(i);
        up[q * n + i] = automorphy_phase(geo, k, xi, geo.y(q));
        dn[q * n + i] = 1.0 / automorphy_phase(geo, k, xi, geo.y(n - 1 - q) - 1.0);
      }
    }
  }
  auto value = [&](int i, int jj) -> cd {
    if (jj >= 0 && jj < n) return f[geo.index(i, jj)];
    if (jj >= n) return up[(jj - n) * n + i] * f[geo.index(i, jj - n)];
    return dn[(-1 - jj) * n + i] * f[geo.index(i, jj + n)];
  };
  for (int j = 0; j < n; ++j) {
    const bool interior = j >= m && j < n - m;
    for (int i = 0; i < n; ++i) {
      cd acc = 0.0;
      if (interior) {
        for (int q = 1; q <= m; ++q) acc += c[q - 1] * (f[geo.index(i, j + q)] - f[geo.index(i, j - q)]);
      } else {
        for (int q = 1; q <= m; ++q) acc += c[q - 1] * (value(i, j + q) - value(i, j - q));
      }
      out.dy[geo.index(i, j)] = acc * inv_h;
    }
  }
  return out;
}

enum class Direction { kHolomorphic, kAntiHolomorphic };

GridField covariant_derivative(const GridField& field, const TorusGeometry& geo, Direction dir) {
  if (field.n_grid() != geo.n_grid) throw GeometryError("field grid does not match geometry");
  const double tau2 = geo.tau.imag();
  const cd denom(0.0, 2.0 * tau2);
  GridField out = GridField::zeros_like(field);
  const int r = field.rank();
  for (int b = 0; b < r; ++b) {
    for (int a = 0; a < r; ++a) {
      const Partials d = entry_partials(field, geo, a, b);
      const int k = field.weights()(a, b);
      for (int j = 0; j < geo.n_grid; ++j) {
        const cd twist(0.0, kPi * k * geo.y(j));
        for (int i = 0; i < geo.n_grid; ++i) {
          const std::size_t p = geo.index(i, j);
          cd v = dir == Direction::kAntiHolomorphic ? (geo.tau * d.dx[p] - d.dy[p]) / denom
                                                    : (d.dy[p] - std::conj(geo.tau) * d.dx[p]) / denom;
          out[p](a, b) = v + twist * field[p](a, b);
        }
      }
    }
  }
  return out;
}

}  // namespace

TorusGeometry make_geometry(cd tau, int n_grid, int stencil_order) {
  if (!(tau.imag() > 0.0)) throw GeometryError("Im tau must be positive");
  if (n_grid % 2 != 0) throw GeometryError("n_grid must be even");
  if (n_grid < 16) throw GeometryError("n_grid must be at least 16");
  stencil_weights(stencil_order);
  return TorusGeometry{tau, n_grid, tau.imag(), stencil_order};
}

double stencil_symbol_max(int stencil_order) {
  const std::span<const double> c = stencil_weights(stencil_order);
  double best = 0.0;
  constexpr int kSamples = 20000;
  for (int s = 0; s <= kSamples; ++s) {
    const double theta = kPi * s / kSamples;
    double v = 0.0;
    for (std::size_t q = 0; q < c.size(); ++q) v += 2.0 * c[q] * std::sin((q + 1.0) * theta);
    best = std::max(best, std::abs(v));
  }
  return best;
}

cd automorphy_phase(const TorusGeometry& geo, int k, double x, double y) {
  const double re_z = x + geo.tau.real() * y;
  return std::polar(1.0, -kPi * k * (2.0 * re_z + geo.tau.real()));
}

Weights weights_for_degrees(std::span<const int> degrees) {
  const int r = static_cast<int>(degrees.size());
  if (r < 1 || r > kMaxRank) throw GeometryError("rank must be between 1 and " + std::to_string(kMaxRank));
  Weights w(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) w(a, b) = degrees[a] - degrees[b];
  return w;
}

GridField::GridField(int n_grid, Weights weights) : n_grid_(n_grid), weights_(std::move(weights)) {
  const int r = static_cast<int>(weights_.rows());
  if (r < 1 || r > kMaxRank || weights_.cols() != r) throw GeometryError("malformed weight matrix");
  data_.assign(static_cast<std::size_t>(n_grid) * n_grid, Mat::Zero(r, r));
}

GridField GridField::zeros_like(const GridField& other) {
  GridField g;
  g.n_grid_ = other.n_grid_;
  g.weights_ = other.weights_;
  g.data_.assign(other.data_.size(), Mat::Zero(other.rank(), other.rank()));
  return g;
}

GridField GridField::end_field(const TorusGeometry& geo, std::span<const int> degrees) {
  return GridField(geo, weights_for_degrees(degrees));
}

GridField GridField::identity(const TorusGeometry& geo, std::span<const int> degrees) {
  GridField g = end_field(geo, degrees);
  for (auto& m : g.data_) m.setIdentity();
  return g;
}

GridField GridField::scalar(const TorusGeometry& geo, int weight) {
  Weights w(1, 1);
  w(0, 0) = weight;
  return GridField(geo, w);
}

bool GridField::same_layout(const GridField& other) const {
  return n_grid_ == other.n_grid_ && weights_ == other.weights_;
}

GridField& GridField::operator+=(const GridField& other) {
  require_layout(*this, other, "operator+=");
  for (std::size_t p = 0; p < data_.size(); ++p) data_[p] += other.data_[p];
  return *this;
}

GridField& GridField::operator-=(const GridField& other) {
  require_layout(*this, other, "operator-=");
  for (std::size_t p = 0; p < data_.size(); ++p) data_[p] -= other.data_[p];
  return *this;
}

GridField& GridField::operator*=(cd s) {
  for (auto& m : data_) m *= s;
  return *this;
}

GridField GridField::adjoint() const {
  GridField g;
  g.n_grid_ = n_grid_;
  g.weights_ = -weights_.transpose();
  g.data_.resize(data_.size());
  for (std::size_t p = 0; p < data_.size(); ++p) g.data_[p] = data_[p].adjoint();
  return g;
}

double GridField::sup_norm() const {
  double s = 0.0;
  for (const auto& m : data_) s = std::max(s, m.cwiseAbs().maxCoeff());
  return s;
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(cd s, GridField a) { return a *= s; }

GridField multiply(const GridField& a, const GridField& b) {
  if (a.n_grid() != b.n_grid() || a.rank() != b.rank()) throw GeometryError("multiply: shape mismatch");
  const int r = a.rank();
  Weights w(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) w(i, j) = a.weights()(i, 0) + b.weights()(0, j);
  GridField out(a.n_grid(), w);
  for (std::size_t p = 0; p < a.size(); ++p) out[p].noalias() = a[p] * b[p];
  return out;
}

GridField commutator(const GridField& a, const GridField& b) {
  require_layout(a, b, "commutator");
  GridField out = GridField::zeros_like(a);
  for (std::size_t p = 0; p < a.size(); ++p) out[p].noalias() = a[p] * b[p] - b[p] * a[p];
  return out;
}

GridField d_bar(const GridField& field, const TorusGeometry& geo) {
  return covariant_derivative(field, geo, Direction::kAntiHolomorphic);
}

GridField d_z(const GridField& field, const TorusGeometry& geo) {
  return covariant_derivative(field, geo, Direction::kHolomorphic);
}

GridField lambda_contract(const GridField& two_form, const TorusGeometry& geo) {
  GridField out = two_form;
  out *= cd(0.0, -2.0 * geo.vol_scale);
  return out;
}

GridField kaehler_form(const TorusGeometry& geo, std::span<const int> degrees) {
  GridField w = GridField::identity(geo, degrees);
  w *= cd(0.0, 0.5 / geo.vol_scale);
  return w;
}

cd l2_inner(const GridField& a, const GridField& b, const TorusGeometry& geo) {
  if (!a.same_layout(b) || a.n_grid() != geo.n_grid) {
    throw GeometryError("l2_inner: automorphy weights differ (fields live in different bundles)");
  }
  cd acc = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) acc += a[p].cwiseProduct(b[p].conjugate()).sum();
  return acc * geo.weight();
}

}  // namespace hym
