#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hym {

using cd = std::complex<double>;

/// Bundles up to this rank are supported. Per-point matrices use fixed-capacity
/// storage so pointwise algebra never touches the heap.
inline constexpr int kMaxRank = 4;

using Mat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxRank, kMaxRank>;
using Vec = Eigen::Matrix<cd, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxRank, 1>;
using RealVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxRank, 1>;
using Weights = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxRank, kMaxRank>;

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat torus C / (Z + tau Z) with the Kaehler form normalized to unit volume.
///
/// Points are addressed by real coordinates (x, y) in [0,1)^2 with z = x + tau y.
/// The Euclidean area of the fundamental domain is Im tau; `vol_scale` holds it so
/// that the Kaehler form is omega = dA / vol_scale and quadrature is a plain grid mean.
struct TorusGeometry {
  cd tau;
  int n_grid = 0;
  double vol_scale = 0.0;
  int stencil_order = 8;  ///< accuracy order of the central-difference stencils: 4, 6 or 8

  [[nodiscard]] double h() const { return 1.0 / n_grid; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(n_grid) * n_grid; }
  [[nodiscard]] std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * n_grid + i;
  }
  [[nodiscard]] double x(int i) const { return i * h(); }
  [[nodiscard]] double y(int j) const { return j * h(); }
  [[nodiscard]] cd z(int i, int j) const { return x(i) + tau * y(j); }
  /// Quadrature weight of one grid point (uniform trapezoid, unit total volume).
  [[nodiscard]] double weight() const { return 1.0 / static_cast<double>(size()); }
};

inline constexpr int kDefaultStencilOrder = 8;

TorusGeometry make_geometry(cd tau, int n_grid, int stencil_order = kDefaultStencilOrder);

/// max over theta of |sum_q 2 c_q sin(q theta)|: the largest first-derivative
/// symbol of the stencil, in units of 1/h.
double stencil_symbol_max(int stencil_order);

/// Unit-modulus automorphy factor of a weight-k field in the H0-unitary frame:
/// f(x, y + 1) = automorphy_phase(k, x, y) * f(x, y). Translation in x is trivial.
cd automorphy_phase(const TorusGeometry& geo, int k, double x, double y);

/// Grid of r x r complex matrices with a per-entry automorphy weight.
///
/// Endomorphism fields of a bundle with degrees d carry weight d_a - d_b in
/// entry (a, b); a rank-1 field of weight k represents a section of L_k.
class GridField {
 public:
  GridField() = default;
  GridField(int n_grid, Weights weights);
  GridField(const TorusGeometry& geo, Weights weights) : GridField(geo.n_grid, std::move(weights)) {}

  static GridField zeros_like(const GridField& other);
  static GridField end_field(const TorusGeometry& geo, std::span<const int> degrees);
  static GridField identity(const TorusGeometry& geo, std::span<const int> degrees);
  static GridField scalar(const TorusGeometry& geo, int weight);

  [[nodiscard]] int rank() const { return static_cast<int>(weights_.rows()); }
  [[nodiscard]] int n_grid() const { return n_grid_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] const Weights& weights() const { return weights_; }

  Mat& operator[](std::size_t p) { return data_[p]; }
  const Mat& operator[](std::size_t p) const { return data_[p]; }
  Mat& at(int i, int j) { return data_[static_cast<std::size_t>(j) * n_grid_ + i]; }
  const Mat& at(int i, int j) const { return data_[static_cast<std::size_t>(j) * n_grid_ + i]; }

  [[nodiscard]] bool same_layout(const GridField& other) const;

  GridField& operator+=(const GridField& other);
  GridField& operator-=(const GridField& other);
  GridField& operator*=(cd s);

  /// Pointwise conjugate transpose; weights become -weights^T.
  [[nodiscard]] GridField adjoint() const;
  [[nodiscard]] double sup_norm() const;

 private:
  int n_grid_ = 0;
  Weights weights_;
  std::vector<Mat> data_;
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(cd s, GridField a);
/// Pointwise matrix product; weights compose as a_{ab} + b_{bc}.
GridField multiply(const GridField& a, const GridField& b);
/// a * b - b * a pointwise.
GridField commutator(const GridField& a, const GridField& b);

Weights weights_for_degrees(std::span<const int> degrees);

/// Covariant d/dzbar for the background Chern connection: entrywise
/// partial_zbar f + i pi k (Im z / Im tau) f with k the entry weight.
/// Central differences of order geo.stencil_order, ghost cells filled by the automorphy phase.
GridField d_bar(const GridField& field, const TorusGeometry& geo);

/// Covariant d/dz, partial_z f + i pi k (Im z / Im tau) f, same stencil.
GridField d_z(const GridField& field, const TorusGeometry& geo);

/// Contraction of a (1,1)-form stored as its dz^dzbar coefficient against
/// omega = (i / (2 Im tau)) dz^dzbar, so that lambda_contract(omega) = 1.
GridField lambda_contract(const GridField& two_form, const TorusGeometry& geo);

/// The Kaehler form as a (1,1)-form coefficient field (identity-valued).
GridField kaehler_form(const TorusGeometry& geo, std::span<const int> degrees);

/// Unit-volume quadrature of Tr(a b*).
cd l2_inner(const GridField& a, const GridField& b, const TorusGeometry& geo);

/// Unit-volume quadrature of a pointwise scalar function.
template <class F>
double integrate(const TorusGeometry& geo, F&& f) {
  double acc = 0.0;
  for (std::size_t p = 0; p < geo.size(); ++p) acc += f(p);
  return acc * geo.weight();
}

}  // namespace hym
