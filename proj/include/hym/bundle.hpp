#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hym/geometry.hpp"

namespace hym {

/// Raised when the evolving metric loses positive-definiteness or a fiberwise
/// inversion fails. Callers treat it as a numerical abort.
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BundleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CocycleKind { kNone, kTheta };

struct CocycleSpec {
  CocycleKind kind = CocycleKind::kNone;
  double amplitude = 1.0;
};

CocycleKind parse_cocycle_kind(const std::string& name);
std::string cocycle_name(CocycleKind kind);

/// Degree-k theta function in the unitary frame, theta(kz | k tau) e^{-pi k Im(tau) y^2}.
/// Holomorphic for the twisted d_bar; k = 0 gives the constant 1.
cd theta_unitary(const TorusGeometry& geo, int k, double x, double y);

/// Fixed smooth periodic bump used to localize the cocycle.
double cocycle_bump(double x, double y);

/// E = L_{d_1} + ... + L_{d_r} with the off-diagonal part of the holomorphic
/// structure given by `structure` (the dzbar coefficient, strictly upper triangular).
struct ModelBundle {
  TorusGeometry geo;
  std::vector<int> degrees;
  CocycleSpec cocycle;
  GridField structure;

  [[nodiscard]] int rank() const { return static_cast<int>(degrees.size()); }
  [[nodiscard]] int total_degree() const;
  [[nodiscard]] double mean_slope() const { return static_cast<double>(total_degree()) / rank(); }
  /// Quotient slopes repeated with multiplicity, i.e. the sorted degree vector.
  [[nodiscard]] std::vector<double> declared_hn_type() const;
  /// Flag sizes s^1 < ... < s^p = r where the degree strictly drops.
  [[nodiscard]] std::vector<int> declared_hn_flags() const;
};

ModelBundle make_bundle(const TorusGeometry& geo, std::vector<int> degrees, CocycleSpec cocycle);

/// Pointwise Hermitian positive-definite field in the H0-unitary frame, so the
/// relative endomorphism h = H0^{-1} H has the same matrix entries.
class MetricField {
 public:
  MetricField() = default;
  /// Validates Hermitian symmetry (1e-12 relative) and positive-definiteness.
  explicit MetricField(GridField h);

  static MetricField background(const ModelBundle& bundle);

  [[nodiscard]] const GridField& field() const { return h_; }
  [[nodiscard]] int rank() const { return h_.rank(); }
  [[nodiscard]] double min_eigenvalue() const;
  [[nodiscard]] GridField inverse() const;

 private:
  GridField h_;
};

/// Curvature of the Chern connection of (dbar_0, H).
struct CurvaturePack {
  GridField connection;  ///< (1,0) connection form relative to the background d_z
  GridField form;        ///< Chern form (i / 2 pi) F as a dz^dzbar coefficient
  GridField lambda_f;    ///< Lambda F, H-self-adjoint with integer trace integral
};

GridField chern_connection(const ModelBundle& bundle, const MetricField& metric);
CurvaturePack curvature(const ModelBundle& bundle, const MetricField& metric);

/// Same computation for an arbitrary dzbar structure (used by the gauge route).
CurvaturePack curvature_for_structure(const TorusGeometry& geo, std::span<const int> degrees,
                                      const GridField& structure, const MetricField& metric);

double degree(const ModelBundle& bundle, const MetricField& metric);
double slope(const ModelBundle& bundle, const MetricField& metric);

/// dbar_E on End(E): d_bar(phi) + [B, phi].
GridField dbar_end(const GridField& phi, const GridField& structure, const TorusGeometry& geo);

/// L2 norm squared of an End(E)-valued (0,1)-form given by its dzbar
/// coefficient, measured with the metric H.
double form01_norm_sq(const GridField& alpha, const MetricField& metric, const TorusGeometry& geo);

/// Seeded band-limited random Hermitian field s with sup |s_ab| = magnitude,
/// evaluated analytically so the same seed gives the same function at every n_grid.
GridField random_hermitian(const ModelBundle& bundle, std::uint64_t seed, double magnitude);

/// Pointwise exp of a Hermitian field.
GridField hermitian_exp(const GridField& s);

/// H = H0 exp(s) for s from random_hermitian.
MetricField random_metric(const ModelBundle& bundle, std::uint64_t seed, double magnitude);

/// Background metric constants, derived independently in the holomorphic frame.
struct BackgroundCalibration {
  /// exponent c_a in H0_a = exp(-c_a (Im z)^2) fitted from the automorphy law.
  std::vector<double> exponent;
  /// Lambda F0 obtained by differencing log H0 with that exponent.
  std::vector<double> lambda_f0;
  double max_deviation = 0.0;
};

/// Throws NumericalAbort if the calibrated background curvature differs from
/// diag(d) by more than 1e-10.
BackgroundCalibration calibrate_background(const TorusGeometry& geo, std::span<const int> degrees);

}  // namespace hym
