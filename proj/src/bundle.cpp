#include "hym/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace hym {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinEigenvalue = 1e-14;
constexpr int kThetaTerms = 8;
constexpr int kBand = 3;
constexpr int kNormalizationGrid = 64;

using Solver = Eigen::SelfAdjointEigenSolver<Mat>;

Solver decompose(const Mat& m, std::size_t p) {
  Solver es(m);
  if (es.info() != Eigen::Success) {
    throw NumericalAbort("metric eigen-decomposition failed at grid point " + std::to_string(p));
  }
  if (es.eigenvalues().minCoeff() <= kMinEigenvalue) {
    throw NumericalAbort("metric lost positive-definiteness at grid point " + std::to_string(p) +
                         " (min eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  return es;
}

struct Mode {
  int m1;
  int m2;
  cd coeff;
};

std::vector<Mode> draw_modes(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Mode> modes;
  for (int m2 = -kBand; m2 <= kBand; ++m2) {
    for (int m1 = -kBand; m1 <= kBand; ++m1) {
      const double envelope = std::exp(-0.25 * (m1 * m1 + m2 * m2));
      const double re = normal(rng);
      const double im = normal(rng);
      modes.push_back({m1, m2, envelope * cd(re, im)});
    }
  }
  return modes;
}

cd eval_modes(const std::vector<Mode>& modes, double x, double y) {
  cd acc = 0.0;
  for (const auto& m : modes) acc += m.coeff * std::polar(1.0, 2.0 * kPi * (m.m1 * x + m.m2 * y));
  return acc;
}

// Pointwise value of the (a,b) entry of the random field, before normalization.
struct RandomEntry {
  int a;
  int b;
  int weight;
  std::vector<Mode> modes;

  cd operator()(const TorusGeometry& geo, double x, double y) const {
    const cd p = eval_modes(modes, x, y);
    if (a == b) return p.real();
    return p * theta_unitary(geo, weight, x, y);
  }
};

}  // namespace

CocycleKind parse_cocycle_kind(const std::string& name) {
  if (name == "none") return CocycleKind::kNone;
  if (name == "theta") return CocycleKind::kTheta;
  throw BundleError("unknown cocycle generator '" + name + "' (expected 'none' or 'theta')");
}

std::string cocycle_name(CocycleKind kind) { return kind == CocycleKind::kTheta ? "theta" : "none"; }

cd theta_unitary(const TorusGeometry& geo, int k, double x, double y) {
  if (k == 0) return 1.0;
  if (k < 0) throw BundleError("theta functions exist only in non-negative degree");
  const double tau1 = geo.tau.real();
  const double tau2 = geo.tau.imag();
  const double re_z = x + tau1 * y;
  cd acc = 0.0;
  for (int n = -kThetaTerms; n <= kThetaTerms; ++n) {
    const double u = n + y;
    const double mag = std::exp(-kPi * k * tau2 * u * u);
    const double phase = kPi * n * n * k * tau1 + 2.0 * kPi * n * k * re_z;
    acc += std::polar(mag, phase);
  }
  return acc;
}

double cocycle_bump(double x, double y) {
  return std::exp(0.5 * (std::cos(2.0 * kPi * x) + std::cos(2.0 * kPi * y) - 2.0));
}

int ModelBundle::total_degree() const {
  int s = 0;
  for (int d : degrees) s += d;
  return s;
}

std::vector<double> ModelBundle::declared_hn_type() const {
  return {degrees.begin(), degrees.end()};
}

std::vector<int> ModelBundle::declared_hn_flags() const {
  std::vector<int> flags;
  for (int a = 1; a < rank(); ++a)
    if (degrees[a] != degrees[a - 1]) flags.push_back(a);
  flags.push_back(rank());
  return flags;
}

ModelBundle make_bundle(const TorusGeometry& geo, std::vector<int> degrees, CocycleSpec cocycle) {
  if (degrees.empty() || static_cast<int>(degrees.size()) > kMaxRank) {
    throw BundleError("rank must be between 1 and " + std::to_string(kMaxRank));
  }
  if (!std::is_sorted(degrees.begin(), degrees.end(), std::greater<>())) {
    throw BundleError("degrees must be block-sorted non-increasing");
  }
  if (!std::isfinite(cocycle.amplitude)) throw BundleError("cocycle amplitude must be finite");

  ModelBundle bundle{geo, std::move(degrees), cocycle, {}};
  bundle.structure = GridField::end_field(geo, bundle.degrees);
  if (cocycle.kind == CocycleKind::kNone || cocycle.amplitude == 0.0) return bundle;

  const int r = bundle.rank();
  for (int j = 0; j < geo.n_grid; ++j) {
    for (int i = 0; i < geo.n_grid; ++i) {
      const double x = geo.x(i), y = geo.y(j);
      const double bump = cocycle.amplitude * cocycle_bump(x, y);
      Mat& m = bundle.structure.at(i, j);
      for (int a = 0; a < r; ++a)
        for (int b = a + 1; b < r; ++b) m(a, b) = bump * theta_unitary(geo, bundle.degrees[a] - bundle.degrees[b], x, y);
    }
  }
  return bundle;
}

MetricField::MetricField(GridField h) : h_(std::move(h)) {
  for (std::size_t p = 0; p < h_.size(); ++p) {
    const Mat& m = h_[p];
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw NumericalAbort("metric is not Hermitian at grid point " + std::to_string(p));
    }
    decompose(m, p);
  }
}

MetricField MetricField::background(const ModelBundle& bundle) {
  return MetricField(GridField::identity(bundle.geo, bundle.degrees));
}

double MetricField::min_eigenvalue() const {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < h_.size(); ++p) {
    Solver es(h_[p], Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return lo;
}

GridField MetricField::inverse() const {
  GridField out = GridField::zeros_like(h_);
  for (std::size_t p = 0; p < h_.size(); ++p) {
    const Solver es = decompose(h_[p], p);
    out[p] = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  }
  return out;
}

namespace {

GridField connection_form(const TorusGeometry& geo, const GridField& structure, const MetricField& metric,
                          const GridField& inv) {
  const GridField& g = metric.field();
  const GridField dz_g = d_z(g, geo);
  const GridField b_adj = structure.adjoint();
  GridField a = GridField::zeros_like(g);
  for (std::size_t p = 0; p < g.size(); ++p) a[p].noalias() = inv[p] * (dz_g[p] - b_adj[p] * g[p]);
  return a;
}

}  // namespace

GridField chern_connection(const ModelBundle& bundle, const MetricField& metric) {
  return connection_form(bundle.geo, bundle.structure, metric, metric.inverse());
}

CurvaturePack curvature_for_structure(const TorusGeometry& geo, std::span<const int> degrees,
                                      const GridField& structure, const MetricField& metric) {
  if (!structure.same_layout(metric.field())) throw BundleError("structure and metric layouts differ");
  const GridField inv = metric.inverse();
  CurvaturePack pack;
  pack.connection = connection_form(geo, structure, metric, inv);

  GridField k = d_z(structure, geo);
  k -= d_bar(pack.connection, geo);
  k += commutator(pack.connection, structure);
  const double tau2 = geo.tau.imag();
  for (std::size_t p = 0; p < k.size(); ++p)
    for (int a = 0; a < k.rank(); ++a) k[p](a, a) += kPi * degrees[a] / tau2;

  // The difference stencil breaks the Leibniz rule at O(h^4), which leaves K only
  // approximately H-self-adjoint; keep its H-self-adjoint part.
  const GridField& g = metric.field();
  for (std::size_t p = 0; p < k.size(); ++p) k[p] = 0.5 * (k[p] + inv[p] * k[p].adjoint() * g[p]).eval();

  pack.form = cd(0.0, 0.5 / kPi) * std::move(k);
  pack.lambda_f = lambda_contract(pack.form, geo);
  return pack;
}

CurvaturePack curvature(const ModelBundle& bundle, const MetricField& metric) {
  return curvature_for_structure(bundle.geo, bundle.degrees, bundle.structure, metric);
}

double degree(const ModelBundle& bundle, const MetricField& metric) {
  const CurvaturePack pack = curvature(bundle, metric);
  return integrate(bundle.geo, [&](std::size_t p) { return pack.lambda_f[p].trace().real(); });
}

double slope(const ModelBundle& bundle, const MetricField& metric) {
  return degree(bundle, metric) / bundle.rank();
}

GridField dbar_end(const GridField& phi, const GridField& structure, const TorusGeometry& geo) {
  GridField out = d_bar(phi, geo);
  out += commutator(structure, phi);
  return out;
}

double form01_norm_sq(const GridField& alpha, const MetricField& metric, const TorusGeometry& geo) {
  const GridField& g = metric.field();
  const GridField inv = metric.inverse();
  const double s = integrate(geo, [&](std::size_t p) {
    return (alpha[p] * inv[p] * alpha[p].adjoint() * g[p]).trace().real();
  });
  return geo.tau.imag() / kPi * s;
}

GridField random_hermitian(const ModelBundle& bundle, std::uint64_t seed, double magnitude) {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) throw BundleError("perturbation magnitude must be >= 0");
  const TorusGeometry& geo = bundle.geo;
  const int r = bundle.rank();
  std::mt19937_64 rng(seed);
  std::vector<RandomEntry> entries;
  for (int a = 0; a < r; ++a)
    for (int b = a; b < r; ++b) entries.push_back({a, b, bundle.degrees[a] - bundle.degrees[b], draw_modes(rng)});

  // Normalize on a fixed reference grid so the function does not depend on n_grid.
  double sup = 0.0;
  for (int j = 0; j < kNormalizationGrid; ++j) {
    for (int i = 0; i < kNormalizationGrid; ++i) {
      const double x = static_cast<double>(i) / kNormalizationGrid, y = static_cast<double>(j) / kNormalizationGrid;
      for (const auto& e : entries) sup = std::max(sup, std::abs(e(geo, x, y)));
    }
  }
  const double scale = sup > 0.0 ? magnitude / sup : 0.0;

  GridField s = GridField::end_field(geo, bundle.degrees);
  for (int j = 0; j < geo.n_grid; ++j) {
    for (int i = 0; i < geo.n_grid; ++i) {
      Mat& m = s.at(i, j);
      for (const auto& e : entries) {
        const cd v = scale * e(geo, geo.x(i), geo.y(j));
        m(e.a, e.b) = v;
        m(e.b, e.a) = std::conj(v);
      }
    }
  }
  return s;
}

GridField hermitian_exp(const GridField& s) {
  GridField out = GridField::zeros_like(s);
  for (std::size_t p = 0; p < s.size(); ++p) {
    Solver es(s[p]);
    out[p] = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().adjoint();
    out[p] = 0.5 * (out[p] + out[p].adjoint()).eval();
  }
  return out;
}

MetricField random_metric(const ModelBundle& bundle, std::uint64_t seed, double magnitude) {
  return MetricField(hermitian_exp(random_hermitian(bundle, seed, magnitude)));
}

BackgroundCalibration calibrate_background(const TorusGeometry& geo, std::span<const int> degrees) {
  const double tau2 = geo.tau.imag();
  BackgroundCalibration cal;
  for (int d : degrees) {
    // Automorphy: log H0(v + tau2) - log H0(v) = -2 pi d (2 v + tau2) for v = Im z.
    // With log H0 = -c v^2 the left side is -c (2 v tau2 + tau2^2); least squares for c.
    double num = 0.0, den = 0.0;
    for (int j = 0; j < 16; ++j) {
      const double v = tau2 * j / 16.0;
      const double basis = 2.0 * v * tau2 + tau2 * tau2;
      num += 2.0 * kPi * d * (2.0 * v + tau2) * basis;
      den += basis * basis;
    }
    const double c = num / den;
    // Lambda F0 = (tau2 / pi) * (-d_z d_zbar log H0) = -(tau2 / 4 pi) d_v^2 log H0.
    const double dv = 0.25 * tau2;
    auto log_h = [c](double v) { return -c * v * v; };
    double lf = 0.0;
    for (int j = 0; j < 8; ++j) {
      const double v = tau2 * j / 8.0;
      const double second = (-log_h(v - 2 * dv) + 16 * log_h(v - dv) - 30 * log_h(v) + 16 * log_h(v + dv) -
                             log_h(v + 2 * dv)) /
                            (12.0 * dv * dv);
      lf += -tau2 / (4.0 * kPi) * second;
    }
    lf /= 8.0;
    cal.exponent.push_back(c);
    cal.lambda_f0.push_back(lf);
    cal.max_deviation = std::max(cal.max_deviation, std::abs(lf - d));
  }
  if (cal.max_deviation > 1e-10) {
    throw NumericalAbort("background calibration failed: Lambda F0 deviates from diag(d) by " +
                         std::to_string(cal.max_deviation));
  }
  return cal;
}

}  // namespace hym
