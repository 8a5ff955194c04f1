#include "hym/flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace hym {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxHalvings = 10;
constexpr double kJumpFactor = 10.0;
constexpr int kTaylorDegree = 12;
constexpr int kQuadratureNodes = 64;
constexpr double kDiffusiveSafety = 0.8;

using Solver = Eigen::SelfAdjointEigenSolver<Mat>;

Mat apply_fn(const Mat& m, auto&& fn) {
  Solver es(m);
  return es.eigenvectors() * es.eigenvalues().unaryExpr(fn).asDiagonal() * es.eigenvectors().adjoint();
}

Mat herm_sqrt(const Mat& m) { return apply_fn(m, [](double x) { return std::sqrt(x); }); }
Mat herm_log(const Mat& m) { return apply_fn(m, [](double x) { return std::log(x); }); }

// exp(a) by Horner on the degree-12 Taylor polynomial; positive for real spectra.
Mat taylor_exp(const Mat& a) {
  const int r = static_cast<int>(a.rows());
  Mat acc = Mat::Identity(r, r);
  for (int k = kTaylorDegree; k >= 1; --k) acc = (Mat::Identity(r, r) + a * acc / double(k)).eval();
  return acc;
}

double inf_norm(const Mat& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

GridField shifted_curvature(const CurvaturePack& pack, double mu) {
  GridField x = pack.lambda_f;
  for (std::size_t p = 0; p < x.size(); ++p) x[p].diagonal().array() -= mu;
  return x;
}

// mean Re Tr(a b)
double mean_tr(const GridField& a, const GridField& b, const TorusGeometry& geo) {
  return integrate(geo, [&](std::size_t p) { return (a[p] * b[p]).trace().real(); });
}

// L2 norm squared of an H-self-adjoint-ish endomorphism field measured with H.
double end_norm_sq(const GridField& d, const MetricField& metric, const TorusGeometry& geo) {
  const GridField inv = metric.inverse();
  const GridField& g = metric.field();
  return integrate(geo, [&](std::size_t p) { return (d[p] * inv[p] * d[p].adjoint() * g[p]).trace().real(); });
}

struct Trial {
  MetricField metric;
  CurvaturePack curv;
  GridField psi;
};

Trial advance(const ModelBundle& bundle, const FiltrationSpec& hn, const FlowState& state, const GridField& x,
              double dt) {
  const GridField& g = state.metric.field();
  GridField next = GridField::zeros_like(g);
  for (std::size_t p = 0; p < g.size(); ++p) {
    next[p] = g[p] * taylor_exp(-dt * x[p]);
    next[p] = 0.5 * (next[p] + next[p].adjoint()).eval();
  }
  Trial t{MetricField(std::move(next)), {}, {}};
  t.curv = curvature(bundle, t.metric);
  t.psi = psi(t.metric, hn);
  return t;
}

// -int Tr((Lambda F - Psi) X) and -int Tr((Lambda F - mu) X) for direction h^{-1} hdot = -X.
std::pair<double, double> functional_rates(const CurvaturePack& curv, const GridField& ps, const GridField& x,
                                           double mu, const TorusGeometry& geo) {
  double p_rate = 0.0, m_rate = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) {
    const Mat& lf = curv.lambda_f[q];
    p_rate -= ((lf - ps[q]) * x[q]).trace().real();
    Mat shifted = lf;
    shifted.diagonal().array() -= mu;
    m_rate -= (shifted * x[q]).trace().real();
  }
  return {p_rate * geo.weight(), m_rate * geo.weight()};
}

// Gauss-Legendre nodes and weights on [0, 1].
std::vector<std::pair<double, double>> gauss_legendre(int n) {
  std::vector<std::pair<double, double>> out;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(kPi * (i - 0.25) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double pn = std::legendre(n, x), pm = std::legendre(n - 1, x);
      dp = n * (x * pn - pm) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double pn = std::legendre(n, x), pm = std::legendre(n - 1, x);
    dp = n * (x * pn - pm) / (x * x - 1.0);
    out.emplace_back(0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp));
  }
  return out;
}

// int_0^1 int Tr((Lambda F - Psi) H^{-1} Hdot) along H_t = g e^{tL} g, where H^{-1} Hdot = g^{-1} L g.
struct SegmentIntegral {
  double total = 0.0;
  double psi_part = 0.0;
};

SegmentIntegral integrate_segment(const ModelBundle& bundle, const FiltrationSpec& hn, const GridField& g,
                                  const GridField& log_step) {
  const TorusGeometry& geo = bundle.geo;
  GridField dir = GridField::zeros_like(g);
  std::vector<Solver> eig(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) {
    dir[p] = g[p].inverse() * log_step[p] * g[p];
    eig[p].compute(log_step[p]);
  }
  SegmentIntegral out;
  for (const auto& [t, w] : gauss_legendre(kQuadratureNodes)) {
    GridField h = GridField::zeros_like(g);
    for (std::size_t p = 0; p < g.size(); ++p) {
      const Mat e = eig[p].eigenvectors() * (t * eig[p].eigenvalues()).array().exp().matrix().asDiagonal() *
                    eig[p].eigenvectors().adjoint();
      h[p] = g[p] * e * g[p];
      h[p] = 0.5 * (h[p] + h[p].adjoint()).eval();
    }
    const MetricField metric(std::move(h));
    const CurvaturePack curv = curvature(bundle, metric);
    const GridField ps = psi(metric, hn);
    out.total += w * (mean_tr(curv.lambda_f, dir, geo) - mean_tr(ps, dir, geo));
    out.psi_part += w * mean_tr(ps, dir, geo);
  }
  return out;
}

}  // namespace

FlowState initial_state(const ModelBundle& bundle, const FiltrationSpec& hn, MetricField initial) {
  FlowState s;
  s.metric = initial;
  s.reference = std::move(initial);
  s.gauge = GridField::identity(bundle.geo, bundle.degrees);
  s.ym_structure = bundle.structure;
  s.curv = curvature(bundle, s.metric);
  s.psi = psi(s.metric, hn);
  return s;
}

double stable_dt(const ModelBundle& bundle, const FlowState& state) {
  const TorusGeometry& geo = bundle.geo;
  const GridField x = shifted_curvature(state.curv, bundle.mean_slope());
  double xn = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) xn = std::max(xn, inf_norm(x[p]));
  // Linearized rate of the flow on the highest grid mode:
  // (Im tau / pi) * S^2 max(|tau - 1|^2, |tau + 1|^2) / (4 Im tau^2), S = stencil_symbol_max / h.
  const double tau2 = geo.tau.imag();
  const double s = stencil_symbol_max(geo.stencil_order) / geo.h();
  const double corner = std::max(std::norm(geo.tau - 1.0), std::norm(geo.tau + 1.0));
  const double rate = tau2 / kPi * s * s * corner / (4.0 * tau2 * tau2);
  double cap = kDiffusiveSafety * 2.0 / rate;
  if (xn > 0.0) cap = std::min(cap, 0.5 / xn);
  return cap;
}

StepReport donaldson_step(const ModelBundle& bundle, const FiltrationSpec& hn, FlowState& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double mu = bundle.mean_slope();
  const GridField x = shifted_curvature(state.curv, mu);
  const double before = std::max(state.curv.lambda_f.sup_norm(), 1e-8);
  double h = std::min(dt, stable_dt(bundle, state));

  StepReport report;
  for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
    std::optional<Trial> trial;
    try {
      trial = advance(bundle, hn, state, x, h);
    } catch (const NumericalAbort&) {
      trial.reset();
    }
    if (!trial || !(trial->curv.lambda_f.sup_norm() <= kJumpFactor * before)) {
      h *= 0.5;
      ++report.halvings;
      continue;
    }
    const auto [p0, m0] = functional_rates(state.curv, state.psi, x, mu, bundle.geo);
    const auto [p1, m1] = functional_rates(trial->curv, trial->psi, x, mu, bundle.geo);
    report.dt = h;
    report.p_increment = 0.5 * h * (p0 + p1);
    report.m_increment = 0.5 * h * (m0 + m1);
    state.t += h;
    state.p_acc += report.p_increment;
    state.m_acc += report.m_increment;
    state.metric = std::move(trial->metric);
    state.curv = std::move(trial->curv);
    state.psi = std::move(trial->psi);
    return report;
  }
  throw NumericalAbort("Donaldson step unstable after " + std::to_string(kMaxHalvings) + " halvings at t = " +
                       std::to_string(state.t));
}

double p_increment(const ModelBundle& bundle, const FiltrationSpec& hn, const FlowState& state, double dt) {
  FlowState copy = state;
  return donaldson_step(bundle, hn, copy, dt).p_increment;
}

void ym_gauge_update(const ModelBundle& bundle, FlowState& state) {
  const GridField& g0 = state.reference.field();
  const GridField& g = state.metric.field();
  GridField w = GridField::zeros_like(g);
  GridField w_inv = GridField::zeros_like(g);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const Mat r = herm_sqrt(g0[p]);
    const Mat r_inv = r.inverse();
    Mat hh = r_inv * g[p] * r_inv;
    hh = 0.5 * (hh + hh.adjoint()).eval();
    const Mat root = herm_sqrt(hh);
    w[p] = r_inv * root * r;
    w_inv[p] = r_inv * root.inverse() * r;
  }
  const GridField dbar_w = d_bar(w, bundle.geo);
  GridField b = GridField::zeros_like(g);
  for (std::size_t p = 0; p < g.size(); ++p)
    b[p] = w[p] * bundle.structure[p] * w_inv[p] - dbar_w[p] * w_inv[p];
  state.gauge = std::move(w);
  state.ym_structure = std::move(b);
}

GridField ym_direct_step(const ModelBundle& bundle, const GridField& structure, const MetricField& metric, double dt) {
  const CurvaturePack pack = curvature_for_structure(bundle.geo, bundle.degrees, structure, metric);
  GridField out = dbar_end(pack.lambda_f, structure, bundle.geo);
  out *= 0.5 * dt;
  out += structure;
  return out;
}

double gauge_residual(const ModelBundle& bundle, const FlowState& state) {
  const CurvaturePack pack =
      curvature_for_structure(bundle.geo, bundle.degrees, state.ym_structure, state.reference);
  GridField d = pack.lambda_f;
  for (std::size_t p = 0; p < d.size(); ++p)
    d[p] -= state.gauge[p] * state.curv.lambda_f[p] * state.gauge[p].inverse();
  return std::sqrt(end_norm_sq(d, state.reference, bundle.geo));
}

double psi_path_term(const FiltrationSpec& hn, const MetricField& h0, const MetricField& h1, const TorusGeometry& geo) {
  double total = 0.0;
  int prev = 0;
  auto logdet_ratio = [&](int s) {
    if (s == 0) return 0.0;
    return integrate(geo, [&](std::size_t p) {
      const double a = std::log(h1.field()[p].topLeftCorner(s, s).determinant().real());
      const double b = std::log(h0.field()[p].topLeftCorner(s, s).determinant().real());
      return a - b;
    });
  };
  for (std::size_t i = 0; i < hn.flags.size(); ++i) {
    total += hn.slopes[i] * (logdet_ratio(hn.flags[i]) - logdet_ratio(prev));
    prev = hn.flags[i];
  }
  return total;
}

PathIndependence path_independence_check(const ModelBundle& bundle, const FiltrationSpec& hn, const MetricField& h0,
                                         const MetricField& h1, std::uint64_t seed) {
  const GridField& g0 = h0.field();
  const GridField& g1 = h1.field();
  GridField r = GridField::zeros_like(g0);
  GridField log_full = GridField::zeros_like(g0);
  for (std::size_t p = 0; p < g0.size(); ++p) {
    r[p] = herm_sqrt(g0[p]);
    const Mat r_inv = r[p].inverse();
    Mat m = r_inv * g1[p] * r_inv;
    log_full[p] = herm_log(0.5 * (m + m.adjoint()));
  }

  PathIndependence out;
  const SegmentIntegral direct = integrate_segment(bundle, hn, r, log_full);
  out.p_log_path = direct.total;
  out.psi_part_log_path = direct.psi_part;

  // Midpoint R exp(L/2 + Q) R with Q a random Hermitian perturbation.
  const GridField q = random_hermitian(bundle, seed, 0.3);
  GridField log_a = GridField::zeros_like(g0);
  GridField gm_root = GridField::zeros_like(g0);
  GridField log_b = GridField::zeros_like(g0);
  for (std::size_t p = 0; p < g0.size(); ++p) {
    log_a[p] = 0.5 * log_full[p] + q[p];
    const Mat e = apply_fn(log_a[p], [](double x) { return std::exp(x); });
    Mat gm = r[p] * e * r[p];
    gm = 0.5 * (gm + gm.adjoint()).eval();
    gm_root[p] = herm_sqrt(gm);
    const Mat inv = gm_root[p].inverse();
    Mat m = inv * g1[p] * inv;
    log_b[p] = herm_log(0.5 * (m + m.adjoint()));
  }
  out.p_two_segment =
      integrate_segment(bundle, hn, r, log_a).total + integrate_segment(bundle, hn, gm_root, log_b).total;
  out.residual = std::abs(out.p_log_path - out.p_two_segment);
  return out;
}

double hym_energy(const FlowState& state, const TorusGeometry& geo) {
  return mean_tr(state.curv.lambda_f, state.curv.lambda_f, geo);
}

double y_functional(const FlowState& state, const TorusGeometry& geo) {
  const GridField d = state.curv.lambda_f - state.psi;
  return mean_tr(d, d, geo);
}

double key_inequality_monitor(const ModelBundle& bundle, const FlowState& state) {
  const GridField d = state.curv.lambda_f - state.psi;
  const GridField x = shifted_curvature(state.curv, bundle.mean_slope());
  return 2.0 * mean_tr(d, x, bundle.geo) - mean_tr(d, d, bundle.geo);
}

namespace {

// Eigenvalues of an H-self-adjoint endomorphism, ascending.
RealVec self_adjoint_eigenvalues(const Mat& a, const Mat& g) {
  Mat ga = g * a;
  ga = 0.5 * (ga + ga.adjoint()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(ga, g, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

std::vector<double> sff_bound_monitor(const ModelBundle& bundle, const FiltrationSpec& hn, const FlowState& state) {
  const GridField& g = state.metric.field();
  const GridField inv = state.metric.inverse();
  // Pointwise Frobenius norm in an H-unitary frame.
  const double abs_int = integrate(bundle.geo, [&](std::size_t p) {
    const Mat d = state.curv.lambda_f[p] - state.psi[p];
    return std::sqrt(std::max(0.0, (d * inv[p] * d.adjoint() * g[p]).trace().real()));
  });
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < hn.flags.size(); ++i)
    out.push_back(abs_int - second_fundamental_form_norm(bundle, state.metric, hn.flags[i]));
  return out;
}

double psi_gauge_residual(const FlowState& state) {
  const GridField& g0 = state.reference.field();
  double worst = 0.0;
  for (std::size_t p = 0; p < g0.size(); ++p) {
    const Mat pw = state.gauge[p] * state.psi[p] * state.gauge[p].inverse();
    // G0-self-adjoint: G0 pw = pw^* G0
    worst = std::max(worst, (g0[p] * pw - pw.adjoint() * g0[p]).cwiseAbs().maxCoeff());
  }
  return worst;
}

double energy_decay_monitor(const ModelBundle& bundle, const FiltrationSpec& hn, const FlowState& state, double dt) {
  const TorusGeometry& geo = bundle.geo;
  auto rate = [&](const CurvaturePack& curv, const MetricField& metric) {
    return -2.0 * form01_norm_sq(dbar_end(curv.lambda_f, bundle.structure, geo), metric, geo);
  };
  const double e0 = mean_tr(state.curv.lambda_f, state.curv.lambda_f, geo);
  const double r0 = rate(state.curv, state.metric);
  const Trial next = advance(bundle, hn, state, shifted_curvature(state.curv, bundle.mean_slope()), dt);
  const double e1 = mean_tr(next.curv.lambda_f, next.curv.lambda_f, geo);
  const double r1 = rate(next.curv, next.metric);
  const double lhs = (e1 - e0) / dt;
  const double rhs = 0.5 * (r0 + r1);
  return std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-10);
}

std::vector<double> lambda_spectrum(const FlowState& state, const TorusGeometry& geo) {
  const int r = state.metric.rank();
  std::vector<double> avg(r, 0.0);
  for (std::size_t p = 0; p < geo.size(); ++p) {
    const RealVec ev = self_adjoint_eigenvalues(state.curv.lambda_f[p], state.metric.field()[p]);
    for (int a = 0; a < r; ++a) avg[a] += ev[r - 1 - a];
  }
  for (double& v : avg) v *= geo.weight();
  return avg;
}

FlowSample sample_state(const ModelBundle& bundle, const FiltrationSpec& hn, FlowState& state, const FlowConfig& config,
                        double last_dt) {
  const TorusGeometry& geo = bundle.geo;
  FlowSample s;
  s.t = state.t;
  s.dt = last_dt;
  s.hym_energy = hym_energy(state, geo);
  s.y = y_functional(state, geo);
  s.p = state.p_acc;
  s.m = state.m_acc;
  for (std::size_t i = 0; i + 1 < hn.flags.size(); ++i)
    s.sff.push_back(second_fundamental_form_norm(bundle, state.metric, hn.flags[i]));
  s.spectrum = lambda_spectrum(state, geo);
  s.keyineq_slack = key_inequality_monitor(bundle, state);
  s.sff_slack = sff_bound_monitor(bundle, hn, state);
  s.psi_norm_sq = mean_tr(state.psi, state.psi, geo);
  s.min_eigenvalue = state.metric.min_eigenvalue();
  s.energy_decay_residual =
      energy_decay_monitor(bundle, hn, state, std::min(config.dt, stable_dt(bundle, state)));
  if (config.track_gauge) {
    ym_gauge_update(bundle, state);
    const CurvaturePack pack =
        curvature_for_structure(geo, bundle.degrees, state.ym_structure, state.reference);
    s.ym_energy = mean_tr(pack.lambda_f, pack.lambda_f, geo);
    s.gauge_residual = gauge_residual(bundle, state);
    s.psi_gauge_residual = psi_gauge_residual(state);
  } else {
    s.ym_energy = s.hym_energy;
  }
  return s;
}

FlowTrace run_flow(const ModelBundle& bundle, const FiltrationSpec& hn, FlowState& state, const FlowConfig& config) {
  if (!(config.dt > 0.0) || !(config.t_end > 0.0) || !(config.epsilon > 0.0) || config.sample_every < 1) {
    throw std::invalid_argument("flow config requires dt, t_end, epsilon > 0 and sample_every >= 1");
  }
  const auto start = std::chrono::steady_clock::now();
  FlowTrace trace;
  double last_dt = 0.0;
  try {
    trace.samples.push_back(sample_state(bundle, hn, state, config, last_dt));
    if (trace.samples.back().y < config.epsilon) {
      trace.status = FlowStatus::kConverged;
    } else {
      double y = trace.samples.back().y;
      double energy = trace.samples.back().hym_energy;
      while (state.t < config.t_end - 1e-12) {
        const double t0 = state.t;
        const StepReport rep = donaldson_step(bundle, hn, state, std::min(config.dt, config.t_end - state.t));
        last_dt = rep.dt;
        ++trace.steps;
        trace.halvings += rep.halvings;
        const double y_next = y_functional(state, bundle.geo);
        const double energy_next = hym_energy(state, bundle.geo);
        if (t0 >= config.transient) trace.max_y_rise = std::max(trace.max_y_rise, y_next - y);
        trace.max_energy_rise = std::max(trace.max_energy_rise, energy_next - energy);
        y = y_next;
        energy = energy_next;
        const bool converged = y < config.epsilon;
        const bool at_end = state.t >= config.t_end - 1e-12;
        if (converged || at_end || trace.steps % config.sample_every == 0)
          trace.samples.push_back(sample_state(bundle, hn, state, config, last_dt));
        if (converged) {
          trace.status = FlowStatus::kConverged;
          break;
        }
      }
    }
    if (trace.status != FlowStatus::kConverged) {
      trace.status = FlowStatus::kNotConverged;
      trace.message = "Y = " + std::to_string(trace.samples.back().y) + " at t_end = " + std::to_string(state.t);
    }
  } catch (const NumericalAbort& e) {
    trace.status = FlowStatus::kAborted;
    trace.message = e.what();
  }
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

}  // namespace hym
