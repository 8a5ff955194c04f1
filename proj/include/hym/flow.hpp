#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hym/bundle.hpp"
#include "hym/filtration.hpp"

namespace hym {

struct FlowConfig {
  double dt = 1e-3;
  double t_end = 50.0;
  double epsilon = 1e-4;
  int sample_every = 100;
  /// Gauge route (Yang-Mills connection, residual, ym energy) at every sample.
  bool track_gauge = true;
  /// Y is only required to be non-increasing for t >= transient.
  double transient = 1.0;
};

/// Donaldson heat flow state. The reference metric is the initial metric, so
/// h = reference^{-1} metric starts at the identity.
struct FlowState {
  double t = 0.0;
  MetricField metric;
  MetricField reference;
  GridField gauge;         ///< w = h^{1/2}, refreshed by ym_gauge_update
  GridField ym_structure;  ///< dzbar part of the Yang-Mills connection paired with the reference metric
  double p_acc = 0.0;
  double m_acc = 0.0;

  // Derived from `metric`, kept in sync by the integrator.
  CurvaturePack curv;
  GridField psi;
};

FlowState initial_state(const ModelBundle& bundle, const FiltrationSpec& hn, MetricField initial);

/// Outcome of one accepted Donaldson step.
struct StepReport {
  double dt = 0.0;
  int halvings = 0;
  double p_increment = 0.0;
  double m_increment = 0.0;
};

/// Largest stable step: min(0.5 / ||Lambda F - mu I||_inf, diffusive limit of the stencil).
double stable_dt(const ModelBundle& bundle, const FlowState& state);

/// h <- h exp(-dt (Lambda F - mu I)) fiberwise. The step is halved (at most 10
/// times) when sup |Lambda F| grows more than 10x; throws NumericalAbort after that.
/// P and M advance by the trapezoid rule along the exponential path of the step.
StepReport donaldson_step(const ModelBundle& bundle, const FiltrationSpec& hn, FlowState& state, double dt);

/// Increment of P for a step of size dt from `state`, without committing it.
double p_increment(const ModelBundle& bundle, const FiltrationSpec& hn, const FlowState& state, double dt);

/// w = h^{1/2} (reference-self-adjoint root) and B_t = w B w^{-1} - dbar(w) w^{-1}.
void ym_gauge_update(const ModelBundle& bundle, FlowState& state);

/// One explicit Euler step of the Yang-Mills flow for the dzbar structure B
/// paired with a fixed metric: B <- B + (dt / 2) dbar_B(Lambda F_B).
GridField ym_direct_step(const ModelBundle& bundle, const GridField& structure, const MetricField& metric, double dt);

/// L2 norm (reference metric) of Lambda F_{A_ym} - w Lambda F w^{-1} for the current gauge.
double gauge_residual(const ModelBundle& bundle, const FlowState& state);

struct PathIndependence {
  double p_log_path = 0.0;
  double p_two_segment = 0.0;
  double residual = 0.0;
  double psi_part_log_path = 0.0;  ///< int int Tr(Psi h^{-1} hdot) on the geodesic, by quadrature
};

/// P(H0, H1) along the geodesic H0^{1/2} e^{tL} H0^{1/2} and along a two-segment
/// geodesic path through a perturbed midpoint; 64 Gauss-Legendre nodes per segment.
PathIndependence path_independence_check(const ModelBundle& bundle, const FiltrationSpec& hn, const MetricField& h0,
                                         const MetricField& h1, std::uint64_t seed = 17);

/// Closed-form Psi part of P: sum_i mu_i int (log det h^i - log det h^{i-1}) at the endpoint.
double psi_path_term(const FiltrationSpec& hn, const MetricField& h0, const MetricField& h1, const TorusGeometry& geo);

// Monitors evaluated on the current state.
double hym_energy(const FlowState& state, const TorusGeometry& geo);
double y_functional(const FlowState& state, const TorusGeometry& geo);
/// 2 int Tr((Lambda F - Psi)(Lambda F - mu I)) - ||Lambda F - Psi||^2.
double key_inequality_monitor(const ModelBundle& bundle, const FlowState& state);
/// Per HN flag below the top: int |Lambda F - Psi| - ||dbar pi^i||^2, |.| the pointwise Frobenius norm.
std::vector<double> sff_bound_monitor(const ModelBundle& bundle, const FiltrationSpec& hn, const FlowState& state);
/// sup |G0 (w Psi w^{-1}) - (w Psi w^{-1})^* G0|: the conjugated Psi must be self-adjoint for the reference metric.
double psi_gauge_residual(const FlowState& state);
/// Relative residual of d/dt ||Lambda F||^2 = -2 ||dbar Lambda F||^2 over a probe step of size dt.
double energy_decay_monitor(const ModelBundle& bundle, const FiltrationSpec& hn, const FlowState& state, double dt);
/// Pointwise eigenvalues of Lambda F sorted descending, averaged over the torus.
std::vector<double> lambda_spectrum(const FlowState& state, const TorusGeometry& geo);

struct FlowSample {
  double t = 0.0;
  double dt = 0.0;
  double ym_energy = 0.0;
  double hym_energy = 0.0;
  double y = 0.0;
  double p = 0.0;
  double m = 0.0;
  std::vector<double> sff;
  std::vector<double> spectrum;
  double keyineq_slack = 0.0;
  double gauge_residual = 0.0;
  double psi_gauge_residual = 0.0;
  std::vector<double> sff_slack;
  double psi_norm_sq = 0.0;
  double energy_decay_residual = 0.0;
  double min_eigenvalue = 0.0;
};

enum class FlowStatus { kConverged, kNotConverged, kAborted };

struct FlowTrace {
  std::vector<FlowSample> samples;
  FlowStatus status = FlowStatus::kNotConverged;
  std::string message;
  long steps = 0;
  long halvings = 0;
  double wall_seconds = 0.0;
  // Largest step-to-step increases, checked on every step rather than per sample.
  double max_y_rise = 0.0;       ///< over steps starting at t >= transient
  double max_energy_rise = 0.0;  ///< ||Lambda F||^2, all steps
};

FlowSample sample_state(const ModelBundle& bundle, const FiltrationSpec& hn, FlowState& state, const FlowConfig& config,
                        double last_dt);

/// Integrates to t_end or until Y < epsilon. On NumericalAbort the trace keeps
/// the samples taken so far and status is kAborted.
FlowTrace run_flow(const ModelBundle& bundle, const FiltrationSpec& hn, FlowState& state, const FlowConfig& config);

}  // namespace hym
