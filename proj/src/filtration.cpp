#include "hym/filtration.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace hym {

namespace {

constexpr double kSlopeTol = 1e-9;

// Chern-Weil degrees of standard subbundles are integers; larger deviations
// mean the grid does not resolve the data.
constexpr double kDegreeRoundingTol = 0.25;

}  // namespace

double HNType::total() const { return std::accumulate(mu.begin(), mu.end(), 0.0); }

double FiltrationSpec::degree() const {
  double d = 0.0;
  for (std::size_t i = 0; i < slopes.size(); ++i) d += slopes[i] * ranks[i];
  return d;
}

HNType FiltrationSpec::type() const {
  HNType t;
  for (std::size_t i = 0; i < slopes.size(); ++i) t.mu.insert(t.mu.end(), ranks[i], slopes[i]);
  return t;
}

bool FiltrationSpec::slope_decreasing() const {
  for (std::size_t i = 1; i < slopes.size(); ++i)
    if (!(slopes[i - 1] > slopes[i] + kSlopeTol)) return false;
  return true;
}

FiltrationSpec make_filtration(std::vector<int> flags, std::vector<double> slopes) {
  if (flags.empty()) throw FiltrationError("filtration needs at least one flag");
  if (flags.size() != slopes.size()) throw FiltrationError("one slope per flag is required");
  if (flags.back() > kMaxRank) throw FiltrationError("rank exceeds " + std::to_string(kMaxRank));
  FiltrationSpec spec{std::move(flags), std::move(slopes), {}};
  int prev = 0;
  for (int s : spec.flags) {
    if (s <= prev) throw FiltrationError("flag sizes must be strictly increasing and positive");
    spec.ranks.push_back(s - prev);
    prev = s;
  }
  return spec;
}

FiltrationSpec filtration_from_degrees(std::vector<int> flags, std::span<const int> degrees) {
  if (flags.empty() || flags.back() != static_cast<int>(degrees.size())) {
    throw FiltrationError("last flag must equal the rank");
  }
  std::vector<double> slopes;
  int prev = 0;
  for (int s : flags) {
    if (s <= prev) throw FiltrationError("flag sizes must be strictly increasing and positive");
    int d = 0;
    for (int a = prev; a < s; ++a) d += degrees[a];
    slopes.push_back(static_cast<double>(d) / (s - prev));
    prev = s;
  }
  return make_filtration(std::move(flags), std::move(slopes));
}

FiltrationSpec hn_filtration(const ModelBundle& bundle) {
  return filtration_from_degrees(bundle.declared_hn_flags(), bundle.degrees);
}

std::vector<FiltrationSpec> standard_filtrations(std::span<const int> degrees) {
  const int r = static_cast<int>(degrees.size());
  std::vector<FiltrationSpec> out;
  // Bit a-1 set means a flag ends after summand a.
  for (unsigned mask = 0; mask < (1u << (r - 1)); ++mask) {
    std::vector<int> flags;
    for (int a = 1; a < r; ++a)
      if (mask & (1u << (a - 1))) flags.push_back(a);
    flags.push_back(r);
    out.push_back(filtration_from_degrees(std::move(flags), degrees));
  }
  return out;
}

GridField projection(const MetricField& metric, int flag_size) {
  const GridField& g = metric.field();
  const int r = g.rank();
  if (flag_size < 1 || flag_size > r) throw FiltrationError("flag size must lie in [1, rank]");
  GridField pi = GridField::zeros_like(g);
  const int s = flag_size;
  for (std::size_t p = 0; p < g.size(); ++p) {
    Mat& m = pi[p];
    m.topLeftCorner(s, s).setIdentity();
    if (s == r) continue;
    Eigen::LLT<Mat> llt(g[p].topLeftCorner(s, s));
    if (llt.info() != Eigen::Success) {
      throw NumericalAbort("Gram block not positive-definite at grid point " + std::to_string(p));
    }
    m.topRightCorner(s, r - s) = llt.solve(g[p].topRightCorner(s, r - s));
  }
  return pi;
}

GridField psi(const MetricField& metric, const FiltrationSpec& spec) {
  if (spec.rank() != metric.rank()) throw FiltrationError("filtration rank does not match metric rank");
  GridField out = GridField::zeros_like(metric.field());
  GridField prev = GridField::zeros_like(metric.field());
  for (std::size_t i = 0; i < spec.flags.size(); ++i) {
    GridField cur = projection(metric, spec.flags[i]);
    out += cd(spec.slopes[i]) * (cur - prev);
    prev = std::move(cur);
  }
  return out;
}

double psi_squared_identity(const MetricField& metric, const FiltrationSpec& spec) {
  const GridField ps = psi(metric, spec);
  GridField rhs = GridField::zeros_like(metric.field());
  GridField prev = GridField::zeros_like(metric.field());
  for (std::size_t i = 0; i < spec.flags.size(); ++i) {
    GridField cur = projection(metric, spec.flags[i]);
    rhs += cd(spec.slopes[i] * spec.slopes[i]) * (cur - prev);
    prev = std::move(cur);
  }
  double worst = 0.0;
  for (std::size_t p = 0; p < ps.size(); ++p)
    worst = std::max(worst, (ps[p] * ps[p] - rhs[p]).cwiseAbs().maxCoeff());
  return worst;
}

double second_fundamental_form_norm(const ModelBundle& bundle, const MetricField& metric, int flag_size) {
  const GridField pi = projection(metric, flag_size);
  return form01_norm_sq(dbar_end(pi, bundle.structure, bundle.geo), metric, bundle.geo);
}

double chern_weil_degree(const ModelBundle& bundle, const MetricField& metric, const CurvaturePack& pack,
                         int flag_size) {
  const GridField pi = projection(metric, flag_size);
  const double tr = integrate(bundle.geo, [&](std::size_t p) { return (pack.lambda_f[p] * pi[p]).trace().real(); });
  return tr - form01_norm_sq(dbar_end(pi, bundle.structure, bundle.geo), metric, bundle.geo);
}

double chern_weil_degree(const ModelBundle& bundle, const MetricField& metric, int flag_size) {
  return chern_weil_degree(bundle, metric, curvature(bundle, metric), flag_size);
}

FiltrationSpec hn_filtration_bruteforce(const ModelBundle& bundle, const MetricField& metric) {
  const int r = bundle.rank();
  if (r > kMaxRank) throw FiltrationError("brute force limited to rank " + std::to_string(kMaxRank));
  const CurvaturePack pack = curvature(bundle, metric);
  std::vector<long> deg(r + 1, 0);  // deg[s] = degree of span(e_1..e_s)
  for (int s = 1; s <= r; ++s) {
    const double cw = chern_weil_degree(bundle, metric, pack, s);
    const double rounded = std::round(cw);
    if (std::abs(cw - rounded) > kDegreeRoundingTol) {
      throw NumericalAbort("Chern-Weil degree of flag " + std::to_string(s) + " is " + std::to_string(cw) +
                           ", not resolvable to an integer");
    }
    deg[s] = static_cast<long>(rounded);
  }

  std::vector<int> flags;
  std::vector<double> slopes;
  int base = 0;
  while (base < r) {
    int best = -1;
    double best_slope = 0.0;
    for (int s = base + 1; s <= r; ++s) {
      const double mu = static_cast<double>(deg[s] - deg[base]) / (s - base);
      if (best < 0 || mu > best_slope + kSlopeTol) {
        best = s;
        best_slope = mu;
      }
    }
    if (!slopes.empty() && std::abs(slopes.back() - best_slope) <= kSlopeTol) {
      flags.back() = best;
    } else {
      flags.push_back(best);
      slopes.push_back(best_slope);
    }
    base = best;
  }
  // Slopes from block degrees after merging.
  int prev = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    slopes[i] = static_cast<double>(deg[flags[i]] - deg[prev]) / (flags[i] - prev);
    prev = flags[i];
  }
  return make_filtration(std::move(flags), std::move(slopes));
}

HNType hn_type_bruteforce(const ModelBundle& bundle, const MetricField& metric) {
  return hn_filtration_bruteforce(bundle, metric).type();
}

bool dominance_leq(const HNType& mu, const HNType& lam) {
  if (mu.mu.size() != lam.mu.size()) throw FiltrationError("dominance requires vectors of equal length");
  if (std::abs(mu.total() - lam.total()) > kSlopeTol) throw FiltrationError("dominance requires equal totals");
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < mu.mu.size(); ++k) {
    a += mu.mu[k];
    b += lam.mu[k];
    if (a > b + kSlopeTol) return false;
  }
  return true;
}

double phi_squared(const FiltrationSpec& spec) {
  double s = 0.0;
  for (std::size_t i = 0; i < spec.slopes.size(); ++i) s += spec.slopes[i] * spec.slopes[i] * spec.ranks[i];
  return s;
}

}  // namespace hym
