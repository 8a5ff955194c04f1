#pragma once

#include <stdexcept>
#include <vector>

#include "hym/bundle.hpp"
#include "hym/geometry.hpp"

namespace hym {

class FiltrationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Slopes of a filtration's quotients repeated with multiplicity.
struct HNType {
  std::vector<double> mu;

  [[nodiscard]] double total() const;
  friend bool operator==(const HNType&, const HNType&) = default;
};

/// Nested standard flags S^i = span(e_1, ..., e_{s^i}) with quotient data.
struct FiltrationSpec {
  std::vector<int> flags;      ///< s^1 < s^2 < ... < s^p = r
  std::vector<double> slopes;  ///< mu(Q^i)
  std::vector<int> ranks;      ///< rk(Q^i) = s^i - s^{i-1}

  [[nodiscard]] int rank() const { return flags.empty() ? 0 : flags.back(); }
  [[nodiscard]] double degree() const;
  [[nodiscard]] HNType type() const;
  [[nodiscard]] bool slope_decreasing() const;
};

/// Validates strictly increasing flags and derives the quotient ranks.
FiltrationSpec make_filtration(std::vector<int> flags, std::vector<double> slopes);

/// Quotient slopes read off from the degrees of the line-bundle summands.
FiltrationSpec filtration_from_degrees(std::vector<int> flags, std::span<const int> degrees);

/// The filtration recorded by make_bundle (flags where the degree drops).
FiltrationSpec hn_filtration(const ModelBundle& bundle);

/// All 2^{r-1} standard-flag filtrations, slopes from the summand degrees.
std::vector<FiltrationSpec> standard_filtrations(std::span<const int> degrees);

/// H-orthogonal projection onto span(e_1..e_s): [[I, H11^{-1} H12], [0, 0]].
GridField projection(const MetricField& metric, int flag_size);

/// Psi_H = sum_i mu(Q^i) (pi^i - pi^{i-1}).
GridField psi(const MetricField& metric, const FiltrationSpec& spec);

/// sup over grid points of |Psi^2 - sum_i mu(Q^i)^2 (pi^i - pi^{i-1})|.
double psi_squared_identity(const MetricField& metric, const FiltrationSpec& spec);

/// ||dbar_E pi||^2 in L2, with the full holomorphic structure of the bundle.
double second_fundamental_form_norm(const ModelBundle& bundle, const MetricField& metric, int flag_size);

/// int Tr(Lambda F pi) - ||dbar pi||^2.
double chern_weil_degree(const ModelBundle& bundle, const MetricField& metric, int flag_size);
double chern_weil_degree(const ModelBundle& bundle, const MetricField& metric, const CurvaturePack& pack,
                         int flag_size);

/// Greedy maximal-slope search over standard flags using Chern-Weil degrees.
/// Equal slopes (1e-9) prefer the smaller flag; equal-slope steps are merged.
FiltrationSpec hn_filtration_bruteforce(const ModelBundle& bundle, const MetricField& metric);
HNType hn_type_bruteforce(const ModelBundle& bundle, const MetricField& metric);

/// Partial sums of mu never exceed those of lam (tolerance 1e-9).
/// Throws FiltrationError for different lengths or totals.
bool dominance_leq(const HNType& mu, const HNType& lam);

double phi_squared(const FiltrationSpec& spec);

}  // namespace hym
