#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hym/bundle.hpp"
#include "hym/filtration.hpp"
#include "hym/flow.hpp"

namespace hym {

/// Bad or unknown configuration entries; the message starts with the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  cd tau{0.0, 1.0};
  int n_grid = 64;
  int stencil_order = kDefaultStencilOrder;
  std::vector<int> degrees;
  CocycleSpec cocycle;
  FlowConfig flow;
  std::uint64_t seed = 1;
  double magnitude = 0.25;  ///< sup of the random Hermitian field s in H = H0 exp(s)
  std::string output = "out";
  std::vector<double> sweep_amplitudes;
};

/// Validates a parsed document. Unknown keys are errors; absent optional keys
/// take the defaults above. bundle.degrees is the only required key.
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);

/// Reads a JSON file and applies KEY=VALUE overrides (dotted key path, value
/// parsed as JSON, otherwise taken as a string) before validation.
RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Bundle, HN filtration and initial metric exactly as a run builds them.
struct RunSetup {
  TorusGeometry geo;
  ModelBundle bundle;
  FiltrationSpec hn;
  MetricField initial;
};
RunSetup build_setup(const RunConfig& config);

struct TerminalSummary {
  double y = 0.0;
  double hym_energy = 0.0;
  double inf_hym_energy = 0.0;  ///< min over samples
  double sup_phi_squared = 0.0;
  double atiyah_bott_gap = 0.0;  ///< |inf ||Lambda F||^2 - sup Phi^2|
  std::vector<double> spectrum;
  std::vector<double> hn_type;
  bool dominance = false;         ///< mu_HN <= lambda
  double spectrum_gap = 0.0;      ///< max_i |lambda_i - mu_i|
  bool spectrum_matches = false;  ///< converged and spectrum_gap <= 10 epsilon
};

struct RunResult {
  FlowTrace trace;
  TerminalSummary summary;
  nlohmann::json manifest;
  int exit_code = 0;
};

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitNotConverged = 2, kExitAborted = 3, kExitConfig = 4 };

/// Runs the flow and, if out_dir is non-empty, writes trace.csv, manifest.json
/// and summary.txt there (partial traces are kept on failure).
RunResult execute_run(const RunConfig& config, const std::filesystem::path& out_dir);

std::vector<std::string> trace_columns(const FiltrationSpec& hn, int rank);
void write_trace_csv(const std::filesystem::path& path, const FlowTrace& trace, const FiltrationSpec& hn, int rank);
std::string format_summary(const RunConfig& config, const RunResult& result);

/// One run per amplitude in config.sweep_amplitudes under out_dir/amp_<k>,
/// plus out_dir/index.json. Runs execute concurrently. Returns the worst exit code.
int execute_sweep(const RunConfig& config, const std::filesystem::path& out_dir, unsigned max_threads = 0);

struct VerifyItem {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Names accepted by the fault injector; a faulted item gets a negative tolerance.
const std::vector<std::string>& verify_item_names();

/// Invariant battery on the configured bundle: projection axioms, Psi identities,
/// degree quantization and metric independence, Chern-Weil flag degrees, brute-force
/// HN type, path independence and dominance-order properties.
std::vector<VerifyItem> run_verify(const RunConfig& config, const std::set<std::string>& faults = {});

}  // namespace hym
