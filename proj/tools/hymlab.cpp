#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hym/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (overrides the config's \"output\")");
  cmd->add_option("--seed", c.seed, "seed of the initial metric perturbation")->check(CLI::NonNegativeNumber);
  cmd->add_option("--override", c.overrides, "KEY=VALUE on a dotted key path, e.g. flow.dt=5e-4")->take_all();
}

hym::RunConfig load(const Common& c) {
  std::vector<std::string> ov = c.overrides;
  if (c.seed >= 0) ov.push_back("perturbation.seed=" + std::to_string(c.seed));
  if (!c.out.empty()) ov.push_back("output=" + nlohmann::json(c.out).dump());
  return hym::parse_config(c.config, ov);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Donaldson heat flow and Yang-Mills flow on model bundles over flat tori"};
  app.set_version_flag("--version", hym::kVersion);
  app.require_subcommand(1);

  Common run_opts, verify_opts, sweep_opts;
  CLI::App* run = app.add_subcommand("run", "integrate the flow and write trace.csv, manifest.json, summary.txt");
  add_common(run, run_opts);
  CLI::App* verify = app.add_subcommand("verify", "run the invariant battery and print PASS/FAIL per item");
  add_common(verify, verify_opts);
  std::vector<std::string> faults;
  verify->add_option("--inject-fault", faults, "force the named item to fail (test mode)")->take_all();
  CLI::App* sweep = app.add_subcommand("sweep", "one run per cocycle amplitude in sweep.amplitude");
  add_common(sweep, sweep_opts);
  unsigned threads = 0;
  sweep->add_option("--threads", threads, "concurrent runs (default: hardware threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hym::kExitConfig;
  }

  try {
    if (*run) {
      const hym::RunConfig cfg = load(run_opts);
      const hym::RunResult r = hym::execute_run(cfg, cfg.output);
      std::cout << hym::format_summary(cfg, r);
      return r.exit_code;
    }
    if (*verify) {
      const hym::RunConfig cfg = load(verify_opts);
      const auto items = hym::run_verify(cfg, std::set<std::string>(faults.begin(), faults.end()));
      bool ok = true;
      for (const auto& it : items) {
        std::cout << (it.pass ? "PASS " : "FAIL ") << it.name << "  residual " << it.residual << "  tolerance "
                  << it.tolerance << "\n";
        ok = ok && it.pass;
      }
      return ok ? hym::kExitOk : hym::kExitVerifyFailed;
    }
    if (*sweep) {
      const hym::RunConfig cfg = load(sweep_opts);
      const int code = hym::execute_sweep(cfg, cfg.output, threads);
      std::cout << "sweep of " << cfg.sweep_amplitudes.size() << " runs written to " << cfg.output << "/index.json\n";
      return code;
    }
  } catch (const hym::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return hym::kExitConfig;
  } catch (const hym::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return hym::kExitAborted;
  }
  return hym::kExitConfig;
}
