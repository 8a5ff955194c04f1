#include "hym/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace hym {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Walks one JSON object, remembering which keys were read so that the rest can
// be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(key_path(key) + ": expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(key_path(key) + ": must be finite");
    return d;
  }

  long long integer(const std::string& key, long long fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(key_path(key) + ": expected an integer");
    return v->get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(key_path(key) + ": expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(key_path(key) + ": expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = find(key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(key_path(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const json& e : *v) {
      if (!e.is_number()) throw ConfigError(key_path(key) + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Section child(const std::string& key) {
    const json* v = find(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, key_path(key));
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key \"" + key_path(it.key()) + "\"");
  }

  [[nodiscard]] std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  [[nodiscard]] std::string label() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string iso_time_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

const char* status_name(FlowStatus s) {
  switch (s) {
    case FlowStatus::kConverged: return "converged";
    case FlowStatus::kNotConverged: return "not_converged";
    case FlowStatus::kAborted: return "aborted";
  }
  return "unknown";
}

int exit_code_for(FlowStatus s) {
  switch (s) {
    case FlowStatus::kConverged: return kExitOk;
    case FlowStatus::kNotConverged: return kExitNotConverged;
    case FlowStatus::kAborted: return kExitAborted;
  }
  return kExitAborted;
}

TerminalSummary summarize(const RunConfig& config, const RunSetup& setup, const FlowTrace& trace) {
  TerminalSummary s;
  s.hn_type = setup.hn.type().mu;
  if (trace.samples.empty()) return s;
  const FlowSample& last = trace.samples.back();
  s.y = last.y;
  s.hym_energy = last.hym_energy;
  s.inf_hym_energy = last.hym_energy;
  for (const FlowSample& x : trace.samples) s.inf_hym_energy = std::min(s.inf_hym_energy, x.hym_energy);
  s.sup_phi_squared = phi_squared(setup.hn);
  s.atiyah_bott_gap = std::abs(s.inf_hym_energy - s.sup_phi_squared);
  s.spectrum = last.spectrum;
  s.dominance = dominance_leq(HNType{s.hn_type}, HNType{s.spectrum});
  for (std::size_t i = 0; i < s.spectrum.size(); ++i)
    s.spectrum_gap = std::max(s.spectrum_gap, std::abs(s.spectrum[i] - s.hn_type[i]));
  s.spectrum_matches = trace.status == FlowStatus::kConverged && s.spectrum_gap <= 10.0 * config.flow.epsilon;
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  RunConfig c;
  Section root(doc, "");

  {
    Section g = root.child("geometry");
    if (g.has("tau")) {
      const std::vector<double> tau = g.numbers("tau");
      if (tau.size() != 2) throw ConfigError("geometry.tau: expected [re, im]");
      c.tau = cd(tau[0], tau[1]);
      if (!(tau[1] > 0.0)) throw ConfigError("geometry.tau: imaginary part must be positive");
    }
    c.n_grid = static_cast<int>(g.integer("n_grid", c.n_grid));
    c.stencil_order = static_cast<int>(g.integer("stencil_order", c.stencil_order));
    g.finish();
    try {
      make_geometry(c.tau, c.n_grid, c.stencil_order);
    } catch (const GeometryError& e) {
      throw ConfigError(std::string("geometry: ") + e.what());
    }
  }

  {
    if (!root.has("bundle")) throw ConfigError("bundle: missing required section");
    Section b = root.child("bundle");
    if (!b.has("degrees")) throw ConfigError("bundle.degrees: missing required key");
    const json* deg = b.find("degrees");
    if (!deg->is_array() || deg->empty()) throw ConfigError("bundle.degrees: expected a non-empty array of integers");
    for (const json& e : *deg) {
      if (!e.is_number_integer()) throw ConfigError("bundle.degrees: expected a non-empty array of integers");
      c.degrees.push_back(e.get<int>());
    }
    try {
      c.cocycle.kind = parse_cocycle_kind(b.string("cocycle", cocycle_name(c.cocycle.kind)));
    } catch (const BundleError& e) {
      throw ConfigError(std::string("bundle.cocycle: ") + e.what());
    }
    c.cocycle.amplitude = b.number("amplitude", c.cocycle.amplitude);
    b.finish();
    try {
      make_bundle(make_geometry(c.tau, 16), c.degrees, c.cocycle);
    } catch (const BundleError& e) {
      throw ConfigError(std::string("bundle.degrees: ") + e.what());
    }
  }

  {
    Section f = root.child("flow");
    c.flow.dt = f.number("dt", c.flow.dt);
    c.flow.t_end = f.number("t_end", c.flow.t_end);
    c.flow.epsilon = f.number("epsilon", c.flow.epsilon);
    const long long every = f.integer("sample_every", c.flow.sample_every);
    c.flow.track_gauge = f.boolean("track_gauge", c.flow.track_gauge);
    c.flow.transient = f.number("transient", c.flow.transient);
    f.finish();
    if (!(c.flow.dt > 0.0)) throw ConfigError("flow.dt: must be positive");
    if (!(c.flow.t_end > 0.0)) throw ConfigError("flow.t_end: must be positive");
    if (!(c.flow.epsilon > 0.0)) throw ConfigError("flow.epsilon: must be positive");
    if (every < 1 || every > 1000000000) throw ConfigError("flow.sample_every: must be a positive integer");
    if (c.flow.transient < 0.0) throw ConfigError("flow.transient: must be non-negative");
    c.flow.sample_every = static_cast<int>(every);
  }

  {
    Section p = root.child("perturbation");
    const long long seed = p.integer("seed", static_cast<long long>(c.seed));
    if (seed < 0) throw ConfigError("perturbation.seed: must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
    c.magnitude = p.number("magnitude", c.magnitude);
    if (c.magnitude < 0.0) throw ConfigError("perturbation.magnitude: must be non-negative");
    p.finish();
  }

  c.output = root.string("output", c.output);
  if (root.has("sweep")) {
    Section s = root.child("sweep");
    c.sweep_amplitudes = s.numbers("amplitude");
    s.finish();
  }
  root.finish();
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["geometry"] = {{"tau", {c.tau.real(), c.tau.imag()}}, {"n_grid", c.n_grid}, {"stencil_order", c.stencil_order}};
  j["bundle"] = {{"degrees", c.degrees}, {"cocycle", cocycle_name(c.cocycle.kind)}, {"amplitude", c.cocycle.amplitude}};
  j["flow"] = {{"dt", c.flow.dt},
               {"t_end", c.flow.t_end},
               {"epsilon", c.flow.epsilon},
               {"sample_every", c.flow.sample_every},
               {"track_gauge", c.flow.track_gauge},
               {"transient", c.flow.transient}};
  j["perturbation"] = {{"seed", c.seed}, {"magnitude", c.magnitude}};
  j["output"] = c.output;
  if (!c.sweep_amplitudes.empty()) j["sweep"] = {{"amplitude", c.sweep_amplitudes}};
  return j;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override \"" + assignment + "\": expected KEY=VALUE");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override \"" + assignment + "\": empty key segment");
    if (!node->is_object()) throw ConfigError(key.substr(0, start ? start - 1 : 0) + ": not an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunConfig parse_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  json doc = json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  for (const std::string& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

RunSetup build_setup(const RunConfig& config) {
  const TorusGeometry geo = make_geometry(config.tau, config.n_grid, config.stencil_order);
  ModelBundle bundle = make_bundle(geo, config.degrees, config.cocycle);
  FiltrationSpec hn = hn_filtration(bundle);
  MetricField initial = random_metric(bundle, config.seed, config.magnitude);
  return RunSetup{geo, std::move(bundle), std::move(hn), std::move(initial)};
}

std::vector<std::string> trace_columns(const FiltrationSpec& hn, int rank) {
  std::vector<std::string> cols = {"t", "ym_energy", "hym_energy", "Y", "P", "M"};
  const std::size_t flags = hn.flags.size() - 1;
  for (std::size_t i = 1; i <= flags; ++i) cols.push_back("sff_" + std::to_string(i));
  for (int a = 1; a <= rank; ++a) cols.push_back("spec_" + std::to_string(a));
  cols.insert(cols.end(), {"keyineq_slack", "gauge_residual", "dt"});
  for (std::size_t i = 1; i <= flags; ++i) cols.push_back("sff_slack_" + std::to_string(i));
  cols.insert(cols.end(), {"psi_norm_sq", "psi_gauge_residual", "energy_decay_residual", "min_eigenvalue"});
  return cols;
}

void write_trace_csv(const fs::path& path, const FlowTrace& trace, const FiltrationSpec& hn, int rank) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::vector<std::string> cols = trace_columns(hn, rank);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const FlowSample& s : trace.samples) {
    std::vector<double> row = {s.t, s.ym_energy, s.hym_energy, s.y, s.p, s.m};
    row.insert(row.end(), s.sff.begin(), s.sff.end());
    row.insert(row.end(), s.spectrum.begin(), s.spectrum.end());
    row.insert(row.end(), {s.keyineq_slack, s.gauge_residual, s.dt});
    row.insert(row.end(), s.sff_slack.begin(), s.sff_slack.end());
    row.insert(row.end(), {s.psi_norm_sq, s.psi_gauge_residual, s.energy_decay_residual, s.min_eigenvalue});
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt(row[i]);
    out << '\n';
  }
}

std::string format_summary(const RunConfig& config, const RunResult& r) {
  const TerminalSummary& s = r.summary;
  std::ostringstream os;
  auto vec = [](const std::vector<double>& v) {
    std::ostringstream o;
    o << "(";
    for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ", " : "") << std::setprecision(8) << v[i];
    o << ")";
    return o.str();
  };
  os << "hymlab " << kVersion << "\n";
  os << "bundle      degrees " << vec(std::vector<double>(config.degrees.begin(), config.degrees.end())) << ", cocycle "
     << cocycle_name(config.cocycle.kind) << " x " << config.cocycle.amplitude << "\n";
  os << "grid        n = " << config.n_grid << ", tau = " << config.tau.real() << " + " << config.tau.imag()
     << "i, stencil order " << config.stencil_order << "\n";
  os << "status      " << status_name(r.trace.status) << " after " << r.trace.steps << " steps";
  if (!r.trace.samples.empty()) os << ", t = " << r.trace.samples.back().t;
  os << "\n";
  if (!r.trace.message.empty()) os << "message     " << r.trace.message << "\n";
  os << std::scientific << std::setprecision(6);
  os << "Y           " << s.y << " (epsilon " << config.flow.epsilon << ")\n";
  os << "||LF||^2    " << s.hym_energy << "\n";
  os << "atiyah-bott inf ||LF||^2 = " << s.inf_hym_energy << " vs sup Phi^2 = " << s.sup_phi_squared
     << ", gap " << s.atiyah_bott_gap << "\n";
  os << std::defaultfloat;
  os << "spectrum    " << vec(s.spectrum) << "\n";
  os << "HN type     " << vec(s.hn_type) << "\n";
  os << "dominance   " << (s.dominance ? "PASS" : "FAIL") << "\n";
  os << "spectrum=HN " << (s.spectrum_matches ? "PASS" : "FAIL") << " (max gap " << std::scientific << s.spectrum_gap
     << ")\n";
  os << "wall        " << std::defaultfloat << std::setprecision(3) << r.trace.wall_seconds << " s\n";
  return os.str();
}

RunResult execute_run(const RunConfig& config, const fs::path& out_dir) {
  const std::string started = iso_time_now();
  const RunSetup setup = build_setup(config);
  const BackgroundCalibration cal = calibrate_background(setup.geo, config.degrees);

  RunResult r;
  FlowState state = initial_state(setup.bundle, setup.hn, setup.initial);
  r.trace = run_flow(setup.bundle, setup.hn, state, config.flow);
  r.summary = summarize(config, setup, r.trace);
  r.exit_code = exit_code_for(r.trace.status);

  json& m = r.manifest;
  m["version"] = kVersion;
  m["config"] = config_to_json(config);
  m["calibration"] = {{"background_exponent", cal.exponent},
                      {"lambda_f0", cal.lambda_f0},
                      {"max_deviation", cal.max_deviation}};
  m["started_utc"] = started;
  m["wall_seconds"] = r.trace.wall_seconds;
  m["steps"] = r.trace.steps;
  m["halvings"] = r.trace.halvings;
  m["status"] = status_name(r.trace.status);
  m["exit_code"] = r.exit_code;
  m["message"] = r.trace.message;
  m["max_y_rise_after_transient"] = r.trace.max_y_rise;
  m["max_energy_rise"] = r.trace.max_energy_rise;
  m["columns"] = trace_columns(setup.hn, setup.bundle.rank());
  const TerminalSummary& s = r.summary;
  m["terminal"] = {{"Y", s.y},
                   {"hym_energy", s.hym_energy},
                   {"inf_hym_energy", s.inf_hym_energy},
                   {"sup_phi_squared", s.sup_phi_squared},
                   {"atiyah_bott_gap", s.atiyah_bott_gap},
                   {"spectrum", s.spectrum},
                   {"hn_type", s.hn_type},
                   {"dominance", s.dominance ? "PASS" : "FAIL"},
                   {"spectrum_gap", s.spectrum_gap},
                   {"spectrum_matches_hn", s.spectrum_matches}};

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_trace_csv(out_dir / "trace.csv", r.trace, setup.hn, setup.bundle.rank());
    std::ofstream(out_dir / "manifest.json") << m.dump(2) << '\n';
    std::ofstream(out_dir / "summary.txt") << format_summary(config, r);
  }
  return r;
}

int execute_sweep(const RunConfig& config, const fs::path& out_dir, unsigned max_threads) {
  if (config.sweep_amplitudes.empty()) throw ConfigError("sweep.amplitude: missing or empty");
  const std::size_t n = config.sweep_amplitudes.size();
  std::vector<json> entries(n);
  std::vector<int> codes(n, kExitOk);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      RunConfig c = config;
      c.cocycle.amplitude = config.sweep_amplitudes[k];
      c.sweep_amplitudes.clear();
      const std::string dir = "amp_" + std::to_string(k);
      c.output = (out_dir / dir).string();
      json e = {{"amplitude", c.cocycle.amplitude}, {"dir", dir}};
      try {
        const RunResult r = execute_run(c, out_dir / dir);
        codes[k] = r.exit_code;
        e["status"] = status_name(r.trace.status);
        e["exit_code"] = r.exit_code;
        e["Y"] = r.summary.y;
        e["hym_energy"] = r.summary.hym_energy;
        e["atiyah_bott_gap"] = r.summary.atiyah_bott_gap;
      } catch (const std::exception& ex) {
        codes[k] = kExitAborted;
        e["status"] = "aborted";
        e["exit_code"] = kExitAborted;
        e["message"] = ex.what();
      }
      entries[k] = std::move(e);
    }
  };

  unsigned threads = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  fs::create_directories(out_dir);
  json index = {{"version", kVersion}, {"config", config_to_json(config)}, {"runs", entries}};
  std::ofstream(out_dir / "index.json") << index.dump(2) << '\n';

  int worst = kExitOk;
  for (int c : codes)
    if (c == kExitAborted || (c == kExitNotConverged && worst == kExitOk)) worst = c;
  return worst;
}

// ---------------------------------------------------------------------------
// verify

const std::vector<std::string>& verify_item_names() {
  static const std::vector<std::string> names = {
      "projection_axioms", "psi_square",  "psi_trace",         "psi_norm",          "degree_quantization",
      "degree_metric_independence", "chern_weil_flags", "hn_bruteforce", "path_independence", "dominance_order"};
  return names;
}

std::vector<VerifyItem> run_verify(const RunConfig& config, const std::set<std::string>& faults) {
  for (const std::string& f : faults)
    if (std::find(verify_item_names().begin(), verify_item_names().end(), f) == verify_item_names().end())
      throw ConfigError("inject-fault: unknown item \"" + f + "\"");

  const RunSetup setup = build_setup(config);
  const ModelBundle& b = setup.bundle;
  const FiltrationSpec& hn = setup.hn;
  const TorusGeometry& geo = setup.geo;
  const int r = b.rank();
  constexpr int kMetrics = 10;
  std::vector<MetricField> metrics;
  for (int k = 0; k < kMetrics; ++k) metrics.push_back(random_metric(b, config.seed + 1000 + k, 0.5));

  std::vector<VerifyItem> items;
  auto add = [&](const std::string& name, double residual, double tol) {
    if (faults.count(name)) tol = -1.0;
    items.push_back({name, residual, tol, residual <= tol});
  };

  {
    double worst = 0.0;
    for (const MetricField& h : metrics) {
      for (int s = 1; s <= r; ++s) {
        const GridField pi = projection(h, s);
        const GridField& g = h.field();
        for (std::size_t p = 0; p < pi.size(); ++p) {
          const Mat& m = pi[p];
          worst = std::max(worst, (m * m - m).cwiseAbs().maxCoeff());                         // idempotent
          worst = std::max(worst, (g[p] * m - m.adjoint() * g[p]).cwiseAbs().maxCoeff());    // H-self-adjoint
          worst = std::max(worst, (m.topLeftCorner(s, s) - Mat::Identity(s, s)).cwiseAbs().maxCoeff());
          if (s < r) worst = std::max(worst, m.bottomRows(r - s).cwiseAbs().maxCoeff());  // image in S
        }
      }
    }
    add("projection_axioms", worst, 1e-10);
  }

  {
    double sq = 0.0, tr = 0.0, norm = 0.0;
    const double norm_target = phi_squared(hn);
    for (const MetricField& h : metrics) {
      sq = std::max(sq, psi_squared_identity(h, hn));
      const GridField ps = psi(h, hn);
      for (std::size_t p = 0; p < ps.size(); ++p) tr = std::max(tr, std::abs(ps[p].trace() - cd(b.total_degree())));
      const double n2 = integrate(geo, [&](std::size_t p) { return (ps[p] * ps[p]).trace().real(); });
      norm = std::max(norm, std::abs(n2 - norm_target));
    }
    add("psi_square", sq, 1e-10);
    add("psi_trace", tr, 1e-10);
    add("psi_norm", norm, 1e-9);
  }

  {
    double quant = 0.0, spread = 0.0;
    std::vector<double> degs;
    for (const MetricField& h : metrics) {
      const double d = degree(b, h);
      degs.push_back(d);
      quant = std::max(quant, std::abs(d - std::round(d)));
    }
    spread = *std::max_element(degs.begin(), degs.end()) - *std::min_element(degs.begin(), degs.end());
    add("degree_quantization", quant, 1e-7);
    add("degree_metric_independence", spread, 1e-7);
  }

  {
    double worst = 0.0;
    for (const MetricField& h : metrics) {
      const CurvaturePack pack = curvature(b, h);
      int expect = 0;
      for (int s = 1; s <= r; ++s) {
        expect += config.degrees[s - 1];
        worst = std::max(worst, std::abs(chern_weil_degree(b, h, pack, s) - expect));
      }
    }
    add("chern_weil_flags", worst, 5e-3);
  }

  {
    double worst = 0.0;
    for (const MetricField& h : metrics) {
      const HNType t = hn_type_bruteforce(b, h);
      for (std::size_t i = 0; i < t.mu.size(); ++i) worst = std::max(worst, std::abs(t.mu[i] - hn.type().mu[i]));
    }
    add("hn_bruteforce", worst, 1e-12);
  }

  {
    const PathIndependence pi = path_independence_check(b, hn, setup.initial, metrics.front(), config.seed);
    add("path_independence", pi.residual, 1e-6);
  }

  {
    // Reflexive, antisymmetric and transitive on random fixed-sum vectors; a
    // violation counts as residual 1.
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<int> pick(-3, 3);
    const int len = std::max(r, 2);
    auto draw = [&] {
      std::vector<double> v(len);
      for (double& x : v) x = pick(rng);
      v.back() -= std::accumulate(v.begin(), v.end(), 0.0);  // exact integer sum 0
      std::sort(v.begin(), v.end(), std::greater<>());
      return HNType{v};
    };
    int violations = 0;
    for (int k = 0; k < 1000; ++k) {
      const HNType a = draw(), bb = draw(), c = draw();
      if (!dominance_leq(a, a)) ++violations;
      if (dominance_leq(a, bb) && dominance_leq(bb, a) && a.mu != bb.mu) ++violations;
      if (dominance_leq(a, bb) && dominance_leq(bb, c) && !dominance_leq(a, c)) ++violations;
    }
    add("dominance_order", violations, 0.0);
  }
  return items;
}

}  // namespace hym
