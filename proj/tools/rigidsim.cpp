// rigidsim: batch front end for quantized rigid-formation simulations.
//
//   rigidsim simulate       one run -> trajectory.csv, errors.csv, report.json
//   rigidsim sweep          grid over quantizer kinds and gains -> per-cell reports + index.json
//   rigidsim check-rigidity rank and rigidity flags of a framework
//   rigidsim two-agent      floor-quantizer two-agent cases against the closed form
//   rigidsim compare        the four quantizers from one initial condition -> Lyapunov table
//
// Exit status: 0 success, 1 validation/parse error, 2 runtime abort.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rigidq/rigidq.hpp"

namespace fs = std::filesystem;
using namespace rigidq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by the subcommands that build a scenario.
struct ScenarioFlags {
  std::string config;
  std::string preset = "double-tetrahedron";
  std::string quantizer = "uniform-sym";
  double gain = 0.5;
  double hysteresis = 0.0;
  std::uint64_t seed = 1;
  double magnitude = 0.9;
  double step = 1e-3;
  double duration = 50.0;
  double tol = 1e-6;
  std::size_t decimation = 1;

  CLI::Option* o_preset = nullptr;
  CLI::Option* o_quantizer = nullptr;
  CLI::Option* o_gain = nullptr;
  CLI::Option* o_hyst = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_mag = nullptr;
  CLI::Option* o_step = nullptr;
  CLI::Option* o_duration = nullptr;
  CLI::Option* o_tol = nullptr;
  CLI::Option* o_dec = nullptr;

  void attach(CLI::App* app, bool with_quantizer) {
    app->add_option("--config", config, "Scenario JSON file");
    o_preset = app->add_option("--preset", preset, "Preset scenario name");
    if (with_quantizer) {
      o_quantizer = app->add_option("--quantizer", quantizer,
                                    "uniform-sym | logarithmic | signum | uniform-asym");
      o_hyst = app->add_option("--hysteresis", hysteresis, "Signum hold band (0 = off)");
    }
    o_gain = app->add_option("--gain", gain, "Quantizer gain delta_u");
    o_seed = app->add_option("--seed", seed, "Perturbation seed");
    o_mag = app->add_option("--magnitude", magnitude, "Perturbation magnitude per agent");
    o_step = app->add_option("--step", step, "Euler step h");
    o_duration = app->add_option("--duration", duration, "Simulated time T_end");
    o_tol = app->add_option("--tol", tol, "Convergence tolerance");
    o_dec = app->add_option("--decimation", decimation, "Record every k-th step");
  }

  // Config file values, overridden by any flag given explicitly.
  SimulationConfig resolve() const {
    SimulationConfig cfg;
    if (!config.empty()) cfg = load_config(config);
    auto given = [](const CLI::Option* o) { return o && o->count() > 0; };
    if (config.empty() || given(o_preset)) {
      cfg.graph = PresetGraph{preset};
      cfg.initial = PresetPerturbation{preset, seed, magnitude};
    }
    if (auto* pp = std::get_if<PresetPerturbation>(&cfg.initial)) {
      if (given(o_seed)) pp->seed = seed;
      if (given(o_mag)) pp->magnitude = magnitude;
    }
    if (config.empty() || given(o_quantizer)) {
      const auto k = parse_quantizer_kind(quantizer);
      if (!k) throw ValidationError("unknown quantizer '" + quantizer + "'");
      cfg.quantizer.kind = *k;
    }
    if (config.empty() || given(o_gain)) cfg.quantizer.gain = gain;
    if (config.empty() || given(o_hyst)) cfg.quantizer.hysteresis = hysteresis;
    if (config.empty() || given(o_step)) cfg.integrator.step = step;
    if (config.empty() || given(o_duration)) cfg.integrator.duration = duration;
    if (config.empty() || given(o_tol)) cfg.tolerance = tol;
    if (config.empty() || given(o_dec)) cfg.decimation = decimation;
    validate(cfg);
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  out << text;
}

template <class Writer>
void write_with(const fs::path& path, Writer&& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  w(out);
}

struct RunResult {
  Trajectory trajectory;
  ConvergenceReport report;
};

RunResult run_config(const SimulationConfig& cfg) {
  const auto sc = build_scenario(cfg);
  auto traj = simulate(sc.initial, cfg.quantizer, SimulationOptions{cfg.integrator, cfg.decimation});
  auto rep = check_convergence(traj, cfg.quantizer, cfg.tolerance);
  return {std::move(traj), std::move(rep)};
}

std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("none");
}

int cmd_simulate(const ScenarioFlags& flags, const fs::path& out_dir) {
  const auto cfg = flags.resolve();
  auto res = run_config(cfg);
  fs::create_directories(out_dir);
  write_with(out_dir / cfg.output.trajectory,
             [&](std::ostream& os) { write_trajectory_csv(os, res.trajectory); });
  write_with(out_dir / cfg.output.errors,
             [&](std::ostream& os) { write_errors_csv(os, res.trajectory); });
  write_text(out_dir / cfg.output.report, to_json(res.report).dump(2) + "\n");
  write_text(out_dir / "config.json", config_to_json(cfg).dump(2) + "\n");

  for (const auto& w : res.trajectory.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "quantizer    " << to_string(cfg.quantizer.kind) << '\n'
            << "target_set   " << res.report.target_set.name() << '\n'
            << "converged    " << (res.report.converged ? "true" : "false") << '\n'
            << "t_converged  " << opt_str(res.report.t_converged) << '\n';
  if (res.report.t_star_bound) std::cout << "t_star_bound " << opt_str(res.report.t_star_bound) << '\n';
  if (res.trajectory.aborted) {
    std::cerr << "aborted: " << res.trajectory.abort_reason << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

unsigned thread_cap() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RIGIDSIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) cap = static_cast<unsigned>(v);
  }
  return cap;
}

int cmd_sweep(const ScenarioFlags& flags, std::vector<std::string> kinds,
              std::vector<double> gains, const fs::path& out_dir) {
  const auto base = flags.resolve();
  if (kinds.empty())
    for (auto k : kAllQuantizerKinds) kinds.emplace_back(to_string(k));
  if (gains.empty()) gains = {0.25, 0.5, 1.0};

  struct Cell {
    SimulationConfig cfg;
    std::string name;
    std::optional<ConvergenceReport> report;
    std::string error;
    bool aborted = false;
  };
  std::vector<Cell> cells;
  for (const auto& ks : kinds) {
    const auto k = parse_quantizer_kind(ks);
    if (!k) throw ValidationError("unknown quantizer '" + ks + "'");
    // the signum quantizer has no gain
    const std::vector<double> gs = *k == QuantizerKind::Signum ? std::vector<double>{base.quantizer.gain} : gains;
    for (double g : gs) {
      Cell c;
      c.cfg = base;
      c.cfg.quantizer.kind = *k;
      c.cfg.quantizer.gain = g;
      if (*k != QuantizerKind::Signum) c.cfg.quantizer.hysteresis = 0.0;
      validate(c.cfg);
      c.name = std::string(to_string(*k)) + (*k == QuantizerKind::Signum ? "" : "-g" + format_double(g));
      cells.push_back(std::move(c));
    }
  }

  fs::create_directories(out_dir);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto& c = cells[i];
      try {
        auto res = run_config(c.cfg);
        const fs::path dir = out_dir / c.name;
        fs::create_directories(dir);
        write_text(dir / c.cfg.output.report, to_json(res.report).dump(2) + "\n");
        write_with(dir / c.cfg.output.errors,
                   [&](std::ostream& os) { write_errors_csv(os, res.trajectory); });
        c.aborted = res.trajectory.aborted;
        c.report = std::move(res.report);
      } catch (const std::exception& err) {
        c.error = err.what();
      }
    }
  };
  const unsigned n_threads = std::min<unsigned>(thread_cap(), static_cast<unsigned>(cells.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  nlohmann::json index = nlohmann::json::array();
  bool failed = false;
  for (const auto& c : cells) {
    nlohmann::json row{{"cell", c.name},
                       {"quantizer", std::string(to_string(c.cfg.quantizer.kind))},
                       {"gain", c.cfg.quantizer.gain},
                       {"report", c.name + "/" + c.cfg.output.report}};
    if (c.report) {
      row["converged"] = c.report->converged;
      row["t_converged"] = c.report->t_converged ? nlohmann::json(*c.report->t_converged) : nlohmann::json(nullptr);
    }
    if (!c.error.empty()) row["error"] = c.error;
    row["aborted"] = c.aborted;
    failed = failed || !c.error.empty() || c.aborted;
    index.push_back(std::move(row));
    std::cout << c.name << ": "
              << (!c.error.empty() ? "error: " + c.error
                                   : (c.report->converged ? "converged at " + opt_str(c.report->t_converged)
                                                          : std::string("not converged")))
              << '\n';
  }
  write_text(out_dir / "index.json", nlohmann::json{{"cells", index}}.dump(2) + "\n");
  return failed ? kExitRuntime : kExitOk;
}

int cmd_check_rigidity(const ScenarioFlags& flags, bool perturbed) {
  std::optional<Framework> f;
  if (!flags.config.empty()) {
    f = build_scenario(load_config(flags.config)).initial;
  } else if (perturbed) {
    f = perturb_preset(preset(flags.preset), flags.seed, flags.magnitude).framework;
  } else {
    const auto pre = preset(flags.preset);
    f.emplace(pre.graph, pre.target);
  }
  const auto rep = rigidity_check(*f);
  std::cout << "agents " << f->graph().agents() << '\n'
            << "edges " << f->graph().edge_count() << '\n'
            << "rank " << rep.rank << '\n'
            << "required_rank " << f->graph().rigid_edge_count() << '\n'
            << "infinitesimally_rigid " << (rep.infinitesimally_rigid ? "true" : "false") << '\n'
            << "minimally_rigid " << (rep.minimally_rigid ? "true" : "false") << '\n';
  return kExitOk;
}

int cmd_two_agent(double desired, double gain, const std::vector<double>& distances,
                  const IntegratorConfig& integ, const fs::path& out_dir) {
  integ.validate();
  const QuantizerSpec q{QuantizerKind::UniformAsym, gain, 0.0};
  q.validate();
  const auto graph = std::make_shared<const FormationGraph>(
      FormationGraph::canonical(2, 3, {{0, 1}}, {desired}));
  const double allowed = 2.0 * gain * integ.step;

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "two_agent.csv", std::ios::binary);
  csv << "initial,predicted,stationary,simulated,abs_diff,within\n";
  bool all_ok = true;
  for (double d0 : distances) {
    const auto pred = two_agent_oracle(d0, desired, gain);
    Points p(3, 2);
    p.col(0) << 0.0, 0.0, 0.0;
    p.col(1) << d0, 0.0, 0.0;
    const auto traj = simulate(Framework(graph, p), q, SimulationOptions{integ, integ.steps()});
    const double sim = traj.final().errors[0] + desired;
    const double diff = std::abs(sim - pred.final_distance);
    const bool ok = !traj.aborted && diff <= allowed;
    all_ok = all_ok && ok;
    csv << format_double(d0) << ',' << format_double(pred.final_distance) << ','
        << (pred.stationary ? 1 : 0) << ',' << format_double(sim) << ',' << format_double(diff)
        << ',' << (ok ? 1 : 0) << '\n';
    std::cout << "initial " << format_double(d0) << " -> predicted "
              << (pred.stationary ? "stationary at " : "") << format_double(pred.final_distance)
              << ", simulated " << format_double(sim) << (ok ? "  ok" : "  MISMATCH") << '\n';
  }
  return all_ok ? kExitOk : kExitRuntime;
}

int cmd_compare(const ScenarioFlags& flags, const fs::path& out_dir) {
  auto base = flags.resolve();
  const auto sc = build_scenario(base);
  std::vector<Trajectory> runs;
  nlohmann::json reports = nlohmann::json::object();
  bool aborted = false;
  for (auto k : kAllQuantizerKinds) {
    QuantizerSpec q{k, base.quantizer.gain, 0.0};
    auto traj = simulate(sc.initial, q, SimulationOptions{base.integrator, base.decimation});
    const auto rep = check_convergence(traj, q, base.tolerance);
    reports[std::string(to_string(k))] = to_json(rep);
    aborted = aborted || traj.aborted;
    std::cout << to_string(k) << ": V(0)=" << format_double(traj.initial().lyapunov)
              << " V(T)=" << format_double(traj.final().lyapunov)
              << " t_converged=" << opt_str(rep.t_converged) << '\n';
    runs.push_back(std::move(traj));
  }
  fs::create_directories(out_dir);
  write_with(out_dir / "lyapunov_compare.csv", [&](std::ostream& os) {
    os << 't';
    for (auto k : kAllQuantizerKinds) os << ',' << to_string(k);
    os << '\n';
    const std::size_t rows =
        std::min_element(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
          return a.samples.size() < b.samples.size();
        })->samples.size();
    for (std::size_t i = 0; i < rows; ++i) {
      os << format_double(runs.front().samples[i].t);
      for (const auto& r : runs) os << ',' << format_double(r.samples[i].lyapunov);
      os << '\n';
    }
  });
  write_text(out_dir / "compare.json", reports.dump(2) + "\n");
  return aborted ? kExitRuntime : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized rigid formation control simulator"};
  app.require_subcommand(1);
  std::string out_dir = "./out";
  app.add_option("--out-dir", out_dir, "Directory for all outputs")->capture_default_str();

  ScenarioFlags sim_flags, sweep_flags, rig_flags, cmp_flags;

  auto* sim = app.add_subcommand("simulate", "Run one simulation");
  sim_flags.attach(sim, true);
  sim->add_option("--out-dir", out_dir, "Directory for all outputs");

  auto* sweep = app.add_subcommand("sweep", "Grid over quantizer kinds and gains");
  sweep_flags.attach(sweep, false);
  std::vector<std::string> kinds;
  std::vector<double> gains;
  sweep->add_option("--kinds", kinds, "Quantizer kinds (default: all)")->delimiter(',');
  sweep->add_option("--gains", gains, "Gains (default: 0.25,0.5,1)")->delimiter(',');
  sweep->add_option("--out-dir", out_dir, "Directory for all outputs");

  auto* rig = app.add_subcommand("check-rigidity", "Print rigidity-matrix rank and flags");
  rig->add_option("--config", rig_flags.config, "Scenario JSON file (uses its initial framework)");
  rig->add_option("--preset", rig_flags.preset, "Preset name (target shape)");
  auto* rig_seed = rig->add_option("--seed", rig_flags.seed, "Check a perturbed preset instead");
  auto* rig_mag = rig->add_option("--magnitude", rig_flags.magnitude, "Perturbation magnitude");

  auto* two = app.add_subcommand("two-agent", "Floor-quantizer two-agent cases vs closed form");
  double desired = 6.0, two_gain = 0.5;
  std::vector<double> distances{8.0, 5.0, 6.2};
  IntegratorConfig two_integ{1e-3, 20.0};
  two->add_option("--desired", desired, "Desired distance d12")->capture_default_str();
  two->add_option("--gain", two_gain, "Quantizer gain delta_u")->capture_default_str();
  two->add_option("--distances", distances, "Initial distances")->delimiter(',');
  two->add_option("--step", two_integ.step, "Euler step h")->capture_default_str();
  two->add_option("--duration", two_integ.duration, "Simulated time")->capture_default_str();
  two->add_option("--out-dir", out_dir, "Directory for all outputs");

  auto* cmp = app.add_subcommand("compare", "Four quantizers from one initial condition");
  cmp_flags.attach(cmp, false);
  cmp->add_option("--out-dir", out_dir, "Directory for all outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*sim) return cmd_simulate(sim_flags, out_dir);
    if (*sweep) return cmd_sweep(sweep_flags, kinds, gains, out_dir);
    if (*rig) return cmd_check_rigidity(rig_flags, rig_seed->count() + rig_mag->count() > 0);
    if (*two) return cmd_two_agent(desired, two_gain, distances, two_integ, out_dir);
    if (*cmp) return cmd_compare(cmp_flags, out_dir);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
