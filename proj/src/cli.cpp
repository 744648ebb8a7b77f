#include "swarmstab/cli.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "swarmstab/certify.hpp"
#include "swarmstab/ctmc.hpp"
#include "swarmstab/feedback.hpp"
#include "swarmstab/io.hpp"
#include "swarmstab/openloop.hpp"
#include "swarmstab/simulate.hpp"
#include "swarmstab/synth.hpp"

namespace swarmstab::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

// Output files are collected here and written only once every computation
// has succeeded, so failed runs leave nothing behind.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  void add(const std::string& name, std::string text) { files_[name] = std::move(text); }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }
  void flush() const {
    for (const auto& [name, text] : files_) io::write_text_file(dir_ / name, text);
  }

 private:
  fs::path dir_;
  std::map<std::string, std::string> files_;
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("config field \"") + key + "\" has the wrong type");
  }
}

Distribution<double> distribution_field(const json& j, const char* key, const DirectedGraph& g) {
  Distribution<double> d(io::vector_from_json(j[key], key));
  if (d.size() != g.vertex_count()) {
    throw InvalidArgument(std::string("\"") + key + "\" has " + std::to_string(d.size()) +
                          " entries for a graph with " + std::to_string(g.vertex_count()) +
                          " vertices");
  }
  return d;
}

Eigen::VectorXi counts_from_density(const Distribution<double>& x, int n) {
  // Largest-remainder rounding keeps the total at exactly n.
  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXi counts(m);
  std::vector<std::pair<double, Eigen::Index>> remainders;
  int assigned = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double exact = x.values()[i] * n;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.push_back({exact - counts[i], i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < n - assigned; ++k) {
    counts[remainders[static_cast<std::size_t>(k)].second] += 1;
  }
  return counts;
}

std::string csv(const auto& writer, const auto& value) {
  std::ostringstream os;
  writer(os, value);
  return os.str();
}

void require_target(const RunConfig& cfg) {
  if (!cfg.target) throw InvalidArgument("config needs \"target\"");
}
void require_initial(const RunConfig& cfg) {
  if (!cfg.initial) throw InvalidArgument("config needs \"initial\"");
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  require_target(cfg);
  const auto rates = synthesize_invariant_rates(cfg.graph, *cfg.target);
  const auto gen = generator_from_rates(cfg.graph, rates);

  CertifySummary summary;
  summary.add(verify_stationary(gen, *cfg.target, cfg.stationary_tolerance));
  const auto z = stationary_distribution(gen);
  const double gap = (z.values() - cfg.target->values()).lpNorm<Eigen::Infinity>();
  summary.add({"stationary_solve_matches_target", gap <= 10 * cfg.stationary_tolerance, gap,
               10 * cfg.stationary_tolerance, ""});

  OutputSet files(cfg.output);
  files.add_json("rates.json", io::rates_to_json(cfg.graph, rates));
  files.add_json("certify.json", io::summary_to_json(summary));
  files.flush();
  out << "synth: " << (summary.passed() ? "stationarity verified" : "verification FAILED")
      << ", wrote " << (cfg.output / "rates.json").string() << "\n";
  return summary.passed() ? kOk : kNumericalFailure;
}

int cmd_schedule(const RunConfig& cfg, std::ostream& out) {
  require_target(cfg);
  require_initial(cfg);
  if (!(cfg.eps > 0)) throw InvalidArgument("\"eps\" must be positive");
  if (!is_strongly_connected(cfg.graph)) throw InvalidArgument("graph is not strongly connected");

  ScheduleOptions<double> sopts;
  sopts.step = cfg.dt;
  const auto result = asymptotic_schedule(cfg.graph, *cfg.initial, *cfg.target, cfg.eps, sopts);

  ScheduleRunOptions<double> ropts;
  ropts.step = cfg.dt;
  ropts.final_phase_horizon = cfg.horizon;
  ropts.record_stride = cfg.record_stride;
  const Vector<double> xd = cfg.target->values();
  const double settle_tol = cfg.tolerance / 10;
  const StopCondition<double> settled = [&](double, const Vector<double>& x) {
    return l1_distance(x, xd) <= settle_tol;
  };
  const auto traj = run_schedule(cfg.graph, result.schedule, *cfg.initial, ropts, settled);
  const double final_error = l1_distance(traj.final_state(), xd);

  CertifySummary summary;
  summary.add({"final_l1_error", final_error <= cfg.tolerance, final_error, cfg.tolerance, ""});
  summary.add({"mass_drift_per_step", traj.max_mass_drift <= 1e-12, traj.max_mass_drift, 1e-12,
               ""});

  OutputSet files(cfg.output);
  files.add_json("schedule.json", io::schedule_to_json(cfg.graph, result.schedule));
  files.add("trajectory.csv", csv(io::write_trajectory_csv, traj));
  files.add_json("certify.json", io::summary_to_json(summary));
  files.flush();
  out << "schedule: " << result.schedule.size() << " phases, final L1 error "
      << io::format_double(final_error) << "\n";
  return summary.passed() ? kOk : kNumericalFailure;
}

int cmd_simulate(const RunConfig& cfg, const std::string& mode, std::ostream& out) {
  require_target(cfg);
  require_initial(cfg);
  const bool run_ode = mode == "ode" || mode == "both";
  const bool run_agents = mode == "agents" || mode == "both";

  VectorField<double> field;
  RateSource<double> rate_source;
  if (cfg.controller == "feedback") {
    const FeedbackLaw<double> law(cfg.graph, *cfg.target, cfg.gain);
    field = [law](const Vector<double>& x) { return closed_loop_field(law, x); };
    rate_source = [law](const Vector<double>& x) { return feedback_rates(law, x); };
  } else {
    const auto rates = synthesize_invariant_rates(cfg.graph, *cfg.target);
    const Matrix<double> gt = generator_from_rates(cfg.graph, rates).matrix().transpose();
    field = [gt](const Vector<double>& x) -> Vector<double> { return gt * x; };
    rate_source = [rates](const Vector<double>&) { return rates; };
  }

  OutputSet files(cfg.output);
  Trajectory<double> ode;
  if (run_ode) {
    OdeOptions<double> opts;
    opts.horizon = cfg.horizon;
    opts.step = cfg.dt;
    opts.record_stride = cfg.record_stride;
    ode = integrate_ode<double>(field, cfg.initial->values(), opts);
    files.add("ode.csv", csv(io::write_trajectory_csv, ode));
  }
  if (run_agents) {
    const auto counts = counts_from_density(*cfg.initial, cfg.agents);
    const auto agents =
        simulate_agents<double>(cfg.graph, rate_source, counts, cfg.horizon, cfg.seed);
    files.add("agents_events.csv", csv(io::write_events_csv, agents));
    files.add("agents_density.csv", csv(io::write_agent_density_csv, agents));
    const auto last = last_transition_time(agents);
    json report = {{"agents", cfg.agents},
                   {"seed", cfg.seed},
                   {"events", agents.event_count()},
                   {"absorbed", agents.absorbed},
                   {"last_transition_time", last ? json(*last) : json(nullptr)}};
    if (run_ode) report["deviation"] = deviation_metric(ode, agents);
    files.add_json(run_ode ? "deviation.json" : "agents.json", report);
    out << "simulate: " << agents.event_count() << " agent events";
    if (run_ode) out << ", deviation " << io::format_double(report["deviation"].get<double>());
    out << "\n";
  }
  files.flush();
  return kOk;
}

int cmd_search(const RunConfig& cfg, int budget, std::ostream& out) {
  require_target(cfg);
  require_initial(cfg);
  SearchOptions<double> opts;
  opts.reference.start = *cfg.initial;
  opts.reference.step = cfg.dt;
  opts.gain = cfg.gain;
  opts.budget = budget;
  opts.seed = cfg.seed;
  opts.certificate_samples = cfg.certificate_samples;
  const auto result = optimize_gains(cfg.graph, *cfg.target, opts);

  json report = io::certificate_to_json(result.certificate);
  report["convergence_time"] = result.convergence_time;
  report["baseline_convergence_time"] = result.baseline_convergence_time;
  report["evaluations"] = result.evaluations;
  report["accepted_moves"] = result.accepted_moves;

  OutputSet files(cfg.output);
  files.add_json("candidate.json", io::candidate_to_json(cfg.graph, result.candidate));
  files.add_json("certificate.json", report);
  files.flush();
  out << "search: " << result.evaluations << " evaluations, convergence time "
      << io::format_double(result.convergence_time) << " (baseline "
      << io::format_double(result.baseline_convergence_time) << ")\n";
  return result.certificate.passed ? kOk : kSearchFailure;
}

}  // namespace

RunConfig load_config(const fs::path& path) {
  const json j = io::read_json_file(path);
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? fs::path(p) : base / p;
  };

  RunConfig cfg;
  if (!j.contains("graph")) throw InvalidArgument("config needs \"graph\"");
  if (j["graph"].is_string()) {
    cfg.graph = io::graph_from_json(io::read_json_file(resolve(j["graph"].get<std::string>())));
  } else {
    cfg.graph = io::graph_from_json(j["graph"]);
  }
  if (j.contains("target")) cfg.target = distribution_field(j, "target", cfg.graph);
  if (j.contains("initial")) cfg.initial = distribution_field(j, "initial", cfg.graph);

  cfg.gain = get_or(j, "gain", cfg.gain);
  cfg.horizon = get_or(j, "horizon", cfg.horizon);
  cfg.dt = get_or(j, "dt", cfg.dt);
  cfg.agents = get_or(j, "agents", cfg.agents);
  cfg.seed = get_or(j, "seed", cfg.seed);
  cfg.output = resolve(get_or<std::string>(j, "output", "out"));
  cfg.eps = get_or(j, "eps", cfg.eps);
  cfg.tolerance = get_or(j, "tolerance", cfg.tolerance);
  cfg.controller = get_or(j, "controller", cfg.controller);
  cfg.record_stride = get_or(j, "record_stride", cfg.record_stride);
  cfg.stationary_tolerance = get_or(j, "stationary_tolerance", cfg.stationary_tolerance);
  cfg.certificate_samples = get_or(j, "certificate_samples", cfg.certificate_samples);
  cfg.budget = get_or(j, "budget", cfg.budget);

  if (!(cfg.gain > 0)) throw InvalidArgument("\"gain\" must be positive");
  if (!(cfg.dt > 0)) throw InvalidArgument("\"dt\" must be positive");
  if (!(cfg.horizon >= cfg.dt)) throw InvalidArgument("\"horizon\" must be at least \"dt\"");
  if (cfg.agents < 1) throw InvalidArgument("\"agents\" must be at least 1");
  if (!(cfg.tolerance > 0)) throw InvalidArgument("\"tolerance\" must be positive");
  if (cfg.record_stride < 1) throw InvalidArgument("\"record_stride\" must be at least 1");
  if (cfg.certificate_samples < 1) throw InvalidArgument("\"certificate_samples\" must be >= 1");
  if (cfg.controller != "feedback" && cfg.controller != "invariant") {
    throw InvalidArgument("\"controller\" must be \"feedback\" or \"invariant\"");
  }
  return cfg;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field stabilization of CTMC swarms on directed graphs"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", out_dir, "Override the output directory");
  };

  auto* synth = app.add_subcommand("synth", "Time-invariant rates stabilizing the target");
  auto* schedule = app.add_subcommand("schedule", "Two-phase schedule for any target");
  auto* simulate = app.add_subcommand("simulate", "Mean-field ODE and/or N-agent simulation");
  auto* search = app.add_subcommand("search", "Certified search over polynomial feedback gains");
  for (auto* sub : {synth, schedule, simulate, search}) add_common(sub);
  std::string mode = "both";
  simulate->add_option("--mode", mode, "ode | agents | both")
      ->check(CLI::IsMember({"ode", "agents", "both"}));
  std::optional<int> budget;
  search->add_option("--budget", budget, "Candidate evaluations (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output = out_dir;
    if (budget) cfg.budget = *budget;
    if (cfg.budget < 1) throw InvalidArgument("budget must be at least 1");
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (*synth) return cmd_synth(cfg, out);
    if (*schedule) return cmd_schedule(cfg, out);
    if (*simulate) return cmd_simulate(cfg, mode, out);
    return cmd_search(cfg, cfg.budget, out);
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const InfeasibleTarget& e) {
    err << "infeasible target: " << e.what() << " (use `schedule` for such targets)\n";
    return kInfeasibleTarget;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace swarmstab::cli
