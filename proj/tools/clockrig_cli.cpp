// clockrig: generate scenarios, simulate timestamps, classify rigidity, run the
// estimators and the theorem audits.
//
// Exit codes: 0 ok, 1 audit disagreement, 2 bad input or usage, 3 estimator hit
// max-iters or stalled, 4 estimator diverged.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include "clockrig/error.hpp"
#include "clockrig/estimate.hpp"
#include "clockrig/graph.hpp"
#include "clockrig/io.hpp"
#include "clockrig/oracle.hpp"
#include "clockrig/rigidity.hpp"
#include "clockrig/simulate.hpp"

using namespace clockrig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAudit = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitDiverged = 4;

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::optional<double> tol;
  std::string format = "json";
};

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
  } else {
    write_text_file(g.out, text);
  }
}

int positive_count(const std::string& arg, const std::string& tail) {
  std::size_t used = 0;
  int n = 0;
  try {
    n = std::stoi(tail, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tail.size() || n < 1) throw Error("graph '" + arg + "': bad vertex count");
  return n;
}

// Returns an undirected graph, or a digraph when the file lists arcs.
std::variant<Graph, Digraph> graph_from_arg(const std::string& arg) {
  if (arg == "k4") return complete_graph(4);
  if (arg == "k5") return complete_graph(5);
  if (arg == "wheel5") return wheel_graph(5);
  const auto colon = arg.find(':');
  if (colon != std::string::npos) {
    const std::string family = arg.substr(0, colon);
    const std::string tail = arg.substr(colon + 1);
    if (family == "path") return path_graph(positive_count(arg, tail));
    if (family == "complete") return complete_graph(positive_count(arg, tail));
    if (family == "cycle") return cycle_graph(positive_count(arg, tail));
    if (family == "wheel") return wheel_graph(positive_count(arg, tail));
  }
  if (std::filesystem::exists(arg)) {
    const Json j = read_json_file(arg);
    if (j.is_object() && j.contains("arcs")) return digraph_from_json(j);
    return graph_from_json(j);
  }
  throw Error("unknown graph family '" + arg +
              "' (expected k4, k5, wheel5, path:n, complete:n, cycle:n, wheel:n or a JSON file)");
}

struct GenArgs {
  std::string graph;
  int dim = 2;
  double c = kSpeedOfLight;
  double delta = 1e-3;
};

int cmd_gen(const Globals& g, const GenArgs& a) {
  RandomScenarioOptions opts;
  opts.c = a.c;
  opts.delta = a.delta;
  const auto net = graph_from_arg(a.graph);
  const Scenario sc = std::holds_alternative<Graph>(net)
                          ? random_scenario(std::get<Graph>(net), a.dim, g.seed, opts)
                          : random_scenario(std::get<Digraph>(net), a.dim, g.seed, opts);
  emit(g, dump_json(to_json(sc)));
  std::cerr << "seed " << g.seed << "\n";
  return kExitOk;
}

struct SimArgs {
  std::string scenario;
  double noise = 0.0;
};

int cmd_simulate(const Globals& g, const SimArgs& a) {
  const Scenario sc = scenario_from_json(read_json_file(a.scenario));
  const TimestampTable ts = simulate_timestamps(sc, {a.noise, mix_seed(g.seed, 1)});
  if (g.format == "csv") {
    emit(g, timestamps_csv(ts));
  } else {
    Json arr = Json::array();
    for (const auto& r : ts.records()) {
      arr.push_back(Json{{"from", r.from + 1}, {"to", r.to + 1}, {"t_send_local", r.t_send},
                         {"t_recv_local", r.t_recv}});
    }
    emit(g, dump_json(Json{{"timestamps", arr}}));
  }
  return kExitOk;
}

struct AnalyzeArgs {
  std::string scenario;
  std::string timestamps;
  bool raw = false;
  std::string matrix;  // optional kind to export as CSV
};

int cmd_analyze(const Globals& g, const AnalyzeArgs& a) {
  const Scenario sc = scenario_from_json(read_json_file(a.scenario));
  const TimestampTable ts =
      a.timestamps.empty() ? simulate_timestamps(sc) : timestamps_from_csv(read_text_file(a.timestamps));
  ClassifyOptions opts;
  opts.condition = !a.raw;
  if (g.tol) opts.policy.absolute_tol = *g.tol;

  if (!a.matrix.empty()) {
    const RigidityKind kind = rigidity_kind_from_string(a.matrix);
    const Frame frame = opts.condition ? Frame::conditioned(ts, sc.c) : Frame::identity();
    const TimestampTable fts = frame.apply(ts);
    const PositionConfig p = frame.apply(sc.positions);
    const ClockConfig clocks = frame.apply(sc.clocks);
    Eigen::MatrixXd m;
    switch (kind) {
      case RigidityKind::distance: m = distance_rigidity_matrix(sc.graph, p).entries; break;
      case RigidityKind::bearing: m = bearing_rigidity_matrix(sc.graph, p).entries; break;
      case RigidityKind::clock: m = clock_rigidity_matrix(sc.graph, fts).entries; break;
      case RigidityKind::extended: m = extended_matrices(sc.graph, fts, clocks).double_primed.entries; break;
      case RigidityKind::joint:
        m = joint_rigidity_matrix(sc.network, p, fts, clocks, frame.speed(sc.c)).entries;
        break;
    }
    emit(g, matrix_csv(m));
    return kExitOk;
  }

  const FrameworkClassification cls = classify_framework(sc, ts, opts);
  if (g.format == "csv") {
    std::string text = "kind,rank,expected_rank,verdict,trivial_residual\n";
    for (const auto* r : {&cls.distance, &cls.bearing, &cls.clock, &cls.joint}) {
      text += to_string(r->kind) + "," + std::to_string(r->rank) + "," + std::to_string(r->expected_rank) +
              "," + (r->rigid ? "rigid" : "flexible") + "," + format_double(r->trivial_residual) + "\n";
    }
    emit(g, text);
  } else {
    emit(g, dump_json(to_json(cls, sc)));
  }
  for (const auto& anomaly : cls.anomalies) std::cerr << "anomaly: " << anomaly << "\n";
  return kExitOk;
}

struct EstimateArgs {
  std::string scenario;
  std::string mode = "clock";
  double gain = 1.0;
  double clock_gain = 1.0;
  int max_iters = 100000;
  bool line_search = false;
  bool raw = false;
  bool plain = false;
  double perturb = 0.05;
  double noise = 0.0;
  std::string trace;
};

int cmd_estimate(const Globals& g, const EstimateArgs& a) {
  const Scenario sc = scenario_from_json(read_json_file(a.scenario));
  const TimestampTable ts = simulate_timestamps(sc, {a.noise, mix_seed(g.seed, 1)});
  EstimateOptions opts;
  opts.gain = a.gain;
  opts.clock_gain = a.clock_gain;
  opts.max_iters = a.max_iters;
  opts.line_search = a.line_search;
  opts.condition = !a.raw;
  opts.precondition = !a.plain;
  if (g.tol) opts.tol = *g.tol;
  std::mt19937_64 rng(mix_seed(g.seed, 2));

  const bool joint = a.mode == "joint";
  EstimateTrace trace;
  TrivialFit fit;
  if (joint) {
    const auto [p0, c0] = perturb_joint(sc.positions, sc.clocks, a.perturb, rng);
    trace = estimate_joint(sc.network, ts, p0, c0, sc.c, opts);
    const int n = sc.n(), d = sc.dim();
    fit = fit_joint_trivial(PositionConfig::from_stacked(trace.final_config.head(d * n), d),
                            ClockConfig::from_stacked(trace.final_config.tail(2 * n)), sc.positions,
                            sc.clocks, trace.frame);
  } else {
    const ClockConfig c0 = perturb_clocks(sc.clocks, a.perturb, rng);
    trace = estimate_clock(sc.graph, ts, c0, opts);
    fit = fit_clock_trivial(ClockConfig::from_stacked(trace.final_config), sc.clocks, trace.frame);
  }

  const std::string trace_path =
      !a.trace.empty() ? a.trace : (!g.out.empty() && g.out != "-" ? g.out + ".trace.csv" : "");
  if (!trace_path.empty()) write_text_file(trace_path, trace_csv(trace));
  if (g.format == "csv" && trace_path.empty()) {
    emit(g, trace_csv(trace));
  } else {
    emit(g, dump_json(final_config_json(sc, trace, joint, fit)));
  }
  std::cerr << status_name(trace.status) << " after " << trace.iterations
            << " iterations, trivial-fit residual " << format_double(fit.residual) << "\n";
  return trace.converged() ? kExitOk : kExitNotConverged;
}

struct AuditArgs {
  int nmax = 5;
  int seeds = 20;
  bool joint = true;
  bool raw = false;
};

int cmd_audit(const Globals& g, const AuditArgs& a) {
  AuditOptions opts;
  opts.seeds = a.seeds;
  opts.base_seed = g.seed;
  opts.classify.condition = !a.raw;
  if (g.tol) opts.classify.policy.absolute_tol = *g.tol;
  Json out;
  const AuditReport main = audit_theorem_main(a.nmax, opts);
  out["clock"] = to_json(main);
  bool ok = main.passed();
  if (a.joint) {
    std::vector<Graph> graphs;
    for (int n = 2; n <= a.nmax; ++n) {
      for (auto& gr : enumerate_graphs(n)) graphs.push_back(std::move(gr));
    }
    const AuditReport joint = audit_joint(2, graphs, opts);
    out["joint"] = to_json(joint);
    ok = ok && joint.passed();
  }
  out["passed"] = ok;
  emit(g, dump_json(out));
  return ok ? kExitOk : kExitAudit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clock and joint position-clock rigidity for TOA networks"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  double tol = 0.0;
  app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
  app.add_option("-o,--out", g.out, "Output file (default stdout)");
  auto* tol_opt = app.add_option("--tol", tol,
                                 "analyze/audit: absolute rank tolerance; estimate: stop when |e| <= tol");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a random scenario");
  gen_cmd->add_option("--graph", gen.graph, "k4, k5, wheel5, path:n, complete:n, cycle:n, wheel:n or JSON file")
      ->required();
  gen_cmd->add_option("--dim", gen.dim, "Spatial dimension")->check(CLI::IsMember({2, 3}))->capture_default_str();
  gen_cmd->add_option("--c", gen.c, "Propagation speed")->capture_default_str();
  gen_cmd->add_option("--delta", gen.delta, "Broadcast spacing (local seconds)")->capture_default_str();

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate one round of timestamps");
  sim_cmd->add_option("scenario", sim.scenario, "Scenario JSON")->required();
  sim_cmd->add_option("--noise", sim.noise, "Receive-timestamp noise std (s)");

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "Rank analysis of all rigidity matrices");
  an_cmd->add_option("scenario", an.scenario, "Scenario JSON")->required();
  an_cmd->add_option("--timestamps", an.timestamps, "Timestamp CSV (default: simulate)");
  an_cmd->add_flag("--raw", an.raw, "Analyse raw timestamps instead of the conditioned frame");
  an_cmd->add_option("--matrix", an.matrix, "Export one matrix as CSV: distance, bearing, clock, extended, joint");

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Gradient-descent estimation from perturbed truth");
  est_cmd->add_option("scenario", est.scenario, "Scenario JSON")->required();
  est_cmd->add_option("--mode", est.mode, "clock or joint")->check(CLI::IsMember({"clock", "joint"}))
      ->capture_default_str();
  est_cmd->add_option("--gain", est.gain, "Step as a multiple of 1/curvature")->capture_default_str();
  est_cmd->add_option("--clock-gain", est.clock_gain, "Relative gain on the clock block (joint)")
      ->capture_default_str();
  est_cmd->add_option("--max-iters", est.max_iters, "Iteration cap")->capture_default_str();
  est_cmd->add_flag("--line-search", est.line_search, "Armijo backtracking");
  est_cmd->add_flag("--raw", est.raw, "Iterate in raw units");
  est_cmd->add_flag("--plain", est.plain, "Plain gradient, no per-node centring or column scaling");
  est_cmd->add_option("--perturb", est.perturb, "Initial perturbation, fraction of |config|")
      ->capture_default_str();
  est_cmd->add_option("--noise", est.noise, "Receive-timestamp noise std (s)");
  est_cmd->add_option("--trace", est.trace, "Trace CSV path (default <out>.trace.csv)");

  AuditArgs au;
  auto* au_cmd = app.add_subcommand("audit", "Exhaustive small-graph theorem audits");
  au_cmd->add_option("--nmax", au.nmax, "Largest vertex count")->check(CLI::Range(2, 6))->capture_default_str();
  au_cmd->add_option("--seeds", au.seeds, "Scenarios per graph")->check(CLI::PositiveNumber)
      ->capture_default_str();
  au_cmd->add_flag("--clock-only{false}", au.joint, "Skip the joint audit");
  au_cmd->add_flag("--raw", au.raw, "Analyse raw timestamps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (*tol_opt) g.tol = tol;

  try {
    if (*gen_cmd) return cmd_gen(g, gen);
    if (*sim_cmd) return cmd_simulate(g, sim);
    if (*an_cmd) return cmd_analyze(g, an);
    if (*est_cmd) return cmd_estimate(g, est);
    if (*au_cmd) return cmd_audit(g, au);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
