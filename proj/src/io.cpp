#include "clockrig/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "clockrig/error.hpp"

namespace clockrig {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void emit(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        out += Json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        emit(it.value(), out, indent, depth + 1);
      }
      out += nl;
      out += close_pad;
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(j.begin(), j.end(),
                                     [](const Json& x) { return x.is_structured(); });
      out += "[";
      bool first = true;
      for (const auto& x : j) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) {
          out += nl;
          out += pad;
        }
        first = false;
        emit(x, out, indent, depth + 1);
      }
      if (!flat) {
        out += nl;
        out += close_pad;
      }
      out += "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

Json doubles(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

int vertex(const Json& x, int n, const char* what) {
  if (!x.is_number_integer()) throw Error(std::string(what) + ": vertex ids must be integers");
  const int v = x.get<int>();
  if (v < 1 || v > n) throw Error(std::string(what) + ": vertex " + std::to_string(v) + " out of range 1.." + std::to_string(n));
  return v - 1;
}

std::vector<Edge> pairs_from_json(const Json& list, int n, const char* what) {
  if (!list.is_array()) throw Error(std::string(what) + ": expected an array of pairs");
  std::vector<Edge> out;
  for (const auto& p : list) {
    if (!p.is_array() || p.size() != 2) throw Error(std::string(what) + ": each entry must be a pair");
    out.push_back({vertex(p[0], n, what), vertex(p[1], n, what)});
  }
  return out;
}

int count_from_json(const Json& j, const char* what) {
  if (!j.is_object() || !j.contains("n") || !j["n"].is_number_integer()) {
    throw Error(std::string(what) + ": missing integer field 'n'");
  }
  const int n = j["n"].get<int>();
  if (n < 1) throw Error(std::string(what) + ": n must be positive");
  return n;
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) throw Error(std::string(what) + ": expected a number");
  return j.get<double>();
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  emit(j, out, indent, 0);
  out += "\n";
  return out;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(std::string("invalid JSON: ") + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::string& path) { return parse_json(read_text_file(path)); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

Json to_json(const Graph& g) {
  Json edges = Json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.u + 1, e.v + 1});
  return Json{{"n", g.n()}, {"edges", edges}};
}

Json to_json(const Digraph& dg) {
  Json arcs = Json::array();
  for (const Edge& a : dg.arcs()) arcs.push_back({a.u + 1, a.v + 1});
  return Json{{"n", dg.n()}, {"arcs", arcs}};
}

Graph graph_from_json(const Json& j) {
  const int n = count_from_json(j, "graph");
  if (!j.contains("edges")) throw Error("graph: missing field 'edges'");
  return Graph(n, pairs_from_json(j["edges"], n, "graph"));
}

Digraph digraph_from_json(const Json& j) {
  const int n = count_from_json(j, "digraph");
  if (!j.contains("arcs")) throw Error("digraph: missing field 'arcs'");
  return Digraph(n, pairs_from_json(j["arcs"], n, "digraph"));
}

Json to_json(const Scenario& sc) {
  Json out;
  out["graph"] = sc.network == Digraph::bidirectional(sc.graph) ? to_json(sc.graph) : to_json(sc.network);
  Json pos = Json::array();
  for (int i = 0; i < sc.n(); ++i) pos.push_back(doubles(sc.positions.point(i)));
  out["positions"] = pos;
  Json clocks = Json::array();
  for (const auto& ck : sc.clocks.clocks()) clocks.push_back({ck.alpha, ck.beta});
  out["clocks"] = clocks;
  Json send = Json::array();
  for (double t : sc.schedule.send_local) send.push_back(t);
  out["schedule"] = Json{{"send_local", send}, {"delta", sc.schedule.delta}};
  out["c"] = sc.c;
  out["seed"] = sc.seed ? Json(*sc.seed) : Json(nullptr);
  return out;
}

Scenario scenario_from_json(const Json& j) {
  if (!j.is_object()) throw Error("scenario: expected a JSON object");
  for (const char* key : {"graph", "positions", "clocks", "schedule"}) {
    if (!j.contains(key)) throw Error(std::string("scenario: missing field '") + key + "'");
  }
  const Json& gj = j["graph"];
  const bool directed = gj.is_object() && gj.contains("arcs");
  const Digraph network = directed ? digraph_from_json(gj) : Digraph::bidirectional(graph_from_json(gj));
  const Graph graph = directed ? network.disoriented() : graph_from_json(gj);
  const int n = network.n();

  const Json& pj = j["positions"];
  if (!pj.is_array() || static_cast<int>(pj.size()) != n) {
    throw Error("scenario: 'positions' must list one point per node");
  }
  const int dim = pj[0].is_array() ? static_cast<int>(pj[0].size()) : 0;
  if (dim != 2 && dim != 3) throw Error("scenario: positions must be 2D or 3D points");
  Eigen::MatrixXd pts(dim, n);
  for (int i = 0; i < n; ++i) {
    if (!pj[i].is_array() || static_cast<int>(pj[i].size()) != dim) {
      throw Error("scenario: position " + std::to_string(i + 1) + " has wrong dimension");
    }
    for (int r = 0; r < dim; ++r) pts(r, i) = number(pj[i][r], "scenario positions");
  }

  const Json& cj = j["clocks"];
  if (!cj.is_array() || static_cast<int>(cj.size()) != n) {
    throw Error("scenario: 'clocks' must list one [alpha, beta] per node");
  }
  std::vector<ClockParams> clocks;
  for (const auto& c : cj) {
    if (!c.is_array() || c.size() != 2) throw Error("scenario: each clock must be [alpha, beta]");
    clocks.push_back({number(c[0], "scenario clocks"), number(c[1], "scenario clocks")});
  }

  const Json& sj = j["schedule"];
  if (!sj.is_object() || !sj.contains("send_local")) throw Error("scenario: schedule needs 'send_local'");
  Schedule schedule;
  for (const auto& t : sj["send_local"]) schedule.send_local.push_back(number(t, "scenario schedule"));
  if (sj.contains("delta")) schedule.delta = number(sj["delta"], "scenario schedule");

  const double c = j.contains("c") ? number(j["c"], "scenario c") : kSpeedOfLight;
  Scenario sc{graph, network, PositionConfig(pts), ClockConfig(clocks), schedule, c, std::nullopt};
  if (j.contains("seed") && !j["seed"].is_null()) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw Error("scenario: seed must be an integer or null");
    }
    sc.seed = j["seed"].get<std::uint64_t>();
  }
  sc.validate();
  return sc;
}

Json to_json(const RigidityReport& rep) {
  Json out;
  out["kind"] = to_string(rep.kind);
  out["rank"] = rep.rank;
  out["expected_rank"] = rep.expected_rank;
  out["verdict"] = rep.rigid ? "rigid" : "flexible";
  out["tolerance"] = rep.tolerance;
  out["singular_values"] = doubles(rep.singular_values);
  out["nullity"] = static_cast<int>(rep.nullspace_basis.cols());
  out["trivial_dimension"] = rep.trivial_dimension;
  out["trivial_residual"] = finite_or_null(rep.trivial_residual);
  out["trivial_angle"] = finite_or_null(rep.trivial_angle);
  out["spectral_gap"] = finite_or_null(rep.spectral_gap());
  return out;
}

Json to_json(const FrameworkClassification& cls, const Scenario& sc) {
  Json out;
  out["n"] = sc.n();
  out["m"] = sc.graph.m();
  out["dim"] = sc.dim();
  out["bidirectional"] = sc.network.is_bidirectional();
  out["frame"] = Json{{"time_shift", cls.frame.time_shift},
                      {"time_unit", cls.frame.time_unit},
                      {"length_unit", cls.frame.length_unit}};
  out["reports"] = Json::array({to_json(cls.distance), to_json(cls.bearing), to_json(cls.clock),
                                to_json(cls.joint)});
  out["combinatorial"] = Json{{"laman_spanning", cls.laman_spanning},
                              {"laman_with_redundant_edge", cls.laman_with_redundant},
                              {"redundant_edges", cls.redundant_edges},
                              {"distance_rigid_with_redundant_edge", cls.distance_rigid_with_redundant}};
  Json anomalies = Json::array();
  for (const auto& a : cls.anomalies) anomalies.push_back(a);
  out["anomalies"] = anomalies;
  return out;
}

Json to_json(const AuditReport& rep) {
  auto cases = [](const std::vector<AuditDisagreement>& list) {
    Json arr = Json::array();
    for (const auto& d : list) {
      Json verdicts = Json::object();
      for (const auto& v : d.verdicts) verdicts[v.name] = v.value;
      arr.push_back(Json{{"graph", to_json(d.graph)}, {"seed", d.seed}, {"verdicts", verdicts}});
    }
    return arr;
  };
  Json out;
  out["name"] = rep.name;
  out["checked"] = rep.checked;
  out["disagreements"] = cases(rep.disagreements);
  if (!rep.cases.empty()) out["cases"] = cases(rep.cases);
  return out;
}

Json to_json(const TrivialFit& fit) {
  Json out;
  out["k_s"] = fit.k_s;
  out["k_beta"] = fit.k_beta;
  if (fit.joint) {
    if (fit.rotation.rows() == 2) out["theta"] = fit.theta;
    Json rot = Json::array();
    for (int r = 0; r < fit.rotation.rows(); ++r) rot.push_back(doubles(fit.rotation.row(r).transpose()));
    out["rotation"] = rot;
    out["k_t"] = doubles(fit.k_t);
  }
  out["residual"] = fit.residual;
  return out;
}

std::string status_name(EstimateStatus s) {
  switch (s) {
    case EstimateStatus::converged: return "converged";
    case EstimateStatus::max_iters: return "max_iters";
    case EstimateStatus::stalled: return "stalled";
  }
  return "unknown";
}

Json final_config_json(const Scenario& truth, const EstimateTrace& trace, bool joint,
                       const TrivialFit& fit) {
  Scenario est = truth;
  const int n = truth.n(), d = truth.dim();
  if (joint) {
    est.positions = PositionConfig::from_stacked(trace.final_config.head(d * n), d);
    est.clocks = ClockConfig::from_stacked(trace.final_config.tail(2 * n));
  } else {
    est.clocks = ClockConfig::from_stacked(trace.final_config);
  }
  Json out = to_json(est);
  out["mode"] = joint ? "joint" : "clock";
  out["status"] = status_name(trace.status);
  out["iterations"] = trace.iterations;
  out["objective"] = trace.final_objective;
  out["max_edge_error"] =
      trace.final_edge_errors.size() ? trace.final_edge_errors.cwiseAbs().maxCoeff() : 0.0;
  out["trivial_fit"] = to_json(fit);
  return out;
}

std::string timestamps_csv(const TimestampTable& ts) {
  std::string out = "from,to,t_send_local,t_recv_local\n";
  for (const auto& r : ts.records()) {
    out += std::to_string(r.from + 1) + "," + std::to_string(r.to + 1) + "," + format_double(r.t_send) +
           "," + format_double(r.t_recv) + "\n";
  }
  return out;
}

TimestampTable timestamps_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("from,to,t_send_local,t_recv_local", 0) != 0) {
    throw Error("timestamps CSV: missing header 'from,to,t_send_local,t_recv_local'");
  }
  std::vector<ArcTimestamps> recs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string f[4];
    for (auto& cell : f) {
      if (!std::getline(row, cell, ',')) throw Error("timestamps CSV: line " + std::to_string(lineno) + " has too few columns");
    }
    try {
      recs.push_back({std::stoi(f[0]) - 1, std::stoi(f[1]) - 1, std::stod(f[2]), std::stod(f[3])});
    } catch (const std::exception&) {
      throw Error("timestamps CSV: line " + std::to_string(lineno) + " is not numeric");
    }
  }
  return TimestampTable(std::move(recs));
}

std::string trace_csv(const EstimateTrace& trace) {
  std::string out = "iter,objective,max_edge_error\n";
  for (std::size_t k = 0; k < trace.objective_history.size(); ++k) {
    out += std::to_string(k) + "," + format_double(trace.objective_history[k]) + "," +
           format_double(trace.max_edge_error_history[k]) + "\n";
  }
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (c) out += ",";
      out += format_double(m(r, c));
    }
    out += "\n";
  }
  return out;
}

}  // namespace clockrig
