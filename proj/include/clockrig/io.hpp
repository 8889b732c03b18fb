#pragma once

// JSON and CSV formats. Vertices are 1-based in every file. Doubles are written
// with 17 significant digits so identical runs give identical bytes.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "clockrig/estimate.hpp"
#include "clockrig/graph.hpp"
#include "clockrig/oracle.hpp"
#include "clockrig/rigidity.hpp"
#include "clockrig/simulate.hpp"

namespace clockrig {

using Json = nlohmann::ordered_json;

std::string dump_json(const Json& j, int indent = 2);
Json parse_json(const std::string& text);
Json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

Json to_json(const Graph& g);
Json to_json(const Digraph& dg);
Graph graph_from_json(const Json& j);
Digraph digraph_from_json(const Json& j);

// "graph" holds edges for the bidirectional network of an undirected graph and
// arcs otherwise.
Json to_json(const Scenario& sc);
Scenario scenario_from_json(const Json& j);

Json to_json(const RigidityReport& rep);
Json to_json(const FrameworkClassification& cls, const Scenario& sc);
Json to_json(const AuditReport& rep);
Json to_json(const TrivialFit& fit);

std::string status_name(EstimateStatus s);
// Scenario fields with the estimated positions (joint) and clocks, plus the
// run status and trivial fit.
Json final_config_json(const Scenario& truth, const EstimateTrace& trace, bool joint,
                       const TrivialFit& fit);

std::string timestamps_csv(const TimestampTable& ts);
TimestampTable timestamps_from_csv(const std::string& text);
std::string trace_csv(const EstimateTrace& trace);
std::string matrix_csv(const Eigen::MatrixXd& m);

std::string format_double(double x);

}  // namespace clockrig
