#pragma once

// Independent checks: exhaustive small-graph enumeration, brute-force Laman
// search, finite-difference Jacobians and the randomized theorem audits.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "clockrig/graph.hpp"
#include "clockrig/rigidity.hpp"
#include "clockrig/simulate.hpp"

namespace clockrig {

// Connected graphs on n vertices up to isomorphism, n <= 6. Each graph is the
// representative with the smallest adjacency bitmask, listed by that mask.
std::vector<Graph> enumerate_graphs(int n);

// Searches every (2n-3)-edge subset for a Laman graph. Exponential; n <= 7.
bool brute_force_laman_spanning(const Graph& g);

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Central differences, column j stepped by h (or h(j)).
Eigen::MatrixXd finite_difference_jacobian(const VectorFn& f, const Eigen::VectorXd& x, double h);
Eigen::MatrixXd finite_difference_jacobian(const VectorFn& f, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& h);
// max over columns of max|a_j - b_j| / max|b_j|; columns where b vanishes are
// compared absolutely.
double column_relative_mismatch(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// phi -> [Tbar_u alpha_u + beta_u - Tbar_v alpha_v - beta_v]_k
VectorFn clock_edge_residual(const Graph& g, const TimestampTable& ts);
// sigma -> [|p_i - p_j|^2 - c^2 (alpha_j T_recv + beta_j - alpha_i T_send - beta_i)^2]_arcs
VectorFn joint_squared_residual(const Digraph& dg, int dim, const TimestampTable& ts, double c);

struct AuditVerdict {
  std::string name;
  bool value = false;
};

struct AuditDisagreement {
  Graph graph;
  std::uint64_t seed = 0;
  std::vector<AuditVerdict> verdicts;
};

struct AuditReport {
  std::string name;
  int checked = 0;
  std::vector<AuditDisagreement> disagreements;
  // Every checked case, kept when requested.
  std::vector<AuditDisagreement> cases;

  bool passed() const { return disagreements.empty(); }
};

struct AuditOptions {
  int seeds = 20;
  std::uint64_t base_seed = 1;
  bool keep_cases = false;
  RandomScenarioOptions scenario;
  ClassifyOptions classify;
};

// Over every connected graph with 2 <= n <= n_max: numerical clock rigidity,
// pebble-game Laman-plus-redundant-edge, bearing rigidity of the lifted
// framework (BFS and random line-graph trees) and the pebble game on the lifted
// graph must agree.
AuditReport audit_theorem_main(int n_max, const AuditOptions& opts = {});

// d = 2: joint rigidity, clock rigidity and distance rigidity with a redundant
// edge must agree. d = 3: distance rigid with n >= 4 must give joint rigid; the
// converse is not checked.
AuditReport audit_joint(int dim, const std::vector<Graph>& graphs, const AuditOptions& opts = {});

}  // namespace clockrig
