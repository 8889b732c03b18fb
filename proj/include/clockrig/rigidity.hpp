#pragma once

// Rigidity matrices (distance, bearing, clock, extended clock, joint
// position-clock), SVD rank/nullspace analysis and the trivial-variation
// subspaces each kind is expected to have.

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "clockrig/graph.hpp"
#include "clockrig/simulate.hpp"

namespace clockrig {

enum class RigidityKind { distance, bearing, clock, extended, joint };

std::string to_string(RigidityKind kind);
RigidityKind rigidity_kind_from_string(const std::string& name);

struct RigidityMatrix {
  RigidityKind kind = RigidityKind::clock;
  Eigen::MatrixXd entries;
  // Edge (or arc) index that produced each row.
  std::vector<int> row_source;
  int nodes = 0;
  int dim = 2;    // spatial dimension; 2 for the clock kinds
  int edges = 0;  // edge count of the underlying graph (extended kind column count)
};

// m x 2n; row k is [Tbar_u, 1] at node u and [-Tbar_v, -1] at node v.
RigidityMatrix clock_rigidity_matrix(const Graph& g, const TimestampTable& ts);
// m x dn; row k is (p_u - p_v)^T at u and (p_v - p_u)^T at v.
RigidityMatrix distance_rigidity_matrix(const Graph& g, const PositionConfig& p);
// dm x dn; per edge the block -P/|g| at u and +P/|g| at v, g = p_v - p_u, P = I - g g^T/|g|^2.
RigidityMatrix bearing_rigidity_matrix(const Graph& g, const PositionConfig& p);

struct ExtendedMatrices {
  RigidityMatrix primed;         // S': 2m x (2n+m), linear dummy-variable constraints
  RigidityMatrix double_primed;  // S'': 4m x (2n+m), Jacobian of the unit-vector form
  Eigen::VectorXd gamma;         // gamma_k = Tbar_u alpha_u + beta_u
};

ExtendedMatrices extended_matrices(const Graph& g, const TimestampTable& ts,
                                   const ClockConfig& clocks);

// Lifted framework of the clock constraints: base nodes at (alpha_i, beta_i), edge
// vertex k at (0, gamma_k).
PositionConfig lifted_configuration(const LiftedGraph& lifted, const ClockConfig& clocks,
                                    const Eigen::VectorXd& gamma);

// |arcs| x (d+2)n, columns [p; phi]. Row for arc (i,j):
// (p_i-p_j)^T at i, (p_j-p_i)^T at j, [c d T_send, c d] at clock i,
// [-c d T_recv, -c d] at clock j, with d the TOA distance under `clocks`.
// This is one half of the Jacobian of |p_i-p_j|^2 - c^2 (alpha_j T_recv + beta_j
// - alpha_i T_send - beta_i)^2.
RigidityMatrix joint_rigidity_matrix(const Digraph& dg, const PositionConfig& p,
                                     const TimestampTable& ts, const ClockConfig& clocks,
                                     double c);

// Same rows for an arbitrary stacked sigma = [p; phi] without the d > 0 check.
Eigen::MatrixXd joint_rows(const Digraph& dg, const Eigen::VectorXd& sigma, int dim,
                           const TimestampTable& ts, double c);

struct BlockDecomposition {
  Eigen::MatrixXd transformed;  // T R_cd
  Eigen::MatrixXd distance_block;  // R_d(p)
  Eigen::MatrixXd coupling;        // Y
  Eigen::MatrixXd lower_left;      // should vanish
  Eigen::MatrixXd clock_block;     // 2 c D R_c
  Eigen::VectorXd distances;       // d_k from timestamps
  double reconstruction_error = 0.0;  // relative to |R_cd|
};

// Row k of the top half is arc (v_k, u_k), row m+k is arc (u_k, v_k); the lower
// half then has (u,v) minus (v,u) subtracted in.
BlockDecomposition block_decompose(const Digraph& dg, const PositionConfig& p,
                                   const TimestampTable& ts, const ClockConfig& clocks, double c);

int expected_rank(RigidityKind kind, int n, int dim, int edges = 0);

struct RankPolicy {
  double safety = 100.0;
  std::optional<double> absolute_tol;
};

struct RigidityReport {
  RigidityKind kind = RigidityKind::clock;
  int rank = 0;
  int expected_rank = 0;
  bool rigid = false;
  double tolerance = 0.0;
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd nullspace_basis;
  int trivial_dimension = 0;
  // max_k |M b_k| / |M| over an orthonormal trivial basis; NaN if none given.
  double trivial_residual = std::numeric_limits<double>::quiet_NaN();
  // sine of the largest principal angle between nullspace and trivial basis.
  double trivial_angle = std::numeric_limits<double>::quiet_NaN();

  // Smallest accepted singular value over the largest rejected one; +inf when
  // nothing was rejected.
  double spectral_gap() const;
};

RigidityReport rank_and_nullspace(const RigidityMatrix& m, const RankPolicy& policy = {});
RigidityReport rank_and_nullspace(const RigidityMatrix& m, const Eigen::MatrixXd& trivial,
                                  const RankPolicy& policy = {});

// Orthonormal basis of the column span (Householder QR with column pivoting).
Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& a, double rel_tol = 1e-12);
// sin of the largest principal angle between the spans of two orthonormal bases;
// 1 when the dimensions differ.
double subspace_sine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

Eigen::MatrixXd clock_trivial_basis(const ClockConfig& clocks);
Eigen::MatrixXd distance_trivial_basis(const PositionConfig& p);
Eigen::MatrixXd bearing_trivial_basis(const PositionConfig& p);
Eigen::MatrixXd extended_trivial_basis(const ClockConfig& clocks, const Eigen::VectorXd& gamma);
Eigen::MatrixXd joint_trivial_basis(const PositionConfig& p, const ClockConfig& clocks);
// Generators J_d^i of the elementary rotations.
std::vector<Eigen::MatrixXd> rotation_generators(int dim);

struct TrivialBasisInput {
  const PositionConfig* positions = nullptr;
  const ClockConfig* clocks = nullptr;
  const Eigen::VectorXd* gamma = nullptr;
};
// Throws when the kind needs a configuration that was not supplied.
Eigen::MatrixXd trivial_basis(RigidityKind kind, const TrivialBasisInput& in);

struct ClassifyOptions {
  bool condition = true;  // analyse in Frame::conditioned units
  RankPolicy policy;
};

struct FrameworkClassification {
  RigidityReport distance;
  RigidityReport bearing;
  RigidityReport clock;
  RigidityReport joint;
  int redundant_edges = 0;  // edges whose removal keeps the distance rank
  bool distance_rigid_with_redundant = false;
  bool laman_spanning = false;
  bool laman_with_redundant = false;
  std::vector<std::string> anomalies;
  Frame frame;
};

FrameworkClassification classify_framework(const Scenario& sc, const TimestampTable& ts,
                                           const ClassifyOptions& opts = {});
FrameworkClassification classify_framework(const Scenario& sc, const ClassifyOptions& opts = {});

// Number of edges whose deletion leaves rank(R_d) unchanged.
int count_redundant_edges(const Graph& g, const PositionConfig& p, const RankPolicy& policy = {});

}  // namespace clockrig
