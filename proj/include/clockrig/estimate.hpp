#pragma once

// Gradient-descent clock (P1) and joint position-clock (P2) estimators, and the
// fits that express an estimate as a trivial variation of the ground truth.

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <vector>

#include "clockrig/graph.hpp"
#include "clockrig/simulate.hpp"

namespace clockrig {

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd edge_errors;
};

// P1 = 1/2 sum e_k^2, e_k = alpha_v Tbar_v + beta_v - alpha_u Tbar_u - beta_u over
// the edges {u,v} of g. phi is [alpha_1, beta_1, ...].
ObjectiveValue clock_objective(const Graph& g, const Eigen::VectorXd& phi, const TimestampTable& ts);
Eigen::VectorXd clock_gradient(const Graph& g, const Eigen::VectorXd& phi, const TimestampTable& ts);

// P2 = 1/4 sum e_ij^2 over arcs, e_ij = |p_i - p_j|^2 - c^2 (alpha_j T_recv + beta_j
// - alpha_i T_send - beta_i)^2. sigma is [p; phi].
ObjectiveValue joint_objective(const Digraph& dg, const Eigen::VectorXd& sigma, int dim,
                               const TimestampTable& ts, double c);
// Equals R_cd(sigma)^T e, since de/dsigma = 2 R_cd.
Eigen::VectorXd joint_gradient(const Digraph& dg, const Eigen::VectorXd& sigma, int dim,
                               const TimestampTable& ts, double c);

struct EstimateOptions {
  // Step = gain / L with L the largest curvature of the Gauss-Newton model at
  // the start point, so gain < 2 is stable near a minimiser.
  double gain = 1.0;
  // Extra factor on the clock block of a joint step.
  double clock_gain = 1.0;
  int max_iters = 100000;
  // Stop once |e| (2-norm, original units) falls to this.
  double tol = 1e-10;
  bool line_search = false;
  // Iterate in Frame::conditioned units; results are mapped back.
  bool condition = true;
  // Descend in per-node centred, column-equilibrated coordinates (a fixed
  // positive-definite metric). Off gives the plain gradient.
  bool precondition = true;
  // Keep every k-th iterate in the trace; 0 keeps only the first and last.
  int record_every = 0;
  int divergence_window = 100;
};

enum class EstimateStatus { converged, max_iters, stalled };

struct EstimateTrace {
  std::vector<double> objective_history;
  std::vector<double> max_edge_error_history;
  std::vector<int> recorded_iters;
  std::vector<Eigen::VectorXd> iterates;  // original units
  Eigen::VectorXd final_config;           // [p; phi] or phi
  Eigen::VectorXd final_edge_errors;
  double final_objective = 0.0;
  EstimateStatus status = EstimateStatus::max_iters;
  int iterations = 0;
  double step = 0.0;  // base step in the working frame
  Frame frame;

  bool converged() const { return status == EstimateStatus::converged; }
};

EstimateTrace estimate_clock(const Graph& g, const TimestampTable& ts, const ClockConfig& init,
                             const EstimateOptions& opts = {});
EstimateTrace estimate_joint(const Digraph& dg, const TimestampTable& ts, const PositionConfig& p0,
                             const ClockConfig& phi0, double c, const EstimateOptions& opts = {});

// Adds a Gaussian perturbation of norm rel * |phi|.
ClockConfig perturb_clocks(const ClockConfig& clocks, double rel, std::mt19937_64& rng);
// Perturbs positions and clocks separately, each by rel times its own norm.
std::pair<PositionConfig, ClockConfig> perturb_joint(const PositionConfig& p, const ClockConfig& clocks,
                                                     double rel, std::mt19937_64& rng);

struct TrivialFit {
  double k_s = 1.0;
  double k_beta = 0.0;
  // Joint fits only.
  Eigen::MatrixXd rotation;
  double theta = 0.0;  // d = 2
  Eigen::VectorXd k_t;
  double residual = 0.0;
  bool joint = false;
};

// est ~ k_s phi + 1 (x) [0, k_beta]. The misfit is measured in `frame` units,
// the factors are reported in original units.
TrivialFit fit_clock_trivial(const ClockConfig& est, const ClockConfig& truth,
                             const Frame& frame = Frame::identity());
// p_est ~ k_s R p + 1 (x) k_t, phi_est ~ k_s phi + 1 (x) [0, k_beta] with one shared
// k_s and a proper rotation R from the Kabsch fit of the centred positions.
TrivialFit fit_joint_trivial(const PositionConfig& p_est, const ClockConfig& clocks_est,
                             const PositionConfig& p_truth, const ClockConfig& clocks_truth,
                             const Frame& frame = Frame::identity());

// Applies a finite trivial variation to a ground truth.
std::pair<PositionConfig, ClockConfig> apply_joint_trivial(const PositionConfig& p,
                                                           const ClockConfig& clocks,
                                                           const TrivialFit& f);
ClockConfig apply_clock_trivial(const ClockConfig& clocks, double k_s, double k_beta);

}  // namespace clockrig
