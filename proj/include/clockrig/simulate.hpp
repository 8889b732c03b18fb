#pragma once

// Ground truth for TOA networks: first-order clocks, positions, broadcast
// schedules, and the timestamp tables they produce.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "clockrig/graph.hpp"

namespace clockrig {

inline constexpr double kSpeedOfLight = 299792458.0;

// Maps local time t_i to global time t = alpha * t_i + beta.
struct ClockParams {
  double alpha = 1.0;
  double beta = 0.0;
};

double global_time(const ClockParams& clock, double local_t);
double local_time(const ClockParams& clock, double global_t);

class ClockConfig {
 public:
  ClockConfig() = default;
  explicit ClockConfig(std::vector<ClockParams> clocks);

  // From [alpha_1, beta_1, ..., alpha_n, beta_n].
  static ClockConfig from_stacked(const Eigen::VectorXd& phi);

  int size() const { return static_cast<int>(clocks_.size()); }
  const ClockParams& operator[](int i) const { return clocks_.at(i); }
  const std::vector<ClockParams>& clocks() const { return clocks_; }
  Eigen::VectorXd stacked() const;

 private:
  std::vector<ClockParams> clocks_;
};

// Node positions in R^d, one column per node.
class PositionConfig {
 public:
  PositionConfig() = default;
  explicit PositionConfig(Eigen::MatrixXd coords);

  static PositionConfig from_stacked(const Eigen::VectorXd& p, int dim);

  int dim() const { return static_cast<int>(coords_.rows()); }
  int size() const { return static_cast<int>(coords_.cols()); }
  Eigen::VectorXd point(int i) const { return coords_.col(i); }
  const Eigen::MatrixXd& coords() const { return coords_; }
  // [p_1; ...; p_n]
  Eigen::VectorXd stacked() const;

 private:
  Eigen::MatrixXd coords_;
};

// One broadcast per node per round, at the given local send times.
struct Schedule {
  std::vector<double> send_local;
  double delta = 1e-3;

  // Node i (0-based) sends at local time (i + 1) * delta.
  static Schedule staggered(int n, double delta = 1e-3);
};

struct Scenario {
  Graph graph;        // undirected view; edge order drives matrix rows
  Digraph network;    // who hears whom
  PositionConfig positions;
  ClockConfig clocks;
  Schedule schedule;
  double c = kSpeedOfLight;
  std::optional<std::uint64_t> seed;

  int n() const { return graph.n(); }
  int dim() const { return positions.dim(); }

  // Throws on size mismatches, alpha <= 0, coincident neighbours or c <= 0.
  void validate() const;
};

// Bidirectional scenario over an undirected graph.
Scenario make_scenario(const Graph& g, PositionConfig p, ClockConfig clocks, Schedule schedule,
                       double c = kSpeedOfLight);
// Scenario over an arbitrary communication digraph.
Scenario make_scenario(const Digraph& network, PositionConfig p, ClockConfig clocks,
                       Schedule schedule, double c = kSpeedOfLight);

struct ArcTimestamps {
  int from = 0;
  int to = 0;
  double t_send = 0.0;  // sender's local clock
  double t_recv = 0.0;  // receiver's local clock
};

// Averaged timestamps of an undirected edge {u, v}: at_u is the mean of u's send
// to v and u's receive from v; at_v symmetrically.
struct EdgeAverages {
  double at_u = 0.0;
  double at_v = 0.0;
};

class TimestampTable {
 public:
  TimestampTable() = default;
  explicit TimestampTable(std::vector<ArcTimestamps> records);

  const std::vector<ArcTimestamps>& records() const { return records_; }
  int size() const { return static_cast<int>(records_.size()); }
  bool contains(int from, int to) const { return index_.count({from, to}) > 0; }
  // Throws if (from, to) was never measured.
  const ArcTimestamps& at(int from, int to) const;
  EdgeAverages averaged(int u, int v) const;

 private:
  std::vector<ArcTimestamps> records_;
  std::map<std::pair<int, int>, int> index_;
};

struct NoiseOptions {
  double recv_std = 0.0;  // additive Gaussian on receive timestamps, seconds
  std::uint64_t seed = 0;
};

// Throws "single-antenna violation" when two messages reach one node at the
// same local instant.
TimestampTable simulate_timestamps(const Scenario& sc, const NoiseOptions& noise = {});

// Distance implied by one arc's timestamps under the given clocks.
double toa_distance(const ArcTimestamps& rec, const ClockConfig& clocks, double c);

struct RandomScenarioOptions {
  double c = kSpeedOfLight;
  double delta = 1e-3;
  double alpha_min = 0.5;
  double alpha_max = 2.0;
  double beta_bound = 1e-3;
  double box = 100.0;
  double min_separation = 1.0;
  int max_attempts = 10000;
};

Scenario random_scenario(const Graph& g, int dim, std::uint64_t seed,
                         const RandomScenarioOptions& opts = {});
Scenario random_scenario(const Digraph& network, int dim, std::uint64_t seed,
                         const RandomScenarioOptions& opts = {});

// Independent 64-bit stream seed for task `index` of a sweep.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

// Unit system used for numerical work. Timestamps are shifted by their mean and
// divided by their spread; lengths are measured in units of c * time_unit so the
// speed of light becomes 1. Clock offsets follow the shifted timestamps:
// beta' = (beta + alpha * time_shift) / time_unit.
struct Frame {
  double time_shift = 0.0;
  double time_unit = 1.0;
  double length_unit = 1.0;

  static Frame identity() { return {}; }
  static Frame conditioned(const TimestampTable& ts, double c);

  double speed(double c) const { return c * time_unit / length_unit; }
  TimestampTable apply(const TimestampTable& ts) const;
  ClockConfig apply(const ClockConfig& clocks) const;
  ClockConfig restore(const ClockConfig& clocks) const;
  PositionConfig apply(const PositionConfig& p) const;
  PositionConfig restore(const PositionConfig& p) const;
};

}  // namespace clockrig
