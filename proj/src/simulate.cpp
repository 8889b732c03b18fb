#include "clockrig/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "clockrig/error.hpp"

namespace clockrig {

double global_time(const ClockParams& clock, double local_t) {
  return clock.alpha * local_t + clock.beta;
}

double local_time(const ClockParams& clock, double global_t) {
  return (global_t - clock.beta) / clock.alpha;
}

ClockConfig::ClockConfig(std::vector<ClockParams> clocks) : clocks_(std::move(clocks)) {
  for (std::size_t i = 0; i < clocks_.size(); ++i) {
    if (!(clocks_[i].alpha > 0.0) || !std::isfinite(clocks_[i].alpha) ||
        !std::isfinite(clocks_[i].beta)) {
      throw Error("clock config: node " + std::to_string(i + 1) +
                  " needs finite alpha > 0 and finite beta");
    }
  }
}

ClockConfig ClockConfig::from_stacked(const Eigen::VectorXd& phi) {
  if (phi.size() % 2 != 0) throw Error("clock config: stacked vector has odd length");
  std::vector<ClockParams> clocks(phi.size() / 2);
  for (std::size_t i = 0; i < clocks.size(); ++i) clocks[i] = {phi(2 * i), phi(2 * i + 1)};
  return ClockConfig(std::move(clocks));
}

Eigen::VectorXd ClockConfig::stacked() const {
  Eigen::VectorXd phi(2 * size());
  for (int i = 0; i < size(); ++i) {
    phi(2 * i) = clocks_[i].alpha;
    phi(2 * i + 1) = clocks_[i].beta;
  }
  return phi;
}

PositionConfig::PositionConfig(Eigen::MatrixXd coords) : coords_(std::move(coords)) {
  if (!coords_.allFinite()) throw Error("position config: non-finite coordinate");
}

PositionConfig PositionConfig::from_stacked(const Eigen::VectorXd& p, int dim) {
  if (dim <= 0 || p.size() % dim != 0) throw Error("position config: bad stacked length");
  return PositionConfig(Eigen::Map<const Eigen::MatrixXd>(p.data(), dim, p.size() / dim));
}

Eigen::VectorXd PositionConfig::stacked() const {
  return Eigen::Map<const Eigen::VectorXd>(coords_.data(), coords_.size());
}

Schedule Schedule::staggered(int n, double delta) {
  Schedule s;
  s.delta = delta;
  s.send_local.resize(n);
  for (int i = 0; i < n; ++i) s.send_local[i] = (i + 1) * delta;
  return s;
}

void Scenario::validate() const {
  const int n = graph.n();
  if (network.n() != n) throw Error("scenario: network and graph vertex counts differ");
  if (positions.size() != n) throw Error("scenario: position count does not match graph");
  if (clocks.size() != n) throw Error("scenario: clock count does not match graph");
  if (static_cast<int>(schedule.send_local.size()) != n) {
    throw Error("scenario: schedule has wrong number of send times");
  }
  if (positions.dim() != 2 && positions.dim() != 3) throw Error("scenario: dimension must be 2 or 3");
  if (!(c > 0.0) || !std::isfinite(c)) throw Error("scenario: c must be positive");
  for (const Edge& e : graph.edges()) {
    if ((positions.point(e.u) - positions.point(e.v)).norm() <= 0.0) {
      throw Error("scenario: nodes " + std::to_string(e.u + 1) + " and " +
                  std::to_string(e.v + 1) + " are adjacent but coincident");
    }
  }
}

Scenario make_scenario(const Graph& g, PositionConfig p, ClockConfig clocks, Schedule schedule,
                       double c) {
  Scenario sc{g, Digraph::bidirectional(g), std::move(p), std::move(clocks), std::move(schedule), c,
              std::nullopt};
  sc.validate();
  return sc;
}

Scenario make_scenario(const Digraph& network, PositionConfig p, ClockConfig clocks,
                       Schedule schedule, double c) {
  Scenario sc{network.disoriented(), network, std::move(p), std::move(clocks), std::move(schedule),
              c, std::nullopt};
  sc.validate();
  return sc;
}

TimestampTable::TimestampTable(std::vector<ArcTimestamps> records) : records_(std::move(records)) {
  for (int k = 0; k < size(); ++k) {
    const auto& r = records_[k];
    if (!index_.emplace(std::make_pair(r.from, r.to), k).second) {
      throw Error("timestamp table: duplicate arc (" + std::to_string(r.from + 1) + "," +
                  std::to_string(r.to + 1) + ")");
    }
  }
}

const ArcTimestamps& TimestampTable::at(int from, int to) const {
  auto it = index_.find({from, to});
  if (it == index_.end()) {
    throw Error("timestamp table: missing timestamp for arc (" + std::to_string(from + 1) + "," +
                std::to_string(to + 1) + ")");
  }
  return records_[it->second];
}

EdgeAverages TimestampTable::averaged(int u, int v) const {
  const auto& uv = at(u, v);
  const auto& vu = at(v, u);
  return {(uv.t_send + vu.t_recv) / 2.0, (uv.t_recv + vu.t_send) / 2.0};
}

TimestampTable simulate_timestamps(const Scenario& sc, const NoiseOptions& noise) {
  sc.validate();
  std::vector<ArcTimestamps> records;
  records.reserve(sc.network.arc_count());
  for (const Edge& a : sc.network.arcs()) {
    const double t_send = sc.schedule.send_local[a.u];
    // Extended precision so the stored receive time carries a single rounding.
    const ClockParams& tx = sc.clocks[a.u];
    const ClockParams& rx = sc.clocks[a.v];
    const long double emitted = static_cast<long double>(tx.alpha) * t_send + tx.beta;
    const long double flight =
        static_cast<long double>((sc.positions.point(a.u) - sc.positions.point(a.v)).norm()) / sc.c;
    const double t_recv = static_cast<double>((emitted + flight - rx.beta) / rx.alpha);
    records.push_back({a.u, a.v, t_send, t_recv});
  }

  std::vector<std::vector<int>> inbox(sc.n());
  for (int k = 0; k < static_cast<int>(records.size()); ++k) inbox[records[k].to].push_back(k);
  for (int node = 0; node < sc.n(); ++node) {
    auto& arrivals = inbox[node];
    std::sort(arrivals.begin(), arrivals.end(),
              [&](int a, int b) { return records[a].t_recv < records[b].t_recv; });
    for (std::size_t i = 1; i < arrivals.size(); ++i) {
      const auto& r0 = records[arrivals[i - 1]];
      const auto& r1 = records[arrivals[i]];
      if (r0.t_recv == r1.t_recv) {
        std::ostringstream msg;
        msg << "single-antenna violation at node " << node + 1 << ": messages from "
            << r0.from + 1 << " and " << r1.from + 1 << " arrive at local time " << r0.t_recv;
        throw Error(msg.str());
      }
    }
  }

  if (noise.recv_std > 0.0) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> jitter(0.0, noise.recv_std);
    for (auto& r : records) r.t_recv += jitter(rng);
  }
  return TimestampTable(std::move(records));
}

double toa_distance(const ArcTimestamps& rec, const ClockConfig& clocks, double c) {
  const ClockParams& tx = clocks[rec.from];
  const ClockParams& rx = clocks[rec.to];
  const long double dt = static_cast<long double>(rx.alpha) * rec.t_recv -
                         static_cast<long double>(tx.alpha) * rec.t_send +
                         (static_cast<long double>(rx.beta) - tx.beta);
  return static_cast<double>(c * dt);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finaliser over the pair
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

Scenario sample_scenario(const Digraph& network, int dim, std::uint64_t seed,
                         const RandomScenarioOptions& opts) {
  if (dim != 2 && dim != 3) throw Error("random scenario: dimension must be 2 or 3");
  const Graph g = network.disoriented();
  if (!g.connected()) throw Error("random scenario: graph must be connected");
  const int n = network.n();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> skew(opts.alpha_min, opts.alpha_max);
  std::uniform_real_distribution<double> offset(-opts.beta_bound, opts.beta_bound);
  std::uniform_real_distribution<double> coord(0.0, opts.box);

  std::vector<ClockParams> clocks(n);
  for (auto& ck : clocks) {
    ck.alpha = skew(rng);
    ck.beta = offset(rng);
  }

  Eigen::MatrixXd pts(dim, n);
  int attempts = 0;
  for (int i = 0; i < n; ++i) {
    while (true) {
      if (++attempts > opts.max_attempts) {
        throw Error("random scenario: position rejection sampling exceeded " +
                    std::to_string(opts.max_attempts) + " attempts");
      }
      for (int r = 0; r < dim; ++r) pts(r, i) = coord(rng);
      bool ok = true;
      for (int j = 0; j < i && ok; ++j) ok = (pts.col(i) - pts.col(j)).norm() >= opts.min_separation;
      if (ok) break;
    }
  }

  Scenario sc = make_scenario(network, PositionConfig(pts), ClockConfig(clocks),
                              Schedule::staggered(n, opts.delta), opts.c);
  sc.seed = seed;
  return sc;
}

}  // namespace

Scenario random_scenario(const Graph& g, int dim, std::uint64_t seed,
                         const RandomScenarioOptions& opts) {
  Scenario sc = sample_scenario(Digraph::bidirectional(g), dim, seed, opts);
  sc.graph = g;
  return sc;
}

Scenario random_scenario(const Digraph& network, int dim, std::uint64_t seed,
                         const RandomScenarioOptions& opts) {
  return sample_scenario(network, dim, seed, opts);
}

Frame Frame::conditioned(const TimestampTable& ts, double c) {
  Frame f;
  if (ts.size() == 0) return f;
  double sum = 0.0;
  for (const auto& r : ts.records()) sum += r.t_send + r.t_recv;
  f.time_shift = sum / (2.0 * ts.size());
  double spread = 0.0;
  for (const auto& r : ts.records()) {
    spread = std::max({spread, std::abs(r.t_send - f.time_shift), std::abs(r.t_recv - f.time_shift)});
  }
  f.time_unit = spread > 0.0 ? spread : 1.0;
  f.length_unit = c * f.time_unit;
  return f;
}

TimestampTable Frame::apply(const TimestampTable& ts) const {
  std::vector<ArcTimestamps> out = ts.records();
  for (auto& r : out) {
    r.t_send = (r.t_send - time_shift) / time_unit;
    r.t_recv = (r.t_recv - time_shift) / time_unit;
  }
  return TimestampTable(std::move(out));
}

ClockConfig Frame::apply(const ClockConfig& clocks) const {
  std::vector<ClockParams> out = clocks.clocks();
  for (auto& ck : out) ck.beta = (ck.beta + ck.alpha * time_shift) / time_unit;
  return ClockConfig(std::move(out));
}

ClockConfig Frame::restore(const ClockConfig& clocks) const {
  std::vector<ClockParams> out = clocks.clocks();
  for (auto& ck : out) ck.beta = ck.beta * time_unit - ck.alpha * time_shift;
  return ClockConfig(std::move(out));
}

PositionConfig Frame::apply(const PositionConfig& p) const {
  return PositionConfig(p.coords() / length_unit);
}

PositionConfig Frame::restore(const PositionConfig& p) const {
  return PositionConfig(p.coords() * length_unit);
}

}  // namespace clockrig
