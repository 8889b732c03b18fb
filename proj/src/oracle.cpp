#include "clockrig/oracle.hpp"

#include <algorithm>
#include <numeric>

#include "clockrig/error.hpp"

namespace clockrig {

namespace {

std::vector<std::pair<int, int>> vertex_pairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

bool mask_connected(int n, std::uint32_t mask, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int parts = n;
  for (std::size_t b = 0; b < pairs.size(); ++b) {
    if (!(mask >> b & 1u)) continue;
    const int a = find(pairs[b].first), c = find(pairs[b].second);
    if (a != c) {
      parent[a] = c;
      --parts;
    }
  }
  return parts == 1;
}

}  // namespace

std::vector<Graph> enumerate_graphs(int n) {
  if (n < 1 || n > 6) throw Error("enumerate graphs: n must be between 1 and 6");
  const auto pairs = vertex_pairs(n);
  const int np = static_cast<int>(pairs.size());
  std::vector<std::vector<int>> index(n, std::vector<int>(n, -1));
  for (int b = 0; b < np; ++b) {
    index[pairs[b].first][pairs[b].second] = b;
    index[pairs[b].second][pairs[b].first] = b;
  }
  // For each permutation, where each pair bit goes.
  std::vector<std::vector<int>> relabel;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::vector<int> map(np);
    for (int b = 0; b < np; ++b) map[b] = index[perm[pairs[b].first]][perm[pairs[b].second]];
    relabel.push_back(std::move(map));
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<Graph> out;
  for (std::uint32_t mask = 0; mask < (1u << np); ++mask) {
    if (!mask_connected(n, mask, pairs)) continue;
    bool minimal = true;
    for (const auto& map : relabel) {
      std::uint32_t image = 0;
      for (int b = 0; b < np; ++b) {
        if (mask >> b & 1u) image |= 1u << map[b];
      }
      if (image < mask) {
        minimal = false;
        break;
      }
    }
    if (!minimal) continue;
    std::vector<Edge> edges;
    for (int b = 0; b < np; ++b) {
      if (mask >> b & 1u) edges.push_back({pairs[b].first, pairs[b].second});
    }
    out.emplace_back(n, std::move(edges));
  }
  return out;
}

namespace {

// Every vertex subset of size k >= 2 spans at most 2k - 3 chosen edges.
bool is_laman_sparse(int n, const std::vector<Edge>& edges) {
  for (std::uint32_t subset = 0; subset < (1u << n); ++subset) {
    const int k = __builtin_popcount(subset);
    if (k < 2) continue;
    int spanned = 0;
    for (const Edge& e : edges) {
      if ((subset >> e.u & 1u) && (subset >> e.v & 1u)) ++spanned;
    }
    if (spanned > 2 * k - 3) return false;
  }
  return true;
}

}  // namespace

bool brute_force_laman_spanning(const Graph& g) {
  const int n = g.n(), m = g.m();
  if (n < 2) throw Error("brute-force Laman: need at least two vertices");
  if (n > 7) throw Error("brute-force Laman: n > 7 is too large");
  const int want = 2 * n - 3;
  if (m < want) return false;
  std::vector<bool> pick(m, false);
  std::fill(pick.begin(), pick.begin() + want, true);
  do {
    std::vector<Edge> chosen;
    for (int k = 0; k < m; ++k) {
      if (pick[k]) chosen.push_back(g.edge(k));
    }
    if (is_laman_sparse(n, chosen)) return true;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return false;
}

Eigen::MatrixXd finite_difference_jacobian(const VectorFn& f, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& h) {
  if (h.size() != x.size()) throw Error("finite differences: step vector has wrong length");
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    if (!(h(j) > 0.0)) throw Error("finite differences: step must be positive");
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h(j);
    xm(j) -= h(j);
    jac.col(j) = (f(xp) - f(xm)) / (xp(j) - xm(j));
  }
  return jac;
}

Eigen::MatrixXd finite_difference_jacobian(const VectorFn& f, const Eigen::VectorXd& x, double h) {
  return finite_difference_jacobian(f, x, Eigen::VectorXd::Constant(x.size(), h));
}

double column_relative_mismatch(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("jacobian compare: shape mismatch");
  double worst = 0.0;
  for (int j = 0; j < b.cols(); ++j) {
    const double scale = b.col(j).cwiseAbs().maxCoeff();
    const double diff = (a.col(j) - b.col(j)).cwiseAbs().maxCoeff();
    worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
  }
  return worst;
}

VectorFn clock_edge_residual(const Graph& g, const TimestampTable& ts) {
  std::vector<EdgeAverages> avg;
  for (const Edge& e : g.edges()) avg.push_back(ts.averaged(e.u, e.v));
  return [g, avg](const Eigen::VectorXd& phi) {
    Eigen::VectorXd r(g.m());
    for (int k = 0; k < g.m(); ++k) {
      const Edge& e = g.edge(k);
      r(k) = avg[k].at_u * phi(2 * e.u) + phi(2 * e.u + 1) - avg[k].at_v * phi(2 * e.v) -
             phi(2 * e.v + 1);
    }
    return r;
  };
}

VectorFn joint_squared_residual(const Digraph& dg, int dim, const TimestampTable& ts, double c) {
  std::vector<ArcTimestamps> recs;
  for (const Edge& a : dg.arcs()) recs.push_back(ts.at(a.u, a.v));
  const int n = dg.n();
  return [recs, dim, n, c](const Eigen::VectorXd& s) {
    Eigen::VectorXd r(recs.size());
    const int clk = dim * n;
    for (std::size_t k = 0; k < recs.size(); ++k) {
      const int i = recs[k].from, j = recs[k].to;
      const double delta = s(clk + 2 * j) * recs[k].t_recv + s(clk + 2 * j + 1) -
                           s(clk + 2 * i) * recs[k].t_send - s(clk + 2 * i + 1);
      r(k) = (s.segment(dim * i, dim) - s.segment(dim * j, dim)).squaredNorm() - c * c * delta * delta;
    }
    return r;
  };
}

namespace {

void note(AuditReport& rep, const Graph& g, std::uint64_t seed, std::vector<AuditVerdict> verdicts,
          bool agree, bool keep) {
  ++rep.checked;
  if (!agree) rep.disagreements.push_back({g, seed, verdicts});
  if (keep) rep.cases.push_back({g, seed, std::move(verdicts)});
}

bool all_equal(const std::vector<AuditVerdict>& v) {
  return std::all_of(v.begin(), v.end(), [&](const AuditVerdict& x) { return x.value == v[0].value; });
}

bool lifted_bearing_rigid(const LiftedGraph& lifted, const ClockConfig& clocks,
                          const Eigen::VectorXd& gamma, const RankPolicy& policy) {
  const PositionConfig pts = lifted_configuration(lifted, clocks, gamma);
  return rank_and_nullspace(bearing_rigidity_matrix(lifted.graph, pts), policy).rigid;
}

}  // namespace

AuditReport audit_theorem_main(int n_max, const AuditOptions& opts) {
  if (n_max < 2 || n_max > 6) throw Error("audit: n_max must be between 2 and 6");
  AuditReport rep;
  rep.name = "clock-rigidity characterisation";
  std::uint64_t task = 0;
  for (int n = 2; n <= n_max; ++n) {
    for (const Graph& g : enumerate_graphs(n)) {
      const bool pebble = laman_with_redundant_edge(g);
      const LiftedGraph bfs_lift = lift(g);
      const bool lifted_pebble = has_laman_spanning_subgraph(bfs_lift.graph);
      for (int s = 0; s < opts.seeds; ++s) {
        const std::uint64_t seed = mix_seed(opts.base_seed, task++);
        const Scenario sc = random_scenario(g, 2, seed, opts.scenario);
        const TimestampTable ts = simulate_timestamps(sc);
        const Frame frame = opts.classify.condition ? Frame::conditioned(ts, sc.c) : Frame::identity();
        const TimestampTable fts = frame.apply(ts);
        const ClockConfig clocks = frame.apply(sc.clocks);

        const bool clock = rank_and_nullspace(clock_rigidity_matrix(g, fts), opts.classify.policy).rigid;
        const ExtendedMatrices ext = extended_matrices(g, fts, clocks);
        const bool lifted_bfs = lifted_bearing_rigid(bfs_lift, clocks, ext.gamma, opts.classify.policy);
        std::mt19937_64 rng(seed ^ 0x5bd1e995ull);
        const LiftedGraph rnd_lift = lift(g, random_spanning_tree(line_graph(g), rng));
        const bool lifted_rnd = lifted_bearing_rigid(rnd_lift, clocks, ext.gamma, opts.classify.policy);

        std::vector<AuditVerdict> v{{"clock_numeric", clock},
                                    {"laman_with_redundant", pebble},
                                    {"lifted_bearing", lifted_bfs},
                                    {"lifted_bearing_random_tree", lifted_rnd},
                                    {"lifted_laman", lifted_pebble}};
        const bool agree = all_equal(v);
        note(rep, g, seed, std::move(v), agree, opts.keep_cases);
      }
    }
  }
  return rep;
}

AuditReport audit_joint(int dim, const std::vector<Graph>& graphs, const AuditOptions& opts) {
  if (dim != 2 && dim != 3) throw Error("joint audit: dimension must be 2 or 3");
  AuditReport rep;
  rep.name = dim == 2 ? "joint rigidity equivalence (2D)" : "joint rigidity implication (3D)";
  std::uint64_t task = 0;
  for (const Graph& g : graphs) {
    for (int s = 0; s < opts.seeds; ++s) {
      const std::uint64_t seed = mix_seed(opts.base_seed, task++);
      const Scenario sc = random_scenario(g, dim, seed, opts.scenario);
      const FrameworkClassification cls = classify_framework(sc, opts.classify);
      std::vector<AuditVerdict> v{{"joint", cls.joint.rigid},
                                  {"clock", cls.clock.rigid},
                                  {"distance_rigid", cls.distance.rigid},
                                  {"distance_rigid_with_redundant", cls.distance_rigid_with_redundant}};
      bool agree;
      if (dim == 2) {
        agree = v[0].value == v[1].value && v[1].value == v[3].value;
      } else {
        agree = !(cls.distance.rigid && g.n() >= 4) || cls.joint.rigid;
      }
      note(rep, g, seed, std::move(v), agree, opts.keep_cases);
    }
  }
  return rep;
}

}  // namespace clockrig
