#include "clockrig/rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "clockrig/error.hpp"

namespace clockrig {

std::string to_string(RigidityKind kind) {
  switch (kind) {
    case RigidityKind::distance: return "distance";
    case RigidityKind::bearing: return "bearing";
    case RigidityKind::clock: return "clock";
    case RigidityKind::extended: return "extended";
    case RigidityKind::joint: return "joint";
  }
  return "unknown";
}

RigidityKind rigidity_kind_from_string(const std::string& name) {
  for (auto k : {RigidityKind::distance, RigidityKind::bearing, RigidityKind::clock,
                 RigidityKind::extended, RigidityKind::joint}) {
    if (to_string(k) == name) return k;
  }
  throw Error("unknown rigidity kind '" + name + "'");
}

RigidityMatrix clock_rigidity_matrix(const Graph& g, const TimestampTable& ts) {
  RigidityMatrix out{RigidityKind::clock, Eigen::MatrixXd::Zero(g.m(), 2 * g.n()), {}, g.n(), 2,
                     g.m()};
  for (int k = 0; k < g.m(); ++k) {
    const Edge& e = g.edge(k);
    const EdgeAverages avg = ts.averaged(e.u, e.v);
    out.entries(k, 2 * e.u) = avg.at_u;
    out.entries(k, 2 * e.u + 1) = 1.0;
    out.entries(k, 2 * e.v) = -avg.at_v;
    out.entries(k, 2 * e.v + 1) = -1.0;
    out.row_source.push_back(k);
  }
  return out;
}

namespace {

void check_sizes(const Graph& g, const PositionConfig& p) {
  if (p.size() != g.n()) throw Error("rigidity: position count does not match graph");
}

Eigen::VectorXd edge_vector(const PositionConfig& p, const Edge& e) {
  Eigen::VectorXd diff = p.point(e.v) - p.point(e.u);
  if (diff.norm() <= 0.0) {
    throw Error("rigidity: adjacent nodes " + std::to_string(e.u + 1) + " and " +
                std::to_string(e.v + 1) + " coincide");
  }
  return diff;
}

// d/dx of x/|x|.
Eigen::MatrixXd unit_vector_jacobian(const Eigen::VectorXd& x) {
  const double len = x.norm();
  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(x.size(), x.size()) - x * x.transpose() / (len * len);
  return proj / len;
}

}  // namespace

RigidityMatrix distance_rigidity_matrix(const Graph& g, const PositionConfig& p) {
  check_sizes(g, p);
  const int d = p.dim();
  RigidityMatrix out{RigidityKind::distance, Eigen::MatrixXd::Zero(g.m(), d * g.n()), {}, g.n(), d,
                     g.m()};
  for (int k = 0; k < g.m(); ++k) {
    const Edge& e = g.edge(k);
    const Eigen::VectorXd diff = edge_vector(p, e);  // p_v - p_u
    out.entries.block(k, d * e.u, 1, d) = -diff.transpose();
    out.entries.block(k, d * e.v, 1, d) = diff.transpose();
    out.row_source.push_back(k);
  }
  return out;
}

RigidityMatrix bearing_rigidity_matrix(const Graph& g, const PositionConfig& p) {
  check_sizes(g, p);
  const int d = p.dim();
  RigidityMatrix out{RigidityKind::bearing, Eigen::MatrixXd::Zero(d * g.m(), d * g.n()), {}, g.n(),
                     d, g.m()};
  for (int k = 0; k < g.m(); ++k) {
    const Edge& e = g.edge(k);
    const Eigen::MatrixXd jac = unit_vector_jacobian(edge_vector(p, e));
    out.entries.block(d * k, d * e.u, d, d) = -jac;
    out.entries.block(d * k, d * e.v, d, d) = jac;
    for (int r = 0; r < d; ++r) out.row_source.push_back(k);
  }
  return out;
}

ExtendedMatrices extended_matrices(const Graph& g, const TimestampTable& ts,
                                   const ClockConfig& clocks) {
  if (clocks.size() != g.n()) throw Error("extended matrices: clock count does not match graph");
  const int n = g.n(), m = g.m();
  ExtendedMatrices out;
  out.gamma.resize(m);
  out.primed = {RigidityKind::extended, Eigen::MatrixXd::Zero(2 * m, 2 * n + m), {}, n, 2, m};
  out.double_primed = {RigidityKind::extended, Eigen::MatrixXd::Zero(4 * m, 2 * n + m), {}, n, 2, m};
  for (int k = 0; k < m; ++k) {
    const Edge& e = g.edge(k);
    const EdgeAverages avg = ts.averaged(e.u, e.v);
    out.gamma(k) = avg.at_u * clocks[e.u].alpha + clocks[e.u].beta;
    const int gcol = 2 * n + k;
    const int ends[2] = {e.u, e.v};
    const double tbar[2] = {avg.at_u, avg.at_v};
    for (int s = 0; s < 2; ++s) {
      const int node = ends[s];
      auto& sp = out.primed.entries;
      sp(2 * k + s, 2 * node) = tbar[s];
      sp(2 * k + s, 2 * node + 1) = 1.0;
      sp(2 * k + s, gcol) = -1.0;
      out.primed.row_source.push_back(k);

      Eigen::Vector2d x(clocks[node].alpha, clocks[node].beta - out.gamma(k));
      const Eigen::MatrixXd jac = unit_vector_jacobian(x);
      auto& spp = out.double_primed.entries;
      spp.block(4 * k + 2 * s, 2 * node, 2, 2) = jac;
      spp.block(4 * k + 2 * s, gcol, 2, 1) = -jac.col(1);
      out.double_primed.row_source.push_back(k);
      out.double_primed.row_source.push_back(k);
    }
  }
  return out;
}

PositionConfig lifted_configuration(const LiftedGraph& lifted, const ClockConfig& clocks,
                                    const Eigen::VectorXd& gamma) {
  const int n = lifted.base.n(), m = lifted.base.m();
  if (clocks.size() != n || gamma.size() != m) throw Error("lifted configuration: size mismatch");
  Eigen::MatrixXd pts(2, n + m);
  for (int i = 0; i < n; ++i) pts.col(i) << clocks[i].alpha, clocks[i].beta;
  for (int k = 0; k < m; ++k) pts.col(n + k) << 0.0, gamma(k);
  return PositionConfig(pts);
}

Eigen::MatrixXd joint_rows(const Digraph& dg, const Eigen::VectorXd& sigma, int dim,
                           const TimestampTable& ts, double c) {
  const int n = dg.n();
  if (sigma.size() != (dim + 2) * n) throw Error("joint rows: configuration has wrong length");
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(dg.arc_count(), (dim + 2) * n);
  const int clk = dim * n;
  for (int k = 0; k < dg.arc_count(); ++k) {
    const Edge& a = dg.arc(k);
    const ArcTimestamps& rec = ts.at(a.u, a.v);
    const double ai = sigma(clk + 2 * a.u), bi = sigma(clk + 2 * a.u + 1);
    const double aj = sigma(clk + 2 * a.v), bj = sigma(clk + 2 * a.v + 1);
    const double d = c * (aj * rec.t_recv + bj - ai * rec.t_send - bi);
    const Eigen::VectorXd diff = sigma.segment(dim * a.u, dim) - sigma.segment(dim * a.v, dim);
    rows.block(k, dim * a.u, 1, dim) = diff.transpose();
    rows.block(k, dim * a.v, 1, dim) = -diff.transpose();
    rows(k, clk + 2 * a.u) = c * d * rec.t_send;
    rows(k, clk + 2 * a.u + 1) = c * d;
    rows(k, clk + 2 * a.v) = -c * d * rec.t_recv;
    rows(k, clk + 2 * a.v + 1) = -c * d;
  }
  return rows;
}

RigidityMatrix joint_rigidity_matrix(const Digraph& dg, const PositionConfig& p,
                                     const TimestampTable& ts, const ClockConfig& clocks,
                                     double c) {
  if (p.size() != dg.n() || clocks.size() != dg.n()) {
    throw Error("joint rigidity matrix: configuration size does not match digraph");
  }
  for (const Edge& a : dg.arcs()) {
    const double d = toa_distance(ts.at(a.u, a.v), clocks, c);
    if (!(d > 0.0)) {
      std::ostringstream msg;
      msg << "joint rigidity matrix: nonpositive TOA distance " << d << " on arc (" << a.u + 1
          << "," << a.v + 1 << ")";
      throw Error(msg.str());
    }
  }
  Eigen::VectorXd sigma(p.stacked().size() + 2 * clocks.size());
  sigma << p.stacked(), clocks.stacked();
  RigidityMatrix out{RigidityKind::joint, joint_rows(dg, sigma, p.dim(), ts, c), {}, dg.n(), p.dim(),
                     dg.disoriented().m()};
  for (int k = 0; k < dg.arc_count(); ++k) out.row_source.push_back(k);
  return out;
}

BlockDecomposition block_decompose(const Digraph& dg, const PositionConfig& p,
                                   const TimestampTable& ts, const ClockConfig& clocks, double c) {
  if (!dg.is_bidirectional()) {
    throw Error("block decomposition: communication digraph is not bidirectional");
  }
  const Graph g = dg.disoriented();
  const int m = g.m(), n = g.n(), d = p.dim();
  const RigidityMatrix joint = joint_rigidity_matrix(dg, p, ts, clocks, c);
  const Eigen::MatrixXd& r = joint.entries;

  BlockDecomposition out;
  out.transformed.resize(2 * m, r.cols());
  out.distances.resize(m);
  for (int k = 0; k < m; ++k) {
    const Edge& e = g.edge(k);
    out.transformed.row(k) = r.row(dg.arc_index(e.v, e.u));
    out.transformed.row(m + k) = r.row(dg.arc_index(e.u, e.v)) - r.row(dg.arc_index(e.v, e.u));
    out.distances(k) = toa_distance(ts.at(e.u, e.v), clocks, c);
  }
  out.distance_block = distance_rigidity_matrix(g, p).entries;
  out.coupling = out.transformed.topRightCorner(m, 2 * n);
  out.lower_left = out.transformed.bottomLeftCorner(m, d * n);
  out.clock_block = 2.0 * c * out.distances.asDiagonal() * clock_rigidity_matrix(g, ts).entries;

  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2 * m, r.cols());
  expected.topLeftCorner(m, d * n) = out.distance_block;
  expected.topRightCorner(m, 2 * n) = out.coupling;
  expected.bottomRightCorner(m, 2 * n) = out.clock_block;
  const double scale = r.norm();
  out.reconstruction_error = scale > 0.0 ? (out.transformed - expected).norm() / scale : 0.0;
  return out;
}

namespace {

// Dimension of the Euclidean motions of n points in general position in R^d.
int euclidean_trivial_dim(int n, int d) {
  return n >= d ? d * (d + 1) / 2 : d * n - n * (n - 1) / 2;
}

}  // namespace

int expected_rank(RigidityKind kind, int n, int dim, int edges) {
  switch (kind) {
    case RigidityKind::distance: return dim * n - euclidean_trivial_dim(n, dim);
    case RigidityKind::bearing: return n >= 2 ? dim * n - dim - 1 : 0;
    case RigidityKind::clock: return n >= 1 ? 2 * n - 2 : 0;
    case RigidityKind::extended: return 2 * n + edges - 2;
    case RigidityKind::joint: return (dim + 2) * n - euclidean_trivial_dim(n, dim) - 2;
  }
  return 0;
}

double RigidityReport::spectral_gap() const {
  if (rank >= singular_values.size()) return std::numeric_limits<double>::infinity();
  if (rank == 0) return 0.0;
  const double rejected = singular_values(rank);
  if (rejected <= 0.0) return std::numeric_limits<double>::infinity();
  return singular_values(rank - 1) / rejected;
}

RigidityReport rank_and_nullspace(const RigidityMatrix& m, const RankPolicy& policy) {
  const Eigen::MatrixXd& a = m.entries;
  if (!a.allFinite()) throw Error("rank analysis: matrix has NaN or Inf entries");
  RigidityReport rep;
  rep.kind = m.kind;
  rep.expected_rank = expected_rank(m.kind, m.nodes, m.dim, m.edges);
  const int cols = static_cast<int>(a.cols());
  if (a.rows() == 0 || cols == 0) {
    rep.singular_values.resize(0);
    rep.nullspace_basis = Eigen::MatrixXd::Identity(cols, cols);
    rep.rigid = rep.rank == rep.expected_rank;
    return rep;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  rep.singular_values = svd.singularValues();
  const double smax = rep.singular_values(0);
  rep.tolerance = policy.absolute_tol
                      ? *policy.absolute_tol
                      : static_cast<double>(std::max(a.rows(), a.cols())) * smax *
                            std::numeric_limits<double>::epsilon() * policy.safety;
  rep.rank = static_cast<int>((rep.singular_values.array() > rep.tolerance).count());
  rep.nullspace_basis = svd.matrixV().rightCols(cols - rep.rank);
  rep.rigid = rep.rank == rep.expected_rank;
  return rep;
}

RigidityReport rank_and_nullspace(const RigidityMatrix& m, const Eigen::MatrixXd& trivial,
                                  const RankPolicy& policy) {
  RigidityReport rep = rank_and_nullspace(m, policy);
  rep.trivial_dimension = static_cast<int>(trivial.cols());
  const double scale = rep.singular_values.size() ? rep.singular_values(0) : 0.0;
  double worst = 0.0;
  for (int k = 0; k < trivial.cols(); ++k) worst = std::max(worst, (m.entries * trivial.col(k)).norm());
  rep.trivial_residual = scale > 0.0 ? worst / scale : worst;
  rep.trivial_angle = subspace_sine(rep.nullspace_basis, trivial);
  return rep;
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.cols() == 0) return a;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(rel_tol);
  const auto r = qr.rank();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), r);
  return q;
}

double subspace_sine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols() || a.rows() != b.rows()) return 1.0;
  if (a.cols() == 0) return 0.0;
  const Eigen::MatrixXd resid = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(resid);
  return std::min(1.0, svd.singularValues()(0));
}

std::vector<Eigen::MatrixXd> rotation_generators(int dim) {
  if (dim == 2) {
    Eigen::MatrixXd j(2, 2);
    j << 0, 1, -1, 0;
    return {j};
  }
  if (dim == 3) {
    Eigen::MatrixXd j1(3, 3), j2(3, 3), j3(3, 3);
    j1 << 0, 0, 0, 0, 0, 1, 0, -1, 0;
    j2 << 0, 0, 1, 0, 0, 0, -1, 0, 0;
    j3 << 0, -1, 0, 1, 0, 0, 0, 0, 0;
    return {j1, j2, j3};
  }
  throw Error("rotation generators: dimension must be 2 or 3");
}

namespace {

Eigen::VectorXd offset_direction(int n) {
  Eigen::VectorXd o = Eigen::VectorXd::Zero(2 * n);
  for (int i = 0; i < n; ++i) o(2 * i + 1) = 1.0;
  return o;
}

Eigen::MatrixXd translations(int n, int d) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(d * n, d);
  for (int i = 0; i < n; ++i) t.block(d * i, 0, d, d).setIdentity();
  return t;
}

Eigen::MatrixXd rotations(const PositionConfig& p) {
  const auto gens = rotation_generators(p.dim());
  Eigen::MatrixXd out(p.dim() * p.size(), gens.size());
  for (std::size_t r = 0; r < gens.size(); ++r) {
    Eigen::MatrixXd moved = gens[r] * p.coords();
    out.col(r) = Eigen::Map<const Eigen::VectorXd>(moved.data(), moved.size());
  }
  return out;
}

}  // namespace

Eigen::MatrixXd clock_trivial_basis(const ClockConfig& clocks) {
  Eigen::MatrixXd b(2 * clocks.size(), 2);
  b << offset_direction(clocks.size()), clocks.stacked();
  return orthonormal_columns(b);
}

Eigen::MatrixXd distance_trivial_basis(const PositionConfig& p) {
  const Eigen::MatrixXd t = translations(p.size(), p.dim());
  const Eigen::MatrixXd r = rotations(p);
  Eigen::MatrixXd b(t.rows(), t.cols() + r.cols());
  b << t, r;
  return orthonormal_columns(b);
}

Eigen::MatrixXd bearing_trivial_basis(const PositionConfig& p) {
  const Eigen::MatrixXd t = translations(p.size(), p.dim());
  Eigen::MatrixXd b(t.rows(), t.cols() + 1);
  b << t, p.stacked();
  return orthonormal_columns(b);
}

Eigen::MatrixXd extended_trivial_basis(const ClockConfig& clocks, const Eigen::VectorXd& gamma) {
  const int n = clocks.size(), m = static_cast<int>(gamma.size());
  Eigen::MatrixXd b(2 * n + m, 2);
  b.col(0) << clocks.stacked(), gamma;
  b.col(1) << offset_direction(n), Eigen::VectorXd::Ones(m);
  return orthonormal_columns(b);
}

Eigen::MatrixXd joint_trivial_basis(const PositionConfig& p, const ClockConfig& clocks) {
  const int n = p.size(), d = p.dim();
  if (clocks.size() != n) throw Error("joint trivial basis: size mismatch");
  const Eigen::MatrixXd t = translations(n, d);
  const Eigen::MatrixXd r = rotations(p);
  const int cols = static_cast<int>(t.cols() + r.cols()) + 2;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero((d + 2) * n, cols);
  b.topLeftCorner(d * n, t.cols()) = t;
  b.block(0, t.cols(), d * n, r.cols()) = r;
  b.bottomRows(2 * n).col(cols - 2) = offset_direction(n);
  b.col(cols - 1) << p.stacked(), clocks.stacked();
  return orthonormal_columns(b);
}

Eigen::MatrixXd trivial_basis(RigidityKind kind, const TrivialBasisInput& in) {
  auto need_p = [&] {
    if (!in.positions) throw Error("trivial basis: " + to_string(kind) + " kind needs positions");
  };
  auto need_c = [&] {
    if (!in.clocks) throw Error("trivial basis: " + to_string(kind) + " kind needs clocks");
  };
  switch (kind) {
    case RigidityKind::distance: need_p(); return distance_trivial_basis(*in.positions);
    case RigidityKind::bearing: need_p(); return bearing_trivial_basis(*in.positions);
    case RigidityKind::clock: need_c(); return clock_trivial_basis(*in.clocks);
    case RigidityKind::extended:
      need_c();
      if (!in.gamma) throw Error("trivial basis: extended kind needs gamma");
      return extended_trivial_basis(*in.clocks, *in.gamma);
    case RigidityKind::joint: need_p(); need_c(); return joint_trivial_basis(*in.positions, *in.clocks);
  }
  throw Error("trivial basis: unknown kind");
}

int count_redundant_edges(const Graph& g, const PositionConfig& p, const RankPolicy& policy) {
  const int full = rank_and_nullspace(distance_rigidity_matrix(g, p), policy).rank;
  int count = 0;
  for (int k = 0; k < g.m(); ++k) {
    if (rank_and_nullspace(distance_rigidity_matrix(g.without_edge(k), p), policy).rank == full) ++count;
  }
  return count;
}

FrameworkClassification classify_framework(const Scenario& sc, const TimestampTable& ts,
                                           const ClassifyOptions& opts) {
  FrameworkClassification out;
  out.frame = opts.condition ? Frame::conditioned(ts, sc.c) : Frame::identity();
  const TimestampTable fts = out.frame.apply(ts);
  const ClockConfig clocks = out.frame.apply(sc.clocks);
  const PositionConfig pos = out.frame.apply(sc.positions);
  const double c = out.frame.speed(sc.c);
  const Graph& g = sc.graph;

  out.distance = rank_and_nullspace(distance_rigidity_matrix(g, pos), distance_trivial_basis(pos),
                                    opts.policy);
  out.bearing = rank_and_nullspace(bearing_rigidity_matrix(g, pos), bearing_trivial_basis(pos),
                                   opts.policy);
  out.clock = rank_and_nullspace(clock_rigidity_matrix(g, fts), clock_trivial_basis(clocks),
                                 opts.policy);
  out.joint = rank_and_nullspace(joint_rigidity_matrix(sc.network, pos, fts, clocks, c),
                                 joint_trivial_basis(pos, clocks), opts.policy);
  out.redundant_edges = count_redundant_edges(g, pos, opts.policy);
  out.distance_rigid_with_redundant = out.distance.rigid && out.redundant_edges > 0;
  if (g.n() >= 2) {
    out.laman_spanning = has_laman_spanning_subgraph(g);
    out.laman_with_redundant = laman_with_redundant_edge(g);
  }

  if (sc.network.is_bidirectional()) {
    const bool a = out.joint.rigid, b = out.clock.rigid, cc = out.distance_rigid_with_redundant;
    if (sc.dim() == 2) {
      if (a != b || b != cc) {
        std::ostringstream msg;
        msg << "joint/clock/distance-with-redundant-edge verdicts disagree (" << a << "," << b << ","
            << cc << ")";
        out.anomalies.push_back(msg.str());
      }
      if (b != out.laman_with_redundant) {
        out.anomalies.push_back("clock verdict disagrees with the Laman-plus-redundant-edge test");
      }
    } else {
      if (out.distance.rigid && out.clock.rigid && !a) {
        out.anomalies.push_back("distance and clock rigid but joint flexible");
      }
      if (out.distance.rigid && g.n() >= 4 && !a) {
        out.anomalies.push_back("distance rigid in 3D with n >= 4 but joint flexible");
      }
    }
  }
  return out;
}

FrameworkClassification classify_framework(const Scenario& sc, const ClassifyOptions& opts) {
  return classify_framework(sc, simulate_timestamps(sc), opts);
}

}  // namespace clockrig
