#include "clockrig/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Sparse>

#include "clockrig/error.hpp"
#include "clockrig/rigidity.hpp"

namespace clockrig {

ObjectiveValue clock_objective(const Graph& g, const Eigen::VectorXd& phi, const TimestampTable& ts) {
  if (phi.size() != 2 * g.n()) throw Error("clock objective: phi has wrong length");
  ObjectiveValue out;
  out.edge_errors.resize(g.m());
  for (int k = 0; k < g.m(); ++k) {
    const Edge& e = g.edge(k);
    const EdgeAverages avg = ts.averaged(e.u, e.v);
    out.edge_errors(k) = phi(2 * e.v) * avg.at_v + phi(2 * e.v + 1) - phi(2 * e.u) * avg.at_u -
                         phi(2 * e.u + 1);
  }
  out.value = 0.5 * out.edge_errors.squaredNorm();
  return out;
}

Eigen::VectorXd clock_gradient(const Graph& g, const Eigen::VectorXd& phi, const TimestampTable& ts) {
  // e = -R_c phi
  const Eigen::VectorXd e = clock_objective(g, phi, ts).edge_errors;
  return -clock_rigidity_matrix(g, ts).entries.transpose() * e;
}

ObjectiveValue joint_objective(const Digraph& dg, const Eigen::VectorXd& sigma, int dim,
                               const TimestampTable& ts, double c) {
  const int n = dg.n();
  if (sigma.size() != (dim + 2) * n) throw Error("joint objective: sigma has wrong length");
  const int clk = dim * n;
  ObjectiveValue out;
  out.edge_errors.resize(dg.arc_count());
  for (int k = 0; k < dg.arc_count(); ++k) {
    const Edge& a = dg.arc(k);
    const ArcTimestamps& rec = ts.at(a.u, a.v);
    const double d = c * (sigma(clk + 2 * a.v) * rec.t_recv + sigma(clk + 2 * a.v + 1) -
                          sigma(clk + 2 * a.u) * rec.t_send - sigma(clk + 2 * a.u + 1));
    const double sq = (sigma.segment(dim * a.u, dim) - sigma.segment(dim * a.v, dim)).squaredNorm();
    out.edge_errors(k) = sq - d * d;
  }
  out.value = 0.25 * out.edge_errors.squaredNorm();
  return out;
}

Eigen::VectorXd joint_gradient(const Digraph& dg, const Eigen::VectorXd& sigma, int dim,
                               const TimestampTable& ts, double c) {
  const Eigen::VectorXd e = joint_objective(dg, sigma, dim, ts, c).edge_errors;
  return joint_rows(dg, sigma, dim, ts, c).transpose() * e;
}

namespace {

struct Problem {
  std::function<ObjectiveValue(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> to_original;
  std::vector<int> alpha_index;
  Eigen::SparseMatrix<double> precondition;
  double step = 1.0;
  double error_scale = 1.0;  // working-frame errors times this are original units
};

bool alphas_positive(const Eigen::VectorXd& x, const std::vector<int>& idx) {
  for (int i : idx) {
    if (!(x(i) > 0.0)) return false;
  }
  return true;
}

EstimateTrace descend(const Problem& prob, Eigen::VectorXd x, const EstimateOptions& opts) {
  if (opts.max_iters < 0) throw Error("estimate: max_iters must be nonnegative");
  if (!(opts.gain > 0.0) || !(opts.clock_gain > 0.0)) throw Error("estimate: gains must be positive");
  if (!alphas_positive(x, prob.alpha_index)) throw Error("estimate: initial skews must be positive");

  EstimateTrace trace;
  trace.step = prob.step;
  const double tol = opts.tol / prob.error_scale;
  const double obj_scale = prob.error_scale * prob.error_scale;
  ObjectiveValue cur = prob.objective(x);
  const double start = cur.value;
  int rises = 0;

  auto record = [&](int it, bool force) {
    if (force || (opts.record_every > 0 && it % opts.record_every == 0)) {
      if (trace.recorded_iters.empty() || trace.recorded_iters.back() != it) {
        trace.recorded_iters.push_back(it);
        trace.iterates.push_back(prob.to_original(x));
      }
    }
  };

  int it = 0;
  for (;; ++it) {
    trace.objective_history.push_back(cur.value * obj_scale);
    trace.max_edge_error_history.push_back(
        (cur.edge_errors.size() ? cur.edge_errors.cwiseAbs().maxCoeff() : 0.0) * prob.error_scale);
    record(it, it == 0);
    if (!std::isfinite(cur.value)) {
      throw DivergenceError("estimate: objective became non-finite at iteration " +
                            std::to_string(it));
    }
    if (cur.edge_errors.norm() <= tol) {
      trace.status = EstimateStatus::converged;
      break;
    }
    if (it >= opts.max_iters) {
      trace.status = EstimateStatus::max_iters;
      break;
    }

    const Eigen::VectorXd grad = prob.gradient(x);
    const Eigen::VectorXd dir = prob.precondition * grad;
    const double slope = grad.dot(dir);
    double t = prob.step;
    Eigen::VectorXd cand;
    ObjectiveValue next;
    bool accepted = false;
    for (int halvings = 0; halvings < 200; ++halvings, t *= 0.5) {
      cand = x - t * dir;
      if (!alphas_positive(cand, prob.alpha_index)) continue;
      next = prob.objective(cand);
      if (!opts.line_search || next.value <= cur.value - 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      if (halvings >= 60) break;
    }
    if (!accepted && !opts.line_search && cur.value > start) {
      std::ostringstream msg;
      msg << "estimate: fixed steps raised the objective to P = " << cur.value * obj_scale
          << " and then stalled at the skew-positivity boundary (iteration " << it
          << "); lower --gain or use --line-search";
      throw DivergenceError(msg.str());
    }
    if (!accepted) {
      trace.status = EstimateStatus::stalled;
      break;
    }
    if (!opts.line_search) {
      rises = next.value > cur.value ? rises + 1 : 0;
      if (rises >= opts.divergence_window) {
        std::ostringstream msg;
        msg << "estimate: objective increased on " << rises
            << " consecutive fixed steps (iteration " << it + 1 << ", P = " << next.value * obj_scale
            << "); lower --gain or use --line-search";
        throw DivergenceError(msg.str());
      }
    }
    x = std::move(cand);
    cur = std::move(next);
  }

  trace.iterations = it;
  record(it, true);
  trace.final_config = prob.to_original(x);
  trace.final_edge_errors = cur.edge_errors * prob.error_scale;
  trace.final_objective = cur.value * obj_scale;
  return trace;
}

double largest_curvature(const Eigen::MatrixXd& jac) {
  if (jac.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const double s = svd.singularValues()(0);
  return s * s;
}

std::vector<int> alpha_positions(int offset, int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = offset + 2 * i;
  return idx;
}

// Per node, beta is re-expressed about the node's mean local timestamp c_u
// (x = M0 y with alpha = a, beta = b - c_u a), then every column of J M0 is
// scaled to unit norm. Returns M; the descent direction is M M^T grad.
Eigen::SparseMatrix<double> reparametrization(const Eigen::MatrixXd& jac, int clk,
                                              const Eigen::VectorXd& centers, double clock_gain,
                                              bool enabled) {
  const int cols = static_cast<int>(jac.cols());
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < clk; ++j) trip.emplace_back(j, j, 1.0);
  for (int u = 0; u < centers.size(); ++u) {
    const int a = clk + 2 * u;
    trip.emplace_back(a, a, 1.0);
    trip.emplace_back(a + 1, a + 1, 1.0);
    if (enabled) trip.emplace_back(a + 1, a, -centers(u));
  }
  Eigen::SparseMatrix<double> m(cols, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(cols);
  if (enabled) {
    const Eigen::MatrixXd jm = jac * m;
    const Eigen::VectorXd len = jm.colwise().norm().transpose();
    // Columns that vanish (or nearly: degree-one nodes after centring) keep a
    // bounded scale.
    const double floor = 1e-6 * len.maxCoeff();
    for (int j = 0; j < cols; ++j) {
      if (len(j) > 0.0) scale(j) = 1.0 / std::max(len(j), floor);
    }
  }
  scale.tail(cols - clk) *= std::sqrt(clock_gain);
  return m * scale.asDiagonal();
}

}  // namespace

EstimateTrace estimate_clock(const Graph& g, const TimestampTable& ts, const ClockConfig& init,
                             const EstimateOptions& opts) {
  if (init.size() != g.n()) throw Error("estimate clock: initial guess has wrong size");
  const Frame frame = opts.condition ? Frame::conditioned(ts, 1.0) : Frame::identity();
  const TimestampTable fts = frame.apply(ts);
  const Eigen::MatrixXd rc = clock_rigidity_matrix(g, fts).entries;

  Problem prob;
  prob.objective = [&](const Eigen::VectorXd& phi) { return clock_objective(g, phi, fts); };
  prob.gradient = [&](const Eigen::VectorXd& phi) -> Eigen::VectorXd {
    return rc.transpose() * (rc * phi);
  };
  prob.to_original = [&](const Eigen::VectorXd& phi) -> Eigen::VectorXd {
    return frame.restore(ClockConfig::from_stacked(phi)).stacked();
  };
  prob.alpha_index = alpha_positions(0, g.n());
  Eigen::VectorXd centers = Eigen::VectorXd::Zero(g.n());
  Eigen::VectorXd count = Eigen::VectorXd::Zero(g.n());
  for (const Edge& e : g.edges()) {
    const EdgeAverages avg = fts.averaged(e.u, e.v);
    centers(e.u) += avg.at_u;
    centers(e.v) += avg.at_v;
    count(e.u) += 1.0;
    count(e.v) += 1.0;
  }
  centers = centers.cwiseQuotient(count.cwiseMax(1.0));
  const Eigen::SparseMatrix<double> m = reparametrization(rc, 0, centers, 1.0, opts.precondition);
  prob.precondition = m * Eigen::SparseMatrix<double>(m.transpose());
  const double curv = largest_curvature(rc * m);
  prob.step = curv > 0.0 ? opts.gain / curv : opts.gain;
  prob.error_scale = frame.time_unit;

  EstimateTrace trace = descend(prob, frame.apply(init).stacked(), opts);
  trace.frame = frame;
  return trace;
}

EstimateTrace estimate_joint(const Digraph& dg, const TimestampTable& ts, const PositionConfig& p0,
                             const ClockConfig& phi0, double c, const EstimateOptions& opts) {
  const int n = dg.n(), dim = p0.dim();
  if (p0.size() != n || phi0.size() != n) throw Error("estimate joint: initial guess has wrong size");
  if (!(c > 0.0)) throw Error("estimate joint: c must be positive");
  const Frame frame = opts.condition ? Frame::conditioned(ts, c) : Frame::identity();
  const TimestampTable fts = frame.apply(ts);
  const double fc = frame.speed(c);

  Eigen::VectorXd x0((dim + 2) * n);
  x0 << frame.apply(p0).stacked(), frame.apply(phi0).stacked();

  Problem prob;
  prob.objective = [&](const Eigen::VectorXd& s) { return joint_objective(dg, s, dim, fts, fc); };
  prob.gradient = [&](const Eigen::VectorXd& s) { return joint_gradient(dg, s, dim, fts, fc); };
  prob.to_original = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    Eigen::VectorXd out(s.size());
    out << frame.restore(PositionConfig::from_stacked(s.head(dim * n), dim)).stacked(),
        frame.restore(ClockConfig::from_stacked(s.tail(2 * n))).stacked();
    return out;
  };
  prob.alpha_index = alpha_positions(dim * n, n);
  Eigen::VectorXd centers = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(n);
  for (const Edge& a : dg.arcs()) {
    const ArcTimestamps& rec = fts.at(a.u, a.v);
    centers(rec.from) += rec.t_send;
    centers(rec.to) += rec.t_recv;
    count(rec.from) += 1.0;
    count(rec.to) += 1.0;
  }
  centers = centers.cwiseQuotient(count.cwiseMax(1.0));
  const Eigen::MatrixXd jac = joint_rows(dg, x0, dim, fts, fc);
  const Eigen::SparseMatrix<double> m =
      reparametrization(jac, dim * n, centers, opts.clock_gain, opts.precondition);
  prob.precondition = m * Eigen::SparseMatrix<double>(m.transpose());
  const double curv = 2.0 * largest_curvature(jac * m);
  prob.step = curv > 0.0 ? opts.gain / curv : opts.gain;
  prob.error_scale = frame.length_unit * frame.length_unit;

  EstimateTrace trace = descend(prob, x0, opts);
  trace.frame = frame;
  return trace;
}

namespace {

Eigen::VectorXd gaussian_direction(int size, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = normal(rng);
  const double len = v.norm();
  return len > 0.0 ? Eigen::VectorXd(v * (norm / len)) : v;
}

}  // namespace

ClockConfig perturb_clocks(const ClockConfig& clocks, double rel, std::mt19937_64& rng) {
  const Eigen::VectorXd phi = clocks.stacked();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Eigen::VectorXd cand = phi + gaussian_direction(phi.size(), rel * phi.norm(), rng);
    bool ok = true;
    for (int i = 0; i < clocks.size(); ++i) ok = ok && cand(2 * i) > 0.0;
    if (ok) return ClockConfig::from_stacked(cand);
  }
  throw Error("perturb clocks: could not keep skews positive; perturbation too large");
}

std::pair<PositionConfig, ClockConfig> perturb_joint(const PositionConfig& p, const ClockConfig& clocks,
                                                     double rel, std::mt19937_64& rng) {
  const Eigen::VectorXd ps = p.stacked();
  const Eigen::VectorXd moved = ps + gaussian_direction(ps.size(), rel * ps.norm(), rng);
  ClockConfig ck = perturb_clocks(clocks, rel, rng);
  return {PositionConfig::from_stacked(moved, p.dim()), std::move(ck)};
}

namespace {

Eigen::VectorXd offset_vector(int n) {
  Eigen::VectorXd o = Eigen::VectorXd::Zero(2 * n);
  for (int i = 0; i < n; ++i) o(2 * i + 1) = 1.0;
  return o;
}

}  // namespace

TrivialFit fit_clock_trivial(const ClockConfig& est, const ClockConfig& truth, const Frame& frame) {
  if (est.size() != truth.size()) throw Error("trivial fit: size mismatch");
  const Eigen::VectorXd y = frame.apply(est).stacked();
  const Eigen::VectorXd phi = frame.apply(truth).stacked();
  Eigen::MatrixXd a(phi.size(), 2);
  a << phi, offset_vector(truth.size());
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(y);
  TrivialFit fit;
  fit.k_s = coef(0);
  fit.k_beta = coef(1) * frame.time_unit;
  const double scale = y.norm();
  fit.residual = scale > 0.0 ? (y - a * coef).norm() / scale : (y - a * coef).norm();
  return fit;
}

TrivialFit fit_joint_trivial(const PositionConfig& p_est, const ClockConfig& clocks_est,
                             const PositionConfig& p_truth, const ClockConfig& clocks_truth,
                             const Frame& frame) {
  const int n = p_truth.size(), d = p_truth.dim();
  if (p_est.size() != n || p_est.dim() != d || clocks_est.size() != n || clocks_truth.size() != n) {
    throw Error("trivial fit: size mismatch");
  }
  const Eigen::MatrixXd ph = frame.apply(p_est).coords();
  const Eigen::MatrixXd pt = frame.apply(p_truth).coords();
  const Eigen::VectorXd yh = frame.apply(clocks_est).stacked();
  const Eigen::VectorXd yt = frame.apply(clocks_truth).stacked();

  const Eigen::VectorXd mh = ph.rowwise().mean(), mt = pt.rowwise().mean();
  const Eigen::MatrixXd ch = ph.colwise() - mh, ct = pt.colwise() - mt;
  if (ct.norm() <= 0.0) throw Error("trivial fit: ground-truth positions are all coincident");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ch * ct.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(d);
  sign(d - 1) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::MatrixXd rot = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();

  const Eigen::VectorXd o = offset_vector(n);
  const Eigen::VectorXd yh_perp = yh - o * (o.dot(yh) / n);
  const Eigen::VectorXd yt_perp = yt - o * (o.dot(yt) / n);
  const double num = (ch.array() * (rot * ct).array()).sum() + yh_perp.dot(yt_perp);
  const double den = ct.squaredNorm() + yt_perp.squaredNorm();
  const double s = num / den;
  const Eigen::VectorXd t = mh - s * rot * mt;
  const double kb = o.dot(yh - s * yt) / n;

  const Eigen::MatrixXd model_p = (s * rot * pt).colwise() + t;
  const Eigen::VectorXd model_c = s * yt + kb * o;
  const double misfit = std::sqrt((ph - model_p).squaredNorm() + (yh - model_c).squaredNorm());
  const double scale = std::sqrt(ph.squaredNorm() + yh.squaredNorm());

  TrivialFit fit;
  fit.joint = true;
  fit.k_s = s;
  fit.rotation = rot;
  if (d == 2) fit.theta = std::atan2(rot(1, 0), rot(0, 0));
  fit.k_t = t * frame.length_unit;
  fit.k_beta = kb * frame.time_unit;
  fit.residual = scale > 0.0 ? misfit / scale : misfit;
  return fit;
}

std::pair<PositionConfig, ClockConfig> apply_joint_trivial(const PositionConfig& p,
                                                           const ClockConfig& clocks,
                                                           const TrivialFit& f) {
  const int d = p.dim();
  const Eigen::MatrixXd rot = f.rotation.size() ? f.rotation : Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd t = f.k_t.size() ? f.k_t : Eigen::VectorXd::Zero(d);
  const Eigen::MatrixXd moved = (f.k_s * rot * p.coords()).colwise() + t;
  return {PositionConfig(moved), apply_clock_trivial(clocks, f.k_s, f.k_beta)};
}

ClockConfig apply_clock_trivial(const ClockConfig& clocks, double k_s, double k_beta) {
  std::vector<ClockParams> out = clocks.clocks();
  for (auto& ck : out) {
    ck.alpha *= k_s;
    ck.beta = k_s * ck.beta + k_beta;
  }
  return ClockConfig(std::move(out));
}

}  // namespace clockrig
