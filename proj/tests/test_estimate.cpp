#include <doctest.h>

#include <cmath>

#include "clockrig/error.hpp"
#include "clockrig/estimate.hpp"
#include "clockrig/oracle.hpp"
#include "clockrig/rigidity.hpp"
#include "support.hpp"

using namespace clockrig;

namespace {

Eigen::MatrixXd rotation2(double theta) {
  Eigen::MatrixXd r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

Eigen::VectorXd sigma_of(const PositionConfig& p, const ClockConfig& c) {
  Eigen::VectorXd s(p.stacked().size() + c.stacked().size());
  s << p.stacked(), c.stacked();
  return s;
}

}  // namespace

TEST_CASE("objective gradients match finite differences") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto rng = testing::rng_for(s);
    const Graph g = testing::random_graph(rng, 6);
    const Scenario sc = random_scenario(g, 2, s, testing::natural_units());
    const TimestampTable ts = simulate_timestamps(sc);
    const Frame f = Frame::conditioned(ts, sc.c);
    const TimestampTable fts = f.apply(ts);

    const Eigen::VectorXd phi = f.apply(sc.clocks).stacked() + 0.05 * testing::random_vector(rng, 2 * g.n());
    const VectorFn p1 = [&](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(1, clock_objective(g, x, fts).value);
    };
    const Eigen::MatrixXd fd1 = finite_difference_jacobian(p1, phi, 1e-6);
    CHECK(column_relative_mismatch(clock_gradient(g, phi, fts).transpose(), fd1) <= 1e-6);

    const Digraph dg = Digraph::bidirectional(g);
    Eigen::VectorXd sigma = sigma_of(f.apply(sc.positions), f.apply(sc.clocks));
    sigma += 0.05 * testing::random_vector(rng, sigma.size());
    const VectorFn p2 = [&](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(1, joint_objective(dg, x, 2, fts, f.speed(sc.c)).value);
    };
    const Eigen::MatrixXd fd2 = finite_difference_jacobian(p2, sigma, 1e-6);
    CHECK(column_relative_mismatch(joint_gradient(dg, sigma, 2, fts, f.speed(sc.c)).transpose(), fd2) <=
          1e-5);
  }
}

TEST_CASE("objectives vanish at the ground truth") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 8);
  const TimestampTable ts = simulate_timestamps(sc);
  CHECK(clock_objective(sc.graph, sc.clocks.stacked(), ts).edge_errors.cwiseAbs().maxCoeff() <= 1e-15);
  const double e = joint_objective(sc.network, sigma_of(sc.positions, sc.clocks), 2, ts, sc.c)
                       .edge_errors.cwiseAbs()
                       .maxCoeff();
  CHECK(e <= 1e-6);
}

TEST_CASE("estimation started at the truth stops immediately") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 2, testing::natural_units());
  const TimestampTable ts = simulate_timestamps(sc);
  EstimateOptions o;
  o.tol = 1e-8;
  const EstimateTrace tr = estimate_clock(sc.graph, ts, sc.clocks, o);
  CHECK(tr.converged());
  CHECK(tr.iterations == 0);
  CHECK((tr.final_config - sc.clocks.stacked()).norm() <= 1e-12 * sc.clocks.stacked().norm());
}

TEST_CASE("clock descent on K4 converges to a trivial variation") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 0, testing::natural_units());
  const TimestampTable ts = simulate_timestamps(sc);
  std::mt19937_64 rng(1);
  EstimateOptions o;
  o.tol = 1e-8;
  const EstimateTrace tr = estimate_clock(sc.graph, ts, perturb_clocks(sc.clocks, 0.05, rng), o);
  REQUIRE(tr.converged());
  CHECK(tr.final_edge_errors.cwiseAbs().maxCoeff() <= 1e-8);
  const TrivialFit fit = fit_clock_trivial(ClockConfig::from_stacked(tr.final_config), sc.clocks, tr.frame);
  CHECK(fit.residual <= 1e-5);
  CHECK(std::abs(fit.k_s - 1.0) < 0.2);
}

TEST_CASE("joint descent on bidirectional K4 converges to a trivial variation") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 0, testing::natural_units());
  const TimestampTable ts = simulate_timestamps(sc);
  std::mt19937_64 rng(1);
  const auto [p0, c0] = perturb_joint(sc.positions, sc.clocks, 0.05, rng);
  EstimateOptions o;
  o.tol = 1e-8;
  o.max_iters = 1000000;
  const EstimateTrace tr = estimate_joint(sc.network, ts, p0, c0, sc.c, o);
  REQUIRE(tr.converged());
  const TrivialFit fit = fit_joint_trivial(PositionConfig::from_stacked(tr.final_config.head(8), 2),
                                           ClockConfig::from_stacked(tr.final_config.tail(8)), sc.positions,
                                           sc.clocks, tr.frame);
  CHECK(fit.residual <= 1e-5);
}

TEST_CASE("line search never raises the objective") {
  const Scenario sc = random_scenario(complete_graph(5), 2, 3, testing::natural_units());
  const TimestampTable ts = simulate_timestamps(sc);
  std::mt19937_64 rng(4);
  EstimateOptions o;
  o.line_search = true;
  o.gain = 5.0;
  o.max_iters = 300;
  const auto [p0, c0] = perturb_joint(sc.positions, sc.clocks, 0.05, rng);
  const EstimateTrace tr = estimate_joint(sc.network, ts, p0, c0, sc.c, o);
  for (std::size_t i = 1; i < tr.objective_history.size(); ++i) {
    CHECK(tr.objective_history[i] <= tr.objective_history[i - 1]);
  }
}

TEST_CASE("plain and preconditioned descent both reduce the objective") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 6, testing::natural_units());
  const TimestampTable ts = simulate_timestamps(sc);
  for (bool pre : {false, true}) {
    std::mt19937_64 rng(2);
    EstimateOptions o;
    o.precondition = pre;
    o.max_iters = 200;
    const EstimateTrace tr = estimate_clock(sc.graph, ts, perturb_clocks(sc.clocks, 0.05, rng), o);
    CHECK(tr.objective_history.back() < 0.5 * tr.objective_history.front());
  }
}

TEST_CASE("fixed steps that keep raising the objective raise DivergenceError") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 1, testing::natural_units());
  const TimestampTable ts = simulate_timestamps(sc);
  std::mt19937_64 rng(3);
  EstimateOptions o;
  o.gain = 50.0;
  CHECK_THROWS_AS(estimate_clock(sc.graph, ts, perturb_clocks(sc.clocks, 0.05, rng), o), DivergenceError);
}

TEST_CASE("iteration cap, history and recorded iterates") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 1, testing::natural_units());
  const TimestampTable ts = simulate_timestamps(sc);
  std::mt19937_64 rng(3);
  EstimateOptions o;
  o.max_iters = 10;
  o.record_every = 4;
  const EstimateTrace tr = estimate_clock(sc.graph, ts, perturb_clocks(sc.clocks, 0.05, rng), o);
  CHECK(tr.status == EstimateStatus::max_iters);
  CHECK(tr.iterations == 10);
  CHECK(tr.objective_history.size() == 11);
  CHECK(tr.max_edge_error_history.size() == 11);
  CHECK(tr.recorded_iters == std::vector<int>{0, 4, 8, 10});
  CHECK(tr.iterates.back() == tr.final_config);
}

TEST_CASE("estimator input checks") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 1);
  const TimestampTable ts = simulate_timestamps(sc);
  EstimateOptions bad;
  bad.gain = 0.0;
  CHECK_THROWS_AS(estimate_clock(sc.graph, ts, sc.clocks, bad), Error);
  CHECK_THROWS_AS(estimate_clock(sc.graph, ts, ClockConfig({{1, 0}}), {}), Error);
  CHECK_THROWS_AS(estimate_joint(sc.network, ts, sc.positions, sc.clocks, 0.0, {}), Error);
}

TEST_CASE("perturbations have the requested size and keep skews positive") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Scenario sc = random_scenario(complete_graph(5), 2, s);
    std::mt19937_64 rng(s);
    const ClockConfig ck = perturb_clocks(sc.clocks, 0.05, rng);
    for (const auto& c : ck.clocks()) CHECK(c.alpha > 0.0);
    CHECK((ck.stacked() - sc.clocks.stacked()).norm() ==
          doctest::Approx(0.05 * sc.clocks.stacked().norm()).epsilon(1e-12));
    const auto [p, c] = perturb_joint(sc.positions, sc.clocks, 0.05, rng);
    CHECK((p.stacked() - sc.positions.stacked()).norm() ==
          doctest::Approx(0.05 * sc.positions.stacked().norm()).epsilon(1e-12));
  }
}

TEST_CASE("clock fit recovers a forward-constructed trivial variation") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = testing::rng_for(s);
    const Scenario sc = random_scenario(complete_graph(4), 2, s);
    const double ks = testing::uniform(rng, 0.5, 2.0);
    const double kb = testing::uniform(rng, -1e-3, 1e-3);
    const ClockConfig moved = apply_clock_trivial(sc.clocks, ks, kb);
    const TimestampTable ts = simulate_timestamps(sc);
    for (const Frame& f : {Frame::identity(), Frame::conditioned(ts, sc.c)}) {
      const TrivialFit fit = fit_clock_trivial(moved, sc.clocks, f);
      CHECK(fit.k_s == doctest::Approx(ks).epsilon(1e-12));
      CHECK(fit.k_beta == doctest::Approx(kb).epsilon(1e-9));
      CHECK(fit.residual <= 1e-12);
    }
  }
}

TEST_CASE("joint fit recovers scale, rotation, translation and offset") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = testing::rng_for(s);
    const Scenario sc = random_scenario(complete_graph(4), 2, s);
    TrivialFit f;
    f.k_s = testing::uniform(rng, 0.5, 2.0);
    f.theta = testing::uniform(rng, -3.0, 3.0);
    f.rotation = rotation2(f.theta);
    f.k_t = testing::random_vector(rng, 2, -50.0, 50.0);
    f.k_beta = testing::uniform(rng, -1e-3, 1e-3);
    const auto [p, c] = apply_joint_trivial(sc.positions, sc.clocks, f);
    const TimestampTable ts = simulate_timestamps(sc);
    const TrivialFit fit = fit_joint_trivial(p, c, sc.positions, sc.clocks, Frame::conditioned(ts, sc.c));
    CHECK(fit.k_s == doctest::Approx(f.k_s).epsilon(1e-10));
    CHECK(fit.theta == doctest::Approx(f.theta).epsilon(1e-10));
    CHECK((fit.k_t - f.k_t).norm() <= 1e-8);
    CHECK(fit.k_beta == doctest::Approx(f.k_beta).epsilon(1e-8));
    CHECK(fit.residual <= 1e-10);
  }
}

TEST_CASE("joint fit rejects a reflection") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 9);
  Eigen::MatrixXd flip = sc.positions.coords();
  flip.row(0) *= -1.0;
  const TrivialFit fit = fit_joint_trivial(PositionConfig(flip), sc.clocks, sc.positions, sc.clocks);
  CHECK(fit.rotation.determinant() == doctest::Approx(1.0));
  CHECK(fit.residual > 1e-3);
}

TEST_CASE("objective worked values") {
  const TimestampTable ts({{0, 1, 2.0, 2.0}, {1, 0, 2.0, 2.0}});
  Eigen::VectorXd phi(4);
  phi << 1, 0, 1, 1;
  const ObjectiveValue p1 = clock_objective(path_graph(2), phi, ts);
  CHECK(std::abs(p1.edge_errors(0)) == 1.0);
  CHECK(p1.value == 0.5);

  const Digraph one(2, {{0, 1}});
  Eigen::VectorXd sigma(8);
  sigma << 0, 0, 3, 4, 1, 0, 1, 0;
  const ObjectiveValue p2 = joint_objective(one, sigma, 2, TimestampTable({{0, 1, 0.0, 3.0}}), 1.0);
  CHECK(p2.edge_errors(0) == 16.0);
  CHECK(p2.value == 64.0);
}

TEST_CASE("objectives stay at zero along trivial variations") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Scenario sc = random_scenario(complete_graph(5), 2, s);
    const TimestampTable ts = simulate_timestamps(sc);
    CHECK(clock_objective(sc.graph, sc.clocks.stacked(), ts).value <= 1e-20);
    CHECK(clock_objective(sc.graph, apply_clock_trivial(sc.clocks, 3.0, 0.5).stacked(), ts).value <= 1e-18);

    const Scenario nat = random_scenario(complete_graph(5), 2, s, testing::natural_units());
    const TimestampTable nts = simulate_timestamps(nat);
    CHECK(joint_objective(nat.network, sigma_of(nat.positions, nat.clocks), 2, nts, nat.c).value <= 1e-12);
    TrivialFit v;
    v.k_s = 1.5;
    v.theta = M_PI / 6;
    v.rotation = rotation2(v.theta);
    v.k_t = Eigen::Vector2d(3.0, -7.0);
    v.k_beta = 2.0;
    const auto [p, c] = apply_joint_trivial(nat.positions, nat.clocks, v);
    const double scale = std::pow(nat.positions.coords().cwiseAbs().maxCoeff(), 4);
    CHECK(joint_objective(nat.network, sigma_of(p, c), 2, nts, nat.c).value <= 1e-24 * scale);
  }
}

TEST_CASE("clock fit worked example") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 3);
  const TrivialFit fit = fit_clock_trivial(apply_clock_trivial(sc.clocks, 2.0, 3.0), sc.clocks);
  CHECK(fit.k_s == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.k_beta == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.residual <= 1e-12);
}

TEST_CASE("joint fit worked example: quarter turn, scale 1.5, offset 1e-4") {
  const Scenario sc = random_scenario(complete_graph(4), 2, 4);
  TrivialFit v;
  v.k_s = 1.5;
  v.theta = M_PI / 2;
  v.rotation = rotation2(v.theta);
  v.k_t = Eigen::Vector2d::Zero();
  v.k_beta = 1e-4;
  const auto [p, c] = apply_joint_trivial(sc.positions, sc.clocks, v);
  const TrivialFit fit = fit_joint_trivial(p, c, sc.positions, sc.clocks,
                                           Frame::conditioned(simulate_timestamps(sc), sc.c));
  CHECK(fit.theta == doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK(fit.k_s == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(fit.k_beta == doctest::Approx(1e-4).epsilon(1e-9));
  CHECK(fit.residual <= 1e-9);
}

TEST_CASE("a nontrivial flex of a triangle fails the clock fit") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Scenario sc = random_scenario(complete_graph(3), 2, s);
    const TimestampTable ts = simulate_timestamps(sc);
    const Frame f = Frame::conditioned(ts, sc.c);
    const ClockConfig framed = f.apply(sc.clocks);
    const Eigen::MatrixXd trivial = clock_trivial_basis(framed);
    const RigidityReport rep = rank_and_nullspace(clock_rigidity_matrix(sc.graph, f.apply(ts)), trivial);
    REQUIRE(rep.nullspace_basis.cols() > 2);
    // Part of the nullspace orthogonal to the trivial directions.
    Eigen::MatrixXd flex = rep.nullspace_basis - trivial * (trivial.transpose() * rep.nullspace_basis);
    Eigen::Index best = 0;
    flex.colwise().norm().maxCoeff(&best);
    Eigen::VectorXd dir = flex.col(best).normalized();
    Eigen::VectorXd moved = framed.stacked() + 0.2 * framed.stacked().norm() * dir;
    for (int i = 0; i < 3; ++i) {
      if (moved(2 * i) <= 0.0) moved = framed.stacked() - 0.2 * framed.stacked().norm() * dir;
    }
    const ClockConfig est = f.restore(ClockConfig::from_stacked(moved));
    CHECK(clock_objective(sc.graph, est.stacked(), ts).value <= 1e-12);
    CHECK(fit_clock_trivial(est, sc.clocks, f).residual > 0.01);
  }
}

TEST_CASE("residual objective scales with the square of receive noise") {
  const Scenario sc = random_scenario(complete_graph(5), 2, 11);
  double final[2];
  const double stds[2] = {1e-9, 1e-8};
  for (int k = 0; k < 2; ++k) {
    const TimestampTable ts = simulate_timestamps(sc, {stds[k], 7});
    EstimateOptions o;
    o.max_iters = 200;
    o.tol = 0.0;
    final[k] = estimate_clock(sc.graph, ts, sc.clocks, o).final_objective;
  }
  REQUIRE(final[0] > 0.0);
  const double ratio = final[1] / final[0];
  CHECK(ratio >= 10.0);
  CHECK(ratio <= 1000.0);
}
