#include <doctest.h>

#include <algorithm>
#include <set>

#include "clockrig/error.hpp"
#include "clockrig/graph.hpp"
#include "clockrig/oracle.hpp"
#include "clockrig/rigidity.hpp"
#include "support.hpp"

using namespace clockrig;

namespace {

int generic_distance_rank(const Graph& g, std::uint64_t seed) {
  auto rng = testing::rng_for(seed);
  Eigen::MatrixXd pts(2, g.n());
  for (int i = 0; i < g.n(); ++i) pts.col(i) = testing::random_vector(rng, 2, -10.0, 10.0);
  return rank_and_nullspace(distance_rigidity_matrix(g, PositionConfig(pts))).rank;
}

std::vector<int> degrees(const Graph& g) {
  std::vector<int> deg(g.n(), 0);
  for (const Edge& e : g.edges()) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

}  // namespace

TEST_CASE("families have the textbook edge counts") {
  CHECK(complete_graph(5).m() == 10);
  CHECK(path_graph(5).m() == 4);
  CHECK(cycle_graph(5).m() == 5);
  CHECK(wheel_graph(5).m() == 8);
  CHECK(wheel_graph(5).adjacency()[0] == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("graph rejects loops, duplicates and out-of-range vertices") {
  CHECK_THROWS_AS(Graph(3, {{0, 0}}), Error);
  CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), Error);
  CHECK_THROWS_AS(Graph(3, {{0, 3}}), Error);
  CHECK_THROWS_AS(Digraph(3, {{0, 1}, {0, 1}}), Error);
}

TEST_CASE("components and edge removal") {
  const Graph g(5, {{0, 1}, {1, 2}, {3, 4}});
  CHECK(g.components() == std::vector<std::vector<int>>{{0, 1, 2}, {3, 4}});
  CHECK_FALSE(g.connected());
  const Graph c = cycle_graph(4);
  CHECK(c.without_edge(0).connected());
  CHECK(c.without_edge(0).m() == 3);
  CHECK(c.edge_index(1, 0) == c.edge_index(0, 1));
}

TEST_CASE("bidirectional digraph pairs every edge") {
  const Graph g = complete_graph(4);
  const Digraph dg = Digraph::bidirectional(g);
  CHECK(dg.arc_count() == 12);
  CHECK(dg.is_bidirectional());
  CHECK(dg.arc(0) == Edge{0, 1});
  CHECK(dg.arc(1) == Edge{1, 0});
  CHECK(dg.disoriented() == g);
  CHECK_FALSE(Digraph(3, {{0, 1}, {1, 2}, {2, 1}}).is_bidirectional());
}

TEST_CASE("line graph edge count is the sum of C(deg, 2)") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = testing::rng_for(s);
    const Graph g = testing::random_graph(rng);
    int want = 0;
    for (int d : degrees(g)) want += d * (d - 1) / 2;
    const Graph lg = line_graph(g);
    CHECK(lg.n() == g.m());
    CHECK(lg.m() == want);
  }
}

TEST_CASE("spanning trees span and have n-1 edges") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = testing::rng_for(s);
    const Graph g = testing::random_graph(rng);
    for (const auto& tree : {spanning_tree(g), random_spanning_tree(g, rng)}) {
      REQUIRE(static_cast<int>(tree.size()) == g.n() - 1);
      CHECK(Graph(g.n(), tree).connected());
      for (const Edge& e : tree) CHECK(g.has_edge(e.u, e.v));
    }
  }
}

TEST_CASE("lift adds one vertex per edge, two attachments each and a line-graph tree") {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    auto rng = testing::rng_for(s);
    const Graph g = testing::random_graph(rng);
    const LiftedGraph lifted = lift(g);
    CHECK(lifted.graph.n() == g.n() + g.m());
    CHECK(lifted.graph.m() == 2 * g.m() + g.m() - 1);
    for (int k = 0; k < g.m(); ++k) {
      CHECK(lifted.graph.has_edge(g.edge(k).u, lifted.edge_vertex(k)));
      CHECK(lifted.graph.has_edge(g.edge(k).v, lifted.edge_vertex(k)));
    }
  }
}

TEST_CASE("pebble game rank matches generic distance-rigidity rank") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto rng = testing::rng_for(s);
    const Graph g = testing::random_graph(rng, 8);
    CHECK(pebble_game(g).rank() == generic_distance_rank(g, s));
  }
}

TEST_CASE("pebble game agrees with brute-force Laman search on every small graph") {
  for (int n = 2; n <= 6; ++n) {
    for (const Graph& g : enumerate_graphs(n)) {
      CHECK(has_laman_spanning_subgraph(g) == brute_force_laman_spanning(g));
    }
  }
}

TEST_CASE("Laman with a redundant edge on named graphs") {
  CHECK(laman_with_redundant_edge(complete_graph(4)));
  CHECK_FALSE(laman_with_redundant_edge(complete_graph(3)));
  CHECK_FALSE(laman_with_redundant_edge(cycle_graph(4)));
  CHECK(laman_with_redundant_edge(wheel_graph(5)));
  // Two triangles sharing a vertex plus nothing else: flexible.
  CHECK_FALSE(laman_with_redundant_edge(Graph(5, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}, {2, 4}})));
}

TEST_CASE("Henneberg moves keep a Laman graph Laman") {
  for (std::uint64_t s = 0; s < 40; ++s) {
    auto rng = testing::rng_for(s);
    Graph g = complete_graph(3);
    for (int step = 0; step < 10; ++step) {
      const int n = g.n();
      if (std::bernoulli_distribution(0.5)(rng)) {
        std::uniform_int_distribution<int> pick(0, n - 1);
        const int a = pick(rng);
        int b = pick(rng);
        while (b == a) b = pick(rng);
        g = henneberg_extend(g, VertexAddition{a, b});
      } else {
        const Edge e = g.edge(std::uniform_int_distribution<int>(0, g.m() - 1)(rng));
        std::uniform_int_distribution<int> pick(0, n - 1);
        int third = pick(rng);
        while (third == e.u || third == e.v) third = pick(rng);
        g = henneberg_extend(g, EdgeSplit{e.u, e.v, third});
      }
      CHECK(g.m() == 2 * g.n() - 3);
      CHECK(pebble_game(g).redundant.empty());
      CHECK(has_laman_spanning_subgraph(g));
    }
  }
}

TEST_CASE("Henneberg moves reject bad arguments") {
  const Graph g = complete_graph(3);
  CHECK_THROWS_AS(vertex_addition(g, 0, 0), Error);
  CHECK_THROWS_AS(edge_splitting(path_graph(3), 0, 2, 1), Error);
}

TEST_CASE("line graph worked examples") {
  CHECK(line_graph(path_graph(3)) == path_graph(2));
  CHECK(line_graph(complete_graph(3)) == complete_graph(3));
  CHECK(line_graph(Graph(4, {{0, 1}, {0, 2}, {0, 3}})) == complete_graph(3));
}

TEST_CASE("spanning tree worked examples") {
  CHECK(spanning_tree(complete_graph(3)) == std::vector<Edge>{{0, 1}, {0, 2}});
  CHECK(spanning_tree(path_graph(2)) == std::vector<Edge>{{0, 1}});
  CHECK_THROWS_AS(spanning_tree(Graph(2, {})), Error);
}

TEST_CASE("lift worked examples") {
  const LiftedGraph k3 = lift(complete_graph(3));
  CHECK(k3.graph.n() == 6);
  CHECK(k3.graph.m() == 8);
  const LiftedGraph k4 = lift(complete_graph(4));
  CHECK(k4.graph.n() == 10);
  CHECK(k4.graph.m() == 17);
  const LiftedGraph one = lift(path_graph(2));
  CHECK(one.graph.n() == 3);
  CHECK(one.graph.m() == 2);
  CHECK(one.tree.empty());
}

TEST_CASE("Laman worked examples") {
  CHECK(has_laman_spanning_subgraph(complete_graph(3)));
  CHECK(has_laman_spanning_subgraph(complete_graph(4)));
  CHECK_FALSE(has_laman_spanning_subgraph(path_graph(3)));
  CHECK_THROWS_AS(has_laman_spanning_subgraph(Graph(1, {})), Error);
  CHECK_FALSE(laman_with_redundant_edge(complete_graph(4).without_edge(0)));
}

TEST_CASE("Henneberg worked examples on a triangle") {
  const Graph added = vertex_addition(complete_graph(3), 0, 1);
  CHECK(added.n() == 4);
  CHECK(added.m() == 5);
  CHECK(has_laman_spanning_subgraph(added));
  const Graph split = edge_splitting(complete_graph(3), 0, 1, 2);
  CHECK(split.n() == 4);
  CHECK(split.m() == 5);
  CHECK_FALSE(split.has_edge(0, 1));
  CHECK(has_laman_spanning_subgraph(split));
  CHECK_THROWS_AS(vertex_addition(complete_graph(3), 0, 7), Error);
}

TEST_CASE("redundant-edge Laman test matches the lifted graph and single-edge deletion") {
  for (std::uint64_t s = 0; s < 300; ++s) {
    auto rng = testing::rng_for(s);
    const Graph g = testing::random_graph(rng, 6);
    const bool want = laman_with_redundant_edge(g);
    bool some_deletion = false;
    for (int k = 0; k < g.m(); ++k) some_deletion = some_deletion || has_laman_spanning_subgraph(g.without_edge(k));
    CHECK(want == some_deletion);
    CHECK(want == has_laman_spanning_subgraph(lift(g).graph));
    CHECK(want == has_laman_spanning_subgraph(lift(g, random_spanning_tree(line_graph(g), rng)).graph));
  }
}
