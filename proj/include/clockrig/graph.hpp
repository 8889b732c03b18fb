#pragma once

// Graph types and the combinatorial side of rigidity: line graphs, spanning
// trees, the edge-vertex lift used to turn clock constraints into bearing
// constraints, the (2,3) pebble game and Henneberg moves.
//
// Vertices are 0-based internally. The JSON layer converts to the 1-based
// numbering used in files.

#include <compare>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

namespace clockrig {

struct Edge {
  int u = 0;
  int v = 0;

  auto operator<=>(const Edge&) const = default;
};

// Undirected simple graph. Edge index k is the position in the construction
// list and is the row index used by every rigidity matrix built from it.
class Graph {
 public:
  Graph() = default;
  Graph(int n, std::vector<Edge> edges);

  int n() const { return n_; }
  int m() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int k) const { return edges_.at(k); }

  bool has_edge(int a, int b) const { return edge_index(a, b) >= 0; }
  // Index of {a,b} in the edge list, or -1.
  int edge_index(int a, int b) const;

  // Sorted neighbour lists.
  std::vector<std::vector<int>> adjacency() const;
  // Vertex sets of the connected components, each sorted, ordered by smallest vertex.
  std::vector<std::vector<int>> components() const;
  bool connected() const { return components().size() <= 1; }

  Graph without_edge(int k) const;

  bool operator==(const Graph& other) const = default;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
};

// Directed simple graph; arcs are (from, to) pairs stored in Edge{u=from, v=to}.
class Digraph {
 public:
  Digraph() = default;
  Digraph(int n, std::vector<Edge> arcs);

  // Both orientations of every edge, ordered (u_1,v_1),(v_1,u_1),(u_2,v_2),...
  static Digraph bidirectional(const Graph& g);

  int n() const { return n_; }
  int arc_count() const { return static_cast<int>(arcs_.size()); }
  const std::vector<Edge>& arcs() const { return arcs_; }
  const Edge& arc(int k) const { return arcs_.at(k); }
  int arc_index(int from, int to) const;

  bool is_bidirectional() const;
  // Undirected graph obtained by forgetting orientation; edges appear in order of
  // first occurrence and keep the orientation of that first arc.
  Graph disoriented() const;

  bool operator==(const Digraph& other) const = default;

 private:
  int n_ = 0;
  std::vector<Edge> arcs_;
};

Graph complete_graph(int n);
Graph path_graph(int n);
Graph cycle_graph(int n);
// Hub vertex 0 joined to a cycle on the remaining n-1 vertices.
Graph wheel_graph(int n);
// Random spanning tree plus each remaining pair with probability `extra_edge_prob`.
Graph random_connected_graph(int n, double extra_edge_prob, std::mt19937_64& rng);

Graph line_graph(const Graph& g);

// BFS tree from vertex 0, neighbours taken in ascending order.
std::vector<Edge> spanning_tree(const Graph& g);
// Uniformly shuffled Kruskal tree; used to check that verdicts do not depend on
// which tree is picked.
std::vector<Edge> random_spanning_tree(const Graph& g, std::mt19937_64& rng);

// Base graph G plus one vertex per edge (vertex n + k for edge k), attachment
// edges {u_k, n+k}, {v_k, n+k} and a spanning tree of the line graph on the
// edge vertices.
struct LiftedGraph {
  Graph base;
  Graph graph;
  std::vector<Edge> attachments;
  std::vector<Edge> tree;

  int edge_vertex(int k) const { return base.n() + k; }
};

LiftedGraph lift(const Graph& g);
// `line_tree` uses line-graph vertex indices (base edge indices).
LiftedGraph lift(const Graph& g, const std::vector<Edge>& line_tree);

struct PebbleGameResult {
  std::vector<int> independent;  // edge indices accepted by the game
  std::vector<int> redundant;    // edge indices rejected
  int rank() const { return static_cast<int>(independent.size()); }
};

// (2,3)-pebble game over the edges in list order.
PebbleGameResult pebble_game(const Graph& g);
bool has_laman_spanning_subgraph(const Graph& g);
bool laman_with_redundant_edge(const Graph& g);

struct VertexAddition {
  int a = 0;
  int b = 0;
};

struct EdgeSplit {
  int edge_a = 0;
  int edge_b = 0;
  int third = 0;
};

using HennebergStep = std::variant<VertexAddition, EdgeSplit>;

// New vertex n joined to a and b.
Graph vertex_addition(const Graph& g, int a, int b);
// Removes {edge_a, edge_b}; new vertex n joined to edge_a, edge_b and third.
Graph edge_splitting(const Graph& g, int edge_a, int edge_b, int third);
Graph henneberg_extend(const Graph& g, const HennebergStep& step);

}  // namespace clockrig
