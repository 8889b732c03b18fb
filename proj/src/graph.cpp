#include "clockrig/graph.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <string>

#include "clockrig/error.hpp"

namespace clockrig {

namespace {

void check_vertex(int n, int v, const char* what) {
  if (v < 0 || v >= n) {
    std::ostringstream msg;
    msg << what << ": vertex " << v + 1 << " outside 1.." << n;
    throw Error(msg.str());
  }
}

}  // namespace

Graph::Graph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  if (n_ < 0) throw Error("graph: negative vertex count");
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges_) {
    check_vertex(n_, e.u, "graph");
    check_vertex(n_, e.v, "graph");
    if (e.u == e.v) throw Error("graph: self-loop at vertex " + std::to_string(e.u + 1));
    if (!seen.insert({std::min(e.u, e.v), std::max(e.u, e.v)}).second) {
      throw Error("graph: duplicate edge {" + std::to_string(e.u + 1) + "," +
                  std::to_string(e.v + 1) + "}");
    }
  }
}

int Graph::edge_index(int a, int b) const {
  for (int k = 0; k < m(); ++k) {
    const Edge& e = edges_[k];
    if ((e.u == a && e.v == b) || (e.u == b && e.v == a)) return k;
  }
  return -1;
}

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(n_);
  for (const Edge& e : edges_) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  return adj;
}

std::vector<std::vector<int>> Graph::components() const {
  const auto adj = adjacency();
  std::vector<int> label(n_, -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n_; ++s) {
    if (label[s] >= 0) continue;
    std::vector<int> comp;
    std::queue<int> q;
    q.push(s);
    label[s] = static_cast<int>(out.size());
    while (!q.empty()) {
      int x = q.front();
      q.pop();
      comp.push_back(x);
      for (int y : adj[x]) {
        if (label[y] < 0) {
          label[y] = label[s];
          q.push(y);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

Graph Graph::without_edge(int k) const {
  if (k < 0 || k >= m()) throw Error("graph: edge index out of range");
  std::vector<Edge> rest = edges_;
  rest.erase(rest.begin() + k);
  return Graph(n_, std::move(rest));
}

Digraph::Digraph(int n, std::vector<Edge> arcs) : n_(n), arcs_(std::move(arcs)) {
  if (n_ < 0) throw Error("digraph: negative vertex count");
  std::set<std::pair<int, int>> seen;
  for (const Edge& a : arcs_) {
    check_vertex(n_, a.u, "digraph");
    check_vertex(n_, a.v, "digraph");
    if (a.u == a.v) throw Error("digraph: self-loop at vertex " + std::to_string(a.u + 1));
    if (!seen.insert({a.u, a.v}).second) {
      throw Error("digraph: duplicate arc (" + std::to_string(a.u + 1) + "," +
                  std::to_string(a.v + 1) + ")");
    }
  }
}

Digraph Digraph::bidirectional(const Graph& g) {
  std::vector<Edge> arcs;
  arcs.reserve(2 * g.m());
  for (const Edge& e : g.edges()) {
    arcs.push_back({e.u, e.v});
    arcs.push_back({e.v, e.u});
  }
  return Digraph(g.n(), std::move(arcs));
}

int Digraph::arc_index(int from, int to) const {
  for (int k = 0; k < arc_count(); ++k) {
    if (arcs_[k].u == from && arcs_[k].v == to) return k;
  }
  return -1;
}

bool Digraph::is_bidirectional() const {
  std::set<std::pair<int, int>> present;
  for (const Edge& a : arcs_) present.insert({a.u, a.v});
  return std::all_of(arcs_.begin(), arcs_.end(),
                     [&](const Edge& a) { return present.count({a.v, a.u}) > 0; });
}

Graph Digraph::disoriented() const {
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen;
  for (const Edge& a : arcs_) {
    if (seen.insert({std::min(a.u, a.v), std::max(a.u, a.v)}).second) edges.push_back(a);
  }
  return Graph(n_, std::move(edges));
}

Graph complete_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
  return Graph(n, std::move(edges));
}

Graph path_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph(n, std::move(edges));
}

Graph cycle_graph(int n) {
  if (n < 3) throw Error("cycle graph needs n >= 3");
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({std::min(i, (i + 1) % n), std::max(i, (i + 1) % n)});
  return Graph(n, std::move(edges));
}

Graph wheel_graph(int n) {
  if (n < 4) throw Error("wheel graph needs n >= 4");
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.push_back({0, i});
  for (int i = 1; i < n; ++i) {
    int j = i + 1 < n ? i + 1 : 1;
    edges.push_back({std::min(i, j), std::max(i, j)});
  }
  return Graph(n, std::move(edges));
}

Graph random_connected_graph(int n, double extra_edge_prob, std::mt19937_64& rng) {
  if (n < 1) throw Error("random graph needs n >= 1");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::set<std::pair<int, int>> present;
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    int a = order[i];
    int b = order[pick(rng)];
    present.insert({std::min(a, b), std::max(a, b)});
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (present.count({i, j})) continue;
      if (coin(rng) < extra_edge_prob) present.insert({i, j});
    }
  }
  for (auto [a, b] : present) edges.push_back({a, b});
  return Graph(n, std::move(edges));
}

Graph line_graph(const Graph& g) {
  if (g.m() == 0) throw Error("line graph: no edges");
  std::vector<Edge> edges;
  for (int k = 0; k < g.m(); ++k) {
    for (int l = k + 1; l < g.m(); ++l) {
      const Edge& a = g.edge(k);
      const Edge& b = g.edge(l);
      if (a.u == b.u || a.u == b.v || a.v == b.u || a.v == b.v) edges.push_back({k, l});
    }
  }
  return Graph(g.m(), std::move(edges));
}

namespace {

void require_connected(const Graph& g, const char* what) {
  auto comps = g.components();
  if (comps.size() <= 1) return;
  std::ostringstream msg;
  msg << what << ": graph is disconnected, components:";
  for (const auto& c : comps) {
    msg << " {";
    for (std::size_t i = 0; i < c.size(); ++i) msg << (i ? "," : "") << c[i] + 1;
    msg << "}";
  }
  throw Error(msg.str());
}

}  // namespace

std::vector<Edge> spanning_tree(const Graph& g) {
  require_connected(g, "spanning tree");
  std::vector<Edge> tree;
  if (g.n() == 0) return tree;
  const auto adj = g.adjacency();
  std::vector<bool> seen(g.n(), false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    int x = q.front();
    q.pop();
    for (int y : adj[x]) {
      if (seen[y]) continue;
      seen[y] = true;
      tree.push_back({x, y});
      q.push(y);
    }
  }
  return tree;
}

std::vector<Edge> random_spanning_tree(const Graph& g, std::mt19937_64& rng) {
  require_connected(g, "spanning tree");
  std::vector<int> order(g.m());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> parent(g.n());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<Edge> tree;
  for (int k : order) {
    const Edge& e = g.edge(k);
    int a = find(e.u), b = find(e.v);
    if (a == b) continue;
    parent[a] = b;
    tree.push_back(e);
  }
  return tree;
}

LiftedGraph lift(const Graph& g) {
  if (g.m() == 0) throw Error("lift: no edges");
  require_connected(g, "lift");
  return lift(g, spanning_tree(line_graph(g)));
}

LiftedGraph lift(const Graph& g, const std::vector<Edge>& line_tree) {
  if (g.m() == 0) throw Error("lift: no edges");
  require_connected(g, "lift");
  if (static_cast<int>(line_tree.size()) != g.m() - 1) {
    throw Error("lift: line-graph tree must have m-1 edges");
  }
  LiftedGraph out;
  out.base = g;
  const int n = g.n();
  for (int k = 0; k < g.m(); ++k) {
    out.attachments.push_back({g.edge(k).u, n + k});
    out.attachments.push_back({g.edge(k).v, n + k});
  }
  for (const Edge& t : line_tree) {
    const Edge& a = g.edge(t.u);
    const Edge& b = g.edge(t.v);
    if (!(a.u == b.u || a.u == b.v || a.v == b.u || a.v == b.v)) {
      throw Error("lift: tree edge joins base edges without a common vertex");
    }
    out.tree.push_back({n + t.u, n + t.v});
  }
  std::vector<Edge> all = out.attachments;
  all.insert(all.end(), out.tree.begin(), out.tree.end());
  out.graph = Graph(n + g.m(), std::move(all));
  if (!out.graph.connected()) throw Error("lift: line-graph tree does not span");
  return out;
}

namespace {

// Pebble game state for (k,l) = (2,3). Each accepted edge is oriented away from
// the vertex whose pebble covers it.
class PebbleGame {
 public:
  explicit PebbleGame(int n) : pebbles_(n, 2), out_(n) {}

  bool try_insert(int u, int v) {
    while (pebbles_[u] < 2) {
      if (!fetch(u, v)) return false;
    }
    while (pebbles_[v] < 2) {
      if (!fetch(v, u)) return false;
    }
    // four pebbles on {u,v}; the fourth certifies independence, one is spent.
    --pebbles_[u];
    out_[u].push_back(v);
    return true;
  }

 private:
  // Moves one free pebble to `root` along reversed out-edges, never touching `keep`.
  bool fetch(int root, int keep) {
    const int n = static_cast<int>(pebbles_.size());
    std::vector<int> from(n, -2);
    from[root] = -1;
    from[keep] = -1;
    std::vector<int> stack{root};
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      for (int y : out_[x]) {
        if (from[y] != -2) continue;
        from[y] = x;
        if (pebbles_[y] > 0) {
          // reverse the path root -> ... -> y
          int cur = y;
          while (cur != root) {
            int prev = from[cur];
            auto& fwd = out_[prev];
            fwd.erase(std::find(fwd.begin(), fwd.end(), cur));
            out_[cur].push_back(prev);
            cur = prev;
          }
          --pebbles_[y];
          ++pebbles_[root];
          return true;
        }
        stack.push_back(y);
      }
    }
    return false;
  }

  std::vector<int> pebbles_;
  std::vector<std::vector<int>> out_;
};

}  // namespace

PebbleGameResult pebble_game(const Graph& g) {
  PebbleGame game(g.n());
  PebbleGameResult result;
  for (int k = 0; k < g.m(); ++k) {
    if (game.try_insert(g.edge(k).u, g.edge(k).v)) {
      result.independent.push_back(k);
    } else {
      result.redundant.push_back(k);
    }
  }
  return result;
}

bool has_laman_spanning_subgraph(const Graph& g) {
  if (g.n() < 2) throw Error("Laman test needs n >= 2");
  return pebble_game(g).rank() == 2 * g.n() - 3;
}

bool laman_with_redundant_edge(const Graph& g) {
  return has_laman_spanning_subgraph(g) && g.m() > 2 * g.n() - 3;
}

Graph vertex_addition(const Graph& g, int a, int b) {
  check_vertex(g.n(), a, "vertex addition");
  check_vertex(g.n(), b, "vertex addition");
  if (a == b) throw Error("vertex addition: anchors must be distinct");
  std::vector<Edge> edges = g.edges();
  edges.push_back({a, g.n()});
  edges.push_back({b, g.n()});
  return Graph(g.n() + 1, std::move(edges));
}

Graph edge_splitting(const Graph& g, int edge_a, int edge_b, int third) {
  check_vertex(g.n(), edge_a, "edge splitting");
  check_vertex(g.n(), edge_b, "edge splitting");
  check_vertex(g.n(), third, "edge splitting");
  int k = g.edge_index(edge_a, edge_b);
  if (k < 0) {
    throw Error("edge splitting: {" + std::to_string(edge_a + 1) + "," +
                std::to_string(edge_b + 1) + "} is not an edge");
  }
  if (third == edge_a || third == edge_b) {
    throw Error("edge splitting: third vertex must differ from the split edge");
  }
  std::vector<Edge> edges = g.edges();
  edges.erase(edges.begin() + k);
  const int w = g.n();
  edges.push_back({edge_a, w});
  edges.push_back({edge_b, w});
  edges.push_back({third, w});
  return Graph(g.n() + 1, std::move(edges));
}

Graph henneberg_extend(const Graph& g, const HennebergStep& step) {
  if (const auto* add = std::get_if<VertexAddition>(&step)) {
    return vertex_addition(g, add->a, add->b);
  }
  const auto& split = std::get<EdgeSplit>(step);
  return edge_splitting(g, split.edge_a, split.edge_b, split.third);
}

}  // namespace clockrig
