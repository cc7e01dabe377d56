// Agent-network graphs: standard topologies plus seeded Erdos-Renyi sampling,
// with an edge-list text format. Nodes are 0-indexed in memory and 1-indexed
// in any printed or serialized form.

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dzo/rng.hpp"

namespace dzo {

struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // normalized i < j, no self-loops
  Eigen::MatrixXd adjacency;               // symmetric 0/1, zero diagonal
  bool connected = true;

  int degree(int i) const { return static_cast<int>(adjacency.row(i).sum() + 0.5); }
};

enum class GraphKind { complete, path, cycle, star, grid2d, erdos_renyi };

inline GraphKind graph_kind_from_string(const std::string& s) {
  if (s == "complete") return GraphKind::complete;
  if (s == "path") return GraphKind::path;
  if (s == "cycle") return GraphKind::cycle;
  if (s == "star") return GraphKind::star;
  if (s == "grid2d") return GraphKind::grid2d;
  if (s == "erdos_renyi") return GraphKind::erdos_renyi;
  throw std::invalid_argument("unknown graph kind: " + s);
}

inline std::string to_string(GraphKind k) {
  switch (k) {
    case GraphKind::complete: return "complete";
    case GraphKind::path: return "path";
    case GraphKind::cycle: return "cycle";
    case GraphKind::star: return "star";
    case GraphKind::grid2d: return "grid2d";
    case GraphKind::erdos_renyi: return "erdos_renyi";
  }
  return "?";
}

namespace detail {

inline bool is_connected(int n, const std::vector<std::vector<int>>& adj) {
  if (n <= 1) return true;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

}  // namespace detail

inline Graph graph_from_edges(int n, std::vector<std::pair<int, int>> edges) {
  if (n < 1) throw std::invalid_argument("graph needs n >= 1");
  for (auto& [a, b] : edges) {
    if (a == b) throw std::invalid_argument("self-loops are not allowed");
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("edge endpoint out of range");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Graph g;
  g.n = n;
  g.edges = std::move(edges);
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : g.edges) {
    g.adjacency(a, b) = 1.0;
    g.adjacency(b, a) = 1.0;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  g.connected = detail::is_connected(n, adj);
  return g;
}

inline Graph make_graph(GraphKind kind, int n, double p = 0.0, std::uint64_t seed = 0) {
  if (n < 1) throw std::invalid_argument("graph needs n >= 1");
  std::vector<std::pair<int, int>> edges;
  switch (kind) {
    case GraphKind::complete:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      break;
    case GraphKind::path:
      for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      break;
    case GraphKind::cycle:
      if (n < 3) throw std::invalid_argument("cycle needs n >= 3");
      for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      edges.emplace_back(0, n - 1);
      break;
    case GraphKind::star:
      if (n < 2) throw std::invalid_argument("star needs n >= 2");
      for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
      break;
    case GraphKind::grid2d: {
      const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
      if (side * side != n) throw std::invalid_argument("grid2d needs a perfect-square n");
      auto id = [side](int r, int c) { return r * side + c; };
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
          if (c + 1 < side) edges.emplace_back(id(r, c), id(r, c + 1));
          if (r + 1 < side) edges.emplace_back(id(r, c), id(r + 1, c));
        }
      break;
    }
    case GraphKind::erdos_renyi: {
      if (p < 0.0 || p > 1.0) throw std::invalid_argument("erdos_renyi needs p in [0,1]");
      RngStream stream(seed);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (stream.u01() < p) edges.emplace_back(i, j);
      break;
    }
  }
  return graph_from_edges(n, std::move(edges));
}

// Edge-list text format: first line "n", then one "i j" pair per line,
// 1-indexed to match displayed node ids.
inline void write_edge_list(const Graph& g, std::ostream& out) {
  out << g.n << "\n";
  for (const auto& [a, b] : g.edges) out << (a + 1) << " " << (b + 1) << "\n";
}

inline std::string to_edge_list(const Graph& g) {
  std::ostringstream out;
  write_edge_list(g, out);
  return out.str();
}

inline Graph read_edge_list(std::istream& in) {
  int n = 0;
  if (!(in >> n)) throw std::invalid_argument("edge list: missing node count");
  std::vector<std::pair<int, int>> edges;
  int a = 0, b = 0;
  while (in >> a >> b) edges.emplace_back(a - 1, b - 1);
  return graph_from_edges(n, std::move(edges));
}

inline Graph graph_from_edge_list(const std::string& text) {
  std::istringstream in(text);
  return read_edge_list(in);
}

}  // namespace dzo
