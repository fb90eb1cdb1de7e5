#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fliptrees/errors.hpp"
#include "fliptrees/types.hpp"

namespace fliptrees {

struct TreeEdge {
  int u = 0;
  int v = 0;
  Dist length = 1;
};

// Shape descriptors accepted by build_tree (and by the instance config).
struct PathShape {
  int length = 1;  // number of vertices
};
struct RegularShape {
  int valence = 3;
  int radius = 1;
};
struct ExplicitShape {
  std::vector<TreeEdge> edges;
};
using TreeShape = std::variant<PathShape, RegularShape, ExplicitShape>;

// Finite weighted tree with dense integer vertex ids. Immutable after
// construction; distance queries walk the tree unless build_index() has
// been called, after which they go through an LCA table.
class MetricTree {
 public:
  MetricTree() = default;

  static MetricTree path(int n) {
    if (n < 1) throw ConfigError("path shape needs at least one vertex");
    std::vector<TreeEdge> edges;
    edges.reserve(static_cast<std::size_t>(n) - 1);
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1});
    return from_edges(n, edges);
  }

  // Rooted tree where the root has `valence` children and every other
  // internal vertex has valence-1 children, out to the given radius.
  static MetricTree regular(int valence, int radius) {
    if (valence < 1) throw ConfigError("regular shape needs valence >= 1");
    if (radius < 0) throw ConfigError("regular shape needs radius >= 0");
    std::vector<TreeEdge> edges;
    std::vector<int> frontier = {0};
    int next = 1;
    for (int depth = 0; depth < radius; ++depth) {
      std::vector<int> grown;
      for (int v : frontier) {
        const int children = (depth == 0) ? valence : valence - 1;
        for (int c = 0; c < children; ++c) {
          edges.push_back({v, next, 1});
          grown.push_back(next);
          ++next;
        }
      }
      frontier = std::move(grown);
    }
    return from_edges(next, edges);
  }

  static MetricTree from_edges(int vertex_count, std::vector<TreeEdge> edges) {
    if (vertex_count < 1) throw ConfigError("tree needs at least one vertex");
    if (static_cast<int>(edges.size()) != vertex_count - 1)
      throw ConfigError("tree needs exactly |V|-1 edges, got " +
                        std::to_string(edges.size()) + " for " +
                        std::to_string(vertex_count) + " vertices");
    MetricTree t;
    t.n_ = vertex_count;
    for (const auto& e : edges) {
      if (e.u < 0 || e.u >= vertex_count || e.v < 0 || e.v >= vertex_count)
        throw ConfigError("edge endpoint out of range");
      if (e.u == e.v) throw ConfigError("self-loop in tree edge list");
      if (e.length < 1) throw ConfigError("edge lengths must be >= 1");
    }
    t.edges_ = std::move(edges);
    t.build_adjacency();
    // Connectivity with |V|-1 edges certifies acyclicity as well.
    std::vector<char> seen(static_cast<std::size_t>(vertex_count), 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& [w, len] : t.neighbors(v)) {
        (void)len;
        if (!seen[w]) {
          seen[w] = 1;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    if (reached != vertex_count)
      throw ConfigError("edge list describes a disconnected or cyclic graph");
    return t;
  }

  static MetricTree build(const TreeShape& shape) {
    if (const auto* p = std::get_if<PathShape>(&shape)) return path(p->length);
    if (const auto* r = std::get_if<RegularShape>(&shape))
      return regular(r->valence, r->radius);
    const auto& e = std::get<ExplicitShape>(shape);
    int max_id = 0;
    for (const auto& ed : e.edges) max_id = std::max({max_id, ed.u, ed.v});
    return from_edges(e.edges.empty() ? 1 : max_id + 1, e.edges);
  }

  int vertex_count() const { return n_; }
  const std::vector<TreeEdge>& edges() const { return edges_; }

  std::span<const std::pair<int, Dist>> neighbors(int v) const {
    check_vertex(v);
    return {adj_.data() + adj_off_[v],
            static_cast<std::size_t>(adj_off_[v + 1] - adj_off_[v])};
  }

  // O(n log n) preprocessing; distance queries become O(log n).
  void build_index() {
    if (!up_.empty()) return;
    depth_.assign(n_, 0);
    root_dist_.assign(n_, 0);
    std::vector<int> parent(n_, -1), order;
    order.reserve(n_);
    std::vector<int> stack = {0};
    std::vector<char> seen(n_, 0);
    seen[0] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      for (const auto& [w, len] : neighbors(v)) {
        if (!seen[w]) {
          seen[w] = 1;
          parent[w] = v;
          depth_[w] = depth_[v] + 1;
          root_dist_[w] = root_dist_[v] + len;
          stack.push_back(w);
        }
      }
    }
    levels_ = 1;
    while ((1 << levels_) < std::max(2, n_)) ++levels_;
    up_.assign(static_cast<std::size_t>(levels_) * n_, -1);
    for (int v = 0; v < n_; ++v) up_[v] = parent[v];
    for (int k = 1; k < levels_; ++k)
      for (int v = 0; v < n_; ++v) {
        const int mid = up_[(k - 1) * static_cast<std::size_t>(n_) + v];
        up_[k * static_cast<std::size_t>(n_) + v] =
            mid < 0 ? -1 : up_[(k - 1) * static_cast<std::size_t>(n_) + mid];
      }
  }
  bool has_index() const { return !up_.empty(); }

  int lca(int a, int b) const {
    check_vertex(a);
    check_vertex(b);
    if (up_.empty()) throw Error("lca requires build_index()");
    if (depth_[a] < depth_[b]) std::swap(a, b);
    int diff = depth_[a] - depth_[b];
    for (int k = 0; diff; ++k, diff >>= 1)
      if (diff & 1) a = up_[k * static_cast<std::size_t>(n_) + a];
    if (a == b) return a;
    for (int k = levels_ - 1; k >= 0; --k) {
      const int ua = up_[k * static_cast<std::size_t>(n_) + a];
      const int ub = up_[k * static_cast<std::size_t>(n_) + b];
      if (ua != ub) {
        a = ua;
        b = ub;
      }
    }
    return up_[a];
  }

  Dist distance(int a, int b) const {
    check_vertex(a);
    check_vertex(b);
    if (a == b) return 0;
    if (!up_.empty())
      return root_dist_[a] + root_dist_[b] - 2 * root_dist_[lca(a, b)];
    Dist total = 0;
    walk(a, b, [&](int, Dist len) { total += len; });
    return total;
  }

  // Unique simple path from a to b, inclusive.
  std::vector<int> geodesic(int a, int b) const {
    check_vertex(a);
    check_vertex(b);
    std::vector<int> out = {a};
    if (a != b) walk(a, b, [&](int v, Dist) { out.push_back(v); });
    return out;
  }

  // Nearest-point projection of `a` onto a connected vertex set. The gate
  // vertex is the first subtree vertex on the path from a to any member.
  int project_to_subtree(std::span<const int> subtree, int a) const {
    check_vertex(a);
    if (subtree.empty()) throw Error("projection target is empty");
    std::vector<char> member(n_, 0);
    for (int s : subtree) {
      check_vertex(s);
      member[s] = 1;
    }
    if (!subtree_connected(member, subtree[0]))
      throw Error("projection target is disconnected");
    if (member[a]) return a;
    int gate = -1;
    walk(a, subtree[0], [&](int v, Dist) {
      if (gate < 0 && member[v]) gate = v;
    });
    return gate;
  }

  std::string to_dot(const std::string& name = "tree") const {
    std::string out = "graph " + name + " {\n";
    for (const auto& e : edges_)
      out += "  " + std::to_string(e.u) + " -- " + std::to_string(e.v) +
             " [label=" + std::to_string(e.length) + "];\n";
    out += "}\n";
    return out;
  }

 private:
  void check_vertex(int v) const {
    if (v < 0 || v >= n_)
      throw Error("unknown vertex id " + std::to_string(v));
  }

  void build_adjacency() {
    adj_off_.assign(n_ + 1, 0);
    for (const auto& e : edges_) {
      ++adj_off_[e.u + 1];
      ++adj_off_[e.v + 1];
    }
    for (int v = 0; v < n_; ++v) adj_off_[v + 1] += adj_off_[v];
    adj_.resize(edges_.size() * 2);
    std::vector<std::int32_t> cursor(adj_off_.begin(), adj_off_.end() - 1);
    for (const auto& e : edges_) {
      adj_[cursor[e.u]++] = {e.v, e.length};
      adj_[cursor[e.v]++] = {e.u, e.length};
    }
  }

  // Visits the path from a to b, calling f(vertex, incoming edge length)
  // for every vertex after a.
  template <class F>
  void walk(int a, int b, F&& f) const {
    std::vector<int> parent(n_, -1);
    std::vector<Dist> plen(n_, 0);
    std::vector<int> stack = {a};
    parent[a] = a;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (v == b) break;
      for (const auto& [w, len] : neighbors(v)) {
        if (parent[w] < 0) {
          parent[w] = v;
          plen[w] = len;
          stack.push_back(w);
        }
      }
    }
    std::vector<std::pair<int, Dist>> rev;
    for (int v = b; v != a; v = parent[v]) rev.push_back({v, plen[v]});
    for (auto it = rev.rbegin(); it != rev.rend(); ++it) f(it->first, it->second);
  }

  bool subtree_connected(const std::vector<char>& member, int start) const {
    std::size_t total = 0;
    for (char m : member) total += m;
    std::vector<char> seen(n_, 0);
    std::vector<int> stack = {start};
    seen[start] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& [w, len] : neighbors(v)) {
        (void)len;
        if (member[w] && !seen[w]) {
          seen[w] = 1;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    return reached == total;
  }

  int n_ = 0;
  std::vector<TreeEdge> edges_;
  std::vector<std::int32_t> adj_off_;
  std::vector<std::pair<int, Dist>> adj_;
  // LCA table (optional)
  std::vector<int> depth_;
  std::vector<Dist> root_dist_;
  std::vector<int> up_;
  int levels_ = 0;
};

// Geodesically parametrized line in a host tree: param(t) for t in
// [-radius, radius], with d(param(s), param(t)) = speed * |s - t|.
class TreeLine {
 public:
  TreeLine() = default;

  static TreeLine from_vertices(const MetricTree& host, std::vector<int> verts,
                                Dist speed) {
    if (verts.empty() || verts.size() % 2 == 0)
      throw ConfigError("tree line needs an odd number of vertices");
    if (speed < 1) throw ConfigError("tree line speed must be >= 1");
    TreeLine line = unchecked(std::move(verts), speed);
    std::string why;
    if (!line.validate(host, &why)) throw ConfigError("tree line invalid: " + why);
    return line;
  }

  // No validation; used by negative-control fixtures.
  static TreeLine unchecked(std::vector<int> verts, Dist speed) {
    TreeLine line;
    line.radius_ = static_cast<int>(verts.size() / 2);
    line.verts_ = std::move(verts);
    line.speed_ = speed;
    return line;
  }

  bool validate(const MetricTree& host, std::string* why = nullptr) const {
    std::vector<int> sorted = verts_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      if (why) *why = "parametrization not injective";
      return false;
    }
    for (std::size_t i = 0; i + 1 < verts_.size(); ++i)
      if (host.distance(verts_[i], verts_[i + 1]) != speed_) {
        if (why) *why = "consecutive images not at distance speed";
        return false;
      }
    // Telescoping equality certifies the whole parametrization is geodesic.
    if (verts_.size() > 1 &&
        host.distance(verts_.front(), verts_.back()) !=
            speed_ * static_cast<Dist>(verts_.size() - 1)) {
      if (why) *why = "parametrization backtracks";
      return false;
    }
    return true;
  }

  int radius() const { return radius_; }
  Dist speed() const { return speed_; }
  bool in_window(int t) const { return t >= -radius_ && t <= radius_; }

  int at(int t) const {
    if (!in_window(t))
      throw TruncationError("line parameter " + std::to_string(t) +
                            " outside window [-" + std::to_string(radius_) +
                            ", " + std::to_string(radius_) + "]");
    return verts_[static_cast<std::size_t>(t + radius_)];
  }

  const std::vector<int>& vertices() const { return verts_; }

 private:
  std::vector<int> verts_;
  int radius_ = 0;
  Dist speed_ = 1;
};

inline MetricTree build_tree(const TreeShape& shape) { return MetricTree::build(shape); }

}  // namespace fliptrees
