#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fliptrees/complex.hpp"
#include "fliptrees/errors.hpp"
#include "fliptrees/metric_tree.hpp"
#include "fliptrees/types.hpp"
#include "fliptrees/union_find.hpp"

namespace fliptrees {

struct QuotientOptions {
  // Negative control: skip parameter 0 when gluing at this junction. The
  // resulting quotient contains a four-cycle around the missing vertex.
  std::optional<int> drop_param_zero_at_junction;
};

namespace detail {

// Finds one cycle in a simple graph given as an edge list; returns the
// vertex sequence, empty if acyclic.
inline std::vector<int> find_cycle(
    int n, const std::vector<std::tuple<int, int, Dist>>& edges) {
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (nbr, edge index)
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    adj[std::get<0>(edges[i])].push_back({std::get<1>(edges[i]), i});
    adj[std::get<1>(edges[i])].push_back({std::get<0>(edges[i]), i});
  }
  std::vector<int> parent(n, -1), parent_edge(n, -1), state(n, 0);
  for (int root = 0; root < n; ++root) {
    if (state[root]) continue;
    std::vector<int> stack = {root};
    parent[root] = root;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (state[v]) continue;
      state[v] = 1;
      for (const auto& [w, eidx] : adj[v]) {
        if (eidx == parent_edge[v]) continue;
        if (state[w]) {
          // Back edge: cycle through v .. up .. w.
          std::vector<int> path_v, path_w;
          for (int x = v; x != parent[x]; x = parent[x]) path_v.push_back(x);
          path_v.push_back(parent[path_v.empty() ? v : path_v.back()]);
          std::vector<char> on_v(n, 0);
          for (int x : path_v) on_v[x] = 1;
          int meet = w;
          while (!on_v[meet]) {
            path_w.push_back(meet);
            meet = parent[meet];
          }
          std::vector<int> cycle;
          for (int x : path_v) {
            cycle.push_back(x);
            if (x == meet) break;
          }
          for (auto it = path_w.rbegin(); it != path_w.rend(); ++it)
            cycle.push_back(*it);
          return cycle;
        }
        parent[w] = v;
        parent_edge[w] = eidx;
        stack.push_back(w);
      }
    }
  }
  return {};
}

inline std::string cycle_text(const std::vector<int>& cycle) {
  std::string out = "[";
  for (std::size_t i = 0; i < cycle.size(); ++i)
    out += (i ? " " : "") + std::to_string(cycle[i]);
  return out + "]";
}

}  // namespace detail

class QuotientTree;
namespace detail {
QuotientTree build_one_quotient(const TotalComplex& c, int parity,
                                const QuotientOptions& options);
}

// One of the two quotient trees T_i: disjoint union of the base trees of
// parity-i pieces, glued along parameter-matched boundary-line shadows
// through every opposite-parity piece, with exact metric queries.
class QuotientTree {
 public:
  struct Junction {
    int piece = -1;  // opposite-parity piece the line passes through
    int window = 0;  // glued parameter range [-window, window]
    std::vector<int> classes;  // param t -> class id, indexed t + window
  };

  QuotientTree() = default;

  int parity() const { return parity_; }
  bool empty() const { return members_.empty(); }
  const std::vector<int>& member_pieces() const { return members_; }
  int class_count() const { return class_count_; }
  bool connected() const { return connected_; }

  int class_of(int piece, int base_vertex) const {
    const auto it = member_index_.find(piece);
    if (it == member_index_.end())
      throw Error("piece " + std::to_string(piece) + " has parity != " +
                  std::to_string(parity_));
    const int local = it->second;
    if (base_vertex < 0 || base_vertex >= member_size_[local])
      throw Error("unknown base vertex");
    return vert_class_[member_offset_[local] + base_vertex];
  }

  // Lexicographically smallest (piece, base vertex) of the class.
  std::pair<int, int> class_rep(int cls) const { return members_of(cls).front(); }

  std::vector<std::pair<int, int>> members_of(int cls) const {
    if (cls < 0 || cls >= class_count_) throw Error("unknown class id");
    std::vector<std::pair<int, int>> out;
    for (std::int64_t i = class_members_off_[cls];
         i < class_members_off_[cls + 1]; ++i)
      out.push_back(decode(class_members_[i]));
    return out;
  }

  Dist distance(int c1, int c2) const {
    if (c1 < 0 || c1 >= class_count_ || c2 < 0 || c2 >= class_count_)
      throw Error("unknown class id");
    if (connected_) return tree_.distance(c1, c2);
    if (component_[c1] != component_[c2])
      throw TruncationError("classes in different quotient components");
    // Disconnected quotients are unreachable with the shipped generators;
    // fall back to a search over the loose adjacency.
    std::vector<Dist> dist(class_count_, -1);
    std::priority_queue<std::pair<Dist, int>, std::vector<std::pair<Dist, int>>,
                        std::greater<>>
        pq;
    dist[c1] = 0;
    pq.push({0, c1});
    while (!pq.empty()) {
      const auto [d, v] = pq.top();
      pq.pop();
      if (d != dist[v]) continue;
      if (v == c2) return d;
      for (const auto& [w, len] : loose_adj_[v])
        if (dist[w] < 0 || dist[w] > d + len) {
          dist[w] = d + len;
          pq.push({dist[w], w});
        }
    }
    throw TruncationError("classes in different quotient components");
  }

  // The certified quotient graph as a metric tree (only when connected).
  const MetricTree& tree() const {
    if (!connected_) throw TruncationError("quotient tree is disconnected");
    return tree_;
  }

  // All classes meeting the image of T_v, ascending.
  std::vector<int> piece_image(int piece) const {
    const auto it = member_index_.find(piece);
    if (it == member_index_.end())
      throw Error("piece has the wrong parity for this quotient");
    const int local = it->second;
    std::vector<int> out(member_size_[local]);
    for (int b = 0; b < member_size_[local]; ++b)
      out[b] = vert_class_[member_offset_[local] + b];
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::vector<Junction>& junctions() const { return junctions_; }
  const Junction* junction_for(int piece) const {
    for (const auto& j : junctions_)
      if (j.piece == piece) return &j;
    return nullptr;
  }

  friend QuotientTree detail::build_one_quotient(const TotalComplex& c,
                                                 int parity,
                                                 const QuotientOptions& options);

 private:
  std::pair<int, int> decode(std::int64_t member_desc) const {
    const int local = static_cast<int>(
        std::upper_bound(member_offset_.begin(), member_offset_.end(),
                         member_desc) -
        member_offset_.begin() - 1);
    return {members_[local],
            static_cast<int>(member_desc - member_offset_[local])};
  }

  int parity_ = 1;
  std::vector<int> members_;
  std::map<int, int> member_index_;
  std::vector<std::int64_t> member_offset_;
  std::vector<int> member_size_;
  std::vector<int> vert_class_;
  int class_count_ = 0;
  std::vector<std::int64_t> class_members_off_;
  std::vector<std::int64_t> class_members_;
  MetricTree tree_;
  bool connected_ = true;
  std::vector<int> component_;
  std::vector<std::vector<std::pair<int, Dist>>> loose_adj_;
  std::vector<Junction> junctions_;
};

namespace detail {

inline QuotientTree build_one_quotient(const TotalComplex& c, int parity,
                                       const QuotientOptions& options) {
  const BassSerreTree& bs = c.bs();
  QuotientTree q;
  q.parity_ = parity;
  q.members_ = bs.vertices_of_parity(parity);
  for (std::size_t i = 0; i < q.members_.size(); ++i)
    q.member_index_[q.members_[i]] = static_cast<int>(i);
  q.member_offset_.assign(q.members_.size() + 1, 0);
  q.member_size_.assign(q.members_.size(), 0);
  for (std::size_t i = 0; i < q.members_.size(); ++i) {
    q.member_size_[i] = c.piece(q.members_[i]).base_tree().vertex_count();
    q.member_offset_[i + 1] = q.member_offset_[i] + q.member_size_[i];
  }
  const std::int64_t total = q.member_offset_.back();
  if (total == 0) return q;

  const int window = glue_window(c.radii());
  UnionFind uf(total);
  const auto member_desc = [&](int piece, int base_vertex) {
    return q.member_offset_[q.member_index_.at(piece)] + base_vertex;
  };
  const auto shadow_at = [&](int piece, int junction, int t) {
    const Piece& p = c.piece(piece);
    const int slot = p.slot_for_edge(bs.edge_id(piece, junction));
    return p.line(slot).shadow.at(t);
  };
  const auto line_radius = [&](int piece, int junction) {
    const Piece& p = c.piece(piece);
    return p.line(p.slot_for_edge(bs.edge_id(piece, junction))).radius;
  };

  // Glue rule: through every opposite-parity piece w, same-parameter shadow
  // vertices of every neighbour pair are identified; union-find closes the
  // relation transitively. The window per pair is the intersection of both
  // shadows' parameter ranges with w's fiber window.
  for (int w = 0; w < bs.vertex_count(); ++w) {
    if (bs.parity(w) == parity) continue;
    const auto nbrs = bs.neighbors_sorted(w);
    for (std::size_t i = 0; i < nbrs.size(); ++i)
      for (std::size_t j = i + 1; j < nbrs.size(); ++j) {
        const int pair_window =
            std::min({window, line_radius(nbrs[i], w), line_radius(nbrs[j], w)});
        for (int t = -pair_window; t <= pair_window; ++t) {
          if (t == 0 && options.drop_param_zero_at_junction == w) continue;
          uf.unite(member_desc(nbrs[i], shadow_at(nbrs[i], w, t)),
                   member_desc(nbrs[j], shadow_at(nbrs[j], w, t)));
        }
      }
  }

  // Canonical class numbering by smallest member description.
  q.vert_class_.assign(total, -1);
  std::vector<std::int64_t> reps;
  for (std::int64_t d = 0; d < total; ++d)
    if (uf.find(d) == d) {
      q.vert_class_[d] = static_cast<int>(reps.size());
      reps.push_back(d);
    }
  for (std::int64_t d = 0; d < total; ++d)
    if (q.vert_class_[d] < 0) q.vert_class_[d] = q.vert_class_[uf.find(d)];
  q.class_count_ = static_cast<int>(reps.size());
  q.class_members_off_.assign(q.class_count_ + 1, 0);
  for (std::int64_t d = 0; d < total; ++d) ++q.class_members_off_[q.vert_class_[d] + 1];
  for (int cls = 0; cls < q.class_count_; ++cls)
    q.class_members_off_[cls + 1] += q.class_members_off_[cls];
  q.class_members_.resize(total);
  {
    std::vector<std::int64_t> cursor(q.class_members_off_.begin(),
                                     q.class_members_off_.end() - 1);
    for (std::int64_t d = 0; d < total; ++d)
      q.class_members_[cursor[q.vert_class_[d]]++] = d;
  }

  // A class containing two vertices of one member tree would fold that
  // tree's image; certify injectivity per member tree.
  for (int cls = 0; cls < q.class_count_; ++cls) {
    int last_piece = -1;
    for (std::int64_t i = q.class_members_off_[cls];
         i < q.class_members_off_[cls + 1]; ++i) {
      const int piece = q.decode(q.class_members_[i]).first;
      if (piece == last_piece)
        throw ModelViolation("quotient class folds member tree " +
                             std::to_string(piece));
      last_piece = piece;
    }
  }

  // Inherited edge set: member tree edges pushed to classes, deduplicated.
  std::vector<std::tuple<int, int, Dist>> edges;
  for (std::size_t i = 0; i < q.members_.size(); ++i) {
    const auto& tree = c.piece(q.members_[i]).base_tree();
    for (const auto& e : tree.edges()) {
      const int a = q.vert_class_[q.member_offset_[i] + e.u];
      const int b = q.vert_class_[q.member_offset_[i] + e.v];
      if (a == b)
        throw ModelViolation("member tree edge collapsed in quotient");
      edges.emplace_back(std::min(a, b), std::max(a, b), e.length);
    }
  }
  std::sort(edges.begin(), edges.end());
  std::size_t kept = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i > 0 && std::get<0>(edges[i]) == std::get<0>(edges[i - 1]) &&
        std::get<1>(edges[i]) == std::get<1>(edges[i - 1])) {
      if (std::get<2>(edges[i]) != std::get<2>(edges[i - 1]))
        throw ModelViolation("glued edges disagree on length");
      continue;
    }
    edges[kept++] = edges[i];
  }
  edges.resize(kept);

  // Tree certification: acyclic always (fatal otherwise), connected
  // tracked and required by the fixtures.
  std::vector<std::vector<int>> adj(q.class_count_);
  for (const auto& [a, b, len] : edges) {
    (void)len;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  q.component_.assign(q.class_count_, -1);
  int components = 0;
  for (int v = 0; v < q.class_count_; ++v) {
    if (q.component_[v] >= 0) continue;
    std::vector<int> stack = {v};
    q.component_[v] = components;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int w : adj[x])
        if (q.component_[w] < 0) {
          q.component_[w] = components;
          stack.push_back(w);
        }
    }
    ++components;
  }
  if (static_cast<std::int64_t>(edges.size()) !=
      q.class_count_ - components) {
    const auto cycle = find_cycle(q.class_count_, edges);
    throw ModelViolation("quotient T" + std::to_string(parity) +
                         " contains a cycle " + cycle_text(cycle));
  }
  q.connected_ = components == 1;
  if (q.connected_) {
    std::vector<TreeEdge> tree_edges;
    tree_edges.reserve(edges.size());
    for (const auto& [a, b, len] : edges) tree_edges.push_back({a, b, len});
    q.tree_ = MetricTree::from_edges(q.class_count_, std::move(tree_edges));
    q.tree_.build_index();
  } else {
    q.loose_adj_.assign(q.class_count_, {});
    for (const auto& [a, b, len] : edges) {
      q.loose_adj_[a].push_back({b, len});
      q.loose_adj_[b].push_back({a, len});
    }
  }

  // Junction lines: the glued line through every opposite-parity piece,
  // read off the smallest neighbour and certified injective.
  for (int w = 0; w < bs.vertex_count(); ++w) {
    if (bs.parity(w) == parity) continue;
    const auto nbrs = bs.neighbors_sorted(w);
    if (nbrs.empty()) continue;
    QuotientTree::Junction junction;
    junction.piece = w;
    junction.window = std::min(window, line_radius(nbrs[0], w));
    for (int t = -junction.window; t <= junction.window; ++t)
      junction.classes.push_back(
          q.vert_class_[member_desc(nbrs[0], shadow_at(nbrs[0], w, t))]);
    std::vector<int> sorted = junction.classes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ModelViolation("glued line through junction " + std::to_string(w) +
                           " is not injective");
    q.junctions_.push_back(std::move(junction));
  }
  return q;
}

}  // namespace detail

inline std::pair<QuotientTree, QuotientTree> build_quotient_trees(
    const TotalComplex& c, const QuotientOptions& options = {}) {
  return {detail::build_one_quotient(c, 1, options),
          detail::build_one_quotient(c, 2, options)};
}

struct TreenessStep {
  int piece = -1;           // member tree attached at this step
  std::vector<int> junctions;  // junctions whose gluings became active
  std::int64_t merges = 0;
  std::int64_t classes = 0;
  std::int64_t edges = 0;
};

struct TreenessTrace {
  int parity = 1;
  std::vector<TreenessStep> steps;
};

// Replays the quotient construction one member tree at a time, certifying
// acyclicity after every gluing step. Throws at the first violation.
inline TreenessTrace incremental_treeness_trace(
    const TotalComplex& c, int parity, const QuotientOptions& options = {}) {
  const BassSerreTree& bs = c.bs();
  TreenessTrace trace;
  trace.parity = parity;
  const auto members = bs.vertices_of_parity(parity);
  if (members.empty()) return trace;

  std::map<int, std::int64_t> offset;
  std::int64_t total = 0;
  for (int m : members) {
    offset[m] = total;
    total += c.piece(m).base_tree().vertex_count();
  }
  const int window = glue_window(c.radii());
  UnionFind uf(total);
  const auto shadow_at = [&](int piece, int junction, int t) {
    const Piece& p = c.piece(piece);
    return p.line(p.slot_for_edge(bs.edge_id(piece, junction))).shadow.at(t);
  };
  const auto pair_window = [&](int u, int a, int w) {
    const auto radius = [&](int piece) {
      const Piece& p = c.piece(piece);
      return p.line(p.slot_for_edge(bs.edge_id(piece, w))).radius;
    };
    return std::min({window, radius(u), radius(a)});
  };

  // BFS over members (linked through shared junctions) from the smallest.
  std::vector<int> order;
  std::vector<char> attached(bs.vertex_count(), 0);
  std::vector<int> queue = {members.front()};
  attached[members.front()] = 1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.erase(queue.begin());
    order.push_back(u);
    for (int w : bs.neighbors_sorted(u))
      for (int u2 : bs.neighbors_sorted(w))
        if (bs.parity(u2) == parity && !attached[u2]) {
          attached[u2] = 1;
          queue.push_back(u2);
        }
  }
  if (static_cast<int>(order.size()) != static_cast<int>(members.size()))
    order = members;  // disconnected pattern: fall back to id order

  std::fill(attached.begin(), attached.end(), 0);
  for (std::size_t step = 0; step < order.size(); ++step) {
    const int u = order[step];
    attached[u] = 1;
    TreenessStep record;
    record.piece = u;
    for (int w : bs.neighbors_sorted(u)) {
      bool active = false;
      for (int a : bs.neighbors_sorted(w)) {
        if (a == u || !attached[a]) continue;
        active = true;
        const int pw = pair_window(u, a, w);
        for (int t = -pw; t <= pw; ++t) {
          if (t == 0 && options.drop_param_zero_at_junction == w) continue;
          if (uf.unite(offset.at(u) + shadow_at(u, w, t),
                       offset.at(a) + shadow_at(a, w, t)))
            ++record.merges;
        }
      }
      if (active) record.junctions.push_back(w);
    }

    // Count classes and deduplicated edges over the attached prefix.
    std::map<std::int64_t, int> cls;
    std::int64_t class_count = 0;
    const auto class_id = [&](std::int64_t d) {
      const std::int64_t root = uf.find(d);
      const auto it = cls.find(root);
      if (it != cls.end()) return it->second;
      cls[root] = static_cast<int>(class_count);
      return static_cast<int>(class_count++);
    };
    std::vector<std::tuple<int, int, Dist>> edges;
    for (std::size_t i = 0; i <= step; ++i) {
      const int m = order[i];
      for (const auto& e : c.piece(m).base_tree().edges()) {
        const int a = class_id(offset.at(m) + e.u);
        const int b = class_id(offset.at(m) + e.v);
        if (a == b)
          throw ModelViolation("member tree edge collapsed at step " +
                               std::to_string(step));
        edges.emplace_back(std::min(a, b), std::max(a, b), e.length);
      }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const auto& x, const auto& y) {
                              return std::get<0>(x) == std::get<0>(y) &&
                                     std::get<1>(x) == std::get<1>(y);
                            }),
                edges.end());
    record.classes = class_count;
    record.edges = static_cast<std::int64_t>(edges.size());
    UnionFind comp(class_count);
    for (const auto& [a, b, len] : edges) {
      (void)len;
      comp.unite(a, b);
    }
    if (record.edges != record.classes - comp.class_count()) {
      const auto cycle =
          detail::find_cycle(static_cast<int>(class_count), edges);
      throw ModelViolation("acyclicity violated at step " +
                           std::to_string(step) + ", cycle " +
                           detail::cycle_text(cycle));
    }
    trace.steps.push_back(std::move(record));
  }
  return trace;
}

}  // namespace fliptrees
