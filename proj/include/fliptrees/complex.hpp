#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "fliptrees/errors.hpp"
#include "fliptrees/metric_tree.hpp"
#include "fliptrees/piece.hpp"
#include "fliptrees/rng.hpp"
#include "fliptrees/types.hpp"
#include "fliptrees/union_find.hpp"

namespace fliptrees {

// The Bass-Serre tree T0 with its parity bipartition: vertices in the same
// class are at even distance from each other.
class BassSerreTree {
 public:
  BassSerreTree() = default;

  explicit BassSerreTree(MetricTree t) : tree_(std::move(t)) {
    for (const auto& e : tree_.edges())
      if (e.length != 1)
        throw ConfigError("Bass-Serre tree must have unit edge lengths");
    tree_.build_index();
    parity_.assign(tree_.vertex_count(), 0);
    std::vector<int> stack = {0};
    parity_[0] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& [w, len] : tree_.neighbors(v)) {
        (void)len;
        if (parity_[w] == 0) {
          parity_[w] = 3 - parity_[v];
          stack.push_back(w);
        }
      }
    }
    for (int id = 0; id < static_cast<int>(tree_.edges().size()); ++id) {
      const auto& e = tree_.edges()[id];
      edge_id_[{std::min(e.u, e.v), std::max(e.u, e.v)}] = id;
    }
  }

  const MetricTree& tree() const { return tree_; }
  int vertex_count() const { return tree_.vertex_count(); }
  int parity(int v) const { return parity_.at(v); }

  int edge_id(int u, int v) const {
    const auto it = edge_id_.find({std::min(u, v), std::max(u, v)});
    if (it == edge_id_.end()) throw Error("no Bass-Serre edge between pieces");
    return it->second;
  }
  const TreeEdge& edge(int id) const { return tree_.edges().at(id); }

  std::vector<int> neighbors_sorted(int v) const {
    std::vector<int> out;
    for (const auto& [w, len] : tree_.neighbors(v)) {
      (void)len;
      out.push_back(w);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<int> vertices_of_parity(int i) const {
    std::vector<int> out;
    for (int v = 0; v < vertex_count(); ++v)
      if (parity_[v] == i) out.push_back(v);
    return out;
  }

 private:
  MetricTree tree_;
  std::vector<int> parity_;
  std::map<std::pair<int, int>, int> edge_id_;
};

// A point of the total complex described inside one piece.
struct ComplexVertex {
  int piece = 0;
  PieceVertex point;
  int z = 0;

  bool operator==(const ComplexVertex&) const = default;
};

// Flip rule across a glued boundary plane: the line parameter and the fiber
// coordinate swap. An involution on in-window plane points; defined after
// TotalComplex below.
class TotalComplex;
inline ComplexVertex flip_image(const TotalComplex& c, const ComplexVertex& x,
                                int bs_edge);

struct BuildLog {
  std::int64_t descriptions = 0;
  std::int64_t canonical = 0;
  std::int64_t edges = 0;
  std::int64_t duplicate_edges_removed = 0;
  std::int64_t identified_pairs = 0;
  std::int64_t skipped_out_of_window = 0;
  std::vector<std::int64_t> identified_per_edge;
  Dist rho_hat = 0;
  bool all_unit = true;
};

struct DoublingReport {
  struct Row {
    std::int64_t x = 0, y = 0;
    Dist d_small = 0, d_big = 0;
  };
  std::vector<Row> rows;
  std::vector<std::size_t> disagreements;  // indices into rows

  double disagreement_fraction() const {
    return rows.empty() ? 0.0
                        : static_cast<double>(disagreements.size()) /
                              static_cast<double>(rows.size());
  }
};

// Finite model of the universal cover: one weighted graph over canonical
// vertex ids. Descriptions (piece, point, z) are resolved through a
// union-find over flip identifications; the canonical representative of a
// glued vertex is its lexicographically smallest description.
class TotalComplex {
 public:
  TotalComplex() = default;

  const BassSerreTree& bs() const { return bs_; }
  const Piece& piece(int v) const { return pieces_.at(v); }
  int piece_count() const { return static_cast<int>(pieces_.size()); }
  const Radii& radii() const { return radii_; }
  const BuildLog& log() const { return log_; }
  int mu() const { return mu_; }
  int lip() const { return lip_; }
  Dist rho_hat() const { return log_.rho_hat; }
  bool all_unit() const { return log_.all_unit; }

  std::int64_t vertex_count() const { return n_; }
  std::int64_t edge_count() const { return log_.edges; }

  std::int64_t desc_id(const ComplexVertex& x) const {
    const Piece& p = pieces_.at(x.piece);
    if (x.z < -radii_.z || x.z > radii_.z)
      throw TruncationError("fiber coordinate outside window");
    return desc_offset_[x.piece] +
           static_cast<std::int64_t>(p.fv_index(x.point)) * z_span() +
           (x.z + radii_.z);
  }

  ComplexVertex decode_desc(std::int64_t desc) const {
    const int piece = static_cast<int>(
        std::upper_bound(desc_offset_.begin(), desc_offset_.end(), desc) -
        desc_offset_.begin() - 1);
    const std::int64_t local = desc - desc_offset_[piece];
    const int fv = static_cast<int>(local / z_span());
    const int z = static_cast<int>(local % z_span()) - radii_.z;
    return {piece, pieces_[piece].fv_vertex(fv), z};
  }

  std::int64_t canonical_id(const ComplexVertex& x) const {
    return canon_[desc_id(x)];
  }

  // Lexicographically smallest description of a canonical vertex.
  ComplexVertex rep(std::int64_t id) const { return decode_desc(rep_desc_.at(id)); }

  // Second description for glued vertices, if any.
  std::optional<ComplexVertex> other_rep(std::int64_t id) const {
    const std::int64_t d = other_desc_.at(id);
    if (d < 0) return std::nullopt;
    return decode_desc(d);
  }

  bool in_piece(std::int64_t id, int piece) const {
    if (decode_piece(rep_desc_[id]) == piece) return true;
    const std::int64_t d = other_desc_[id];
    return d >= 0 && decode_piece(d) == piece;
  }

  std::span<const std::pair<std::int64_t, Dist>> neighbors(std::int64_t v) const {
    return {adj_.data() + adj_off_[v],
            static_cast<std::size_t>(adj_off_[v + 1] - adj_off_[v])};
  }

  std::optional<Dist> edge_weight(std::int64_t a, std::int64_t b) const {
    const auto row = neighbors(a);
    const auto it = std::lower_bound(
        row.begin(), row.end(), b,
        [](const std::pair<std::int64_t, Dist>& x, std::int64_t key) {
          return x.first < key;
        });
    if (it == row.end() || it->first != b) return std::nullopt;
    return it->second;
  }

  std::vector<Dist> distances_from(std::int64_t a) const {
    check_id(a);
    std::vector<Dist> dist(n_, -1);
    if (log_.all_unit) {
      std::vector<std::int64_t> queue;
      queue.reserve(1024);
      queue.push_back(a);
      dist[a] = 0;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::int64_t v = queue[head];
        for (const auto& [w, len] : neighbors(v)) {
          (void)len;
          if (dist[w] < 0) {
            dist[w] = dist[v] + 1;
            queue.push_back(w);
          }
        }
      }
    } else {
      using Item = std::pair<Dist, std::int64_t>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      dist[a] = 0;
      pq.push({0, a});
      while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d != dist[v]) continue;
        for (const auto& [w, len] : neighbors(v))
          if (dist[w] < 0 || dist[w] > d + len) {
            dist[w] = d + len;
            pq.push({dist[w], w});
          }
      }
    }
    return dist;
  }

  Dist distance(std::int64_t a, std::int64_t b) const {
    check_id(a);
    check_id(b);
    if (a == b) return 0;
    if (!log_.all_unit) {
      const Dist d = distances_from(a)[b];
      if (d < 0) throw TruncationError("vertices unreachable in truncation");
      return d;
    }
    // Unit-weight BFS from a, early exit at b.
    std::vector<Dist> dist(n_, -1);
    std::vector<std::int64_t> queue;
    queue.push_back(a);
    dist[a] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::int64_t v = queue[head];
      if (v == b) return dist[v];
      for (const auto& [w, len] : neighbors(v)) {
        (void)len;
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
      }
    }
    throw TruncationError("vertices unreachable in truncation");
  }

  // Meet-in-the-middle variant; must agree with distance() exactly.
  Dist distance_bidirectional(std::int64_t a, std::int64_t b) const {
    check_id(a);
    check_id(b);
    if (a == b) return 0;
    if (!log_.all_unit) return distance(a, b);
    std::vector<Dist> df(n_, -1), db(n_, -1);
    std::vector<std::int64_t> ff = {a}, fb = {b};
    df[a] = 0;
    db[b] = 0;
    Dist lf = 0, lb = 0;
    Dist best = -1;
    const auto update = [&](Dist cand) {
      if (best < 0 || cand < best) best = cand;
    };
    while (!ff.empty() && !fb.empty() && (best < 0 || lf + lb < best)) {
      const bool forward = ff.size() <= fb.size();
      auto& frontier = forward ? ff : fb;
      auto& mine = forward ? df : db;
      auto& theirs = forward ? db : df;
      Dist& level = forward ? lf : lb;
      std::vector<std::int64_t> next;
      for (const std::int64_t v : frontier)
        for (const auto& [w, len] : neighbors(v)) {
          (void)len;
          if (mine[w] < 0) {
            mine[w] = level + 1;
            if (theirs[w] >= 0) update(mine[w] + theirs[w]);
            next.push_back(w);
          }
        }
      frontier = std::move(next);
      ++level;
    }
    if (best < 0) throw TruncationError("vertices unreachable in truncation");
    return best;
  }

  bool in_core(std::int64_t id, int margin) const {
    return desc_in_core(rep_desc_[id], margin) &&
           (other_desc_[id] < 0 || desc_in_core(other_desc_[id], margin));
  }

  // Deterministic seeded sample of vertices whose coordinates keep the
  // stated margin from every truncation radius.
  std::vector<std::int64_t> sample_core_points(int margin, int count,
                                               std::uint64_t seed) const {
    if (margin < 0) throw ConfigError("margin must be >= 0");
    std::vector<std::int64_t> admissible;
    for (std::int64_t v = 0; v < n_; ++v)
      if (in_core(v, margin)) admissible.push_back(v);
    if (admissible.empty())
      throw TruncationError("safe core is empty: radii too small for margin " +
                            std::to_string(margin));
    auto rng = seeded_rng(seed, 0x5afec04e);
    if (count >= static_cast<int>(admissible.size())) return admissible;
    // Partial Fisher-Yates with explicit index arithmetic so the sample is
    // reproducible across standard libraries, not just across runs.
    for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
      const std::size_t j = i + rng() % (admissible.size() - i);
      std::swap(admissible[i], admissible[j]);
    }
    admissible.resize(count);
    return admissible;
  }

  // Exact min distance between X_u and X_v, by multi-source search seeded
  // on every description of piece u.
  Dist piece_pair_distance(int u, int v) const {
    std::vector<Dist> dist(n_, -1);
    std::vector<std::int64_t> queue;
    for (std::int64_t d = desc_offset_[u]; d < desc_offset_[u + 1]; ++d) {
      const std::int64_t id = canon_[d];
      if (dist[id] < 0) {
        dist[id] = 0;
        queue.push_back(id);
      }
    }
    if (!log_.all_unit) {
      using Item = std::pair<Dist, std::int64_t>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      for (const std::int64_t id : queue) pq.push({0, id});
      while (!pq.empty()) {
        auto [d, x] = pq.top();
        pq.pop();
        if (d != dist[x]) continue;
        if (in_piece(x, v)) return d;
        for (const auto& [w, len] : neighbors(x))
          if (dist[w] < 0 || dist[w] > d + len) {
            dist[w] = d + len;
            pq.push({dist[w], w});
          }
      }
    } else {
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::int64_t x = queue[head];
        if (in_piece(x, v)) return dist[x];
        for (const auto& [w, len] : neighbors(x)) {
          (void)len;
          if (dist[w] < 0) {
            dist[w] = dist[x] + 1;
            queue.push_back(w);
          }
        }
      }
    }
    throw TruncationError("pieces unreachable in truncation");
  }

  friend TotalComplex build_complex(BassSerreTree bs, std::vector<Piece> pieces,
                                    Radii radii);

 private:
  void check_id(std::int64_t v) const {
    if (v < 0 || v >= n_) throw Error("unknown canonical vertex id");
  }

  int decode_piece(std::int64_t desc) const {
    return static_cast<int>(
        std::upper_bound(desc_offset_.begin(), desc_offset_.end(), desc) -
        desc_offset_.begin() - 1);
  }

  std::int64_t z_span() const { return 2 * static_cast<std::int64_t>(radii_.z) + 1; }

  bool desc_in_core(std::int64_t desc, int margin) const {
    const ComplexVertex x = decode_desc(desc);
    if (std::abs(x.z) > radii_.z - margin) return false;
    const Piece& p = pieces_[x.piece];
    if (x.point.kind == PieceVertex::Kind::line)
      return std::abs(x.point.t) <= p.line(x.point.a).radius - margin;
    return p.base_tree().distance(p.center(), x.point.a) <=
           p.base_radius() - margin;
  }

  BassSerreTree bs_;
  std::vector<Piece> pieces_;
  Radii radii_;
  std::vector<std::int64_t> desc_offset_;  // piece -> first desc id
  std::vector<std::int64_t> canon_;        // desc -> canonical id
  std::vector<std::int64_t> rep_desc_;     // canonical -> smallest desc
  std::vector<std::int64_t> other_desc_;   // canonical -> second desc or -1
  std::int64_t n_ = 0;
  std::vector<std::int64_t> adj_off_;
  std::vector<std::pair<std::int64_t, Dist>> adj_;
  int mu_ = 1;
  int lip_ = 1;
  BuildLog log_;
};

inline TotalComplex build_complex(BassSerreTree bs, std::vector<Piece> pieces,
                                  Radii radii) {
  if (static_cast<int>(pieces.size()) != bs.vertex_count())
    throw ConfigError("one piece per Bass-Serre vertex required");
  if (radii.z < 1 || radii.line < 1)
    throw ConfigError("line and z radii must be >= 1");
  TotalComplex c;
  c.bs_ = std::move(bs);
  c.pieces_ = std::move(pieces);
  c.radii_ = radii;

  const std::int64_t zspan = 2 * static_cast<std::int64_t>(radii.z) + 1;
  c.desc_offset_.assign(c.pieces_.size() + 1, 0);
  for (std::size_t v = 0; v < c.pieces_.size(); ++v)
    c.desc_offset_[v + 1] =
        c.desc_offset_[v] + c.pieces_[v].fv_vertex_count() * zspan;
  const std::int64_t total = c.desc_offset_.back();
  c.log_.descriptions = total;

  for (const auto& p : c.pieces_) {
    c.mu_ = std::max(c.mu_, p.mu());
    c.lip_ = std::max(c.lip_, p.lip());
  }

  // Resolve flip identifications. Every line description participates in at
  // most one identification, so classes have size one or two.
  UnionFind uf(total);
  c.log_.identified_per_edge.assign(c.bs_.tree().edges().size(), 0);
  for (int eid = 0; eid < static_cast<int>(c.bs_.tree().edges().size()); ++eid) {
    const auto& e = c.bs_.edge(eid);
    const Piece& pu = c.pieces_[e.u];
    const Piece& pv = c.pieces_[e.v];
    const int su = pu.slot_for_edge(eid);
    const int sv = pv.slot_for_edge(eid);
    if (su < 0 || sv < 0)
      throw ConfigError("piece missing a boundary line for Bass-Serre edge " +
                        std::to_string(eid));
    const int ru = pu.line(su).radius;
    for (int t = -ru; t <= ru; ++t)
      for (int z = -radii.z; z <= radii.z; ++z) {
        // Partner (e.v, line sv at z, fiber t) must be in-window on its side.
        if (std::abs(z) > pv.line(sv).radius || std::abs(t) > radii.z) {
          ++c.log_.skipped_out_of_window;
          continue;
        }
        const std::int64_t du =
            c.desc_id({e.u, PieceVertex::line_point(su, t), z});
        const std::int64_t dv =
            c.desc_id({e.v, PieceVertex::line_point(sv, z), t});
        if (!uf.unite(du, dv))
          throw ModelViolation("inconsistent flip identification on edge " +
                               std::to_string(eid));
        ++c.log_.identified_per_edge[eid];
        ++c.log_.identified_pairs;
      }
  }

  // Canonical numbering: roots in ascending description order, so the
  // canonical representative is the lexicographic minimum of its class.
  c.canon_.assign(total, -1);
  c.rep_desc_.clear();
  for (std::int64_t d = 0; d < total; ++d)
    if (uf.find(d) == d) {
      c.canon_[d] = static_cast<std::int64_t>(c.rep_desc_.size());
      c.rep_desc_.push_back(d);
    }
  for (std::int64_t d = 0; d < total; ++d)
    if (c.canon_[d] < 0) c.canon_[d] = c.canon_[uf.find(d)];
  c.n_ = static_cast<std::int64_t>(c.rep_desc_.size());
  c.log_.canonical = c.n_;
  c.other_desc_.assign(c.n_, -1);
  for (std::int64_t d = 0; d < total; ++d)
    if (c.rep_desc_[c.canon_[d]] != d) c.other_desc_[c.canon_[d]] = d;

  // Horizontal edges replicate F_v at every fiber level; vertical edges
  // step the fiber. Flip-identified plane edges arrive twice and dedupe.
  std::vector<std::tuple<std::int64_t, std::int64_t, Dist>> edges;
  for (int v = 0; v < c.piece_count(); ++v) {
    const Piece& p = c.pieces_[v];
    const std::int64_t base = c.desc_offset_[v];
    for (const auto& fe : p.fv_edges())
      for (int z = -radii.z; z <= radii.z; ++z) {
        const std::int64_t a = c.canon_[base + fe.u * zspan + (z + radii.z)];
        const std::int64_t b = c.canon_[base + fe.v * zspan + (z + radii.z)];
        edges.emplace_back(std::min(a, b), std::max(a, b), fe.length);
      }
    for (int fv = 0; fv < p.fv_vertex_count(); ++fv)
      for (int z = -radii.z; z < radii.z; ++z) {
        const std::int64_t a = c.canon_[base + fv * zspan + (z + radii.z)];
        const std::int64_t b = c.canon_[base + fv * zspan + (z + radii.z + 1)];
        edges.emplace_back(std::min(a, b), std::max(a, b), 1);
      }
  }
  std::sort(edges.begin(), edges.end());
  std::int64_t kept = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i > 0 && std::get<0>(edges[i]) == std::get<0>(edges[i - 1]) &&
        std::get<1>(edges[i]) == std::get<1>(edges[i - 1])) {
      if (std::get<2>(edges[i]) != std::get<2>(edges[i - 1]))
        throw ModelViolation("identified edges disagree on length");
      ++c.log_.duplicate_edges_removed;
      continue;
    }
    edges[kept++] = edges[i];
  }
  edges.resize(kept);
  c.log_.edges = kept;

  c.adj_off_.assign(c.n_ + 1, 0);
  for (const auto& [a, b, w] : edges) {
    (void)w;
    ++c.adj_off_[a + 1];
    ++c.adj_off_[b + 1];
  }
  for (std::int64_t v = 0; v < c.n_; ++v) c.adj_off_[v + 1] += c.adj_off_[v];
  c.adj_.resize(edges.size() * 2);
  {
    std::vector<std::int64_t> cursor(c.adj_off_.begin(), c.adj_off_.end() - 1);
    for (const auto& [a, b, w] : edges) {
      c.adj_[cursor[a]++] = {b, w};
      c.adj_[cursor[b]++] = {a, w};
    }
  }
  for (std::int64_t v = 0; v < c.n_; ++v)
    std::sort(c.adj_.begin() + c.adj_off_[v], c.adj_.begin() + c.adj_off_[v + 1]);
  c.log_.all_unit = true;
  for (const auto& [nbr, w] : c.adj_)
    if (w != 1) {
      c.log_.all_unit = false;
      break;
    }

  // rho_hat: exact minimum of d(X_v, X_v') over piece pairs at T0-distance
  // two, via one multi-source search per pair. Conservative input to the
  // f0 upper bound.
  Dist rho = -1;
  for (int w = 0; w < c.piece_count(); ++w) {
    const auto nbrs = c.bs_.neighbors_sorted(w);
    for (std::size_t i = 0; i < nbrs.size(); ++i)
      for (std::size_t j = i + 1; j < nbrs.size(); ++j) {
        const Dist d = c.piece_pair_distance(nbrs[i], nbrs[j]);
        if (rho < 0 || d < rho) rho = d;
      }
  }
  c.log_.rho_hat = rho < 0 ? 1 : rho;  // single-junction-free instances
  return c;
}

inline ComplexVertex flip_image(const TotalComplex& c, const ComplexVertex& x,
                                int bs_edge) {
  if (x.point.kind != PieceVertex::Kind::line)
    throw Error("flip_image: point is not on a boundary line");
  const Piece& from = c.piece(x.piece);
  if (from.line(x.point.a).bs_edge != bs_edge)
    throw Error("flip_image: point is not on the named boundary plane");
  const auto& e = c.bs().edge(bs_edge);
  const int other = e.u == x.piece ? e.v : e.u;
  const Piece& to = c.piece(other);
  const int slot = to.slot_for_edge(bs_edge);
  if (slot < 0) throw Error("flip_image: neighbour piece has no line for edge");
  if (x.z < -to.line(slot).radius || x.z > to.line(slot).radius ||
      x.point.t < -c.radii().z || x.point.t > c.radii().z)
    throw TruncationError("flip image outside the neighbour's window");
  return {other, PieceVertex::line_point(slot, x.z), x.point.t};
}

// Re-identifies a canonical vertex of one truncation inside another build
// of the same instance. Raw base-vertex ids shift with the radii, so the
// base point travels by its truncation-stable label.
inline std::int64_t transfer_vertex(const TotalComplex& from,
                                    const TotalComplex& to, std::int64_t id) {
  ComplexVertex v = from.rep(id);
  if (v.point.kind == PieceVertex::Kind::base)
    v.point.a = to.piece(v.piece).base_vertex_for_label(
        from.piece(v.piece).base_label(v.point.a));
  return to.canonical_id(v);
}

// Re-measures sampled pairs in a complex built with strictly larger radii.
// Extra space can only shorten distances, so d_small >= d_big always; pairs
// where the two disagree are truncation-inflated and excluded from
// acceptance statistics.
inline DoublingReport doubling_check(
    const TotalComplex& c, const TotalComplex& big,
    const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs) {
  if (big.radii().base < c.radii().base || big.radii().line < c.radii().line ||
      big.radii().z < c.radii().z)
    throw ConfigError("doubling complex must have radii >= the base complex");
  DoublingReport report;
  for (const auto& [x, y] : pairs) {
    const std::int64_t bx = transfer_vertex(c, big, x);
    const std::int64_t by = transfer_vertex(c, big, y);
    DoublingReport::Row row;
    row.x = x;
    row.y = y;
    row.d_small = c.distance(x, y);
    row.d_big = big.distance(bx, by);
    if (row.d_small < row.d_big)
      throw ModelViolation("distance grew with larger radii");
    if (row.d_small != row.d_big)
      report.disagreements.push_back(report.rows.size());
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fliptrees
