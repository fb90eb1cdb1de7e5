#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "fliptrees/errors.hpp"
#include "fliptrees/metric_tree.hpp"
#include "fliptrees/types.hpp"

namespace fliptrees {

// A point of F_v: either a base-tree vertex or a boundary-line vertex
// (slot, t) where slot indexes the piece's boundary lines.
struct PieceVertex {
  enum class Kind : std::uint8_t { base, line };
  Kind kind = Kind::base;
  int a = 0;  // base vertex id, or line slot
  int t = 0;  // line parameter (unused for base points)

  static PieceVertex base_point(int v) { return {Kind::base, v, 0}; }
  static PieceVertex line_point(int slot, int t) { return {Kind::line, slot, t}; }

  bool operator==(const PieceVertex&) const = default;
};

struct BoundaryLine {
  int bs_edge = -1;  // Bass-Serre edge this line is glued along
  int radius = 0;    // parameter window [-radius, radius]
  TreeLine shadow;   // image of the line under the retraction
};

struct FvEdge {
  int u = 0;
  int v = 0;  // local F_v indices
  Dist length = 1;
};

// Model of one Seifert piece factor F_v: a base tree T_v plus disjoint
// boundary lines, each vertex (slot, t) tethered to its shadow vertex by an
// edge of length mu. The retraction maps line vertices onto their shadows
// and fixes the base.
class Piece {
 public:
  Piece() = default;

  const MetricTree& base_tree() const { return base_; }
  int center() const { return center_; }
  int base_radius() const { return base_radius_; }
  int mu() const { return mu_; }
  int lip() const { return lip_; }

  int line_count() const { return static_cast<int>(lines_.size()); }
  const BoundaryLine& line(int slot) const { return lines_.at(slot); }
  int slot_for_edge(int bs_edge) const {
    for (int s = 0; s < line_count(); ++s)
      if (lines_[s].bs_edge == bs_edge) return s;
    return -1;
  }

  int fv_vertex_count() const { return fv_count_; }
  const std::vector<FvEdge>& fv_edges() const { return fv_edges_; }

  // Truncation-stable base vertex labels: the same model point keeps its
  // label when the piece is rebuilt with larger radii. Used to transfer
  // sampled points into a doubling complex.
  std::int64_t base_label(int vertex) const { return base_labels_.at(vertex); }
  int base_vertex_for_label(std::int64_t label) const {
    const auto it = label_index_.find(label);
    if (it == label_index_.end())
      throw TruncationError("base label not present at this truncation");
    return it->second;
  }

  int fv_index(const PieceVertex& p) const {
    if (p.kind == PieceVertex::Kind::base) {
      if (p.a < 0 || p.a >= base_.vertex_count())
        throw Error("piece vertex: unknown base vertex");
      return p.a;
    }
    if (p.a < 0 || p.a >= line_count())
      throw Error("piece vertex: unknown line slot");
    const int r = lines_[p.a].radius;
    if (p.t < -r || p.t > r)
      throw TruncationError("line parameter outside truncation window");
    return base_.vertex_count() + line_offset_[p.a] + (p.t + r);
  }

  PieceVertex fv_vertex(int local) const {
    if (local < 0 || local >= fv_count_) throw Error("bad local F_v index");
    if (local < base_.vertex_count()) return PieceVertex::base_point(local);
    int rest = local - base_.vertex_count();
    for (int s = 0; s < line_count(); ++s) {
      const int span = 2 * lines_[s].radius + 1;
      if (rest < span) return PieceVertex::line_point(s, rest - lines_[s].radius);
      rest -= span;
    }
    throw Error("bad local F_v index");
  }

  // The metric retraction r_v: identity on the base, shadow on each line.
  int retract(const PieceVertex& p) const {
    if (p.kind == PieceVertex::Kind::base) {
      if (p.a < 0 || p.a >= base_.vertex_count())
        throw Error("retract: unknown base vertex");
      return p.a;
    }
    return lines_.at(p.a).shadow.at(p.t);
  }

  // Exact distance in the F_v graph (BFS when all lengths are 1).
  Dist fv_distance(const PieceVertex& from, const PieceVertex& to) const {
    const auto row = fv_distances_from(fv_index(from));
    const Dist d = row[fv_index(to)];
    if (d < 0) throw Error("F_v is disconnected");  // cannot happen by construction
    return d;
  }

  std::vector<Dist> fv_distances_from(int local) const {
    std::vector<Dist> dist(fv_count_, -1);
    if (all_unit_) {
      std::queue<int> q;
      dist[local] = 0;
      q.push(local);
      while (!q.empty()) {
        const int v = q.front();
        q.pop();
        for (std::int32_t i = fv_adj_off_[v]; i < fv_adj_off_[v + 1]; ++i) {
          const int w = fv_adj_[i].first;
          if (dist[w] < 0) {
            dist[w] = dist[v] + 1;
            q.push(w);
          }
        }
      }
    } else {
      using Item = std::pair<Dist, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
      dist[local] = 0;
      q.push({0, local});
      while (!q.empty()) {
        auto [d, v] = q.top();
        q.pop();
        if (d != dist[v]) continue;
        for (std::int32_t i = fv_adj_off_[v]; i < fv_adj_off_[v + 1]; ++i) {
          const auto [w, len] = fv_adj_[i];
          if (dist[w] < 0 || dist[w] > d + len) {
            dist[w] = d + len;
            q.push({dist[w], w});
          }
        }
      }
    }
    return dist;
  }

  friend Piece make_piece(MetricTree base, int center, int base_radius,
                          std::vector<BoundaryLine> lines, int mu, int lip,
                          bool validate, std::vector<std::int64_t> labels);

 private:
  void assemble() {
    line_offset_.assign(lines_.size(), 0);
    int off = 0;
    for (std::size_t s = 0; s < lines_.size(); ++s) {
      line_offset_[s] = off;
      off += 2 * lines_[s].radius + 1;
    }
    fv_count_ = base_.vertex_count() + off;
    fv_edges_.clear();
    for (const auto& e : base_.edges()) fv_edges_.push_back({e.u, e.v, e.length});
    for (int s = 0; s < line_count(); ++s) {
      const int r = lines_[s].radius;
      for (int t = -r; t <= r; ++t) {
        const int lv = fv_index(PieceVertex::line_point(s, t));
        if (t < r)
          fv_edges_.push_back({lv, fv_index(PieceVertex::line_point(s, t + 1)), 1});
        fv_edges_.push_back({lv, lines_[s].shadow.at(t), mu_});
      }
    }
    all_unit_ = true;
    for (const auto& e : fv_edges_)
      if (e.length != 1) all_unit_ = false;
    fv_adj_off_.assign(fv_count_ + 1, 0);
    for (const auto& e : fv_edges_) {
      ++fv_adj_off_[e.u + 1];
      ++fv_adj_off_[e.v + 1];
    }
    for (int v = 0; v < fv_count_; ++v) fv_adj_off_[v + 1] += fv_adj_off_[v];
    fv_adj_.resize(fv_edges_.size() * 2);
    std::vector<std::int32_t> cursor(fv_adj_off_.begin(), fv_adj_off_.end() - 1);
    for (const auto& e : fv_edges_) {
      fv_adj_[cursor[e.u]++] = {e.v, e.length};
      fv_adj_[cursor[e.v]++] = {e.u, e.length};
    }
  }

  MetricTree base_;
  int center_ = 0;
  int base_radius_ = 0;
  std::vector<BoundaryLine> lines_;
  std::vector<int> line_offset_;
  std::vector<std::int64_t> base_labels_;
  std::map<std::int64_t, int> label_index_;
  int mu_ = 1;
  int lip_ = 1;
  int fv_count_ = 0;
  std::vector<FvEdge> fv_edges_;
  std::vector<std::int32_t> fv_adj_off_;
  std::vector<std::pair<int, Dist>> fv_adj_;
  bool all_unit_ = true;
};

inline Piece make_piece(MetricTree base, int center, int base_radius,
                        std::vector<BoundaryLine> lines, int mu, int lip,
                        bool validate, std::vector<std::int64_t> labels = {}) {
  if (lines.empty()) throw ConfigError("a piece needs at least one boundary line");
  if (mu < 1 || lip < 1) throw ConfigError("mu and lip must be >= 1");
  if (validate)
    for (const auto& l : lines) {
      std::string why;
      if (l.shadow.radius() != l.radius)
        throw ConfigError("shadow window does not match line window");
      if (!l.shadow.validate(base, &why))
        throw ConfigError("line assignment not geodesic: " + why);
    }
  Piece p;
  if (labels.empty()) {
    labels.resize(base.vertex_count());
    for (int v = 0; v < base.vertex_count(); ++v) labels[v] = v;
  }
  if (static_cast<int>(labels.size()) != base.vertex_count())
    throw ConfigError("one label per base vertex required");
  p.base_labels_ = std::move(labels);
  for (int v = 0; v < base.vertex_count(); ++v) {
    if (!p.label_index_.emplace(p.base_labels_[v], v).second)
      throw ConfigError("base labels must be unique");
  }
  p.base_ = std::move(base);
  p.base_.build_index();
  p.center_ = center;
  p.base_radius_ = base_radius;
  p.lines_ = std::move(lines);
  p.mu_ = mu;
  p.lip_ = lip;
  p.assemble();
  return p;
}

// Synthetic axiom-first piece: base tree plus one unit-speed tethered line
// per incident Bass-Serre edge, tether length mu = 1. Satisfies all piece
// axioms with mu = 1, lip = 1 when the shadows have speed 1.
inline Piece make_synthetic_piece(MetricTree base, int center, int base_radius,
                                  const std::vector<std::pair<int, TreeLine>>& assignment,
                                  bool validate = true,
                                  std::vector<std::int64_t> labels = {}) {
  if (assignment.empty()) throw ConfigError("incident edge list is empty");
  std::vector<BoundaryLine> lines;
  int lip = 1;
  for (const auto& [bs_edge, shadow] : assignment) {
    lip = static_cast<int>(std::max<Dist>(lip, shadow.speed()));
    lines.push_back({bs_edge, shadow.radius(), shadow});
  }
  return make_piece(std::move(base), center, base_radius, std::move(lines), 1,
                    lip, validate, std::move(labels));
}

// Ball of given radius in the Cayley tree of the free group on `rank`
// generators. Keeps child pointers so coset lines can be walked.
class FreeGroupBall {
 public:
  FreeGroupBall(int rank, int radius) : rank_(rank), radius_(radius) {
    if (rank < 1) throw ConfigError("free group rank must be >= 1");
    if (radius < 0) throw ConfigError("ball radius must be >= 0");
    if (radius > 30) throw ConfigError("ball radius too large for word labels");
    const int letters = 2 * rank;
    std::vector<TreeEdge> edges;
    std::vector<int> depth = {0};
    std::vector<int> incoming = {-1};  // letter used to reach each vertex
    child_.push_back(std::vector<int>(letters, -1));
    word_code_.push_back(1);  // sentinel bit, then two bits per letter
    for (int v = 0; v < static_cast<int>(depth.size()); ++v) {
      if (depth[v] == radius) continue;
      for (int l = 0; l < letters; ++l) {
        if (incoming[v] >= 0 && l == inverse(incoming[v])) continue;
        const int w = static_cast<int>(depth.size());
        depth.push_back(depth[v] + 1);
        incoming.push_back(l);
        child_.push_back(std::vector<int>(letters, -1));
        word_code_.push_back((word_code_[v] << 2) | l);
        child_[v][l] = w;
        child_[w][inverse(l)] = v;
        edges.push_back({v, w, 1});
      }
    }
    tree_ = MetricTree::from_edges(static_cast<int>(depth.size()), edges);
  }

  // Letters: 2k = generator k, 2k+1 = its inverse.
  static int inverse(int letter) { return letter ^ 1; }

  const MetricTree& tree() const { return tree_; }
  int radius() const { return radius_; }

  // Walks a letter sequence from the identity; -1 if it leaves the ball.
  int walk(std::span<const int> letters) const {
    int v = 0;
    for (int l : letters) {
      v = child_[v][l];
      if (v < 0) return -1;
    }
    return v;
  }

  // Vertex at position k on the axis of the word (g0 g1): alternating
  // letters g0, g1 forward and their inverses backward.
  int axis_vertex(int g0, int g1, int k) const {
    std::vector<int> letters;
    if (k >= 0)
      for (int i = 0; i < k; ++i) letters.push_back(i % 2 == 0 ? 2 * g0 : 2 * g1);
    else
      for (int i = 0; i < -k; ++i)
        letters.push_back(i % 2 == 0 ? 2 * g1 + 1 : 2 * g0 + 1);
    return walk(letters);
  }

  // Reduced-word encoding of each vertex; stable across ball radii.
  const std::vector<std::int64_t>& word_codes() const { return word_code_; }

 private:
  int rank_;
  int radius_;
  MetricTree tree_;
  std::vector<std::vector<int>> child_;
  std::vector<std::int64_t> word_code_;
};

// Rank-2 free-group model of the pair of pants: base ball in the Cayley
// tree of F(a,b), boundary lines over the coset lines of <a> (speed 1),
// <b> (speed 1) and <ab> (speed 2). The <ab> shadow forces lip = 2.
inline Piece make_pants_piece(const std::vector<int>& bs_edges, int line_radius) {
  if (bs_edges.empty()) throw ConfigError("incident edge list is empty");
  if (bs_edges.size() > 3)
    throw ConfigError("a pants piece hosts at most 3 boundary lines, got " +
                      std::to_string(bs_edges.size()));
  if (line_radius < 1) throw ConfigError("line radius must be >= 1");
  const FreeGroupBall ball(2, 2 * line_radius);
  std::vector<BoundaryLine> lines;
  for (std::size_t slot = 0; slot < bs_edges.size(); ++slot) {
    std::vector<int> verts;
    Dist speed = slot == 2 ? 2 : 1;
    for (int t = -line_radius; t <= line_radius; ++t) {
      int v = -1;
      if (slot == 0)
        v = ball.axis_vertex(0, 0, t);  // a^t
      else if (slot == 1)
        v = ball.axis_vertex(1, 1, t);  // b^t
      else
        v = ball.axis_vertex(0, 1, 2 * t);  // (ab)^t
      if (v < 0) throw ConfigError("coset line leaves the ball");
      verts.push_back(v);
    }
    lines.push_back({bs_edges[slot], line_radius,
                     TreeLine::from_vertices(ball.tree(), verts, speed)});
  }
  return make_piece(ball.tree(), 0, 2 * line_radius, std::move(lines), 1, 2,
                    true, ball.word_codes());
}

struct LineVerdict {
  int slot = 0;
  bool retraction_injective = true;
  bool unit_speed = true;      // gamma is a unit-speed geodesic of F_v
  bool shadow_geodesic = true; // shadow parametrized at its declared speed
  Dist max_stretch = 1;        // worst retraction stretch along this line
};

struct PieceAxiomReport {
  Dist max_displacement = 0;   // max over F_v of d(x, r(x))
  Dist measured_lip = 1;       // least integer L with d(r u, r v) <= L len(u,v)
  std::vector<LineVerdict> lines;
  std::vector<std::string> failures;

  bool passes(int mu, int lip) const {
    if (!failures.empty()) return false;
    return max_displacement <= mu && measured_lip <= lip;
  }
};

// Exhaustive audit of the piece axioms over the truncation: displacement
// bound, Lipschitz constant of the retraction over every F_v edge,
// injectivity of the retraction per line, unit-speed boundary lines.
inline PieceAxiomReport verify_piece_axioms(const Piece& p) {
  PieceAxiomReport report;
  const auto& base = p.base_tree();
  for (const auto& e : p.fv_edges()) {
    const int ru = p.retract(p.fv_vertex(e.u));
    const int rv = p.retract(p.fv_vertex(e.v));
    const Dist d = base.distance(ru, rv);
    const Dist stretched = (d + e.length - 1) / e.length;  // ceil(d / len)
    report.measured_lip = std::max(report.measured_lip, stretched);
  }
  for (int s = 0; s < p.line_count(); ++s) {
    LineVerdict verdict;
    verdict.slot = s;
    const int r = p.line(s).radius;
    std::vector<int> images;
    for (int t = -r; t <= r; ++t) {
      const auto from = PieceVertex::line_point(s, t);
      images.push_back(p.retract(from));
      const auto row = p.fv_distances_from(p.fv_index(from));
      report.max_displacement =
          std::max(report.max_displacement, row[p.retract(from)]);
      for (int u = t; u <= r; ++u)
        if (row[p.fv_index(PieceVertex::line_point(s, u))] != u - t)
          verdict.unit_speed = false;
      if (t < r)
        verdict.max_stretch = std::max(
            verdict.max_stretch,
            base.distance(p.retract(from),
                          p.retract(PieceVertex::line_point(s, t + 1))));
    }
    std::vector<int> sorted = images;
    std::sort(sorted.begin(), sorted.end());
    verdict.retraction_injective =
        std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    verdict.shadow_geodesic = p.line(s).shadow.validate(base);
    if (!verdict.retraction_injective)
      report.failures.push_back("line " + std::to_string(s) +
                                ": retraction not injective");
    if (!verdict.unit_speed)
      report.failures.push_back("line " + std::to_string(s) +
                                ": not a unit-speed geodesic of F_v");
    if (!verdict.shadow_geodesic)
      report.failures.push_back("line " + std::to_string(s) +
                                ": shadow not geodesically parametrized");
    report.lines.push_back(verdict);
  }
  return report;
}

}  // namespace fliptrees
