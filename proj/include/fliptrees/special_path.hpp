#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fliptrees/complex.hpp"
#include "fliptrees/embedding.hpp"
#include "fliptrees/errors.hpp"
#include "fliptrees/quotient.hpp"
#include "fliptrees/types.hpp"

namespace fliptrees {

inline std::vector<int> bs_geodesic(const BassSerreTree& bs, int v, int w) {
  return bs.tree().geodesic(v, w);
}

struct PathSegment {
  int piece = -1;
  int parity = 1;
  int start_class = -1;
  int end_class = -1;
  int fiber = 0;          // t_j
  Dist horiz_len = 0;     // l(alpha_j)
  Dist jump_after = 0;    // bridge to the next segment, or exit tether
};

// Staircase path witnessing the embedding lower bound: per-piece
// horizontal segments alpha_j at fixed fiber levels t_j, joined through
// the glued planes by two tethers (cost 2 mu), plus entry/exit tethers of
// cost at most mu each.
struct SpecialPath {
  std::vector<std::int64_t> vertices;  // canonical ids, consecutive adjacent
  std::vector<PathSegment> ledger;
  Dist enter_jump = 0;    // x to the first horizontal segment
  Dist vertical_len = 0;  // fiber adjustment, only when n = 0
  Dist total_length = 0;
  int n = 0;              // length of the T0 geodesic between the pieces
  Dist d0 = 0, d1 = 0, d2 = 0;
};

namespace detail {

struct ChainSegment {
  int piece = -1;
  int start_class = -1;
  int end_class = -1;
};

struct Chain {
  std::vector<ChainSegment> segments;
  std::map<int, int> handover_param;  // junction piece -> t
  Dist total = 0;
};

// Walks the quotient geodesic from f_i(x) to f_i(y) through the images of
// the same-parity pieces, handing over at the nearest point of each glued
// junction line. Each handover is certified to lie on the remaining
// geodesic, so the segment lengths add up to d_i exactly.
inline Chain build_chain(const QuotientTree& q, const std::vector<int>& pieces,
                         int start_cls, int end_cls,
                         const std::vector<int>& junctions) {
  Chain chain;
  int cur = start_cls;
  for (std::size_t k = 0; k + 1 < pieces.size(); ++k) {
    const QuotientTree::Junction* junction = q.junction_for(junctions[k]);
    if (junction == nullptr)
      throw ModelViolation("missing glued line through junction " +
                           std::to_string(junctions[k]));
    const int proj = q.tree().project_to_subtree(junction->classes, cur);
    if (q.distance(cur, proj) + q.distance(proj, end_cls) !=
        q.distance(cur, end_cls))
      throw ModelViolation(
          "chaining impossible: junction handover leaves the geodesic");
    const auto it = std::find(junction->classes.begin(),
                              junction->classes.end(), proj);
    chain.handover_param[junctions[k]] =
        static_cast<int>(it - junction->classes.begin()) - junction->window;
    chain.segments.push_back({pieces[k], cur, proj});
    chain.total += q.distance(cur, proj);
    cur = proj;
  }
  chain.segments.push_back({pieces.back(), cur, end_cls});
  chain.total += q.distance(cur, end_cls);
  return chain;
}

}  // namespace detail

inline SpecialPath build_special_path(const TotalComplex& c,
                                      const QuotientTree& q1,
                                      const QuotientTree& q2, std::int64_t x,
                                      std::int64_t y) {
  const BassSerreTree& bs = c.bs();
  SpecialPath path;
  if (x == y) {
    path.vertices = {x};
    return path;
  }
  const ComplexVertex xd = c.rep(x);
  const ComplexVertex yd = c.rep(y);
  const std::vector<int> geo = bs_geodesic(bs, xd.piece, yd.piece);
  const int n = static_cast<int>(geo.size()) - 1;
  path.n = n;
  path.d0 = n;
  path.d1 = q1.distance(fi(c, q1, x), fi(c, q1, y));
  path.d2 = q2.distance(fi(c, q2, x), fi(c, q2, y));

  const int mu = c.mu();
  const auto push = [&](const ComplexVertex& v) {
    const std::int64_t id = c.canonical_id(v);
    if (path.vertices.empty() || path.vertices.back() != id)
      path.vertices.push_back(id);
  };
  const auto shadow_of = [&](int piece, int toward, int t) {
    const Piece& p = c.piece(piece);
    return p.line(p.slot_for_edge(bs.edge_id(piece, toward))).shadow.at(t);
  };

  if (n == 0) {
    // Single piece: adjust the fiber first, then run horizontally at y's
    // level. The vertical run realizes the opposite-parity coordinate.
    const int piece = xd.piece;
    const QuotientTree& q_same = bs.parity(piece) == 1 ? q1 : q2;
    const Dist d_other = bs.parity(piece) == 1 ? path.d2 : path.d1;
    path.vertices.push_back(x);
    const int step = yd.z >= xd.z ? 1 : -1;
    for (int z = xd.z; z != yd.z; z += step)
      push({piece, xd.point, z + step});
    path.vertical_len = std::abs(yd.z - xd.z);
    if (path.vertical_len != d_other)
      throw ModelViolation("fiber run disagrees with the glued-line metric");
    const int from = c.piece(piece).retract(xd.point);
    const int to = c.piece(piece).retract(yd.point);
    if (xd.point.kind == PieceVertex::Kind::line) {
      push({piece, PieceVertex::base_point(from), yd.z});
      path.enter_jump = mu;
    }
    for (int b : c.piece(piece).base_tree().geodesic(from, to))
      push({piece, PieceVertex::base_point(b), yd.z});
    PathSegment seg;
    seg.piece = piece;
    seg.parity = bs.parity(piece);
    seg.start_class = q_same.class_of(piece, from);
    seg.end_class = q_same.class_of(piece, to);
    seg.fiber = yd.z;
    seg.horiz_len = c.piece(piece).base_tree().distance(from, to);
    if (yd.point.kind == PieceVertex::Kind::line) {
      push(yd);
      seg.jump_after = mu;
    }
    path.ledger.push_back(seg);
    path.total_length =
        path.enter_jump + path.vertical_len + seg.horiz_len + seg.jump_after;
    return path;
  }

  // Same-parity piece subsequences and the junctions between them.
  std::vector<int> pieces_a, pieces_b, junc_a, junc_b;
  for (int j = 0; j <= n; j += 2) {
    pieces_a.push_back(geo[j]);
    if (j + 2 <= n) junc_a.push_back(geo[j + 1]);
  }
  for (int j = 1; j <= n; j += 2) {
    pieces_b.push_back(geo[j]);
    if (j + 2 <= n) junc_b.push_back(geo[j + 1]);
  }
  const int parity_a = bs.parity(geo[0]);
  const QuotientTree& qa = parity_a == 1 ? q1 : q2;
  const QuotientTree& qb = parity_a == 1 ? q2 : q1;
  const auto chain_a = detail::build_chain(qa, pieces_a, fi(c, qa, x),
                                           fi(c, qa, y), junc_a);
  const auto chain_b = detail::build_chain(qb, pieces_b, fi(c, qb, x),
                                           fi(c, qb, y), junc_b);
  if (chain_a.total != (parity_a == 1 ? path.d1 : path.d2) ||
      chain_b.total != (parity_a == 1 ? path.d2 : path.d1))
    throw ModelViolation("chain segments do not telescope to the geodesic");

  // Fiber levels: z of x, handover parameters at interior junctions, z of y.
  std::vector<int> fiber(n + 1, 0);
  fiber[0] = xd.z;
  fiber[n] = yd.z;
  for (int j = 1; j < n; ++j) {
    const auto& owner =
        bs.parity(geo[j]) == parity_a ? chain_b.handover_param
                                      : chain_a.handover_param;
    fiber[j] = owner.at(geo[j]);
  }

  path.vertices.push_back(x);
  if (xd.point.kind == PieceVertex::Kind::line) {
    push({xd.piece, PieceVertex::base_point(c.piece(xd.piece).retract(xd.point)),
          xd.z});
    path.enter_jump = mu;
  }
  std::size_t next_a = 0, next_b = 0;
  for (int j = 0; j <= n; ++j) {
    const int piece = geo[j];
    const bool is_a = bs.parity(piece) == parity_a;
    const detail::ChainSegment& seg_cls =
        is_a ? chain_a.segments[next_a++] : chain_b.segments[next_b++];
    const QuotientTree& q = is_a ? qa : qb;
    const int from = j == 0 ? c.piece(piece).retract(xd.point)
                            : shadow_of(piece, geo[j - 1], fiber[j - 1]);
    const int to = j == n ? c.piece(piece).retract(yd.point)
                          : shadow_of(piece, geo[j + 1], fiber[j + 1]);
    if (q.class_of(piece, from) != seg_cls.start_class ||
        q.class_of(piece, to) != seg_cls.end_class)
      throw ModelViolation("segment endpoints disagree with the chain");
    for (int b : c.piece(piece).base_tree().geodesic(from, to))
      push({piece, PieceVertex::base_point(b), fiber[j]});
    PathSegment seg;
    seg.piece = piece;
    seg.parity = bs.parity(piece);
    seg.start_class = seg_cls.start_class;
    seg.end_class = seg_cls.end_class;
    seg.fiber = fiber[j];
    seg.horiz_len = c.piece(piece).base_tree().distance(from, to);
    if (q.distance(seg.start_class, seg.end_class) != seg.horiz_len)
      throw ModelViolation("piece image is not isometric along the segment");
    if (j < n) {
      // Bridge: tether up to the glued plane, cross by identification,
      // tether down on the other side. Exactly 2 mu.
      const Piece& p = c.piece(piece);
      const int slot = p.slot_for_edge(bs.edge_id(piece, geo[j + 1]));
      push({piece, PieceVertex::line_point(slot, fiber[j + 1]), fiber[j]});
      push({geo[j + 1],
            PieceVertex::base_point(shadow_of(geo[j + 1], piece, fiber[j])),
            fiber[j + 1]});
      seg.jump_after = 2 * static_cast<Dist>(mu);
    } else if (yd.point.kind == PieceVertex::Kind::line) {
      push(yd);
      seg.jump_after = mu;
    }
    path.ledger.push_back(seg);
  }
  path.total_length = path.enter_jump;
  for (const auto& seg : path.ledger)
    path.total_length += seg.horiz_len + seg.jump_after;
  return path;
}

struct PathValidation {
  bool adjacency_ok = true;
  bool length_consistent = true;
  bool ledger_geodesic = true;
  Dist recomputed_length = 0;
  Dist sum_horiz = 0;
  Dist sum_jumps = 0;
  Dist max_jump = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

// Re-walks the vertex sequence edge by edge and re-derives the ledger
// accounting: l(gamma) = sum l(gamma_j) + sum jumps.
inline PathValidation validate_path(const TotalComplex& c,
                                    const QuotientTree& q1,
                                    const QuotientTree& q2,
                                    const SpecialPath& path) {
  PathValidation v;
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    const auto w = c.edge_weight(path.vertices[i], path.vertices[i + 1]);
    if (!w) {
      v.adjacency_ok = false;
      v.failures.push_back("vertices " + std::to_string(i) + "," +
                           std::to_string(i + 1) + " not adjacent");
      continue;
    }
    v.recomputed_length += *w;
  }
  for (const auto& seg : path.ledger) {
    v.sum_horiz += seg.horiz_len;
    v.sum_jumps += seg.jump_after;
    v.max_jump = std::max(v.max_jump, seg.jump_after);
    const QuotientTree& q = seg.parity == 1 ? q1 : q2;
    if (q.distance(seg.start_class, seg.end_class) != seg.horiz_len) {
      v.ledger_geodesic = false;
      v.failures.push_back("segment in piece " + std::to_string(seg.piece) +
                           " is not geodesic in its quotient image");
    }
  }
  const Dist ledger_total =
      path.enter_jump + path.vertical_len + v.sum_horiz + v.sum_jumps;
  if (ledger_total != path.total_length ||
      (v.adjacency_ok && v.recomputed_length != path.total_length)) {
    v.length_consistent = false;
    v.failures.push_back("ledger accounting disagrees with the walk");
  }
  v.max_jump = std::max(v.max_jump, path.enter_jump);
  return v;
}

}  // namespace fliptrees
