#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fliptrees/complex.hpp"
#include "fliptrees/embedding.hpp"
#include "fliptrees/errors.hpp"
#include "fliptrees/instance.hpp"
#include "fliptrees/parallel.hpp"
#include "fliptrees/quotient.hpp"
#include "fliptrees/rng.hpp"
#include "fliptrees/special_path.hpp"

namespace fliptrees {

struct Instance {
  InstanceConfig config;
  TotalComplex complex;
  QuotientTree q1, q2;
  InstanceConstants constants;
  std::string build_log;
  // Set when quotient certification failed (cycle, fold); the quotient
  // trees are then unusable and the invariant suite reports the failure.
  std::string quotient_error;
};

namespace detail {

inline std::string shape_text(const TreeShape& shape) {
  if (const auto* p = std::get_if<PathShape>(&shape))
    return "path(" + std::to_string(p->length) + ")";
  if (const auto* r = std::get_if<RegularShape>(&shape))
    return "regular(" + std::to_string(r->valence) + "," +
           std::to_string(r->radius) + ")";
  return "explicit(" +
         std::to_string(std::get<ExplicitShape>(shape).edges.size()) +
         " edges)";
}

inline std::string render_build_log(const InstanceConfig& cfg,
                                    const TotalComplex& c,
                                    const QuotientTree& q1,
                                    const QuotientTree& q2) {
  std::ostringstream out;
  out << "instance " << cfg.name << " seed=" << cfg.seed << "\n";
  out << "bs_tree " << shape_text(cfg.bs_shape)
      << " vertices=" << c.bs().vertex_count()
      << " edges=" << c.bs().tree().edges().size() << "\n";
  out << "radii base=" << cfg.radii.base << " line=" << cfg.radii.line
      << " z=" << cfg.radii.z << " margin=" << cfg.margin << "\n";
  for (int v = 0; v < c.piece_count(); ++v) {
    const Piece& p = c.piece(v);
    out << "piece " << v << " parity=" << c.bs().parity(v)
        << " base=" << p.base_tree().vertex_count()
        << " lines=" << p.line_count() << " fv=" << p.fv_vertex_count()
        << " mu=" << p.mu() << " lip=" << p.lip() << "\n";
  }
  const BuildLog& log = c.log();
  out << "complex descriptions=" << log.descriptions
      << " identified_pairs=" << log.identified_pairs
      << " skipped_out_of_window=" << log.skipped_out_of_window
      << " canonical=" << log.canonical << " edges=" << log.edges
      << " duplicate_edges_removed=" << log.duplicate_edges_removed
      << " all_unit=" << (log.all_unit ? 1 : 0) << "\n";
  for (std::size_t e = 0; e < log.identified_per_edge.size(); ++e)
    out << "edge " << e << " identified=" << log.identified_per_edge[e] << "\n";
  out << "rho_hat=" << log.rho_hat << "\n";
  for (const QuotientTree* q : {&q1, &q2}) {
    out << "quotient T" << q->parity() << " members=";
    for (std::size_t i = 0; i < q->member_pieces().size(); ++i)
      out << (i ? "," : "") << q->member_pieces()[i];
    out << " classes=" << q->class_count()
        << " connected=" << (q->connected() ? 1 : 0) << "\n";
  }
  return out.str();
}

}  // namespace detail

inline Instance build_instance(const InstanceConfig& cfg) {
  auto [bs, pieces] = generate_instance(cfg);
  Instance inst;
  inst.config = cfg;
  inst.complex = build_complex(std::move(bs), std::move(pieces), cfg.radii);
  QuotientOptions options;
  if (cfg.negative_control == NegativeControl::missing_gluing) {
    for (int w = 0; w < inst.complex.bs().vertex_count(); ++w)
      if (inst.complex.bs().neighbors_sorted(w).size() >= 2) {
        options.drop_param_zero_at_junction = w;
        break;
      }
  }
  try {
    auto [q1, q2] = build_quotient_trees(inst.complex, options);
    inst.q1 = std::move(q1);
    inst.q2 = std::move(q2);
  } catch (const ModelViolation& e) {
    inst.quotient_error = e.what();
  }
  inst.constants = theoretical_constants(inst.complex);
  inst.build_log =
      detail::render_build_log(cfg, inst.complex, inst.q1, inst.q2);
  return inst;
}

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct InvariantReport {
  std::vector<CheckResult> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  std::string to_text() const {
    std::ostringstream out;
    for (const auto& c : checks)
      out << (c.pass ? "PASS " : "FAIL ") << c.name
          << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
    return out.str();
  }
};

// Executes every module's certified properties against a built instance.
// Checks that need no quotient structure run first, so a failed quotient
// certification is reported alongside the piece-level findings.
inline InvariantReport run_invariants(const Instance& inst,
                                      std::uint64_t seed = 7,
                                      int sample_size = 200) {
  const TotalComplex& c = inst.complex;
  const BassSerreTree& bs = c.bs();
  InvariantReport report;
  auto rng = seeded_rng(seed, 0x17f1);
  const auto add = [&](const std::string& name, bool pass,
                       const std::string& detail = "") {
    report.checks.push_back({name, pass, detail});
  };

  {  // Piece axioms: displacement, Lipschitz, injectivity, unit speed.
    bool pass = true;
    std::string detail;
    for (int v = 0; v < c.piece_count(); ++v) {
      const auto axioms = verify_piece_axioms(c.piece(v));
      if (!axioms.passes(c.piece(v).mu(), c.piece(v).lip())) {
        pass = false;
        detail = "piece " + std::to_string(v) + ": " +
                 (axioms.failures.empty() ? "bounds exceeded"
                                          : axioms.failures.front());
      }
    }
    add("piece-axioms", pass, detail);
  }

  {  // Shadow lines are geodesically parametrized at their declared speed.
    bool pass = true;
    for (int v = 0; v < c.piece_count() && pass; ++v)
      for (int s = 0; s < c.piece(v).line_count() && pass; ++s) {
        const auto& line = c.piece(v).line(s);
        const auto& base = c.piece(v).base_tree();
        for (int a = -line.radius; a <= line.radius && pass; ++a)
          for (int b = a; b <= line.radius && pass; ++b)
            if (base.distance(line.shadow.at(a), line.shadow.at(b)) !=
                line.shadow.speed() * (b - a))
              pass = false;
      }
    add("tree-line-speed", pass);
  }

  {  // Bipartition: same parity iff even distance, exhaustively.
    bool pass = true;
    for (int u = 0; u < bs.vertex_count(); ++u)
      for (int v = u + 1; v < bs.vertex_count(); ++v)
        if ((bs.parity(u) == bs.parity(v)) !=
            (bs.tree().distance(u, v) % 2 == 0))
          pass = false;
    add("bipartition-even-distance", pass);
  }

  {  // Flip involution + identification consistency over all glued planes.
    bool pass = true;
    std::int64_t checked = 0;
    for (int eid = 0;
         eid < static_cast<int>(bs.tree().edges().size()) && pass; ++eid) {
      const auto& e = bs.edge(eid);
      const int su = c.piece(e.u).slot_for_edge(eid);
      const int ru = c.piece(e.u).line(su).radius;
      for (int t = -ru; t <= ru && pass; ++t)
        for (int z = -c.radii().z; z <= c.radii().z && pass; ++z) {
          const ComplexVertex xu{e.u, PieceVertex::line_point(su, t), z};
          ComplexVertex xv;
          try {
            xv = flip_image(c, xu, eid);
          } catch (const TruncationError&) {
            continue;  // out-of-window pair, legitimately skipped
          } catch (const Error&) {
            pass = false;
            break;
          }
          ++checked;
          const ComplexVertex back = flip_image(c, xv, eid);
          if (!(back == xu) || c.canonical_id(xu) != c.canonical_id(xv))
            pass = false;
        }
    }
    add("flip-involution", pass, std::to_string(checked) + " glued vertices");
  }

  {  // Vertical translation within one piece is an isometry: shift both
     // endpoints and the z-coordinate by one, distances must match.
    bool pass = true;
    int compared = 0;
    const int margin = std::max(1, inst.config.margin);
    try {
      const auto core = c.sample_core_points(margin, 4 * sample_size, seed + 2);
      for (std::size_t i = 0; i + 1 < core.size() && pass &&
                              compared < sample_size;
           i += 2) {
        const ComplexVertex a = c.rep(core[i]);
        const ComplexVertex b = c.rep(core[i + 1]);
        if (a.piece != b.piece) continue;
        const int z = std::min(a.z, b.z);
        const ComplexVertex p{a.piece, a.point, z};
        const ComplexVertex q{a.piece, b.point, z};
        const ComplexVertex p2{a.piece, a.point, z + 1};
        const ComplexVertex q2{a.piece, b.point, z + 1};
        if (c.distance(c.canonical_id(p), c.canonical_id(q)) !=
            c.distance(c.canonical_id(p2), c.canonical_id(q2)))
          pass = false;
        ++compared;
      }
    } catch (const TruncationError&) {
      // margin too tight for this instance; nothing to compare
    }
    add("vertical-translation-isometry", pass,
        std::to_string(compared) + " pairs");
  }

  {  // Metric axioms of the distance engine on sampled vertices.
    bool pass = true;
    std::vector<std::int64_t> sources;
    for (int i = 0; i < 12; ++i)
      sources.push_back(static_cast<std::int64_t>(rng() % c.vertex_count()));
    std::vector<std::vector<Dist>> rows;
    for (const auto s : sources) rows.push_back(c.distances_from(s));
    for (std::size_t i = 0; i < sources.size() && pass; ++i)
      for (std::size_t j = 0; j < sources.size() && pass; ++j) {
        if (rows[i][sources[j]] != rows[j][sources[i]]) pass = false;
        for (std::size_t k = 0; k < sources.size() && pass; ++k)
          if (rows[i][sources[j]] > rows[i][sources[k]] + rows[k][sources[j]])
            pass = false;
      }
    add("complex-metric-axioms", pass);
  }

  if (inst.config.piece_kind == PieceKind::synthetic)
    add("rho-hat-lower", c.rho_hat() >= 2 * static_cast<Dist>(c.mu()),
        "rho_hat=" + std::to_string(c.rho_hat()));

  // The remaining checks need certified quotient trees.
  if (!inst.quotient_error.empty()) {
    add("quotient-trees-certified", false, inst.quotient_error);
    return report;
  }
  add("quotient-trees-certified",
      (inst.q1.empty() || inst.q1.connected()) &&
          (inst.q2.empty() || inst.q2.connected()));

  {  // Replay the construction tree by tree, acyclic after every step.
    bool pass = true;
    std::string detail;
    QuotientOptions options;
    if (inst.config.negative_control == NegativeControl::missing_gluing)
      pass = false;  // cannot reach this branch: certification failed above
    try {
      const auto t1 = incremental_treeness_trace(c, 1, options);
      const auto t2 = incremental_treeness_trace(c, 2, options);
      detail = std::to_string(t1.steps.size()) + "+" +
               std::to_string(t2.steps.size()) + " steps";
    } catch (const ModelViolation& e) {
      pass = false;
      detail = e.what();
    }
    add("quotient-treeness-trace", pass, detail);
  }

  {  // Parity separation: every class member has the quotient's parity.
    bool pass = true;
    for (const QuotientTree* q : {&inst.q1, &inst.q2})
      for (int cls = 0; cls < q->class_count() && pass; ++cls)
        for (const auto& [piece, vert] : q->members_of(cls)) {
          (void)vert;
          if (bs.parity(piece) != q->parity()) pass = false;
        }
    add("quotient-parity-separation", pass);
  }

  {  // Gluing respects parameters across every junction, exhaustively.
    bool pass = true;
    const int window = glue_window(c.radii());
    for (const QuotientTree* q : {&inst.q1, &inst.q2}) {
      if (q->empty()) continue;
      for (int w = 0; w < bs.vertex_count() && pass; ++w) {
        if (bs.parity(w) == q->parity()) continue;
        const auto nbrs = bs.neighbors_sorted(w);
        for (std::size_t i = 0; i + 1 < nbrs.size() && pass; ++i)
          for (std::size_t j = i + 1; j < nbrs.size() && pass; ++j)
            for (int t = -window; t <= window && pass; ++t) {
              const auto shadow = [&](int piece) {
                const Piece& p = c.piece(piece);
                return p.line(p.slot_for_edge(bs.edge_id(piece, w)))
                    .shadow.at(t);
              };
              if (q->class_of(nbrs[i], shadow(nbrs[i])) !=
                  q->class_of(nbrs[j], shadow(nbrs[j])))
                pass = false;
            }
      }
    }
    add("quotient-glue-parameters", pass);
  }

  {  // Convex isometric images: each piece image is connected in the
     // quotient and carries the member-tree metric unchanged.
    bool pass = true;
    for (const QuotientTree* q : {&inst.q1, &inst.q2})
      for (int piece : q->member_pieces()) {
        const auto& base = c.piece(piece).base_tree();
        const int nb = base.vertex_count();
        for (int trial = 0; trial < sample_size && pass; ++trial) {
          const int a = static_cast<int>(rng() % nb);
          const int b = static_cast<int>(rng() % nb);
          if (q->distance(q->class_of(piece, a), q->class_of(piece, b)) !=
              base.distance(a, b))
            pass = false;
        }
        if (!q->connected()) continue;
        const auto image = q->piece_image(piece);
        const std::set<int> in_image(image.begin(), image.end());
        std::vector<int> stack = {image.front()};
        std::set<int> seen = {image.front()};
        while (!stack.empty()) {
          const int v = stack.back();
          stack.pop_back();
          for (const auto& [w, len] : q->tree().neighbors(v)) {
            (void)len;
            if (in_image.count(w) && !seen.count(w)) {
              seen.insert(w);
              stack.push_back(w);
            }
          }
        }
        if (seen.size() != image.size()) pass = false;
      }
    add("quotient-isometric-images", pass);
  }

  {  // Well-definedness: f_i agrees across both descriptions of every
     // glued vertex; exhaustive over all glued planes.
    bool pass = true;
    const int window = glue_window(c.radii());
    for (int eid = 0;
         eid < static_cast<int>(bs.tree().edges().size()) && pass; ++eid) {
      const auto& e = bs.edge(eid);
      const int su = c.piece(e.u).slot_for_edge(eid);
      for (int t = -window; t <= window && pass; ++t)
        for (int z = -window; z <= window && pass; ++z) {
          const ComplexVertex xu{e.u, PieceVertex::line_point(su, t), z};
          const ComplexVertex xv = flip_image(c, xu, eid);
          for (const QuotientTree* q : {&inst.q1, &inst.q2})
            if (!q->empty() &&
                fi_via(c, *q, xu) != fi_via(c, *q, xv))
              pass = false;
        }
    }
    add("fi-well-defined", pass);
  }

  {  // Neighbour-independence of the opposite-parity case of f_i.
    bool pass = true;
    const int window = glue_window(c.radii());
    for (int w = 0; w < bs.vertex_count() && pass; ++w) {
      const auto nbrs = bs.neighbors_sorted(w);
      if (nbrs.size() < 2) continue;
      const QuotientTree& q = bs.parity(w) == 1 ? inst.q2 : inst.q1;
      for (int z = -window; z <= window && pass; ++z) {
        const ComplexVertex x{w, PieceVertex::base_point(c.piece(w).center()),
                              z};
        const int first = fi_via(c, q, x, nbrs[0]);
        for (std::size_t i = 1; i < nbrs.size(); ++i)
          if (fi_via(c, q, x, nbrs[i]) != first) pass = false;
      }
    }
    add("fi-neighbor-independence", pass);
  }

  {  // Fiber sensitivity split: same-parity f_i ignores z; opposite-parity
     // f_i depends only on z.
    bool pass = true;
    for (const QuotientTree* q : {&inst.q1, &inst.q2}) {
      if (q->empty()) continue;
      for (int piece = 0; piece < c.piece_count() && pass; ++piece) {
        const bool same = bs.parity(piece) == q->parity();
        const int window = glue_window(c.radii());
        for (int trial = 0; trial < 32 && pass; ++trial) {
          const int fv = static_cast<int>(rng() %
                                          c.piece(piece).fv_vertex_count());
          const auto pt = c.piece(piece).fv_vertex(fv);
          if (same) {
            const int at0 = fi_via(c, *q, {piece, pt, 0});
            for (int z = -window; z <= window && pass; ++z)
              if (fi_via(c, *q, {piece, pt, z}) != at0) pass = false;
          } else {
            const int z = static_cast<int>(rng() % (2 * window + 1)) - window;
            const int ref = fi_via(
                c, *q,
                {piece, PieceVertex::base_point(c.piece(piece).center()), z});
            if (fi_via(c, *q, {piece, pt, z}) != ref) pass = false;
          }
        }
      }
    }
    add("fi-fiber-sensitivity", pass);
  }

  {  // Coordinate Lipschitz bound, exhaustive over every complex edge.
     // Edges with an endpoint outside the glued fiber window have no f_i
     // value there; they are skipped and counted.
    bool pass = true;
    std::int64_t skipped = 0;
    const Dist L = c.lip();
    for (std::int64_t a = 0; a < c.vertex_count() && pass; ++a)
      for (const auto& [b, w] : c.neighbors(a)) {
        if (b < a) continue;
        for (const QuotientTree* q : {&inst.q1, &inst.q2}) {
          if (q->empty()) continue;
          try {
            if (q->distance(fi(c, *q, a), fi(c, *q, b)) > L * w) pass = false;
          } catch (const TruncationError&) {
            ++skipped;
          }
        }
        if (!pass) break;
      }
    add("fi-lipschitz-edges", pass,
        skipped == 0 ? "" : std::to_string(skipped) + " truncation-skipped");
  }

  {  // f0 coarse Lipschitz and the lower bound, on sampled core pairs.
     // Pairs outside the glued fiber window are truncation artifacts and
     // only counted, matching the distortion accounting.
    bool pass = true;
    int used = 0, skipped = 0;
    std::string detail;
    try {
      const auto core =
          c.sample_core_points(inst.config.margin, 2 * sample_size, seed + 1);
      for (int i = 0; i + 1 < static_cast<int>(core.size()) && pass; i += 2) {
        const std::int64_t x = core[i], y = core[i + 1];
        try {
          const Dist d = c.distance(x, y);
          const Dist d0 = bs.tree().distance(f0(c, x), f0(c, y));
          const ProductPoint px = embed(c, inst.q1, inst.q2, x);
          const ProductPoint py = embed(c, inst.q1, inst.q2, y);
          const Dist d1 = inst.q1.distance(px.c1, py.c1);
          const Dist d2 = inst.q2.distance(px.c2, py.c2);
          if (!inst.constants.upper_f0_ok(d0, d)) pass = false;
          if (!inst.constants.lower_ok(d, d0, d1, d2)) pass = false;
          ++used;
        } catch (const TruncationError&) {
          ++skipped;
        }
      }
      detail = std::to_string(used) + " pairs, " + std::to_string(skipped) +
               " truncation-skipped";
      if (used == 0) pass = false;
    } catch (const TruncationError& err) {
      pass = false;
      detail = err.what();
    }
    add("embedding-bounds-sampled", pass, detail);
  }

  return report;
}

struct PairRecord {
  std::int64_t x = 0, y = 0;
  Dist d_complex = 0, d0 = 0, d1 = 0, d2 = 0, d_l1 = 0;
  Dist special_len = 0;
  Dist bound = 0;
  Dist slack = 0;
  int path_n = 0;
  bool lower_ok = true, upper_ok = true, path_ok = true;
  bool truncated = false;
};

struct DistortionReport {
  InstanceConstants constants;
  std::vector<PairRecord> rows;  // doubling-agreeing pairs only
  std::int64_t pairs_requested = 0;
  std::int64_t excluded_doubling = 0;
  std::int64_t excluded_truncation = 0;
  std::int64_t violations_lower = 0;
  std::int64_t violations_upper = 0;
  std::int64_t violations_path = 0;
  std::int64_t path_failures = 0;
  double max_multiplicative = 0.0;
  double mean_multiplicative = 0.0;
  double envelope = 0.0;

  bool clean() const {
    return violations_lower == 0 && violations_upper == 0 &&
           violations_path == 0;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "x,y,d_complex,d0,d1,d2,d_l1,special_path_length,bound,slack\n";
    for (const auto& r : rows)
      out << r.x << "," << r.y << "," << r.d_complex << "," << r.d0 << ","
          << r.d1 << "," << r.d2 << "," << r.d_l1 << "," << r.special_len
          << "," << r.bound << "," << r.slack << "\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["constants"] = {{"mu", constants.mu},
                      {"lip", constants.lip},
                      {"rho_hat", constants.rho_hat}};
    j["pairs_requested"] = pairs_requested;
    j["pairs_used"] = rows.size();
    j["excluded_doubling"] = excluded_doubling;
    j["excluded_truncation"] = excluded_truncation;
    j["violations"] = {{"lower", violations_lower},
                       {"upper", violations_upper},
                       {"path", violations_path}};
    j["path_failures"] = path_failures;
    j["distortion"] = {{"max_multiplicative", max_multiplicative},
                       {"mean_multiplicative", mean_multiplicative},
                       {"envelope", envelope}};
    return j;
  }
};

// Per-pair evaluation of the full inequality set over doubling-certified
// safe-core pairs. Pure reads over immutable structures, so the pair loop
// runs in a worker pool.
inline DistortionReport run_distortion(const Instance& inst,
                                       const Instance& big, int pairs,
                                       std::uint64_t seed) {
  if (!inst.quotient_error.empty())
    throw ModelViolation("distortion run on an uncertified instance: " +
                         inst.quotient_error);
  const TotalComplex& c = inst.complex;
  DistortionReport report;
  report.constants = inst.constants;
  report.envelope = inst.constants.envelope_multiplicative();
  report.pairs_requested = pairs;

  const auto core =
      c.sample_core_points(inst.config.margin, 2 * pairs, seed);
  auto rng = seeded_rng(seed, 0xd15707);
  std::vector<std::pair<std::int64_t, std::int64_t>> candidates;
  for (int i = 0; i < pairs; ++i) {
    const std::int64_t x = core[rng() % core.size()];
    const std::int64_t y = core[rng() % core.size()];
    candidates.push_back({x, y});
  }

  struct Slot {
    PairRecord rec;
    bool doubling_agree = true;
  };
  std::vector<Slot> slots(candidates.size());
  parallel_for(static_cast<std::int64_t>(candidates.size()), [&](std::int64_t i) {
    const auto [x, y] = candidates[i];
    Slot& slot = slots[i];
    PairRecord& r = slot.rec;
    r.x = x;
    r.y = y;
    r.d_complex = c.distance(x, y);
    const Dist d_big =
        big.complex.distance(transfer_vertex(c, big.complex, x),
                             transfer_vertex(c, big.complex, y));
    if (d_big != r.d_complex) {
      slot.doubling_agree = false;
      return;
    }
    try {
      const ProductPoint px = embed(c, inst.q1, inst.q2, x);
      const ProductPoint py = embed(c, inst.q1, inst.q2, y);
      r.d0 = c.bs().tree().distance(px.t0, py.t0);
      r.d1 = inst.q1.distance(px.c1, py.c1);
      r.d2 = inst.q2.distance(px.c2, py.c2);
      r.d_l1 = r.d0 + r.d1 + r.d2;
      r.bound = inst.constants.lower_rhs(r.d0, r.d1, r.d2);
      r.slack = r.bound - r.d_complex;
      r.lower_ok = inst.constants.lower_ok(r.d_complex, r.d0, r.d1, r.d2);
      r.upper_ok = inst.constants.upper_fi_ok(r.d1, r.d_complex) &&
                   inst.constants.upper_fi_ok(r.d2, r.d_complex) &&
                   inst.constants.upper_f0_ok(r.d0, r.d_complex);
      const SpecialPath path = build_special_path(c, inst.q1, inst.q2, x, y);
      const PathValidation val = validate_path(c, inst.q1, inst.q2, path);
      r.special_len = path.total_length;
      r.path_n = path.n;
      const Dist mu = c.mu();
      r.path_ok = val.ok() && path.total_length >= r.d_complex &&
                  val.max_jump <= 2 * mu &&
                  path.total_length <=
                      r.d1 + r.d2 + 2 * mu * path.n + 4 * mu &&
                  r.d0 >= path.n - 2;
    } catch (const TruncationError&) {
      r.truncated = true;
    }
  });

  double mult_sum = 0.0;
  std::int64_t mult_count = 0;
  for (const auto& slot : slots) {
    if (!slot.doubling_agree) {
      ++report.excluded_doubling;
      continue;
    }
    if (slot.rec.truncated) {
      ++report.excluded_truncation;
      continue;
    }
    const PairRecord& r = slot.rec;
    report.rows.push_back(r);
    if (!r.lower_ok) ++report.violations_lower;
    if (!r.upper_ok) ++report.violations_upper;
    if (!r.path_ok) ++report.violations_path;
    if (r.d_complex > 0) {
      const double mult =
          static_cast<double>(r.d_l1) / static_cast<double>(r.d_complex);
      report.max_multiplicative = std::max(report.max_multiplicative, mult);
      mult_sum += mult;
      ++mult_count;
    }
  }
  if (mult_count > 0)
    report.mean_multiplicative = mult_sum / static_cast<double>(mult_count);
  return report;
}

struct BenchReport {
  std::int64_t vertices = 0;
  std::int64_t edges = 0;
  double build_seconds = 0.0;
  double avg_query_ms = 0.0;
  double max_query_ms = 0.0;
  double batch_seconds = 0.0;
  int batch_threads = 1;
  std::int64_t approx_bytes = 0;

  std::string to_text() const {
    std::ostringstream out;
    out << "vertices " << vertices << "\nedges " << edges << "\nbuild_s "
        << build_seconds << "\navg_query_ms " << avg_query_ms
        << "\nmax_query_ms " << max_query_ms << "\nbatch_s " << batch_seconds
        << " threads " << batch_threads << "\napprox_mb "
        << approx_bytes / (1024.0 * 1024.0) << "\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    return {{"vertices", vertices},
            {"edges", edges},
            {"build_seconds", build_seconds},
            {"avg_query_ms", avg_query_ms},
            {"max_query_ms", max_query_ms},
            {"batch_seconds", batch_seconds},
            {"batch_threads", batch_threads},
            {"approx_bytes", approx_bytes}};
  }
};

inline BenchReport run_bench(const InstanceConfig& cfg, int query_count,
                             std::uint64_t seed) {
  BenchReport report;
  const auto t0 = std::chrono::steady_clock::now();
  const Instance inst = build_instance(cfg);
  report.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const TotalComplex& c = inst.complex;
  report.vertices = c.vertex_count();
  report.edges = c.edge_count();
  report.approx_bytes =
      static_cast<std::int64_t>(c.vertex_count()) * 24 + c.edge_count() * 32;

  auto rng = seeded_rng(seed, 0xbe4c);
  std::vector<std::pair<std::int64_t, std::int64_t>> queries;
  for (int i = 0; i < query_count; ++i)
    queries.push_back({static_cast<std::int64_t>(rng() % c.vertex_count()),
                       static_cast<std::int64_t>(rng() % c.vertex_count())});
  double total_ms = 0.0;
  for (const auto& [x, y] : queries) {
    const auto q0 = std::chrono::steady_clock::now();
    volatile Dist d = c.distance(x, y);
    (void)d;
    const double ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - q0)
            .count();
    total_ms += ms;
    report.max_query_ms = std::max(report.max_query_ms, ms);
  }
  if (!queries.empty())
    report.avg_query_ms = total_ms / static_cast<double>(queries.size());

  report.batch_threads = worker_count();
  std::vector<Dist> out(queries.size());
  const auto b0 = std::chrono::steady_clock::now();
  parallel_for(static_cast<std::int64_t>(queries.size()), [&](std::int64_t i) {
    out[i] = c.distance(queries[i].first, queries[i].second);
  });
  report.batch_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - b0)
          .count();
  return report;
}

}  // namespace fliptrees
