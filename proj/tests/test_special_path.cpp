#include <doctest.h>

#include <algorithm>

#include "fliptrees/export.hpp"
#include "fliptrees/harness.hpp"
#include "fliptrees/instance.hpp"
#include "fliptrees/rng.hpp"
#include "fliptrees/special_path.hpp"
#include "oracles.hpp"

using namespace fliptrees;

TEST_SUITE_BEGIN("pathcraft");

TEST_CASE("bass-serre geodesics") {
  const Instance inst = build_instance(instance_a_config(4));
  const BassSerreTree& bs = inst.complex.bs();
  CHECK(bs_geodesic(bs, 1, 1) == std::vector<int>{1});
  CHECK(bs_geodesic(bs, 0, 2) == std::vector<int>{0, 1, 2});
}

TEST_CASE("identical endpoints give the empty path") {
  const Instance inst = build_instance(instance_a_config(4));
  const auto x = inst.complex.canonical_id({0, PieceVertex::base_point(2), 1});
  const SpecialPath p =
      build_special_path(inst.complex, inst.q1, inst.q2, x, x);
  CHECK(p.total_length == 0);
  CHECK(p.vertices == std::vector<std::int64_t>{x});
  const auto val = validate_path(inst.complex, inst.q1, inst.q2, p);
  CHECK(val.ok());
  CHECK(val.recomputed_length == 0);
}

TEST_CASE("same-piece pair: horizontal plus vertical structure") {
  const Instance inst = build_instance(instance_a_config(6));
  const TotalComplex& c = inst.complex;
  const auto x = c.canonical_id({0, PieceVertex::base_point(2), -3});
  const auto y = c.canonical_id({0, PieceVertex::base_point(9), 4});
  const SpecialPath p = build_special_path(c, inst.q1, inst.q2, x, y);
  CHECK(p.n == 0);
  CHECK(p.vertical_len == 7);
  CHECK(p.total_length == p.vertical_len + 7);  // then horizontal run
  CHECK(p.total_length <= p.d1 + p.d2 + 4);     // n = 0 display
  CHECK(p.total_length >= c.distance(x, y));
  const auto val = validate_path(c, inst.q1, inst.q2, p);
  CHECK(val.ok());
}

TEST_CASE("cross pair on the three-piece fixture") {
  const Instance inst = build_instance(instance_a_config(6));
  const TotalComplex& c = inst.complex;
  const auto x = c.canonical_id({0, PieceVertex::base_point(3), -2});
  const auto y = c.canonical_id({2, PieceVertex::base_point(10), 3});
  const SpecialPath p = build_special_path(c, inst.q1, inst.q2, x, y);
  CHECK(p.n == 2);
  CHECK(p.d0 == 2);
  REQUIRE(p.ledger.size() == 3);
  // Ledger accounting reproduces the displayed sum exactly.
  Dist horiz = 0, jumps = 0;
  for (const auto& seg : p.ledger) {
    horiz += seg.horiz_len;
    jumps += seg.jump_after;
    CHECK(seg.jump_after <= 2);
  }
  CHECK(p.total_length == p.enter_jump + horiz + jumps);
  CHECK(horiz == p.d1 + p.d2);

  // Soundness against the exact engine and an independent Dijkstra oracle.
  std::vector<std::vector<std::pair<int, Dist>>> adj(c.vertex_count());
  for (std::int64_t v = 0; v < c.vertex_count(); ++v)
    for (const auto& [w, len] : c.neighbors(v))
      adj[v].push_back({static_cast<int>(w), len});
  const auto row = oracles::dijkstra(adj, static_cast<int>(x));
  CHECK(row[y] == c.distance(x, y));
  CHECK(p.total_length >= row[y]);
  CHECK(p.total_length <= p.d1 + p.d2 + 2 * p.n + 4);
  CHECK(p.total_length <= p.d1 + p.d2 + 2 * p.d0 + 4);

  const auto val = validate_path(c, inst.q1, inst.q2, p);
  CHECK(val.ok());
  CHECK(val.recomputed_length == p.total_length);
  CHECK(val.max_jump <= 2);

  const auto ledger = path_ledger_json(p);
  CHECK(ledger["segments"].size() == 3);
  CHECK(ledger["total_length"] == p.total_length);
  Dist ledger_sum = Dist(ledger["enter_jump"]) + Dist(ledger["vertical_len"]);
  for (const auto& seg : ledger["segments"])
    ledger_sum += Dist(seg["horiz_len"]) + Dist(seg["jump_after"]);
  CHECK(ledger_sum == p.total_length);
}

TEST_CASE("tampered paths are flagged by the validator") {
  const Instance inst = build_instance(instance_a_config(5));
  const TotalComplex& c = inst.complex;
  const auto x = c.canonical_id({0, PieceVertex::base_point(2), 0});
  const auto y = c.canonical_id({2, PieceVertex::base_point(8), 2});
  SpecialPath p = build_special_path(c, inst.q1, inst.q2, x, y);
  REQUIRE(p.vertices.size() > 4);
  p.vertices[p.vertices.size() / 2] =
      (p.vertices[p.vertices.size() / 2] + 7) % c.vertex_count();
  const auto val = validate_path(c, inst.q1, inst.q2, p);
  CHECK_FALSE(val.adjacency_ok);
  CHECK_FALSE(val.ok());
}

TEST_CASE("sampled safe-core pairs satisfy every path property") {
  for (const InstanceConfig& cfg :
       {instance_a_config(6), instance_b_config(4)}) {
    const Instance inst = build_instance(cfg);
    const TotalComplex& c = inst.complex;
    const auto core = c.sample_core_points(cfg.margin, 240, 77);
    auto rng = seeded_rng(78);
    int built = 0;
    for (int trial = 0; trial < 120; ++trial) {
      const auto x = core[rng() % core.size()];
      const auto y = core[rng() % core.size()];
      const SpecialPath p = build_special_path(c, inst.q1, inst.q2, x, y);
      ++built;
      const auto val = validate_path(c, inst.q1, inst.q2, p);
      REQUIRE(val.ok());
      REQUIRE(p.total_length >= c.distance(x, y));
      REQUIRE(val.max_jump <= 2);
      REQUIRE(p.total_length <= p.d1 + p.d2 + 2 * p.n + 4);
      REQUIRE(p.d0 >= p.n - 2);
      // Per-piece segments stay geodesic in their quotient image.
      for (const auto& seg : p.ledger) {
        const QuotientTree& q = seg.parity == 1 ? inst.q1 : inst.q2;
        REQUIRE(q.distance(seg.start_class, seg.end_class) == seg.horiz_len);
      }
    }
    CHECK(built == 120);
  }
}

TEST_CASE("paths from glued starting points enter through the tether") {
  const Instance inst = build_instance(instance_a_config(6));
  const TotalComplex& c = inst.complex;
  const int e01 = c.bs().edge_id(0, 1);
  const int slot0 = c.piece(0).slot_for_edge(e01);
  const auto x = c.canonical_id({0, PieceVertex::line_point(slot0, 2), 3});
  const auto y = c.canonical_id({2, PieceVertex::base_point(6), -2});
  const SpecialPath p = build_special_path(c, inst.q1, inst.q2, x, y);
  CHECK(p.enter_jump == 1);
  const auto val = validate_path(c, inst.q1, inst.q2, p);
  CHECK(val.ok());
  CHECK(p.total_length >= c.distance(x, y));
}

TEST_SUITE_END();
