#include <doctest.h>

#include <algorithm>
#include <set>

#include "fliptrees/complex.hpp"
#include "fliptrees/harness.hpp"
#include "fliptrees/instance.hpp"
#include "fliptrees/rng.hpp"
#include "oracles.hpp"

using namespace fliptrees;

namespace {

Instance micro_a() { return build_instance(instance_a_config(4)); }

}  // namespace

TEST_SUITE_BEGIN("complex");

TEST_CASE("single piece, no gluings: plain product counts") {
  InstanceConfig cfg;
  cfg.name = "single";
  cfg.bs_shape = PathShape{1};
  cfg.radii = {4, 4, 4};
  cfg.margin = 0;
  const Instance inst = build_instance(cfg);
  CHECK(inst.complex.vertex_count() == 18 * 9);  // |F_v| * fiber window
  CHECK(inst.complex.log().identified_pairs == 0);
}

TEST_CASE("flip image swaps the line parameter and the fiber") {
  const Instance inst = build_instance(instance_a_config(6));
  const TotalComplex& c = inst.complex;
  const int e01 = c.bs().edge_id(0, 1);
  const int slot0 = c.piece(0).slot_for_edge(e01);
  const int slot1 = c.piece(1).slot_for_edge(e01);

  const ComplexVertex x{0, PieceVertex::line_point(slot0, 3), 5};
  const ComplexVertex y = flip_image(c, x, e01);
  CHECK(y.piece == 1);
  CHECK(y.point == PieceVertex::line_point(slot1, 5));
  CHECK(y.z == 3);

  const ComplexVertex fixed{0, PieceVertex::line_point(slot0, 0), 0};
  const ComplexVertex fixed_img = flip_image(c, fixed, e01);
  CHECK(fixed_img.point.t == 0);
  CHECK(fixed_img.z == 0);

  // Involution and shared canonical id, exhaustively over the plane.
  for (int t = -6; t <= 6; ++t)
    for (int z = -6; z <= 6; ++z) {
      const ComplexVertex a{0, PieceVertex::line_point(slot0, t), z};
      const ComplexVertex b = flip_image(c, a, e01);
      CHECK(flip_image(c, b, e01) == a);
      CHECK(c.canonical_id(a) == c.canonical_id(b));
      CHECK(c.distance(c.canonical_id(a), c.canonical_id(b)) == 0);
    }

  CHECK_THROWS_AS(flip_image(c, ComplexVertex{0, PieceVertex::base_point(0), 0},
                             e01),
                  Error);
}

TEST_CASE("out-of-window flips are reported and skipped at build") {
  // Line window 6 exceeds the fiber window 4, so flips with |t| > 4 have no
  // partner and are skipped.
  InstanceConfig cfg = instance_a_config(6);
  cfg.radii = {6, 6, 4};
  cfg.margin = 0;
  const Instance inst = build_instance(cfg);
  const TotalComplex& c = inst.complex;
  CHECK(c.log().skipped_out_of_window > 0);
  const int e01 = c.bs().edge_id(0, 1);
  const int slot0 = c.piece(0).slot_for_edge(e01);
  CHECK_THROWS_AS(
      flip_image(c, ComplexVertex{0, PieceVertex::line_point(slot0, 5), 0},
                 e01),
      TruncationError);
}

TEST_CASE("identified vertex count matches the union-find statistics") {
  const Instance inst = micro_a();
  const BuildLog& log = inst.complex.log();
  CHECK(log.descriptions == 567);
  CHECK(log.identified_per_edge == std::vector<std::int64_t>{81, 81});
  CHECK(log.canonical == log.descriptions - log.identified_pairs);
  CHECK(inst.complex.vertex_count() == 405);
}

TEST_CASE("distance within one piece, base coordinates only") {
  const Instance inst = micro_a();
  const TotalComplex& c = inst.complex;
  // Frozen from the naive materialization oracle: horizontal 3 + vertical 2.
  const std::int64_t a =
      c.canonical_id({0, PieceVertex::base_point(0), 0});
  const std::int64_t b =
      c.canonical_id({0, PieceVertex::base_point(3), 2});
  CHECK(c.distance(a, b) == 5);
  CHECK(c.distance(a, a) == 0);
}

TEST_CASE("distance engine matches the naive all-pairs oracle") {
  const InstanceConfig cfg = instance_a_config(4);
  auto [bs, pieces] = generate_instance(cfg);
  auto nc = oracles::naive_complex(bs, pieces, cfg.radii);
  const TotalComplex c = build_complex(std::move(bs), std::move(pieces),
                                       cfg.radii);
  REQUIRE(nc.canonical == c.vertex_count());

  // Identifications agree: same naive root iff same canonical id.
  std::vector<std::int64_t> naive_to_canon(nc.canonical, -1);
  for (std::size_t i = 0; i < nc.keys.size(); ++i) {
    const auto [piece, kind, a, t, z] = nc.keys[i];
    const PieceVertex pt = kind == 1 ? PieceVertex::line_point(a, t)
                                     : PieceVertex::base_point(a);
    const std::int64_t id = c.canonical_id({piece, pt, z});
    const int root = nc.root_of[i];
    if (naive_to_canon[root] < 0)
      naive_to_canon[root] = id;
    else
      REQUIRE(naive_to_canon[root] == id);
  }
  std::set<std::int64_t> image(naive_to_canon.begin(), naive_to_canon.end());
  REQUIRE(static_cast<std::int64_t>(image.size()) == c.vertex_count());

  for (int source = 0; source < nc.canonical; ++source) {
    const auto oracle_row = oracles::dijkstra(nc.adj, source);
    const auto got = c.distances_from(naive_to_canon[source]);
    for (int target = 0; target < nc.canonical; ++target)
      REQUIRE(got[naive_to_canon[target]] == oracle_row[target]);
  }
}

TEST_CASE("unidirectional and bidirectional searches agree") {
  const Instance inst = build_instance(instance_a_config(6));
  const TotalComplex& c = inst.complex;
  auto rng = seeded_rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = static_cast<std::int64_t>(rng() % c.vertex_count());
    const auto b = static_cast<std::int64_t>(rng() % c.vertex_count());
    REQUIRE(c.distance(a, b) == c.distance_bidirectional(a, b));
  }
}

TEST_CASE("vertical translation within a piece is an isometry") {
  const Instance inst = micro_a();
  const TotalComplex& c = inst.complex;
  auto rng = seeded_rng(43);
  for (int trial = 0; trial < 60; ++trial) {
    const int piece = static_cast<int>(rng() % 3);
    const int na = c.piece(piece).fv_vertex_count();
    const auto p = c.piece(piece).fv_vertex(static_cast<int>(rng() % na));
    const auto q = c.piece(piece).fv_vertex(static_cast<int>(rng() % na));
    const int z = static_cast<int>(rng() % 7) - 3;  // margin 1
    const Dist d1 = c.distance(c.canonical_id({piece, p, z}),
                               c.canonical_id({piece, q, z}));
    const Dist d2 = c.distance(c.canonical_id({piece, p, z + 1}),
                               c.canonical_id({piece, q, z + 1}));
    REQUIRE(d1 == d2);
  }
}

TEST_CASE("bipartition has even distances within each class") {
  const Instance inst = build_instance(instance_b_config(3));
  const BassSerreTree& bs = inst.complex.bs();
  for (int u = 0; u < bs.vertex_count(); ++u)
    for (int v = 0; v < bs.vertex_count(); ++v)
      if (bs.parity(u) == bs.parity(v))
        CHECK(bs.tree().distance(u, v) % 2 == 0);
}

TEST_CASE("core sampling is deterministic and margin-aware") {
  const Instance inst = micro_a();
  const TotalComplex& c = inst.complex;

  const auto all = c.sample_core_points(0, 1 << 20, 9);
  CHECK(static_cast<std::int64_t>(all.size()) == c.vertex_count());

  const auto s1 = c.sample_core_points(2, 40, 9);
  const auto s2 = c.sample_core_points(2, 40, 9);
  CHECK(s1 == s2);
  const auto s3 = c.sample_core_points(2, 40, 10);
  CHECK(s1 != s3);

  for (const auto id : s1) {
    const ComplexVertex v = c.rep(id);
    CHECK(std::abs(v.z) <= 2);
    if (v.point.kind == PieceVertex::Kind::line)
      CHECK(std::abs(v.point.t) <= 2);
    else
      CHECK(std::abs(v.point.a - c.piece(v.piece).center()) <= 2);
  }

  // Margin equal to the radius leaves only coordinate-zero vertices.
  const auto tight = c.sample_core_points(4, 1 << 20, 9);
  for (const auto id : tight) {
    const ComplexVertex v = c.rep(id);
    CHECK(v.z == 0);
    if (v.point.kind == PieceVertex::Kind::line) CHECK(v.point.t == 0);
  }
  CHECK_THROWS_AS(c.sample_core_points(5, 10, 9), TruncationError);
}

TEST_CASE("doubling check: identical radii give zero disagreements") {
  const Instance inst = micro_a();
  const TotalComplex& c = inst.complex;
  const auto core = c.sample_core_points(1, 60, 11);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::size_t i = 0; i + 1 < core.size(); i += 2)
    pairs.push_back({core[i], core[i + 1]});
  const auto report = doubling_check(c, c, pairs);
  CHECK(report.disagreements.empty());
  CHECK(report.disagreement_fraction() == 0.0);
}

TEST_CASE("doubling check against 1.5x radii") {
  const Instance small = build_instance(instance_a_config(6));
  const Instance big = build_instance(instance_a_config(9));
  const auto core = small.complex.sample_core_points(2, 200, 12);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::size_t i = 0; i + 1 < core.size(); i += 2)
    pairs.push_back({core[i], core[i + 1]});
  const auto report = doubling_check(small.complex, big.complex, pairs);
  for (const auto& row : report.rows) CHECK(row.d_small >= row.d_big);
  // An interior same-piece pair can never profit from the removed region.
  const auto a = small.complex.canonical_id({0, PieceVertex::base_point(6), 0});
  const auto b = small.complex.canonical_id({0, PieceVertex::base_point(7), 1});
  const auto inner = doubling_check(small.complex, big.complex, {{a, b}});
  CHECK(inner.disagreements.empty());
}

TEST_CASE("rho_hat is two on the synthetic fixtures") {
  CHECK(micro_a().complex.rho_hat() == 2);
  CHECK(build_instance(instance_b_config(3)).complex.rho_hat() == 2);
}

TEST_CASE("complex distance is a metric on sampled triples") {
  const Instance inst = micro_a();
  const TotalComplex& c = inst.complex;
  auto rng = seeded_rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = static_cast<std::int64_t>(rng() % c.vertex_count());
    const auto b = static_cast<std::int64_t>(rng() % c.vertex_count());
    const auto d = static_cast<std::int64_t>(rng() % c.vertex_count());
    CHECK(c.distance(a, b) == c.distance(b, a));
    CHECK(c.distance(a, d) <= c.distance(a, b) + c.distance(b, d));
  }
}

TEST_CASE("missing boundary line for a Bass-Serre edge is rejected") {
  const InstanceConfig cfg = instance_a_config(4);
  auto [bs, pieces] = generate_instance(cfg);
  // Rewire piece 0's only line to a non-existent edge id.
  MetricTree base = MetricTree::path(9);
  const TreeLine shadow =
      TreeLine::from_vertices(base, {0, 1, 2, 3, 4, 5, 6, 7, 8}, 1);
  pieces[0] = make_synthetic_piece(std::move(base), 4, 4, {{99, shadow}});
  CHECK_THROWS_AS(build_complex(std::move(bs), std::move(pieces), cfg.radii),
                  ConfigError);
}

TEST_CASE("weighted tethers route through the dijkstra engine") {
  // mu = 2 tethers make the complex non-unit; distances must still match
  // the oracle exactly.
  const Radii radii{4, 4, 4};
  MetricTree t0 = MetricTree::path(2);
  BassSerreTree bs{std::move(t0)};
  std::vector<Piece> pieces;
  for (int v = 0; v < 2; ++v) {
    MetricTree base = MetricTree::path(9);
    const TreeLine shadow =
        TreeLine::from_vertices(base, {0, 1, 2, 3, 4, 5, 6, 7, 8}, 1);
    pieces.push_back(
        make_piece(std::move(base), 4, 4, {{0, 4, shadow}}, 2, 1, true));
  }
  auto nc = oracles::naive_complex(bs, pieces, radii);
  const TotalComplex c = build_complex(std::move(bs), std::move(pieces), radii);
  CHECK_FALSE(c.all_unit());
  REQUIRE(nc.canonical == c.vertex_count());
  auto rng = seeded_rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    const int i = static_cast<int>(rng() % nc.keys.size());
    const int j = static_cast<int>(rng() % nc.keys.size());
    const auto to_vertex = [&](int idx) {
      const auto [piece, kind, a, t, z] = nc.keys[idx];
      const PieceVertex pt = kind == 1 ? PieceVertex::line_point(a, t)
                                       : PieceVertex::base_point(a);
      return c.canonical_id({piece, pt, z});
    };
    const auto row = oracles::dijkstra(nc.adj, nc.root_of[i]);
    REQUIRE(c.distance(to_vertex(i), to_vertex(j)) == row[nc.root_of[j]]);
    REQUIRE(c.distance_bidirectional(to_vertex(i), to_vertex(j)) ==
            row[nc.root_of[j]]);
  }
}

TEST_CASE("desc encode and decode round-trip") {
  const Instance inst = micro_a();
  const TotalComplex& c = inst.complex;
  for (std::int64_t id = 0; id < c.vertex_count(); ++id) {
    const ComplexVertex v = c.rep(id);
    CHECK(c.canonical_id(v) == id);
  }
}

TEST_SUITE_END();
