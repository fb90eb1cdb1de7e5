#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>

#include "fliptrees/harness.hpp"
#include "fliptrees/instance.hpp"
#include "fliptrees/quotient.hpp"
#include "oracles.hpp"

using namespace fliptrees;

namespace {

int shadow_vertex(const TotalComplex& c, int piece, int junction, int t) {
  const Piece& p = c.piece(piece);
  const int slot = p.slot_for_edge(c.bs().edge_id(piece, junction));
  return p.line(slot).shadow.at(t);
}

}  // namespace

TEST_SUITE_BEGIN("quotient");

TEST_CASE("single-vertex tree: one quotient is the base tree, one is empty") {
  InstanceConfig cfg;
  cfg.name = "single";
  cfg.bs_shape = PathShape{1};
  cfg.radii = {4, 4, 4};
  cfg.margin = 0;
  const Instance inst = build_instance(cfg);
  CHECK(inst.q1.class_count() == 9);  // T_v itself, class per base vertex
  CHECK(inst.q1.piece_image(0).size() == 9);
  CHECK(inst.q2.empty());
  CHECK(inst.q2.class_count() == 0);
}

TEST_CASE("matched parameters glue across the junction") {
  const Instance inst = build_instance(instance_a_config(6));
  const TotalComplex& c = inst.complex;
  // Same fiber coordinate glues: class of (v0, shadow(5)) equals class of
  // (v1, shadow(5)) in T1.
  for (int t = -6; t <= 6; ++t)
    CHECK(inst.q1.class_of(0, shadow_vertex(c, 0, 1, t)) ==
          inst.q1.class_of(2, shadow_vertex(c, 2, 1, t)));
  // Distinct parameters stay distinct: the glued line is injective.
  std::set<int> line_classes;
  for (int t = -6; t <= 6; ++t)
    line_classes.insert(inst.q1.class_of(0, shadow_vertex(c, 0, 1, t)));
  CHECK(line_classes.size() == 13);
}

TEST_CASE("class counts from the union-find statistics") {
  const Instance inst = build_instance(instance_a_config(6));
  // |V(T1)| = |T_v0| + |T_v1| - glued window size = 13 + 13 - 13.
  CHECK(inst.q1.class_count() == 13);
  CHECK(inst.q2.class_count() == 13);  // T_w alone
  CHECK(inst.q1.member_pieces() == std::vector<int>{0, 2});
  CHECK(inst.q2.member_pieces() == std::vector<int>{1});
}

TEST_CASE("interior vertices beyond the window stay singletons") {
  InstanceConfig cfg = instance_a_config(6);
  cfg.radii = {8, 6, 6};  // base strictly larger than the glued window
  const Instance inst = build_instance(cfg);
  const TotalComplex& c = inst.complex;
  // A base vertex at distance 8 from the center is off every shadow.
  const int far_vertex = 0;  // path endpoint
  CHECK(c.piece(0).base_tree().distance(far_vertex, c.piece(0).center()) == 8);
  const int cls = inst.q1.class_of(0, far_vertex);
  CHECK(inst.q1.members_of(cls).size() == 1);
  // A glued vertex collects one member per neighbour sharing the parameter.
  const int glued = inst.q1.class_of(0, shadow_vertex(c, 0, 1, 0));
  CHECK(inst.q1.members_of(glued).size() == 2);
  // class_of is constant on a class.
  for (const auto& [piece, vert] : inst.q1.members_of(glued))
    CHECK(inst.q1.class_of(piece, vert) == glued);
}

TEST_CASE("wrong parity and unknown ids are rejected") {
  const Instance inst = build_instance(instance_a_config(4));
  CHECK_THROWS_AS(inst.q1.class_of(1, 0), Error);  // piece 1 has parity 2
  CHECK_THROWS_AS(inst.q2.class_of(0, 0), Error);
  CHECK_THROWS_AS(inst.q1.class_of(0, 10'000), Error);
  CHECK_THROWS_AS(inst.q1.distance(0, 10'000), Error);
}

TEST_CASE("quotient distance: identity, isometric interior, oracle check") {
  const Instance inst = build_instance(instance_a_config(6));
  const auto& q = inst.q1;
  CHECK(q.distance(0, 0) == 0);

  // Interior pairs reproduce the member-tree metric.
  const auto& base = inst.complex.piece(0).base_tree();
  for (int a = 0; a < base.vertex_count(); ++a)
    for (int b = 0; b < base.vertex_count(); ++b)
      REQUIRE(q.distance(q.class_of(0, a), q.class_of(0, b)) ==
              base.distance(a, b));

  // Cross-piece distances match a BFS oracle on the materialized graph.
  std::vector<std::vector<std::pair<int, Dist>>> adj(q.class_count());
  for (const auto& e : q.tree().edges()) {
    adj[e.u].push_back({e.v, e.length});
    adj[e.v].push_back({e.u, e.length});
  }
  for (int from = 0; from < q.class_count(); ++from) {
    const auto row = oracles::dijkstra(adj, from);
    for (int to = 0; to < q.class_count(); ++to)
      REQUIRE(q.distance(from, to) == row[to]);
  }
}

TEST_CASE("piece images are connected, isometric, and intersect in the line") {
  InstanceConfig cfg = instance_a_config(6);
  cfg.radii = {8, 6, 6};
  const Instance inst = build_instance(cfg);
  const auto& q = inst.q1;

  const auto image0 = q.piece_image(0);
  const auto image2 = q.piece_image(2);
  CHECK(image0.size() == 17);

  // Connectivity of the image inside the quotient tree.
  const std::set<int> in0(image0.begin(), image0.end());
  std::vector<int> stack = {image0.front()};
  std::set<int> seen = {image0.front()};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& [w, len] : q.tree().neighbors(v)) {
      (void)len;
      if (in0.count(w) && !seen.count(w)) {
        seen.insert(w);
        stack.push_back(w);
      }
    }
  }
  CHECK(seen.size() == image0.size());

  // The two images meet exactly in the glued line classes.
  std::vector<int> meet;
  std::set_intersection(image0.begin(), image0.end(), image2.begin(),
                        image2.end(), std::back_inserter(meet));
  std::set<int> line;
  for (int t = -6; t <= 6; ++t)
    line.insert(q.class_of(0, shadow_vertex(inst.complex, 0, 1, t)));
  CHECK(std::set<int>(meet.begin(), meet.end()) == line);
}

TEST_CASE("junction lines expose the glued classes in parameter order") {
  const Instance inst = build_instance(instance_a_config(6));
  const auto* junction = inst.q1.junction_for(1);
  REQUIRE(junction != nullptr);
  CHECK(junction->window == 6);
  CHECK(junction->classes.size() == 13);
  for (int t = -6; t <= 6; ++t)
    CHECK(junction->classes[t + 6] ==
          inst.q1.class_of(0, shadow_vertex(inst.complex, 0, 1, t)));
  // Consecutive line classes are adjacent: the line is a quotient geodesic.
  for (std::size_t i = 0; i + 1 < junction->classes.size(); ++i)
    CHECK(inst.q1.distance(junction->classes[i], junction->classes[i + 1]) ==
          1);
  CHECK(inst.q1.junction_for(0) == nullptr);  // wrong parity
}

TEST_CASE("parity separation") {
  const Instance inst = build_instance(instance_b_config(3));
  for (const QuotientTree* q : {&inst.q1, &inst.q2})
    for (int cls = 0; cls < q->class_count(); ++cls)
      for (const auto& [piece, vert] : q->members_of(cls)) {
        (void)vert;
        CHECK(inst.complex.bs().parity(piece) == q->parity());
      }
}

TEST_CASE("ten-piece instance certifies both quotient trees") {
  const Instance inst = build_instance(instance_b_config(4));
  CHECK(inst.q1.connected());
  CHECK(inst.q2.connected());
  CHECK(inst.q1.class_count() > 0);
  CHECK(inst.q2.class_count() > 0);
  // Root plus six leaves have parity 1; three middles parity 2.
  CHECK(inst.q1.member_pieces().size() == 7);
  CHECK(inst.q2.member_pieces().size() == 3);

  // A degree-three junction glues one member per neighbour at each
  // parameter: the root's three children share every glued class of T2.
  for (int t = -4; t <= 4; ++t) {
    const int cls = inst.q2.class_of(1, shadow_vertex(inst.complex, 1, 0, t));
    CHECK(inst.q2.members_of(cls).size() == 3);
  }
}

TEST_CASE("incremental treeness trace replays the construction") {
  const Instance a = build_instance(instance_a_config(4));
  const auto trace1 = incremental_treeness_trace(a.complex, 1);
  REQUIRE(trace1.steps.size() == 2);
  CHECK(trace1.steps[0].junctions.empty());
  CHECK(trace1.steps[1].junctions == std::vector<int>{1});
  CHECK(trace1.steps[1].merges == 9);  // one merge per glued parameter

  const auto trace2 = incremental_treeness_trace(a.complex, 2);
  REQUIRE(trace2.steps.size() == 1);  // one tree, zero gluings
  CHECK(trace2.steps[0].merges == 0);

  // Seven-piece path: parity 1 holds four trees, three gluing steps.
  InstanceConfig cfg;
  cfg.name = "seven";
  cfg.bs_shape = PathShape{7};
  cfg.radii = {3, 3, 3};
  cfg.margin = 0;
  const Instance b = build_instance(cfg);
  const auto trace7 = incremental_treeness_trace(b.complex, 1);
  REQUIRE(trace7.steps.size() == 4);
  int gluing_steps = 0;
  for (const auto& step : trace7.steps)
    if (!step.junctions.empty()) ++gluing_steps;
  CHECK(gluing_steps == 3);
  for (const auto& step : trace7.steps)
    CHECK(step.edges == step.classes - 1);
}

TEST_CASE("missing-gluing control trips the cycle detector") {
  const InstanceConfig cfg = instance_a_config(4);
  auto [bs, pieces] = generate_instance(cfg);
  const TotalComplex c = build_complex(std::move(bs), std::move(pieces),
                                       cfg.radii);
  QuotientOptions options;
  options.drop_param_zero_at_junction = 1;
  CHECK_THROWS_WITH_AS(build_quotient_trees(c, options),
                       doctest::Contains("cycle"), ModelViolation);
  CHECK_THROWS_AS(incremental_treeness_trace(c, 1, options), ModelViolation);
  // Through the config path the failure is carried on the instance and
  // surfaces as a failing invariant check.
  InstanceConfig bad = cfg;
  bad.negative_control = NegativeControl::missing_gluing;
  const Instance broken = build_instance(bad);
  CHECK(broken.quotient_error.find("cycle") != std::string::npos);
  const auto report = run_invariants(broken, 3, 20);
  CHECK_FALSE(report.all_pass());
}

TEST_SUITE_END();
