#include <gtest/gtest.h>

#include "roadrl/error.hpp"
#include "roadrl/routing.hpp"
#include "support/brute_paths.hpp"

using namespace roadrl;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<Errc>(-1);
}

}  // namespace

TEST(Dijkstra, TriangleWithAbstractWeights) {
  RoadGraph g;
  for (int i = 0; i < 3; ++i) g.add_node({0.001 * i, 0});
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(0, 2);
  const std::vector<double> w{1, 1, 3};
  const auto p = dijkstra_weighted(g, 0, 2, w);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->nodes, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(p->edges, (std::vector<EdgeId>{0, 1}));
  EXPECT_EQ(p->total_cost, 2.0);
}

TEST(Dijkstra, Errors) {
  RoadGraph g;
  for (int i = 0; i < 3; ++i) g.add_node({0.001 * i, 0});
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  EXPECT_EQ(code_of([&] { dijkstra_weighted(g, 1, 1, std::vector<double>{1, 1}); }), Errc::SameNode);
  EXPECT_EQ(code_of([&] { dijkstra_weighted(g, 0, 2, std::vector<double>{1, 0}); }), Errc::InvalidWeight);
  EXPECT_EQ(code_of([&] { dijkstra_weighted(g, 0, 2, std::vector<double>{-1, 1}); }), Errc::InvalidWeight);
  EXPECT_FALSE(dijkstra_weighted(g, 2, 0, std::vector<double>{1, 1}).has_value());
}

TEST(Dijkstra, EqualCostsPreferLowerNode) {
  // 0 -> 1 -> 3 and 0 -> 2 -> 3 cost the same; node 1 settles first.
  RoadGraph g;
  for (int i = 0; i < 4; ++i) g.add_node({0.001 * i, 0});
  g.add_edge(0, 2);
  g.add_edge(0, 1);
  g.add_edge(2, 3);
  g.add_edge(1, 3);
  const auto p = dijkstra_weighted(g, 0, 3, std::vector<double>{1, 1, 1, 1});
  EXPECT_EQ(p->nodes, (std::vector<NodeId>{0, 1, 3}));
}

TEST(Dijkstra, MatchesBruteForceOnRandomDigraphs) {
  Rng rng(99);
  for (int seed = 0; seed < 100; ++seed) {
    std::vector<double> w;
    const auto n = 2 + rng.uniform_index(9);
    const auto g = oracle::random_digraph(rng, n, rng.uniform(0.15, 0.6), w);
    for (NodeId s = 0; s < n; ++s) {
      for (NodeId t = 0; t < n; ++t) {
        if (s == t) continue;
        const double best = oracle::brute_force_cost(g, s, t, w);
        const auto p = dijkstra_weighted(g, s, t, w);
        if (std::isinf(best)) {
          EXPECT_FALSE(p.has_value());
          continue;
        }
        ASSERT_TRUE(p.has_value());
        EXPECT_NEAR(p->total_cost, best, 1e-9 * best);
        EXPECT_TRUE(oracle::path_consistent(g, *p, s, t, w));
      }
    }
  }
}

TEST(Dijkstra, PrefixesAreOptimalAndScalingKeepsPath) {
  Rng rng(5);
  for (int k = 0; k < 30; ++k) {
    std::vector<double> w;
    const auto g = oracle::random_digraph(rng, 10, 0.35, w);
    const auto p = dijkstra_weighted(g, 0, 9, w);
    if (!p) continue;
    double prefix = 0.0;
    for (std::size_t i = 0; i + 1 < p->nodes.size(); ++i) {
      prefix += w[p->edges[i]];
      const auto sub = dijkstra_weighted(g, 0, p->nodes[i + 1], w);
      EXPECT_NEAR(sub->total_cost, prefix, 1e-9 * prefix);
    }
    std::vector<double> scaled = w;
    for (double& x : scaled) x *= 3.7;
    EXPECT_EQ(dijkstra_weighted(g, 0, 9, scaled)->nodes, p->nodes);
  }
}

TEST(ModeWeight, ShortestAndFastest) {
  RoadEdge e;
  e.gcd = 100.0;
  e.v_max = 5.0;
  e.w_fast = 20.0;
  EXPECT_EQ(mode_weight(e, PathMode::Shortest), 100.0);
  EXPECT_EQ(mode_weight(e, PathMode::Fastest), 20.0);
  RoadEdge bare;
  EXPECT_EQ(code_of([&] { mode_weight(bare, PathMode::Fastest); }), Errc::NotEnhanced);
}

TEST(ModeWeight, LongFastVersusShortSlow) {
  RoadGraph g;
  const NodeId a = g.add_node({0, 0});
  const NodeId fast_mid = g.add_node({0.0005, 0.0005});
  const NodeId slow_mid = g.add_node({-0.0005, 0.0005});
  const NodeId b = g.add_node({0, 0.001});
  const EdgeId f1 = g.add_edge(a, fast_mid, 20.0);
  const EdgeId f2 = g.add_edge(fast_mid, b, 20.0);
  const EdgeId s1 = g.add_edge(a, slow_mid, 5.0);
  const EdgeId s2 = g.add_edge(slow_mid, b, 5.0);
  for (EdgeId e : {f1, f2}) g.edge_mut(e).gcd = 100.0;
  for (EdgeId e : {s1, s2}) g.edge_mut(e).gcd = 75.0;
  g = enhance_fastest_weights(g);
  const auto shortest = dijkstra(g, a, b, PathMode::Shortest);
  const auto fastest = dijkstra(g, a, b, PathMode::Fastest);
  EXPECT_EQ(shortest->nodes[1], slow_mid);
  EXPECT_EQ(shortest->total_cost, 150.0);
  EXPECT_EQ(fastest->nodes[1], fast_mid);
  EXPECT_EQ(fastest->total_cost, 10.0);
}
