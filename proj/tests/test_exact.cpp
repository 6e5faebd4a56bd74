#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include <gtest/gtest.h>

#include "sublin/bench/generators.hpp"
#include "sublin/errors.hpp"
#include "sublin/exact.hpp"

using namespace sublin;

namespace {

SetSystem three_sets() { return SetSystem(5, {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}}); }

MetricInstance coords(std::vector<double> xy, std::vector<PointId> terminals) {
  return MetricInstance::from_coords(2, std::move(xy), std::move(terminals));
}

// Every maximal matching size of the simple graph on {0..k-1}.
std::set<std::size_t> maximal_matching_sizes(std::size_t k, const std::vector<std::vector<char>>& adj) {
  std::set<std::size_t> sizes;
  std::vector<int> state(k, 0);  // 0 undecided, 1 matched, 2 left single
  std::function<void(std::size_t)> rec = [&](std::size_t size) {
    std::size_t v = 0;
    while (v < k && state[v] != 0) ++v;
    if (v == k) {
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b)
          if (adj[a][b] && state[a] == 2 && state[b] == 2) return;
      sizes.insert(size);
      return;
    }
    state[v] = 2;
    rec(size);
    state[v] = 0;
    for (std::size_t u = v + 1; u < k; ++u)
      if (adj[v][u] && state[u] == 0) {
        state[v] = state[u] = 1;
        rec(size + 1);
        state[v] = state[u] = 0;
      }
  };
  rec(0);
  return sizes;
}

}  // namespace

TEST(ExactCover, WorkedInstanceNeedsThree) {
  EXPECT_EQ(exact_set_cover(three_sets()), 3u);
}

TEST(ExactCover, SingleFullSet) {
  SetSystem sys(6, {{0}, {0, 1, 2, 3, 4, 5}, {3, 4}});
  EXPECT_EQ(exact_set_cover(sys), 1u);
}

TEST(ExactCover, EmptyUniverseAndUncoverable) {
  EXPECT_EQ(exact_set_cover(SetSystem(0, {})), 0u);
  EXPECT_FALSE(exact_set_cover(SetSystem(3, {{0, 1}})));
}

TEST(ExactCover, NoPairsIgnoresSizeTwo) {
  SetSystem sys(4, {{0, 1}, {2, 3}, {0}, {1}, {2}, {3}, {0, 1, 2}});
  EXPECT_EQ(exact_set_cover(sys), 2u);
  EXPECT_EQ(exact_set_cover(sys, true), 2u);
  SetSystem pairs_only(4, {{0, 1}, {2, 3}, {0}, {1}, {2}, {3}});
  EXPECT_EQ(exact_set_cover(pairs_only, true), 4u);
}

TEST(ExactCover, RestrictedVariant) {
  auto sys = three_sets();
  std::vector<ElementId> elems = {2, 3};
  std::vector<SetId> sets = {0, 1};
  EXPECT_EQ(exact_set_cover(sys, elems, sets, false), 2u);
  std::vector<SetId> one = {0};
  EXPECT_FALSE(exact_set_cover(sys, elems, one, false));
}

TEST(ExactCover, RejectsLargeUniverse) {
  SetSystem sys(23, {});
  EXPECT_THROW(exact_set_cover(sys), ContractViolation);
}

TEST(ExactCover, GreedyIsAnUpperBound) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto gs = bench::generate_set_system("uniform_random", 14, 12, {{"p", 0.25}}, seed);
    auto exact = exact_set_cover(gs.system);
    auto greedy = greedy_set_cover(gs.system);
    ASSERT_TRUE(exact && greedy);
    EXPECT_LE(*exact, *greedy);
  }
}

TEST(Matching, ScanMatchingOnWorkedInstance) {
  auto sys = three_sets();
  EXPECT_EQ(scan_maximal_matching(sys.sets(), 5, false), 1u);
  EXPECT_EQ(scan_maximal_matching({{0, 1}, {2, 3}}, 4, true), 0u);
  EXPECT_EQ(scan_maximal_matching({{0, 1}, {2, 3}}, 4, false), 2u);
}

// (k − SC)/2 ≤ |M| ≤ k − SC for every maximal matching M of H.
TEST(Matching, EveryMaximalMatchingSandwichesChi) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t k = 4 + seed % 11;
    auto gs = bench::generate_set_system(seed % 3 == 0 ? "pairs_and_triples" : "uniform_random", k,
                                         k + seed % 5, {{"p", 0.3}}, seed);
    const auto& sys = gs.system;
    auto sc = exact_set_cover(sys);
    ASSERT_TRUE(sc);
    const double chi = static_cast<double>(k - *sc);
    std::vector<std::vector<char>> adj(k, std::vector<char>(k, 0));
    for (const auto& s : sys.sets())
      for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = a + 1; b < s.size(); ++b) adj[s[a]][s[b]] = adj[s[b]][s[a]] = 1;
    for (std::size_t m : maximal_matching_sizes(k, adj)) {
      EXPECT_GE(static_cast<double>(m), chi / 2.0) << seed;
      EXPECT_LE(static_cast<double>(m), chi) << seed;
    }
    auto scan = scan_maximal_matching(sys.sets(), k, false);
    EXPECT_GE(static_cast<double>(scan), chi / 2.0);
    EXPECT_LE(static_cast<double>(scan), chi);
  }
}

TEST(Matching, OfflineGreedyBasics) {
  ExplicitMultigraph empty;
  empty.id_bound = 3;
  empty.vertices = {0, 1, 2};
  EXPECT_TRUE(offline_greedy_matching(empty, RankFunction(1)).empty());
  auto g = bench::random_multigraph(50, 200, 0.2, 3);
  RankFunction rf(9);
  auto m = offline_greedy_matching(g, rf);
  auto matched = matched_vertices(g, m);
  for (const auto& e : g.edges) EXPECT_TRUE(matched[e.u] || matched[e.v]);
  std::size_t total = 0;
  for (char c : matched) total += c;
  EXPECT_EQ(total, 2 * m.size());
}

TEST(Expectation, PerfectMatchingHasNoVariance) {
  ExplicitMultigraph g;
  g.id_bound = 8;
  for (ElementId v = 0; v < 8; ++v) g.vertices.push_back(v);
  for (ElementId v = 0; v < 8; v += 2) g.edges.push_back({v, v + 1, v});
  auto mc = mc_rgmm_expectation(g, 1000, 1);
  EXPECT_EQ(mc.mean, 4.0);
  EXPECT_EQ(mc.half_width, 0.0);
}

TEST(Expectation, StarIsOne) {
  auto g = bench::star_multigraph(3);
  EXPECT_EQ(mc_rgmm_expectation(g, 1000, 1).mean, 1.0);
  EXPECT_DOUBLE_EQ(exhaustive_rgmm_expectation(g), 1.0);
}

// Middle edge first gives 1, either end edge first gives 2: (1 + 2 + 2)/3.
TEST(Expectation, PathOnFourVertices) {
  auto g = bench::path_multigraph(4);
  EXPECT_NEAR(exhaustive_rgmm_expectation(g), 5.0 / 3.0, 1e-12);
  auto mc = mc_rgmm_expectation(g, 100000, 7);
  EXPECT_NEAR(mc.mean, 5.0 / 3.0, mc.half_width + 1e-3);
}

TEST(Expectation, ExhaustiveAgreesWithMonteCarlo) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = bench::random_multigraph(6, 7, 0.25, seed);
    auto mc = mc_rgmm_expectation(g, 40000, seed);
    EXPECT_NEAR(mc.mean, exhaustive_rgmm_expectation(g), mc.half_width * 1.3 + 1e-9) << seed;
  }
}

TEST(Mst, SmallCases) {
  auto one = coords({0, 0}, {0});
  EXPECT_EQ(exact_mst(one, one.terminals()), 0.0);
  auto two = coords({0, 0, 3, 4}, {0, 1});
  EXPECT_DOUBLE_EQ(exact_mst(two, two.terminals()), 5.0);
  auto square = coords({0, 0, 1, 0, 1, 1, 0, 1}, {0, 1, 2, 3});
  EXPECT_DOUBLE_EQ(exact_mst(square, square.terminals()), 3.0);
}

TEST(Steiner, AllTerminalsEqualsMst) {
  auto square = coords({0, 0, 1, 0, 1, 1, 0, 1}, {0, 1, 2, 3});
  EXPECT_DOUBLE_EQ(exact_steiner(square), 3.0);
}

TEST(Steiner, TwoTerminalsIsTheirDistance) {
  auto line = coords({0, 0, 0.5, 0, 1, 0}, {0, 2});
  EXPECT_DOUBLE_EQ(exact_steiner(line), 1.0);
}

TEST(Steiner, EquilateralTriangleWithFermatPoint) {
  const double h = std::sqrt(3.0) / 2.0;
  auto tri = coords({0, 0, 1, 0, 0.5, h, 0.5, h / 3.0}, {0, 1, 2});
  EXPECT_NEAR(exact_steiner(tri), std::sqrt(3.0), 1e-12);
  EXPECT_DOUBLE_EQ(exact_mst(tri, tri.terminals()), 2.0);
}

TEST(Steiner, DreyfusWagnerAgrees) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 4 + seed % 9;
    auto m = bench::generate_metric(seed % 2 ? "euclidean" : "random_closure", n, 0.5, {}, seed);
    EXPECT_NEAR(exact_steiner(m), steiner_dreyfus_wagner(m, m.terminals()), 1e-9) << seed;
  }
}

TEST(Steiner, GilbertPollakBounds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto m = bench::generate_metric("euclidean", 12, 0.5, {}, seed);
    const double st = exact_steiner(m), mst = exact_mst(m, m.terminals());
    EXPECT_LE(st, mst + 1e-12);
    EXPECT_GE(st, std::sqrt(3.0) / 2.0 * mst - 1e-12);
    auto r = bench::generate_metric("random_closure", 12, 0.5, {}, seed);
    const double st2 = exact_steiner(r), mst2 = exact_mst(r, r.terminals());
    EXPECT_LE(st2, mst2 + 1e-12);
    EXPECT_GE(st2, mst2 / 2.0 - 1e-12);
  }
}

TEST(Steiner, RejectsLargeInstances) {
  auto m = bench::generate_metric("euclidean", 17, 0.5, {}, 1);
  EXPECT_THROW(exact_steiner(m), ContractViolation);
}
