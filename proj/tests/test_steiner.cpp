#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "sublin/bench/generators.hpp"
#include "sublin/errors.hpp"
#include "sublin/exact.hpp"
#include "sublin/steiner.hpp"
#include "sublin/union_find.hpp"

using namespace sublin;

namespace {

MetricInstance coords(std::vector<double> xy, std::vector<PointId> terminals) {
  return MetricInstance::from_coords(2, std::move(xy), std::move(terminals));
}

// k terminals pairwise 2 apart. With a hub, one Steiner point sits at 1 from
// every terminal; otherwise each terminal has a private Steiner point at 1
// and 2.5 from the others. `far` more Steiner points sit at 3 from terminals.
MetricInstance star_metric(std::size_t k, bool hub, std::size_t far) {
  const std::size_t near = hub ? 1 : k, n = k + near + far;
  std::vector<double> w(n * n, 0.0);
  auto set = [&](std::size_t a, std::size_t b, double d) { w[a * n + b] = w[b * n + a] = d; };
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const bool ta = a < k, tb = b < k;
      const bool na = !ta && a < k + near, nb = !tb && b < k + near;
      double d = 3.0;
      if (ta && tb) d = 2.0;
      else if (ta && nb) d = hub || b - k == a ? 1.0 : 2.5;
      else if (!ta && !tb && (na || nb) && hub) d = 2.0;
      set(a, b, d);
    }
  std::vector<PointId> terminals(k);
  std::iota(terminals.begin(), terminals.end(), PointId{0});
  return MetricInstance::from_matrix(n, std::move(w), std::move(terminals));
}

SteinerParams heavy_params() {
  SteinerParams p;
  p.kappa = 10;
  p.M = 20;
  p.P = 40;
  p.R = 50;
  p.c_case1 = 0.0;
  p.strict = true;
  return p;
}

// Components of the terminal graph with every edge of weight < t.
std::vector<std::size_t> threshold_components(const MetricInstance& m, double t) {
  auto ts = m.terminals();
  UnionFind uf(ts.size());
  for (std::size_t a = 0; a < ts.size(); ++a)
    for (std::size_t b = a + 1; b < ts.size(); ++b)
      if (m.distance(ts[a], ts[b]) < t) uf.unite(a, b);
  std::vector<std::size_t> out(ts.size());
  for (std::size_t a = 0; a < ts.size(); ++a) out[a] = uf.find(a);
  return out;
}

bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::uint32_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

}  // namespace

TEST(Steiner, AllTerminalsReturnsMst) {
  auto m = bench::generate_metric("euclidean", 40, 1.0, {}, 3);
  DistanceOracle o(m);
  auto r = estimate_steiner(o, {});
  EXPECT_EQ(r.branch, "trivial");
  EXPECT_NEAR(r.estimate, exact_mst(m, m.terminals()), 1e-12);
}

TEST(Steiner, TwoTerminalsWithMidpoint) {
  auto m = coords({0, 0, 0.5, 0, 1, 0}, {0, 2});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DistanceOracle o(m);
    SteinerParams p;
    p.seed = seed;
    EXPECT_DOUBLE_EQ(estimate_steiner(o, p).estimate, 1.0);
  }
}

TEST(Steiner, FermatPointTriggersImprovement) {
  const double h = std::sqrt(3.0) / 2.0;
  auto m = coords({0, 0, 1, 0, 0.5, h, 0.5, h / 3.0}, {0, 1, 2});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    DistanceOracle o(m);
    SteinerParams p;
    p.seed = seed;
    auto r = estimate_steiner(o, p);
    EXPECT_TRUE(r.improved);
    EXPECT_NEAR(r.estimate, 0.95 * 2.0, 1e-12);
  }
}

TEST(Steiner, LevelsMatchThresholdComponentsAndNest) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto m = bench::generate_metric(seed % 2 ? "euclidean" : "random_closure", 30, 0.6, {}, seed);
    DistanceOracle o(m);
    SteinerParams p;
    p.eps = 0.3;
    SteinerEstimator est(o, p);
    est.prepare();
    ASSERT_GE(est.level_count(), 1u);
    for (std::size_t i = 1; i <= est.level_count(); ++i) {
      const auto& st = est.level(i);
      auto truth = threshold_components(m, st.merge_below);
      EXPECT_TRUE(same_partition(truth, st.comp_of)) << seed << " level " << i;
      // H_i refines the next level's components.
      auto next = threshold_components(m, st.merge_below * (1.0 + p.eps));
      for (std::size_t a = 0; a < truth.size(); ++a)
        for (std::size_t b = 0; b < truth.size(); ++b)
          if (truth[a] == truth[b]) EXPECT_EQ(next[a], next[b]);
    }
  }
}

TEST(Steiner, NetsSeparatedAndMaximal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = bench::generate_metric("euclidean", 60, 0.7, {}, seed);
    DistanceOracle o(m);
    SteinerParams p;
    p.eps = 0.25;
    SteinerEstimator est(o, p);
    est.prepare();
    for (std::size_t i = 1; i <= est.level_count(); ++i) {
      const auto& st = est.level(i);
      for (std::size_t c = 0; c < st.members.size(); ++c) {
        const auto& net = st.nets[c];
        ASSERT_FALSE(net.empty());
        for (std::size_t a = 0; a < net.size(); ++a)
          for (std::size_t b = a + 1; b < net.size(); ++b)
            EXPECT_GE(est.terminal_distance(net[a], net[b]), st.net_radius);
        for (auto t : st.members[c]) {
          auto r = static_cast<std::uint32_t>(st.rep_of[t]);
          EXPECT_TRUE(std::binary_search(net.begin(), net.end(), r));
          if (t != r) EXPECT_LT(est.terminal_distance(t, r), st.net_radius);
          EXPECT_EQ(est.find_representative(i, t), r);
        }
      }
    }
  }
}

TEST(Steiner, BfsRepresentativesAndOverflow) {
  auto m = bench::generate_metric("euclidean", 80, 0.5, {}, 5);
  DistanceOracle o(m);
  SteinerParams p;
  p.eps = 0.2;
  SteinerEstimator est(o, p);
  est.prepare();
  // Level 1 has only singleton components.
  const auto& first = est.level(1);
  for (std::size_t t = 0; t < est.terminal_count(); ++t) {
    if (first.members[first.comp_of[t]].size() != 1) continue;
    auto reps = est.bfs_representatives(1, t, est.cap());
    ASSERT_TRUE(reps);
    EXPECT_EQ(*reps, std::vector<std::uint32_t>{static_cast<std::uint32_t>(t)});
  }
  const std::size_t top = est.level_count();
  const auto& st = est.level(top);
  for (std::size_t t = 0; t < est.terminal_count(); ++t) {
    const auto& net = st.nets[st.comp_of[t]];
    auto reps = est.bfs_representatives(top, t, net.size());
    ASSERT_TRUE(reps);
    EXPECT_EQ(*reps, net);
    EXPECT_FALSE(est.bfs_representatives(top, t, net.size() - 1));
  }
}

TEST(Steiner, StrictRejectsBeforeAnyQuery) {
  auto m = bench::generate_metric("euclidean", 64, 0.0, {{"k", 20}}, 2);
  DistanceOracle o(m);
  SteinerParams p;
  p.strict = true;
  EXPECT_THROW(SteinerEstimator(o, p).estimate(), ConfigError);
  EXPECT_EQ(o.ledger().distance_queries(), 0u);
  p.strict = false;
  DistanceOracle o2(m);
  auto r = estimate_steiner(o2, p);
  EXPECT_EQ(r.branch, "dense");
  EXPECT_FALSE(r.fallback_reason.empty());
}

TEST(Steiner, QueryBudgetAtMostAllPairs) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = bench::generate_metric("euclidean", 200, 0.3, {}, seed);
    DistanceOracle o(m);
    SteinerParams p;
    p.seed = seed;
    auto r = estimate_steiner(o, p);
    const std::uint64_t k = m.terminals().size(), ns = m.size() - k;
    EXPECT_LE(r.ledger.total.distance, k * (k - 1) / 2 + ns * k);
    EXPECT_EQ(r.mst_queries, k * (k - 1) / 2);
    EXPECT_TRUE(r.to_json().contains("levels"));
  }
}

TEST(SteinerHeavy, PlantedHub) {
  const std::size_t k = 60;
  auto m = star_metric(k, true, 40);
  ASSERT_TRUE(m.satisfies_triangle_inequality());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DistanceOracle o(m);
    auto p = heavy_params();
    p.seed = seed;
    SteinerEstimator est(o, p);
    ASSERT_TRUE(est.sampling_conditions_hold());
    est.prepare();
    ASSERT_EQ(est.level_count(), 1u);
    EXPECT_EQ(est.classify_level(1), LevelClass::kHeavy);
    auto lr = est.solve_level_heavy(1);
    EXPECT_GE(lr.chi, (k - 1) / 2.0 - p.eps * k) << seed;
    EXPECT_LE(lr.chi, static_cast<double>(k - 1));
    DistanceOracle o2(m);
    auto r = estimate_steiner(o2, p);
    EXPECT_EQ(r.branch, "sparse");
    EXPECT_TRUE(r.improved);
  }
}

TEST(SteinerHeavy, PrivateSteinerPointsGiveNothing) {
  const std::size_t k = 60;
  auto m = star_metric(k, false, 0);
  ASSERT_TRUE(m.satisfies_triangle_inequality());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DistanceOracle o(m);
    auto p = heavy_params();
    p.seed = seed;
    SteinerEstimator est(o, p);
    est.prepare();
    EXPECT_EQ(est.classify_level(1), LevelClass::kHeavy);
    auto lr = est.solve_level_heavy(1);
    EXPECT_LE(lr.chi, p.eps * k);
    DistanceOracle o2(m);
    auto r = estimate_steiner(o2, p);
    EXPECT_FALSE(r.improved);
    EXPECT_DOUBLE_EQ(r.estimate, r.mst_weight);
  }
}

TEST(SteinerHeavy, NoSteinerPointWithinReach) {
  const std::size_t k = 60;
  auto m = star_metric(k, false, 0);
  // Push every Steiner point out to 3 from all terminals.
  std::vector<double> w(m.matrix().begin(), m.matrix().end());
  const std::size_t n = m.size();
  for (std::size_t s = k; s < n; ++s)
    for (std::size_t t = 0; t < k; ++t) w[s * n + t] = w[t * n + s] = 3.0;
  std::vector<PointId> ts(m.terminals().begin(), m.terminals().end());
  auto far = MetricInstance::from_matrix(n, std::move(w), ts);
  DistanceOracle o(far);
  SteinerEstimator est(o, heavy_params());
  est.prepare();
  auto lr = est.solve_level_heavy(1);
  EXPECT_EQ(lr.chi, 0.0);
}

TEST(SteinerLevels, CaseOneWhenRepsFitBudget) {
  auto m = bench::generate_metric("euclidean", 100, 0.5, {}, 1);
  DistanceOracle o(m);
  SteinerParams p;
  p.M = 1000;
  SteinerEstimator est(o, p);
  est.prepare();
  for (std::size_t i = 1; i <= est.level_count(); ++i) EXPECT_EQ(est.classify_level(i), LevelClass::kCase1);
}

TEST(SteinerLevels, SingletonLevelHeavyWhenBudgetIsTiny) {
  auto m = star_metric(60, true, 40);
  DistanceOracle o(m);
  auto p = heavy_params();
  SteinerEstimator est(o, p);
  est.prepare();
  double u = 0;
  EXPECT_EQ(est.classify_level(1, &u), LevelClass::kHeavy);
  EXPECT_NEAR(u, 60.0, 1e-9);
}

// Many tight pairs far apart: every level-with-merges component has two
// terminals, so |U_i| ≈ k/2 exceeds M and the level is heavy.
TEST(SteinerLevels, PairedTerminalsAreHeavy) {
  const std::size_t pairs = 2000;
  std::vector<double> xy;
  std::vector<PointId> ts;
  for (std::size_t c = 0; c < pairs; ++c) {
    const double x = static_cast<double>(c % 50) * 10.0, y = static_cast<double>(c / 50) * 10.0;
    xy.insert(xy.end(), {x, y, x + 0.001, y});
    ts.push_back(static_cast<PointId>(2 * c));
    ts.push_back(static_cast<PointId>(2 * c + 1));
  }
  for (std::size_t s = 0; s < 10; ++s) xy.insert(xy.end(), {5.0 + static_cast<double>(s) * 10.0, 5.0});
  auto m = coords(std::move(xy), ts);
  DistanceOracle o(m);
  SteinerParams p;
  p.M = std::cbrt(4000.0 * 4000.0);
  p.c_case1 = 0.5;
  SteinerEstimator est(o, p);
  est.prepare();
  bool saw_heavy = false;
  for (std::size_t i = 1; i <= est.level_count(); ++i) {
    const auto& st = est.level(i);
    if (st.members.size() == pairs) saw_heavy = saw_heavy || est.classify_level(i) == LevelClass::kHeavy;
  }
  EXPECT_TRUE(saw_heavy);
}

TEST(Steiner, SandwichOnSmallInstances) {
  std::size_t bad = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto m = bench::generate_metric(seed % 2 ? "euclidean" : "random_closure", 8 + seed % 9, 0.5, {}, seed);
    DistanceOracle o(m);
    SteinerParams p;
    p.seed = seed;
    auto r = estimate_steiner(o, p);
    const double st = exact_steiner(m);
    bad += !(0.95 * st <= r.estimate && r.estimate <= (2.0 - p.eta) * st * 1.05);
    EXPECT_LE(r.estimate, r.mst_weight);
  }
  EXPECT_EQ(bad, 0u);
}

TEST(Steiner, RejectsBadParameters) {
  auto m = coords({0, 0, 1, 0}, {0, 1});
  DistanceOracle o(m);
  SteinerParams p;
  p.eps = 0.0;
  EXPECT_THROW(SteinerEstimator(o, p), ConfigError);
  p.eps = 0.1;
  p.eta = 1.5;
  EXPECT_THROW(SteinerEstimator(o, p), ConfigError);
}
