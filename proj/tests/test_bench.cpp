#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sublin/bench/experiments.hpp"
#include "sublin/bench/fit.hpp"
#include "sublin/bench/generators.hpp"
#include "sublin/errors.hpp"
#include "sublin/instance_io.hpp"

using namespace sublin;
using namespace sublin::bench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("sublin_test_bench_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json thsc_spec(std::size_t seeds) {
  return {{"name", "tiny"},
          {"task", "thsc"},
          {"instance", {{"generator", "uniform_random"}, {"n", 40}, {"k", 16}, {"p", 0.2}}},
          {"seeds", {{"start", 1}, {"count", seeds}}},
          {"params", {{"eps", 0.2}}},
          {"assert", {{"rate_min", {{"sandwich", 0.99}}}}}};
}

// Row text without the wall_ms field.
std::string stable(const RunRow& r) {
  auto c = r;
  c.wall_ms = 0;
  return csv_row(c);
}

}  // namespace

TEST(Generators, SingletonHeavyWithKEqualsN) {
  auto g = generate_set_system("singleton_heavy", 50, 50, {}, 1);
  ASSERT_EQ(g.system.family_size(), 50u);
  for (const auto& s : g.system.sets()) EXPECT_EQ(s.size(), 1u);
}

TEST(Generators, PlantedSingleCover) {
  auto g = generate_set_system("planted_cover", 100, 30, {{"cover_size", 1}}, 2);
  bool full = false;
  for (const auto& s : g.system.sets()) full = full || s.size() == 100;
  EXPECT_TRUE(full);
  EXPECT_EQ(g.meta["sc_upper"], 1);
}

TEST(Generators, UniformMeanSetSize) {
  auto g = generate_set_system("uniform_random", 1000, 1000, {{"p", 0.01}}, 3);
  double total = 0;
  for (const auto& s : g.system.sets()) total += static_cast<double>(s.size());
  const double mean = total / 1000.0, sigma = std::sqrt(1000 * 0.01 * 0.99 / 1000.0);
  EXPECT_NEAR(mean, 10.0, 3 * sigma);
}

TEST(Generators, EveryElementCovered) {
  auto g = generate_set_system("uniform_random", 500, 20, {{"p", 0.01}}, 4);
  std::vector<char> seen(500, 0);
  for (const auto& s : g.system.sets())
    for (auto e : s) seen[e] = 1;
  for (char c : seen) EXPECT_TRUE(c);
}

TEST(Generators, PairsAndTriplesSizes) {
  auto g = generate_set_system("pairs_and_triples", 20, 60, {}, 5);
  std::size_t pairs = 0, triples = 0;
  for (const auto& s : g.system.sets()) {
    EXPECT_TRUE(s.size() >= 1 && s.size() <= 3);
    pairs += s.size() == 2;
    triples += s.size() == 3;
  }
  EXPECT_EQ(pairs + triples, 40u);
  auto extra = with_extra_pairs(g.system, 3, 1);
  EXPECT_EQ(extra.family_size(), 63u);
}

TEST(Generators, DeterministicPerSeed) {
  auto a = generate_set_system("uniform_random", 100, 50, {{"p", 0.05}}, 7);
  auto b = generate_set_system("uniform_random", 100, 50, {{"p", 0.05}}, 7);
  auto c = generate_set_system("uniform_random", 100, 50, {{"p", 0.05}}, 8);
  EXPECT_EQ(a.system.sets(), b.system.sets());
  EXPECT_NE(a.system.sets(), c.system.sets());
}

TEST(Generators, UnitSquareMatrix) {
  auto m = MetricInstance::from_coords(2, {0, 0, 1, 0, 1, 1, 0, 1}, {0, 1, 2, 3});
  EXPECT_DOUBLE_EQ(m.distance(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(m.distance(0, 2), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(m.distance(1, 3), std::sqrt(2.0));
}

TEST(Generators, RandomClosureIsAMetric) {
  auto m = generate_metric("random_closure", 200, 0.3, {}, 9);
  EXPECT_TRUE(m.satisfies_triangle_inequality());
  EXPECT_EQ(m.terminals().size(), 60u);
}

TEST(Generators, FullTerminalFraction) {
  auto m = generate_metric("euclidean", 30, 1.0, {}, 1);
  EXPECT_EQ(m.terminals().size(), 30u);
  EXPECT_THROW(generate_metric("euclidean", 30, 0.0, {}, 1), ConfigError);
  EXPECT_THROW(generate_metric("hyperbolic", 30, 0.5, {}, 1), ConfigError);
}

TEST(Generators, MultigraphShapes) {
  auto g = random_multigraph(20, 100, 0.5, 3);
  EXPECT_EQ(g.edges.size(), 100u);
  for (const auto& e : g.edges) EXPECT_TRUE(e.is_canonical());
  EXPECT_EQ(path_multigraph(4).edges.size(), 3u);
  EXPECT_EQ(star_multigraph(5).degree(0), 5u);
}

TEST(Fit, RecoversExponent) {
  std::vector<double> x, y, yl, y2;
  for (double v = 256; v <= 65536; v *= 2) {
    x.push_back(v);
    y.push_back(std::pow(v, 5.0 / 3.0));
    yl.push_back(std::pow(v, 5.0 / 3.0) * std::pow(std::log(v), 3));
    y2.push_back(v * v);
  }
  EXPECT_NEAR(fit_exponent(x, y, 0).slope, 5.0 / 3.0, 1e-3);
  EXPECT_NEAR(fit_exponent(x, yl, 3).slope, 5.0 / 3.0, 1e-3);
  EXPECT_NEAR(fit_exponent(x, y2, 0).slope, 2.0, 1e-3);
  auto f = fit_exponent(x, y2, 0);
  EXPECT_LE(f.ci_low, f.slope);
  EXPECT_GE(f.ci_high, f.slope);
}

TEST(Fit, RejectsDegenerateInput) {
  EXPECT_THROW(fit_exponent({10, 20, 40}, {1, 2, 3}, 0), ConfigError);
  EXPECT_THROW(fit_exponent({10, 20, 40, 80}, {1, -2, 3, 4}, 0), ConfigError);
  EXPECT_THROW(fit_exponent({10, 10, 10, 10, 10}, {1, 2, 3, 4, 5}, 0), ConfigError);
}

TEST(Fit, ReadsCsvWithLabelFilter) {
  auto dir = scratch("fit");
  const auto path = (dir / "f.csv").string();
  {
    std::ofstream out(path);
    out << csv_header() << '\n';
    for (int lbl = 0; lbl < 2; ++lbl)
      for (double v = 100; v <= 10000; v *= 3) {
        RunRow r;
        r.n = static_cast<std::size_t>(v);
        r.queries_membership = static_cast<std::uint64_t>(std::pow(v, lbl == 0 ? 1.5 : 2.0));
        r.label = lbl == 0 ? "a" : "b";
        out << csv_row(r) << '\n';
      }
  }
  EXPECT_NEAR(fit_exponent_csv(path, "n", "queries_membership", 0, "label", "a").slope, 1.5, 1e-3);
  EXPECT_NEAR(fit_exponent_csv(path, "n", "queries_membership", 0, "label", "b").slope, 2.0, 1e-3);
}

TEST(Runner, WritesOneReportPerRunAndOneCsv) {
  auto dir = scratch("runs");
  RunOptions opts;
  opts.out_dir = dir.string();
  auto res = run_experiment(ExperimentSpec::from_json(thsc_spec(3)), opts);
  EXPECT_TRUE(res.passed());
  ASSERT_EQ(res.rows.size(), 3u);
  std::size_t reports = 0;
  for (const auto& e : fs::directory_iterator(dir / "tiny" / "runs")) reports += e.path().extension() == ".json";
  EXPECT_EQ(reports, 3u);
  std::ifstream csv(dir / "tiny" / "tiny.csv");
  std::string line;
  std::size_t lines = 0;
  std::getline(csv, line);
  EXPECT_EQ(line, csv_header());
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 3u);
  EXPECT_TRUE(fs::exists(dir / "tiny" / "summary.json"));
}

TEST(Runner, DeterministicAcrossRunsAndThreads) {
  auto spec = ExperimentSpec::from_json(thsc_spec(6));
  RunOptions one, many;
  many.jobs = 3;
  auto a = run_experiment(spec, one), b = run_experiment(spec, one), c = run_experiment(spec, many);
  ASSERT_EQ(a.rows.size(), c.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(stable(a.rows[i]), stable(b.rows[i]));
    EXPECT_EQ(stable(a.rows[i]), stable(c.rows[i]));
  }
}

TEST(Runner, SeedOverride) {
  RunOptions opts;
  opts.seed_override = 42;
  auto res = run_experiment(ExperimentSpec::from_json(thsc_spec(5)), opts);
  ASSERT_EQ(res.rows.size(), 1u);
  EXPECT_EQ(res.rows[0].seed, 42u);
}

TEST(Runner, FailedRunIsRecordedAndOthersContinue) {
  json spec = {{"name", "broken"},
               {"task", "thsc"},
               {"instances",
                {{{"generator", "uniform_random"}, {"n", 20}, {"k", 10}},
                 {{"generator", "no_such_generator"}, {"n", 20}, {"k", 10}}}},
               {"seeds", {1, 2}}};
  auto res = run_experiment(ExperimentSpec::from_json(spec), {});
  ASSERT_EQ(res.rows.size(), 4u);
  std::size_t errors = 0;
  for (const auto& r : res.rows) errors += r.status == "error";
  EXPECT_EQ(errors, 2u);
  EXPECT_FALSE(res.passed());
}

TEST(Runner, OracleEquivalenceTaskAgrees) {
  json spec = {{"name", "equiv"},
               {"task", "oracle_equiv"},
               {"instance", {{"generator", "random_multigraph"}, {"vertices_max", 40}, {"edges_max", 200}, {"parallel", 0.2}}},
               {"seeds", {{"start", 1}, {"count", 10}}},
               {"params", {{"rank_seeds", 3}}},
               {"assert", {{"rate_min", {{"agree", 1.0}, {"memo_agree", 1.0}}}}}};
  auto res = run_experiment(ExperimentSpec::from_json(spec), {});
  for (const auto& a : res.assertions) EXPECT_TRUE(a.passed) << a.name << ": " << a.detail;
}

TEST(Runner, SparsifyInvariantsHold) {
  json spec = {{"name", "props"},
               {"task", "sparsify_props"},
               {"instance", {{"generator", "uniform_random"}, {"n", 300}, {"k", 400}, {"p", 0.03}}},
               {"seeds", {{"start", 1}, {"count", 4}}},
               {"params", {{"eps", 0.5}, {"beta", 2.0}}},
               {"assert", {{"rate_min", {{"claim42", 1.0}, {"partition", 1.0}, {"replay", 1.0}}}}}};
  auto res = run_experiment(ExperimentSpec::from_json(spec), {});
  for (const auto& a : res.assertions) EXPECT_TRUE(a.passed) << a.name << ": " << a.detail;
}

TEST(Runner, SpecValidation) {
  EXPECT_THROW(ExperimentSpec::from_json({{"task", "thsc"}}), ConfigError);
  EXPECT_THROW(ExperimentSpec::from_json({{"task", "nope"}, {"instance", json::object()}, {"seeds", {1}}}),
               ConfigError);
  EXPECT_THROW(ExperimentSpec::from_json({{"task", "thsc"}, {"instance", json::object()}}), ConfigError);
}

TEST(Runner, ShippedSpecsParse) {
  const fs::path specs = fs::path(SUBLIN_SOURCE_DIR) / "specs";
  std::size_t seen = 0;
  for (const auto& e : fs::directory_iterator(specs)) {
    if (e.path().extension() != ".json") continue;
    json j = read_json_file(e.path().string());
    if (j.contains("experiments"))
      for (const auto& s : j.at("experiments")) EXPECT_NO_THROW(ExperimentSpec::from_json(s)) << e.path();
    else
      EXPECT_NO_THROW(ExperimentSpec::from_json(j)) << e.path();
    ++seen;
  }
  EXPECT_GE(seen, 9u);
}
