#include "sublin/bench/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "sublin/bench/fit.hpp"
#include "sublin/bench/generators.hpp"
#include "sublin/errors.hpp"
#include "sublin/exact.hpp"
#include "sublin/instance_io.hpp"
#include "sublin/random.hpp"
#include "sublin/rgmm.hpp"
#include "sublin/setcover.hpp"
#include "sublin/sparsify.hpp"
#include "sublin/steiner.hpp"

namespace sublin::bench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kInstanceStream = 0x1257;
constexpr std::uint64_t kEstimatorStream = 0xe57;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (j.is_object() && j.contains(key) && !j.at(key).is_null()) return j.at(key).get<T>();
  return fallback;
}

json merged(json base, const json& over) {
  if (!base.is_object()) base = json::object();
  if (over.is_object())
    for (auto it = over.begin(); it != over.end(); ++it) base[it.key()] = it.value();
  return base;
}

std::string resolve(const json& inst, const std::string& file) {
  fs::path p(file);
  if (p.is_relative() && inst.contains("_base_dir")) p = fs::path(inst.at("_base_dir").get<std::string>()) / p;
  return p.string();
}

// k from "k", or from n via "k_exponent" (k = round(n^e)).
std::size_t size_k(const json& inst, std::size_t n) {
  if (inst.contains("k")) return inst.at("k").get<std::size_t>();
  if (inst.contains("k_exponent"))
    return static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), inst.at("k_exponent").get<double>())));
  return n;
}

GeneratedSets make_sets(const json& inst, std::uint64_t seed) {
  if (inst.contains("file")) {
    auto path = resolve(inst, inst.at("file").get<std::string>());
    return {load_set_system(path), {{"file", path}}};
  }
  const auto n = get_or<std::size_t>(inst, "n", 0);
  return generate_set_system(inst.at("generator").get<std::string>(), size_k(inst, n), n, inst,
                             derive_seed(seed, kInstanceStream));
}

MetricInstance make_metric(const json& inst, std::uint64_t seed) {
  if (inst.contains("file")) return load_metric(resolve(inst, inst.at("file").get<std::string>()));
  const auto n = inst.at("n").get<std::size_t>();
  json p = inst;
  if (!inst.contains("terminal_fraction") && (inst.contains("k") || inst.contains("k_exponent")))
    p["k"] = size_k(inst, n);
  return generate_metric(inst.at("generator").get<std::string>(), n,
                         get_or(inst, "terminal_fraction", 0.5), p, derive_seed(seed, kInstanceStream));
}

ExplicitMultigraph make_multigraph(const json& inst, std::uint64_t seed) {
  const auto kind = inst.at("generator").get<std::string>();
  if (kind == "path") return path_multigraph(inst.at("vertices").get<std::size_t>());
  if (kind == "star") return star_multigraph(inst.at("leaves").get<std::size_t>());
  if (kind != "random_multigraph") throw ConfigError("unknown multigraph kind: " + kind);
  Rng rng(derive_seed(seed, 0x5123));
  std::size_t v = inst.contains("vertices") ? inst.at("vertices").get<std::size_t>()
                                            : 2 + rng.index(inst.at("vertices_max").get<std::size_t>() - 1);
  std::size_t e = 0;
  if (inst.contains("edges"))
    e = inst.at("edges").get<std::size_t>();
  else if (inst.contains("avg_degree"))
    e = static_cast<std::size_t>(std::llround(inst.at("avg_degree").get<double>() * static_cast<double>(v) / 2.0));
  else
    e = rng.index(inst.at("edges_max").get<std::size_t>() + 1);
  return random_multigraph(v, e, get_or(inst, "parallel", 0.1), derive_seed(seed, kInstanceStream));
}

SetCoverParams setcover_params(const json& p, std::uint64_t seed) {
  SetCoverParams out;
  out.eps = get_or(p, "eps", out.eps);
  out.x = get_or(p, "x", out.x);
  out.y = get_or(p, "y", out.y);
  if (p.contains("alpha")) out.alpha = p.at("alpha").get<double>();
  if (p.contains("beta")) out.beta = p.at("beta").get<double>();
  out.allow_dense = get_or(p, "allow_dense", out.allow_dense);
  const auto access = get_or<std::string>(p, "access", "rank_ordered");
  if (access == "full_scan")
    out.access = NeighborAccess::kFullScan;
  else if (access != "rank_ordered")
    throw ConfigError("access must be rank_ordered or full_scan");
  out.seed = seed;
  return out;
}

SteinerParams steiner_params(const json& p, std::uint64_t seed) {
  SteinerParams out;
  out.eps = get_or(p, "eps", out.eps);
  out.eta = get_or(p, "eta", out.eta);
  out.c_eta = get_or(p, "c_eta", out.c_eta);
  out.c_eta_prime = get_or(p, "c_eta_prime", out.c_eta_prime);
  out.c_M = get_or(p, "c_M", out.c_M);
  out.c_R = get_or(p, "c_R", out.c_R);
  out.c_P = get_or(p, "c_P", out.c_P);
  out.c_case1 = get_or(p, "c_case1", out.c_case1);
  out.tau_factor = get_or(p, "tau_factor", out.tau_factor);
  if (p.contains("kappa")) out.kappa = p.at("kappa").get<double>();
  if (p.contains("M")) out.M = p.at("M").get<double>();
  if (p.contains("R")) out.R = p.at("R").get<double>();
  if (p.contains("P")) out.P = p.at("P").get<double>();
  if (p.contains("cap")) out.cap = p.at("cap").get<std::size_t>();
  out.strict = get_or(p, "strict", out.strict);
  out.seed = seed;
  return out;
}

SetSystem padded(const SetSystem& sys) {
  if (sys.family_size() >= sys.universe_size()) return sys;
  auto sets = sys.sets();
  for (std::size_t e = 0; e < sys.universe_size(); ++e) sets.push_back({static_cast<ElementId>(e)});
  return SetSystem(sys.universe_size(), std::move(sets));
}

struct ChiTruth {
  double lo = 0.0, hi = 0.0;
  bool exact = false;
};

// χ = k − SC exactly for small k, else lo = max(|M|, k − greedy), hi = 2|M|
// from a maximal matching M of H over the full system.
ChiTruth chi_truth(const SetSystem& system, bool no_pairs, std::size_t exact_limit) {
  SetSystem sys = padded(system);
  const double k = static_cast<double>(sys.universe_size());
  ChiTruth t;
  if (sys.universe_size() <= exact_limit) {
    auto sc = exact_set_cover(sys, no_pairs);
    if (!sc) throw ConfigError("instance is not coverable");
    t.lo = t.hi = k - static_cast<double>(*sc);
    t.exact = true;
    return t;
  }
  const double m = static_cast<double>(scan_maximal_matching(sys.sets(), sys.universe_size(), no_pairs));
  auto greedy = greedy_set_cover(sys, no_pairs);
  if (!greedy) throw ConfigError("instance is not coverable");
  t.lo = std::max(m, k - static_cast<double>(*greedy));
  t.hi = std::min(2.0 * m, k);
  return t;
}

bool thsc_sandwich(const ChiTruth& t, double chi, double eps, double k) {
  constexpr double slack = 1e-9;
  return t.hi / 2.0 - eps * k <= chi + slack && chi <= t.lo + slack;
}

RunRow task_thsc(const json& inst, const json& params, std::uint64_t seed, bool no_pairs) {
  auto gen = make_sets(inst, seed);
  const SetSystem& sys = gen.system;
  const auto est_seed = derive_seed(seed, kEstimatorStream);
  auto sp = setcover_params(params, est_seed);
  const auto limit = get_or<std::size_t>(params, "exact_limit", 20);
  auto run = [&](const SetSystem& s) {
    MembershipOracle oracle(s);
    return no_pairs ? estimate_thsc_no_pairs(oracle, sp) : estimate_thsc(oracle, sp);
  };
  const double k = static_cast<double>(sys.universe_size());

  EstimateReport rep = run(sys);
  ChiTruth truth = chi_truth(sys, no_pairs, limit);
  const bool ok = thsc_sandwich(truth, rep.chi, sp.eps, k);

  RunRow row;
  row.n = sys.family_size();
  row.k = sys.universe_size();
  row.estimate = rep.chi;
  row.exact_or_bound = truth.lo;
  row.queries_membership = rep.ledger.total.membership;
  json checks = {{"sandwich", ok}};
  json metrics = {{"chi_lo", truth.lo},
                  {"chi_hi", truth.hi},
                  {"u_low", rep.u_low},
                  {"outside_low", rep.outside_low},
                  {"touched_vertices", rep.touched_vertices}};

  if (const auto extra = get_or<std::size_t>(params, "extra_pairs", 0); extra > 0) {
    SetSystem with = with_extra_pairs(sys, extra, derive_seed(seed, 0x9a1));
    EstimateReport rep2 = run(with);
    ChiTruth truth2 = chi_truth(with, no_pairs, limit);
    const bool ok2 = thsc_sandwich(truth2, rep2.chi, sp.eps, k);
    checks["pairs_sandwich"] = ok2;
    checks["pairs_status_unchanged"] = ok2 == ok;
    if (truth.exact && truth2.exact) checks["pairs_chi_unchanged"] = truth2.lo == truth.lo;
    metrics["pairs_chi"] = truth2.lo;
    metrics["pairs_estimate"] = rep2.chi;
  }
  row.report = {{"instance", gen.meta}, {"estimate", rep.to_json()}, {"exact", truth.exact},
                {"checks", checks},     {"metrics", metrics}};
  return row;
}

RunRow task_sparsify(const json& inst, const json& params, std::uint64_t seed) {
  auto gen = make_sets(inst, seed);
  const SetSystem& sys = gen.system;
  const std::size_t k = sys.universe_size(), n = sys.family_size();
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  const double ln_n = std::log(std::max(nd, 2.0));
  const double eps = get_or(params, "eps", 0.1);
  const double alpha = params.contains("alpha") ? params.at("alpha").get<double>()
                                                : default_alpha(n, get_or(params, "x", 1.0 / 3.0));
  const double beta = params.contains("beta") ? params.at("beta").get<double>()
                                              : default_beta(k, n, get_or(params, "y", 1.0 / 3.0));
  const double budget_c = get_or(params, "budget_C", 3.0);
  const auto est_seed = derive_seed(seed, kEstimatorStream);

  MembershipOracle oracle(sys);
  auto sets = sparsify_sets(oracle, alpha, derive_seed(est_seed, 1));
  const auto q_sets = oracle.ledger().membership_queries();
  auto part = sparsify_elements(oracle, sets.kept_sets, sets.kept_elements, beta, eps, derive_seed(est_seed, 2));
  const auto q_elems = oracle.ledger().membership_queries() - q_sets;

  // Replay removals on the ground truth.
  std::vector<char> in_u(k, 1);
  bool claim42 = true, replay = true;
  for (const auto& r : sets.removals) {
    std::size_t hit = 0;
    for (ElementId e : sys.set(r.set)) hit += in_u[e];
    claim42 = claim42 && static_cast<double>(hit) >= alpha;
    replay = replay && hit == r.elements_removed;
    for (ElementId e : sys.set(r.set)) in_u[e] = 0;
  }
  std::vector<ElementId> truth_u;
  for (std::size_t e = 0; e < k; ++e)
    if (in_u[e]) truth_u.push_back(static_cast<ElementId>(e));
  replay = replay && truth_u == sets.kept_elements;

  std::vector<char> in_hat(k, 0);
  for (ElementId e : sets.kept_elements) in_hat[e] = 1;
  bool claim44 = true;
  std::vector<std::size_t> degree(k, 0);
  for (SetId s : sets.kept_sets) {
    std::size_t inside = 0;
    for (ElementId e : sys.set(s)) {
      inside += in_hat[e];
      ++degree[e];
    }
    claim44 = claim44 && static_cast<double>(inside) <= 20.0 * alpha * ln_n;
  }
  bool lemma45 = true;
  for (ElementId e : part.low) lemma45 = lemma45 && static_cast<double>(degree[e]) <= 40.0 * beta * ln_n / eps;

  std::vector<char> seen(k, 0);
  bool partition = part.low.size() + part.high.size() == sets.kept_elements.size();
  for (ElementId e : part.low) seen[e] = 1;
  for (ElementId e : part.high) {
    partition = partition && !seen[e] && in_hat[e];
    seen[e] = 1;
  }
  for (ElementId e : part.low) partition = partition && in_hat[e];

  // Claim on U_high: a random ⌈εk/5⌉-subfamily of F̂ covers it.
  bool claim46 = true;
  if (!part.high.empty()) {
    std::vector<SetId> fam = sets.kept_sets;
    Rng rng(derive_seed(seed, 0xc46));
    rng.shuffle(fam.begin(), fam.end());
    fam.resize(std::min(fam.size(), static_cast<std::size_t>(std::ceil(eps * kd / 5.0))));
    std::vector<char> cov(k, 0);
    for (SetId s : fam)
      for (ElementId e : sys.set(s)) cov[e] = 1;
    for (ElementId e : part.high) claim46 = claim46 && cov[e];
  }

  const double sets_bound = budget_c * nd * kd / alpha * ln_n;
  const double elems_bound = budget_c * kd * kd / beta;
  RunRow row;
  row.n = n;
  row.k = k;
  row.estimate = static_cast<double>(sets.removed);
  row.exact_or_bound = kd / alpha;
  row.queries_membership = oracle.ledger().membership_queries();
  json checks = {{"claim42", claim42},
                 {"replay", replay},
                 {"claim43", static_cast<double>(sets.removed) <= kd / alpha},
                 {"c_consistent", sets.removed == sets.removals.size() &&
                                      sets.kept_sets.size() + sets.removed == n},
                 {"claim44", claim44},
                 {"lemma45", lemma45},
                 {"partition", partition},
                 {"claim46", claim46},
                 {"budget_sets", static_cast<double>(q_sets) <= sets_bound},
                 {"budget_elements", static_cast<double>(q_elems) <= elems_bound}};
  json metrics = {{"alpha", alpha},
                  {"beta", beta},
                  {"removed", sets.removed},
                  {"u_hat", sets.kept_elements.size()},
                  {"u_low", part.low.size()},
                  {"u_high", part.high.size()},
                  {"r2", part.r2},
                  {"element_sampling", part.early_return ? 0 : 1},
                  {"sets_query_ratio", static_cast<double>(q_sets) / (nd * kd / alpha * ln_n)},
                  {"elements_query_ratio", static_cast<double>(q_elems) / (kd * kd / beta)}};
  row.report = {{"instance", gen.meta}, {"checks", checks}, {"metrics", metrics}};
  return row;
}

RunRow task_oracle_equiv(const json& inst, const json& params, std::uint64_t seed) {
  auto g = make_multigraph(inst, seed);
  const auto rank_seeds = get_or<std::size_t>(params, "rank_seeds", 20);
  std::uint64_t mismatches = 0, memo_mismatches = 0, answers = 0;
  for (std::size_t r = 0; r < rank_seeds; ++r) {
    RankFunction rf(derive_seed(seed, 0xe0000 + r));
    auto matching = offline_greedy_matching(g, rf);
    auto matched = matched_vertices(g, matching);
    std::unordered_map<EdgeId, char, EdgeIdHash> in_m;
    for (const auto& e : matching) in_m[e] = 1;
    ExplicitView view(g, rf);
    LocalMatchingOracle<ExplicitView> with_memo(view);
    LocalMatchingOracle<ExplicitView> no_memo(view, OracleOptions{false, false});
    for (ElementId v : g.vertices) {
      bool a = with_memo.vertex_oracle(v), b = no_memo.vertex_oracle(v);
      mismatches += a != static_cast<bool>(matched[v]);
      memo_mismatches += a != b;
      ++answers;
    }
    for (const auto& e : g.edges) {
      bool expect = in_m.count(e) != 0;
      bool a = with_memo.edge_oracle(e, e.u), b = no_memo.edge_oracle(e, e.v);
      mismatches += a != expect;
      memo_mismatches += a != b;
      ++answers;
    }
  }
  RunRow row;
  row.n = g.vertices.size();
  row.k = g.edges.size();
  row.estimate = static_cast<double>(mismatches);
  row.exact_or_bound = 0.0;
  row.report = {{"instance", {{"vertices", g.vertices.size()}, {"edges", g.edges.size()}}},
                {"checks", {{"agree", mismatches == 0}, {"memo_agree", memo_mismatches == 0}}},
                {"metrics", {{"answers", answers}, {"mismatches", mismatches}, {"memo_mismatches", memo_mismatches}}}};
  return row;
}

RunRow task_rgmm(const json& inst, const json& params, std::uint64_t seed) {
  auto g = make_multigraph(inst, seed);
  const auto rank_seeds = get_or<std::size_t>(params, "rank_seeds", 10);
  const std::size_t nv = g.vertices.size(), ne = g.edges.size();
  if (nv < 2 || rank_seeds == 0) throw ConfigError("rgmm task needs >= 2 vertices and rank seeds");
  std::unordered_map<EdgeId, std::size_t, EdgeIdHash> index;
  for (std::size_t i = 0; i < ne; ++i) index.emplace(g.edges[i], i);
  std::vector<double> q_sum(ne, 0.0), req_sum(g.id_bound, 0.0);
  double t_sum = 0.0;
  for (std::size_t r = 0; r < rank_seeds; ++r) {
    RankFunction rf(derive_seed(seed, 0xb0000 + r));
    ExplicitView view(g, rf);
    LocalMatchingOracle<ExplicitView> oracle(view, OracleOptions{true, true});
    for (ElementId v : g.vertices) {
      const auto before = oracle.stats().edge_calls;
      oracle.clear_memo();
      oracle.vertex_oracle(v);
      t_sum += static_cast<double>(oracle.stats().edge_calls - before);
    }
    for (const auto& [e, c] : oracle.stats().per_edge) q_sum[index.at(e)] += static_cast<double>(c);
    for (std::size_t v = 0; v < g.id_bound; ++v) req_sum[v] += static_cast<double>(oracle.stats().neighbor_requests[v]);
  }
  const double runs = static_cast<double>(rank_seeds);
  const double nd = static_cast<double>(nv), ln_n = std::log(nd);
  const double d_bar = 2.0 * static_cast<double>(ne) / nd;
  const double mean_t = t_sum / (runs * nd);
  double max_q = 0.0;
  for (double q : q_sum) max_q = std::max(max_q, q / runs);
  // Neighbor requests of v per random start vertex, against deg(v)·ln n / n.
  std::vector<std::size_t> deg(g.id_bound, 0);
  for (const auto& e : g.edges) {
    ++deg[e.u];
    ++deg[e.v];
  }
  double outquery = 0.0;
  for (ElementId v : g.vertices)
    if (deg[v] > 0)
      outquery = std::max(outquery, req_sum[v] / (runs * nd) / (static_cast<double>(deg[v]) * ln_n / nd));

  RunRow row;
  row.n = nv;
  row.k = ne;
  row.estimate = mean_t;
  row.exact_or_bound = std::max(d_bar, 1.0) * ln_n;
  json metrics = {{"d_bar", d_bar},
                  {"ln_n", ln_n},
                  {"norm", std::max(d_bar, 1.0) * ln_n},
                  {"mean_T", mean_t},
                  {"max_Q", max_q},
                  {"ratio_T", mean_t / (std::max(d_bar, 1.0) * ln_n)},
                  {"ratio_Q", max_q / ln_n},
                  {"outquery_ratio", outquery}};
  row.report = {{"instance", {{"vertices", nv}, {"edges", ne}, {"d_bar", d_bar}}},
                {"checks", json::object()},
                {"metrics", metrics}};
  return row;
}

RunRow task_steiner(const json& inst, const json& params, std::uint64_t seed) {
  MetricInstance metric = make_metric(inst, seed);
  DistanceOracle oracle(metric);
  auto sp = steiner_params(params, derive_seed(seed, kEstimatorStream));
  SteinerReport rep = estimate_steiner(oracle, sp);
  const double w = rep.mst_weight, out = rep.estimate;
  const double lowered = (1.0 - sp.c_eta_prime * sp.eta) * w;
  const double mst_truth = exact_mst(metric, metric.terminals());

  json checks = {{"two_valued", out == w || out == lowered},
                 {"never_above", out <= w},
                 {"mst_matches", std::abs(mst_truth - w) <= 1e-9 * std::max(1.0, w)}};
  RunRow row;
  row.n = metric.size();
  row.k = metric.terminals().size();
  row.estimate = out;
  row.exact_or_bound = w;
  row.queries_distance = rep.ledger.total.distance;
  if (metric.size() <= get_or<std::size_t>(params, "exact_limit", kExactSteinerMaxPoints)) {
    const double st = exact_steiner(metric);
    constexpr double fp = 1e-12;
    checks["sandwich"] = st * 0.95 <= out && out <= (2.0 - sp.eta) * st * 1.05;
    checks["gilbert_pollak"] = w / 2.0 <= st * (1.0 + fp) && st <= w * (1.0 + fp);
    row.exact_or_bound = st;
  }
  const double ns = static_cast<double>(metric.size() - metric.terminals().size());
  json metrics = {{"mst_weight", w},
                  {"gain", rep.gain},
                  {"threshold", rep.threshold},
                  {"improved", rep.improved ? 1 : 0},
                  {"levels", rep.levels.size()},
                  {"mst_queries", rep.mst_queries},
                  {"ns_times_k", ns * static_cast<double>(row.k)}};
  row.report = {{"instance", {{"n", row.n}, {"k", row.k}}},
                {"estimate", rep.to_json()},
                {"checks", checks},
                {"metrics", metrics}};
  return row;
}

RunRow task_mc(const json& inst, const json& params, std::uint64_t seed) {
  auto g = make_multigraph(inst, seed);
  const auto trials = get_or<std::size_t>(params, "trials", 100000);
  auto mc = mc_rgmm_expectation(g, trials, derive_seed(seed, kEstimatorStream));
  RunRow row;
  row.n = g.vertices.size();
  row.k = g.edges.size();
  row.estimate = mc.mean;
  row.exact_or_bound = exhaustive_rgmm_expectation(g);
  row.report = {{"instance", {{"vertices", row.n}, {"edges", row.k}}},
                {"checks", {{"within_half_width", std::abs(mc.mean - row.exact_or_bound) <= mc.half_width}}},
                {"metrics", {{"mean", mc.mean}, {"half_width", mc.half_width}, {"trials", mc.trials}}}};
  return row;
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

struct Job {
  std::string label;
  json instance;
  json params;
  std::uint64_t seed;
};

std::vector<const RunRow*> rows_with_label(const std::vector<RunRow>& rows, const std::string& label) {
  std::vector<const RunRow*> out;
  for (const auto& r : rows)
    if (r.status == "ok" && (label.empty() || r.label == label)) out.push_back(&r);
  return out;
}

ExponentFit fit_rows(const std::vector<const RunRow*>& rows, const std::string& x, const std::string& y,
                     double log_power) {
  std::vector<double> xs, ys;
  for (const auto* r : rows) {
    auto xv = row_value(*r, x), yv = row_value(*r, y);
    if (!xv || !yv) throw ConfigError("rows lack " + (!xv ? x : y));
    xs.push_back(*xv);
    ys.push_back(*yv);
  }
  return fit_exponent(xs, ys, log_power);
}

std::string fmt_rate(std::size_t pass, std::size_t total) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu/%zu = %.4f", pass, total,
                total ? static_cast<double>(pass) / static_cast<double>(total) : 0.0);
  return buf;
}

void evaluate(const ExperimentSpec& spec, ExperimentResult& res) {
  const json& a = spec.asserts;
  std::size_t errors = 0;
  for (const auto& r : res.rows) errors += r.status != "ok";
  const auto errors_max = get_or<std::size_t>(a, "errors_max", 0);
  res.assertions.push_back({"errors", errors <= errors_max,
                            std::to_string(errors) + " failed runs (max " + std::to_string(errors_max) + ")"});

  if (a.contains("rate_min"))
    for (auto it = a.at("rate_min").begin(); it != a.at("rate_min").end(); ++it) {
      std::size_t pass = 0, total = 0;
      for (const auto& r : res.rows) {
        if (r.status != "ok") {
          ++total;
          continue;
        }
        const json& checks = r.report.at("checks");
        if (!checks.contains(it.key())) continue;
        ++total;
        pass += checks.at(it.key()).get<bool>();
      }
      const double min = it.value().get<double>();
      const bool ok = total > 0 && static_cast<double>(pass) >= min * static_cast<double>(total) - 1e-9;
      res.assertions.push_back({it.key(), ok, fmt_rate(pass, total) + " (min " + fmt_double(min) + ")"});
    }

  if (a.contains("abs_error_max")) {
    const double lim = a.at("abs_error_max").get<double>();
    double worst = 0.0;
    for (const auto& r : res.rows)
      if (r.status == "ok") worst = std::max(worst, std::abs(r.estimate - r.exact_or_bound));
    res.assertions.push_back({"abs_error", worst <= lim, "max |estimate - exact| = " + fmt_double(worst) +
                                                          " (max " + fmt_double(lim) + ")"});
  }

  const std::string first_label = spec.variants.empty() ? "" : get_or<std::string>(spec.variants[0], "label", "main");
  json fits = json::array();
  if (a.contains("slope"))
    for (const auto& s : a.at("slope")) {
      const auto label = get_or<std::string>(s, "label", first_label);
      const auto x = s.at("x").get<std::string>(), y = s.at("y").get<std::string>();
      const double lp = get_or(s, "log_power", 3.0);
      std::string name = "slope(" + y + "~" + x + (label.empty() ? "" : "," + label) + ")";
      try {
        auto f = fit_rows(rows_with_label(res.rows, label), x, y, lp);
        bool ok = true;
        std::string detail = "slope " + fmt_double(f.slope) + " CI95 [" + fmt_double(f.ci_low) + ", " +
                             fmt_double(f.ci_high) + "]";
        if (s.contains("max")) {
          ok = ok && f.slope <= s.at("max").get<double>();
          detail += " <= " + fmt_double(s.at("max").get<double>());
        }
        if (s.contains("below")) {
          ok = ok && f.slope < s.at("below").get<double>();
          detail += " < " + fmt_double(s.at("below").get<double>());
        }
        json jf = f.to_json();
        jf["label"] = label;
        jf["x"] = x;
        jf["y"] = y;
        if (s.contains("below_label")) {
          const auto ref_label = s.at("below_label").get<std::string>();
          auto rf = fit_rows(rows_with_label(res.rows, ref_label), x, y, lp);
          ok = ok && f.slope < rf.slope;
          detail += " < " + ref_label + " slope " + fmt_double(rf.slope);
          jf["reference"] = rf.to_json();
        }
        fits.push_back(jf);
        res.assertions.push_back({name, ok, detail});
      } catch (const std::exception& e) {
        res.assertions.push_back({name, false, e.what()});
      }
    }
  if (a.contains("log_slope_max"))
    for (const auto& s : a.at("log_slope_max")) {
      const auto x = s.at("x").get<std::string>(), y = s.at("y").get<std::string>();
      const double lim = s.at("max").get<double>();
      std::string name = "log_slope(" + y + "~" + x + ")";
      try {
        auto f = fit_rows(rows_with_label(res.rows, get_or<std::string>(s, "label", "")), x, y, 0.0);
        json jf = f.to_json();
        jf["x"] = x;
        jf["y"] = y;
        fits.push_back(jf);
        res.assertions.push_back({name, f.slope <= lim, "slope " + fmt_double(f.slope) + " CI95 [" +
                                                            fmt_double(f.ci_low) + ", " + fmt_double(f.ci_high) +
                                                            "] <= " + fmt_double(lim)});
      } catch (const std::exception& e) {
        res.assertions.push_back({name, false, e.what()});
      }
    }
  if (a.contains("runtime_max_s")) {
    const double lim = a.at("runtime_max_s").get<double>();
    res.assertions.push_back({"runtime", res.wall_s <= lim, fmt_double(res.wall_s) + " s (max " + fmt_double(lim) + ")"});
  }

  json asserts = json::array();
  for (const auto& as : res.assertions) asserts.push_back({{"name", as.name}, {"passed", as.passed}, {"detail", as.detail}});
  res.summary = {{"name", spec.name}, {"task", spec.task}, {"runs", res.rows.size()}, {"errors", errors},
                 {"wall_s", res.wall_s}, {"fits", fits},  {"assertions", asserts},   {"passed", res.passed()}};
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("spec must be a JSON object");
  ExperimentSpec s;
  s.name = get_or<std::string>(j, "name", "experiment");
  if (!j.contains("task")) throw ConfigError("spec lacks task");
  s.task = j.at("task").get<std::string>();
  if (std::find(kTasks.begin(), kTasks.end(), s.task) == kTasks.end()) throw ConfigError("unknown task: " + s.task);
  if (j.contains("instances")) {
    for (const auto& i : j.at("instances")) s.instances.push_back(i);
  } else if (j.contains("instance")) {
    s.instances.push_back(j.at("instance"));
  } else {
    throw ConfigError("spec lacks instance");
  }
  if (j.contains("sweep"))
    for (const auto& p : j.at("sweep")) s.sweep.push_back(p);
  if (s.sweep.empty()) s.sweep.push_back(json::object());
  if (j.contains("variants"))
    for (const auto& v : j.at("variants")) s.variants.push_back(v);
  if (s.variants.empty()) s.variants.push_back({{"label", "main"}});
  if (!j.contains("seeds")) throw ConfigError("spec lacks seeds");
  const auto& seeds = j.at("seeds");
  if (seeds.is_array()) {
    for (const auto& v : seeds) s.seeds.push_back(v.get<std::uint64_t>());
  } else {
    const auto start = get_or<std::uint64_t>(seeds, "start", 1);
    const auto count = seeds.at("count").get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) s.seeds.push_back(start + i);
  }
  if (s.seeds.empty()) throw ConfigError("spec has no seeds");
  s.params = get_or(j, "params", json::object());
  s.asserts = get_or(j, "assert", json::object());
  return s;
}

bool ExperimentResult::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

RunRow run_single(const std::string& task, const json& instance, const json& params, std::uint64_t seed) {
  RunRow row;
  if (task == "thsc" || task == "thsc_no_pairs")
    row = task_thsc(instance, params, seed, task == "thsc_no_pairs");
  else if (task == "sparsify_props")
    row = task_sparsify(instance, params, seed);
  else if (task == "oracle_equiv")
    row = task_oracle_equiv(instance, params, seed);
  else if (task == "rgmm")
    row = task_rgmm(instance, params, seed);
  else if (task == "steiner")
    row = task_steiner(instance, params, seed);
  else if (task == "mc_expectation")
    row = task_mc(instance, params, seed);
  else
    throw ConfigError("unknown task: " + task);
  row.seed = seed;
  return row;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts) {
  std::vector<Job> jobs;
  std::vector<std::uint64_t> seeds = spec.seeds;
  if (opts.seed_override) seeds = {*opts.seed_override};
  for (const auto& v : spec.variants) {
    const json params = merged(spec.params, get_or(v, "params", json::object()));
    const auto label = get_or<std::string>(v, "label", "main");
    for (const auto& inst : spec.instances)
      for (const auto& point : spec.sweep) {
        json i = merged(inst, point);
        if (!opts.base_dir.empty()) i["_base_dir"] = opts.base_dir;
        for (auto seed : seeds) jobs.push_back({label, i, params, seed});
      }
  }

  ExperimentResult res;
  res.name = spec.name;
  res.task = spec.task;
  res.rows.resize(jobs.size());
  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      const auto& job = jobs[i];
      const auto start = std::chrono::steady_clock::now();
      RunRow row;
      try {
        row = run_single(spec.task, job.instance, job.params, job.seed);
      } catch (const std::exception& e) {
        row = RunRow{};
        row.seed = job.seed;
        row.n = get_or<std::size_t>(job.instance, "n", 0);
        row.k = get_or<std::size_t>(job.instance, "k", 0);
        row.status = "error";
        row.detail = e.what();
        row.report = {{"error", e.what()}, {"checks", json::object()}, {"metrics", json::object()}};
      }
      row.label = job.label;
      row.index = i;
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      row.report["run"] = {{"task", spec.task}, {"label", job.label}, {"seed", job.seed}, {"index", i},
                           {"params", job.params}};
      res.rows[i] = std::move(row);
    }
  };
  {
    const std::size_t threads = std::max<std::size_t>(1, std::min(opts.jobs, jobs.size()));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  res.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  evaluate(spec, res);

  if (!opts.out_dir.empty()) {
    const fs::path dir = fs::path(opts.out_dir) / spec.name;
    fs::create_directories(dir / "runs");
    for (const auto& r : res.rows) {
      json j = r.report;
      j["row"] = {{"n", r.n}, {"k", r.k}, {"estimate", r.estimate}, {"exact_or_bound", r.exact_or_bound},
                  {"queries_membership", r.queries_membership}, {"queries_distance", r.queries_distance},
                  {"status", r.status}, {"detail", r.detail}};
      write_json_file((dir / "runs" / (r.label + "_" + std::to_string(r.index) + ".json")).string(), j);
    }
    write_csv((dir / (spec.name + ".csv")).string(), res.rows);
    write_json_file((dir / "summary.json").string(), res.summary);
  }
  return res;
}

std::vector<ExperimentResult> run_spec(const json& spec, const RunOptions& opts) {
  std::vector<ExperimentResult> out;
  if (spec.contains("experiments")) {
    const auto base = get_or<std::string>(spec, "name", "bundle");
    std::size_t i = 0;
    for (const auto& sub : spec.at("experiments")) {
      json s = sub;
      if (!s.contains("name")) s["name"] = base + "_" + std::to_string(i);
      out.push_back(run_experiment(ExperimentSpec::from_json(s), opts));
      ++i;
    }
    return out;
  }
  out.push_back(run_experiment(ExperimentSpec::from_json(spec), opts));
  return out;
}

std::vector<ExperimentResult> run_spec_file(const std::string& path, RunOptions opts) {
  json spec = read_json_file(path);
  if (opts.base_dir.empty()) opts.base_dir = fs::path(path).parent_path().string();
  return run_spec(spec, opts);
}

std::string csv_header() {
  return "n,k,seed,estimate,exact_or_bound,queries_membership,queries_distance,wall_ms,label,status,detail";
}

std::string csv_row(const RunRow& r) {
  return std::to_string(r.n) + "," + std::to_string(r.k) + "," + std::to_string(r.seed) + "," +
         fmt_double(r.estimate) + "," + fmt_double(r.exact_or_bound) + "," + std::to_string(r.queries_membership) +
         "," + std::to_string(r.queries_distance) + "," + fmt_double(r.wall_ms) + "," + sanitize(r.label) + "," +
         r.status + "," + sanitize(r.detail);
}

void write_csv(const std::string& path, const std::vector<RunRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << csv_header() << '\n';
  for (const auto& r : rows) out << csv_row(r) << '\n';
}

std::optional<double> row_value(const RunRow& r, const std::string& name) {
  if (name == "n") return static_cast<double>(r.n);
  if (name == "k") return static_cast<double>(r.k);
  if (name == "seed") return static_cast<double>(r.seed);
  if (name == "estimate") return r.estimate;
  if (name == "exact_or_bound") return r.exact_or_bound;
  if (name == "queries_membership") return static_cast<double>(r.queries_membership);
  if (name == "queries_distance") return static_cast<double>(r.queries_distance);
  if (name == "wall_ms") return r.wall_ms;
  if (r.report.contains("metrics")) {
    const auto& m = r.report.at("metrics");
    if (m.contains(name) && m.at(name).is_number()) return m.at(name).get<double>();
  }
  return std::nullopt;
}

}  // namespace sublin::bench
