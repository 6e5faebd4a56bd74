#include "sublin/bench/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sublin/errors.hpp"
#include "sublin/random.hpp"

namespace sublin::bench {

namespace {

double round6(double x) { return std::round(x * 1e6) / 1e6; }

template <class T>
T param(const nlohmann::json& params, const char* key, T fallback) {
  if (params.is_object() && params.contains(key)) return params.at(key).get<T>();
  return fallback;
}

std::vector<ElementId> random_subset(Rng& rng, std::size_t k, std::size_t size) {
  size = std::min(size, k);
  std::vector<ElementId> out;
  if (size > 16) {
    out.resize(k);
    std::iota(out.begin(), out.end(), ElementId{0});
    for (std::size_t i = 0; i < size; ++i) std::swap(out[i], out[i + rng.index(k - i)]);
    out.resize(size);
    return out;
  }
  out.reserve(size);
  while (out.size() < size) {
    auto e = static_cast<ElementId>(rng.index(k));
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  return out;
}

std::vector<std::vector<ElementId>> singletons(std::size_t k) {
  std::vector<std::vector<ElementId>> sets(k);
  for (std::size_t e = 0; e < k; ++e) sets[e] = {static_cast<ElementId>(e)};
  return sets;
}

}  // namespace

GeneratedSets generate_set_system(const std::string& kind, std::size_t k, std::size_t n,
                                  const nlohmann::json& params, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6e5e));
  std::vector<std::vector<ElementId>> sets;
  nlohmann::json meta = {{"kind", kind}, {"k", k}, {"n", n}, {"seed", seed}, {"params", params}};

  if (kind == "uniform_random") {
    double p = param(params, "p", 0.01);
    if (params.is_object() && params.contains("mean_size") && k > 0) {
      const double mean = params.at("mean_size").get<double>() *
                          std::pow(static_cast<double>(k), param(params, "mean_size_exponent", 0.0));
      p = std::min(1.0, mean / static_cast<double>(k));
    }
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
    if (n == 0 && k > 0) throw ConfigError("uniform_random needs n >= 1");
    // Optional heavy elements: each gets its own inclusion probability.
    const auto heavy = std::min(k, param<std::size_t>(params, "heavy_elements", 0));
    const double hp_lo = param(params, "heavy_p_min", 0.5), hp_hi = param(params, "heavy_p_max", 0.5);
    if (!(0.0 <= hp_lo && hp_lo <= hp_hi && hp_hi <= 1.0)) throw ConfigError("bad heavy_p range");
    std::vector<double> pe(k, p);
    for (std::size_t e = 0; e < heavy; ++e) pe[e] = hp_lo + (hp_hi - hp_lo) * rng.uniform();
    sets.resize(n);
    std::vector<char> covered(k, 0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t e = 0; e < k; ++e)
        if (rng.bernoulli(pe[e])) {
          sets[s].push_back(static_cast<ElementId>(e));
          covered[e] = 1;
        }
    // Optional big sets replace the first few sets.
    const auto big = std::min(n, param<std::size_t>(params, "big_sets", 0));
    const auto big_size = param<std::size_t>(params, "big_size", k);
    for (std::size_t s = 0; s < big; ++s) {
      sets[s] = random_subset(rng, k, big_size);
      std::sort(sets[s].begin(), sets[s].end());
    }
    std::fill(covered.begin(), covered.end(), 0);
    for (const auto& set : sets)
      for (ElementId e : set) covered[e] = 1;
    std::size_t patched = 0;
    for (std::size_t e = 0; e < k; ++e)
      if (!covered[e]) {
        sets[rng.index(n)].push_back(static_cast<ElementId>(e));
        ++patched;
      }
    meta["patched"] = patched;
  } else if (kind == "planted_cover") {
    const auto c = param<std::size_t>(params, "cover_size", 1);
    const double overlap = param(params, "overlap", 0.0);
    const auto noise = param<std::size_t>(params, "noise_size", 3);
    if (c == 0 || c > k || c > n) throw ConfigError("planted_cover needs 1 <= cover_size <= min(k, n)");
    if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("overlap must lie in [0, 1]");
    std::vector<ElementId> perm(k);
    std::iota(perm.begin(), perm.end(), ElementId{0});
    rng.shuffle(perm.begin(), perm.end());
    for (std::size_t b = 0; b < c; ++b) {
      std::vector<ElementId> block(perm.begin() + static_cast<std::ptrdiff_t>(b * k / c),
                                   perm.begin() + static_cast<std::ptrdiff_t>((b + 1) * k / c));
      const auto extra = static_cast<std::size_t>(overlap * static_cast<double>(block.size()));
      std::vector<char> in(k, 0);
      for (ElementId e : block) in[e] = 1;
      for (std::size_t added = 0; added < extra && block.size() < k;) {
        auto e = static_cast<ElementId>(rng.index(k));
        if (in[e]) continue;
        in[e] = 1;
        block.push_back(e);
        ++added;
      }
      sets.push_back(std::move(block));
    }
    while (sets.size() < n) sets.push_back(random_subset(rng, k, noise));
    meta["sc_upper"] = c;
  } else if (kind == "singleton_heavy" || kind == "pairs_and_triples") {
    if (n < k) throw ConfigError(kind + " needs n >= k");
    sets = singletons(k);
    if (kind == "singleton_heavy") {
      const auto extra = param<std::size_t>(params, "extra_size", 2);
      while (sets.size() < n) sets.push_back(random_subset(rng, k, extra));
    } else {
      const double p3 = param(params, "p_triple", 0.5);
      if (k < 3 && n > k) throw ConfigError("pairs_and_triples needs k >= 3");
      while (sets.size() < n) sets.push_back(random_subset(rng, k, rng.bernoulli(p3) ? 3 : 2));
    }
    meta["sc_upper"] = k;
  } else {
    throw ConfigError("unknown set system kind: " + kind);
  }

  rng.shuffle(sets.begin(), sets.end());
  return {SetSystem(k, std::move(sets)), std::move(meta)};
}

SetSystem with_extra_pairs(const SetSystem& system, std::size_t count, std::uint64_t seed) {
  const std::size_t k = system.universe_size();
  if (count > 0 && k < 2) throw ConfigError("extra pairs need k >= 2");
  Rng rng(derive_seed(seed, 0x9a125));
  auto sets = system.sets();
  for (std::size_t i = 0; i < count; ++i) sets.push_back(random_subset(rng, k, 2));
  return SetSystem(k, std::move(sets));
}

MetricInstance generate_metric(const std::string& kind, std::size_t n_pts, double terminal_fraction,
                               const nlohmann::json& params, std::uint64_t seed) {
  if (n_pts < 2) throw ConfigError("metric needs n_pts >= 2");
  Rng rng(derive_seed(seed, 0x3e7c));
  std::size_t k = 0;
  if (params.is_object() && params.contains("k")) {
    k = params.at("k").get<std::size_t>();
  } else {
    if (!(terminal_fraction > 0.0 && terminal_fraction <= 1.0))
      throw ConfigError("terminal_fraction must lie in (0, 1]");
    k = static_cast<std::size_t>(std::ceil(terminal_fraction * static_cast<double>(n_pts) - 1e-9));
  }
  k = std::clamp<std::size_t>(k, 1, n_pts);

  MetricInstance out;
  auto pick_terminals = [&] {
    std::vector<PointId> idx(n_pts);
    std::iota(idx.begin(), idx.end(), PointId{0});
    rng.shuffle(idx.begin(), idx.end());
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
  };

  if (kind == "euclidean") {
    const auto dim = param<std::size_t>(params, "dim", 2);
    if (dim == 0) throw ConfigError("dim must be positive");
    std::vector<double> coords(n_pts * dim);
    for (double& c : coords) c = round6(rng.uniform());
    out = MetricInstance::from_coords(dim, std::move(coords), pick_terminals());
  } else if (kind == "random_closure") {
    std::vector<double> w(n_pts * n_pts, 0.0);
    for (std::size_t i = 0; i < n_pts; ++i)
      for (std::size_t j = i + 1; j < n_pts; ++j) w[i * n_pts + j] = w[j * n_pts + i] = round6(1.0 + 9.0 * rng.uniform());
    for (std::size_t z = 0; z < n_pts; ++z)
      for (std::size_t i = 0; i < n_pts; ++i)
        for (std::size_t j = 0; j < n_pts; ++j) {
          double via = w[i * n_pts + z] + w[z * n_pts + j];
          if (via < w[i * n_pts + j]) w[i * n_pts + j] = via;
        }
    out = MetricInstance::from_matrix(n_pts, std::move(w), pick_terminals());
  } else {
    throw ConfigError("unknown metric kind: " + kind);
  }
  return out;
}

ExplicitMultigraph random_multigraph(std::size_t vertices, std::size_t edges, double parallel,
                                     std::uint64_t seed) {
  if (vertices < 2 && edges > 0) throw ConfigError("edges need at least two vertices");
  if (edges > std::numeric_limits<SetId>::max()) throw ConfigError("too many edges");
  Rng rng(derive_seed(seed, 0x3417));
  ExplicitMultigraph g;
  g.id_bound = vertices;
  g.vertices.resize(vertices);
  std::iota(g.vertices.begin(), g.vertices.end(), ElementId{0});
  g.edges.reserve(edges);
  for (std::size_t i = 0; i < edges; ++i) {
    ElementId u, v;
    if (!g.edges.empty() && rng.bernoulli(parallel)) {
      const auto& twin = g.edges[rng.index(g.edges.size())];
      u = twin.u;
      v = twin.v;
    } else {
      u = static_cast<ElementId>(rng.index(vertices));
      do v = static_cast<ElementId>(rng.index(vertices));
      while (v == u);
    }
    g.edges.push_back(EdgeId::canonical(u, v, static_cast<SetId>(i)));
  }
  return g;
}

ExplicitMultigraph path_multigraph(std::size_t vertices) {
  ExplicitMultigraph g;
  g.id_bound = vertices;
  for (std::size_t v = 0; v < vertices; ++v) g.vertices.push_back(static_cast<ElementId>(v));
  for (std::size_t v = 0; v + 1 < vertices; ++v)
    g.edges.push_back({static_cast<ElementId>(v), static_cast<ElementId>(v + 1), static_cast<SetId>(v)});
  return g;
}

ExplicitMultigraph star_multigraph(std::size_t leaves) {
  ExplicitMultigraph g;
  g.id_bound = leaves + 1;
  for (std::size_t v = 0; v <= leaves; ++v) g.vertices.push_back(static_cast<ElementId>(v));
  for (std::size_t l = 1; l <= leaves; ++l)
    g.edges.push_back({0, static_cast<ElementId>(l), static_cast<SetId>(l - 1)});
  return g;
}

}  // namespace sublin::bench
