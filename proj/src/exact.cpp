#include "sublin/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numeric>

#include "sublin/errors.hpp"
#include "sublin/random.hpp"

namespace sublin {

namespace {

std::optional<std::size_t> cover_masks(std::size_t bits, const std::vector<std::uint32_t>& masks) {
  if (bits == 0) return 0;
  const std::uint32_t full = bits == 32 ? ~0u : ((1u << bits) - 1);
  std::uint32_t reach = 0;
  for (auto m : masks) reach |= m;
  if (reach != full) return std::nullopt;

  // containing[b]: masks that cover bit b. BFS always branches on the lowest
  // uncovered bit, which some set in every optimal cover must contain.
  std::vector<std::vector<std::uint32_t>> containing(bits);
  for (auto m : masks)
    for (std::size_t b = 0; b < bits; ++b)
      if (m >> b & 1u) containing[b].push_back(m);

  std::vector<std::uint8_t> dist(std::size_t{1} << bits, 0xff);
  std::deque<std::uint32_t> queue{0u};
  dist[0] = 0;
  while (!queue.empty()) {
    std::uint32_t cur = queue.front();
    queue.pop_front();
    if (cur == full) return dist[cur];
    std::size_t low = static_cast<std::size_t>(std::countr_one(cur));
    for (auto m : containing[low]) {
      std::uint32_t nxt = cur | m;
      if (dist[nxt] == 0xff) {
        dist[nxt] = static_cast<std::uint8_t>(dist[cur] + 1);
        queue.push_back(nxt);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::size_t> exact_set_cover(const SetSystem& system,
                                           std::span<const ElementId> elements,
                                           std::span<const SetId> sets, bool no_pairs) {
  if (elements.size() > kExactCoverMaxUniverse)
    throw ContractViolation("exact set cover is limited to 22 elements");
  std::vector<int> bit(system.universe_size(), -1);
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (elements[i] >= system.universe_size()) throw ContractViolation("element out of range");
    bit[elements[i]] = static_cast<int>(i);
  }
  std::vector<std::uint32_t> masks;
  for (SetId s : sets) {
    auto members = system.set(s);
    if (no_pairs && members.size() == 2) continue;
    std::uint32_t m = 0;
    for (ElementId e : members)
      if (bit[e] >= 0) m |= 1u << bit[e];
    if (m != 0) masks.push_back(m);
  }
  std::sort(masks.begin(), masks.end());
  masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
  return cover_masks(elements.size(), masks);
}

std::optional<std::size_t> exact_set_cover(const SetSystem& system, bool no_pairs) {
  if (system.universe_size() > kExactCoverMaxUniverse)
    throw ContractViolation("exact set cover is limited to 22 elements");
  std::vector<ElementId> all(system.universe_size());
  std::iota(all.begin(), all.end(), ElementId{0});
  std::vector<SetId> sets(system.family_size());
  std::iota(sets.begin(), sets.end(), SetId{0});
  return exact_set_cover(system, all, sets, no_pairs);
}

std::optional<std::size_t> greedy_set_cover(const SetSystem& system, bool no_pairs) {
  const std::size_t k = system.universe_size();
  std::vector<char> covered(k, 0);
  std::vector<char> used(system.family_size(), 0);
  std::size_t remaining = k, picked = 0;
  while (remaining > 0) {
    std::size_t best = 0;
    SetId best_set = 0;
    for (SetId s = 0; s < system.family_size(); ++s) {
      if (used[s]) continue;
      auto members = system.set(s);
      if (no_pairs && members.size() == 2) continue;
      std::size_t gain = 0;
      for (ElementId e : members) gain += covered[e] ? 0 : 1;
      if (gain > best) {
        best = gain;
        best_set = s;
      }
    }
    if (best == 0) return std::nullopt;
    used[best_set] = 1;
    ++picked;
    for (ElementId e : system.set(best_set))
      if (!covered[e]) {
        covered[e] = 1;
        --remaining;
      }
  }
  return picked;
}

std::size_t scan_maximal_matching(const std::vector<std::vector<ElementId>>& sets,
                                  std::size_t universe_size, bool no_pairs) {
  std::vector<char> matched(universe_size, 0);
  std::size_t size = 0;
  for (const auto& s : sets) {
    if (no_pairs && s.size() == 2) continue;
    ElementId waiting = 0;
    bool have = false;
    for (ElementId e : s) {
      if (matched[e]) continue;
      if (have) {
        matched[waiting] = matched[e] = 1;
        ++size;
        have = false;
      } else {
        waiting = e;
        have = true;
      }
    }
  }
  return size;
}

ExplicitMultigraph build_multigraph(const SetSystem& system, std::span<const SetId> sets,
                                    std::span<const ElementId> low, bool exclude_size_two) {
  ExplicitMultigraph g;
  g.id_bound = system.universe_size();
  g.vertices.assign(low.begin(), low.end());
  std::sort(g.vertices.begin(), g.vertices.end());
  std::vector<char> is_low(system.universe_size(), 0);
  for (ElementId v : g.vertices) is_low.at(v) = 1;
  for (SetId s : sets) {
    auto members = system.set(s);
    if (exclude_size_two && members.size() == 2) continue;
    std::vector<ElementId> in;
    for (ElementId e : members)
      if (is_low[e]) in.push_back(e);
    for (std::size_t a = 0; a < in.size(); ++a)
      for (std::size_t b = a + 1; b < in.size(); ++b) g.edges.push_back({in[a], in[b], s});
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

std::vector<EdgeId> offline_greedy_matching(const ExplicitMultigraph& g, const RankFunction& rf) {
  std::vector<char> matched(g.id_bound, 0);
  std::vector<EdgeId> out;
  for (const auto& key : g.ranked(rf)) {
    const EdgeId& e = key.id;
    if (matched[e.u] || matched[e.v]) continue;
    matched[e.u] = matched[e.v] = 1;
    out.push_back(e);
  }
  return out;
}

std::vector<char> matched_vertices(const ExplicitMultigraph& g, const std::vector<EdgeId>& matching) {
  std::vector<char> matched(g.id_bound, 0);
  for (const auto& e : matching) matched[e.u] = matched[e.v] = 1;
  return matched;
}

MonteCarloEstimate mc_rgmm_expectation(const ExplicitMultigraph& g, std::size_t trials,
                                       std::uint64_t seed) {
  if (trials == 0) throw ContractViolation("mc_rgmm_expectation needs at least one trial");
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    RankFunction rf(derive_seed(seed, t));
    auto size = static_cast<double>(offline_greedy_matching(g, rf).size());
    sum += size;
    sum_sq += size * size;
  }
  MonteCarloEstimate out;
  out.trials = trials;
  const double n = static_cast<double>(trials);
  out.mean = sum / n;
  if (trials > 1) {
    double var = std::max(0.0, (sum_sq - n * out.mean * out.mean) / (n - 1.0));
    out.half_width = 2.5758293035489 * std::sqrt(var / n);
  }
  return out;
}

double exhaustive_rgmm_expectation(const ExplicitMultigraph& g) {
  const std::size_t m = g.edges.size();
  if (m > 9) throw ContractViolation("exhaustive expectation limited to 9 edges");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<char> used(g.id_bound, 0);
  double total = 0.0, count = 0.0;
  do {
    std::fill(used.begin(), used.end(), 0);
    std::size_t size = 0;
    for (std::size_t i : order) {
      const auto& e = g.edges[i];
      if (used[e.u] || used[e.v]) continue;
      used[e.u] = used[e.v] = 1;
      ++size;
    }
    total += static_cast<double>(size);
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  return total / count;
}

double exact_mst(const MetricInstance& metric, std::span<const PointId> points) {
  if (points.empty()) throw ContractViolation("exact_mst needs at least one point");
  return prim_mst(points.size(), [&](std::size_t i, std::size_t j) {
           return metric.distance(points[i], points[j]);
         }).weight;
}

double exact_steiner(const MetricInstance& metric) {
  return exact_steiner(metric, metric.terminals());
}

double exact_steiner(const MetricInstance& metric, std::span<const PointId> terminals) {
  const std::size_t n = metric.size();
  if (n > kExactSteinerMaxPoints) throw ContractViolation("exact_steiner is limited to 16 points");
  if (terminals.size() <= 1) return 0.0;
  std::vector<char> is_t(n, 0);
  for (PointId t : terminals) is_t.at(t) = 1;
  std::vector<PointId> steiner;
  for (PointId p = 0; p < n; ++p)
    if (!is_t[p]) steiner.push_back(p);

  double best = std::numeric_limits<double>::infinity();
  std::vector<PointId> pts;
  for (std::uint32_t mask = 0; mask < (1u << steiner.size()); ++mask) {
    pts.assign(terminals.begin(), terminals.end());
    for (std::size_t b = 0; b < steiner.size(); ++b)
      if (mask >> b & 1u) pts.push_back(steiner[b]);
    best = std::min(best, exact_mst(metric, pts));
  }
  return best;
}

double steiner_dreyfus_wagner(const MetricInstance& metric, std::span<const PointId> terminals) {
  const std::size_t n = metric.size();
  const std::size_t k = terminals.size();
  if (k <= 1) return 0.0;
  if (k > 20) throw ContractViolation("Dreyfus-Wagner limited to 20 terminals");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t full = (std::size_t{1} << k) - 1;
  // dp[S * n + v]: cheapest tree spanning terminals in S plus point v.
  std::vector<double> dp((full + 1) * n, inf);
  for (std::size_t i = 0; i < k; ++i)
    for (PointId v = 0; v < n; ++v) dp[(std::size_t{1} << i) * n + v] = metric.distance(terminals[i], v);
  std::vector<double> merged(n);
  for (std::size_t s = 1; s <= full; ++s) {
    if (std::popcount(s) < 2) continue;
    for (PointId v = 0; v < n; ++v) {
      double b = inf;
      // Proper subsets containing the lowest bit, so each split is seen once.
      std::size_t low = s & (~s + 1);
      for (std::size_t t = (s - 1) & s; t > 0; t = (t - 1) & s) {
        if (!(t & low)) continue;
        b = std::min(b, dp[t * n + v] + dp[(s ^ t) * n + v]);
      }
      merged[v] = b;
    }
    // Distances form a metric, so one relaxation pass is a full closure.
    for (PointId v = 0; v < n; ++v) {
      double b = merged[v];
      for (PointId u = 0; u < n; ++u) b = std::min(b, merged[u] + metric.distance(u, v));
      dp[s * n + v] = b;
    }
  }
  return dp[full * n + terminals[0]];
}

}  // namespace sublin
