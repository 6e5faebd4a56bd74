#pragma once

// Local oracles for random greedy maximal matching on a multigraph whose
// edge order is given by a RankFunction. The graph is any backend with
//   ranks(), universe_size(), vertices(), is_vertex(v),
//   edge_at(v, i, limit) -> optional<RankKey>
// where edge_at yields v's incident edges in increasing rank order and never
// reports (or pays for) an edge at or above `limit`.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "sublin/multigraph.hpp"
#include "sublin/oracle.hpp"
#include "sublin/random.hpp"

namespace sublin {

struct QueryStats {
  std::uint64_t vertex_calls = 0;
  std::uint64_t edge_calls = 0;            // EO invocations, memo hits included
  std::vector<std::uint64_t> neighbor_requests;  // per vertex id, new-neighbor requests
  std::vector<std::uint64_t> depth_histogram;    // EO calls by recursion depth
  bool track_edges = false;
  std::unordered_map<EdgeId, std::uint64_t, EdgeIdHash> per_edge;  // Q(e) when tracked

  nlohmann::json to_json() const;
};

struct OracleOptions {
  bool memo = true;
  bool track_edges = false;
};

template <class Graph>
class LocalMatchingOracle {
 public:
  explicit LocalMatchingOracle(Graph& g, OracleOptions opts = {}) : g_(&g), opts_(opts) {
    stats_.track_edges = opts.track_edges;
    stats_.neighbor_requests.assign(g.universe_size(), 0);
  }

  /// Is v matched in the greedy matching for g's rank order?
  bool vertex_oracle(ElementId v) {
    ++stats_.vertex_calls;
    const RankKey none = rank_limit_none();
    for (std::size_t i = 0;; ++i) {
      auto next = fetch(v, i, none);
      if (!next) return false;
      if (edge_oracle(next->id, next->id.other(v))) return true;
    }
  }

  /// Is e in the greedy matching? `from` is the endpoint the call arrives at.
  bool edge_oracle(const EdgeId& e, ElementId from) {
    (void)from;
    return edge_rec(e, 0);
  }

  const QueryStats& stats() const { return stats_; }
  QueryStats& stats() { return stats_; }

  /// Forget memoized answers and per-probe neighbor exposure.
  void clear_memo() {
    memo_.clear();
    exposed_.clear();
  }

  std::size_t memo_size() const { return memo_.size(); }

 private:
  std::optional<RankKey> fetch(ElementId v, std::size_t i, const RankKey& limit) {
    auto result = g_->edge_at(v, i, limit);
    if (result) {
      auto& seen = exposed_[v];
      if (i >= seen) {
        ++stats_.neighbor_requests[v];
        seen = i + 1;
      }
    }
    return result;
  }

  bool edge_rec(const EdgeId& e, std::size_t depth) {
    ++stats_.edge_calls;
    if (stats_.depth_histogram.size() <= depth) stats_.depth_histogram.resize(depth + 1, 0);
    ++stats_.depth_histogram[depth];
    if (stats_.track_edges) ++stats_.per_edge[e];
    if (opts_.memo) {
      auto hit = memo_.find(e);
      if (hit != memo_.end()) return hit->second;
    }

    const RankKey limit = g_->ranks().key(e);
    std::size_t i = 0, j = 0;
    auto a = fetch(e.u, i, limit);
    auto b = fetch(e.v, j, limit);
    bool matched = true;
    while (a || b) {
      RankKey next;
      if (a && b && a->id == b->id) {
        // Parallel copy of e: incident to both endpoints, visit once.
        next = *a;
        a = fetch(e.u, ++i, limit);
        b = fetch(e.v, ++j, limit);
      } else if (a && (!b || *a < *b)) {
        next = *a;
        a = fetch(e.u, ++i, limit);
      } else {
        next = *b;
        b = fetch(e.v, ++j, limit);
      }
      if (edge_rec(next.id, depth + 1)) {
        matched = false;
        break;
      }
    }
    if (opts_.memo) memo_.emplace(e, matched);
    return matched;
  }

  Graph* g_;
  OracleOptions opts_;
  std::unordered_map<EdgeId, bool, EdgeIdHash> memo_;
  std::unordered_map<ElementId, std::size_t> exposed_;
  QueryStats stats_;
};

/// How the implicit backend discovers a vertex's incident edges.
enum class NeighborAccess {
  kRankOrdered,  // query (u, S) pairs lazily in increasing rank of their edge
  kFullScan,     // query every pair on first touch (reference behaviour)
};

/// The auxiliary multigraph H over (F̂, U_low), accessed only through
/// membership queries. Vertex v's set list F̂_v costs |F̂| queries on first
/// touch. Candidate pairs (u, S), u ∈ U_low∖{v}, S ∈ F̂_v, are then queried
/// in increasing order of rank(u, v, S), which is known without a query, so
/// edges are discovered already sorted and pairs above a rank limit are
/// never paid for.
class ImplicitMultigraph {
 public:
  ImplicitMultigraph(MembershipSource& oracle, std::vector<SetId> kept_sets,
                     std::vector<ElementId> low, bool exclude_size_two, std::uint64_t rank_seed,
                     NeighborAccess access = NeighborAccess::kRankOrdered);

  const RankFunction& ranks() const { return ranks_; }
  std::size_t universe_size() const { return oracle_->universe_size(); }
  const std::vector<ElementId>& vertices() const { return low_; }
  bool is_vertex(ElementId v) const { return v < is_low_.size() && is_low_[v]; }
  bool exclude_size_two() const { return exclude_size_two_; }
  MembershipSource& oracle() { return *oracle_; }

  std::optional<RankKey> edge_at(ElementId v, std::size_t i, const RankKey& limit);

  /// F̂_v, materializing it if needed.
  const std::vector<SetId>& sets_of(ElementId v);

  /// Uniform random incident edge of v not in `exclusion`, by querying
  /// candidate pairs in a fresh random order. None once every pair is tried.
  std::optional<std::pair<ElementId, EdgeId>> sample_random_neighbor(
      ElementId v, const std::unordered_set<EdgeId, EdgeIdHash>& exclusion, Rng& rng);

  /// Does e's set have a member besides e.u and e.v? Cached per set.
  bool edge_set_has_third(const EdgeId& e, Rng& rng);

  std::size_t touched_vertices() const;
  std::size_t validations_run() const { return set_has_third_.size(); }

 private:
  struct Pending {
    std::uint64_t hash;
    ElementId u;
    SetId set;
  };
  struct Scan {
    bool materialized = false;
    std::vector<SetId> sets;
    std::vector<RankKey> edges;
    std::vector<Pending> pending;
    std::size_t pending_pos = 0;
    std::uint64_t window_lo = 0;  // pairs with hash < window_lo are in pending or consumed
    bool all_windows = false;     // every pair has been placed in a window
    std::uint32_t refills = 0;
  };

  Scan& materialize(ElementId v);
  void refill(ElementId v, Scan& sc);
  bool accept(ElementId v, ElementId u, SetId s);
  std::size_t pair_count(const Scan& sc) const;

  MembershipSource* oracle_;
  std::vector<SetId> kept_sets_;
  std::vector<ElementId> low_;
  std::vector<char> is_low_;
  bool exclude_size_two_;
  RankFunction ranks_;
  NeighborAccess access_;
  Rng validate_rng_;
  std::unordered_map<ElementId, Scan> scans_;
  std::unordered_map<SetId, bool> set_has_third_;
};

/// Free-function spelling of the implicit neighbor sampler.
inline std::optional<std::pair<ElementId, EdgeId>> sample_random_neighbor(
    ImplicitMultigraph& g, ElementId v, const std::unordered_set<EdgeId, EdgeIdHash>& exclusion,
    Rng& rng) {
  return g.sample_random_neighbor(v, exclusion, rng);
}

/// Scans U∖{u, v} in random order against e.set, stopping at the first hit.
/// Uncached; each call pays its own queries.
bool validate_edge_not_size_two(MembershipSource& oracle, const EdgeId& e, Rng& rng);

struct RgmmEstimate {
  double mu = 0.0;
  std::size_t samples = 0;
  std::size_t matched = 0;
  std::size_t vertices = 0;
  double eps = 0.0;
};

/// Number of vertex probes: ⌈48 ln k / ε²⌉.
std::size_t rgmm_sample_count(std::size_t k, double eps);

/// μ̃ = (|V|/(2s))·(matched probes) − ε|V|/4 over s probes of one shared
/// permutation. `draw(rng)` must return a uniform vertex; `vertex_count` is |V|.
template <class Graph, class Draw>
RgmmEstimate estimate_rgmm_size_with(Graph& g, double eps, std::uint64_t seed,
                                     std::size_t vertex_count, Draw&& draw,
                                     QueryStats* stats_out = nullptr) {
  RgmmEstimate out;
  out.eps = eps;
  out.vertices = vertex_count;
  out.samples = rgmm_sample_count(g.universe_size(), eps);
  if (vertex_count == 0) {
    out.samples = 0;
    return out;
  }

  LocalMatchingOracle<Graph> oracle(g);
  std::unordered_map<ElementId, bool> answered;
  Rng rng(derive_seed(seed, 0x76677));
  for (std::size_t j = 0; j < out.samples; ++j) {
    ElementId v = draw(rng);
    auto it = answered.find(v);
    if (it == answered.end()) it = answered.emplace(v, oracle.vertex_oracle(v)).first;
    if (it->second) ++out.matched;
  }
  const double low = static_cast<double>(vertex_count);
  out.mu = low / (2.0 * static_cast<double>(out.samples)) * static_cast<double>(out.matched) -
           eps * low / 4.0;
  if (stats_out) *stats_out = oracle.stats();
  return out;
}

template <class Graph>
RgmmEstimate estimate_rgmm_size(Graph& g, double eps, std::uint64_t seed,
                                QueryStats* stats_out = nullptr) {
  const auto& verts = g.vertices();
  return estimate_rgmm_size_with(
      g, eps, seed, verts.size(), [&](Rng& rng) { return verts[rng.index(verts.size())]; },
      stats_out);
}

}  // namespace sublin
