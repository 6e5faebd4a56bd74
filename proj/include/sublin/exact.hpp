#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sublin/multigraph.hpp"
#include "sublin/oracle.hpp"

namespace sublin {

inline constexpr std::size_t kExactCoverMaxUniverse = 22;
inline constexpr std::size_t kExactSteinerMaxPoints = 16;

/// Minimum number of sets covering the universe; nullopt when some element
/// is in no eligible set. With `no_pairs`, sets of size exactly 2 are
/// ignored. Throws ContractViolation when k > 22.
std::optional<std::size_t> exact_set_cover(const SetSystem& system, bool no_pairs = false);

/// Same, restricted to covering `elements` with the sets listed in `sets`.
/// Set sizes for `no_pairs` are taken on the full sets.
std::optional<std::size_t> exact_set_cover(const SetSystem& system,
                                           std::span<const ElementId> elements,
                                           std::span<const SetId> sets, bool no_pairs);

/// Classic greedy cover size (an upper bound on SC), nullopt if uncoverable.
std::optional<std::size_t> greedy_set_cover(const SetSystem& system, bool no_pairs = false);

/// Maximal matching of H by one pass over the sets, pairing still-unmatched
/// elements inside each set. Sets of size 2 are skipped with `no_pairs`.
std::size_t scan_maximal_matching(const std::vector<std::vector<ElementId>>& sets,
                                  std::size_t universe_size, bool no_pairs);

/// H over (F̂, U_low): one edge per set per pair of U_low members.
ExplicitMultigraph build_multigraph(const SetSystem& system, std::span<const SetId> sets,
                                    std::span<const ElementId> low, bool exclude_size_two);

/// Greedy matching in increasing (rank, id) order.
std::vector<EdgeId> offline_greedy_matching(const ExplicitMultigraph& g, const RankFunction& rf);

/// Matched flag per vertex id for the greedy matching.
std::vector<char> matched_vertices(const ExplicitMultigraph& g, const std::vector<EdgeId>& matching);

struct MonteCarloEstimate {
  double mean = 0.0;
  double half_width = 0.0;  // 99% normal half-width from the standard error
  std::size_t trials = 0;
};

/// Mean greedy matching size over `trials` independent rank seeds.
MonteCarloEstimate mc_rgmm_expectation(const ExplicitMultigraph& g, std::size_t trials,
                                       std::uint64_t seed);

struct MstResult {
  double weight = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // local indices
  std::vector<double> edge_weights;
};

/// Prim on the complete graph over m points with distance callable d(i, j).
template <class Distance>
MstResult prim_mst(std::size_t m, Distance&& d) {
  MstResult out;
  if (m <= 1) return out;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(m, inf);
  std::vector<std::size_t> from(m, 0);
  std::vector<char> in(m, 0);
  in[0] = 1;
  for (std::size_t j = 1; j < m; ++j) best[j] = d(0, j);
  for (std::size_t step = 1; step < m; ++step) {
    std::size_t pick = m;
    for (std::size_t j = 0; j < m; ++j)
      if (!in[j] && (pick == m || best[j] < best[pick])) pick = j;
    in[pick] = 1;
    out.weight += best[pick];
    out.edges.emplace_back(from[pick], pick);
    out.edge_weights.push_back(best[pick]);
    for (std::size_t j = 0; j < m; ++j) {
      if (in[j]) continue;
      double w = d(pick, j);
      if (w < best[j]) {
        best[j] = w;
        from[j] = pick;
      }
    }
  }
  return out;
}

/// Exact E|RGMM| by enumerating all edge orders. At most 9 edges.
double exhaustive_rgmm_expectation(const ExplicitMultigraph& g);

/// MST weight over `points` of the metric (no queries charged).
double exact_mst(const MetricInstance& metric, std::span<const PointId> points);

/// Exact Steiner tree weight by minimizing MST(T ∪ A) over Steiner subsets A.
/// n_pts ≤ 16 enforced.
double exact_steiner(const MetricInstance& metric);
double exact_steiner(const MetricInstance& metric, std::span<const PointId> terminals);

/// Dreyfus-Wagner dynamic program; cross-check for exact_steiner.
double steiner_dreyfus_wagner(const MetricInstance& metric, std::span<const PointId> terminals);

}  // namespace sublin
