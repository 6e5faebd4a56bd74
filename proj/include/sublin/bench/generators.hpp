#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "sublin/multigraph.hpp"
#include "sublin/oracle.hpp"

namespace sublin::bench {

struct GeneratedSets {
  SetSystem system;
  nlohmann::json meta;  // kind, parameters, planted SC bound when known
};

/// Set system generators. Kinds and their `params` keys:
///   uniform_random     p                     each (e, S) independently
///   planted_cover      cover_size, overlap,  a cover of `cover_size` blocks
///                      noise_size            plus random noise sets
///   singleton_heavy    extra_size            all k singletons, then random sets
///   pairs_and_triples  p_triple              all k singletons, then 2-/3-sets
/// Family order is shuffled. Elements left uncovered by uniform_random are
/// patched into a random set. Throws ConfigError on infeasible parameters.
GeneratedSets generate_set_system(const std::string& kind, std::size_t k, std::size_t n,
                                  const nlohmann::json& params, std::uint64_t seed);

/// Append `count` random 2-element sets to a system.
SetSystem with_extra_pairs(const SetSystem& system, std::size_t count, std::uint64_t seed);

/// Metric generators:
///   euclidean       dim (default 2); coordinates in [0,1), rounded to 6 digits
///   random_closure  weights in [1,10) rounded to 6 digits, shortest-path closed
/// Terminals: `k` when given, else ⌈terminal_fraction · n_pts⌉ (at least 1),
/// drawn uniformly.
MetricInstance generate_metric(const std::string& kind, std::size_t n_pts, double terminal_fraction,
                               const nlohmann::json& params, std::uint64_t seed);

/// Random multigraph on `vertices` vertices with `edges` edges. A fraction
/// `parallel` of edges duplicate an earlier pair. Each edge gets its own set id.
ExplicitMultigraph random_multigraph(std::size_t vertices, std::size_t edges, double parallel,
                                     std::uint64_t seed);
ExplicitMultigraph path_multigraph(std::size_t vertices);
ExplicitMultigraph star_multigraph(std::size_t leaves);

}  // namespace sublin::bench
