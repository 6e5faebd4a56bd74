#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "sublin/errors.hpp"
#include "sublin/oracle.hpp"

namespace sublin {

/// Materialized multigraph on element ids. One EdgeId per parallel copy.
struct ExplicitMultigraph {
  std::size_t id_bound = 0;            // vertex ids are < id_bound
  std::vector<ElementId> vertices;     // ascending
  std::vector<EdgeId> edges;           // canonical, unique

  std::size_t degree(ElementId v) const {
    return static_cast<std::size_t>(std::count_if(
        edges.begin(), edges.end(), [v](const EdgeId& e) { return e.has_endpoint(v); }));
  }
  std::vector<RankKey> ranked(const RankFunction& rf) const {
    std::vector<RankKey> keys;
    keys.reserve(edges.size());
    for (const auto& e : edges) keys.push_back(rf.key(e));
    std::sort(keys.begin(), keys.end());
    return keys;
  }
};

/// Largest possible key; used as "no rank limit".
inline RankKey rank_limit_none() {
  constexpr auto m = std::numeric_limits<std::uint32_t>::max();
  return {std::numeric_limits<std::uint64_t>::max(), EdgeId{m, m, m}};
}

/// Eager backend for the local oracles: per-vertex adjacency sorted by rank.
class ExplicitView {
 public:
  ExplicitView(const ExplicitMultigraph& g, const RankFunction& rf) : ranks_(rf), adj_(g.id_bound) {
    is_vertex_.assign(g.id_bound, 0);
    for (ElementId v : g.vertices) is_vertex_.at(v) = 1;
    for (const auto& e : g.edges) {
      if (!e.is_canonical() || !is_vertex_.at(e.u) || !is_vertex_.at(e.v))
        throw ContractViolation("edge endpoints must be canonical graph vertices");
      RankKey key = rf.key(e);
      adj_[e.u].push_back(key);
      adj_[e.v].push_back(key);
    }
    for (auto& list : adj_) std::sort(list.begin(), list.end());
    vertices_ = g.vertices;
  }

  const RankFunction& ranks() const { return ranks_; }
  std::size_t universe_size() const { return adj_.size(); }
  const std::vector<ElementId>& vertices() const { return vertices_; }
  bool is_vertex(ElementId v) const { return v < is_vertex_.size() && is_vertex_[v]; }
  std::size_t degree(ElementId v) const { return adj_.at(v).size(); }

  /// i-th incident edge of v in rank order, if it ranks below `limit`.
  std::optional<RankKey> edge_at(ElementId v, std::size_t i, const RankKey& limit) {
    const auto& list = adj_[v];
    if (i >= list.size() || !(list[i] < limit)) return std::nullopt;
    return list[i];
  }

 private:
  RankFunction ranks_;
  std::vector<std::vector<RankKey>> adj_;
  std::vector<char> is_vertex_;
  std::vector<ElementId> vertices_;
};

}  // namespace sublin
