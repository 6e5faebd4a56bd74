#include "sublin/rgmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sublin/errors.hpp"

namespace sublin {

namespace {

constexpr std::size_t kFirstWindow = 256;
constexpr std::size_t kMaxWindow = 1 << 16;

// Draws a uniformly random permutation of [0, m) one element at a time
// without materializing it.
class LazyPermutation {
 public:
  explicit LazyPermutation(std::uint64_t m) : m_(m) {}
  bool done() const { return t_ >= m_; }
  std::uint64_t next(Rng& rng) {
    std::uint64_t r = t_ + rng.index(static_cast<std::size_t>(m_ - t_));
    std::uint64_t vr = value(r);
    std::uint64_t vt = value(t_);
    swapped_[r] = vt;
    ++t_;
    return vr;
  }

 private:
  std::uint64_t value(std::uint64_t i) const {
    auto it = swapped_.find(i);
    return it == swapped_.end() ? i : it->second;
  }
  std::uint64_t m_;
  std::uint64_t t_ = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> swapped_;
};

}  // namespace

nlohmann::json QueryStats::to_json() const {
  nlohmann::json j{{"vertex_calls", vertex_calls},
                   {"edge_calls", edge_calls},
                   {"depth_histogram", depth_histogram}};
  std::uint64_t requests = 0, max_per_edge = 0;
  for (auto r : neighbor_requests) requests += r;
  j["neighbor_requests_total"] = requests;
  if (track_edges) {
    for (const auto& [e, q] : per_edge) max_per_edge = std::max(max_per_edge, q);
    j["edges_tracked"] = per_edge.size();
    j["max_per_edge"] = max_per_edge;
  }
  return j;
}

std::size_t rgmm_sample_count(std::size_t k, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("rgmm estimate needs 0 < eps < 1");
  double lk = std::log(static_cast<double>(std::max<std::size_t>(k, 2)));
  return static_cast<std::size_t>(std::ceil(48.0 * lk / (eps * eps)));
}

ImplicitMultigraph::ImplicitMultigraph(MembershipSource& oracle, std::vector<SetId> kept_sets,
                                       std::vector<ElementId> low, bool exclude_size_two,
                                       std::uint64_t rank_seed, NeighborAccess access)
    : oracle_(&oracle),
      kept_sets_(std::move(kept_sets)),
      low_(std::move(low)),
      exclude_size_two_(exclude_size_two),
      ranks_(rank_seed),
      access_(access),
      validate_rng_(derive_seed(rank_seed, 0x7a11d)) {
  std::sort(low_.begin(), low_.end());
  low_.erase(std::unique(low_.begin(), low_.end()), low_.end());
  is_low_.assign(oracle.universe_size(), 0);
  for (ElementId v : low_) {
    if (v >= is_low_.size()) throw ContractViolation("U_low element outside the universe");
    is_low_[v] = 1;
  }
  for (SetId s : kept_sets_)
    if (s >= oracle.family_size()) throw ContractViolation("kept set index out of range");
}

ImplicitMultigraph::Scan& ImplicitMultigraph::materialize(ElementId v) {
  Scan& sc = scans_[v];
  if (sc.materialized) return sc;
  sc.materialized = true;
  for (SetId s : kept_sets_)
    if (oracle_->query(v, s)) sc.sets.push_back(s);
  if (access_ == NeighborAccess::kFullScan) {
    for (SetId s : sc.sets)
      for (ElementId u : low_)
        if (u != v && accept(v, u, s)) sc.edges.push_back(ranks_.key(EdgeId::canonical(v, u, s)));
    std::sort(sc.edges.begin(), sc.edges.end());
    sc.all_windows = true;
  }
  return sc;
}

const std::vector<SetId>& ImplicitMultigraph::sets_of(ElementId v) {
  if (!is_vertex(v)) throw ContractViolation("element is not a vertex of H");
  return materialize(v).sets;
}

std::size_t ImplicitMultigraph::pair_count(const Scan& sc) const {
  return low_.empty() ? 0 : (low_.size() - 1) * sc.sets.size();
}

bool ImplicitMultigraph::accept(ElementId v, ElementId u, SetId s) {
  if (!oracle_->query(u, s)) return false;
  if (!exclude_size_two_) return true;
  return edge_set_has_third(EdgeId::canonical(v, u, s), validate_rng_);
}

bool ImplicitMultigraph::edge_set_has_third(const EdgeId& e, Rng& rng) {
  auto it = set_has_third_.find(e.set);
  if (it != set_has_third_.end()) return it->second;
  bool third = validate_edge_not_size_two(*oracle_, e, rng);
  set_has_third_.emplace(e.set, third);
  return third;
}

void ImplicitMultigraph::refill(ElementId v, Scan& sc) {
  sc.pending.clear();
  sc.pending_pos = 0;
  const std::size_t pairs = pair_count(sc);
  if (pairs == 0) {
    sc.all_windows = true;
    return;
  }
  std::size_t target = std::min(kMaxWindow, kFirstWindow << std::min<std::uint32_t>(2 * sc.refills, 16));
  ++sc.refills;
  const std::uint64_t lo = sc.window_lo;
  const std::uint64_t room = std::numeric_limits<std::uint64_t>::max() - lo;
  const double frac = static_cast<double>(target) / static_cast<double>(pairs);
  const double width = frac * 0x1.0p64;
  std::uint64_t hi;
  if (width >= static_cast<double>(room)) {
    hi = std::numeric_limits<std::uint64_t>::max();
    sc.all_windows = true;
  } else {
    hi = lo + std::max<std::uint64_t>(1, static_cast<std::uint64_t>(width));
  }

  for (SetId s : sc.sets)
    for (ElementId u : low_) {
      if (u == v) continue;
      std::uint64_t h = ranks_.hash(EdgeId::canonical(v, u, s));
      if (h >= lo && (h < hi || sc.all_windows)) sc.pending.push_back({h, u, s});
    }
  std::sort(sc.pending.begin(), sc.pending.end(), [v](const Pending& a, const Pending& b) {
    if (a.hash != b.hash) return a.hash < b.hash;
    return EdgeId::canonical(v, a.u, a.set) < EdgeId::canonical(v, b.u, b.set);
  });
  sc.window_lo = hi;
}

std::optional<RankKey> ImplicitMultigraph::edge_at(ElementId v, std::size_t i,
                                                   const RankKey& limit) {
  Scan& sc = materialize(v);
  while (sc.edges.size() <= i) {
    if (sc.pending_pos == sc.pending.size()) {
      if (sc.all_windows) {
        std::vector<Pending>().swap(sc.pending);
        sc.pending_pos = 0;
        return std::nullopt;
      }
      if (sc.window_lo > limit.hash) return std::nullopt;
      refill(v, sc);
      continue;
    }
    const Pending& p = sc.pending[sc.pending_pos];
    RankKey key{p.hash, EdgeId::canonical(v, p.u, p.set)};
    if (!(key < limit)) return std::nullopt;
    ++sc.pending_pos;
    if (accept(v, p.u, p.set)) sc.edges.push_back(key);
  }
  if (!(sc.edges[i] < limit)) return std::nullopt;
  return sc.edges[i];
}

std::optional<std::pair<ElementId, EdgeId>> ImplicitMultigraph::sample_random_neighbor(
    ElementId v, const std::unordered_set<EdgeId, EdgeIdHash>& exclusion, Rng& rng) {
  const auto& sets = sets_of(v);
  const std::uint64_t width = low_.size();
  LazyPermutation order(width * sets.size());
  while (!order.done()) {
    std::uint64_t p = order.next(rng);
    ElementId u = low_[p % width];
    SetId s = sets[p / width];
    if (u == v) continue;
    EdgeId e = EdgeId::canonical(v, u, s);
    if (exclusion.count(e)) continue;
    if (!oracle_->query(u, s)) continue;
    if (exclude_size_two_ && !edge_set_has_third(e, rng)) continue;
    return std::make_pair(u, e);
  }
  return std::nullopt;
}

std::size_t ImplicitMultigraph::touched_vertices() const {
  return static_cast<std::size_t>(std::count_if(
      scans_.begin(), scans_.end(), [](const auto& kv) { return kv.second.materialized; }));
}

bool validate_edge_not_size_two(MembershipSource& oracle, const EdgeId& e, Rng& rng) {
  const std::size_t k = oracle.universe_size();
  if (e.u >= k || e.v >= k || e.u == e.v) throw ContractViolation("bad edge for validation");
  const ElementId lo = std::min(e.u, e.v), hi = std::max(e.u, e.v);
  LazyPermutation order(k - 2);
  while (!order.done()) {
    auto c = static_cast<ElementId>(order.next(rng));
    // Map [0, k-2) onto U∖{lo, hi}.
    if (c >= lo) ++c;
    if (c >= hi) ++c;
    if (oracle.query(c, e.set)) return true;
  }
  return false;
}

}  // namespace sublin
