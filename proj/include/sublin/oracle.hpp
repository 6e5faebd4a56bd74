#pragma once

// Instance containers and the counted query layer. Estimators only ever see
// MembershipSource / DistanceSource; the ground-truth containers stay on the
// test and generator side.

#include <atomic>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sublin {

using ElementId = std::uint32_t;
using SetId = std::uint32_t;
using PointId = std::uint32_t;

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// Universe {0..k-1} and a family of sets, each stored sorted and unique.
class SetSystem {
 public:
  SetSystem() = default;
  /// Sorts every set; throws ContractViolation on an out-of-range element or
  /// a duplicate within one set.
  SetSystem(std::size_t universe_size, std::vector<std::vector<ElementId>> sets);

  std::size_t universe_size() const noexcept { return universe_size_; }
  std::size_t family_size() const noexcept { return sets_.size(); }
  std::span<const ElementId> set(SetId s) const { return sets_.at(s); }
  bool contains(SetId s, ElementId e) const;

  const std::vector<std::vector<ElementId>>& sets() const noexcept { return sets_; }

 private:
  std::size_t universe_size_ = 0;
  std::vector<std::vector<ElementId>> sets_;
};

/// Finite metric given either by point coordinates (Euclidean) or by an
/// explicit symmetric matrix, plus a terminal subset.
class MetricInstance {
 public:
  MetricInstance() = default;

  /// Euclidean metric on `coords` (row-major, n_pts x dim).
  static MetricInstance from_coords(std::size_t dim, std::vector<double> coords,
                                    std::vector<PointId> terminals);
  /// Explicit matrix (row-major, n_pts x n_pts). Checks symmetry, zero
  /// diagonal and nonnegativity.
  static MetricInstance from_matrix(std::size_t n_pts, std::vector<double> matrix,
                                    std::vector<PointId> terminals);

  std::size_t size() const noexcept { return n_pts_; }
  std::size_t dim() const noexcept { return dim_; }
  bool has_coords() const noexcept { return dim_ > 0; }
  std::span<const double> coords() const noexcept { return coords_; }
  std::span<const double> matrix() const noexcept { return matrix_; }
  std::span<const PointId> terminals() const noexcept { return terminals_; }
  bool is_terminal(PointId p) const { return is_terminal_.at(p) != 0; }

  double distance(PointId u, PointId v) const;

  /// Exhaustive O(n^3) triangle inequality check with relative slack `tol`.
  bool satisfies_triangle_inequality(double tol = 1e-9) const;

 private:
  void set_terminals(std::vector<PointId> terminals);

  std::size_t n_pts_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> matrix_;
  std::vector<PointId> terminals_;
  std::vector<char> is_terminal_;
};

// ---------------------------------------------------------------------------
// Query accounting
// ---------------------------------------------------------------------------

struct QueryCounts {
  std::uint64_t membership = 0;
  std::uint64_t distance = 0;

  friend bool operator==(const QueryCounts&, const QueryCounts&) = default;
};

struct LedgerSnapshot {
  QueryCounts total;
  std::map<std::string, QueryCounts> phases;
};

/// Per-category oracle call counters with optional phase attribution.
/// Every charge lands in exactly one phase ("unphased" when no scope is
/// open), so the phase counters always sum to the totals.
class QueryLedger {
  struct Counters {
    std::atomic<std::uint64_t> membership{0};
    std::atomic<std::uint64_t> distance{0};
  };

 public:
  QueryLedger();
  QueryLedger(const QueryLedger&) = delete;
  QueryLedger& operator=(const QueryLedger&) = delete;

  void charge_membership(std::uint64_t count = 1) noexcept;
  void charge_distance(std::uint64_t count = 1) noexcept;

  std::uint64_t membership_queries() const noexcept {
    return membership_.load(std::memory_order_relaxed);
  }
  std::uint64_t distance_queries() const noexcept {
    return distance_.load(std::memory_order_relaxed);
  }
  QueryCounts totals() const noexcept { return {membership_queries(), distance_queries()}; }

  LedgerSnapshot snapshot() const;

  class PhaseScope {
   public:
    PhaseScope(const PhaseScope&) = delete;
    PhaseScope& operator=(const PhaseScope&) = delete;
    ~PhaseScope() { ledger_->current_ = previous_; }

   private:
    friend class QueryLedger;
    PhaseScope(QueryLedger& ledger, Counters* previous) : ledger_(&ledger), previous_(previous) {}
    QueryLedger* ledger_;
    Counters* previous_;
  };

  /// Attributes subsequent charges to `label` until the scope closes.
  /// Scopes nest; the innermost one wins.
  [[nodiscard]] PhaseScope phase(const std::string& label);

 private:
  std::atomic<std::uint64_t> membership_{0};
  std::atomic<std::uint64_t> distance_{0};
  std::map<std::string, Counters> phases_;
  Counters* current_;
};

// ---------------------------------------------------------------------------
// Oracle interfaces
// ---------------------------------------------------------------------------

/// Counted membership access to a set system. The only read path available
/// to the estimators.
class MembershipSource {
 public:
  virtual ~MembershipSource() = default;
  virtual std::size_t universe_size() const = 0;
  virtual std::size_t family_size() const = 0;
  /// Is element `e` in set `s`? Charges one membership query.
  virtual bool query(ElementId e, SetId s) = 0;
  virtual QueryLedger& ledger() = 0;
};

class MembershipOracle final : public MembershipSource {
 public:
  explicit MembershipOracle(const SetSystem& system) : system_(&system) {}

  std::size_t universe_size() const override { return system_->universe_size(); }
  std::size_t family_size() const override { return system_->family_size(); }
  bool query(ElementId e, SetId s) override;
  QueryLedger& ledger() override { return ledger_; }

 private:
  const SetSystem* system_;
  QueryLedger ledger_;
};

/// Counted distance access to a metric. Point count and terminal set are
/// part of the input and freely readable.
class DistanceSource {
 public:
  virtual ~DistanceSource() = default;
  virtual std::size_t size() const = 0;
  virtual std::span<const PointId> terminals() const = 0;
  /// w(u, v); charges one distance query.
  virtual double query(PointId u, PointId v) = 0;
  virtual QueryLedger& ledger() = 0;
};

class DistanceOracle final : public DistanceSource {
 public:
  explicit DistanceOracle(const MetricInstance& metric) : metric_(&metric) {}

  std::size_t size() const override { return metric_->size(); }
  std::span<const PointId> terminals() const override { return metric_->terminals(); }
  double query(PointId u, PointId v) override;
  QueryLedger& ledger() override { return ledger_; }

 private:
  const MetricInstance* metric_;
  QueryLedger ledger_;
};

// ---------------------------------------------------------------------------
// Edges of the implicit multigraph and their lazy ranks
// ---------------------------------------------------------------------------

/// One parallel edge of H: elements u < v that both lie in set `set`.
struct EdgeId {
  ElementId u = 0;
  ElementId v = 0;
  SetId set = 0;

  static EdgeId canonical(ElementId a, ElementId b, SetId s) {
    return a < b ? EdgeId{a, b, s} : EdgeId{b, a, s};
  }
  bool is_canonical() const noexcept { return u < v; }
  ElementId other(ElementId x) const noexcept { return x == u ? v : u; }
  bool has_endpoint(ElementId x) const noexcept { return x == u || x == v; }

  friend auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

struct EdgeIdHash {
  std::size_t operator()(const EdgeId& e) const noexcept;
};

/// Total-order key: 64-bit rank hash, ties broken by the edge id.
struct RankKey {
  std::uint64_t hash = 0;
  EdgeId id;

  friend auto operator<=>(const RankKey&, const RankKey&) = default;
};

/// Keyed hash of (seed, u, v, set) standing in for a uniformly random edge
/// permutation: i.i.d. uniform ranks ordered lexicographically with the id.
class RankFunction {
 public:
  explicit RankFunction(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t hash(const EdgeId& e) const noexcept;
  RankKey key(const EdgeId& e) const noexcept { return {hash(e), e}; }
  /// Rank in [0, 1). Throws ContractViolation for a non-canonical id.
  double rank(const EdgeId& e) const;

 private:
  std::uint64_t seed_;
};

/// Free-function spellings of the oracle operations.
inline bool membership_query(MembershipSource& oracle, ElementId e, SetId s) {
  return oracle.query(e, s);
}
inline double distance_query(DistanceSource& oracle, PointId u, PointId v) {
  return oracle.query(u, v);
}
inline double edge_rank(const RankFunction& rf, const EdgeId& e) { return rf.rank(e); }

}  // namespace sublin
