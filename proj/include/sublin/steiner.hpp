#pragma once

// Steiner tree weight estimation under counted distance queries.
//
// Terminals are addressed by local index 0..k-1 (position in the sorted
// terminal list) and Steiner vertices by local index 0..n_s-1.
//
// Levels. w0 = max(smallest positive MST edge, ε·w(T*)/k). Level i ≥ 1 has
// elements = components of H_{i-1}, the terminal graph with every edge of
// weight < w0(1+ε)^{i-1}; these are read off the exact MST with union-find.
// Each component gets a net: terminals scanned in ascending index, kept when
// at distance ≥ ε(1+ε)^i·w0 from every kept one. A component is small when
// its net has at most `cap` members; only small components are elements.
// Steiner vertex v's set holds component C when d(v, r) < τ_i = 0.6(1+ε)^i·w0
// for some representative r of C. Sets covering exactly two components are
// ignored (they cannot beat the MST edge they would replace).
//
// Decision. With χ̃_i the level's estimate of |U_i| − SC(U_i, F_i≠2):
//   G = Σ_i χ̃_i · w0(1+ε)^{i-1}
// and the output is (1 − c'η)·w(T*) when G > cη·η·w(T*), else w(T*).
// The weighting charges each saved component merge at the lower end of the
// bucket whose MST edges it replaces.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sublin/oracle.hpp"
#include "sublin/random.hpp"

namespace sublin {

struct SteinerParams {
  double eps = 0.1;
  double eta = 0.05;
  double c_eta = 1.0;
  double c_eta_prime = 1.0;
  double c_M = 1.0;      // κ = M = c_M · n^(2/3)
  double c_R = 10.0;     // R = c_R · n^(1/3)
  double c_P = 10.0;     // P = c_P · n^(1/3)
  double c_case1 = 1.0;  // Case 1 when all nets together have ≤ c_case1 · M / ε members
  double tau_factor = 0.6;
  std::optional<double> kappa;
  std::optional<double> M;
  std::optional<double> R;
  std::optional<double> P;
  std::optional<std::size_t> cap;  // default ⌈ln(k+1)/ε⌉
  /// When the sampling-path conditions fail: false → use the dense branch,
  /// true → throw ConfigError (before any query).
  bool strict = false;
  std::uint64_t seed = 0;
};

enum class LevelClass { kDense, kCase1, kLight, kHeavy };
std::string to_string(LevelClass c);

struct LevelState {
  std::size_t level = 0;
  double merge_below = 0.0;  // components of MST edges with weight < merge_below
  double net_radius = 0.0;
  double tau = 0.0;
  std::vector<std::uint32_t> comp_of;               // terminal → component id
  std::vector<std::vector<std::uint32_t>> members;  // ascending terminal ids
  std::vector<std::vector<std::uint32_t>> nets;     // ascending terminal ids
  std::vector<std::int32_t> rep_of;                 // terminal → covering representative
  std::vector<char> is_rep;
  std::size_t total_reps = 0;
};

struct LevelReport {
  std::size_t level = 0;
  LevelClass cls = LevelClass::kLight;
  std::size_t components = 0;
  std::size_t small_components = 0;
  double u_estimate = 0.0;
  std::size_t u_high = 0;
  std::size_t u_low = 0;
  std::size_t t_high = 0;
  std::size_t w2_size = 0;
  double w2_gain = 0.0;
  double w1_mu = 0.0;
  double chi = 0.0;
  double weight = 0.0;  // w0(1+ε)^(i-1)
  std::uint64_t distance_queries = 0;

  nlohmann::json to_json() const;
};

struct SteinerReport {
  double estimate = 0.0;
  double mst_weight = 0.0;
  double gain = 0.0;       // G
  double threshold = 0.0;  // cη·η·w(T*)
  bool improved = false;
  std::string branch;      // "dense", "sparse" or "trivial"
  std::string fallback_reason;
  double w0 = 0.0;
  std::size_t n_pts = 0;
  std::size_t k = 0;
  double kappa = 0.0, M = 0.0, R = 0.0, P = 0.0;
  std::size_t cap = 0;
  std::uint64_t mst_queries = 0;
  std::vector<LevelReport> levels;
  SteinerParams params;
  LedgerSnapshot ledger;

  nlohmann::json to_json() const;
};

class SteinerEstimator {
 public:
  SteinerEstimator(DistanceSource& oracle, SteinerParams params);

  /// Prim over terminals (every terminal pair queried once, then cached),
  /// w0 and the level range. Idempotent.
  void prepare();

  double mst_weight() const { return mst_weight_; }
  double w0() const { return w0_; }
  /// Levels run 1..level_count().
  std::size_t level_count() const { return levels_; }
  std::size_t terminal_count() const { return k_; }
  std::size_t steiner_count() const { return steiner_.size(); }
  std::size_t cap() const { return cap_; }
  PointId terminal_point(std::size_t t) const { return terminals_[t]; }
  PointId steiner_point(std::size_t s) const { return steiner_[s]; }

  const LevelState& level(std::size_t i);

  /// A representative of u's component at level i (the one covering u).
  std::size_t find_representative(std::size_t i, std::size_t u);
  /// Net of u's component, or nullopt when it has more than `cap` members.
  std::optional<std::vector<std::uint32_t>> bfs_representatives(std::size_t i, std::size_t u,
                                                                std::size_t cap);

  LevelClass classify_level(std::size_t i, double* u_estimate = nullptr);
  /// Case 3 path: T-split, sequential W-split, W_2 union estimate and the
  /// matching estimate on W_1. Throws ConfigError if the sampling-path
  /// conditions do not hold.
  LevelReport solve_level_heavy(std::size_t i);
  /// Case 1 and dense path: query every (Steiner vertex, representative) pair.
  LevelReport solve_level_explicit(std::size_t i, LevelClass cls);

  SteinerReport estimate();

  /// Whether the sampling-path conditions hold; fills `why` otherwise.
  bool sampling_conditions_hold(std::string* why = nullptr) const;

  double terminal_distance(std::size_t a, std::size_t b) const { return tt_[a * k_ + b]; }
  double steiner_distance(std::size_t s, std::size_t t);

  /// Component membership of the level's set system.
  bool covers(const LevelState& st, std::size_t s, std::uint32_t comp);

 private:
  const std::vector<std::size_t>& high_sample();

  DistanceSource* oracle_;
  SteinerParams params_;
  std::vector<PointId> terminals_;
  std::vector<PointId> steiner_;
  std::size_t k_ = 0;
  std::size_t n_ = 0;
  double kappa_ = 0, M_ = 0, R_ = 0, P_ = 0;
  std::size_t cap_ = 0;

  bool prepared_ = false;
  std::vector<double> tt_;
  std::vector<double> st_;  // n_s × k, NaN until queried
  std::vector<std::pair<std::size_t, std::size_t>> mst_edges_;
  std::vector<double> mst_w_;
  double mst_weight_ = 0.0;
  double w0_ = 0.0;
  std::size_t levels_ = 0;
  std::uint64_t mst_queries_ = 0;
  std::vector<std::optional<LevelState>> level_cache_;
  std::optional<std::vector<std::size_t>> high_sample_;
  Rng rng_;
};

/// Convenience wrapper: SteinerEstimator(oracle, params).estimate().
SteinerReport estimate_steiner(DistanceSource& oracle, const SteinerParams& params);

}  // namespace sublin
