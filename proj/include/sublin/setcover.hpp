#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "sublin/oracle.hpp"
#include "sublin/rgmm.hpp"

namespace sublin {

struct SetCoverParams {
  double eps = 0.1;
  double x = 1.0 / 3.0;
  double y = 1.0 / 3.0;
  std::optional<double> alpha;  // overrides n^x
  std::optional<double> beta;   // overrides the formula from (k, n, y)
  bool exclude_size_two = false;
  bool allow_dense = true;      // take the query-everything path when k <= n^(2/3)
  NeighborAccess access = NeighborAccess::kRankOrdered;
  std::uint64_t seed = 0;
};

struct EstimateReport {
  double chi = 0.0;             // χ̃, clamped to [0, k]
  double mu = 0.0;              // μ̃ (Alg. 1 path) or |M| (dense path)
  std::size_t outside_low = 0;  // |U ∖ U_low|
  std::size_t removed = 0;      // c
  std::string path;             // "sparsify" or "dense"
  std::size_t k = 0;
  std::size_t n = 0;            // family size after padding
  bool padded = false;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t u_hat = 0;
  std::size_t u_low = 0;
  std::size_t u_high = 0;
  std::size_t r2 = 0;
  bool element_early_return = false;
  std::size_t rgmm_samples = 0;
  std::size_t rgmm_matched = 0;
  std::size_t touched_vertices = 0;
  SetCoverParams params;
  LedgerSnapshot ledger;

  nlohmann::json to_json() const;
};

/// Adds the k singletons {e} after the original family when n < k. Padded
/// sets answer from their definition and charge one query like any set.
class SingletonPadding final : public MembershipSource {
 public:
  explicit SingletonPadding(MembershipSource& base);

  std::size_t universe_size() const override { return base_->universe_size(); }
  std::size_t family_size() const override { return n_; }
  bool query(ElementId e, SetId s) override;
  QueryLedger& ledger() override { return base_->ledger(); }
  bool padded() const { return n_ != base_->family_size(); }

 private:
  MembershipSource* base_;
  std::size_t n_;
};

/// Default α = n^x.
double default_alpha(std::size_t n, double x);
/// Default β = 10 · max(k / n^(1−y), 1) · n ln n / k.
double default_beta(std::size_t k, std::size_t n, double y);

/// (1/2, εk) estimate of χ = k − SC(U, F).
EstimateReport estimate_thsc(MembershipSource& oracle, const SetCoverParams& params);

/// Same guarantee for χ = k − SC(U, F≠2); forces exclude_size_two.
EstimateReport estimate_thsc_no_pairs(MembershipSource& oracle, SetCoverParams params);

/// Thrown out of a racing instance's oracle once another instance finished.
class Cancelled : public std::runtime_error {
 public:
  Cancelled() : std::runtime_error("estimate cancelled") {}
};

using SourceFactory = std::function<std::unique_ptr<MembershipSource>()>;

struct RacingReport {
  EstimateReport winner;
  std::size_t winner_index = 0;
  std::size_t instances = 0;
  std::uint64_t total_membership_queries = 0;  // summed over all instances
};

/// Runs `instances` independently seeded estimates concurrently, each on its
/// own source from `make_source`, and keeps the first to finish. The rest are
/// interrupted at their next oracle call.
RacingReport estimate_thsc_racing(const SourceFactory& make_source, const SetCoverParams& params,
                                  std::size_t instances);

}  // namespace sublin
