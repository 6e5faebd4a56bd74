#include "sublin/setcover.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "sublin/errors.hpp"
#include "sublin/exact.hpp"
#include "sublin/sparsify.hpp"

namespace sublin {

namespace {

nlohmann::json ledger_json(const LedgerSnapshot& snap) {
  nlohmann::json phases = nlohmann::json::object();
  for (const auto& [label, q] : snap.phases)
    phases[label] = {{"membership", q.membership}, {"distance", q.distance}};
  return {{"membership", snap.total.membership},
          {"distance", snap.total.distance},
          {"phases", std::move(phases)}};
}

void check_params(const SetCoverParams& p) {
  if (!(p.eps > 0.0 && p.eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
  if (!(p.x > 0.0 && p.x < 1.0) || !(p.y > 0.0 && p.y < 1.0))
    throw ConfigError("exponents x, y must lie in (0, 1)");
  if (p.alpha && !(*p.alpha >= 1.0)) throw ConfigError("alpha must be >= 1");
  if (p.beta && !(*p.beta >= 1.0)) throw ConfigError("beta must be >= 1");
}

EstimateReport run(MembershipSource& base, const SetCoverParams& params) {
  check_params(params);
  SingletonPadding src(base);
  EstimateReport rep;
  rep.params = params;
  rep.k = src.universe_size();
  rep.n = src.family_size();
  rep.padded = src.padded();
  const std::size_t k = rep.k, n = rep.n;
  const double kd = static_cast<double>(k);

  if (k == 0) {
    rep.path = "empty";
    rep.ledger = src.ledger().snapshot();
    return rep;
  }

  if (params.allow_dense && kd <= std::pow(static_cast<double>(n), 2.0 / 3.0)) {
    rep.path = "dense";
    auto scope = src.ledger().phase("dense");
    std::vector<std::vector<ElementId>> sets(n);
    for (SetId s = 0; s < n; ++s)
      for (ElementId e = 0; e < k; ++e)
        if (src.query(e, s)) sets[s].push_back(e);
    // Any maximal matching M of H has (k − SC)/2 ≤ |M| ≤ k − SC.
    rep.mu = static_cast<double>(scan_maximal_matching(sets, k, params.exclude_size_two));
    rep.chi = std::clamp(rep.mu, 0.0, kd);
    rep.u_hat = rep.u_low = k;
    rep.ledger = src.ledger().snapshot();
    return rep;
  }

  rep.path = "sparsify";
  rep.alpha = params.alpha.value_or(default_alpha(n, params.x));
  rep.beta = params.beta.value_or(default_beta(k, n, params.y));

  auto sets = sparsify_sets(src, rep.alpha, derive_seed(params.seed, 1));
  rep.removed = sets.removed;
  rep.u_hat = sets.kept_elements.size();
  auto part = sparsify_elements(src, sets.kept_sets, sets.kept_elements, rep.beta, params.eps,
                                derive_seed(params.seed, 2));
  rep.u_low = part.low.size();
  rep.u_high = part.high.size();
  rep.r2 = part.r2;
  rep.element_early_return = part.early_return;
  rep.outside_low = k - rep.u_low;

  RgmmEstimate mu;
  {
    auto scope = src.ledger().phase("rgmm");
    ImplicitMultigraph g(src, std::move(sets.kept_sets), std::move(part.low),
                         params.exclude_size_two, derive_seed(params.seed, 3), params.access);
    mu = estimate_rgmm_size(g, params.eps, derive_seed(params.seed, 4));
    rep.touched_vertices = g.touched_vertices();
  }
  rep.mu = mu.mu;
  rep.rgmm_samples = mu.samples;
  rep.rgmm_matched = mu.matched;
  rep.chi = std::clamp(mu.mu + static_cast<double>(rep.outside_low) - params.eps * kd / 2.0, 0.0, kd);
  rep.ledger = src.ledger().snapshot();
  return rep;
}

// Forwards to an owned source and aborts once `stop` is raised.
class CancellableSource final : public MembershipSource {
 public:
  CancellableSource(std::unique_ptr<MembershipSource> inner, const std::atomic<bool>& stop)
      : inner_(std::move(inner)), stop_(&stop) {}
  std::size_t universe_size() const override { return inner_->universe_size(); }
  std::size_t family_size() const override { return inner_->family_size(); }
  bool query(ElementId e, SetId s) override {
    if (stop_->load(std::memory_order_relaxed)) throw Cancelled();
    return inner_->query(e, s);
  }
  QueryLedger& ledger() override { return inner_->ledger(); }

 private:
  std::unique_ptr<MembershipSource> inner_;
  const std::atomic<bool>* stop_;
};

}  // namespace

nlohmann::json EstimateReport::to_json() const {
  return {{"chi", chi},
          {"mu", mu},
          {"outside_low", outside_low},
          {"removed", removed},
          {"path", path},
          {"k", k},
          {"n", n},
          {"padded", padded},
          {"alpha", alpha},
          {"beta", beta},
          {"u_hat", u_hat},
          {"u_low", u_low},
          {"u_high", u_high},
          {"r2", r2},
          {"element_early_return", element_early_return},
          {"rgmm_samples", rgmm_samples},
          {"rgmm_matched", rgmm_matched},
          {"touched_vertices", touched_vertices},
          {"params",
           {{"eps", params.eps},
            {"x", params.x},
            {"y", params.y},
            {"exclude_size_two", params.exclude_size_two},
            {"seed", params.seed}}},
          {"queries", ledger_json(ledger)}};
}

SingletonPadding::SingletonPadding(MembershipSource& base)
    : base_(&base),
      n_(base.family_size() < base.universe_size() ? base.family_size() + base.universe_size()
                                                    : base.family_size()) {}

bool SingletonPadding::query(ElementId e, SetId s) {
  const std::size_t orig = base_->family_size();
  if (s < orig) return base_->query(e, s);
  if (s >= n_ || e >= universe_size()) throw ContractViolation("index out of range");
  base_->ledger().charge_membership();
  return e == s - orig;
}

double default_alpha(std::size_t n, double x) {
  return std::max(1.0, std::pow(static_cast<double>(n), x));
}

double default_beta(std::size_t k, std::size_t n, double y) {
  const double kd = static_cast<double>(std::max<std::size_t>(k, 1));
  const double nd = static_cast<double>(std::max<std::size_t>(n, 2));
  return std::max(1.0, 10.0 * std::max(kd / std::pow(nd, 1.0 - y), 1.0) * nd * std::log(nd) / kd);
}

EstimateReport estimate_thsc(MembershipSource& oracle, const SetCoverParams& params) {
  return run(oracle, params);
}

EstimateReport estimate_thsc_no_pairs(MembershipSource& oracle, SetCoverParams params) {
  params.exclude_size_two = true;
  return run(oracle, params);
}

RacingReport estimate_thsc_racing(const SourceFactory& make_source, const SetCoverParams& params,
                                  std::size_t instances) {
  if (instances == 0) throw ConfigError("racing needs at least one instance");
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::optional<EstimateReport> winner;
  std::size_t winner_index = 0;
  std::vector<std::unique_ptr<CancellableSource>> sources;
  for (std::size_t i = 0; i < instances; ++i)
    sources.push_back(std::make_unique<CancellableSource>(make_source(), stop));

  std::exception_ptr failure;
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < instances; ++i)
      threads.emplace_back([&, i] {
        SetCoverParams p = params;
        p.seed = derive_seed(params.seed, 0x9ace + i);
        try {
          EstimateReport r = run(*sources[i], p);
          std::lock_guard lock(mu);
          if (!winner) {
            winner = std::move(r);
            winner_index = i;
            stop.store(true);
          }
        } catch (const Cancelled&) {
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      });
  }
  if (!winner) {
    if (failure) std::rethrow_exception(failure);
    throw std::runtime_error("no racing instance finished");
  }
  RacingReport out;
  out.winner = std::move(*winner);
  out.winner_index = winner_index;
  out.instances = instances;
  for (auto& s : sources) out.total_membership_queries += s->ledger().membership_queries();
  return out;
}

}  // namespace sublin
