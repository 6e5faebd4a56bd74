#include "sublin/steiner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sublin/errors.hpp"
#include "sublin/exact.hpp"
#include "sublin/rgmm.hpp"
#include "sublin/union_find.hpp"

namespace sublin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t ceil_size(double x) { return static_cast<std::size_t>(std::ceil(std::max(0.0, x))); }

// Level set system as a membership source: elements are U_low components,
// sets are W_1 Steiner vertices. Distance queries land on the distance
// oracle's ledger; this ledger counts membership evaluations only.
class LevelMembership final : public MembershipSource {
 public:
  LevelMembership(SteinerEstimator& est, const LevelState& st, const std::vector<std::uint32_t>& comps,
                  const std::vector<std::size_t>& sets)
      : est_(&est), st_(&st), comps_(&comps), sets_(&sets) {}

  std::size_t universe_size() const override { return comps_->size(); }
  std::size_t family_size() const override { return sets_->size(); }
  bool query(ElementId e, SetId s) override {
    if (e >= comps_->size() || s >= sets_->size()) throw ContractViolation("index out of range");
    ledger_.charge_membership();
    return est_->covers(*st_, (*sets_)[s], (*comps_)[e]);
  }
  QueryLedger& ledger() override { return ledger_; }

 private:
  SteinerEstimator* est_;
  const LevelState* st_;
  const std::vector<std::uint32_t>* comps_;
  const std::vector<std::size_t>* sets_;
  QueryLedger ledger_;
};

}  // namespace

std::string to_string(LevelClass c) {
  switch (c) {
    case LevelClass::kDense: return "dense";
    case LevelClass::kCase1: return "case1";
    case LevelClass::kLight: return "light";
    case LevelClass::kHeavy: return "heavy";
  }
  return "unknown";
}

nlohmann::json LevelReport::to_json() const {
  return {{"level", level},
          {"class", to_string(cls)},
          {"components", components},
          {"small_components", small_components},
          {"u_estimate", u_estimate},
          {"u_high", u_high},
          {"u_low", u_low},
          {"t_high", t_high},
          {"w2_size", w2_size},
          {"w2_gain", w2_gain},
          {"w1_mu", w1_mu},
          {"chi", chi},
          {"weight", weight},
          {"distance_queries", distance_queries}};
}

nlohmann::json SteinerReport::to_json() const {
  nlohmann::json lv = nlohmann::json::array();
  for (const auto& l : levels) lv.push_back(l.to_json());
  nlohmann::json phases = nlohmann::json::object();
  for (const auto& [label, q] : ledger.phases) phases[label] = q.distance;
  return {{"estimate", estimate},
          {"mst_weight", mst_weight},
          {"gain", gain},
          {"threshold", threshold},
          {"improved", improved},
          {"branch", branch},
          {"fallback_reason", fallback_reason},
          {"w0", w0},
          {"n_pts", n_pts},
          {"k", k},
          {"kappa", kappa},
          {"M", M},
          {"R", R},
          {"P", P},
          {"cap", cap},
          {"mst_queries", mst_queries},
          {"params",
           {{"eps", params.eps},
            {"eta", params.eta},
            {"c_eta", params.c_eta},
            {"c_eta_prime", params.c_eta_prime},
            {"c_M", params.c_M},
            {"c_R", params.c_R},
            {"c_P", params.c_P},
            {"seed", params.seed}}},
          {"queries", {{"distance", ledger.total.distance}, {"phases", phases}}},
          {"levels", std::move(lv)}};
}

SteinerEstimator::SteinerEstimator(DistanceSource& oracle, SteinerParams params)
    : oracle_(&oracle), params_(params), rng_(derive_seed(params.seed, 0x57e1)) {
  if (!(params_.eps > 0.0 && params_.eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
  if (!(params_.eta > 0.0 && params_.eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
  if (!(params_.c_eta_prime * params_.eta < 1.0)) throw ConfigError("c'_eta * eta must be < 1");
  auto t = oracle.terminals();
  terminals_.assign(t.begin(), t.end());
  std::sort(terminals_.begin(), terminals_.end());
  n_ = oracle.size();
  k_ = terminals_.size();
  std::vector<char> is_t(n_, 0);
  for (PointId p : terminals_) is_t.at(p) = 1;
  for (PointId p = 0; p < n_; ++p)
    if (!is_t[p]) steiner_.push_back(p);

  const double nd = static_cast<double>(std::max<std::size_t>(n_, 2));
  kappa_ = params_.kappa.value_or(params_.c_M * std::pow(nd, 2.0 / 3.0));
  M_ = params_.M.value_or(params_.c_M * std::pow(nd, 2.0 / 3.0));
  R_ = params_.R.value_or(params_.c_R * std::cbrt(nd));
  P_ = params_.P.value_or(params_.c_P * std::cbrt(nd));
  if (!(M_ > 0 && R_ > 0 && P_ > 0)) throw ConfigError("M, R, P must be positive");
  cap_ = params_.cap.value_or(
      std::max<std::size_t>(1, ceil_size(std::log(static_cast<double>(k_) + 1.0) / params_.eps)));
}

bool SteinerEstimator::sampling_conditions_hold(std::string* why) const {
  const double kd = static_cast<double>(k_), nd = static_cast<double>(std::max<std::size_t>(n_, 2));
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (!(kd > M_)) return fail("k <= M");
  if (!(kd > P_)) return fail("k <= P");
  if (!(nd / R_ <= params_.eps * M_ * std::log(nd))) return fail("n/R > eps*M*ln n");
  if (!(kd / P_ <= params_.eps * M_)) return fail("k/P > eps*M");
  return true;
}

void SteinerEstimator::prepare() {
  if (prepared_) return;
  prepared_ = true;
  tt_.assign(k_ * k_, kNaN);
  for (std::size_t a = 0; a < k_; ++a) tt_[a * k_ + a] = 0.0;
  const std::uint64_t before = oracle_->ledger().distance_queries();
  {
    auto scope = oracle_->ledger().phase("mst");
    auto mst = prim_mst(k_, [&](std::size_t a, std::size_t b) {
      double& slot = tt_[a * k_ + b];
      if (std::isnan(slot)) {
        slot = oracle_->query(terminals_[a], terminals_[b]);
        tt_[b * k_ + a] = slot;
      }
      return slot;
    });
    mst_edges_ = std::move(mst.edges);
    mst_w_ = std::move(mst.edge_weights);
    mst_weight_ = mst.weight;
  }
  mst_queries_ = oracle_->ledger().distance_queries() - before;

  double min_pos = std::numeric_limits<double>::infinity(), max_w = 0.0;
  for (double w : mst_w_) {
    if (w > 0.0) min_pos = std::min(min_pos, w);
    max_w = std::max(max_w, w);
  }
  levels_ = 0;
  if (mst_weight_ > 0.0) {
    w0_ = std::max(min_pos, params_.eps * mst_weight_ / static_cast<double>(k_));
    // Level i is non-trivial while some MST edge reaches w0(1+ε)^(i-1).
    double lower = w0_;
    while (lower <= max_w) {
      ++levels_;
      lower *= 1.0 + params_.eps;
    }
  }
  level_cache_.assign(levels_ + 1, std::nullopt);
}

const LevelState& SteinerEstimator::level(std::size_t i) {
  prepare();
  if (i == 0 || i > levels_) throw ContractViolation("level index out of range");
  auto& slot = level_cache_[i];
  if (slot) return *slot;
  LevelState st;
  st.level = i;
  const double grow = 1.0 + params_.eps;
  st.merge_below = w0_ * std::pow(grow, static_cast<double>(i) - 1.0);
  st.net_radius = params_.eps * w0_ * std::pow(grow, static_cast<double>(i));
  st.tau = params_.tau_factor * w0_ * std::pow(grow, static_cast<double>(i));

  UnionFind uf(k_);
  for (std::size_t e = 0; e < mst_edges_.size(); ++e)
    if (mst_w_[e] < st.merge_below) uf.unite(mst_edges_[e].first, mst_edges_[e].second);
  std::vector<std::int64_t> id_of_root(k_, -1);
  st.comp_of.assign(k_, 0);
  for (std::size_t t = 0; t < k_; ++t) {
    std::size_t r = uf.find(t);
    if (id_of_root[r] < 0) {
      id_of_root[r] = static_cast<std::int64_t>(st.members.size());
      st.members.emplace_back();
    }
    auto c = static_cast<std::uint32_t>(id_of_root[r]);
    st.comp_of[t] = c;
    st.members[c].push_back(static_cast<std::uint32_t>(t));
  }

  st.nets.resize(st.members.size());
  st.rep_of.assign(k_, -1);
  st.is_rep.assign(k_, 0);
  for (std::size_t c = 0; c < st.members.size(); ++c) {
    auto& net = st.nets[c];
    for (std::uint32_t t : st.members[c]) {
      std::int32_t cover = -1;
      for (std::uint32_t r : net)
        if (terminal_distance(t, r) < st.net_radius) {
          cover = static_cast<std::int32_t>(r);
          break;
        }
      if (cover < 0) {
        net.push_back(t);
        st.is_rep[t] = 1;
        cover = static_cast<std::int32_t>(t);
      }
      st.rep_of[t] = cover;
    }
    st.total_reps += net.size();
  }
  slot = std::move(st);
  return *slot;
}

std::size_t SteinerEstimator::find_representative(std::size_t i, std::size_t u) {
  const auto& st = level(i);
  return static_cast<std::size_t>(st.rep_of.at(u));
}

std::optional<std::vector<std::uint32_t>> SteinerEstimator::bfs_representatives(std::size_t i,
                                                                               std::size_t u,
                                                                               std::size_t cap) {
  const auto& st = level(i);
  const auto& net = st.nets[st.comp_of.at(u)];
  if (net.size() > cap) return std::nullopt;
  return net;
}

double SteinerEstimator::steiner_distance(std::size_t s, std::size_t t) {
  if (st_.empty()) st_.assign(steiner_.size() * k_, kNaN);
  double& slot = st_[s * k_ + t];
  if (std::isnan(slot)) slot = oracle_->query(steiner_[s], terminals_[t]);
  return slot;
}

bool SteinerEstimator::covers(const LevelState& st, std::size_t s, std::uint32_t comp) {
  for (std::uint32_t r : st.nets[comp])
    if (steiner_distance(s, r) < st.tau) return true;
  return false;
}

LevelClass SteinerEstimator::classify_level(std::size_t i, double* u_estimate) {
  const auto& st = level(i);
  if (static_cast<double>(st.total_reps) <= params_.c_case1 * M_ / params_.eps) {
    if (u_estimate) {
      std::size_t small = 0;
      for (const auto& net : st.nets) small += net.size() <= cap_ ? 1 : 0;
      *u_estimate = static_cast<double>(small);
    }
    return LevelClass::kCase1;
  }
  const double kd = static_cast<double>(k_);
  const std::size_t draws = std::max<std::size_t>(1, ceil_size(kd / M_ * std::log(kd)));
  double acc = 0.0;
  for (std::size_t j = 0; j < draws; ++j) {
    std::size_t t = rng_.index(k_);
    std::uint32_t c = st.comp_of[t];
    if (st.nets[c].size() <= cap_) acc += 1.0 / static_cast<double>(st.members[c].size());
  }
  const double est = kd * acc / static_cast<double>(draws);
  if (u_estimate) *u_estimate = est;
  return est < M_ ? LevelClass::kLight : LevelClass::kHeavy;
}

const std::vector<std::size_t>& SteinerEstimator::high_sample() {
  if (!high_sample_) {
    std::vector<std::size_t> sample;
    if (!steiner_.empty()) {
      const double nd = static_cast<double>(std::max<std::size_t>(n_, 2));
      std::size_t draws =
          ceil_size(static_cast<double>(steiner_.size()) * std::log(nd) / R_);
      Rng rng(derive_seed(params_.seed, 0x41a4));
      for (std::size_t j = 0; j < draws; ++j) sample.push_back(rng.index(steiner_.size()));
    }
    high_sample_ = std::move(sample);
  }
  return *high_sample_;
}

LevelReport SteinerEstimator::solve_level_explicit(std::size_t i, LevelClass cls) {
  const auto& st = level(i);
  LevelReport rep;
  rep.level = i;
  rep.cls = cls;
  rep.components = st.members.size();
  rep.weight = w0_ * std::pow(1.0 + params_.eps, static_cast<double>(i) - 1.0);
  std::vector<std::uint32_t> small;
  for (std::uint32_t c = 0; c < st.nets.size(); ++c)
    if (st.nets[c].size() <= cap_) small.push_back(c);
  rep.small_components = small.size();
  rep.u_estimate = static_cast<double>(small.size());
  std::vector<std::vector<ElementId>> sets(steiner_.size());
  for (std::size_t s = 0; s < steiner_.size(); ++s)
    for (std::size_t e = 0; e < small.size(); ++e)
      if (covers(st, s, small[e])) sets[s].push_back(static_cast<ElementId>(e));
  rep.chi = static_cast<double>(scan_maximal_matching(sets, small.size(), true));
  return rep;
}

LevelReport SteinerEstimator::solve_level_heavy(std::size_t i) {
  std::string why;
  if (!sampling_conditions_hold(&why)) throw ConfigError("heavy level path needs " + why);
  const auto& st = level(i);
  LevelReport rep;
  rep.level = i;
  rep.cls = LevelClass::kHeavy;
  rep.components = st.members.size();
  rep.weight = w0_ * std::pow(1.0 + params_.eps, static_cast<double>(i) - 1.0);
  const double kd = static_cast<double>(k_);
  const double nd = static_cast<double>(std::max<std::size_t>(n_, 2));
  const double log_n = std::log(nd), log_k = std::log(std::max(kd, 2.0));
  Rng rng(derive_seed(params_.seed, 0x1e7e1000 + i));

  // (a) T_high: terminals near many Steiner vertices of the shared sample.
  const auto& sample = high_sample();
  std::vector<char> t_high(k_, 0);
  for (std::size_t t = 0; t < k_; ++t) {
    std::size_t hits = 0;
    for (std::size_t s : sample)
      if (steiner_distance(s, t) < st.tau) ++hits;
    if (static_cast<double>(hits) >= log_n) {
      t_high[t] = 1;
      ++rep.t_high;
    }
  }
  std::vector<std::uint32_t> low_comps;
  std::vector<std::int64_t> low_index(st.members.size(), -1);
  std::size_t small = 0;
  for (std::uint32_t c = 0; c < st.members.size(); ++c) {
    if (st.nets[c].size() > cap_) continue;
    ++small;
    bool high = std::any_of(st.members[c].begin(), st.members[c].end(),
                            [&](std::uint32_t t) { return t_high[t] != 0; });
    if (high) {
      ++rep.u_high;
    } else {
      low_index[c] = static_cast<std::int64_t>(low_comps.size());
      low_comps.push_back(c);
    }
  }
  rep.small_components = small;
  rep.u_estimate = static_cast<double>(small);
  rep.u_low = low_comps.size();

  // (b) Sequential W-split against the shrinking T_low (representatives of
  // U_low components).
  std::vector<std::uint32_t> t_low;
  for (std::uint32_t c : low_comps) t_low.insert(t_low.end(), st.nets[c].begin(), st.nets[c].end());
  std::vector<std::size_t> w2, w1;
  std::vector<char> in_w2(steiner_.size(), 0);
  for (std::size_t s = 0; s < steiner_.size(); ++s) {
    if (static_cast<double>(t_low.size()) < P_) break;
    std::size_t draws = ceil_size(static_cast<double>(t_low.size()) * log_k / P_);
    std::size_t hits = 0;
    for (std::size_t j = 0; j < draws; ++j)
      if (steiner_distance(s, t_low[rng.index(t_low.size())]) < st.tau) ++hits;
    if (static_cast<double>(hits) < log_k) continue;
    in_w2[s] = 1;
    w2.push_back(s);
    std::vector<std::uint32_t> keep;
    keep.reserve(t_low.size());
    for (std::uint32_t t : t_low)
      if (!(steiner_distance(s, t) < st.tau)) keep.push_back(t);
    t_low.swap(keep);
  }
  for (std::size_t s = 0; s < steiner_.size(); ++s)
    if (!in_w2[s]) w1.push_back(s);
  rep.w2_size = w2.size();

  // Uniform U_low component: uniform terminal, kept if it is a representative
  // of a U_low component, then accepted with probability 1/z.
  auto draw_low = [&](Rng& r, bool& accepted) -> std::uint32_t {
    std::size_t t = r.index(k_);
    std::uint32_t c = st.comp_of[t];
    accepted = false;
    if (low_index[c] < 0 || !st.is_rep[t]) return 0;
    accepted = r.uniform() < 1.0 / static_cast<double>(st.nets[c].size());
    return static_cast<std::uint32_t>(low_index[c]);
  };

  // (c) |∪W_2| by sampling.
  if (!w2.empty() && !low_comps.empty()) {
    const std::size_t attempts =
        ceil_size(kd / M_ * log_k / (params_.eps * params_.eps));
    std::size_t covered = 0;
    for (std::size_t j = 0; j < attempts; ++j) {
      bool ok = false;
      std::uint32_t e = draw_low(rng, ok);
      if (!ok) continue;
      for (std::size_t s : w2)
        if (covers(st, s, low_comps[e])) {
          ++covered;
          break;
        }
    }
    const double union_est = kd * static_cast<double>(covered) / static_cast<double>(attempts);
    rep.w2_gain = union_est - static_cast<double>(w2.size());
  }

  // (d) Matching estimate on (U_low, W_1), sets covering two components dropped.
  if (!w1.empty() && low_comps.size() >= 2) {
    LevelMembership src(*this, st, low_comps, w1);
    std::vector<SetId> all_sets(w1.size());
    std::iota(all_sets.begin(), all_sets.end(), SetId{0});
    std::vector<ElementId> all_elems(low_comps.size());
    std::iota(all_elems.begin(), all_elems.end(), ElementId{0});
    ImplicitMultigraph g(src, std::move(all_sets), std::move(all_elems), true,
                         derive_seed(params_.seed, 0x3a7c000 + i));
    auto mu = estimate_rgmm_size_with(g, params_.eps, derive_seed(params_.seed, 0x3a7d000 + i),
                                      low_comps.size(), [&](Rng& r) {
                                        for (;;) {
                                          bool ok = false;
                                          std::uint32_t e = draw_low(r, ok);
                                          if (ok) return static_cast<ElementId>(e);
                                        }
                                      });
    rep.w1_mu = mu.mu;
  }

  const double u_i = static_cast<double>(small);
  rep.chi = std::clamp(std::max(rep.w1_mu, rep.w2_gain) + static_cast<double>(rep.u_high) -
                           params_.eps * u_i / 2.0,
                       0.0, u_i);
  return rep;
}

SteinerReport SteinerEstimator::estimate() {
  SteinerReport rep;
  rep.params = params_;
  rep.n_pts = n_;
  rep.k = k_;
  rep.kappa = kappa_;
  rep.M = M_;
  rep.R = R_;
  rep.P = P_;
  rep.cap = cap_;

  bool dense = static_cast<double>(k_) <= kappa_;
  if (!dense) {
    std::string why;
    if (!sampling_conditions_hold(&why)) {
      if (params_.strict) throw ConfigError("sampling path needs " + why);
      dense = true;
      rep.fallback_reason = why;
    }
  }

  prepare();
  rep.mst_weight = mst_weight_;
  rep.mst_queries = mst_queries_;
  rep.w0 = w0_;
  if (mst_weight_ <= 0.0 || steiner_.empty()) {
    rep.branch = "trivial";
    rep.estimate = mst_weight_;
    rep.ledger = oracle_->ledger().snapshot();
    return rep;
  }
  rep.branch = dense ? "dense" : "sparse";

  if (dense) {
    auto scope = oracle_->ledger().phase("dense");
    for (std::size_t s = 0; s < steiner_.size(); ++s)
      for (std::size_t t = 0; t < k_; ++t) steiner_distance(s, t);
  }

  for (std::size_t i = 1; i <= levels_; ++i) {
    const std::uint64_t before = oracle_->ledger().distance_queries();
    LevelReport lr;
    auto scope = oracle_->ledger().phase("levels");
    if (dense) {
      lr = solve_level_explicit(i, LevelClass::kDense);
    } else {
      double u_est = 0.0;
      LevelClass cls = classify_level(i, &u_est);
      if (cls == LevelClass::kCase1) {
        lr = solve_level_explicit(i, cls);
      } else if (cls == LevelClass::kHeavy) {
        lr = solve_level_heavy(i);
      } else {
        lr.level = i;
        lr.cls = cls;
        lr.components = level(i).members.size();
        lr.weight = w0_ * std::pow(1.0 + params_.eps, static_cast<double>(i) - 1.0);
      }
      lr.u_estimate = u_est;
    }
    lr.distance_queries = oracle_->ledger().distance_queries() - before;
    rep.gain += lr.chi * lr.weight;
    rep.levels.push_back(lr);
  }

  rep.threshold = params_.c_eta * params_.eta * mst_weight_;
  rep.improved = rep.gain > rep.threshold;
  rep.estimate = rep.improved ? (1.0 - params_.c_eta_prime * params_.eta) * mst_weight_ : mst_weight_;
  rep.ledger = oracle_->ledger().snapshot();
  return rep;
}

SteinerReport estimate_steiner(DistanceSource& oracle, const SteinerParams& params) {
  SteinerEstimator est(oracle, params);
  return est.estimate();
}

}  // namespace sublin
