#include "sublin/sparsify.hpp"

#include <algorithm>
#include <cmath>

#include "sublin/errors.hpp"
#include "sublin/random.hpp"

namespace sublin {

namespace {

// Û with O(1) uniform sampling and O(1) removal.
class IndexedSubset {
 public:
  explicit IndexedSubset(std::size_t k) : items_(k), pos_(k) {
    for (std::size_t i = 0; i < k; ++i) {
      items_[i] = static_cast<ElementId>(i);
      pos_[i] = i;
    }
  }
  std::size_t size() const { return items_.size(); }
  ElementId at(std::size_t i) const { return items_[i]; }
  const std::vector<ElementId>& items() const { return items_; }
  void erase(ElementId e) {
    std::size_t p = pos_[e];
    ElementId last = items_.back();
    items_[p] = last;
    pos_[last] = p;
    items_.pop_back();
  }

 private:
  std::vector<ElementId> items_;
  std::vector<std::size_t> pos_;
};

}  // namespace

SetSparsifyResult sparsify_sets(MembershipSource& oracle, double alpha, std::uint64_t seed) {
  if (!(alpha >= 1.0)) throw ConfigError("sparsify_sets needs alpha >= 1");
  auto scope = oracle.ledger().phase("sparsify_sets");
  const std::size_t n = oracle.family_size();
  const std::size_t k = oracle.universe_size();
  const double log_n = n > 1 ? std::log(static_cast<double>(n)) : 0.0;
  const double stop_below = 10.0 * alpha * log_n;
  const double hit_threshold = 10.0 * log_n;

  Rng rng(derive_seed(seed, 0x5e75));
  IndexedSubset universe(k);
  SetSparsifyResult out;
  std::vector<char> removed(n, 0);

  for (SetId s = 0; s < n; ++s) {
    if (static_cast<double>(universe.size()) < stop_below) {
      out.stopped_early = true;
      break;
    }
    ++out.sets_processed;
    auto r1 = static_cast<std::size_t>(std::ceil(static_cast<double>(universe.size()) / alpha));
    std::size_t hits = 0;
    for (std::size_t j = 0; j < r1; ++j)
      if (oracle.query(universe.at(rng.index(universe.size())), s)) ++hits;
    if (static_cast<double>(hits) < hit_threshold) continue;

    removed[s] = 1;
    ++out.removed;
    SetRemoval rec{s, 0, universe.size()};
    std::vector<ElementId> members;
    for (ElementId e : universe.items())
      if (oracle.query(e, s)) members.push_back(e);
    for (ElementId e : members) universe.erase(e);
    rec.elements_removed = members.size();
    out.removals.push_back(rec);
  }

  for (SetId s = 0; s < n; ++s)
    if (!removed[s]) out.kept_sets.push_back(s);
  out.kept_elements = universe.items();
  std::sort(out.kept_elements.begin(), out.kept_elements.end());
  return out;
}

ElementPartition sparsify_elements(MembershipSource& oracle, const std::vector<SetId>& kept_sets,
                                   const std::vector<ElementId>& kept_elements, double beta,
                                   double eps, std::uint64_t seed) {
  if (!(beta >= 1.0)) throw ConfigError("sparsify_elements needs beta >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("sparsify_elements needs 0 < eps < 1");
  auto scope = oracle.ledger().phase("sparsify_elements");
  const std::size_t n = oracle.family_size();
  const double log_n = n > 1 ? std::log(static_cast<double>(n)) : 0.0;
  const double threshold = 20.0 * log_n / eps;

  ElementPartition out;
  out.r2 = static_cast<std::size_t>(std::ceil(static_cast<double>(kept_elements.size()) / beta));
  if (static_cast<double>(out.r2) < threshold || kept_sets.empty()) {
    out.early_return = static_cast<double>(out.r2) < threshold;
    out.low = kept_elements;
    std::sort(out.low.begin(), out.low.end());
    return out;
  }

  Rng rng(derive_seed(seed, 0xe1e5));
  std::vector<std::size_t> appearances(kept_elements.size(), 0);
  for (std::size_t j = 0; j < out.r2; ++j) {
    SetId s = kept_sets[rng.index(kept_sets.size())];
    for (std::size_t i = 0; i < kept_elements.size(); ++i)
      if (oracle.query(kept_elements[i], s)) ++appearances[i];
  }
  for (std::size_t i = 0; i < kept_elements.size(); ++i)
    (static_cast<double>(appearances[i]) <= threshold ? out.low : out.high)
        .push_back(kept_elements[i]);
  std::sort(out.low.begin(), out.low.end());
  std::sort(out.high.begin(), out.high.end());
  return out;
}

}  // namespace sublin
