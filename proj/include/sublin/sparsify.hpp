#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sublin/oracle.hpp"

namespace sublin {

struct SetRemoval {
  SetId set = 0;
  std::size_t elements_removed = 0;  // |S ∩ Û| at removal time
  std::size_t universe_before = 0;   // |Û| at removal time
};

struct SetSparsifyResult {
  std::vector<SetId> kept_sets;          // F̂, family order
  std::vector<ElementId> kept_elements;  // Û, ascending
  std::size_t removed = 0;               // c
  std::vector<SetRemoval> removals;
  std::size_t sets_processed = 0;
  bool stopped_early = false;            // |Û| fell below 10 α ln n
};

struct ElementPartition {
  std::vector<ElementId> low;   // ascending
  std::vector<ElementId> high;  // ascending
  std::size_t r2 = 0;
  bool early_return = false;    // r2 < 20 ln n / ε
};

/// Set sparsification. Processes sets in family order; each removal queries
/// all of Û against the removed set. Phase label "sparsify_sets".
SetSparsifyResult sparsify_sets(MembershipSource& oracle, double alpha, std::uint64_t seed);

/// Element sparsification over (F̂, Û). Phase label "sparsify_elements".
ElementPartition sparsify_elements(MembershipSource& oracle, const std::vector<SetId>& kept_sets,
                                   const std::vector<ElementId>& kept_elements, double beta,
                                   double eps, std::uint64_t seed);

}  // namespace sublin
