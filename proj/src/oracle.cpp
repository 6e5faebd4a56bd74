#include "sublin/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sublin/errors.hpp"
#include "sublin/random.hpp"

namespace sublin {

SetSystem::SetSystem(std::size_t universe_size, std::vector<std::vector<ElementId>> sets)
    : universe_size_(universe_size), sets_(std::move(sets)) {
  for (std::size_t s = 0; s < sets_.size(); ++s) {
    auto& members = sets_[s];
    std::sort(members.begin(), members.end());
    if (std::adjacent_find(members.begin(), members.end()) != members.end())
      throw ContractViolation("set " + std::to_string(s) + " has a duplicate element");
    if (!members.empty() && members.back() >= universe_size_)
      throw ContractViolation("set " + std::to_string(s) + " has an element outside the universe");
  }
}

bool SetSystem::contains(SetId s, ElementId e) const {
  if (s >= sets_.size()) throw ContractViolation("set index out of range");
  if (e >= universe_size_) throw ContractViolation("element index out of range");
  const auto& members = sets_[s];
  return std::binary_search(members.begin(), members.end(), e);
}

MetricInstance MetricInstance::from_coords(std::size_t dim, std::vector<double> coords,
                                           std::vector<PointId> terminals) {
  if (dim == 0) throw ContractViolation("coordinate dimension must be positive");
  if (coords.size() % dim != 0) throw ContractViolation("coordinate array is not n x dim");
  MetricInstance m;
  m.dim_ = dim;
  m.n_pts_ = coords.size() / dim;
  for (double c : coords)
    if (!std::isfinite(c)) throw ContractViolation("non-finite coordinate");
  m.coords_ = std::move(coords);
  m.set_terminals(std::move(terminals));
  return m;
}

MetricInstance MetricInstance::from_matrix(std::size_t n_pts, std::vector<double> matrix,
                                           std::vector<PointId> terminals) {
  if (matrix.size() != n_pts * n_pts) throw ContractViolation("distance matrix is not n x n");
  for (std::size_t i = 0; i < n_pts; ++i) {
    if (matrix[i * n_pts + i] != 0.0) throw ContractViolation("nonzero diagonal entry");
    for (std::size_t j = 0; j < n_pts; ++j) {
      double w = matrix[i * n_pts + j];
      if (!std::isfinite(w) || w < 0.0) throw ContractViolation("negative or non-finite distance");
      if (w != matrix[j * n_pts + i]) throw ContractViolation("distance matrix is not symmetric");
    }
  }
  MetricInstance m;
  m.n_pts_ = n_pts;
  m.matrix_ = std::move(matrix);
  m.set_terminals(std::move(terminals));
  return m;
}

void MetricInstance::set_terminals(std::vector<PointId> terminals) {
  std::sort(terminals.begin(), terminals.end());
  terminals.erase(std::unique(terminals.begin(), terminals.end()), terminals.end());
  if (!terminals.empty() && terminals.back() >= n_pts_)
    throw ContractViolation("terminal index out of range");
  is_terminal_.assign(n_pts_, 0);
  for (PointId t : terminals) is_terminal_[t] = 1;
  terminals_ = std::move(terminals);
}

double MetricInstance::distance(PointId u, PointId v) const {
  if (u >= n_pts_ || v >= n_pts_) throw ContractViolation("point index out of range");
  if (u == v) return 0.0;
  if (!matrix_.empty()) return matrix_[std::size_t{u} * n_pts_ + v];
  const double* a = coords_.data() + std::size_t{u} * dim_;
  const double* b = coords_.data() + std::size_t{v} * dim_;
  double acc = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

bool MetricInstance::satisfies_triangle_inequality(double tol) const {
  for (PointId u = 0; u < n_pts_; ++u)
    for (PointId v = u + 1; v < n_pts_; ++v) {
      double uv = distance(u, v);
      for (PointId z = 0; z < n_pts_; ++z) {
        if (z == u || z == v) continue;
        double via = distance(u, z) + distance(z, v);
        if (uv > via + tol * std::max(1.0, via)) return false;
      }
    }
  return true;
}

QueryLedger::QueryLedger() : current_(&phases_["unphased"]) {}

void QueryLedger::charge_membership(std::uint64_t count) noexcept {
  membership_.fetch_add(count, std::memory_order_relaxed);
  current_->membership.fetch_add(count, std::memory_order_relaxed);
}

void QueryLedger::charge_distance(std::uint64_t count) noexcept {
  distance_.fetch_add(count, std::memory_order_relaxed);
  current_->distance.fetch_add(count, std::memory_order_relaxed);
}

LedgerSnapshot QueryLedger::snapshot() const {
  LedgerSnapshot snap;
  snap.total = totals();
  for (const auto& [label, c] : phases_) {
    QueryCounts q{c.membership.load(std::memory_order_relaxed),
                  c.distance.load(std::memory_order_relaxed)};
    if (q.membership != 0 || q.distance != 0) snap.phases.emplace(label, q);
  }
  return snap;
}

QueryLedger::PhaseScope QueryLedger::phase(const std::string& label) {
  Counters* previous = current_;
  current_ = &phases_[label];
  return PhaseScope(*this, previous);
}

bool MembershipOracle::query(ElementId e, SetId s) {
  if (e >= system_->universe_size()) throw ContractViolation("element index out of range");
  if (s >= system_->family_size()) throw ContractViolation("set index out of range");
  ledger_.charge_membership();
  return system_->contains(s, e);
}

double DistanceOracle::query(PointId u, PointId v) {
  if (u >= metric_->size() || v >= metric_->size())
    throw ContractViolation("point index out of range");
  ledger_.charge_distance();
  return metric_->distance(u, v);
}

std::size_t EdgeIdHash::operator()(const EdgeId& e) const noexcept {
  std::uint64_t h = mix64((std::uint64_t{e.u} << 32) | e.v);
  return static_cast<std::size_t>(mix64(h ^ (std::uint64_t{e.set} * 0x9e3779b97f4a7c15ULL)));
}

std::uint64_t RankFunction::hash(const EdgeId& e) const noexcept {
  std::uint64_t h = mix64(seed_ ^ 0xa0761d6478bd642fULL);
  h = mix64(h ^ ((std::uint64_t{e.u} << 32) | e.v));
  h = mix64(h ^ (std::uint64_t{e.set} + 0xe7037ed1a0b428dbULL));
  return h;
}

double RankFunction::rank(const EdgeId& e) const {
  if (!e.is_canonical()) throw ContractViolation("edge id is not canonical (u < v required)");
  return static_cast<double>(hash(e) >> 11) * 0x1.0p-53;
}

}  // namespace sublin
