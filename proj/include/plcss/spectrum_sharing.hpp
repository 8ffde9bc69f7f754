#pragma once

// Central-coordinator spectrum-sharing decisions.
//
// For a primary link p and a node-disjoint secondary link s, the per-subcarrier
// advantage is D = T_s - T_p. Subcarriers with D >= beta are handed to s, and
// the gain of doing so is the sum of D over them. Each primary keeps its best
// top_m candidates per AC line cycle slot.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "plcss/tonemap.hpp"
#include "plcss/trace_io.hpp"

namespace plcss {

struct SSPolicy {
  int beta = 2;
  int top_m = 2;
  double max_share_fraction = 1.0;

  void validate() const {
    if (beta < 0) throw std::invalid_argument("beta must be >= 0");
    if (top_m < 1) throw std::invalid_argument("top_m must be >= 1");
    if (!(max_share_fraction >= 0.0 && max_share_fraction <= 1.0))
      throw std::invalid_argument("max_share_fraction must lie in [0, 1]");
  }
  /// Largest number of subcarriers a primary may yield in one slot.
  std::size_t share_cap() const {
    return static_cast<std::size_t>(std::floor(max_share_fraction * static_cast<double>(kSubcarriers) + 1e-9));
  }
};

struct SSAllocation {
  DirectedLink primary;
  DirectedLink secondary;
  std::size_t slot = 0;
  IndexSet shared_indices;
  long gain = 0;
  int rank = 0;  // 1-based

  friend bool operator==(const SSAllocation&, const SSAllocation&) = default;
};

/// Per primary link, per slot, the ranked candidate list (best first).
class SSDecisionTable {
 public:
  using SlotLists = std::vector<std::vector<SSAllocation>>;

  void set(const DirectedLink& primary, SlotLists lists) { entries_[primary] = std::move(lists); }

  /// Candidates of `primary` in slot `k`; empty when none qualify.
  std::span<const SSAllocation> candidates(const DirectedLink& primary, std::size_t k) const {
    auto it = entries_.find(primary);
    if (it == entries_.end() || k >= it->second.size()) return {};
    return it->second[k];
  }

  const std::map<DirectedLink, SlotLists>& entries() const { return entries_; }
  std::size_t allocation_count() const {
    std::size_t c = 0;
    for (const auto& [p, lists] : entries_)
      for (const auto& l : lists) c += l.size();
    return c;
  }

  friend bool operator==(const SSDecisionTable&, const SSDecisionTable&) = default;

 private:
  std::map<DirectedLink, SlotLists> entries_;
};

/// Element-wise secondary minus primary.
inline std::vector<int> diff_vector(std::span<const std::uint8_t> primary_map, std::span<const std::uint8_t> secondary_map) {
  if (primary_map.size() != secondary_map.size())
    throw std::invalid_argument("diff_vector: length mismatch (" + std::to_string(primary_map.size()) + " vs " +
                                std::to_string(secondary_map.size()) + ")");
  std::vector<int> d(primary_map.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = int{secondary_map[j]} - int{primary_map[j]};
  return d;
}

inline IndexSet eligible_indices(std::span<const int> d, int beta) {
  IndexSet out;
  for (std::size_t j = 0; j < d.size(); ++j)
    if (d[j] >= beta) out.push_back(static_cast<std::uint16_t>(j));
  return out;
}

/// Secondary bits minus primary bits over `indices`.
inline long gain(std::span<const std::uint8_t> primary_map, std::span<const std::uint8_t> secondary_map,
                 std::span<const std::uint16_t> indices) {
  long g = 0;
  for (auto j : indices) {
    if (j >= primary_map.size() || j >= secondary_map.size())
      throw std::out_of_range("gain: subcarrier index " + std::to_string(j) + " out of range");
    g += int{secondary_map[j]} - int{primary_map[j]};
  }
  return g;
}

/// Keeps the `cap` indices with the largest advantage; ties keep the lower index.
inline IndexSet truncate_to_cap(IndexSet indices, std::span<const int> d, std::size_t cap) {
  if (indices.size() <= cap) return indices;
  std::stable_sort(indices.begin(), indices.end(), [&](auto a, auto b) { return d[a] > d[b]; });
  indices.resize(cap);
  std::sort(indices.begin(), indices.end());
  return indices;
}

inline SSDecisionTable build_decision_table(const Deployment& d, const SSPolicy& policy) {
  policy.validate();
  const std::size_t cap = policy.share_cap();
  const std::size_t slots = d.slot_count();
  SSDecisionTable table;

  for (const auto& [primary, tp] : d.links) {
    SSDecisionTable::SlotLists lists(slots);
    for (std::size_t k = 0; k < slots; ++k) {
      auto& list = lists[k];
      const auto& pm = tp.slot(k);
      for (const auto& [secondary, ts] : d.links) {
        if (!secondary.disjoint_from(primary)) continue;
        const auto& sm = ts.slot(k);
        const auto diff = diff_vector(pm, sm);
        auto idx = truncate_to_cap(eligible_indices(diff, policy.beta), diff, cap);
        const long g = gain(pm, sm, idx);
        if (g <= 0) continue;
        list.push_back(SSAllocation{primary, secondary, k, std::move(idx), g, 0});
      }
      // d.links iterates secondaries in (tx, rx) order, so a stable sort on
      // gain leaves equal-gain candidates lexicographically ordered.
      std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.gain > b.gain; });
      if (list.size() > static_cast<std::size_t>(policy.top_m)) list.resize(static_cast<std::size_t>(policy.top_m));
      for (std::size_t r = 0; r < list.size(); ++r) list[r].rank = static_cast<int>(r + 1);
    }
    table.set(primary, std::move(lists));
  }
  return table;
}

/// CSV: primary_tx,primary_rx,slot,rank,secondary_tx,secondary_rx,gain,num_shared,indices...
/// Slots and subcarrier indices are written 1-based.
inline void write_decision_table_csv(const SSDecisionTable& table, std::ostream& out) {
  out << "primary_tx,primary_rx,slot,rank,secondary_tx,secondary_rx,gain,num_shared,indices\n";
  for (const auto& [primary, lists] : table.entries()) {
    for (const auto& list : lists) {
      for (const auto& a : list) {
        out << a.primary.tx << ',' << a.primary.rx << ',' << (a.slot + 1) << ',' << a.rank << ',' << a.secondary.tx
            << ',' << a.secondary.rx << ',' << a.gain << ',' << a.shared_indices.size();
        for (auto j : a.shared_indices) out << ',' << (j + 1);
        out << '\n';
      }
    }
  }
}

}  // namespace plcss
