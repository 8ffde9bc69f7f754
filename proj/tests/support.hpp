#pragma once

// Input generators and small fixtures shared by the test binaries. Inputs come
// from std::mt19937_64 so they do not depend on the library's own PRNG.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "plcss/plcss.hpp"

namespace plcss::testing {

inline SlotMap random_slot(std::mt19937_64& g, int max_bits = kMaxBits) {
  std::uniform_int_distribution<int> v(0, max_bits);
  SlotMap s(kSubcarriers);
  for (auto& x : s) x = static_cast<std::uint8_t>(v(g));
  return s;
}

inline Tonemap random_tonemap(std::mt19937_64& g, std::size_t slots = kDefaultSlots) {
  Tonemap t;
  for (std::size_t k = 0; k < slots; ++k) t.slots.push_back(random_slot(g));
  return t;
}

/// Random sorted subset of {0..916}, each index kept with probability p.
inline IndexSet random_indices(std::mt19937_64& g, double p = 0.5) {
  std::bernoulli_distribution keep(p);
  IndexSet out;
  for (std::size_t j = 0; j < kSubcarriers; ++j)
    if (keep(g)) out.push_back(static_cast<std::uint16_t>(j));
  return out;
}

/// Deployment over `nodes` with every directed link set to `tm`.
inline Deployment full_mesh(const std::vector<NodeId>& nodes, const Tonemap& tm) {
  Deployment d;
  d.nodes = nodes;
  for (const auto& a : nodes)
    for (const auto& b : nodes)
      if (a != b) d.links.emplace(DirectedLink(a, b), tm);
  return d;
}

inline std::vector<NodeId> node_names(int n) {
  std::vector<NodeId> out;
  for (int i = 1; i <= n; ++i) out.push_back("N" + std::to_string(i));
  return out;
}

/// Two nodes; N1->N2 carries 2k bits on every subcarrier of slot k and
/// N2->N1 carries 10 - 2k.
inline Deployment slot_ramp_pair() {
  Deployment d;
  d.nodes = {"N1", "N2"};
  Tonemap up, down;
  for (std::size_t k = 0; k < kDefaultSlots; ++k) {
    up.slots.emplace_back(kSubcarriers, static_cast<std::uint8_t>(2 * k));
    down.slots.emplace_back(kSubcarriers, static_cast<std::uint8_t>(10 - 2 * k));
  }
  d.links.emplace(DirectedLink("N1", "N2"), up);
  d.links.emplace(DirectedLink("N2", "N1"), down);
  return d;
}

/// Decision table by brute force: every ordered link pair with four distinct
/// endpoints, every subcarrier tested against beta, then a full sort.
inline SSDecisionTable enumerate_decision_table(const Deployment& d, const SSPolicy& pol) {
  SSDecisionTable table;
  const std::size_t cap = static_cast<std::size_t>(pol.max_share_fraction * 917.0 + 1e-9);
  for (const auto& [p, tp] : d.links) {
    SSDecisionTable::SlotLists lists(tp.slot_count());
    for (std::size_t k = 0; k < tp.slot_count(); ++k) {
      std::vector<SSAllocation> all;
      for (const auto& [s, ts] : d.links) {
        const std::set<NodeId> ends{p.tx, p.rx, s.tx, s.rx};
        if (ends.size() != 4) continue;
        std::vector<std::pair<int, std::uint16_t>> picked;  // (advantage, index)
        for (std::size_t j = 0; j < kSubcarriers; ++j) {
          const int adv = int{ts.slots[k][j]} - int{tp.slots[k][j]};
          if (adv >= pol.beta) picked.emplace_back(adv, static_cast<std::uint16_t>(j));
        }
        std::sort(picked.begin(), picked.end(), [](auto a, auto b) {
          return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        if (picked.size() > cap) picked.resize(cap);
        SSAllocation a{p, s, k, {}, 0, 0};
        for (auto [adv, j] : picked) {
          a.shared_indices.push_back(j);
          a.gain += adv;
        }
        std::sort(a.shared_indices.begin(), a.shared_indices.end());
        if (a.gain > 0) all.push_back(std::move(a));
      }
      std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.gain != b.gain) return a.gain > b.gain;
        if (a.secondary.tx != b.secondary.tx) return a.secondary.tx < b.secondary.tx;
        return a.secondary.rx < b.secondary.rx;
      });
      if (all.size() > static_cast<std::size_t>(pol.top_m)) all.resize(static_cast<std::size_t>(pol.top_m));
      for (std::size_t r = 0; r < all.size(); ++r) all[r].rank = static_cast<int>(r + 1);
      lists[k] = std::move(all);
    }
    table.set(p, std::move(lists));
  }
  return table;
}

}  // namespace plcss::testing
