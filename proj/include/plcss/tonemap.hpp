#pragma once

// Tonemap types and the closed-form link metrics derived from them.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace plcss {

/// Number of OFDM subcarriers in a HomePlug AV tonemap.
inline constexpr std::size_t kSubcarriers = 917;
/// Highest modulation (1024-QAM) in bits per subcarrier.
inline constexpr int kMaxBits = 10;
/// kSubcarriers * kMaxBits; the denominator of every spectrum fraction.
inline constexpr int kMaxSlotBits = 9170;
inline constexpr std::size_t kMaxSlots = 6;
inline constexpr std::size_t kDefaultSlots = 5;

/// Bits per subcarrier for one AC line cycle slot.
using SlotMap = std::vector<std::uint8_t>;
/// Sorted, duplicate-free 0-based subcarrier indices.
using IndexSet = std::vector<std::uint16_t>;

using NodeId = std::string;

struct DirectedLink {
  NodeId tx;
  NodeId rx;

  DirectedLink() = default;
  DirectedLink(NodeId from, NodeId to) : tx(std::move(from)), rx(std::move(to)) {
    if (tx == rx) throw std::invalid_argument("directed link endpoints must differ: " + tx);
  }

  DirectedLink reversed() const { return {rx, tx}; }
  bool touches(const NodeId& n) const { return tx == n || rx == n; }
  /// True when the two links share no endpoint.
  bool disjoint_from(const DirectedLink& o) const { return !touches(o.tx) && !touches(o.rx); }

  friend auto operator<=>(const DirectedLink&, const DirectedLink&) = default;
  friend bool operator==(const DirectedLink&, const DirectedLink&) = default;
};

inline std::string to_string(const DirectedLink& l) { return l.tx + "->" + l.rx; }

struct Tonemap {
  std::vector<SlotMap> slots;

  std::size_t slot_count() const { return slots.size(); }
  const SlotMap& slot(std::size_t k) const {
    if (k >= slots.size())
      throw std::out_of_range("slot index " + std::to_string(k) + " out of range [0, " +
                              std::to_string(slots.size()) + ")");
    return slots[k];
  }

  /// Every slot filled with the same value.
  static Tonemap constant(std::uint8_t bits, std::size_t slot_count = kDefaultSlots) {
    return Tonemap{std::vector<SlotMap>(slot_count, SlotMap(kSubcarriers, bits))};
  }

  friend bool operator==(const Tonemap&, const Tonemap&) = default;
};

/// Returns std::nullopt when the map is well formed, otherwise a description of
/// the first violation found (slots scanned in order, then subcarriers).
inline std::optional<std::string> validate_tonemap(const Tonemap& t) {
  if (t.slots.empty() || t.slots.size() > kMaxSlots)
    return "slot count " + std::to_string(t.slots.size()) + " outside [1, 6]";
  for (std::size_t k = 0; k < t.slots.size(); ++k) {
    const auto& s = t.slots[k];
    if (s.size() != kSubcarriers)
      return "subcarrier count " + std::to_string(s.size()) + " != 917 in slot " + std::to_string(k);
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] > kMaxBits)
        return "modulation out of range (" + std::to_string(s[j]) + ") at slot " + std::to_string(k) +
               " subcarrier " + std::to_string(j);
    }
  }
  return std::nullopt;
}

inline void require_valid(const Tonemap& t) {
  if (auto v = validate_tonemap(t)) throw std::invalid_argument("invalid tonemap: " + *v);
}

enum class FecRate { half, sixteen_21 };

inline double fec_value(FecRate r) { return r == FecRate::half ? 1.0 / 2.0 : 16.0 / 21.0; }

struct PhyParams {
  FecRate fec_rate = FecRate::sixteen_21;
  double bit_error_rate = 0.0;
  double symbol_interval_us = 46.0;
  double protocol_overhead = 0.4;

  void validate() const {
    if (!(bit_error_rate >= 0.0 && bit_error_rate < 1.0))
      throw std::invalid_argument("bit_error_rate must lie in [0, 1)");
    if (!(symbol_interval_us > 0.0)) throw std::invalid_argument("symbol_interval_us must be > 0");
    if (!(protocol_overhead >= 0.0 && protocol_overhead < 1.0))
      throw std::invalid_argument("protocol_overhead must lie in [0, 1)");
  }
};

inline long slot_bits(const SlotMap& s) {
  long sum = 0;
  for (auto v : s) sum += v;
  return sum;
}

/// Effective PHY rate of slot `k` (0-based) in bits per second.
inline double phy_rate(const Tonemap& t, std::size_t k, const PhyParams& p) {
  p.validate();
  const auto bits = static_cast<double>(slot_bits(t.slot(k)));
  return bits * fec_value(p.fec_rate) * (1.0 - p.bit_error_rate) / (p.symbol_interval_us * 1e-6);
}

/// Slot-averaged PHY rate scaled by (1 - protocol overhead).
inline double expected_throughput(const Tonemap& t, const PhyParams& p) {
  if (t.slots.empty()) throw std::invalid_argument("tonemap has no slots");
  double sum = 0.0;
  for (std::size_t k = 0; k < t.slot_count(); ++k) sum += phy_rate(t, k, p);
  return (1.0 - p.protocol_overhead) * sum / static_cast<double>(t.slot_count());
}

/// L1 distance between the two directions of a link, averaged over slots.
/// Bounded by kMaxSlotBits.
inline double asymmetry(const Tonemap& ab, const Tonemap& ba) {
  if (ab.slot_count() != ba.slot_count())
    throw std::invalid_argument("asymmetry: slot_count mismatch (" + std::to_string(ab.slot_count()) +
                                " vs " + std::to_string(ba.slot_count()) + ")");
  if (ab.slots.empty()) throw std::invalid_argument("asymmetry: empty tonemaps");
  long total = 0;
  for (std::size_t k = 0; k < ab.slot_count(); ++k) {
    const auto& x = ab.slots[k];
    const auto& y = ba.slots[k];
    if (x.size() != y.size()) throw std::invalid_argument("asymmetry: subcarrier count mismatch");
    for (std::size_t j = 0; j < x.size(); ++j) total += std::abs(int{x[j]} - int{y[j]});
  }
  return static_cast<double>(total) / static_cast<double>(ab.slot_count());
}

/// Sum of the modulation values of `active` in slot `k`.
inline long active_bits(const Tonemap& t, std::size_t k, std::span<const std::uint16_t> active) {
  const auto& s = t.slot(k);
  long sum = 0;
  for (auto j : active) {
    if (j >= s.size()) throw std::out_of_range("subcarrier index " + std::to_string(j) + " out of range");
    sum += s[j];
  }
  return sum;
}

inline double spectrum_fraction(const Tonemap& t, std::size_t k, std::span<const std::uint16_t> active) {
  return static_cast<double>(active_bits(t, k, active)) / kMaxSlotBits;
}

/// Spectrum fraction over every subcarrier of slot `k`.
inline double full_spectrum_fraction(const Tonemap& t, std::size_t k) {
  return static_cast<double>(slot_bits(t.slot(k))) / kMaxSlotBits;
}

inline IndexSet all_indices() {
  IndexSet out(kSubcarriers);
  for (std::size_t j = 0; j < kSubcarriers; ++j) out[j] = static_cast<std::uint16_t>(j);
  return out;
}

/// {0..916} minus `removed` (which must be sorted).
inline IndexSet complement(std::span<const std::uint16_t> removed) {
  IndexSet out;
  out.reserve(kSubcarriers - std::min(removed.size(), kSubcarriers));
  std::size_t r = 0;
  for (std::size_t j = 0; j < kSubcarriers; ++j) {
    while (r < removed.size() && removed[r] < j) ++r;
    if (r < removed.size() && removed[r] == j) continue;
    out.push_back(static_cast<std::uint16_t>(j));
  }
  return out;
}

}  // namespace plcss
