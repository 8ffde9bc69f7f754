#pragma once

// Seeded synthetic deployments. Stands in for measured tonemap snapshots.
//
// Every random decision draws from an Lcg64 stream derived from the profile
// seed, so output depends only on (n_nodes, profile, slot_count):
//   stream tx*n + rx          per-direction perturbation and notches
//   stream n*n + pair index   shape shared by both directions of a pair
//   stream 2*n*n + link*6 + k per-slot jitter of slot k
//
// Profiles:
//   uniform               flat base_quality, no ripple or jitter
//   complementary         node i transmits at 10 bits in band i of n equal
//                         bands and at base_quality elsewhere
//   interference-notched  base_quality with ripple and zeroed notches
//   asymmetric            as notched, plus an independent tilt per direction

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "plcss/prng.hpp"
#include "plcss/tonemap.hpp"
#include "plcss/trace_io.hpp"

namespace plcss {

enum class ProfileKind { uniform, complementary, interference_notched, asymmetric };

inline std::string_view profile_name(ProfileKind k) {
  switch (k) {
    case ProfileKind::uniform: return "uniform";
    case ProfileKind::complementary: return "complementary";
    case ProfileKind::interference_notched: return "interference-notched";
    case ProfileKind::asymmetric: return "asymmetric";
  }
  return "?";
}

inline ProfileKind parse_profile(std::string_view s) {
  for (auto k : {ProfileKind::uniform, ProfileKind::complementary, ProfileKind::interference_notched,
                 ProfileKind::asymmetric})
    if (profile_name(k) == s) return k;
  throw std::invalid_argument("unknown profile '" + std::string(s) +
                              "' (expected uniform, complementary, interference-notched or asymmetric)");
}

struct GeneratorProfile {
  ProfileKind kind = ProfileKind::complementary;
  int base_quality = 3;
  int notch_count = 0;
  int notch_width = 40;
  int asymmetry_noise = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (base_quality < 0 || base_quality > kMaxBits) throw std::invalid_argument("base_quality must lie in [0, 10]");
    if (notch_count < 0) throw std::invalid_argument("notch_count must be >= 0");
    if (notch_width < 0) throw std::invalid_argument("notch_width must be >= 0");
    if (asymmetry_noise < 0) throw std::invalid_argument("asymmetry_noise must be >= 0");
    if (static_cast<long>(notch_count) * notch_width > static_cast<long>(kSubcarriers))
      throw std::invalid_argument("infeasible notch layout: notch_count * notch_width exceeds 917 subcarriers");
  }
};

/// Modulations HomePlug AV can load: BPSK, QPSK, 8-QAM, 16-QAM, 64-QAM, 256-QAM, 1024-QAM.
inline constexpr std::array<std::uint8_t, 8> kLegalBits{0, 1, 2, 3, 4, 6, 8, 10};

/// Largest legal modulation not above `v` (clamped to [0, 10]).
inline std::uint8_t snap_to_legal(int v) {
  v = std::clamp(v, 0, kMaxBits);
  std::uint8_t out = 0;
  for (auto b : kLegalBits)
    if (b <= v) out = b;
  return out;
}

/// One legal step below `v` (0 stays 0).
inline std::uint8_t step_down(std::uint8_t v) {
  std::uint8_t out = 0;
  for (auto b : kLegalBits)
    if (b < v) out = b;
  return out;
}

namespace detail {

/// Non-overlapping [start, start + width) bands placed uniformly.
inline std::vector<int> notch_starts(Lcg64& rng, int count, int width) {
  const int free = static_cast<int>(kSubcarriers) - count * width;
  std::vector<int> offsets(static_cast<std::size_t>(count));
  for (auto& o : offsets) o = rng.uniform_int(0, free);
  std::sort(offsets.begin(), offsets.end());
  for (int i = 0; i < count; ++i) offsets[static_cast<std::size_t>(i)] += i * width;
  return offsets;
}

/// Integer ripple of amplitude `amp` bits: amp * sin(2*pi*cycles*j/917 + phase), rounded.
struct Ripple {
  int amp = 0;
  int cycles = 1;
  double phase = 0.0;

  static Ripple draw(Lcg64& rng, int amp) {
    Ripple r;
    r.amp = amp;
    r.cycles = rng.uniform_int(1, 4);
    r.phase = rng.unit() * 2.0 * std::numbers::pi;
    return r;
  }
  int at(std::size_t j) const {
    if (amp == 0) return 0;
    const double x = 2.0 * std::numbers::pi * cycles * static_cast<double>(j) / kSubcarriers + phase;
    return static_cast<int>(std::lround(amp * std::sin(x)));
  }
};

inline std::size_t band_begin(std::size_t i, std::size_t n) { return i * kSubcarriers / n; }

}  // namespace detail

/// Builds a Deployment of nodes N1..Nn with tonemaps for all n*(n-1) links.
inline Deployment generate_deployment(int n_nodes, const GeneratorProfile& profile,
                                      std::size_t slot_count = kDefaultSlots) {
  if (n_nodes < 2) throw std::invalid_argument("generate_deployment: need at least 2 nodes");
  if (slot_count < 1 || slot_count > kMaxSlots) throw std::invalid_argument("slot_count must lie in [1, 6]");
  profile.validate();

  const auto n = static_cast<std::size_t>(n_nodes);
  const std::uint64_t seed = profile.seed;
  const bool per_direction = profile.asymmetry_noise > 0;
  const bool flat = profile.kind == ProfileKind::uniform;

  Deployment d;
  for (std::size_t i = 0; i < n; ++i) d.nodes.push_back("N" + std::to_string(i + 1));

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const std::size_t lo = std::min(a, b), hi = std::max(a, b);
      auto pair_rng = Lcg64::stream(seed, n * n + lo * n + hi);
      auto dir_rng = Lcg64::stream(seed, a * n + b);

      const bool rippled = !flat && profile.kind != ProfileKind::complementary;
      const auto ripple = rippled ? detail::Ripple::draw(pair_rng, 1) : detail::Ripple{};
      // Asymmetric links tilt each direction independently across the band.
      const int tilt = profile.kind == ProfileKind::asymmetric
                           ? dir_rng.uniform_int(-std::max(2, profile.asymmetry_noise), std::max(2, profile.asymmetry_noise))
                           : 0;

      std::vector<int> level(kSubcarriers);
      for (std::size_t j = 0; j < kSubcarriers; ++j) {
        int v = profile.base_quality;
        if (profile.kind == ProfileKind::complementary) {
          const bool home = j >= detail::band_begin(a, n) && j < detail::band_begin(a + 1, n);
          v = home ? kMaxBits : profile.base_quality;
        }
        v += ripple.at(j);
        if (tilt != 0)
          v += static_cast<int>(std::lround(tilt * (2.0 * static_cast<double>(j) / (kSubcarriers - 1) - 1.0)));
        level[j] = v;
      }

      if (per_direction)
        for (auto& v : level) v += dir_rng.uniform_int(-profile.asymmetry_noise, profile.asymmetry_noise);

      if (profile.notch_count > 0 && profile.notch_width > 0) {
        auto& notch_rng = per_direction ? dir_rng : pair_rng;
        for (int start : detail::notch_starts(notch_rng, profile.notch_count, profile.notch_width))
          for (int j = start; j < start + profile.notch_width; ++j) level[static_cast<std::size_t>(j)] = 0;
      }

      SlotMap base(kSubcarriers);
      for (std::size_t j = 0; j < kSubcarriers; ++j) base[j] = snap_to_legal(level[j]);

      Tonemap tm;
      const std::size_t link_index = a * n + b;
      for (std::size_t k = 0; k < slot_count; ++k) {
        SlotMap s = base;
        if (!flat) {
          // Mains-synchronous noise: each slot loses one step on ~1/8 of its subcarriers.
          auto slot_rng = Lcg64::stream(seed, 2 * n * n + link_index * kMaxSlots + k);
          for (auto& v : s)
            if (slot_rng.uniform(8) == 0) v = step_down(v);
        }
        tm.slots.push_back(std::move(s));
      }
      d.links.emplace(DirectedLink(d.nodes[a], d.nodes[b]), std::move(tm));
    }
  }

  d.metadata["generator"] = "plcss-gen-v1";
  d.metadata["prng"] = kPrngName;
  d.metadata["profile"] = std::string(profile_name(profile.kind));
  d.metadata["seed"] = std::to_string(seed);
  d.metadata["base_quality"] = std::to_string(profile.base_quality);
  d.metadata["notch_count"] = std::to_string(profile.notch_count);
  d.metadata["notch_width"] = std::to_string(profile.notch_width);
  d.metadata["asymmetry_noise"] = std::to_string(profile.asymmetry_noise);
  return d;
}

}  // namespace plcss
