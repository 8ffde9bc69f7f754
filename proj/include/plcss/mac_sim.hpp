#pragma once

// Slot-based simulator of the HomePlug AV CSMA/CA MAC with spectrum sharing.
//
// Global contention. Each station holds (stage, BC, DC). While the medium is
// idle BC counts down one per slot and the station transmits when BC reaches
// 0. A station that senses a transmission start while backing off spends one
// DC; with DC already at 0 it moves to the next stage (capped), redraws BC from
// [0, CW-1] and reloads DC. BC is frozen for the whole busy period. Two or more
// simultaneous transmitters collide (busy for the collision duration) and
// each advance a stage; a lone transmitter succeeds and returns to stage 0.
//
// Spectrum sharing. During a lone (primary) transmission, the candidates the
// decision table lists for that primary and slot wait rank * wait slots. The
// first one with traffic becomes the secondary and transmits on its allocated
// subcarriers while the primary drops them. With a fixed secondary frame
// length the candidates then run their own CSMA instance inside the primary
// frame; by default the secondary frame runs to the end of the primary frame.
// Secondary activity never touches global contention state and draws from its
// own random stream, so SS-on and SS-off runs with equal seeds see the same
// primary transmissions.
//
// Time is kept in integer hundredths of a microsecond.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plcss/prng.hpp"
#include "plcss/spectrum_sharing.hpp"
#include "plcss/tonemap.hpp"
#include "plcss/trace_io.hpp"

namespace plcss {

using Ticks = std::int64_t;
inline constexpr Ticks kTicksPerUs = 100;

inline Ticks to_ticks(double us) { return static_cast<Ticks>(std::llround(us * kTicksPerUs)); }
inline double ticks_to_us(Ticks t) { return static_cast<double>(t) / kTicksPerUs; }

struct MacParams {
  double collision_duration_us = 2920.64;
  double success_duration_us = 2542.64;
  double frame_length = 2050.0;
  std::vector<int> cw_schedule{8, 16, 32, 64};
  std::vector<int> dc_schedule{0, 1, 3, 15};
  double slot_duration_us = 35.84;
  int rank_wait_slots_per_rank = 1;
  /// 0 disables periodic full-spectrum re-evaluation.
  double reeval_period_us = 0.0;
  /// Mains period (60 Hz) used to map a transmission start onto a tonemap slot.
  double ac_cycle_us = 1e6 / 60.0;
  /// 0 lets the secondary frame run to the end of the primary frame.
  double secondary_frame_us = 0.0;

  void validate() const {
    if (cw_schedule.empty() || cw_schedule.size() != dc_schedule.size())
      throw std::invalid_argument("cw_schedule and dc_schedule must have equal, non-zero length");
    for (auto cw : cw_schedule)
      if (cw < 1) throw std::invalid_argument("contention windows must be >= 1");
    for (auto dc : dc_schedule)
      if (dc < 0) throw std::invalid_argument("deferral counters must be >= 0");
    for (double v : {collision_duration_us, success_duration_us, slot_duration_us, ac_cycle_us})
      if (!(to_ticks(v) > 0)) throw std::invalid_argument("MAC durations must be > 0");
    if (!(frame_length > 0)) throw std::invalid_argument("frame_length must be > 0");
    if (rank_wait_slots_per_rank < 0) throw std::invalid_argument("rank_wait_slots_per_rank must be >= 0");
    if (reeval_period_us < 0) throw std::invalid_argument("reeval_period_us must be >= 0");
    if (secondary_frame_us < 0) throw std::invalid_argument("secondary_frame_us must be >= 0");
  }
};

enum class Role { primary, secondary };

enum class EventKind { tx_start, tx_end_success, tx_end_collision, stage_advance, ss_engage, ss_abort, reeval_start, reeval_end };

inline const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::tx_start: return "tx_start";
    case EventKind::tx_end_success: return "tx_end_success";
    case EventKind::tx_end_collision: return "tx_end_collision";
    case EventKind::stage_advance: return "stage_advance";
    case EventKind::ss_engage: return "ss_engage";
    case EventKind::ss_abort: return "ss_abort";
    case EventKind::reeval_start: return "reeval_start";
    case EventKind::reeval_end: return "reeval_end";
  }
  return "?";
}

/// One log record. Counters are the station's state after the event.
struct Event {
  Ticks time = 0;
  EventKind kind = EventKind::tx_start;
  NodeId node;
  DirectedLink link;
  Role role = Role::primary;
  int stage = 0;
  int bc = 0;
  int dc = 0;
  std::optional<double> spectrum_fraction;

  double time_us() const { return ticks_to_us(time); }
  friend bool operator==(const Event&, const Event&) = default;
};

struct LinkTally {
  long success_primary = 0;
  long success_secondary = 0;
  long collisions = 0;
  long aborted = 0;
  double sf_primary = 0.0;
  double sf_secondary = 0.0;

  long success_count() const { return success_primary + success_secondary; }
  double sf_total() const { return sf_primary + sf_secondary; }
  friend bool operator==(const LinkTally&, const LinkTally&) = default;
};

struct SimReportRaw {
  std::map<DirectedLink, LinkTally> links;
  Ticks total_time = 0;
  Ticks busy_time = 0;
  long idle_slots = 0;
  long primary_transmissions = 0;
  long ss_episodes = 0;
  std::vector<Event> events;

  double total_sim_time_us() const { return ticks_to_us(total_time); }
  friend bool operator==(const SimReportRaw&, const SimReportRaw&) = default;
};

/// 100 * (sum of spectrum fractions of the link's successes) * frame length / total time.
inline double normalized_throughput(const SimReportRaw& r, const DirectedLink& link, const MacParams& mac) {
  auto it = r.links.find(link);
  if (it == r.links.end()) throw std::out_of_range("normalized_throughput: link " + to_string(link) + " not in report");
  if (r.total_time == 0) return 0.0;
  return 100.0 * it->second.sf_total() * mac.frame_length / r.total_sim_time_us();
}

namespace detail {

struct Backoff {
  int stage = 0;
  int bc = 0;
  int dc = 0;
};

/// CW/DC bookkeeping shared by the global and the secondary contention.
class Csma {
 public:
  explicit Csma(const MacParams& mac) : cw_(mac.cw_schedule), dc_(mac.dc_schedule) {}

  void enter_stage(Backoff& s, int stage, Lcg64& rng) const {
    s.stage = std::min(stage, static_cast<int>(cw_.size()) - 1);
    s.bc = static_cast<int>(rng.uniform(static_cast<std::uint32_t>(cw_[static_cast<std::size_t>(s.stage)])));
    s.dc = dc_[static_cast<std::size_t>(s.stage)];
  }
  void advance(Backoff& s, Lcg64& rng) const { enter_stage(s, s.stage + 1, rng); }

  /// Medium sensed busy while backing off. Returns true if the stage advanced.
  bool sense_busy(Backoff& s, Lcg64& rng) const {
    if (s.dc == 0) {
      advance(s, rng);
      return true;
    }
    --s.dc;
    return false;
  }

 private:
  std::vector<int> cw_;
  std::vector<int> dc_;
};

inline IndexSet merge_sorted(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

class Engine {
 public:
  Engine(const Deployment& d, const SSDecisionTable* table, const MacParams& mac, const SSPolicy& policy,
         std::span<const DirectedLink> flows, double duration_us, std::uint64_t seed, bool record)
      : d_(d), table_(table), mac_(mac), policy_(policy), csma_(mac), rng_(Lcg64::stream(seed, 0)),
        sec_rng_(Lcg64::stream(seed, 1)), record_(record) {
    mac.validate();
    policy.validate();
    if (flows.empty()) throw std::invalid_argument("run_simulation: empty flow list");
    if (!(duration_us >= 0)) throw std::invalid_argument("run_simulation: duration must be >= 0");
    if (d.slot_count() == 0) throw std::invalid_argument("run_simulation: deployment has no tonemaps");
    for (const auto& f : flows) {
      if (!d.has_link(f)) throw std::invalid_argument("run_simulation: flow over missing link " + to_string(f));
      if (!flow_set_.insert(f).second) throw std::invalid_argument("run_simulation: duplicate flow " + to_string(f));
      report_.links[f];
    }
    // Stations in node order, each cycling through its flows in receiver order.
    for (const auto& n : d.nodes) {
      Station s;
      s.node = n;
      for (const auto& f : flow_set_)
        if (f.tx == n) s.flows.push_back(f);
      std::sort(s.flows.begin(), s.flows.end(),
                [&](const auto& a, const auto& b) { return d.node_index(a.rx) < d.node_index(b.rx); });
      if (!s.flows.empty()) stations_.push_back(std::move(s));
    }
    end_ = to_ticks(duration_us);
    slot_ = to_ticks(mac.slot_duration_us);
    success_ = to_ticks(mac.success_duration_us);
    collision_ = to_ticks(mac.collision_duration_us);
    ac_cycle_ = to_ticks(mac.ac_cycle_us);
    reeval_period_ = to_ticks(mac.reeval_period_us);
    next_reeval_ = reeval_period_;
    secondary_frame_ = to_ticks(mac.secondary_frame_us);
  }

  SimReportRaw run() {
    report_.total_time = end_;
    if (end_ == 0) return std::move(report_);
    for (auto& s : stations_) csma_.enter_stage(s.backoff, 0, rng_);

    Ticks t = 0;
    while (true) {
      int b = std::numeric_limits<int>::max();
      for (const auto& s : stations_) b = std::min(b, s.backoff.bc);
      const Ticks t_tx = t + static_cast<Ticks>(b) * slot_;
      if (t_tx >= end_) {
        report_.idle_slots += static_cast<long>((end_ - t) / slot_);
        break;
      }
      report_.idle_slots += b;

      std::vector<std::size_t> tx;
      for (std::size_t i = 0; i < stations_.size(); ++i) {
        stations_[i].backoff.bc -= b;
        if (stations_[i].backoff.bc == 0) tx.push_back(i);
      }
      for (auto i : tx) log(t_tx, EventKind::tx_start, stations_[i], stations_[i].current(), Role::primary);
      for (std::size_t i = 0; i < stations_.size(); ++i) {
        if (std::find(tx.begin(), tx.end(), i) != tx.end()) continue;
        if (csma_.sense_busy(stations_[i].backoff, rng_))
          log(t_tx, EventKind::stage_advance, stations_[i], stations_[i].current(), Role::primary);
      }

      const Ticks t_end = t_tx + (tx.size() == 1 ? success_ : collision_);
      if (t_end > end_) {
        report_.busy_time += end_ - t_tx;
        break;
      }
      report_.busy_time += t_end - t_tx;

      if (tx.size() == 1) {
        primary_success(stations_[tx.front()], t_tx, t_end);
      } else {
        for (auto i : tx) report_.links[stations_[i].current()].collisions++;
        for (auto i : tx) log(t_end, EventKind::tx_end_collision, stations_[i], stations_[i].current(), Role::primary);
        for (auto i : tx) {
          csma_.advance(stations_[i].backoff, rng_);
          log(t_end, EventKind::stage_advance, stations_[i], stations_[i].current(), Role::primary);
        }
      }
      t = t_end;
    }
    return std::move(report_);
  }

 private:
  struct Station {
    NodeId node;
    std::vector<DirectedLink> flows;
    std::size_t next_flow = 0;
    Backoff backoff;

    const DirectedLink& current() const { return flows[next_flow % flows.size()]; }
  };

  struct Contender {
    const SSAllocation* alloc;
    Backoff backoff;
  };

  std::size_t ac_slot(Ticks t) const {
    const auto slots = static_cast<Ticks>(d_.slot_count());
    return static_cast<std::size_t>(((t % ac_cycle_) * slots) / ac_cycle_);
  }

  void log(Ticks t, EventKind kind, const NodeId& node, const DirectedLink& link, Role role, const Backoff& b,
           std::optional<double> sf = std::nullopt) {
    if (!record_) return;
    report_.events.push_back(Event{t, kind, node, link, role, b.stage, b.bc, b.dc, sf});
  }
  void log(Ticks t, EventKind kind, const Station& s, const DirectedLink& link, Role role,
           std::optional<double> sf = std::nullopt) {
    log(t, kind, s.node, link, role, s.backoff, sf);
  }

  void primary_success(Station& st, Ticks t_tx, Ticks t_end) {
    const DirectedLink primary = st.current();
    const std::size_t k = ac_slot(t_tx);
    report_.primary_transmissions++;

    bool suspended = false;
    if (table_ && reeval_period_ > 0 && t_tx >= next_reeval_) {
      suspended = true;
      while (next_reeval_ <= t_tx) next_reeval_ += reeval_period_;
      log(t_tx, EventKind::reeval_start, st, primary, Role::primary);
    }

    IndexSet shared;
    if (table_ && !suspended) shared = share_spectrum(primary, k, t_tx, t_end);

    const auto& tp = d_.tonemap(primary);
    const double sf = shared.empty() ? full_spectrum_fraction(tp, k) : spectrum_fraction(tp, k, complement(shared));
    auto& tally = report_.links[primary];
    tally.success_primary++;
    tally.sf_primary += sf;

    st.next_flow = (st.next_flow + 1) % st.flows.size();
    csma_.enter_stage(st.backoff, 0, rng_);
    log(t_end, EventKind::tx_end_success, st, primary, Role::primary, sf);
    if (suspended) log(t_end, EventKind::reeval_end, st, primary, Role::primary);
  }

  /// Runs the secondary activity inside one primary frame and returns the
  /// union of subcarriers handed to secondaries.
  IndexSet share_spectrum(const DirectedLink& primary, std::size_t k, Ticks t_tx, Ticks t_end) {
    // One contender per transmitting node, keeping its best-ranked candidate.
    std::vector<Contender> cands;
    std::set<NodeId> tx_nodes;
    int considered = 0;
    for (const auto& a : table_->candidates(primary, k)) {
      if (considered++ >= policy_.top_m) break;
      if (!flow_set_.contains(a.secondary)) continue;
      if (!tx_nodes.insert(a.secondary.tx).second) continue;
      cands.push_back(Contender{&a, {}});
    }
    if (cands.empty()) return {};

    const Ticks wait = static_cast<Ticks>(mac_.rank_wait_slots_per_rank) * slot_;
    const Ticks t_first = t_tx + static_cast<Ticks>(cands.front().alloc->rank) * wait;
    if (t_first >= t_end) return {};

    report_.ss_episodes++;
    const SSAllocation& first = *cands.front().alloc;
    log(t_first, EventKind::ss_engage, first.secondary.tx, first.secondary, Role::secondary, cands.front().backoff,
        spectrum_fraction(d_.tonemap(first.secondary), k, first.shared_indices));

    if (secondary_frame_ == 0) {
      send_secondary(cands.front(), k, t_first, t_end);
      return first.shared_indices;
    }

    // Fixed-length secondary frames: the remaining candidates join a separate
    // CSMA instance at stage 0 once the first secondary is on the air. The
    // primary gives up every allocation that went on the air.
    IndexSet shared;
    for (std::size_t i = 1; i < cands.size(); ++i) csma_.enter_stage(cands[i].backoff, 0, sec_rng_);
    std::vector<std::size_t> tx{0};
    Ticks t = t_first;
    while (true) {
      for (auto i : tx) {
        shared = merge_sorted(shared, cands[i].alloc->shared_indices);
        log(t, EventKind::tx_start, cands[i].alloc->secondary.tx, cands[i].alloc->secondary, Role::secondary,
            cands[i].backoff);
      }
      const Ticks fe = t + secondary_frame_;
      if (fe > t_end) {
        for (auto i : tx) {
          report_.links[cands[i].alloc->secondary].aborted++;
          log(t_end, EventKind::ss_abort, cands[i].alloc->secondary.tx, cands[i].alloc->secondary, Role::secondary,
              cands[i].backoff);
        }
        break;
      }
      if (tx.size() == 1) {
        auto& c = cands[tx.front()];
        send_secondary(c, k, t, fe);
        csma_.enter_stage(c.backoff, 0, sec_rng_);
      } else {
        for (auto i : tx) {
          auto& c = cands[i];
          report_.links[c.alloc->secondary].collisions++;
          log(fe, EventKind::tx_end_collision, c.alloc->secondary.tx, c.alloc->secondary, Role::secondary, c.backoff);
          csma_.advance(c.backoff, sec_rng_);
          log(fe, EventKind::stage_advance, c.alloc->secondary.tx, c.alloc->secondary, Role::secondary, c.backoff);
        }
      }

      int b = std::numeric_limits<int>::max();
      for (const auto& c : cands) b = std::min(b, c.backoff.bc);
      t = fe + static_cast<Ticks>(b) * slot_;
      if (t >= t_end) break;
      tx.clear();
      for (std::size_t i = 0; i < cands.size(); ++i) {
        cands[i].backoff.bc -= b;
        if (cands[i].backoff.bc == 0) tx.push_back(i);
      }
      for (std::size_t i = 0; i < cands.size(); ++i) {
        if (std::find(tx.begin(), tx.end(), i) != tx.end()) continue;
        if (csma_.sense_busy(cands[i].backoff, sec_rng_))
          log(t, EventKind::stage_advance, cands[i].alloc->secondary.tx, cands[i].alloc->secondary, Role::secondary,
              cands[i].backoff);
      }
    }
    return shared;
  }

  /// A successful secondary frame over [start, stop); credit scales with airtime.
  void send_secondary(const Contender& c, std::size_t k, Ticks start, Ticks stop) {
    const auto& a = *c.alloc;
    if (secondary_frame_ == 0)
      log(start, EventKind::tx_start, a.secondary.tx, a.secondary, Role::secondary, c.backoff);
    const double sf = spectrum_fraction(d_.tonemap(a.secondary), k, a.shared_indices) *
                      static_cast<double>(stop - start) / static_cast<double>(success_);
    auto& tally = report_.links[a.secondary];
    tally.success_secondary++;
    tally.sf_secondary += sf;
    log(stop, EventKind::tx_end_success, a.secondary.tx, a.secondary, Role::secondary, c.backoff, sf);
  }

  const Deployment& d_;
  const SSDecisionTable* table_;
  const MacParams& mac_;
  const SSPolicy& policy_;
  Csma csma_;
  Lcg64 rng_;
  Lcg64 sec_rng_;
  bool record_;
  std::set<DirectedLink> flow_set_;
  std::vector<Station> stations_;
  SimReportRaw report_;
  Ticks end_ = 0, slot_ = 0, success_ = 0, collision_ = 0, ac_cycle_ = 0;
  Ticks reeval_period_ = 0, next_reeval_ = 0, secondary_frame_ = 0;
};

}  // namespace detail

/// Runs one saturated-traffic simulation. Passing a null table disables
/// spectrum sharing. The result depends only on the arguments.
inline SimReportRaw run_simulation(const Deployment& d, const SSDecisionTable* table, const MacParams& mac,
                                   const SSPolicy& policy, std::span<const DirectedLink> flows, double duration_us,
                                   std::uint64_t seed, bool record_events = false) {
  return detail::Engine(d, table, mac, policy, flows, duration_us, seed, record_events).run();
}

/// Every directed link of the deployment, in (tx, rx) order.
inline std::vector<DirectedLink> all_links(const Deployment& d) {
  std::vector<DirectedLink> out;
  for (const auto& [l, tm] : d.links) out.push_back(l);
  return out;
}

inline std::string format_time_us(Ticks t) {
  std::ostringstream os;
  os << (t / kTicksPerUs) << '.' << std::setw(2) << std::setfill('0') << (t % kTicksPerUs);
  return os.str();
}

/// CSV: time_us,event,node,link_tx,link_rx,role,stage,bc,dc,spectrum_fraction
inline void write_event_log_csv(std::span<const Event> events, std::ostream& out) {
  out << "time_us,event,node,link_tx,link_rx,role,stage,bc,dc,spectrum_fraction\n";
  for (const auto& e : events) {
    out << format_time_us(e.time) << ',' << event_name(e.kind) << ',' << e.node << ',' << e.link.tx << ','
        << e.link.rx << ',' << (e.role == Role::primary ? "primary" : "secondary") << ',' << e.stage << ',' << e.bc
        << ',' << e.dc << ',';
    if (e.spectrum_fraction) {
      std::ostringstream v;
      v << std::fixed << std::setprecision(6) << *e.spectrum_fraction;
      out << v.str();
    }
    out << '\n';
  }
}

}  // namespace plcss
