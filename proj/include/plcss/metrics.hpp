#pragma once

// Fairness, gain and channel-statistics metrics over simulation reports and
// deployments.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plcss/mac_sim.hpp"
#include "plcss/tonemap.hpp"
#include "plcss/trace_io.hpp"

namespace plcss {

/// Jain's fairness index: (sum x)^2 / (n * sum x^2).
inline double jain_index(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("jain_index: empty input");
  double sum = 0.0, sq = 0.0;
  for (double v : values) {
    if (v < 0) throw std::invalid_argument("jain_index: negative value");
    sum += v;
    sq += v * v;
  }
  if (sq == 0.0) throw std::invalid_argument("jain_index: all-zero input");
  return sum * sum / (static_cast<double>(values.size()) * sq);
}

/// Fairly shared spectrum efficiency: n times the smallest per-node throughput,
/// which equals the network total when every node gets the same share.
inline double fsse(const std::map<NodeId, double>& per_node) {
  if (per_node.empty()) throw std::invalid_argument("fsse: empty input");
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& [n, v] : per_node) lo = std::min(lo, v);
  return static_cast<double>(per_node.size()) * lo;
}

/// Sum of normalized throughputs of the flows each node transmits.
inline std::map<NodeId, double> per_node_throughput(const SimReportRaw& r, const MacParams& mac) {
  std::map<NodeId, double> out;
  for (const auto& [link, tally] : r.links) out[link.tx] += normalized_throughput(r, link, mac);
  return out;
}

struct FairnessReport {
  double jfi = 1.0;
  double fsse = 0.0;
  std::map<NodeId, double> per_node_throughput;
  double aggregate_throughput = 0.0;
};

/// JFI is taken as 1 when every node is at zero (all shares are equal).
inline FairnessReport fairness(const SimReportRaw& r, const MacParams& mac) {
  FairnessReport f;
  f.per_node_throughput = per_node_throughput(r, mac);
  std::vector<double> v;
  for (const auto& [n, x] : f.per_node_throughput) {
    v.push_back(x);
    f.aggregate_throughput += x;
  }
  if (v.empty()) throw std::invalid_argument("fairness: report has no links");
  f.jfi = f.aggregate_throughput > 0 ? jain_index(v) : 1.0;
  f.fsse = fsse(f.per_node_throughput);
  return f;
}

/// 100 * (after - before) / before; 0 when both are 0, +inf when only before is.
inline double percent_gain(double before, double after) {
  if (before == 0.0) return after == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return 100.0 * (after - before) / before;
}

struct LinkGain {
  DirectedLink link;
  double base = 0.0;
  double ss = 0.0;
  double gain_pct = 0.0;
};

struct GainReport {
  double aggregate_base = 0.0;
  double aggregate_ss = 0.0;
  double aggregate_gain_pct = 0.0;
  std::vector<LinkGain> links;
  FairnessReport fairness_base;
  FairnessReport fairness_ss;
  double jfi_delta = 0.0;
  double fsse_delta = 0.0;

  double max_link_gain_pct() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& l : links) m = std::max(m, l.gain_pct);
    return m;
  }
};

inline GainReport compare_runs(const SimReportRaw& base, const SimReportRaw& ss, const MacParams& mac) {
  if (base.links.size() != ss.links.size() ||
      !std::equal(base.links.begin(), base.links.end(), ss.links.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; }))
    throw std::invalid_argument("compare_runs: reports cover different link sets");
  if (base.total_time != ss.total_time) throw std::invalid_argument("compare_runs: reports cover different durations");

  GainReport g;
  for (const auto& [link, tally] : base.links) {
    LinkGain lg{link, normalized_throughput(base, link, mac), normalized_throughput(ss, link, mac), 0.0};
    lg.gain_pct = percent_gain(lg.base, lg.ss);
    g.aggregate_base += lg.base;
    g.aggregate_ss += lg.ss;
    g.links.push_back(lg);
  }
  g.aggregate_gain_pct = percent_gain(g.aggregate_base, g.aggregate_ss);
  g.fairness_base = fairness(base, mac);
  g.fairness_ss = fairness(ss, mac);
  g.jfi_delta = g.fairness_ss.jfi - g.fairness_base.jfi;
  g.fsse_delta = g.fairness_ss.fsse - g.fairness_base.fsse;
  return g;
}

struct PairAsymmetry {
  NodeId a;
  NodeId b;
  double asymmetry = 0.0;
  double normalized = 0.0;
};

/// One entry per unordered node pair with traced links, in node order.
inline std::vector<PairAsymmetry> asymmetry_distribution(const Deployment& d) {
  std::vector<PairAsymmetry> out;
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < d.nodes.size(); ++j) {
      const DirectedLink ab(d.nodes[i], d.nodes[j]);
      const bool fwd = d.has_link(ab), rev = d.has_link(ab.reversed());
      if (!fwd && !rev) continue;
      if (!fwd || !rev) throw std::invalid_argument("asymmetry_distribution: missing reverse link for " + to_string(ab));
      const double a = asymmetry(d.tonemap(ab), d.tonemap(ab.reversed()));
      out.push_back({ab.tx, ab.rx, a, a / kMaxSlotBits});
    }
  }
  return out;
}

/// Population standard deviation of each complete, non-overlapping window.
inline std::vector<double> stability_std(std::span<const double> series, std::size_t window) {
  if (window < 2) throw std::invalid_argument("stability_std: window must be >= 2");
  if (series.size() < window) throw std::invalid_argument("stability_std: series shorter than window");
  std::vector<double> out;
  for (std::size_t start = 0; start + window <= series.size(); start += window) {
    const auto w = series.subspan(start, window);
    double mean = 0.0;
    for (double x : w) mean += x;
    mean /= static_cast<double>(window);
    double var = 0.0;
    for (double x : w) var += (x - mean) * (x - mean);
    out.push_back(std::sqrt(var / static_cast<double>(window)));
  }
  return out;
}

inline std::string format_value(double v, int precision = 6) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

/// CSV: metric,value
inline void write_metrics_csv(const GainReport& g, std::ostream& out) {
  out << "metric,value\n";
  const std::pair<const char*, double> rows[] = {
      {"aggregate_base", g.aggregate_base},     {"aggregate_ss", g.aggregate_ss},
      {"aggregate_gain_pct", g.aggregate_gain_pct}, {"jfi_base", g.fairness_base.jfi},
      {"jfi_ss", g.fairness_ss.jfi},             {"jfi_delta", g.jfi_delta},
      {"fsse_base", g.fairness_base.fsse},       {"fsse_ss", g.fairness_ss.fsse},
      {"fsse_delta", g.fsse_delta},
  };
  for (const auto& [k, v] : rows) out << k << ',' << format_value(v) << '\n';
}

inline void write_metrics_csv(const FairnessReport& f, std::ostream& out) {
  out << "metric,value\n";
  out << "aggregate_throughput," << format_value(f.aggregate_throughput) << '\n';
  out << "jfi," << format_value(f.jfi) << '\n';
  out << "fsse," << format_value(f.fsse) << '\n';
  for (const auto& [n, v] : f.per_node_throughput) out << "node_throughput_" << n << ',' << format_value(v) << '\n';
}

/// CSV: link_tx,link_rx,base,ss,gain_pct
inline void write_link_gains_csv(const GainReport& g, std::ostream& out) {
  out << "link_tx,link_rx,base,ss,gain_pct\n";
  for (const auto& l : g.links)
    out << l.link.tx << ',' << l.link.rx << ',' << format_value(l.base) << ',' << format_value(l.ss) << ','
        << format_value(l.gain_pct) << '\n';
}

}  // namespace plcss
