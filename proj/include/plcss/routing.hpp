#pragma once

// Offline multi-hop route planning over tonemap-derived link rates.
//
// All hops share one powerline medium, so a path's end-to-end estimate is
// 1 / sum(1 / rate) over its hops. The best route minimizes the summed
// per-bit airtime; equal-cost paths resolve to the lexicographically smallest
// node sequence.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "plcss/tonemap.hpp"
#include "plcss/trace_io.hpp"

namespace plcss {

struct LinkGraph {
  std::vector<NodeId> nodes;
  /// Edge weights in bits per second.
  std::map<DirectedLink, double> edges;

  void add_edge(const DirectedLink& l, double rate_bps) {
    if (!(rate_bps >= 0)) throw std::invalid_argument("edge rate must be >= 0");
    edges[l] = rate_bps;
  }
};

/// Edges weighted by expected throughput; links below `min_rate_bps` are dropped.
inline LinkGraph build_graph(const Deployment& d, const PhyParams& p, double min_rate_bps) {
  LinkGraph g;
  g.nodes = d.nodes;
  for (const auto& [link, tm] : d.links) {
    const double r = expected_throughput(tm, p);
    if (r >= min_rate_bps) g.edges.emplace(link, r);
  }
  return g;
}

class Unreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Route {
  std::vector<NodeId> path;
  double estimate_bps = 0.0;

  std::size_t hops() const { return path.empty() ? 0 : path.size() - 1; }
};

/// End-to-end estimate of a sequence of hop rates.
inline double path_estimate(const std::vector<double>& hop_rates) {
  double airtime = 0.0;
  for (double r : hop_rates) {
    if (r <= 0) return 0.0;
    airtime += 1.0 / r;
  }
  return hop_rates.empty() ? 0.0 : 1.0 / airtime;
}

/// Throws Unreachable when no path of positive-rate edges joins src to dst.
inline Route best_route(const LinkGraph& g, const NodeId& src, const NodeId& dst) {
  if (src == dst) throw std::invalid_argument("best_route: source equals destination");
  auto known = [&](const NodeId& n) { return std::find(g.nodes.begin(), g.nodes.end(), n) != g.nodes.end(); };
  if (!known(src)) throw std::invalid_argument("best_route: unknown node " + src);
  if (!known(dst)) throw std::invalid_argument("best_route: unknown node " + dst);

  std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;
  for (const auto& [l, r] : g.edges)
    if (r > 0) adj[l.tx].emplace_back(l.rx, r);

  // Dijkstra over (airtime, path); path order breaks cost ties and is
  // preserved under extension, so the settled label is the best one.
  struct Label {
    double cost;
    std::vector<NodeId> path;
    bool operator>(const Label& o) const { return cost != o.cost ? cost > o.cost : path > o.path; }
  };
  std::map<NodeId, Label> best;
  std::priority_queue<Label, std::vector<Label>, std::greater<>> pq;
  best[src] = Label{0.0, {src}};
  pq.push(best[src]);
  std::map<NodeId, bool> done;
  while (!pq.empty()) {
    Label cur = pq.top();
    pq.pop();
    const NodeId& at = cur.path.back();
    if (done[at]) continue;
    done[at] = true;
    if (at == dst) break;
    for (const auto& [next, rate] : adj[at]) {
      if (done[next]) continue;
      Label cand{cur.cost + 1.0 / rate, cur.path};
      cand.path.push_back(next);
      auto it = best.find(next);
      if (it == best.end() || it->second > cand) {
        best[next] = cand;
        pq.push(std::move(cand));
      }
    }
  }
  auto it = best.find(dst);
  if (it == best.end()) throw Unreachable("best_route: " + dst + " unreachable from " + src);

  Route r;
  r.path = it->second.path;
  std::vector<double> rates;
  for (std::size_t i = 0; i + 1 < r.path.size(); ++i) rates.push_back(g.edges.at(DirectedLink(r.path[i], r.path[i + 1])));
  r.estimate_bps = path_estimate(rates);
  return r;
}

/// CSV: src,dst,hops,path,estimate_bps (path nodes joined by '>').
inline void write_route_csv(const Route& r, std::ostream& out, bool header = true) {
  if (header) out << "src,dst,hops,path,estimate_bps\n";
  std::string joined;
  for (std::size_t i = 0; i < r.path.size(); ++i) {
    if (i) joined += '>';
    joined += r.path[i];
  }
  out << r.path.front() << ',' << r.path.back() << ',' << r.hops() << ',' << joined << ','
      << static_cast<long long>(std::llround(r.estimate_bps)) << '\n';
}

}  // namespace plcss
