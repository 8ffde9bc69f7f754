#pragma once

// Deployments and the PLCTM v1 trace format.
//
//   plctm 1
//   slots <N_AC>
//   subcarriers 917
//   nodes <id1> <id2> ...
//   meta <key> <value>                       (optional, any number)
//   link <tx> <rx> <slot 1-based> v1,v2,...,v917
//
// Lines starting with '#' and blank lines are ignored. Canonical output lists
// meta keys sorted, then link lines sorted by (tx, rx, slot).

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "plcss/tonemap.hpp"

namespace plcss {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Deployment {
  std::vector<NodeId> nodes;
  std::map<DirectedLink, Tonemap> links;
  std::map<std::string, std::string> metadata;

  std::size_t slot_count() const { return links.empty() ? 0 : links.begin()->second.slot_count(); }
  bool has_link(const DirectedLink& l) const { return links.contains(l); }
  const Tonemap& tonemap(const DirectedLink& l) const {
    auto it = links.find(l);
    if (it == links.end()) throw std::out_of_range("no tonemap for link " + to_string(l));
    return it->second;
  }
  std::size_t node_index(const NodeId& n) const {
    auto it = std::find(nodes.begin(), nodes.end(), n);
    if (it == nodes.end()) throw std::out_of_range("unknown node " + n);
    return static_cast<std::size_t>(it - nodes.begin());
  }

  friend bool operator==(const Deployment&, const Deployment&) = default;
};

/// Returns std::nullopt if `d` satisfies every Deployment invariant.
inline std::optional<std::string> validate_deployment(const Deployment& d) {
  if (d.nodes.size() < 2) return "deployment needs at least 2 nodes";
  std::set<NodeId> seen;
  constexpr std::string_view kSeparators = " \t\r\n,";
  for (const auto& n : d.nodes) {
    if (n.empty() || n.front() == '#' || n.find_first_of(kSeparators) != NodeId::npos)
      return "node identifier '" + n + "' is empty or contains a separator";
    if (!seen.insert(n).second) return "duplicate node " + n;
  }
  for (const auto& [k, v] : d.metadata) {
    if (k.empty() || k.find_first_of(" \t\r\n") != std::string::npos) return "metadata key '" + k + "' is not a token";
    if (v.empty() || v.find_first_of("\r\n") != std::string::npos || v.front() == ' ' || v.front() == '\t' ||
        v.back() == ' ' || v.back() == '\t')
      return "metadata value for '" + k + "' is not representable on one line";
  }
  std::size_t slots = 0;
  for (const auto& [link, tm] : d.links) {
    if (!seen.contains(link.tx) || !seen.contains(link.rx)) return "link " + to_string(link) + " names unknown node";
    if (!d.links.contains(link.reversed())) return "missing reverse link for " + to_string(link);
    if (auto v = validate_tonemap(tm)) return "link " + to_string(link) + ": " + *v;
    if (slots == 0) slots = tm.slot_count();
    if (tm.slot_count() != slots) return "slot_count disagreement on link " + to_string(link);
  }
  return std::nullopt;
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_uint(std::string_view s, unsigned long& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace detail

inline Deployment parse_trace(std::istream& in) {
  Deployment d;
  std::size_t slots = 0;
  int header = 0;  // number of header lines consumed
  std::set<NodeId> known;
  std::map<DirectedLink, std::vector<bool>> filled;
  std::map<DirectedLink, std::size_t> first_line;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;

    if (header < 4) {
      unsigned long v = 0;
      switch (header) {
        case 0:
          if (tok.size() != 2 || tok[0] != "plctm" || tok[1] != "1")
            throw ParseError(lineno, "malformed header: expected 'plctm 1'");
          break;
        case 1:
          if (tok.size() != 2 || tok[0] != "slots" || !detail::parse_uint(tok[1], v) || v < 1 || v > kMaxSlots)
            throw ParseError(lineno, "malformed header: expected 'slots <1..6>'");
          slots = v;
          break;
        case 2:
          if (tok.size() != 2 || tok[0] != "subcarriers" || tok[1] != "917")
            throw ParseError(lineno, "malformed header: expected 'subcarriers 917'");
          break;
        case 3:
          if (tok.size() < 3 || tok[0] != "nodes")
            throw ParseError(lineno, "malformed header: expected 'nodes <id> <id> ...' with at least 2 nodes");
          for (std::size_t i = 1; i < tok.size(); ++i) {
            NodeId n(tok[i]);
            if (n.find(',') != NodeId::npos) throw ParseError(lineno, "node identifier contains ','");
            if (!known.insert(n).second) throw ParseError(lineno, "duplicate node " + n);
            d.nodes.push_back(std::move(n));
          }
          break;
      }
      ++header;
      continue;
    }

    if (tok[0] == "meta") {
      if (tok.size() < 3) throw ParseError(lineno, "meta line needs a key and a value");
      // value is the remainder of the line after the key
      const auto key_end = static_cast<std::size_t>(tok[1].data() + tok[1].size() - line.data());
      auto value = line.substr(key_end);
      value.remove_prefix(std::min(value.find_first_not_of(" \t"), value.size()));
      while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.remove_suffix(1);
      d.metadata[std::string(tok[1])] = std::string(value);
      continue;
    }
    if (tok[0] != "link") throw ParseError(lineno, "unknown record '" + std::string(tok[0]) + "'");
    if (tok.size() != 5) throw ParseError(lineno, "link line needs: link <tx> <rx> <slot> <values>");

    NodeId tx(tok[1]), rx(tok[2]);
    if (!known.contains(tx)) throw ParseError(lineno, "unknown node " + tx);
    if (!known.contains(rx)) throw ParseError(lineno, "unknown node " + rx);
    if (tx == rx) throw ParseError(lineno, "link endpoints must differ");
    unsigned long slot = 0;
    if (!detail::parse_uint(tok[3], slot) || slot < 1 || slot > slots)
      throw ParseError(lineno, "slot index '" + std::string(tok[3]) + "' outside [1, " + std::to_string(slots) + "]");

    SlotMap values;
    values.reserve(kSubcarriers);
    std::string_view rest = tok[4];
    while (true) {
      const auto comma = rest.find(',');
      unsigned long v = 0;
      if (!detail::parse_uint(rest.substr(0, comma), v))
        throw ParseError(lineno, "malformed modulation value at position " + std::to_string(values.size() + 1));
      if (v > static_cast<unsigned long>(kMaxBits))
        throw ParseError(lineno, "modulation out of range (" + std::to_string(v) + ") at subcarrier " +
                                     std::to_string(values.size() + 1));
      values.push_back(static_cast<std::uint8_t>(v));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (values.size() != kSubcarriers)
      throw ParseError(lineno, "wrong subcarrier count: " + std::to_string(values.size()) + " values, expected 917");

    DirectedLink link(tx, rx);
    auto& tm = d.links[link];
    auto& mask = filled[link];
    if (tm.slots.empty()) {
      tm.slots.assign(slots, SlotMap{});
      mask.assign(slots, false);
      first_line[link] = lineno;
    }
    if (mask[slot - 1]) throw ParseError(lineno, "duplicate line for link " + to_string(link) + " slot " + std::to_string(slot));
    mask[slot - 1] = true;
    tm.slots[slot - 1] = std::move(values);
  }

  if (header < 4) throw ParseError(lineno, "malformed header: file ended after " + std::to_string(header) + " header lines");
  for (const auto& [link, mask] : filled) {
    if (std::find(mask.begin(), mask.end(), false) != mask.end())
      throw ParseError(first_line[link], "slot_count disagreement: link " + to_string(link) + " lacks some of its " +
                                             std::to_string(slots) + " slots");
    if (!d.links.contains(link.reversed()))
      throw ParseError(first_line[link], "missing reverse link for " + to_string(link));
  }
  return d;
}

inline Deployment parse_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

inline void serialize_trace(const Deployment& d, std::ostream& out) {
  if (auto v = validate_deployment(d)) throw std::invalid_argument("cannot serialize invalid deployment: " + *v);
  out << "plctm 1\n";
  out << "slots " << (d.links.empty() ? kDefaultSlots : d.slot_count()) << "\n";
  out << "subcarriers " << kSubcarriers << "\n";
  out << "nodes";
  for (const auto& n : d.nodes) out << ' ' << n;
  out << "\n";
  for (const auto& [k, v] : d.metadata) out << "meta " << k << ' ' << v << "\n";
  std::string buf;
  for (const auto& [link, tm] : d.links) {
    for (std::size_t k = 0; k < tm.slot_count(); ++k) {
      buf.clear();
      buf += "link ";
      buf += link.tx;
      buf += ' ';
      buf += link.rx;
      buf += ' ';
      buf += std::to_string(k + 1);
      buf += ' ';
      const auto& s = tm.slots[k];
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (j) buf += ',';
        if (s[j] == 10) {
          buf += "10";
        } else {
          buf += static_cast<char>('0' + s[j]);
        }
      }
      buf += '\n';
      out << buf;
    }
  }
}

inline std::string serialize_trace(const Deployment& d) {
  std::ostringstream out;
  serialize_trace(d, out);
  return out.str();
}

}  // namespace plcss
