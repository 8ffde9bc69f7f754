#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "plcss/generator.hpp"
#include "plcss/prng.hpp"
#include "plcss/spectrum_sharing.hpp"
#include "plcss/trace_io.hpp"
#include "support.hpp"

using namespace plcss;

namespace {

std::string values_line(std::size_t count, int v) {
  std::string s;
  for (std::size_t j = 0; j < count; ++j) {
    if (j) s += ',';
    s += std::to_string(v);
  }
  return s;
}

std::string two_node_text(std::size_t slots = 5) {
  std::string t = "plctm 1\nslots " + std::to_string(slots) + "\nsubcarriers 917\nnodes A B\n";
  for (const char* l : {"A B", "B A"})
    for (std::size_t k = 1; k <= slots; ++k) t += std::string("link ") + l + " " + std::to_string(k) + " " + values_line(917, 4) + "\n";
  return t;
}

std::size_t error_line(const std::string& text) {
  try {
    parse_trace(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "expected a parse error";
  return 0;
}

std::string error_text(const std::string& text) {
  try {
    parse_trace(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(TraceIo, MinimalTwoNodeFile) {
  const auto d = parse_trace(two_node_text());
  EXPECT_EQ(d.nodes, (std::vector<NodeId>{"A", "B"}));
  EXPECT_EQ(d.links.size(), 2u);
  EXPECT_EQ(d.slot_count(), 5u);
  EXPECT_EQ(d.tonemap(DirectedLink("A", "B")), Tonemap::constant(4));
}

TEST(TraceIo, CommentsBlankLinesAndMeta) {
  std::string t = two_node_text();
  t.insert(t.find("link"), "# a comment\n\nmeta site basement  lab \nmeta seed 9\n");
  t = "# leading comment\n" + t;
  const auto d = parse_trace(t);
  EXPECT_EQ(d.metadata.at("site"), "basement  lab");
  EXPECT_EQ(d.metadata.at("seed"), "9");
}

TEST(TraceIo, CrLfLineEndingsAccepted) {
  std::string t = two_node_text(), crlf;
  for (char c : t) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  EXPECT_EQ(parse_trace(crlf), parse_trace(t));
}

TEST(TraceIo, ShortLinkLineNamesItsLine) {
  std::string t = two_node_text();
  const auto pos = t.find("link A B 3 ");
  const auto end = t.find('\n', pos);
  t.replace(pos, end - pos, "link A B 3 " + values_line(916, 4));
  EXPECT_EQ(error_line(t), 7u);
  EXPECT_NE(error_text(t).find("wrong subcarrier count: 916"), std::string::npos);
}

TEST(TraceIo, HeaderErrors) {
  EXPECT_EQ(error_line("plctm 2\n"), 1u);
  EXPECT_EQ(error_line("plctm 1\nslots 7\n"), 2u);
  EXPECT_EQ(error_line("plctm 1\nslots 5\nsubcarriers 916\n"), 3u);
  EXPECT_EQ(error_line("plctm 1\nslots 5\nsubcarriers 917\nnodes A\n"), 4u);
  EXPECT_EQ(error_line("plctm 1\nslots 5\nsubcarriers 917\nnodes A A\n"), 4u);
  EXPECT_NE(error_text("plctm 1\nslots 5\n").find("malformed header"), std::string::npos);
}

TEST(TraceIo, LinkErrors) {
  const std::string head = "plctm 1\nslots 1\nsubcarriers 917\nnodes A B\n";
  const std::string ok = values_line(917, 2);
  EXPECT_NE(error_text(head + "link A C 1 " + ok + "\n").find("unknown node C"), std::string::npos);
  EXPECT_NE(error_text(head + "link A B 2 " + ok + "\n").find("slot index"), std::string::npos);
  EXPECT_NE(error_text(head + "link A B 1 " + values_line(916, 2) + ",11\n").find("modulation out of range (11)"),
            std::string::npos);
  EXPECT_NE(error_text(head + "link A B 1 " + values_line(916, 2) + ",x\n").find("malformed"), std::string::npos);
  EXPECT_NE(error_text(head + "link A B 1 " + values_line(916, 2) + ", 2\n").find("link line"), std::string::npos);

  const std::string dup = head + "link A B 1 " + ok + "\nlink A B 1 " + ok + "\n";
  EXPECT_EQ(error_line(dup), 6u);
  EXPECT_NE(error_text(dup).find("duplicate"), std::string::npos);

  EXPECT_NE(error_text(head + "link A B 1 " + ok + "\n").find("missing reverse link"), std::string::npos);
  EXPECT_NE(error_text(head + "bogus\n").find("unknown record"), std::string::npos);
}

TEST(TraceIo, MissingSlotIsASlotCountDisagreement) {
  std::string t = two_node_text();
  const auto pos = t.find("link B A 5 ");
  t.erase(pos, t.find('\n', pos) - pos + 1);
  const auto msg = error_text(t);
  EXPECT_NE(msg.find("slot_count disagreement"), std::string::npos);
  EXPECT_NE(msg.find("B->A"), std::string::npos);
}

TEST(TraceIo, SerializeIsCanonical) {
  // Links given out of order, node list in a non-sorted order.
  Deployment d;
  d.nodes = {"Z", "A", "M"};
  std::mt19937_64 g(3);
  for (auto [a, b] : {std::pair{"Z", "A"}, {"M", "Z"}, {"A", "Z"}, {"Z", "M"}})
    d.links.emplace(DirectedLink(a, b), plcss::testing::random_tonemap(g, 2));
  d.metadata = {{"b", "2"}, {"a", "one two"}};

  const std::string s = serialize_trace(d);
  EXPECT_EQ(s, serialize_trace(d));
  EXPECT_EQ(s.rfind("plctm 1\nslots 2\nsubcarriers 917\nnodes Z A M\nmeta a one two\nmeta b 2\nlink A Z 1 ", 0), 0u);
  EXPECT_LT(s.find("link A Z 2 "), s.find("link M Z 1 "));
  EXPECT_LT(s.find("link M Z 2 "), s.find("link Z A 1 "));
  EXPECT_LT(s.find("link Z A 2 "), s.find("link Z M 1 "));
  EXPECT_EQ(parse_trace(s), d);
}

TEST(TraceIo, SerializeRejectsInvalidDeployment) {
  Deployment d;
  d.nodes = {"A", "B"};
  d.links.emplace(DirectedLink("A", "B"), Tonemap::constant(1));
  EXPECT_THROW(serialize_trace(d), std::invalid_argument);
  d.links.emplace(DirectedLink("B", "A"), Tonemap::constant(1, 4));
  EXPECT_THROW(serialize_trace(d), std::invalid_argument);
  d.links[DirectedLink("B", "A")] = Tonemap::constant(1);
  d.nodes = {"A", "B", "bad id"};
  EXPECT_THROW(serialize_trace(d), std::invalid_argument);
  d.nodes = {"A", "B"};
  d.metadata["k"] = " padded";
  EXPECT_THROW(serialize_trace(d), std::invalid_argument);
  d.metadata["k"] = "fine";
  EXPECT_NO_THROW(serialize_trace(d));
}

TEST(TraceIo, TwelveLinksGiveTwelveTimesSlotsLines) {
  for (std::size_t slots : {1u, 5u, 6u}) {
    const auto d = generate_deployment(4, GeneratorProfile{}, slots);
    const auto s = serialize_trace(d);
    std::size_t lines = 0;
    for (std::size_t p = s.find("\nlink "); p != std::string::npos; p = s.find("\nlink ", p + 1)) ++lines;
    EXPECT_EQ(lines, 12 * slots);
  }
}

// PRNG outputs are frozen from an independent Python implementation
// (tests/oracles/mac_oracle.py, class Rng).
TEST(Prng, FrozenOutputs) {
  EXPECT_EQ(Lcg64::stream_seed(1, 0), 0x910a2dec89025cc1ULL);
  auto r = Lcg64::stream(1, 0);
  EXPECT_EQ(r.next(), 2580781537u);
  EXPECT_EQ(r.next(), 2133813185u);
  EXPECT_EQ(r.next(), 448484325u);
  EXPECT_EQ(r.next(), 387582564u);

  auto u = Lcg64::stream(42, 3);
  const std::vector<std::uint32_t> want{9, 1, 4, 9, 6, 2, 0, 0};
  for (auto w : want) EXPECT_EQ(u.uniform(10), w);
}

TEST(Prng, RangesAndErrors) {
  auto r = Lcg64::stream(5, 5);
  for (int i = 0; i < 1000; ++i) {
    const int v = r.uniform_int(-3, 3);
    EXPECT_GE(v, -3);
    EXPECT_LE(v, 3);
    const double x = r.unit();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_THROW(r.uniform(0), std::invalid_argument);
  EXPECT_THROW(r.uniform_int(2, 1), std::invalid_argument);
  EXPECT_NE(Lcg64::stream_seed(5, 0), Lcg64::stream_seed(5, 1));
}

TEST(Generator, UniformTopQualityIsAllTen) {
  GeneratorProfile p;
  p.kind = ProfileKind::uniform;
  p.base_quality = 10;
  p.asymmetry_noise = 0;
  const auto d = generate_deployment(2, p);
  ASSERT_EQ(d.links.size(), 2u);
  for (const auto& [l, tm] : d.links) EXPECT_EQ(tm, Tonemap::constant(10));
}

TEST(Generator, DeterministicPerSeed) {
  for (auto kind : {ProfileKind::uniform, ProfileKind::complementary, ProfileKind::interference_notched,
                    ProfileKind::asymmetric}) {
    GeneratorProfile p;
    p.kind = kind;
    p.notch_count = 2;
    p.seed = 77;
    EXPECT_EQ(serialize_trace(generate_deployment(4, p)), serialize_trace(generate_deployment(4, p)));
    auto q = p;
    q.seed = 78;
    if (kind != ProfileKind::uniform || p.asymmetry_noise > 0)
      EXPECT_NE(serialize_trace(generate_deployment(4, p)), serialize_trace(generate_deployment(4, q)));
  }
}

TEST(Generator, EveryProfileIsValidAndLegal) {
  const std::set<int> legal(kLegalBits.begin(), kLegalBits.end());
  for (auto kind : {ProfileKind::uniform, ProfileKind::complementary, ProfileKind::interference_notched,
                    ProfileKind::asymmetric}) {
    for (int n : {2, 3, 5}) {
      GeneratorProfile p;
      p.kind = kind;
      p.notch_count = 3;
      p.notch_width = 25;
      p.asymmetry_noise = 2;
      const auto d = generate_deployment(n, p, 6);
      EXPECT_FALSE(validate_deployment(d).has_value());
      EXPECT_EQ(d.links.size(), static_cast<std::size_t>(n * (n - 1)));
      EXPECT_EQ(d.metadata.at("profile"), profile_name(kind));
      EXPECT_EQ(d.metadata.at("prng"), kPrngName);
      for (const auto& [l, tm] : d.links)
        for (const auto& s : tm.slots)
          for (auto v : s) EXPECT_TRUE(legal.contains(v)) << int{v};
    }
  }
}

TEST(Generator, NotchesZeroContiguousBands) {
  GeneratorProfile p;
  p.kind = ProfileKind::interference_notched;
  p.base_quality = 8;
  p.asymmetry_noise = 0;
  p.notch_count = 2;
  p.notch_width = 30;
  const auto d = generate_deployment(2, p, 1);
  const auto& s = d.tonemap(DirectedLink("N1", "N2")).slots[0];
  std::size_t zeros = 0;
  for (auto v : s) zeros += v == 0;
  // Jitter never reaches zero from level 6+, so only the notches are dark.
  EXPECT_EQ(zeros, 60u);
  // Without per-direction noise both directions share the notch layout.
  const auto& r = d.tonemap(DirectedLink("N2", "N1")).slots[0];
  for (std::size_t j = 0; j < kSubcarriers; ++j) EXPECT_EQ(s[j] == 0, r[j] == 0);
}

TEST(Generator, ComplementaryBandsAreDisjoint) {
  const auto d = generate_deployment(4, GeneratorProfile{});
  const DirectedLink a("N1", "N2"), b("N3", "N4");
  const auto& sa = d.tonemap(a).slots[0];
  const auto& sb = d.tonemap(b).slots[0];
  for (std::size_t j = 0; j < kSubcarriers; ++j) EXPECT_FALSE(sa[j] >= 8 && sb[j] >= 8) << j;

  SSPolicy pol;
  pol.beta = 2;
  EXPECT_GT(gain(sa, sb, eligible_indices(diff_vector(sa, sb), 2)), 0);
  EXPECT_GT(build_decision_table(d, pol).allocation_count(), 0u);
}

TEST(Generator, RejectsBadInput) {
  GeneratorProfile p;
  EXPECT_THROW(generate_deployment(1, p), std::invalid_argument);
  EXPECT_THROW(generate_deployment(3, p, 0), std::invalid_argument);
  EXPECT_THROW(generate_deployment(3, p, 7), std::invalid_argument);
  p.notch_count = 10;
  p.notch_width = 92;
  EXPECT_THROW(generate_deployment(3, p), std::invalid_argument);
  p.notch_width = 91;
  EXPECT_NO_THROW(generate_deployment(3, p));
  p.base_quality = 11;
  EXPECT_THROW(generate_deployment(3, p), std::invalid_argument);
  EXPECT_THROW(parse_profile("noisy"), std::invalid_argument);
  EXPECT_EQ(parse_profile("interference-notched"), ProfileKind::interference_notched);
}

TEST(Generator, LegalSnapping) {
  EXPECT_EQ(snap_to_legal(-2), 0);
  EXPECT_EQ(snap_to_legal(5), 4);
  EXPECT_EQ(snap_to_legal(7), 6);
  EXPECT_EQ(snap_to_legal(9), 8);
  EXPECT_EQ(snap_to_legal(14), 10);
  EXPECT_EQ(step_down(10), 8);
  EXPECT_EQ(step_down(1), 0);
  EXPECT_EQ(step_down(0), 0);
}

TEST(TraceIoProperties, RoundTripGeneratedDeployments) {
  int i = 0;
  for (auto kind : {ProfileKind::uniform, ProfileKind::complementary, ProfileKind::interference_notched,
                    ProfileKind::asymmetric}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed, ++i) {
      GeneratorProfile p;
      p.kind = kind;
      p.seed = seed;
      p.notch_count = static_cast<int>(seed % 3);
      const auto d = generate_deployment(2 + i % 4, p, 1 + static_cast<std::size_t>(i) % 6);
      const auto text = serialize_trace(d);
      const auto back = parse_trace(text);
      EXPECT_EQ(back, d);
      EXPECT_EQ(serialize_trace(back), text);
    }
  }
}
