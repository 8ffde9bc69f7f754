// plcss: generate deployments, inspect tonemaps, run MAC simulations with and
// without spectrum sharing, sweep beta and plan relay routes.
//
// Exit status: 0 success, 1 usage, 2 input parse/validation, 3 runtime.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "plcss/plcss.hpp"

namespace {

using namespace plcss;

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::array<std::string_view, 23> kConfigKeys{
    "nodes", "profile", "base_quality", "notch_count", "notch_width", "asymmetry_noise", "seed", "slots",
    "beta", "betas", "top_m", "max_share_fraction", "duration_us", "ss", "flows", "reeval_period_us", "out",
    "trace", "fec", "ber", "symbol_us", "overhead", "min_rate"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Flat `key = value` file; '#' starts a comment line.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError(path + ": line " + std::to_string(n) + ": expected key = value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end())
      throw UsageError(path + ": line " + std::to_string(n) + ": unknown config key '" + key + "'");
    if (value.empty()) throw InputError(path + ": line " + std::to_string(n) + ": empty value for '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::string flag_for(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

/// Output sink: "-" is stdout, anything else a file that must be fully written.
class Sink {
 public:
  explicit Sink(const std::string& path) : path_(path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw OutputError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    stream().flush();
    if (!stream()) throw OutputError("failed writing " + path_);
    if (file_) file_->close();
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
};

Deployment load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open trace " + path);
  try {
    return parse_trace(in);
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

struct GeneratorArgs {
  int nodes = 4;
  std::string profile = "complementary";
  GeneratorProfile p;
  int slots = static_cast<int>(kDefaultSlots);
};

struct PhyArgs {
  std::string fec = "16/21";
  PhyParams p;

  PhyParams params() const {
    PhyParams out = p;
    out.fec_rate = fec == "1/2" ? FecRate::half : FecRate::sixteen_21;
    out.validate();
    return out;
  }
};

struct ScenarioArgs {
  std::string trace;
  GeneratorArgs gen;
  SSPolicy policy;
  long long duration_us = 1000000;
  long long reeval_period_us = 0;
  std::string flows = "all";
  std::string ss = "on";
};

void add_generator_options(CLI::App* app, GeneratorArgs& g) {
  app->add_option("--nodes", g.nodes, "Number of nodes N1..Nn")->check(CLI::Range(2, 1000))->capture_default_str();
  app->add_option("--profile", g.profile, "uniform, complementary, interference-notched or asymmetric")
      ->check(CLI::IsMember({"uniform", "complementary", "interference-notched", "asymmetric"}))
      ->capture_default_str();
  app->add_option("--base-quality", g.p.base_quality, "Background modulation level in bits")
      ->check(CLI::Range(0, kMaxBits))
      ->capture_default_str();
  app->add_option("--notch-count", g.p.notch_count, "Zeroed bands per link")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--notch-width", g.p.notch_width, "Subcarriers per notch")->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--asymmetry-noise", g.p.asymmetry_noise, "Per-direction perturbation in bits")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--seed", g.p.seed, "Seed for generation and simulation")->capture_default_str();
  app->add_option("--slots", g.slots, "AC line cycle slots per tonemap")
      ->check(CLI::Range(1, static_cast<int>(kMaxSlots)))
      ->capture_default_str();
}

void add_phy_options(CLI::App* app, PhyArgs& a) {
  app->add_option("--fec", a.fec, "FEC code rate")->check(CLI::IsMember({"16/21", "1/2"}))->capture_default_str();
  app->add_option("--ber", a.p.bit_error_rate, "Bit error rate")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app->add_option("--symbol-us", a.p.symbol_interval_us, "OFDM symbol interval in microseconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--overhead", a.p.protocol_overhead, "Protocol overhead fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

void add_scenario_options(CLI::App* app, ScenarioArgs& s) {
  app->add_option("--trace", s.trace, "Read the deployment from a trace instead of generating it");
  add_generator_options(app, s.gen);
  app->add_option("--top-m", s.policy.top_m, "Candidates kept per primary and slot")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--max-share-fraction", s.policy.max_share_fraction, "Largest share of subcarriers a primary yields")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--duration-us", s.duration_us, "Simulated time in microseconds")
      ->check(CLI::Range(1LL, 1000000000000LL))
      ->capture_default_str();
  app->add_option("--reeval-period-us", s.reeval_period_us, "Full-spectrum re-evaluation period, 0 disables")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--flows", s.flows, "'all' or comma-separated tx:rx pairs")->capture_default_str();
}

Deployment scenario_deployment(const ScenarioArgs& s) {
  if (!s.trace.empty()) return load_trace(s.trace);
  GeneratorProfile p = s.gen.p;
  p.kind = parse_profile(s.gen.profile);
  try {
    return generate_deployment(s.gen.nodes, p, static_cast<std::size_t>(s.gen.slots));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

std::vector<DirectedLink> parse_flows(const std::string& spec, const Deployment& d) {
  if (spec == "all") return all_links(d);
  std::vector<DirectedLink> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InputError("flow '" + item + "' is not tx:rx");
    const NodeId tx = item.substr(0, colon), rx = item.substr(colon + 1);
    if (tx == rx) throw InputError("flow '" + item + "' has tx equal to rx");
    DirectedLink l(tx, rx);
    if (!d.has_link(l)) throw InputError("flow '" + item + "' is not a traced link");
    if (std::find(out.begin(), out.end(), l) != out.end()) throw InputError("flow '" + item + "' listed twice");
    out.push_back(l);
  }
  if (out.empty()) throw InputError("empty flow list");
  return out;
}

MacParams scenario_mac(const ScenarioArgs& s) {
  MacParams mac;
  mac.reeval_period_us = static_cast<double>(s.reeval_period_us);
  return mac;
}

int cmd_generate(const GeneratorArgs& g, const std::string& out) {
  GeneratorProfile p = g.p;
  p.kind = parse_profile(g.profile);
  Deployment d;
  try {
    d = generate_deployment(g.nodes, p, static_cast<std::size_t>(g.slots));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  Sink sink(out);
  serialize_trace(d, sink.stream());
  sink.close();
  if (out != "-") {
    std::cout << "nodes " << d.nodes.size() << "\nlinks " << d.links.size() << "\nslots " << d.slot_count() << '\n';
    for (const auto& [k, v] : d.metadata) std::cout << k << ' ' << v << '\n';
  }
  return kOk;
}

int cmd_analyze(const std::string& trace, const PhyArgs& phy, const std::string& out) {
  const Deployment d = load_trace(trace);
  const PhyParams p = phy.params();
  std::map<std::pair<NodeId, NodeId>, double> pair_asym;
  for (const auto& a : asymmetry_distribution(d)) pair_asym[{a.a, a.b}] = a.asymmetry;

  Sink sink(out);
  auto& os = sink.stream();
  os << "link_tx,link_rx,phy_rate_bps,expected_throughput_bps,asymmetry,normalized_asymmetry\n";
  for (const auto& [link, tm] : d.links) {
    double rate = 0.0;
    for (std::size_t k = 0; k < tm.slot_count(); ++k) rate += phy_rate(tm, k, p);
    rate /= static_cast<double>(tm.slot_count());
    const bool fwd = d.node_index(link.tx) < d.node_index(link.rx);
    const double a = pair_asym.at(fwd ? std::pair{link.tx, link.rx} : std::pair{link.rx, link.tx});
    os << link.tx << ',' << link.rx << ',' << std::llround(rate) << ',' << std::llround(expected_throughput(tm, p))
       << ',' << format_value(a) << ',' << format_value(a / kMaxSlotBits) << '\n';
  }
  sink.close();
  return kOk;
}

struct SimulateOutputs {
  std::string out = "-";
  std::string metrics_out;
  std::string events;
  std::string table_out;
};

int cmd_simulate(const ScenarioArgs& s, const SimulateOutputs& o) {
  const Deployment d = scenario_deployment(s);
  const auto flows = parse_flows(s.flows, d);
  const MacParams mac = scenario_mac(s);
  const bool ss = s.ss == "on";

  std::optional<SSDecisionTable> table;
  if (ss) table = build_decision_table(d, s.policy);
  if (!o.table_out.empty()) {
    if (!table) throw UsageError("--table-out needs --ss on");
    Sink t(o.table_out);
    write_decision_table_csv(*table, t.stream());
    t.close();
  }

  const bool record = !o.events.empty();
  const auto r = run_simulation(d, table ? &*table : nullptr, mac, s.policy, flows,
                                static_cast<double>(s.duration_us), s.gen.p.seed, record);

  Sink sink(o.out);
  auto& os = sink.stream();
  os << "link_tx,link_rx,success_primary,success_secondary,collisions,aborted,normalized_throughput\n";
  for (const auto& [link, t] : r.links)
    os << link.tx << ',' << link.rx << ',' << t.success_primary << ',' << t.success_secondary << ',' << t.collisions
       << ',' << t.aborted << ',' << format_value(normalized_throughput(r, link, mac)) << '\n';
  sink.close();

  const auto f = fairness(r, mac);
  if (!o.metrics_out.empty()) {
    Sink m(o.metrics_out);
    write_metrics_csv(f, m.stream());
    m.close();
  }
  if (record) {
    Sink e(o.events);
    write_event_log_csv(r.events, e.stream());
    e.close();
  }
  std::cerr << "aggregate " << format_value(f.aggregate_throughput) << " jfi " << format_value(f.jfi) << " fsse "
            << format_value(f.fsse) << '\n';
  return kOk;
}

std::vector<int> parse_betas(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    int v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || p != item.data() + item.size() || v < 0)
      throw UsageError("--betas: '" + item + "' is not a non-negative integer");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--betas needs at least one value");
  return out;
}

int cmd_sweep(const ScenarioArgs& s, const std::vector<int>& betas, const std::string& out) {
  const Deployment d = scenario_deployment(s);
  const auto flows = parse_flows(s.flows, d);
  const MacParams mac = scenario_mac(s);
  const auto duration = static_cast<double>(s.duration_us);
  const auto seed = s.gen.p.seed;

  const auto base = run_simulation(d, nullptr, mac, s.policy, flows, duration, seed);
  std::vector<std::future<GainReport>> jobs;
  for (int b : betas) {
    jobs.push_back(std::async(std::launch::async, [&, b] {
      SSPolicy pol = s.policy;
      pol.beta = b;
      const auto table = build_decision_table(d, pol);
      return compare_runs(base, run_simulation(d, &table, mac, pol, flows, duration, seed), mac);
    }));
  }

  Sink sink(out);
  auto& os = sink.stream();
  os << "beta,aggregate_gain_pct,jfi_delta,fsse_delta\n";
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const auto g = jobs[i].get();
    os << betas[i] << ',' << format_value(g.aggregate_gain_pct) << ',' << format_value(g.jfi_delta) << ','
       << format_value(g.fsse_delta) << '\n';
  }
  sink.close();
  return kOk;
}

int cmd_route(const std::string& trace, const PhyArgs& phy, const std::string& src, const std::string& dst,
              double min_rate, const std::string& out) {
  if (src == dst) throw UsageError("--src and --dst must differ");
  const Deployment d = load_trace(trace);
  for (const auto& n : {src, dst})
    if (std::find(d.nodes.begin(), d.nodes.end(), n) == d.nodes.end()) throw InputError("unknown node " + n);
  const auto route = best_route(build_graph(d, phy.params(), min_rate), src, dst);
  Sink sink(out);
  write_route_csv(route, sink.stream());
  sink.close();
  return kOk;
}

/// Splices config values in right after the subcommand name so explicit
/// flags, which come later, win. Keys the subcommand does not take are skipped.
std::vector<std::string> expand_config(std::vector<std::string> args, const CLI::App& app) {
  if (args.size() < 2) return args;
  const CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[1]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (path.empty()) return args;
  std::vector<std::string> injected;
  for (auto& [key, value] : read_config(path)) {
    const auto flag = flag_for(key);
    if (sub->get_option_no_throw(flag) == nullptr) continue;
    injected.push_back(flag);
    injected.push_back(value);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

int run(int argc, char** argv) {
  CLI::App app{"Powerline tonemap analysis and spectrum-sharing simulator"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  const std::string config_help = "Flat key = value file; explicit flags override it";

  GeneratorArgs gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic deployment trace");
  add_generator_options(generate, gen);
  generate->add_option("--out", gen_out, "Trace file to write ('-' for stdout)")->required();
  generate->add_option("--config")->description(config_help)->type_name("FILE");

  std::string an_trace, an_out = "-";
  PhyArgs an_phy;
  auto* analyze = app.add_subcommand("analyze", "Per-link PHY rates, expected throughput and asymmetry");
  analyze->add_option("--trace", an_trace, "Trace file")->required();
  add_phy_options(analyze, an_phy);
  analyze->add_option("--out", an_out, "CSV output ('-' for stdout)")->capture_default_str();
  analyze->add_option("--config")->description(config_help)->type_name("FILE");

  ScenarioArgs sim;
  SimulateOutputs sim_out;
  auto* simulate = app.add_subcommand("simulate", "Run the CSMA/CA simulator with or without spectrum sharing");
  add_scenario_options(simulate, sim);
  simulate->add_option("--beta", sim.policy.beta, "Minimum per-subcarrier advantage in bits")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--ss", sim.ss, "Spectrum sharing")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  simulate->add_option("--out", sim_out.out, "Per-link CSV ('-' for stdout)")->capture_default_str();
  simulate->add_option("--metrics-out", sim_out.metrics_out, "Fairness metrics CSV");
  simulate->add_option("--events", sim_out.events, "Event log CSV");
  simulate->add_option("--table-out", sim_out.table_out, "Decision table CSV");
  simulate->add_option("--config")->description(config_help)->type_name("FILE");

  ScenarioArgs sw;
  std::string betas = "2,4,6,8";
  std::string sw_out = "-";
  auto* sweep = app.add_subcommand("sweep", "Compare SS against plain CSMA/CA across beta values");
  add_scenario_options(sweep, sw);
  sweep->add_option("--betas", betas, "Comma-separated beta values")->capture_default_str();
  sweep->add_option("--out", sw_out, "CSV output ('-' for stdout)")->capture_default_str();
  sweep->add_option("--config")->description(config_help)->type_name("FILE");

  std::string rt_trace, rt_src, rt_dst, rt_out = "-";
  double rt_min_rate = 0.0;
  PhyArgs rt_phy;
  auto* route = app.add_subcommand("route", "Best relay path by summed per-bit airtime");
  route->add_option("--trace", rt_trace, "Trace file")->required();
  route->add_option("--src", rt_src, "Source node")->required();
  route->add_option("--dst", rt_dst, "Destination node")->required();
  route->add_option("--min-rate", rt_min_rate, "Drop links below this rate (b/s)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_phy_options(route, rt_phy);
  route->add_option("--out", rt_out, "CSV output ('-' for stdout)")->capture_default_str();
  route->add_option("--config")->description(config_help)->type_name("FILE");

  std::vector<std::string> args(argv, argv + argc);
  args = expand_config(std::move(args), app);
  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*generate) return cmd_generate(gen, gen_out);
  if (*analyze) return cmd_analyze(an_trace, an_phy, an_out);
  if (*simulate) return cmd_simulate(sim, sim_out);
  if (*sweep) {
    sw.ss = "on";
    return cmd_sweep(sw, parse_betas(betas), sw_out);
  }
  return cmd_route(rt_trace, rt_phy, rt_src, rt_dst, rt_min_rate, rt_out);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "plcss: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    std::cerr << "plcss: " << e.what() << '\n';
    return kInput;
  } catch (const Unreachable& e) {
    std::cerr << "plcss: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::invalid_argument& e) {
    std::cerr << "plcss: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "plcss: " << e.what() << '\n';
    return kRuntime;
  }
}
