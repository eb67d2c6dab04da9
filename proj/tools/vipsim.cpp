// vipsim command-line front end.
//
// Exit codes: 0 clean, 1 input error, 2 harm (with --fail-on-harm),
// 3 unwaived audit findings.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vipsim/vipsim.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vipsim;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitHarm = 2;
constexpr int kExitFindings = 3;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Common {
  std::string topology, roas, aspas, irr, kyc, zone;
  unsigned workers = 0;
  std::string out_dir = ".";
  std::string format = "csv";
};

/// Collects inputs, parameters and outputs for manifest.json.
class Run {
 public:
  Run(std::string command, const Common& c) : command_(std::move(command)), c_(c) {
    fs::create_directories(c_.out_dir);
    params_["format"] = c_.format;
  }

  std::string read(const std::string& role, const std::string& path) {
    std::string data = slurp(path);
    inputs_.push_back({{"role", role}, {"path", path}, {"sha256", sha256_hex(data)}});
    return data;
  }

  void param(const std::string& key, json value) { params_[key] = std::move(value); }

  void write(const std::string& name, const std::string& data) {
    auto path = fs::path(c_.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << data;
    outputs_.push_back({{"file", name}, {"sha256", sha256_hex(data)}});
  }

  unsigned workers() const { return c_.workers ? c_.workers : default_workers(); }
  bool json_format() const { return c_.format == "json"; }
  const Common& common() const { return c_; }

  void finish() {
    json m;
    m["tool"] = "vipsim";
    m["version"] = std::string(kVersion);
    m["command"] = command_;
    m["parameters"] = params_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    auto path = fs::path(c_.out_dir) / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    out << m.dump(2) << "\n";
  }

 private:
  std::string command_;
  const Common& c_;
  json inputs_ = json::array();
  json params_ = json::object();
  json outputs_ = json::array();
};

Topology topology_from(Run& run, const std::string& path) {
  if (path.empty()) throw Error("--topology is required");
  std::istringstream in(run.read("topology", path));
  return load_topology(in, path);
}

RegistrySet registry_from(Run& run) {
  const auto& c = run.common();
  RegistrySet reg;
  if (!c.roas.empty()) {
    std::istringstream in(run.read("roas", c.roas));
    load_roas(in, reg, c.roas);
  }
  if (!c.aspas.empty()) {
    std::istringstream in(run.read("aspas", c.aspas));
    load_aspas(in, reg, c.aspas);
  }
  if (!c.irr.empty()) {
    std::istringstream in(run.read("irr", c.irr));
    load_irr(in, reg, c.irr);
  }
  if (!c.kyc.empty()) {
    std::istringstream in(run.read("kyc", c.kyc));
    load_kyc(in, reg, c.kyc);
  }
  return reg;
}

ZoneConfig zone_from(Run& run, const Topology* topo, bool required) {
  const auto& c = run.common();
  if (c.zone.empty()) {
    if (required) throw Error("--zone is required");
    return {};
  }
  std::istringstream in(run.read("zone", c.zone));
  auto cfg = load_zone_config(in, c.zone);
  if (topo) {
    auto v = validate_zone(*topo, cfg.members);
    if (!v.disconnected.empty()) {
      std::string m = c.zone + ": members without a member provider:";
      for (auto a : v.disconnected) m += " " + a.str();
      throw Error(m);
    }
  }
  return cfg;
}

std::set<Asn> asn_list_file(Run& run, const std::string& role, const std::string& path) {
  std::istringstream in(run.read(role, path));
  std::set<Asn> out;
  text::for_each_record(in, [&](std::size_t ln, std::string_view line) {
    auto a = parse_asn(line);
    if (!a) throw ParseError(path, ln, "invalid ASN");
    out.insert(*a);
  });
  return out;
}

std::string join(const std::set<Asn>& s, char sep = ';') {
  std::string out;
  for (auto a : s) {
    if (!out.empty()) out += sep;
    out += a.str();
  }
  return out;
}

json asn_array(const std::set<Asn>& s) {
  json a = json::array();
  for (auto x : s) a.push_back(x.value);
  return a;
}

// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::string originations, scenario, snapshot;
  bool sweep = false;
  bool fail_on_harm = false;
};

int cmd_simulate(const Common& c, const SimulateOpts& o) {
  Run run("simulate", c);
  auto topo = topology_from(run, c.topology);
  auto reg = registry_from(run);
  auto cfg = zone_from(run, &topo, false);
  if (o.originations.empty()) throw Error("--originations is required");
  std::vector<Origination> legit;
  {
    std::istringstream in(run.read("originations", o.originations));
    legit = load_originations(in, o.originations);
  }
  for (const auto& w : check_kyc_adjacency(reg, topo)) std::cerr << "warning: " << w << "\n";
  run.param("sweep", o.sweep);
  run.param("fail_on_harm", o.fail_on_harm);
  if (!o.snapshot.empty()) run.param("snapshot", o.snapshot);

  std::optional<AttackScenario> scenario;
  if (!o.scenario.empty()) {
    std::istringstream in(run.read("scenario", o.scenario));
    scenario = load_scenario(in, o.scenario);
    validate_scenario(topo, legit, *scenario);
  }
  if (o.sweep && !scenario) throw Error("--sweep needs --scenario");

  std::vector<Origination> all = legit;
  PolicyHooks hooks = make_vipzone_hooks(reg, cfg);
  if (scenario) {
    if (auto inj = injection(*scenario)) all.push_back(*inj);
    hooks = scenario_hooks(reg, cfg, *scenario);
  }
  const Rib rib = propagate(topo, all, hooks, run.workers());
  {
    std::ostringstream os;
    write_rib_dump(os, rib, nullptr, o.snapshot);
    run.write("rib.txt", os.str());
  }

  bool harm = false;
  if (scenario) {
    auto h = run_scenario(topo, reg, cfg, legit, *scenario, nullptr, run.workers());
    harm = h.owner_harm || !h.misdirected.empty();
    std::ostringstream os;
    if (run.json_format()) {
      json j = {{"attacker", scenario->attacker.value},
                {"kind", to_string(scenario->kind)},
                {"owner_harm", h.owner_harm},
                {"misdirected", asn_array(h.misdirected)}};
      os << j.dump(2) << "\n";
      run.write("harm.json", os.str());
    } else {
      write_harm_header(os);
      write_harm_row(os, scenario->attacker, h.owner_harm, h.misdirected);
      run.write("harm.csv", os.str());
    }
    std::cout << to_string(scenario->kind) << " from AS" << scenario->attacker << ": owner_harm="
              << (h.owner_harm ? "true" : "false") << " misdirected=" << h.misdirected.size() << "\n";
  }
  if (o.sweep) {
    auto rows = sweep_attackers(topo, reg, cfg, legit, *scenario, run.workers());
    std::ostringstream os;
    if (run.json_format()) {
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back({{"attacker", r.attacker.value}, {"owner_harm", r.owner_harm}, {"misdirected", asn_array(r.misdirected)}});
      os << arr.dump(2) << "\n";
      run.write("sweep.json", os.str());
    } else {
      write_harm_header(os);
      for (const auto& r : rows) write_harm_row(os, r.attacker, r.owner_harm, r.misdirected);
      run.write("sweep.csv", os.str());
    }
    for (const auto& r : rows) harm = harm || r.owner_harm || !r.misdirected.empty();
    std::cout << "sweep: " << rows.size() << " attacker positions\n";
  }
  run.finish();
  return o.fail_on_harm && harm ? kExitHarm : 0;
}

int cmd_zone(const Common& c, const std::string& roster_path) {
  Run run("zone", c);
  auto topo = topology_from(run, c.topology);
  if (roster_path.empty()) throw Error("--roster is required");
  auto roster = asn_list_file(run, "roster", roster_path);
  auto d = derive_connected_zone(topo, roster);
  std::set<Asn> excluded;
  for (auto a : roster)
    if (!d.connected_members.count(a) && !d.unknown.count(a)) excluded.insert(a);

  ZoneConfig cfg;
  cfg.members = d.connected_members;
  run.write("zone.txt", serialize(cfg));
  std::ostringstream os;
  if (run.json_format()) {
    json j = {{"roster", roster.size()},
              {"connected_members", asn_array(d.connected_members)},
              {"attached_customers", asn_array(d.attached_customers)},
              {"excluded", asn_array(excluded)},
              {"unknown", asn_array(d.unknown)}};
    os << j.dump(2) << "\n";
    run.write("zone_report.json", os.str());
  } else {
    os << "asn,status\n";
    std::map<Asn, std::string> status;
    for (auto a : d.attached_customers) status[a] = "attached";
    for (auto a : excluded) status[a] = "excluded";
    for (auto a : d.unknown) status[a] = "unknown";
    for (auto a : d.connected_members) status[a] = "member";
    for (const auto& [a, s] : status) os << a << ',' << s << '\n';
    run.write("zone_report.csv", os.str());
  }
  run.finish();
  std::cout << "roster " << roster.size() << "\nconnected members " << d.connected_members.size()
            << "\nattached customers " << d.attached_customers.size() << "\nexcluded " << excluded.size()
            << "\nunknown " << d.unknown.size() << "\n";
  return 0;
}

std::vector<std::size_t> parse_sizes(const std::string& s, const std::string& flag) {
  std::vector<std::size_t> out;
  for (auto t : text::split_list(s, ',')) {
    std::size_t v = 0;
    auto tt = text::trim(t);
    if (tt.empty() || tt.size() > 12 || tt.find_first_not_of("0123456789") != std::string_view::npos)
      throw Error(flag + ": invalid size '" + std::string(tt) + "'");
    for (char ch : tt) v = v * 10 + static_cast<std::size_t>(ch - '0');
    out.push_back(v);
  }
  if (out.empty()) throw Error(flag + " needs at least one size");
  return out;
}

int cmd_curve(const Common& c, const std::string& order_name, const std::string& steps_arg) {
  Run run("curve", c);
  auto topo = topology_from(run, c.topology);
  GrowthOrder order;
  if (order_name == "cone") {
    order = GrowthOrder::ByConeSize;
  } else if (order_name == "greedy") {
    order = GrowthOrder::GreedyProtectedGain;
  } else {
    throw Error("--order must be cone or greedy");
  }
  std::vector<std::size_t> steps;
  if (steps_arg.empty()) {
    for (std::size_t s = 1; s <= topo.size(); ++s) steps.push_back(s);
  } else {
    steps = parse_sizes(steps_arg, "--steps");
  }
  run.param("order", order_name);
  run.param("steps", steps);
  auto curve = zone_growth_curve(topo, order, steps);
  std::ostringstream os;
  if (run.json_format()) {
    json arr = json::array();
    for (const auto& p : curve) arr.push_back({{"zone_size", p.zone_size}, {"protected_count", p.protected_count}});
    os << arr.dump(2) << "\n";
    run.write("curve.json", os.str());
  } else {
    os << "zone_size,protected_count\n";
    for (const auto& p : curve) os << p.zone_size << ',' << p.protected_count << '\n';
    run.write("curve.csv", os.str());
  }
  run.finish();
  return 0;
}

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

int cmd_local_region(const Common& c, const std::string& ix_path, const std::string& sizes_arg,
                     const std::string& customer_arg) {
  Run run("local-region", c);
  auto topo = topology_from(run, c.topology);
  if (!ix_path.empty()) {
    std::istringstream in(run.read("ix", ix_path));
    topo = with_ix_memberships(topo, load_ix_memberships(in, ix_path));
  }
  run.param("with_ix", !ix_path.empty());
  if (!customer_arg.empty()) {
    auto cust = parse_asn(customer_arg);
    if (!cust) throw Error("--customer: invalid ASN");
    auto cfg = zone_from(run, &topo, true);
    const Topology graph = ix_path.empty() ? topo : augment_with_ix_peering(topo);
    auto lr = local_region(graph, cfg, *cust);
    run.param("customer", cust->value);
    std::ostringstream os;
    if (run.json_format()) {
      json j = {{"customer", cust->value}, {"region", asn_array(lr.region)}};
      os << j.dump(2) << "\n";
      run.write("region.json", os.str());
    } else {
      os << "customer_asn,region_size,region_asns\n" << *cust << ',' << lr.region.size() << ',' << join(lr.region) << '\n';
      run.write("region.csv", os.str());
    }
    run.finish();
    std::cout << "local region of AS" << *cust << ": " << lr.region.size() << " ASes\n";
    return 0;
  }
  if (sizes_arg.empty()) throw Error("--zone-sizes or --customer is required");
  auto sizes = parse_sizes(sizes_arg, "--zone-sizes");
  run.param("zone_sizes", sizes);
  auto dist = local_region_distribution(topo, sizes, !ix_path.empty(), run.workers());
  std::ostringstream rows, summary;
  if (run.json_format()) {
    json r = json::array(), s = json::array();
    for (const auto& row : dist.rows)
      r.push_back({{"zone_size", row.zone_size}, {"customer_asn", row.customer.value}, {"region_size", row.region_size}});
    for (const auto& x : dist.summary)
      s.push_back({{"zone_size", x.zone_size}, {"customers", x.customers}, {"p10", x.p10}, {"p50", x.p50},
                   {"p90", x.p90}, {"frac_leq_1", fixed6(x.frac_leq_1)}});
    rows << r.dump(2) << "\n";
    summary << s.dump(2) << "\n";
    run.write("regions.json", rows.str());
    run.write("region_summary.json", summary.str());
  } else {
    rows << "# region_size excludes the customer itself\nzone_size,customer_asn,region_size\n";
    for (const auto& row : dist.rows) rows << row.zone_size << ',' << row.customer << ',' << row.region_size << '\n';
    summary << "zone_size,p10,p50,p90,frac_leq_1\n";
    for (const auto& x : dist.summary)
      summary << x.zone_size << ',' << x.p10 << ',' << x.p50 << ',' << x.p90 << ',' << fixed6(x.frac_leq_1) << '\n';
    run.write("regions.csv", rows.str());
    run.write("region_summary.csv", summary.str());
  }
  run.finish();
  return 0;
}

int cmd_exceptions(const Common& c, const std::vector<std::uint32_t>& only) {
  Run run("exceptions", c);
  auto topo = topology_from(run, c.topology);
  auto cfg = zone_from(run, &topo, true);
  std::vector<Asn> members;
  if (only.empty()) {
    members.assign(cfg.members.begin(), cfg.members.end());
  } else {
    for (auto v : only) members.push_back(Asn(v));
    std::sort(members.begin(), members.end());
    run.param("members", only);
  }
  auto res = routing_exceptions(topo, cfg, members, run.workers());
  std::ostringstream os;
  if (run.json_format()) {
    json arr = json::array();
    for (const auto& r : res) {
      std::set<Asn> d(r.destinations.begin(), r.destinations.end());
      arr.push_back({{"member_asn", r.member.value}, {"exception_count", r.count()}, {"destinations", asn_array(d)}});
    }
    os << arr.dump(2) << "\n";
    run.write("exceptions.json", os.str());
  } else {
    os << "member_asn,exception_count,destination_asns\n";
    for (const auto& r : res)
      os << r.member << ',' << r.count() << ',' << join({r.destinations.begin(), r.destinations.end()}) << '\n';
    run.write("exceptions.csv", os.str());
  }
  run.finish();
  return 0;
}

int cmd_audit(const Common& c, const std::vector<std::string>& view_paths, const std::string& waivers_path) {
  Run run("audit", c);
  RegistrySet reg = registry_from(run);
  auto cfg = zone_from(run, nullptr, true);
  if (view_paths.empty()) throw Error("--views is required");
  std::vector<MemberView> views;
  for (const auto& path : view_paths) {
    std::istringstream in(run.read("view", path));
    auto dump = read_rib_dump(in, path);
    std::size_t skipped = 0;
    for (const auto& row : dump.rows) skipped += cfg.is_member(row.asn) ? 0 : 1;
    if (skipped) std::cerr << "warning: " << path << ": ignored " << skipped << " rows from non-members\n";
    for (auto& v : views_from_dump(dump, cfg)) {
      for (auto& existing : views)
        if (existing.member == v.member) throw Error(path + ": second view for member AS " + v.member.str());
      views.push_back(std::move(v));
    }
  }
  std::vector<Waiver> waivers;
  if (!waivers_path.empty()) {
    std::istringstream in(run.read("waivers", waivers_path));
    waivers = load_waivers(in, cfg, waivers_path);
  }
  auto rep = audit_views(cfg, reg, views, waivers);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::ostringstream os;
  if (run.json_format()) {
    json arr = json::array();
    for (const auto& f : rep.findings)
      arr.push_back({{"rule", to_string(f.rule)},
                     {"culprit", f.culprit.value},
                     {"observed_at", f.observed_at.value},
                     {"prefix", f.evidence.prefix.str()},
                     {"as_path", format_path(f.evidence.path)},
                     {"waived", f.waived},
                     {"note", f.note}});
    os << arr.dump(2) << "\n";
    run.write("findings.json", os.str());
  } else {
    write_findings_csv(os, rep.findings);
    run.write("findings.csv", os.str());
  }
  run.finish();
  std::cout << rep.findings.size() << " findings, " << rep.unwaived() << " unwaived\n";
  return rep.unwaived() ? kExitFindings : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AS-level routing simulator for verified-route zones"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Common c;
  auto common = [&](CLI::App* sub, bool needs_topology) {
    auto* t = sub->add_option("--topology", c.topology, "AS relationship file (a|b|-1 / a|b|0)");
    if (needs_topology) t->required();
    sub->add_option("--roas", c.roas, "ROA CSV");
    sub->add_option("--aspas", c.aspas, "ASPA CSV");
    sub->add_option("--irr", c.irr, "IRR CSV");
    sub->add_option("--kyc", c.kyc, "KYC CSV");
    sub->add_option("--zone", c.zone, "zone configuration");
    sub->add_option("--workers", c.workers, "worker threads (0 = all cores)");
    sub->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
    sub->add_option("--format", c.format, "tabular output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  };

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "propagate routes, optionally under attack");
  common(simulate, true);
  simulate->add_option("--originations", sim.originations, "asn,prefix CSV")->required();
  simulate->add_option("--scenario", sim.scenario, "attack scenario file");
  simulate->add_flag("--sweep", sim.sweep, "run the scenario from every attacker position");
  simulate->add_flag("--fail-on-harm", sim.fail_on_harm, "exit 2 when any harm is observed");
  simulate->add_option("--snapshot", sim.snapshot, "snapshot id written to the RIB dump");

  std::string roster;
  auto* zone = app.add_subcommand("zone", "derive the connected zone from a roster");
  common(zone, true);
  zone->add_option("--roster", roster, "one ASN per line")->required();

  std::string order = "cone", steps;
  auto* curve = app.add_subcommand("curve", "protected-AS count as the zone grows");
  common(curve, true);
  curve->add_option("--order", order, "cone | greedy")->capture_default_str();
  curve->add_option("--steps", steps, "comma-separated zone sizes (default 1..N)");

  std::string ix, zone_sizes, customer;
  auto* region = app.add_subcommand("local-region", "local-region sizes of zone-attached customers");
  common(region, true);
  region->add_option("--ix", ix, "IX membership file (ix|asn)");
  region->add_option("--zone-sizes", zone_sizes, "comma-separated zone sizes");
  region->add_option("--customer", customer, "single customer ASN (uses --zone)");

  std::vector<std::uint32_t> exc_members;
  auto* exceptions = app.add_subcommand("exceptions", "destinations routed via a provider because of VERIFIED");
  common(exceptions, true);
  exceptions->add_option("--members", exc_members, "members to evaluate (default all)")->delimiter(',');

  std::vector<std::string> views;
  std::string waivers;
  auto* audit = app.add_subcommand("audit", "check member views against the conformance rules");
  common(audit, false);
  audit->add_option("--views", views, "RIB dump files holding member views")->required();
  audit->add_option("--waivers", waivers, "member_asn,prefix,note[,snapshot] CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(c, sim);
    if (*zone) return cmd_zone(c, roster);
    if (*curve) return cmd_curve(c, order, steps);
    if (*region) return cmd_local_region(c, ix, zone_sizes, customer);
    if (*exceptions) return cmd_exceptions(c, exc_members);
    if (*audit) return cmd_audit(c, views, waivers);
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
