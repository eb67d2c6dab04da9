#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "vipsim/asn.hpp"
#include "vipsim/error.hpp"
#include "vipsim/parallel.hpp"
#include "vipsim/registry.hpp"
#include "vipsim/routing.hpp"
#include "vipsim/text.hpp"
#include "vipsim/topology.hpp"
#include "vipsim/vipzone.hpp"

namespace vipsim {

enum class AttackKind : std::uint8_t { OriginHijack, ForgedOriginPathHijack, SubPrefixHijack, RouteLeak };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::OriginHijack: return "origin_hijack";
    case AttackKind::ForgedOriginPathHijack: return "forged_origin";
    case AttackKind::SubPrefixHijack: return "subprefix_hijack";
    case AttackKind::RouteLeak: return "route_leak";
  }
  return "?";
}

inline std::optional<AttackKind> parse_attack_kind(std::string_view s) {
  s = text::trim(s);
  if (s == "origin_hijack" || s == "OriginHijack") return AttackKind::OriginHijack;
  if (s == "forged_origin" || s == "ForgedOriginPathHijack") return AttackKind::ForgedOriginPathHijack;
  if (s == "subprefix_hijack" || s == "SubPrefixHijack") return AttackKind::SubPrefixHijack;
  if (s == "route_leak" || s == "RouteLeak") return AttackKind::RouteLeak;
  return std::nullopt;
}

/// For SubPrefixHijack `victim_prefix` is the attacked more-specific block.
/// For ForgedOriginPathHijack an empty `forged_path` means `[victim_origin]`.
struct AttackScenario {
  AttackKind kind = AttackKind::OriginHijack;
  Asn attacker;
  Prefix victim_prefix;
  Asn victim_origin;
  std::vector<Asn> forged_path;
  std::optional<Asn> leaked_from;
  /// The injected announcement carries a VERIFIED tag of its own making.
  bool forge_verified = false;
};

struct AsOutcome {
  Asn asn;
  std::optional<Asn> next_hop;
  /// AS holding the origination the selected route derives from.
  std::optional<Asn> source;
  bool verified = false;
  bool misdirected = false;
};

struct HarmReport {
  bool owner_harm = false;
  /// Never contains the attacker itself.
  std::set<Asn> misdirected;
  std::vector<AsOutcome> per_as;
};

/// Throws vipsim::Error describing the first shape problem found.
inline void validate_scenario(const Topology& topo, const std::vector<Origination>& legit, const AttackScenario& s) {
  auto fail = [](const std::string& why) { throw Error("invalid scenario: " + why); };
  if (!topo.contains(s.attacker)) fail("attacker AS " + s.attacker.str() + " not in topology");
  if (!topo.contains(s.victim_origin)) fail("victim AS " + s.victim_origin.str() + " not in topology");
  if (s.attacker == s.victim_origin) fail("attacker and victim are the same AS");
  switch (s.kind) {
    case AttackKind::OriginHijack:
      break;
    case AttackKind::ForgedOriginPathHijack: {
      if (!s.forged_path.empty()) {
        if (s.forged_path.back() != s.victim_origin) fail("forged path must end with the victim origin");
        if (std::find(s.forged_path.begin(), s.forged_path.end(), s.attacker) != s.forged_path.end())
          fail("attacker may only appear at the head of the forged path");
        std::set<Asn> u(s.forged_path.begin(), s.forged_path.end());
        if (u.size() != s.forged_path.size()) fail("forged path repeats an ASN");
      }
      break;
    }
    case AttackKind::SubPrefixHijack: {
      bool covered = false;
      for (const auto& o : legit)
        covered = covered || (o.asn == s.victim_origin && o.prefix.contains(s.victim_prefix) &&
                              o.prefix.length() < s.victim_prefix.length());
      if (!covered) fail("sub-prefix is not strictly inside a prefix the victim originates");
      break;
    }
    case AttackKind::RouteLeak: {
      if (!s.leaked_from) fail("route leak needs leaked_from");
      if (topo.relation(s.attacker, *s.leaked_from) != NeighborRel::Provider)
        fail("leaked_from must be a provider of the leaker");
      break;
    }
  }
}

/// The announcement the attacker injects, if the scenario has one.
inline std::optional<Origination> injection(const AttackScenario& s) {
  if (s.kind == AttackKind::RouteLeak) return std::nullopt;
  Origination o{s.attacker, s.victim_prefix, {}, {}};
  if (s.kind == AttackKind::ForgedOriginPathHijack) {
    o.path.push_back(s.attacker);
    if (s.forged_path.empty()) {
      o.path.push_back(s.victim_origin);
    } else {
      o.path.insert(o.path.end(), s.forged_path.begin(), s.forged_path.end());
    }
  }
  if (s.forge_verified) o.communities.insert(std::string(kVerifiedTag));
  return o;
}

/// Vipzone hooks plus, for a leak, the leaker's one-edge export violation:
/// the route learned from `leaked_from` goes out to the leaker's other providers.
inline PolicyHooks scenario_hooks(const RegistrySet& reg, const ZoneConfig& cfg, const AttackScenario& s) {
  PolicyHooks h = make_vipzone_hooks(reg, cfg);
  if (s.kind == AttackKind::RouteLeak) {
    h.export_violation = [leaker = s.attacker, from = *s.leaked_from, p = s.victim_prefix](
                             Asn self, Asn to, NeighborRel to_rel, const Route& best) {
      return self == leaker && best.prefix == p && best.learned_from == from && to_rel == NeighborRel::Provider &&
             to != from;
    };
  }
  return h;
}

namespace detail {

// True when `chain` (holder first) carries traffic from one of the leaker's
// other providers into the leaker.
inline bool crosses_leak(const Topology& topo, const std::vector<Asn>& chain, Asn leaker, Asn from) {
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (chain[i + 1] != leaker || chain[i] == from) continue;
    if (topo.relation(leaker, chain[i]) == NeighborRel::Provider) return true;
  }
  return false;
}

}  // namespace detail

/// Runs the scenario through the zone rules and classifies the outcome.
/// Traffic is traced toward the lowest address of `victim_prefix`. `watch`
/// limits which ASes count toward owner harm (all ASes when null).
inline HarmReport run_scenario(const Topology& topo, const RegistrySet& reg, const ZoneConfig& cfg,
                               const std::vector<Origination>& legit, const AttackScenario& s,
                               const std::set<Asn>* watch = nullptr, unsigned workers = 1) {
  validate_scenario(topo, legit, s);
  std::vector<Origination> all = legit;
  if (auto inj = injection(s)) all.push_back(*inj);
  const auto hooks = scenario_hooks(reg, cfg, s);
  const Rib rib = propagate(topo, all, hooks, workers);
  const Address dst = s.victim_prefix.lowest_address();

  HarmReport h;
  for (auto asn : topo.asns()) {
    AsOutcome row{asn, std::nullopt, std::nullopt, false, false};
    if (const RibEntry* e = rib.find(asn, s.victim_prefix)) {
      row.next_hop = e->best.learned_from;
      row.source = route_source(rib, asn, s.victim_prefix);
      row.verified = e->best.verified();
      bool watched = !watch || watch->count(asn);
      if (watched && asn != s.attacker) {
        if (s.kind == AttackKind::RouteLeak) {
          std::vector<Asn> chain{asn};
          chain.insert(chain.end(), e->best.path.begin(), e->best.path.end());
          h.owner_harm = h.owner_harm || detail::crosses_leak(topo, chain, s.attacker, *s.leaked_from);
        } else {
          h.owner_harm = h.owner_harm || row.source == s.attacker;
        }
      }
    }
    if (asn != s.attacker) {
      auto t = data_plane_trace(rib, asn, dst);
      if (s.kind == AttackKind::RouteLeak) {
        row.misdirected = detail::crosses_leak(topo, t.hops, s.attacker, *s.leaked_from);
      } else {
        row.misdirected = t.result == TraceResult::Delivered && t.hops.back() == s.attacker;
      }
      if (row.misdirected) h.misdirected.insert(asn);
    }
    h.per_as.push_back(row);
  }
  return h;
}

struct SweepRow {
  Asn attacker;
  bool owner_harm = false;
  std::set<Asn> misdirected;
};

/// Candidate attacker positions for a sweep built from `base`. Leaks need a
/// leaker whose baseline best route comes from one provider while it has
/// another; those pairs are derived from a clean run.
inline std::vector<AttackScenario> sweep_scenarios(const Topology& topo, const RegistrySet& reg, const ZoneConfig& cfg,
                                                   const std::vector<Origination>& legit, const AttackScenario& base,
                                                   unsigned workers = 1) {
  std::vector<AttackScenario> out;
  std::optional<Rib> clean;
  if (base.kind == AttackKind::RouteLeak) clean = propagate(topo, legit, make_vipzone_hooks(reg, cfg), workers);
  for (auto a : topo.asns()) {
    if (a == base.victim_origin) continue;
    AttackScenario s = base;
    s.attacker = a;
    if (s.kind == AttackKind::ForgedOriginPathHijack &&
        std::find(s.forged_path.begin(), s.forged_path.end(), a) != s.forged_path.end())
      continue;
    if (s.kind == AttackKind::RouteLeak) {
      const RibEntry* e = clean->find(a, s.victim_prefix);
      if (!e || e->best.learned_rel != LearnedRel::Provider || topo.providers(a).size() < 2) continue;
      s.leaked_from = e->best.learned_from;
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// run_scenario for every candidate attacker position, in ascending ASN order.
inline std::vector<SweepRow> sweep_attackers(const Topology& topo, const RegistrySet& reg, const ZoneConfig& cfg,
                                             const std::vector<Origination>& legit, const AttackScenario& base,
                                             unsigned workers = 1) {
  auto scenarios = sweep_scenarios(topo, reg, cfg, legit, base, workers);
  std::vector<SweepRow> rows(scenarios.size());
  std::vector<std::exception_ptr> errors(scenarios.size());
  parallel_for(scenarios.size(), workers, [&](std::size_t k) {
    try {
      auto h = run_scenario(topo, reg, cfg, legit, scenarios[k]);
      rows[k] = SweepRow{scenarios[k].attacker, h.owner_harm, std::move(h.misdirected)};
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

inline void write_harm_header(std::ostream& os) { os << "attacker,owner_harm,misdirected_count,misdirected_asns\n"; }

inline void write_harm_row(std::ostream& os, Asn attacker, bool owner_harm, const std::set<Asn>& misdirected) {
  os << attacker << ',' << (owner_harm ? "true" : "false") << ',' << misdirected.size() << ',';
  bool first = true;
  for (auto a : misdirected) {
    if (!first) os << ';';
    os << a;
    first = false;
  }
  os << '\n';
}

/// Key-value scenario file: kind, attacker, victim_prefix, victim_origin,
/// forged_path (space- or `;`-separated), leaked_from, forge_verified.
inline AttackScenario load_scenario(std::istream& in, const std::string& source = "<scenario>") {
  AttackScenario s;
  bool have_kind = false, have_attacker = false, have_prefix = false, have_victim = false;
  std::size_t last = 0;
  text::for_each_record(in, [&](std::size_t ln, std::string_view line) {
    last = ln;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, ln, "expected key=value");
    auto key = text::trim(line.substr(0, eq));
    auto val = text::trim(line.substr(eq + 1));
    auto asn = [&](std::string_view v) {
      auto a = parse_asn(v);
      if (!a) throw ParseError(source, ln, "invalid ASN '" + std::string(v) + "'");
      return *a;
    };
    if (key == "kind") {
      auto k = parse_attack_kind(val);
      if (!k) throw ParseError(source, ln, "unknown attack kind '" + std::string(val) + "'");
      s.kind = *k;
      have_kind = true;
    } else if (key == "attacker") {
      s.attacker = asn(val);
      have_attacker = true;
    } else if (key == "victim_prefix") {
      auto p = parse_prefix(val);
      if (!p) throw ParseError(source, ln, "invalid prefix");
      s.victim_prefix = *p;
      have_prefix = true;
    } else if (key == "victim_origin") {
      s.victim_origin = asn(val);
      have_victim = true;
    } else if (key == "forged_path") {
      std::string v(val);
      std::replace(v.begin(), v.end(), ';', ' ');
      for (auto t : text::split_list(v, ' ')) s.forged_path.push_back(asn(t));
    } else if (key == "leaked_from") {
      if (!val.empty()) s.leaked_from = asn(val);
    } else if (key == "forge_verified") {
      if (val != "true" && val != "false") throw ParseError(source, ln, "forge_verified must be true or false");
      s.forge_verified = val == "true";
    } else {
      throw ParseError(source, ln, "unknown key '" + std::string(key) + "'");
    }
  });
  if (!have_kind || !have_attacker || !have_prefix || !have_victim)
    throw ParseError(source, last, "scenario needs kind, attacker, victim_prefix and victim_origin");
  return s;
}

}  // namespace vipsim
