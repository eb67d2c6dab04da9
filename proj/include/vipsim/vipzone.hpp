#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vipsim/asn.hpp"
#include "vipsim/error.hpp"
#include "vipsim/registry.hpp"
#include "vipsim/routing.hpp"
#include "vipsim/text.hpp"
#include "vipsim/topology.hpp"

namespace vipsim {

/// Where a non-member that opted in to honoring VERIFIED ranks the tag.
enum class OptInRank : std::uint8_t { AboveRelationship, BelowRelationship };

struct ZoneConfig {
  std::set<Asn> members;
  bool aspa_extension = false;
  /// Non-members that strip VERIFIED from non-member neighbors and prefer
  /// VERIFIED routes.
  std::set<Asn> honor_verified;
  OptInRank opt_in_rank = OptInRank::AboveRelationship;

  bool is_member(Asn a) const { return members.count(a) != 0; }
};

struct ZoneValidation {
  std::optional<ZoneConfig> config;
  /// Members with no provider and no member provider.
  std::vector<Asn> disconnected;
};

/// A member must be provider-free or buy transit from another member. Since
/// the c2p graph is acyclic this local rule yields a chain of members up to a
/// provider-free one. Throws on an ASN missing from the topology.
inline ZoneValidation validate_zone(const Topology& topo, const std::set<Asn>& members) {
  ZoneValidation v;
  for (auto m : members) {
    auto i = topo.find(m);
    if (!i) throw Error("zone member AS " + m.str() + " is not in the topology");
    auto provs = topo.providers_of(*i);
    if (provs.empty()) continue;
    bool ok = false;
    for (auto p : provs) ok = ok || members.count(topo.asn_at(p)) != 0;
    if (!ok) v.disconnected.push_back(m);
  }
  if (v.disconnected.empty()) v.config = ZoneConfig{members, false, {}, OptInRank::AboveRelationship};
  return v;
}

enum class Outcome : std::uint8_t { Drop, ForwardVerified, ForwardUnverified };

/// Rule that decided an import. R1 is reported when a forged tag was stripped
/// and nothing later re-verified the route.
enum class ImportRule : std::uint8_t { R1, R2, R3, R4, R5, AspaExt, R6 };

inline const char* to_string(ImportRule r) {
  switch (r) {
    case ImportRule::R1: return "R1";
    case ImportRule::R2: return "R2";
    case ImportRule::R3: return "R3";
    case ImportRule::R4: return "R4";
    case ImportRule::R5: return "R5";
    case ImportRule::AspaExt: return "ASPA-EXT";
    case ImportRule::R6: return "R6";
  }
  return "?";
}

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Drop: return "drop";
    case Outcome::ForwardVerified: return "forward-verified";
    case Outcome::ForwardUnverified: return "forward-unverified";
  }
  return "?";
}

struct ImportDecision {
  Outcome outcome = Outcome::ForwardUnverified;
  ImportRule reason = ImportRule::R6;
  /// The route to install; empty on Drop.
  std::optional<Route> route;
};

/// Perimeter processing at a zone member, in fixed order: strip forged tags
/// from non-members, drop RPKI-invalid origins, drop paths whose head the
/// neighbor may not use, keep tags set by members, verify single-AS
/// announcements, optionally verify two-AS announcements backed by an ASPA,
/// and otherwise forward without a tag.
inline ImportDecision member_import(const ZoneConfig& cfg, const RegistrySet& reg, Asn member, Asn neighbor,
                                    NeighborRel neighbor_rel, Route route) {
  const bool from_member = cfg.is_member(neighbor);
  bool stripped = false;
  if (!from_member && route.verified()) {
    route.set_verified(false);
    stripped = true;
  }
  if (rov_validate(reg, route.prefix, route.origin()) == RovState::Invalid)
    return {Outcome::Drop, ImportRule::R2, std::nullopt};
  if (!kyc_allows_asn(reg, member, neighbor, route.path.front()))
    return {Outcome::Drop, ImportRule::R3, std::nullopt};
  if (from_member && route.verified()) return {Outcome::ForwardVerified, ImportRule::R4, std::move(route)};

  const bool edge_neighbor = neighbor_rel == NeighborRel::Customer || neighbor_rel == NeighborRel::Peer;
  const auto unique = route.unique_asns();
  if (unique == 1 && (from_member || edge_neighbor)) {
    switch (verify_customer_origin(reg, member, neighbor, route.prefix, route.origin())) {
      case OriginCheck::Verified:
        route.set_verified(true);
        return {Outcome::ForwardVerified, ImportRule::R5, std::move(route)};
      case OriginCheck::Rejected:
        return {Outcome::Drop, ImportRule::R5, std::nullopt};
      case OriginCheck::Unknown:
        break;
    }
  }
  if (cfg.aspa_extension && unique == 2 && !from_member && edge_neighbor) {
    const Asn origin = route.origin();
    Asn adjacent = origin;
    for (auto it = route.path.rbegin(); it != route.path.rend(); ++it) {
      if (*it != origin) {
        adjacent = *it;
        break;
      }
    }
    if (aspa_pair_valid(reg, origin, adjacent) == AspaCheck::Confirmed) {
      route.set_verified(true);
      return {Outcome::ForwardVerified, ImportRule::AspaExt, std::move(route)};
    }
  }
  return {Outcome::ForwardUnverified, stripped ? ImportRule::R1 : ImportRule::R6, std::move(route)};
}

/// Members keep VERIFIED on every export; valley-free scoping is left to the engine.
inline std::optional<Route> member_export(const ZoneConfig&, Asn, Asn, Route route) { return route; }

inline PreferenceOrder member_preference(const ZoneConfig& cfg, Asn asn) {
  if (cfg.is_member(asn)) return PreferenceOrder::verified_first();
  if (cfg.honor_verified.count(asn)) {
    return cfg.opt_in_rank == OptInRank::AboveRelationship ? PreferenceOrder::verified_first()
                                                           : PreferenceOrder::verified_below_relationship();
  }
  return PreferenceOrder::plain();
}

/// Hook set implementing the zone rules. Holds references: `reg` and `cfg`
/// must outlive every propagation that uses the hooks.
inline PolicyHooks make_vipzone_hooks(const RegistrySet& reg, const ZoneConfig& cfg) {
  PolicyHooks h;
  h.on_import = [&reg, &cfg](Asn self, Asn from, NeighborRel rel, Route r) -> std::optional<Route> {
    if (cfg.is_member(self)) return member_import(cfg, reg, self, from, rel, std::move(r)).route;
    if (cfg.honor_verified.count(self) && !cfg.is_member(from)) r.set_verified(false);
    return r;
  };
  h.preference = [&cfg](Asn self) { return member_preference(cfg, self); };
  h.on_export = [&cfg](Asn self, Asn to, NeighborRel, Route r) -> std::optional<Route> {
    if (cfg.is_member(self)) return member_export(cfg, self, to, std::move(r));
    return r;
  };
  return h;
}

/// Zone file: `key=value` settings followed by one member ASN per line.
/// Keys: aspa_extension, honor_verified (`;`-separated), opt_in_rank
/// (above_relationship | below_relationship).
inline ZoneConfig load_zone_config(std::istream& in, const std::string& source = "<zone>") {
  ZoneConfig cfg;
  text::for_each_record(in, [&](std::size_t ln, std::string_view line) {
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      auto a = parse_asn(line);
      if (!a) throw ParseError(source, ln, "invalid member ASN");
      cfg.members.insert(*a);
      return;
    }
    auto key = text::trim(line.substr(0, eq));
    auto val = text::trim(line.substr(eq + 1));
    if (key == "aspa_extension") {
      if (val == "true") {
        cfg.aspa_extension = true;
      } else if (val == "false") {
        cfg.aspa_extension = false;
      } else {
        throw ParseError(source, ln, "aspa_extension must be true or false");
      }
    } else if (key == "honor_verified") {
      for (auto t : text::split_list(val, ';')) {
        auto a = parse_asn(t);
        if (!a) throw ParseError(source, ln, "invalid ASN in honor_verified");
        cfg.honor_verified.insert(*a);
      }
    } else if (key == "opt_in_rank") {
      if (val == "above_relationship") {
        cfg.opt_in_rank = OptInRank::AboveRelationship;
      } else if (val == "below_relationship") {
        cfg.opt_in_rank = OptInRank::BelowRelationship;
      } else {
        throw ParseError(source, ln, "unknown opt_in_rank");
      }
    } else {
      throw ParseError(source, ln, "unknown key '" + std::string(key) + "'");
    }
  });
  return cfg;
}

inline std::string serialize(const ZoneConfig& cfg) {
  std::string s = std::string("aspa_extension=") + (cfg.aspa_extension ? "true" : "false") + "\n";
  if (!cfg.honor_verified.empty()) {
    s += "honor_verified=";
    bool first = true;
    for (auto a : cfg.honor_verified) {
      if (!first) s += ';';
      s += a.str();
      first = false;
    }
    s += "\n";
    if (cfg.opt_in_rank == OptInRank::BelowRelationship) s += "opt_in_rank=below_relationship\n";
  }
  for (auto m : cfg.members) s += m.str() + "\n";
  return s;
}

}  // namespace vipsim
