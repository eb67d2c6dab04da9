#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vipsim/asn.hpp"
#include "vipsim/error.hpp"
#include "vipsim/parallel.hpp"
#include "vipsim/prefix.hpp"
#include "vipsim/text.hpp"
#include "vipsim/topology.hpp"

namespace vipsim {

/// The community token that marks a route as verified at the zone perimeter.
inline constexpr std::string_view kVerifiedTag = "VERIFIED:1";

/// How the holder of a route learned it. `Self` marks a local origination.
enum class LearnedRel : std::uint8_t { Self, Customer, Peer, Provider };

constexpr LearnedRel learned_rel(NeighborRel r) {
  switch (r) {
    case NeighborRel::Customer: return LearnedRel::Customer;
    case NeighborRel::Peer: return LearnedRel::Peer;
    case NeighborRel::Provider: return LearnedRel::Provider;
  }
  return LearnedRel::Provider;
}

inline const char* to_string(LearnedRel r) {
  switch (r) {
    case LearnedRel::Self: return "self";
    case LearnedRel::Customer: return "customer";
    case LearnedRel::Peer: return "peer";
    case LearnedRel::Provider: return "provider";
  }
  return "?";
}

inline std::optional<LearnedRel> parse_learned_rel(std::string_view s) {
  s = text::trim(s);
  if (s == "self") return LearnedRel::Self;
  if (s == "customer") return LearnedRel::Customer;
  if (s == "peer") return LearnedRel::Peer;
  if (s == "provider") return LearnedRel::Provider;
  return std::nullopt;
}

/// A route as held by one AS. The path lists the ASes the announcement
/// traversed, nearest first and origin last; it does not include the holder
/// except for local originations, whose path is the holder alone (or, for an
/// injected announcement, whatever path the injector chose).
struct Route {
  Prefix prefix;
  std::vector<Asn> path;
  std::set<std::string> communities;
  std::optional<Asn> learned_from;
  LearnedRel learned_rel = LearnedRel::Self;

  bool verified() const { return communities.count(std::string(kVerifiedTag)) != 0; }
  void set_verified(bool on) {
    if (on) {
      communities.insert(std::string(kVerifiedTag));
    } else {
      communities.erase(std::string(kVerifiedTag));
    }
  }
  Asn origin() const { return path.back(); }

  /// Number of distinct ASNs; prepending counts once.
  std::size_t unique_asns() const {
    std::vector<Asn> p = path;
    std::sort(p.begin(), p.end());
    return static_cast<std::size_t>(std::unique(p.begin(), p.end()) - p.begin());
  }

  bool operator==(const Route&) const = default;
};

/// Comparison keys, most significant first. A local origination always wins
/// before any key is consulted, and the lower neighbor ASN settles whatever
/// the listed keys leave tied.
enum class PreferenceKey : std::uint8_t { Verified, Relationship, PathLength, NeighborAsn };

struct PreferenceOrder {
  std::vector<PreferenceKey> tiers;

  static PreferenceOrder plain() {
    return {{PreferenceKey::Relationship, PreferenceKey::PathLength, PreferenceKey::NeighborAsn}};
  }
  static PreferenceOrder verified_first() {
    return {{PreferenceKey::Verified, PreferenceKey::Relationship, PreferenceKey::PathLength,
             PreferenceKey::NeighborAsn}};
  }
  static PreferenceOrder verified_below_relationship() {
    return {{PreferenceKey::Relationship, PreferenceKey::Verified, PreferenceKey::PathLength,
             PreferenceKey::NeighborAsn}};
  }

  bool operator==(const PreferenceOrder&) const = default;
};

/// True when `a` is strictly preferred over `b`.
inline bool prefer(const PreferenceOrder& order, const Route& a, const Route& b) {
  bool a_self = a.learned_rel == LearnedRel::Self;
  bool b_self = b.learned_rel == LearnedRel::Self;
  if (a_self != b_self) return a_self;
  auto rank = [](LearnedRel r) { return static_cast<int>(r); };
  for (auto key : order.tiers) {
    switch (key) {
      case PreferenceKey::Verified:
        if (a.verified() != b.verified()) return a.verified();
        break;
      case PreferenceKey::Relationship:
        if (a.learned_rel != b.learned_rel) return rank(a.learned_rel) < rank(b.learned_rel);
        break;
      case PreferenceKey::PathLength:
        if (a.path.size() != b.path.size()) return a.path.size() < b.path.size();
        break;
      case PreferenceKey::NeighborAsn:
        break;
    }
  }
  auto na = a.learned_from.value_or(Asn{});
  auto nb = b.learned_from.value_or(Asn{});
  return na < nb;
}

/// Per-AS policy callbacks. Any unset member falls back to plain
/// Gao-Rexford behavior. Callbacks must be pure: they can be invoked
/// concurrently from different prefix workers.
struct PolicyHooks {
  /// `route` arrives with the sender's path prepended; nullopt drops it.
  std::function<std::optional<Route>(Asn self, Asn from, NeighborRel from_rel, Route route)> on_import;
  std::function<PreferenceOrder(Asn self)> preference;
  /// Sees the holder's best route before prepending; nullopt suppresses.
  std::function<std::optional<Route>(Asn self, Asn to, NeighborRel to_rel, Route route)> on_export;
  /// Lets a route leave even though the valley-free export rule forbids it.
  std::function<bool(Asn self, Asn to, NeighborRel to_rel, const Route& best)> export_violation;
};

/// An announcement entering the system at `asn`. An empty path means a
/// legitimate origination (`[asn]`); a non-empty path must start with `asn`
/// and models an injected, possibly forged announcement.
struct Origination {
  Asn asn;
  Prefix prefix;
  std::vector<Asn> path;
  std::set<std::string> communities;
};

struct RibEntry {
  Route best;
  /// Imported routes plus any local origination, ordered by neighbor ASN.
  std::vector<Route> candidates;
};

struct Rib {
  std::map<Asn, std::map<Prefix, RibEntry>> per_as;

  const RibEntry* find(Asn asn, const Prefix& p) const {
    auto it = per_as.find(asn);
    if (it == per_as.end()) return nullptr;
    auto jt = it->second.find(p);
    return jt == it->second.end() ? nullptr : &jt->second;
  }

  /// The best route at `asn` for the longest prefix containing `dst`.
  const Route* longest_match(Asn asn, const Address& dst) const {
    auto it = per_as.find(asn);
    if (it == per_as.end()) return nullptr;
    const Route* out = nullptr;
    for (const auto& [p, e] : it->second)
      if (p.contains(dst) && (!out || p.length() > out->prefix.length())) out = &e.best;
    return out;
  }

  bool operator==(const Rib& o) const {
    if (per_as.size() != o.per_as.size()) return false;
    for (auto it = per_as.begin(), jt = o.per_as.begin(); it != per_as.end(); ++it, ++jt) {
      if (it->first != jt->first || it->second.size() != jt->second.size()) return false;
      for (auto a = it->second.begin(), b = jt->second.begin(); a != it->second.end(); ++a, ++b)
        if (a->first != b->first || a->second.best != b->second.best ||
            a->second.candidates != b->second.candidates)
          return false;
    }
    return true;
  }
};

class NonConvergence : public Error {
 public:
  explicit NonConvergence(std::set<Prefix> prefixes)
      : Error(message(prefixes)), prefixes_(std::move(prefixes)) {}
  const std::set<Prefix>& prefixes() const { return prefixes_; }

 private:
  static std::string message(const std::set<Prefix>& ps) {
    std::string m = "propagation did not converge for:";
    for (const auto& p : ps) m += " " + p.str();
    return m;
  }
  std::set<Prefix> prefixes_;
};

namespace detail {

inline std::size_t round_cap(const Topology& topo) { return 2 * topo.size() + 10; }

struct PrefixOutcome {
  Prefix prefix;
  std::vector<std::optional<Route>> best;
  std::vector<std::map<Asn, Route>> imported;
  std::vector<std::optional<Route>> self;
};

inline PrefixOutcome propagate_prefix(const Topology& topo, const Prefix& prefix,
                                      const std::vector<const Origination*>& origins, const PolicyHooks& hooks) {
  const auto n = static_cast<std::uint32_t>(topo.size());
  PrefixOutcome out{prefix, std::vector<std::optional<Route>>(n), std::vector<std::map<Asn, Route>>(n),
                    std::vector<std::optional<Route>>(n)};
  for (const Origination* o : origins) {
    auto i = topo.index_of(o->asn);
    if (out.self[i]) throw Error("AS " + o->asn.str() + " originates " + prefix.str() + " twice");
    Route r{prefix, o->path.empty() ? std::vector<Asn>{o->asn} : o->path, o->communities, std::nullopt,
            LearnedRel::Self};
    out.self[i] = std::move(r);
  }

  std::vector<PreferenceOrder> order(n, PreferenceOrder::plain());
  if (hooks.preference)
    for (std::uint32_t i = 0; i < n; ++i) order[i] = hooks.preference(topo.asn_at(i));

  auto select = [&](std::uint32_t i) -> std::optional<Route> {
    if (out.self[i]) return out.self[i];
    const Route* best = nullptr;
    for (const auto& [from, r] : out.imported[i])
      if (!best || prefer(order[i], r, *best)) best = &r;
    if (!best) return std::nullopt;
    return *best;
  };

  // What `i` offers to neighbor `j`, given its current best route.
  auto offer = [&](std::uint32_t i, std::uint32_t j, NeighborRel j_rel_from_i,
                   NeighborRel i_rel_from_j) -> std::optional<Route> {
    const auto& best = out.best[i];
    if (!best) return std::nullopt;
    const Asn self = topo.asn_at(i);
    const Asn to = topo.asn_at(j);
    bool allowed = best->learned_rel == LearnedRel::Self || best->learned_rel == LearnedRel::Customer ||
                   j_rel_from_i == NeighborRel::Customer;
    if (!allowed && hooks.export_violation) allowed = hooks.export_violation(self, to, j_rel_from_i, *best);
    if (!allowed) return std::nullopt;
    std::optional<Route> sent = *best;
    if (hooks.on_export) sent = hooks.on_export(self, to, j_rel_from_i, *best);
    if (!sent) return std::nullopt;
    if (best->learned_rel != LearnedRel::Self) sent->path.insert(sent->path.begin(), self);
    if (std::find(sent->path.begin(), sent->path.end(), to) != sent->path.end()) return std::nullopt;
    sent->learned_from = self;
    sent->learned_rel = learned_rel(i_rel_from_j);
    if (hooks.on_import) return hooks.on_import(to, self, i_rel_from_j, std::move(*sent));
    return sent;
  };

  std::vector<char> changed(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    out.best[i] = out.self[i];
    changed[i] = out.best[i].has_value();
  }

  std::size_t rounds = 0;
  std::vector<char> dirty(n, 0);
  for (;;) {
    bool any = std::find(changed.begin(), changed.end(), 1) != changed.end();
    if (!any) break;
    if (++rounds > round_cap(topo)) throw NonConvergence({prefix});
    std::fill(dirty.begin(), dirty.end(), 0);
    // Offers are computed from the previous round's best routes only.
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!changed[i]) continue;
      const Asn self = topo.asn_at(i);
      auto visit = [&](std::uint32_t j, NeighborRel j_from_i, NeighborRel i_from_j) {
        auto r = offer(i, j, j_from_i, i_from_j);
        auto& slot = out.imported[j];
        if (r) {
          slot[self] = std::move(*r);
        } else {
          slot.erase(self);
        }
        dirty[j] = 1;
      };
      for (auto j : topo.customers_of(i)) visit(j, NeighborRel::Customer, NeighborRel::Provider);
      for (auto j : topo.peers_of(i)) visit(j, NeighborRel::Peer, NeighborRel::Peer);
      for (auto j : topo.providers_of(i)) visit(j, NeighborRel::Provider, NeighborRel::Customer);
    }
    for (std::uint32_t j = 0; j < n; ++j) {
      changed[j] = 0;
      if (!dirty[j]) continue;
      auto nb = select(j);
      if (nb != out.best[j]) {
        out.best[j] = std::move(nb);
        changed[j] = 1;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Runs every prefix to its fixpoint under synchronous rounds: each round,
/// every AS re-imports what its neighbors exported from their previous best
/// routes, then reselects. Prefixes are independent and may be spread over
/// `workers` threads; the result does not depend on the worker count.
inline Rib propagate(const Topology& topo, const std::vector<Origination>& originations,
                     const PolicyHooks& hooks = {}, unsigned workers = 1) {
  std::map<Prefix, std::vector<const Origination*>> by_prefix;
  for (const auto& o : originations) {
    if (!topo.contains(o.asn)) throw Error("origination from unknown AS " + o.asn.str());
    if (!o.path.empty()) {
      if (o.path.front() != o.asn) throw Error("injected path must start with the injecting AS " + o.asn.str());
      std::set<Asn> uniq(o.path.begin(), o.path.end());
      if (uniq.size() != o.path.size()) throw Error("injected path for " + o.prefix.str() + " repeats an ASN");
    }
    by_prefix[o.prefix].push_back(&o);
  }
  std::vector<std::pair<Prefix, std::vector<const Origination*>>> jobs(by_prefix.begin(), by_prefix.end());
  std::vector<detail::PrefixOutcome> outcomes(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t k) {
    try {
      outcomes[k] = detail::propagate_prefix(topo, jobs[k].first, jobs[k].second, hooks);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  std::set<Prefix> stuck;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const NonConvergence&) {
      stuck.insert(jobs[k].first);
    }
  }
  if (!stuck.empty()) throw NonConvergence(std::move(stuck));

  Rib rib;
  for (auto& o : outcomes) {
    for (std::uint32_t i = 0; i < topo.size(); ++i) {
      if (!o.best[i]) continue;
      RibEntry e{std::move(*o.best[i]), {}};
      if (o.self[i]) e.candidates.push_back(*o.self[i]);
      for (auto& [from, r] : o.imported[i]) e.candidates.push_back(std::move(r));
      std::stable_sort(e.candidates.begin(), e.candidates.end(), [](const Route& a, const Route& b) {
        return a.learned_from.value_or(Asn{}) < b.learned_from.value_or(Asn{});
      });
      rib.per_as[topo.asn_at(i)].emplace(o.prefix, std::move(e));
    }
  }
  return rib;
}

enum class TraceResult : std::uint8_t { Delivered, NoRoute, Loop };

inline const char* to_string(TraceResult t) {
  switch (t) {
    case TraceResult::Delivered: return "delivered";
    case TraceResult::NoRoute: return "no-route";
    case TraceResult::Loop: return "loop";
  }
  return "?";
}

struct Trace {
  /// Source first. On Delivered the last hop is the AS holding the local
  /// origination; on Loop the repeated AS is appended once more.
  std::vector<Asn> hops;
  TraceResult result = TraceResult::NoRoute;
};

/// Forwards hop by hop using each AS's longest-prefix-match best route.
inline Trace data_plane_trace(const Rib& rib, Asn src, const Address& dst) {
  Trace t;
  std::unordered_set<Asn> seen;
  Asn cur = src;
  for (;;) {
    t.hops.push_back(cur);
    if (!seen.insert(cur).second) {
      t.result = TraceResult::Loop;
      return t;
    }
    const Route* r = rib.longest_match(cur, dst);
    if (!r) {
      t.result = TraceResult::NoRoute;
      return t;
    }
    if (r->learned_rel == LearnedRel::Self) {
      t.result = TraceResult::Delivered;
      return t;
    }
    cur = *r->learned_from;
  }
}

/// Walks the control-plane chain for exactly `p` from `asn` back to the AS
/// holding the local origination it derives from.
inline std::optional<Asn> route_source(const Rib& rib, Asn asn, const Prefix& p) {
  std::unordered_set<Asn> seen;
  Asn cur = asn;
  for (;;) {
    const RibEntry* e = rib.find(cur, p);
    if (!e || !seen.insert(cur).second) return std::nullopt;
    if (e->best.learned_rel == LearnedRel::Self) return cur;
    cur = *e->best.learned_from;
  }
}

/// One line of a RIB dump.
struct DumpRow {
  Asn asn;
  Route route;
};

struct RibDump {
  std::string snapshot;
  std::vector<DumpRow> rows;
};

inline std::string format_path(const std::vector<Asn>& path) {
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) s += ' ';
    s += path[i].str();
  }
  return s;
}

inline std::string format_communities(const std::set<std::string>& c) {
  std::string s;
  for (const auto& t : c) {
    if (!s.empty()) s += ';';
    s += t;
  }
  return s;
}

inline std::string format_dump_row(Asn asn, const Route& r) {
  return asn.str() + "|" + r.prefix.str() + "|" + format_path(r.path) + "|" + format_communities(r.communities) +
         "|" + to_string(r.learned_rel);
}

/// Writes best routes as `asn|prefix|as_path|communities|learned_rel`, sorted
/// by (asn, prefix). `only` restricts the rows to a set of ASes.
inline void write_rib_dump(std::ostream& os, const Rib& rib, const std::set<Asn>* only = nullptr,
                           const std::string& snapshot = {}) {
  if (!snapshot.empty()) os << "# snapshot=" << snapshot << "\n";
  for (const auto& [asn, table] : rib.per_as) {
    if (only && !only->count(asn)) continue;
    for (const auto& [p, e] : table) os << format_dump_row(asn, e.best) << "\n";
  }
}

inline RibDump read_rib_dump(std::istream& in, const std::string& source = "<dump>") {
  RibDump d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      constexpr std::string_view key = "snapshot=";
      auto body = text::trim(t.substr(1));
      if (body.substr(0, key.size()) == key) d.snapshot = std::string(text::trim(body.substr(key.size())));
      continue;
    }
    auto f = text::split(t, '|');
    if (f.size() != 5) throw ParseError(source, lineno, "expected asn|prefix|as_path|communities|learned_rel");
    auto asn = parse_asn(f[0]);
    if (!asn) throw ParseError(source, lineno, "invalid ASN");
    auto p = parse_prefix(f[1]);
    if (!p) throw ParseError(source, lineno, "invalid prefix");
    Route r;
    r.prefix = *p;
    for (auto tok : text::split_list(f[2], ' ')) {
      auto a = parse_asn(tok);
      if (!a) throw ParseError(source, lineno, "invalid ASN in path");
      r.path.push_back(*a);
    }
    if (r.path.empty()) throw ParseError(source, lineno, "empty AS path");
    for (auto c : text::split_list(f[3], ';')) r.communities.insert(std::string(c));
    auto rel = parse_learned_rel(f[4]);
    if (!rel) throw ParseError(source, lineno, "invalid learned_rel");
    r.learned_rel = *rel;
    if (*rel != LearnedRel::Self) r.learned_from = r.path.front();
    d.rows.push_back(DumpRow{*asn, std::move(r)});
  }
  return d;
}

/// `asn,prefix` list of legitimate originations.
inline std::vector<Origination> load_originations(std::istream& in, const std::string& source = "<originations>") {
  std::vector<Origination> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != "asn,prefix") throw ParseError(source, lineno, "expected header 'asn,prefix'");
      header = true;
      continue;
    }
    auto f = text::split(t, ',');
    if (f.size() != 2) throw ParseError(source, lineno, "expected asn,prefix");
    auto a = parse_asn(f[0]);
    auto p = parse_prefix(f[1]);
    if (!a || !p) throw ParseError(source, lineno, "invalid origination record");
    out.push_back(Origination{*a, *p, {}, {}});
  }
  return out;
}

}  // namespace vipsim
