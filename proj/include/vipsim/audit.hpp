#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "vipsim/asn.hpp"
#include "vipsim/error.hpp"
#include "vipsim/registry.hpp"
#include "vipsim/routing.hpp"
#include "vipsim/text.hpp"
#include "vipsim/topology.hpp"
#include "vipsim/vipzone.hpp"

namespace vipsim {

/// The routes one member exports to the collector.
struct MemberView {
  Asn member;
  std::vector<Route> routes;
  std::string snapshot;
};

/// Splits a RIB dump into one view per member present in it.
inline std::vector<MemberView> views_from_dump(const RibDump& dump, const ZoneConfig& cfg) {
  std::map<Asn, MemberView> by_member;
  for (const auto& row : dump.rows) {
    if (!cfg.is_member(row.asn)) continue;
    auto& v = by_member[row.asn];
    v.member = row.asn;
    v.snapshot = dump.snapshot;
    v.routes.push_back(row.route);
  }
  std::vector<MemberView> out;
  for (auto& [asn, v] : by_member) out.push_back(std::move(v));
  return out;
}

enum class AuditRule : std::uint8_t { FalseVerified, InvalidOrigin, TagStripped };

inline const char* to_string(AuditRule r) {
  switch (r) {
    case AuditRule::FalseVerified: return "R1-FalseVerified";
    case AuditRule::InvalidOrigin: return "R2-InvalidOrigin";
    case AuditRule::TagStripped: return "R3-TagStripped";
  }
  return "?";
}

struct AuditFinding {
  AuditRule rule = AuditRule::FalseVerified;
  /// Always a zone member.
  Asn culprit;
  /// Member whose view supplied the evidence.
  Asn observed_at;
  Route evidence;
  bool waived = false;
  std::string note;
};

/// A member's declared intent to announce a non-conformant route for `prefix`.
/// An empty snapshot applies to every snapshot.
struct Waiver {
  Asn member;
  Prefix prefix;
  std::string note;
  std::string snapshot;
};

inline Waiver register_exception(const ZoneConfig& cfg, Asn member, const Prefix& prefix, std::string note,
                                 std::string snapshot = {}) {
  if (!cfg.is_member(member)) throw Error("cannot register an exception for non-member AS " + member.str());
  return Waiver{member, prefix, std::move(note), std::move(snapshot)};
}

struct AuditReport {
  std::vector<AuditFinding> findings;
  /// Coverage gaps: checks that could not run for lack of evidence.
  std::vector<std::string> warnings;

  std::size_t unwaived() const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [](const AuditFinding& f) { return !f.waived; }));
  }
};

struct EntryPoint {
  Asn member;
  /// Distinct ASNs between the entry member and the origin, origin included.
  std::size_t outside_unique = 0;
  /// Path from the entry member to the origin.
  std::vector<Asn> segment;
};

/// The member nearest the origin on the route's path as seen by `observer`.
inline EntryPoint entry_point(const ZoneConfig& cfg, Asn observer, const Route& r) {
  std::vector<Asn> chain;
  if (r.learned_rel != LearnedRel::Self) chain.push_back(observer);
  chain.insert(chain.end(), r.path.begin(), r.path.end());
  std::set<Asn> outside;
  for (std::size_t k = chain.size(); k-- > 0;) {
    if (cfg.is_member(chain[k])) return EntryPoint{chain[k], outside.size(), {chain.begin() + k, chain.end()}};
    outside.insert(chain[k]);
  }
  // The observer is a member, so the loop always returns.
  return EntryPoint{observer, outside.size(), chain};
}

namespace detail {

inline std::vector<Asn> export_path(Asn holder, const Route& r) {
  if (r.learned_rel == LearnedRel::Self) return r.path;
  std::vector<Asn> p{holder};
  p.insert(p.end(), r.path.begin(), r.path.end());
  return p;
}

}  // namespace detail

/// Checks member views against the three conformance rules. A member is only
/// accused on evidence from some other member's view: false VERIFIED marks
/// and invalid origins are charged to the entry member seen by others, and a
/// stripped tag is charged to the member whose route lacks the tag that the
/// member it learned from still shows. Findings are deduplicated and sorted
/// by (rule, culprit, prefix).
inline AuditReport audit_views(const ZoneConfig& cfg, const RegistrySet& reg, const std::vector<MemberView>& views,
                               const std::vector<Waiver>& waivers = {}) {
  AuditReport rep;
  std::map<Asn, const MemberView*> by_member;
  for (const auto& v : views) {
    if (!cfg.is_member(v.member)) throw Error("view from non-member AS " + v.member.str());
    if (!by_member.emplace(v.member, &v).second) throw Error("two views for member AS " + v.member.str());
  }
  std::map<Asn, std::map<Prefix, const Route*>> index;
  for (const auto& v : views)
    for (const auto& r : v.routes) index[v.member][r.prefix] = &r;

  using Key = std::tuple<AuditRule, Asn, Prefix, std::vector<Asn>>;
  std::map<Key, AuditFinding> found;
  auto record = [&](AuditRule rule, Asn culprit, Asn observer, const Route& r, std::vector<Asn> segment) {
    Key k{rule, culprit, r.prefix, std::move(segment)};
    auto it = found.find(k);
    if (it == found.end() || observer < it->second.observed_at)
      found[k] = AuditFinding{rule, culprit, observer, r, false, {}};
  };
  std::set<std::string> warned;
  auto warn = [&](std::string w) {
    if (warned.insert(w).second) rep.warnings.push_back(std::move(w));
  };

  for (const auto& v : views) {
    for (const auto& r : v.routes) {
      if (r.path.empty()) continue;
      auto entry = entry_point(cfg, v.member, r);
      if (entry.member != v.member) {
        if (r.verified() && entry.outside_unique > 1) {
          bool aspa_ok = false;
          if (cfg.aspa_extension && entry.outside_unique == 2) {
            const Asn origin = r.origin();
            for (auto it = entry.segment.rbegin(); it != entry.segment.rend(); ++it) {
              if (*it != origin) {
                aspa_ok = aspa_pair_valid(reg, origin, *it) == AspaCheck::Confirmed;
                break;
              }
            }
          }
          if (!aspa_ok) record(AuditRule::FalseVerified, entry.member, v.member, r, entry.segment);
        }
        if (rov_validate(reg, r.prefix, r.origin()) == RovState::Invalid)
          record(AuditRule::InvalidOrigin, entry.member, v.member, r, entry.segment);
      }

      if (r.learned_rel == LearnedRel::Self || !r.learned_from || !cfg.is_member(*r.learned_from)) continue;
      const Asn from = *r.learned_from;
      auto bv = by_member.find(from);
      if (bv == by_member.end()) {
        warn("no view from member " + from.str() + "; cannot check tag retention at " + v.member.str());
        continue;
      }
      if (bv->second->snapshot != v.snapshot) {
        warn("snapshot mismatch between members " + from.str() + " and " + v.member.str());
        continue;
      }
      auto jt = index[from].find(r.prefix);
      if (jt == index[from].end()) continue;
      const Route& upstream = *jt->second;
      if (upstream.verified() && !r.verified() && detail::export_path(from, upstream) == r.path)
        record(AuditRule::TagStripped, v.member, v.member, r, {});
    }
  }

  for (auto& [k, f] : found) {
    for (const auto& w : waivers) {
      if (w.member != f.culprit || w.prefix != f.evidence.prefix) continue;
      if (!w.snapshot.empty()) {
        auto vit = by_member.find(f.observed_at);
        if (vit == by_member.end() || vit->second->snapshot != w.snapshot) continue;
      }
      f.waived = true;
      f.note = w.note;
      break;
    }
    rep.findings.push_back(std::move(f));
  }
  std::stable_sort(rep.findings.begin(), rep.findings.end(), [](const AuditFinding& a, const AuditFinding& b) {
    return std::tie(a.rule, a.culprit, a.evidence.prefix) < std::tie(b.rule, b.culprit, b.evidence.prefix);
  });
  return rep;
}

/// `member_asn,prefix,note[,snapshot]`.
inline std::vector<Waiver> load_waivers(std::istream& in, const ZoneConfig& cfg, const std::string& source = "<waivers>") {
  std::vector<Waiver> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != "member_asn,prefix,note" && t != "member_asn,prefix,note,snapshot")
        throw ParseError(source, lineno, "expected header 'member_asn,prefix,note[,snapshot]'");
      header = true;
      continue;
    }
    auto f = text::split(t, ',');
    if (f.size() < 3 || f.size() > 4) throw ParseError(source, lineno, "expected member_asn,prefix,note[,snapshot]");
    auto a = parse_asn(f[0]);
    auto p = parse_prefix(f[1]);
    if (!a || !p) throw ParseError(source, lineno, "invalid waiver record");
    try {
      out.push_back(register_exception(cfg, *a, *p, std::string(text::trim(f[2])),
                                       f.size() == 4 ? std::string(text::trim(f[3])) : std::string{}));
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline void write_findings_csv(std::ostream& os, const std::vector<AuditFinding>& findings) {
  os << "rule,culprit,observed_at,prefix,as_path,waived,note\n";
  for (const auto& f : findings) {
    os << to_string(f.rule) << ',' << f.culprit << ',' << f.observed_at << ',' << f.evidence.prefix << ','
       << format_path(f.evidence.path) << ',' << (f.waived ? "true" : "false") << ',' << csv_field(f.note) << '\n';
  }
}

}  // namespace vipsim
