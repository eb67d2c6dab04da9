#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vipsim/asn.hpp"
#include "vipsim/error.hpp"
#include "vipsim/prefix.hpp"
#include "vipsim/text.hpp"
#include "vipsim/topology.hpp"

namespace vipsim {

struct Roa {
  Prefix prefix;
  Asn origin;
  std::optional<int> max_length;

  /// Longest announcement this ROA authorizes.
  int effective_max_length() const { return max_length.value_or(prefix.length()); }

  friend auto operator<=>(const Roa&, const Roa&) = default;
};

enum class RovState : std::uint8_t { Valid, Invalid, NotFound };
enum class AspaCheck : std::uint8_t { Confirmed, Contradicted, NoRecord };
enum class OriginCheck : std::uint8_t { Verified, Rejected, Unknown };

struct AspaRecord {
  Asn customer;
  std::set<Asn> providers;
};

/// Out-of-band knowledge a member holds about one directly attached neighbor.
struct KycEntry {
  /// ASNs the neighbor may legitimately place first in a path. Absent means
  /// only the neighbor's own ASN.
  std::optional<std::set<Asn>> allowed_asns;
  std::set<Prefix> allowed_prefixes;
};

/// ROAs, ASPA records, authenticated IRR entries and per-edge KYC lists.
/// Treated as read-only once a simulation starts.
class RegistrySet {
 public:
  void add_roa(Roa roa) {
    if (roa.max_length) {
      if (*roa.max_length < roa.prefix.length() || *roa.max_length > bit_width(roa.prefix.family()))
        throw Error("ROA " + roa.prefix.str() + " has maxLength " + std::to_string(*roa.max_length) +
                    " outside [" + std::to_string(roa.prefix.length()) + ", " +
                    std::to_string(bit_width(roa.prefix.family())) + "]");
    }
    roas_[roa.prefix].push_back(std::move(roa));
    ++roa_count_;
  }

  void add_aspa(AspaRecord rec) {
    if (rec.providers.empty()) throw Error("ASPA for AS " + rec.customer.str() + " lists no providers");
    if (rec.providers.count(rec.customer)) throw Error("ASPA for AS " + rec.customer.str() + " lists itself");
    if (aspas_.count(rec.customer)) throw Error("duplicate ASPA record for AS " + rec.customer.str());
    aspas_.emplace(rec.customer, std::move(rec));
  }

  void add_irr(Asn asn, Prefix p) { irr_[asn].insert(p); }

  void set_kyc(Asn member, Asn neighbor, KycEntry entry) { kyc_[{member, neighbor}] = std::move(entry); }

  std::size_t roa_count() const { return roa_count_; }
  const std::map<Prefix, std::vector<Roa>>& roas() const { return roas_; }
  const std::map<Asn, AspaRecord>& aspas() const { return aspas_; }
  const std::map<Asn, std::set<Prefix>>& irr() const { return irr_; }
  const std::map<std::pair<Asn, Asn>, KycEntry>& kyc() const { return kyc_; }

  const KycEntry* kyc_for(Asn member, Asn neighbor) const {
    auto it = kyc_.find({member, neighbor});
    return it == kyc_.end() ? nullptr : &it->second;
  }

  const AspaRecord* aspa_for(Asn customer) const {
    auto it = aspas_.find(customer);
    return it == aspas_.end() ? nullptr : &it->second;
  }

  bool irr_lists(Asn asn, const Prefix& p) const {
    auto it = irr_.find(asn);
    return it != irr_.end() && it->second.count(p) != 0;
  }

  /// ROAs whose prefix contains `p`, shortest covering prefix first.
  std::vector<const Roa*> covering(const Prefix& p) const {
    std::vector<const Roa*> out;
    if (roas_.empty()) return out;
    for (int len = 0; len <= p.length(); ++len) {
      auto it = roas_.find(p.truncated(len));
      if (it == roas_.end()) continue;
      for (const auto& r : it->second) out.push_back(&r);
    }
    return out;
  }

 private:
  std::map<Prefix, std::vector<Roa>> roas_;
  std::size_t roa_count_ = 0;
  std::map<Asn, AspaRecord> aspas_;
  std::map<Asn, std::set<Prefix>> irr_;
  std::map<std::pair<Asn, Asn>, KycEntry> kyc_;
};

/// Route origin validation with containment coverage and maxLength bounds.
inline RovState rov_validate(const RegistrySet& reg, const Prefix& p, Asn origin) {
  auto cover = reg.covering(p);
  if (cover.empty()) return RovState::NotFound;
  for (const Roa* r : cover)
    if (r->origin == origin && p.length() <= r->effective_max_length()) return RovState::Valid;
  return RovState::Invalid;
}

inline AspaCheck aspa_pair_valid(const RegistrySet& reg, Asn customer, Asn alleged_provider) {
  const auto* rec = reg.aspa_for(customer);
  if (!rec) return AspaCheck::NoRecord;
  return rec->providers.count(alleged_provider) ? AspaCheck::Confirmed : AspaCheck::Contradicted;
}

/// Whether `member`'s KYC knowledge lets `neighbor` put `asn` at the head of a path.
inline bool kyc_allows_asn(const RegistrySet& reg, Asn member, Asn neighbor, Asn asn) {
  const auto* k = reg.kyc_for(member, neighbor);
  if (!k || !k->allowed_asns) return asn == neighbor;
  return k->allowed_asns->count(asn) != 0;
}

/// Checks a single-AS announcement from a directly attached neighbor.
/// An RPKI-invalid origin is rejected before any positive source is consulted.
inline OriginCheck verify_customer_origin(const RegistrySet& reg, Asn member, Asn neighbor, const Prefix& p,
                                          Asn origin) {
  auto rov = rov_validate(reg, p, origin);
  if (rov == RovState::Invalid) return OriginCheck::Rejected;
  const auto* k = reg.kyc_for(member, neighbor);
  if (k && k->allowed_asns && !k->allowed_asns->count(origin)) return OriginCheck::Rejected;
  if (rov == RovState::Valid) return OriginCheck::Verified;
  if (reg.irr_lists(origin, p)) return OriginCheck::Verified;
  if (k && k->allowed_prefixes.count(p)) return OriginCheck::Verified;
  return OriginCheck::Unknown;
}

/// KYC keys that do not name adjacent ASes in `topo`.
inline std::vector<std::string> check_kyc_adjacency(const RegistrySet& reg, const Topology& topo) {
  std::vector<std::string> problems;
  for (const auto& [key, entry] : reg.kyc()) {
    if (!topo.relation(key.first, key.second))
      problems.push_back("KYC entry " + key.first.str() + "->" + key.second.str() + " names non-adjacent ASes");
  }
  return problems;
}

namespace detail {

// Data lines are numbered after the header so error messages stay accurate.
template <typename Fn>
void for_each_csv_row(std::istream& in, const std::string& source, std::string_view header, std::size_t fields,
                      Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!have_header) {
      if (t != header) throw ParseError(source, lineno, "expected header '" + std::string(header) + "'");
      have_header = true;
      continue;
    }
    auto f = text::split(t, ',');
    if (f.size() != fields)
      throw ParseError(source, lineno, "expected " + std::to_string(fields) + " comma-separated fields");
    fn(lineno, f);
  }
  if (!have_header) throw ParseError(source, lineno, "missing header '" + std::string(header) + "'");
}

inline Asn asn_field(std::string_view f, const std::string& source, std::size_t lineno) {
  auto a = parse_asn(f);
  if (!a) throw ParseError(source, lineno, "invalid ASN '" + std::string(text::trim(f)) + "'");
  return *a;
}

inline Prefix prefix_field(std::string_view f, const std::string& source, std::size_t lineno) {
  auto p = parse_prefix(f);
  if (!p) throw ParseError(source, lineno, "invalid or non-canonical prefix '" + std::string(text::trim(f)) + "'");
  return *p;
}

}  // namespace detail

/// `prefix,maxlen,asn`; an empty maxlen means absent.
inline void load_roas(std::istream& in, RegistrySet& reg, const std::string& source = "<roas>") {
  detail::for_each_csv_row(in, source, "prefix,maxlen,asn", 3, [&](std::size_t ln, const auto& f) {
    Roa roa{detail::prefix_field(f[0], source, ln), detail::asn_field(f[2], source, ln), std::nullopt};
    auto ml = text::trim(f[1]);
    if (!ml.empty()) {
      int v = 0;
      for (char c : ml) {
        if (c < '0' || c > '9' || v > 1000) throw ParseError(source, ln, "invalid maxlen");
        v = v * 10 + (c - '0');
      }
      roa.max_length = v;
    }
    try {
      reg.add_roa(std::move(roa));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, ln, e.what());
    }
  });
}

/// `customer_asn,provider_asns` with `;`-separated providers.
inline void load_aspas(std::istream& in, RegistrySet& reg, const std::string& source = "<aspas>") {
  detail::for_each_csv_row(in, source, "customer_asn,provider_asns", 2, [&](std::size_t ln, const auto& f) {
    AspaRecord rec{detail::asn_field(f[0], source, ln), {}};
    for (auto p : text::split_list(f[1], ';')) rec.providers.insert(detail::asn_field(p, source, ln));
    try {
      reg.add_aspa(std::move(rec));
    } catch (const Error& e) {
      throw ParseError(source, ln, e.what());
    }
  });
}

/// `asn,prefix`.
inline void load_irr(std::istream& in, RegistrySet& reg, const std::string& source = "<irr>") {
  detail::for_each_csv_row(in, source, "asn,prefix", 2, [&](std::size_t ln, const auto& f) {
    reg.add_irr(detail::asn_field(f[0], source, ln), detail::prefix_field(f[1], source, ln));
  });
}

/// `member_asn,neighbor_asn,allowed_asns,allowed_prefixes`; empty list = absent.
inline void load_kyc(std::istream& in, RegistrySet& reg, const std::string& source = "<kyc>") {
  detail::for_each_csv_row(in, source, "member_asn,neighbor_asn,allowed_asns,allowed_prefixes", 4,
                           [&](std::size_t ln, const auto& f) {
                             KycEntry e;
                             auto asns = text::split_list(f[2], ';');
                             if (!asns.empty()) {
                               e.allowed_asns.emplace();
                               for (auto a : asns) e.allowed_asns->insert(detail::asn_field(a, source, ln));
                             }
                             for (auto p : text::split_list(f[3], ';'))
                               e.allowed_prefixes.insert(detail::prefix_field(p, source, ln));
                             reg.set_kyc(detail::asn_field(f[0], source, ln), detail::asn_field(f[1], source, ln),
                                         std::move(e));
                           });
}

inline const char* to_string(RovState s) {
  switch (s) {
    case RovState::Valid: return "valid";
    case RovState::Invalid: return "invalid";
    case RovState::NotFound: return "not-found";
  }
  return "?";
}

}  // namespace vipsim
