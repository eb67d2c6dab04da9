#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <tuple>
#include <vector>

#include "vipsim/asn.hpp"
#include "vipsim/error.hpp"
#include "vipsim/parallel.hpp"
#include "vipsim/registry.hpp"
#include "vipsim/routing.hpp"
#include "vipsim/topology.hpp"
#include "vipsim/vipzone.hpp"

namespace vipsim {

struct ZoneDerivation {
  std::set<Asn> input_roster;
  std::set<Asn> connected_members;
  /// Non-members with at least one provider in the connected zone.
  std::set<Asn> attached_customers;
  /// Roster entries that do not appear in the topology.
  std::set<Asn> unknown;
};

/// ASes outside `zone` that buy transit from at least one zone AS.
inline std::set<Asn> attached_customers(const Topology& topo, const std::set<Asn>& zone) {
  std::set<Asn> out;
  for (auto m : zone) {
    auto i = topo.find(m);
    if (!i) continue;
    for (auto c : topo.customers_of(*i)) {
      auto a = topo.asn_at(c);
      if (!zone.count(a)) out.insert(a);
    }
  }
  return out;
}

/// Grows a connected zone from the provider-free roster members downward,
/// admitting a roster AS once one of its providers is already in.
inline ZoneDerivation derive_connected_zone(const Topology& topo, const std::set<Asn>& roster) {
  ZoneDerivation d;
  d.input_roster = roster;
  std::vector<char> in_roster(topo.size(), 0), in_zone(topo.size(), 0);
  for (auto a : roster) {
    auto i = topo.find(a);
    if (!i) {
      d.unknown.insert(a);
      continue;
    }
    in_roster[*i] = 1;
  }
  std::vector<std::uint32_t> stack;
  for (std::uint32_t i = 0; i < topo.size(); ++i) {
    if (in_roster[i] && topo.providers_of(i).empty()) {
      in_zone[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    auto i = stack.back();
    stack.pop_back();
    for (auto c : topo.customers_of(i)) {
      if (in_roster[c] && !in_zone[c]) {
        in_zone[c] = 1;
        stack.push_back(c);
      }
    }
  }
  for (std::uint32_t i = 0; i < topo.size(); ++i)
    if (in_zone[i]) d.connected_members.insert(topo.asn_at(i));
  d.attached_customers = attached_customers(topo, d.connected_members);
  return d;
}

enum class GrowthOrder : std::uint8_t { ByConeSize, GreedyProtectedGain };

struct CurvePoint {
  std::size_t zone_size = 0;
  std::size_t protected_count = 0;
  bool operator==(const CurvePoint&) const = default;
};

namespace detail {

/// Incremental |zone ∪ attached customers|.
class ProtectedCounter {
 public:
  explicit ProtectedCounter(const Topology& topo) : topo_(topo), member_(topo.size(), 0), prot_(topo.size(), 0) {}

  void add(std::uint32_t i) {
    member_[i] = 1;
    mark(i);
    for (auto c : topo_.customers_of(i)) mark(c);
  }
  std::size_t gain(std::uint32_t i) const {
    std::size_t g = prot_[i] ? 0 : 1;
    for (auto c : topo_.customers_of(i)) g += prot_[c] ? 0 : 1;
    return g;
  }
  bool is_member(std::uint32_t i) const { return member_[i] != 0; }
  std::size_t count() const { return count_; }

 private:
  void mark(std::uint32_t i) {
    if (!prot_[i]) {
      prot_[i] = 1;
      ++count_;
    }
  }
  const Topology& topo_;
  std::vector<char> member_;
  std::vector<char> prot_;
  std::size_t count_ = 0;
};

}  // namespace detail

/// ASes sorted by descending customer-cone size, lower ASN first on ties.
inline std::vector<Asn> cone_size_order(const Topology& topo) {
  auto sizes = customer_cone_sizes(topo);
  std::vector<std::uint32_t> idx(topo.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return sizes[a] > sizes[b]; });
  std::vector<Asn> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(topo.asn_at(i));
  return out;
}

/// The first `k` ASes of the cone-size order.
inline std::set<Asn> top_by_cone_size(const Topology& topo, std::size_t k) {
  auto order = cone_size_order(topo);
  order.resize(std::min(k, order.size()));
  return {order.begin(), order.end()};
}

/// Zone-member selection sequence under `order`, `limit` entries long.
inline std::vector<Asn> growth_sequence(const Topology& topo, GrowthOrder order, std::size_t limit) {
  limit = std::min(limit, topo.size());
  if (order == GrowthOrder::ByConeSize) {
    auto seq = cone_size_order(topo);
    seq.resize(limit);
    return seq;
  }
  // Lazy greedy: stored gains only ever overestimate because protection
  // never shrinks, so a popped entry whose gain is still current is the argmax.
  auto cones = customer_cone_sizes(topo);
  detail::ProtectedCounter counter(topo);
  using Key = std::tuple<std::size_t, std::size_t, std::int64_t, std::uint32_t>;
  std::priority_queue<Key> heap;
  for (std::uint32_t i = 0; i < topo.size(); ++i)
    heap.emplace(counter.gain(i), cones[i], -static_cast<std::int64_t>(topo.asn_at(i).value), i);
  std::vector<Asn> seq;
  while (seq.size() < limit && !heap.empty()) {
    auto [g, cone, neg, i] = heap.top();
    heap.pop();
    auto now = counter.gain(i);
    if (now != g) {
      heap.emplace(now, cone, neg, i);
      continue;
    }
    counter.add(i);
    seq.push_back(topo.asn_at(i));
  }
  return seq;
}

/// Protected-AS count (members plus their attached customers) at each
/// requested zone size. Sizes beyond the AS count are clamped.
inline std::vector<CurvePoint> zone_growth_curve(const Topology& topo, GrowthOrder order,
                                                 const std::vector<std::size_t>& steps) {
  if (!std::is_sorted(steps.begin(), steps.end())) throw Error("zone sizes must be ascending");
  std::size_t max_step = steps.empty() ? 0 : steps.back();
  auto seq = growth_sequence(topo, order, max_step);
  detail::ProtectedCounter counter(topo);
  std::vector<CurvePoint> out;
  std::size_t added = 0;
  for (auto s : steps) {
    while (added < std::min(s, seq.size())) counter.add(topo.index_of(seq[added++]));
    out.push_back(CurvePoint{s, counter.count()});
  }
  return out;
}

struct LocalRegion {
  Asn customer;
  std::set<Asn> region;
};

/// ASes whose announcements can reach `customer` over valley-free paths that
/// avoid every zone member: its own cone, its peers and their cones, and
/// recursively each non-member provider together with everything that
/// provider hears from outside the zone.
inline LocalRegion local_region(const Topology& topo, const ZoneConfig& cfg, Asn customer) {
  auto root = topo.find(customer);
  if (!root) throw Error("unknown AS " + customer.str());
  if (cfg.is_member(customer)) throw Error("AS " + customer.str() + " is a zone member");
  std::vector<char> member(topo.size(), 0);
  for (auto m : cfg.members)
    if (auto i = topo.find(m)) member[*i] = 1;

  std::vector<char> in_region(topo.size(), 0), descended(topo.size(), 0), climbed(topo.size(), 0);
  std::vector<std::uint32_t> stack;
  auto descend = [&](std::uint32_t x) {
    if (descended[x]) return;
    descended[x] = 1;
    stack.assign(1, x);
    while (!stack.empty()) {
      auto i = stack.back();
      stack.pop_back();
      for (auto c : topo.customers_of(i)) {
        if (member[c] || descended[c]) continue;
        descended[c] = 1;
        in_region[c] = 1;
        stack.push_back(c);
      }
    }
  };
  auto hear_locally = [&](std::uint32_t x) {
    descend(x);
    for (auto p : topo.peers_of(x)) {
      if (member[p]) continue;
      in_region[p] = 1;
      descend(p);
    }
  };
  hear_locally(*root);
  std::vector<std::uint32_t> up;
  for (auto p : topo.providers_of(*root))
    if (!member[p]) up.push_back(p);
  while (!up.empty()) {
    auto h = up.back();
    up.pop_back();
    if (climbed[h]) continue;
    climbed[h] = 1;
    in_region[h] = 1;
    hear_locally(h);
    for (auto p : topo.providers_of(h))
      if (!member[p] && !climbed[p]) up.push_back(p);
  }
  LocalRegion lr{customer, {}};
  for (std::uint32_t i = 0; i < topo.size(); ++i)
    if (in_region[i] && i != *root) lr.region.insert(topo.asn_at(i));
  return lr;
}

struct RegionRow {
  std::size_t zone_size = 0;
  Asn customer;
  std::size_t region_size = 0;
};

struct RegionSummary {
  std::size_t zone_size = 0;
  std::size_t customers = 0;
  std::size_t p10 = 0;
  std::size_t p50 = 0;
  std::size_t p90 = 0;
  double frac_leq_1 = 0.0;
};

struct RegionDistribution {
  std::vector<RegionRow> rows;
  std::vector<RegionSummary> summary;
};

/// Nearest-rank quantile of a sorted sample.
inline std::size_t nearest_rank(const std::vector<std::size_t>& sorted, double q) {
  if (sorted.empty()) return 0;
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

/// Local-region sizes of every attached customer for zones built from the
/// largest customer cones. With `with_ix` the regions are computed on the
/// IX-augmented graph; zone membership still follows cone size.
inline RegionDistribution local_region_distribution(const Topology& topo, const std::vector<std::size_t>& zone_sizes,
                                                    bool with_ix, unsigned workers = 1) {
  const Topology augmented = with_ix ? augment_with_ix_peering(topo) : Topology{};
  const Topology& graph = with_ix ? augmented : topo;
  auto order = cone_size_order(topo);
  RegionDistribution dist;
  for (auto size : zone_sizes) {
    ZoneConfig cfg;
    for (std::size_t k = 0; k < std::min(size, order.size()); ++k) cfg.members.insert(order[k]);
    auto attached = attached_customers(topo, cfg.members);
    std::vector<Asn> customers(attached.begin(), attached.end());
    std::vector<std::size_t> sizes(customers.size());
    parallel_for(customers.size(), workers,
                 [&](std::size_t k) { sizes[k] = local_region(graph, cfg, customers[k]).region.size(); });
    for (std::size_t k = 0; k < customers.size(); ++k) dist.rows.push_back(RegionRow{size, customers[k], sizes[k]});
    std::vector<std::size_t> sorted = sizes;
    std::sort(sorted.begin(), sorted.end());
    RegionSummary s{size, sorted.size(), nearest_rank(sorted, 0.1), nearest_rank(sorted, 0.5),
                    nearest_rank(sorted, 0.9), 0.0};
    if (!sorted.empty()) {
      auto leq = std::upper_bound(sorted.begin(), sorted.end(), std::size_t{1}) - sorted.begin();
      s.frac_leq_1 = static_cast<double>(leq) / static_cast<double>(sorted.size());
    }
    dist.summary.push_back(s);
  }
  return dist;
}

/// One synthetic destination per AS: a host prefix in 10.0.0.0/8 with a
/// matching ROA, so every origination verifies at the perimeter.
struct SyntheticDestinations {
  std::vector<Origination> originations;
  RegistrySet registry;
  std::map<Prefix, Asn> owner;
};

inline SyntheticDestinations synthetic_destinations(const Topology& topo) {
  if (topo.size() >= (1U << 24)) throw Error("too many ASes for synthetic 10.0.0.0/8 destinations");
  SyntheticDestinations d;
  for (std::uint32_t i = 0; i < topo.size(); ++i) {
    Address a;
    a.family = Family::V4;
    std::uint32_t v = (10U << 24) | (i + 1);
    a.bytes[0] = static_cast<std::uint8_t>(v >> 24);
    a.bytes[1] = static_cast<std::uint8_t>(v >> 16);
    a.bytes[2] = static_cast<std::uint8_t>(v >> 8);
    a.bytes[3] = static_cast<std::uint8_t>(v);
    Prefix p(a, 32);
    d.originations.push_back(Origination{topo.asn_at(i), p, {}, {}});
    d.registry.add_roa(Roa{p, topo.asn_at(i), std::nullopt});
    d.owner.emplace(p, topo.asn_at(i));
  }
  return d;
}

struct RoutingExceptions {
  Asn member;
  std::vector<Asn> destinations;
  std::size_t count() const { return destinations.size(); }
};

/// Destinations for which `member` reaches the destination through a provider
/// because it prefers VERIFIED routes, where plain relationship preference
/// would have used a customer or peer route. Uses one synthetic prefix per AS.
inline std::vector<RoutingExceptions> routing_exceptions(const Topology& topo, const ZoneConfig& cfg,
                                                         const std::vector<Asn>& members, unsigned workers = 1) {
  for (auto m : members)
    if (!cfg.is_member(m)) throw Error("AS " + m.str() + " is not a zone member");
  auto dest = synthetic_destinations(topo);
  const auto hooks = make_vipzone_hooks(dest.registry, cfg);
  const Rib with = propagate(topo, dest.originations, hooks, workers);
  std::vector<RoutingExceptions> out;
  for (auto m : members) {
    PolicyHooks plain = hooks;
    plain.preference = [&cfg, m](Asn self) {
      return self == m ? PreferenceOrder::plain() : member_preference(cfg, self);
    };
    const Rib without = propagate(topo, dest.originations, plain, workers);
    RoutingExceptions ex{m, {}};
    for (const auto& [p, owner] : dest.owner) {
      if (owner == m) continue;
      const RibEntry* a = with.find(m, p);
      const RibEntry* b = without.find(m, p);
      if (!a || !b) continue;
      bool via_provider = a->best.learned_rel == LearnedRel::Provider;
      bool normally_local = b->best.learned_rel == LearnedRel::Customer || b->best.learned_rel == LearnedRel::Peer;
      if (via_provider && normally_local) ex.destinations.push_back(owner);
    }
    std::sort(ex.destinations.begin(), ex.destinations.end());
    out.push_back(std::move(ex));
  }
  return out;
}

inline RoutingExceptions routing_exceptions(const Topology& topo, const ZoneConfig& cfg, Asn member,
                                            unsigned workers = 1) {
  return routing_exceptions(topo, cfg, std::vector<Asn>{member}, workers).front();
}

}  // namespace vipsim
