#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vipsim/asn.hpp"
#include "vipsim/error.hpp"
#include "vipsim/text.hpp"

namespace vipsim {

enum class Relationship : std::uint8_t { CustomerToProvider, PeerToPeer };

/// How a neighbor relates to the AS looking at it.
enum class NeighborRel : std::uint8_t { Customer, Peer, Provider };

/// One undirected AS adjacency. For c2p edges `a` is the customer and `b`
/// the provider.
struct Edge {
  Asn a;
  Asn b;
  Relationship kind = Relationship::PeerToPeer;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

using IxMemberships = std::map<std::string, std::set<Asn>>;

/// Immutable AS-level graph. Nodes are addressed either by ASN or by a dense
/// index in ascending-ASN order, which the propagation engine uses for
/// array-backed state.
class Topology {
 public:
  Topology() = default;

  /// Validates and builds. Throws vipsim::Error on a self-loop, a duplicate
  /// unordered pair, or a cycle in the customer-to-provider subgraph.
  static Topology from_edges(std::vector<Edge> edges, IxMemberships ix = {}) {
    Topology t;
    std::set<std::pair<Asn, Asn>> seen;
    for (const auto& e : edges) {
      if (e.a == e.b) throw Error("self-loop on AS " + e.a.str());
      auto key = std::minmax(e.a, e.b);
      if (!seen.insert(key).second)
        throw Error("duplicate edge between AS " + key.first.str() + " and AS " + key.second.str());
    }
    std::set<Asn> asns;
    for (const auto& e : edges) {
      asns.insert(e.a);
      asns.insert(e.b);
    }
    t.asns_.assign(asns.begin(), asns.end());
    t.index_.reserve(t.asns_.size());
    for (std::uint32_t i = 0; i < t.asns_.size(); ++i) t.index_.emplace(t.asns_[i], i);
    t.nodes_.resize(t.asns_.size());
    for (const auto& e : edges) {
      auto ia = t.index_.at(e.a);
      auto ib = t.index_.at(e.b);
      if (e.kind == Relationship::CustomerToProvider) {
        t.nodes_[ia].providers.push_back(ib);
        t.nodes_[ib].customers.push_back(ia);
      } else {
        t.nodes_[ia].peers.push_back(ib);
        t.nodes_[ib].peers.push_back(ia);
      }
    }
    for (auto& n : t.nodes_) {
      std::sort(n.providers.begin(), n.providers.end());
      std::sort(n.customers.begin(), n.customers.end());
      std::sort(n.peers.begin(), n.peers.end());
    }
    for (auto& e : edges)
      if (e.kind == Relationship::PeerToPeer && e.b < e.a) std::swap(e.a, e.b);
    std::sort(edges.begin(), edges.end());
    t.edges_ = std::move(edges);
    t.check_acyclic();
    for (auto& [id, members] : ix) {
      std::set<Asn> known;
      for (auto a : members)
        if (t.contains(a)) known.insert(a);
      t.ix_[id] = std::move(known);
    }
    return t;
  }

  std::size_t size() const { return asns_.size(); }
  const std::vector<Asn>& asns() const { return asns_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const IxMemberships& ix_memberships() const { return ix_; }

  bool contains(Asn a) const { return index_.count(a) != 0; }
  std::optional<std::uint32_t> find(Asn a) const {
    auto it = index_.find(a);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::uint32_t index_of(Asn a) const {
    auto it = index_.find(a);
    if (it == index_.end()) throw Error("unknown AS " + a.str());
    return it->second;
  }
  Asn asn_at(std::uint32_t i) const { return asns_[i]; }

  std::span<const std::uint32_t> providers_of(std::uint32_t i) const { return nodes_[i].providers; }
  std::span<const std::uint32_t> customers_of(std::uint32_t i) const { return nodes_[i].customers; }
  std::span<const std::uint32_t> peers_of(std::uint32_t i) const { return nodes_[i].peers; }

  std::vector<Asn> providers(Asn a) const { return to_asns(providers_of(index_of(a))); }
  std::vector<Asn> customers(Asn a) const { return to_asns(customers_of(index_of(a))); }
  std::vector<Asn> peers(Asn a) const { return to_asns(peers_of(index_of(a))); }

  /// Relationship of `neighbor` as seen from `self`, or nullopt if not adjacent.
  std::optional<NeighborRel> relation(Asn self, Asn neighbor) const {
    auto si = find(self);
    auto ni = find(neighbor);
    if (!si || !ni) return std::nullopt;
    const auto& n = nodes_[*si];
    if (std::binary_search(n.customers.begin(), n.customers.end(), *ni)) return NeighborRel::Customer;
    if (std::binary_search(n.peers.begin(), n.peers.end(), *ni)) return NeighborRel::Peer;
    if (std::binary_search(n.providers.begin(), n.providers.end(), *ni)) return NeighborRel::Provider;
    return std::nullopt;
  }

  bool operator==(const Topology& o) const { return edges_ == o.edges_ && ix_ == o.ix_; }

 private:
  struct Node {
    std::vector<std::uint32_t> providers;
    std::vector<std::uint32_t> customers;
    std::vector<std::uint32_t> peers;
  };

  std::vector<Asn> to_asns(std::span<const std::uint32_t> idx) const {
    std::vector<Asn> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(asns_[i]);
    return out;
  }

  // Kahn's algorithm over customer->provider arcs.
  void check_acyclic() const {
    std::vector<std::size_t> pending(nodes_.size());
    std::vector<std::uint32_t> ready;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      pending[i] = nodes_[i].customers.size();
      if (pending[i] == 0) ready.push_back(i);
    }
    std::size_t done = 0;
    while (!ready.empty()) {
      auto i = ready.back();
      ready.pop_back();
      ++done;
      for (auto p : nodes_[i].providers)
        if (--pending[p] == 0) ready.push_back(p);
    }
    if (done != nodes_.size()) {
      for (std::uint32_t i = 0; i < nodes_.size(); ++i)
        if (pending[i] != 0) throw Error("customer-to-provider cycle through AS " + asns_[i].str());
    }
  }

  std::vector<Asn> asns_;
  std::unordered_map<Asn, std::uint32_t> index_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  IxMemberships ix_;
};

/// Reads the pipe-separated relationship format: `A|B|-1` (A provides transit
/// to B) or `A|B|0` (peers). Extra trailing fields are ignored.
inline Topology load_topology(std::istream& in, const std::string& source = "<topology>") {
  std::vector<Edge> edges;
  std::map<std::pair<Asn, Asn>, std::size_t> first_line;
  text::for_each_record(in, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f.size() < 3) throw ParseError(source, lineno, "expected A|B|code");
    auto a = parse_asn(f[0]);
    auto b = parse_asn(f[1]);
    if (!a || !b) throw ParseError(source, lineno, "invalid ASN");
    auto code = text::trim(f[2]);
    Edge e;
    if (code == "-1") {
      e = Edge{*b, *a, Relationship::CustomerToProvider};
    } else if (code == "0") {
      e = Edge{*a, *b, Relationship::PeerToPeer};
    } else {
      throw ParseError(source, lineno, "unknown relationship code '" + std::string(code) + "'");
    }
    if (*a == *b) throw ParseError(source, lineno, "self-loop on AS " + a->str());
    auto key = std::minmax(*a, *b);
    auto [it, fresh] = first_line.emplace(key, lineno);
    if (!fresh)
      throw ParseError(source, lineno,
                       "duplicate edge " + key.first.str() + "-" + key.second.str() + " (first seen on line " +
                           std::to_string(it->second) + ")");
    edges.push_back(e);
  });
  return Topology::from_edges(std::move(edges));
}

inline Topology load_topology(std::string_view text, const std::string& source = "<topology>") {
  std::istringstream in{std::string(text)};
  return load_topology(in, source);
}

/// Reads `ix-id|asn` lines.
inline IxMemberships load_ix_memberships(std::istream& in, const std::string& source = "<ix>") {
  IxMemberships ix;
  text::for_each_record(in, [&](std::size_t lineno, std::string_view line) {
    auto f = text::split(line, '|');
    if (f.size() != 2) throw ParseError(source, lineno, "expected ix-id|asn");
    auto id = text::trim(f[0]);
    auto a = parse_asn(f[1]);
    if (id.empty() || !a) throw ParseError(source, lineno, "invalid IX membership record");
    ix[std::string(id)].insert(*a);
  });
  return ix;
}

/// Same graph with IX memberships attached. ASNs absent from the graph are dropped.
inline Topology with_ix_memberships(const Topology& topo, IxMemberships ix) {
  return Topology::from_edges(topo.edges(), std::move(ix));
}

/// Writes the graph back in the relationship format, one sorted line per edge.
inline std::string serialize(const Topology& topo) {
  std::vector<std::string> lines;
  for (const auto& e : topo.edges()) {
    if (e.kind == Relationship::CustomerToProvider) {
      lines.push_back(e.b.str() + "|" + e.a.str() + "|-1");
    } else {
      auto [lo, hi] = std::minmax(e.a, e.b);
      lines.push_back(lo.str() + "|" + hi.str() + "|0");
    }
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (auto& l : lines) out += l + "\n";
  return out;
}

/// Every AS reachable from `asn` by descending provider->customer edges,
/// excluding `asn` itself.
inline std::set<Asn> customer_cone(const Topology& topo, Asn asn) {
  auto root = topo.index_of(asn);
  std::vector<char> seen(topo.size(), 0);
  std::vector<std::uint32_t> stack{root};
  seen[root] = 1;
  std::set<Asn> cone;
  while (!stack.empty()) {
    auto i = stack.back();
    stack.pop_back();
    for (auto c : topo.customers_of(i)) {
      if (seen[c]) continue;
      seen[c] = 1;
      cone.insert(topo.asn_at(c));
      stack.push_back(c);
    }
  }
  return cone;
}

/// Cone sizes for all ASes at once, indexed like the topology.
inline std::vector<std::size_t> customer_cone_sizes(const Topology& topo) {
  std::vector<std::size_t> sizes(topo.size(), 0);
  std::vector<std::uint32_t> mark(topo.size(), UINT32_MAX);
  std::vector<std::uint32_t> stack;
  for (std::uint32_t r = 0; r < topo.size(); ++r) {
    if (topo.customers_of(r).empty()) continue;
    stack.assign(1, r);
    mark[r] = r;
    std::size_t n = 0;
    while (!stack.empty()) {
      auto i = stack.back();
      stack.pop_back();
      for (auto c : topo.customers_of(i)) {
        if (mark[c] == r) continue;
        mark[c] = r;
        ++n;
        stack.push_back(c);
      }
    }
    sizes[r] = n;
  }
  return sizes;
}

struct Tier1Result {
  std::set<Asn> members;
  /// Pairs of provider-free ASes lacking a peering edge.
  std::vector<std::pair<Asn, Asn>> missing_mesh;
};

/// Provider-free ASes, plus a report of holes in their peering mesh.
inline Tier1Result tier1_clique(const Topology& topo) {
  Tier1Result r;
  std::vector<std::uint32_t> idx;
  for (std::uint32_t i = 0; i < topo.size(); ++i) {
    if (topo.providers_of(i).empty()) {
      r.members.insert(topo.asn_at(i));
      idx.push_back(i);
    }
  }
  for (std::size_t x = 0; x < idx.size(); ++x) {
    auto peers = topo.peers_of(idx[x]);
    for (std::size_t y = x + 1; y < idx.size(); ++y) {
      if (!std::binary_search(peers.begin(), peers.end(), idx[y]))
        r.missing_mesh.emplace_back(topo.asn_at(idx[x]), topo.asn_at(idx[y]));
    }
  }
  return r;
}

/// Adds a p2p edge between every pair of ASes sharing an IX that are not
/// already adjacent. Existing edges, c2p included, are left untouched.
inline Topology augment_with_ix_peering(const Topology& topo) {
  std::vector<Edge> edges = topo.edges();
  std::set<std::pair<Asn, Asn>> adjacent;
  for (const auto& e : edges) adjacent.insert(std::minmax(e.a, e.b));
  for (const auto& [id, members] : topo.ix_memberships()) {
    std::vector<Asn> m(members.begin(), members.end());
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) {
        if (adjacent.insert({m[i], m[j]}).second) edges.push_back(Edge{m[i], m[j], Relationship::PeerToPeer});
      }
    }
  }
  return Topology::from_edges(std::move(edges), topo.ix_memberships());
}

inline const char* to_string(NeighborRel r) {
  switch (r) {
    case NeighborRel::Customer: return "customer";
    case NeighborRel::Peer: return "peer";
    case NeighborRel::Provider: return "provider";
  }
  return "?";
}

}  // namespace vipsim
