#pragma once

// Brute-force reference computations used only by tests. They are written
// for obviousness rather than speed and share no code paths with the
// library beyond the data types and the policy hooks under test.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "vipsim/vipsim.hpp"

namespace vipsim::oracle {

/// Transitive closure of the provider-to-customer relation.
inline std::map<Asn, std::set<Asn>> cones(const Topology& topo) {
  const auto& asns = topo.asns();
  const std::size_t n = asns.size();
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = 1;
    for (auto c : topo.customers(asns[i])) reach[i][topo.index_of(c)] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = 1;
  std::map<Asn, std::set<Asn>> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i][j]) out[asns[i]].insert(asns[j]);
  return out;
}

/// Roster members reachable from a provider-free roster member by walking
/// provider-to-customer edges through roster members only.
inline std::set<Asn> connected_zone(const Topology& topo, const std::set<Asn>& roster) {
  std::set<Asn> zone;
  for (bool grew = true; grew;) {
    grew = false;
    for (auto a : roster) {
      if (zone.count(a) || !topo.contains(a)) continue;
      auto provs = topo.providers(a);
      bool ok = provs.empty();
      for (auto p : provs) ok = ok || zone.count(p);
      if (ok) {
        zone.insert(a);
        grew = true;
      }
    }
  }
  return zone;
}

inline std::uint32_t v4_bits(const Prefix& p) {
  const auto& b = p.base().bytes;
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | b[3];
}

/// Route origin validation over IPv4 by explicit bit arithmetic.
inline RovState rov(const std::vector<Roa>& roas, const Prefix& p, Asn origin) {
  bool covered = false;
  for (const auto& r : roas) {
    int rl = r.prefix.length();
    if (p.length() < rl) continue;
    std::uint32_t mask = rl == 0 ? 0 : ~std::uint32_t(0) << (32 - rl);
    if ((v4_bits(p) & mask) != (v4_bits(r.prefix) & mask)) continue;
    covered = true;
    int maxlen = r.max_length ? *r.max_length : rl;
    if (r.origin == origin && p.length() <= maxlen) return RovState::Valid;
  }
  return covered ? RovState::Invalid : RovState::NotFound;
}

/// Members plus non-members with at least one member provider.
inline std::size_t protected_count(const Topology& topo, const std::set<Asn>& zone) {
  std::size_t n = 0;
  for (auto a : topo.asns()) {
    if (zone.count(a)) {
      ++n;
      continue;
    }
    for (auto p : topo.providers(a))
      if (zone.count(p)) {
        ++n;
        break;
      }
  }
  return n;
}

/// Greedy zone growth recomputing every candidate's gain from scratch; ties
/// go to the larger cone, then the lower ASN.
inline std::vector<Asn> greedy_sequence(const Topology& topo, std::size_t limit) {
  auto cs = cones(topo);
  std::set<Asn> zone;
  std::vector<Asn> seq;
  while (seq.size() < limit && seq.size() < topo.size()) {
    std::optional<Asn> best;
    std::size_t best_gain = 0;
    for (auto a : topo.asns()) {
      if (zone.count(a)) continue;
      auto with = zone;
      with.insert(a);
      std::size_t g = protected_count(topo, with) - protected_count(topo, zone);
      bool better = !best || g > best_gain ||
                    (g == best_gain && (cs[a].size() > cs[*best].size() ||
                                        (cs[a].size() == cs[*best].size() && a < *best)));
      if (better) {
        best = a;
        best_gain = g;
      }
    }
    zone.insert(*best);
    seq.push_back(*best);
  }
  return seq;
}

/// Non-members `a` with a valley-free path a -> ... -> customer that avoids
/// every member. Exhaustive over simple paths.
inline std::set<Asn> local_region(const Topology& topo, const std::set<Asn>& members, Asn customer) {
  std::set<Asn> region;
  // Walk in the direction the announcement travels: from the customer out.
  // State: current AS, whether it may still export to peers/providers
  // (i.e. it learned the route from a customer or originated it).
  std::vector<Asn> path{customer};
  std::function<void(Asn, bool)> dfs = [&](Asn x, bool upward) {
    for (auto y : topo.asns()) {
      auto rel = topo.relation(x, y);  // y as seen from x
      if (!rel || members.count(y) || std::find(path.begin(), path.end(), y) != path.end()) continue;
      if (!upward && *rel != NeighborRel::Customer) continue;
      region.insert(y);
      path.push_back(y);
      dfs(y, *rel == NeighborRel::Provider);
      path.pop_back();
    }
  };
  dfs(customer, true);
  return region;
}

/// Pairs of ASes that share an IX and are not already adjacent.
inline std::size_t ix_new_pairs(const Topology& topo) {
  std::set<std::pair<Asn, Asn>> pairs;
  for (const auto& [id, mem] : topo.ix_memberships())
    for (auto a : mem)
      for (auto b : mem)
        if (a < b && !topo.relation(a, b)) pairs.insert({a, b});
  return pairs.size();
}

// ---------------------------------------------------------------------------
// Propagation oracle.
//
// Enumerates every route that could ever reach every AS along a simple
// valley-free path, replaying the policy hooks hop by hop, and then finds a
// stable assignment by letting every AS reselect in lockstep until nothing
// changes.
// A route enumerated at X through neighbor N is available only while N's
// chosen route is exactly the route it was derived from.

struct Node {
  Asn holder;
  Route route;
  int parent = -1;
};

struct PrefixSolution {
  std::map<Asn, Route> best;
  std::map<Asn, std::vector<Route>> candidates;
  bool converged = true;
};

inline PrefixSolution solve_prefix(const Topology& topo, const Prefix& p, const std::vector<Origination>& origins,
                                   const PolicyHooks& hooks, std::size_t max_nodes = 200000) {
  std::vector<Node> nodes;
  std::function<void(int)> extend = [&](int id) {
    if (nodes.size() > max_nodes) return;
    const Asn x = nodes[id].holder;
    const Route cur = nodes[id].route;
    for (auto y : topo.asns()) {
      auto y_rel = topo.relation(x, y);  // y as seen from x
      if (!y_rel) continue;
      bool ok = cur.learned_rel == LearnedRel::Self || cur.learned_rel == LearnedRel::Customer ||
                *y_rel == NeighborRel::Customer;
      if (!ok && hooks.export_violation) ok = hooks.export_violation(x, y, *y_rel, cur);
      if (!ok) continue;
      std::optional<Route> r = cur;
      if (hooks.on_export) r = hooks.on_export(x, y, *y_rel, cur);
      if (!r) continue;
      if (cur.learned_rel != LearnedRel::Self) r->path.insert(r->path.begin(), x);
      if (std::count(r->path.begin(), r->path.end(), y)) continue;
      auto x_rel = *topo.relation(y, x);
      r->learned_from = x;
      r->learned_rel = x_rel == NeighborRel::Customer ? LearnedRel::Customer
                       : x_rel == NeighborRel::Peer   ? LearnedRel::Peer
                                                      : LearnedRel::Provider;
      if (hooks.on_import) r = hooks.on_import(y, x, x_rel, std::move(*r));
      if (!r) continue;
      nodes.push_back(Node{y, std::move(*r), id});
      extend(static_cast<int>(nodes.size()) - 1);
    }
  };
  std::set<Asn> originators;
  for (const auto& o : origins) {
    originators.insert(o.asn);
    nodes.push_back(Node{o.asn, Route{p, o.path.empty() ? std::vector<Asn>{o.asn} : o.path, o.communities,
                                      std::nullopt, LearnedRel::Self},
                         -1});
  }
  for (std::size_t k = 0, roots = nodes.size(); k < roots; ++k) extend(static_cast<int>(k));

  std::map<Asn, std::vector<int>> at;
  for (std::size_t k = 0; k < nodes.size(); ++k) at[nodes[k].holder].push_back(static_cast<int>(k));

  std::map<Asn, int> chosen;
  auto order = [&](Asn a) { return hooks.preference ? hooks.preference(a) : PreferenceOrder::plain(); };
  auto available = [&](int id) {
    const auto& nd = nodes[id];
    if (nd.parent < 0) return true;
    auto it = chosen.find(nodes[nd.parent].holder);
    return it != chosen.end() && it->second == nd.parent;
  };

  PrefixSolution sol;
  // Synchronous activation: every AS reselects against the previous
  // assignment, so dispute wheels oscillate here exactly as in the engine.
  std::size_t sweeps = 0;
  for (bool moved = true; moved;) {
    moved = false;
    if (++sweeps > 4 * topo.size() + 20) {
      sol.converged = false;
      return sol;
    }
    std::map<Asn, int> next;
    for (auto a : topo.asns()) {
      int best = -1;
      auto po = order(a);
      for (int id : at[a])
        if (available(id) && (best < 0 || prefer(po, nodes[id].route, nodes[best].route))) best = id;
      if (best >= 0) next[a] = best;
    }
    moved = next != chosen;
    chosen = std::move(next);
  }
  for (auto& [a, id] : chosen) sol.best[a] = nodes[id].route;
  for (auto& [a, ids] : at)
    for (int id : ids)
      if (available(id)) sol.candidates[a].push_back(nodes[id].route);
  return sol;
}

}  // namespace vipsim::oracle
