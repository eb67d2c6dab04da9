#include <gtest/gtest.h>

#include <random>

#include "support/checks.hpp"
#include "vipsim/vipsim.hpp"

using namespace vipsim;

namespace {

std::set<Asn> S(std::initializer_list<std::uint32_t> xs) {
  std::set<Asn> s;
  for (auto x : xs) s.insert(Asn(x));
  return s;
}

ZoneConfig members_of(const std::set<Asn>& m) {
  ZoneConfig c;
  c.members = m;
  return c;
}

Topology star(std::uint32_t k) {
  std::string rel;
  for (std::uint32_t s = 2; s <= k + 1; ++s) rel += "1|" + std::to_string(s) + "|-1\n";
  return load_topology(rel);
}

}  // namespace

TEST(DeriveZone, RosterBehindOutsiderIsExcluded) {
  auto t = load_topology("1|2|-1\n1|3|-1\n3|4|-1\n");
  auto d = derive_connected_zone(t, S({1, 2, 4}));
  EXPECT_EQ(d.connected_members, S({1, 2}));
  EXPECT_EQ(d.attached_customers, S({3}));
}

TEST(DeriveZone, UnknownRosterEntriesAreSetAside) {
  auto t = load_topology("1|2|-1\n");
  auto d = derive_connected_zone(t, S({1, 99}));
  EXPECT_EQ(d.connected_members, S({1}));
  EXPECT_EQ(d.unknown, S({99}));
}

TEST(DeriveZone, MatchesFixpointOracleAndIsMonotone) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 150; ++trial) {
    auto t = testkit::random_topology(rng, 5 + trial % 40);
    auto roster = testkit::random_subset(rng, t.asns(), 0.5);
    auto d = derive_connected_zone(t, roster);
    ASSERT_EQ(d.connected_members, oracle::connected_zone(t, roster));
    for (auto a : d.attached_customers) {
      EXPECT_FALSE(d.connected_members.count(a));
      bool has_member_provider = false;
      for (auto p : t.providers(a)) has_member_provider = has_member_provider || d.connected_members.count(p);
      EXPECT_TRUE(has_member_provider);
    }
    auto bigger = roster;
    for (auto a : testkit::random_subset(rng, t.asns(), 0.3)) bigger.insert(a);
    auto d2 = derive_connected_zone(t, bigger);
    EXPECT_TRUE(std::includes(d2.connected_members.begin(), d2.connected_members.end(), d.connected_members.begin(),
                              d.connected_members.end()));
  }
}

TEST(GrowthCurve, StarHubProtectsEverything) {
  auto t = star(6);
  auto c = zone_growth_curve(t, GrowthOrder::ByConeSize, {1, 2});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].protected_count, 7u);
  EXPECT_EQ(c[1].protected_count, 7u);
  EXPECT_EQ(zone_growth_curve(t, GrowthOrder::GreedyProtectedGain, {1})[0].protected_count, 7u);
  EXPECT_THROW(zone_growth_curve(t, GrowthOrder::ByConeSize, {2, 1}), Error);
}

TEST(GrowthCurve, GreedyMatchesExhaustiveArgmax) {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    auto t = testkit::random_topology(rng, 20);
    auto seq = growth_sequence(t, GrowthOrder::GreedyProtectedGain, t.size());
    ASSERT_EQ(seq, oracle::greedy_sequence(t, t.size())) << serialize(t);
    std::vector<std::size_t> steps;
    for (std::size_t k = 1; k <= t.size(); ++k) steps.push_back(k);
    auto curve = zone_growth_curve(t, GrowthOrder::GreedyProtectedGain, steps);
    std::set<Asn> zone;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      zone.insert(seq[k]);
      ASSERT_EQ(curve[k].protected_count, oracle::protected_count(t, zone));
    }
  }
}

TEST(GrowthCurve, ConeOrderMatchesOracle) {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 60; ++trial) {
    auto t = testkit::random_topology(rng, 20);
    auto cones = oracle::cones(t);
    std::vector<Asn> order = t.asns();
    std::stable_sort(order.begin(), order.end(),
                     [&](Asn a, Asn b) { return cones[a].size() > cones[b].size(); });
    std::vector<std::size_t> steps;
    for (std::size_t k = 1; k <= t.size(); ++k) steps.push_back(k);
    auto curve = zone_growth_curve(t, GrowthOrder::ByConeSize, steps);
    std::set<Asn> zone;
    std::size_t last = 0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      zone.insert(order[k]);
      ASSERT_EQ(curve[k].protected_count, oracle::protected_count(t, zone));
      EXPECT_GE(curve[k].protected_count, last);
      last = curve[k].protected_count;
    }
    EXPECT_EQ(last, t.size());
  }
}

TEST(LocalRegion, WorkedExample) {
  // A=1, zone provider X=2, customer B=3 (customer G=4), peer E=5 (customer
  // F=6), non-member provider H=7 (customer J=8, peer S=9 with customer T=10).
  auto t = load_topology(
      "2|1|-1\n1|3|-1\n3|4|-1\n1|5|0\n5|6|-1\n7|1|-1\n7|8|-1\n7|9|0\n9|10|-1\n2|7|0\n");
  auto lr = local_region(t, members_of(S({2})), Asn(1));
  EXPECT_EQ(lr.region, S({3, 4, 5, 6, 7, 8, 9, 10}));
  EXPECT_EQ(lr.region, oracle::local_region(t, S({2}), Asn(1)));
}

TEST(LocalRegion, StubUnderMemberHasEmptyRegion) {
  auto t = load_topology("1|2|-1\n1|3|-1\n");
  EXPECT_TRUE(local_region(t, members_of(S({1})), Asn(2)).region.empty());
  EXPECT_THROW(local_region(t, members_of(S({1})), Asn(1)), Error);
  EXPECT_THROW(local_region(t, members_of(S({1})), Asn(9)), Error);
}

TEST(LocalRegion, MatchesPathEnumerationOracle) {
  std::mt19937 rng(37);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = testkit::random_topology(rng, 4 + trial % 12, 0.25);
    auto members = testkit::random_subset(rng, t.asns(), 0.3);
    for (auto c : t.asns()) {
      if (members.count(c)) continue;
      ASSERT_EQ(local_region(t, members_of(members), c).region, oracle::local_region(t, members, c))
          << "customer " << c << "\n" << serialize(t);
    }
  }
}

TEST(LocalRegion, IxAugmentationOnlyGrowsRegions) {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 80; ++trial) {
    auto t = testkit::random_topology(rng, 15);
    IxMemberships ix;
    ix["ix"] = testkit::random_subset(rng, t.asns(), 0.4);
    t = with_ix_memberships(t, ix);
    auto a = augment_with_ix_peering(t);
    auto zone = derive_connected_zone(t, testkit::random_subset(rng, t.asns(), 0.5)).connected_members;
    for (auto c : t.asns()) {
      if (zone.count(c)) continue;
      auto plain = local_region(t, members_of(zone), c).region;
      auto more = local_region(a, members_of(zone), c).region;
      EXPECT_TRUE(std::includes(more.begin(), more.end(), plain.begin(), plain.end()));
    }
  }
}

TEST(RegionDistribution, StarStubsHaveEmptyRegions) {
  auto d = local_region_distribution(star(8), {1, 2, 3}, false);
  ASSERT_EQ(d.summary.size(), 3u);
  for (const auto& r : d.rows) EXPECT_EQ(r.region_size, 0u);
  for (const auto& s : d.summary) {
    EXPECT_GT(s.customers, 0u);
    EXPECT_EQ(s.p90, 0u);
    EXPECT_DOUBLE_EQ(s.frac_leq_1, 1.0);
  }
}

TEST(RegionDistribution, RowsMatchOracleAndWorkerCount) {
  std::mt19937 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = testkit::random_topology(rng, 15);
    std::vector<std::size_t> sizes{1, 3, 5};
    auto d = local_region_distribution(t, sizes, false);
    for (const auto& row : d.rows) {
      auto zone = top_by_cone_size(t, row.zone_size);
      EXPECT_EQ(row.region_size, oracle::local_region(t, zone, row.customer).size());
    }
    auto par = local_region_distribution(t, sizes, false, 4);
    ASSERT_EQ(par.rows.size(), d.rows.size());
    for (std::size_t k = 0; k < d.rows.size(); ++k) EXPECT_EQ(par.rows[k].region_size, d.rows[k].region_size);
  }
}

TEST(RegionDistribution, TwoClustersAreBimodal) {
  // Cluster one: stubs hanging only off the hub. Cluster two: a long chain of
  // non-member transit with peers, all multihomed to the hub.
  std::string rel;
  for (int s = 100; s < 110; ++s) rel += "1|" + std::to_string(s) + "|-1\n";
  for (int k = 200; k < 210; ++k) {
    rel += "1|" + std::to_string(k) + "|-1\n";
    if (k > 200) rel += std::to_string(k - 1) + "|" + std::to_string(k) + "|-1\n";
  }
  auto t = load_topology(rel);
  auto d = local_region_distribution(t, {1}, false);
  std::size_t small = 0, large = 0;
  for (const auto& r : d.rows) {
    EXPECT_EQ(r.region_size, oracle::local_region(t, S({1}), r.customer).size());
    if (r.region_size == 0) ++small;
    if (r.region_size >= 5) ++large;
  }
  EXPECT_GE(small, 10u);
  EXPECT_GE(large, 5u);
}

TEST(Exceptions, VerifiedProviderPathBeatsPeer) {
  // Member Tier-1 1; member 7 under 1; non-member 4 peers with 7; 2 is a
  // customer of both 4 and 1.
  auto t = load_topology("1|7|-1\n7|4|0\n4|2|-1\n1|2|-1\n");
  ZoneConfig cfg = members_of(S({1, 7}));
  auto ex = routing_exceptions(t, cfg, Asn(7));
  EXPECT_EQ(ex.destinations, std::vector<Asn>{Asn(2)});
  EXPECT_THROW(routing_exceptions(t, cfg, Asn(4)), Error);
}

TEST(Exceptions, NoneWithoutOutOfZoneAlternatives) {
  auto t = load_topology("1|2|-1\n2|3|-1\n1|4|-1\n");
  ZoneConfig cfg = members_of(S({1, 2}));
  EXPECT_EQ(routing_exceptions(t, cfg, Asn(1)).count(), 0u);
  EXPECT_EQ(routing_exceptions(t, cfg, Asn(2)).count(), 0u);
}

TEST(Exceptions, MatchesDoubleRunOracle) {
  std::mt19937 rng(47);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    auto t = testkit::random_topology(rng, 10, 0.3);
    auto zone = derive_connected_zone(t, testkit::random_subset(rng, t.asns(), 0.6)).connected_members;
    if (zone.empty()) continue;
    ZoneConfig cfg = members_of(zone);
    std::vector<Asn> ms(zone.begin(), zone.end());
    std::vector<RoutingExceptions> got;
    try {
      got = routing_exceptions(t, cfg, ms);
    } catch (const NonConvergence&) {
      continue;
    }
    RegistrySet reg;
    std::vector<std::pair<Prefix, Asn>> dests;
    for (std::size_t k = 0; k < t.asns().size(); ++k) {
      auto p = prefix("10.0." + std::to_string(k) + ".0/24");
      reg.add_roa(Roa{p, t.asns()[k], std::nullopt});
      dests.emplace_back(p, t.asns()[k]);
    }
    for (std::size_t j = 0; j < ms.size(); ++j) {
      const Asn m = ms[j];
      auto with = make_vipzone_hooks(reg, cfg);
      auto without = with;
      without.preference = [&cfg, m](Asn self) {
        return self == m ? PreferenceOrder::plain() : member_preference(cfg, self);
      };
      std::vector<Asn> want;
      for (const auto& [p, owner] : dests) {
        if (owner == m) continue;
        std::vector<Origination> o{{owner, p, {}, {}}};
        auto a = oracle::solve_prefix(t, p, o, with);
        auto b = oracle::solve_prefix(t, p, o, without);
        ASSERT_TRUE(a.converged && b.converged);
        if (!a.best.count(m) || !b.best.count(m)) continue;
        auto ra = a.best.at(m).learned_rel, rb = b.best.at(m).learned_rel;
        if (ra == LearnedRel::Provider && (rb == LearnedRel::Customer || rb == LearnedRel::Peer)) want.push_back(owner);
      }
      std::sort(want.begin(), want.end());
      ASSERT_EQ(got[j].destinations, want) << "member " << m << "\n" << serialize(t);
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}
