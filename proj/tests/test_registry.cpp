#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "vipsim/registry.hpp"

using namespace vipsim;

TEST(Prefix, ParsesAndRejectsHostBits) {
  EXPECT_EQ(prefix("192.0.30.0/23").str(), "192.0.30.0/23");
  EXPECT_FALSE(parse_prefix("192.0.31.0/23"));
  EXPECT_FALSE(parse_prefix("10.0.0.0/33"));
  EXPECT_FALSE(parse_prefix("nonsense"));
  EXPECT_EQ(prefix("2001:db8::/32").str(), "2001:db8::/32");
  EXPECT_TRUE(prefix("192.0.30.0/23").contains(prefix("192.0.31.0/24")));
  EXPECT_FALSE(prefix("192.0.31.0/24").contains(prefix("192.0.30.0/23")));
}

TEST(Rov, MaxLengthBounds) {
  RegistrySet reg;
  reg.add_roa(Roa{prefix("192.0.30.0/23"), Asn(64500), 24});
  EXPECT_EQ(rov_validate(reg, prefix("192.0.31.0/24"), Asn(64500)), RovState::Valid);
  EXPECT_EQ(rov_validate(reg, prefix("192.0.31.0/25"), Asn(64500)), RovState::Invalid);
  EXPECT_EQ(rov_validate(reg, prefix("192.0.30.0/23"), Asn(64501)), RovState::Invalid);
  EXPECT_EQ(rov_validate(reg, prefix("192.0.32.0/24"), Asn(64500)), RovState::NotFound);
}

TEST(Rov, EmptyStoreIsNotFound) {
  RegistrySet reg;
  EXPECT_EQ(rov_validate(reg, prefix("10.0.0.0/8"), Asn(1)), RovState::NotFound);
}

TEST(Rov, AbsentMaxLengthMeansExactLength) {
  RegistrySet reg;
  reg.add_roa(Roa{prefix("10.0.0.0/16"), Asn(7), std::nullopt});
  EXPECT_EQ(rov_validate(reg, prefix("10.0.0.0/16"), Asn(7)), RovState::Valid);
  EXPECT_EQ(rov_validate(reg, prefix("10.0.0.0/17"), Asn(7)), RovState::Invalid);
}

TEST(Rov, AnyMatchingRoaWins) {
  RegistrySet reg;
  reg.add_roa(Roa{prefix("10.0.0.0/16"), Asn(1), 16});
  reg.add_roa(Roa{prefix("10.0.0.0/24"), Asn(2), std::nullopt});
  EXPECT_EQ(rov_validate(reg, prefix("10.0.0.0/24"), Asn(2)), RovState::Valid);
  EXPECT_EQ(rov_validate(reg, prefix("10.0.0.0/24"), Asn(1)), RovState::Invalid);
}

TEST(Rov, RejectsBadMaxLength) {
  RegistrySet reg;
  EXPECT_THROW(reg.add_roa(Roa{prefix("10.0.0.0/16"), Asn(1), 8}), Error);
  EXPECT_THROW(reg.add_roa(Roa{prefix("10.0.0.0/16"), Asn(1), 33}), Error);
}

TEST(Rov, MatchesBitLevelOracle) {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    RegistrySet reg;
    std::vector<Roa> roas;
    std::uniform_int_distribution<int> len(20, 24), asn(1, 4), third(0, 255);
    int n = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int k = 0; k < n; ++k) {
      int l = len(rng);
      auto base = prefix("10.0." + std::to_string(third(rng) & 0xf0) + ".0/20");
      Prefix p = prefix("10.0." + std::to_string(third(rng)) + ".0/24").truncated(l);
      if (rng() % 2) p = base.truncated(l);
      std::optional<int> ml;
      if (rng() % 2) ml = std::uniform_int_distribution<int>(l, 26)(rng);
      Roa r{p, Asn(static_cast<std::uint32_t>(asn(rng))), ml};
      reg.add_roa(r);
      roas.push_back(r);
    }
    // Every /20../26 under 10.0.0.0/16 whose third octet is a multiple of 4.
    for (int t = 0; t < 256; t += 4) {
      for (int l = 20; l <= 26; ++l) {
        Prefix q = prefix("10.0." + std::to_string(t) + ".0/24").truncated(std::min(l, 24));
        if (l > 24) q = prefix("10.0." + std::to_string(t) + ".0/" + std::to_string(l));
        for (std::uint32_t o = 1; o <= 4; ++o)
          ASSERT_EQ(rov_validate(reg, q, Asn(o)), oracle::rov(roas, q, Asn(o))) << q << " AS" << o;
      }
    }
  }
}

TEST(Rov, AddingMatchingRoaNeverInvalidates) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    RegistrySet reg;
    auto q = prefix("10.1." + std::to_string(rng() % 256) + ".0/24");
    for (int k = 0; k < 3; ++k)
      reg.add_roa(Roa{q.truncated(16 + static_cast<int>(rng() % 9)), Asn(1 + rng() % 3), std::nullopt});
    auto before = rov_validate(reg, q, Asn(1));
    reg.add_roa(Roa{q.truncated(16 + static_cast<int>(rng() % 9)), Asn(1), 24});
    auto after = rov_validate(reg, q, Asn(1));
    if (before == RovState::Valid) {
      EXPECT_EQ(after, RovState::Valid);
    }
  }
}

TEST(Aspa, PairChecks) {
  RegistrySet reg;
  reg.add_aspa(AspaRecord{Asn(2), {Asn(1)}});
  EXPECT_EQ(aspa_pair_valid(reg, Asn(2), Asn(1)), AspaCheck::Confirmed);
  EXPECT_EQ(aspa_pair_valid(reg, Asn(2), Asn(9)), AspaCheck::Contradicted);
  EXPECT_EQ(aspa_pair_valid(reg, Asn(3), Asn(1)), AspaCheck::NoRecord);
  EXPECT_THROW(reg.add_aspa(AspaRecord{Asn(2), {Asn(5)}}), Error);
  EXPECT_THROW(reg.add_aspa(AspaRecord{Asn(4), {}}), Error);
  EXPECT_THROW(reg.add_aspa(AspaRecord{Asn(4), {Asn(4)}}), Error);
}

TEST(CustomerOrigin, Sources) {
  const Asn m(10), n(20);
  const auto p = prefix("192.0.2.0/24");
  RegistrySet none;
  EXPECT_EQ(verify_customer_origin(none, m, n, p, n), OriginCheck::Unknown);

  RegistrySet roa;
  roa.add_roa(Roa{p, n, std::nullopt});
  EXPECT_EQ(verify_customer_origin(roa, m, n, p, n), OriginCheck::Verified);

  RegistrySet irr;
  irr.add_irr(n, p);
  EXPECT_EQ(verify_customer_origin(irr, m, n, p, n), OriginCheck::Verified);

  RegistrySet acl;
  acl.set_kyc(m, n, KycEntry{std::nullopt, {p}});
  EXPECT_EQ(verify_customer_origin(acl, m, n, p, n), OriginCheck::Verified);
}

TEST(CustomerOrigin, InvalidDominatesAcls) {
  const Asn m(10), n(20);
  const auto p = prefix("192.0.2.0/24");
  RegistrySet reg;
  reg.add_roa(Roa{p, Asn(99), std::nullopt});
  reg.add_irr(n, p);
  reg.set_kyc(m, n, KycEntry{std::nullopt, {p}});
  EXPECT_EQ(verify_customer_origin(reg, m, n, p, n), OriginCheck::Rejected);
}

TEST(Kyc, AbsentListAllowsOnlyTheNeighbor) {
  RegistrySet reg;
  EXPECT_TRUE(kyc_allows_asn(reg, Asn(1), Asn(2), Asn(2)));
  EXPECT_FALSE(kyc_allows_asn(reg, Asn(1), Asn(2), Asn(3)));
  reg.set_kyc(Asn(1), Asn(2), KycEntry{std::set<Asn>{Asn(2), Asn(3)}, {}});
  EXPECT_TRUE(kyc_allows_asn(reg, Asn(1), Asn(2), Asn(3)));
  EXPECT_FALSE(kyc_allows_asn(reg, Asn(1), Asn(2), Asn(4)));
}

TEST(Loaders, Roas) {
  std::istringstream in("prefix,maxlen,asn\n192.0.30.0/23,24,64500\n10.0.0.0/8,,1\n");
  RegistrySet reg;
  load_roas(in, reg);
  EXPECT_EQ(reg.roa_count(), 2u);
  EXPECT_EQ(rov_validate(reg, prefix("192.0.31.0/24"), Asn(64500)), RovState::Valid);
  EXPECT_EQ(rov_validate(reg, prefix("10.1.0.0/16"), Asn(1)), RovState::Invalid);
}

TEST(Loaders, RoaErrorsCarryLine) {
  std::istringstream in("prefix,maxlen,asn\n192.0.30.0/23,24,64500\n192.0.30.0/23,22,64500\n");
  RegistrySet reg;
  try {
    load_roas(in, reg, "roas.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.source(), "roas.csv");
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream nohdr("192.0.30.0/23,24,64500\n");
  EXPECT_THROW(load_roas(nohdr, reg), ParseError);
}

TEST(Loaders, AspaIrrKyc) {
  RegistrySet reg;
  std::istringstream a("customer_asn,provider_asns\n2,1;3\n");
  load_aspas(a, reg);
  EXPECT_EQ(aspa_pair_valid(reg, Asn(2), Asn(3)), AspaCheck::Confirmed);
  std::istringstream i("asn,prefix\n5,10.0.0.0/16\n");
  load_irr(i, reg);
  EXPECT_TRUE(reg.irr_lists(Asn(5), prefix("10.0.0.0/16")));
  std::istringstream k("member_asn,neighbor_asn,allowed_asns,allowed_prefixes\n1,2,,10.2.0.0/16;10.3.0.0/16\n1,4,4;6,\n");
  load_kyc(k, reg);
  ASSERT_NE(reg.kyc_for(Asn(1), Asn(2)), nullptr);
  EXPECT_FALSE(reg.kyc_for(Asn(1), Asn(2))->allowed_asns);
  EXPECT_EQ(reg.kyc_for(Asn(1), Asn(2))->allowed_prefixes.size(), 2u);
  EXPECT_TRUE(kyc_allows_asn(reg, Asn(1), Asn(4), Asn(6)));
}

TEST(Loaders, KycAdjacency) {
  auto t = load_topology("1|2|-1\n");
  RegistrySet reg;
  reg.set_kyc(Asn(1), Asn(2), {});
  reg.set_kyc(Asn(1), Asn(3), {});
  EXPECT_EQ(check_kyc_adjacency(reg, t).size(), 1u);
}
