#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <random>

#include "gwfair/fairness.hpp"
#include "gwfair/oracle.hpp"

using namespace gwfair;

namespace {

NetworkSpec single_link(std::vector<double> mcr, std::vector<double> w, std::vector<std::optional<double>> caps = {}) {
  NetworkSpec net;
  net.links.push_back({"L1", 149.76, 1000, "SW1", "SW2"});
  for (std::size_t i = 0; i < mcr.size(); ++i)
    net.sessions.push_back({"S" + std::to_string(i + 1), {"L1"}, mcr[i], w[i], caps.empty() ? std::nullopt : caps[i]});
  return net;
}

// Crossing session over both links, one solo session per link.
NetworkSpec parking_lot() {
  NetworkSpec net;
  net.links = {{"L100", 100, 0, "A", "B"}, {"L50", 50, 0, "B", "C"}};
  net.sessions = {{"cross", {"L100", "L50"}, 0, 1, std::nullopt},
                  {"solo100", {"L100"}, 0, 1, std::nullopt},
                  {"solo50", {"L50"}, 0, 1, std::nullopt}};
  return net;
}

// Independent reference: try every assignment of each session to "capped"
// or to one link of its route, solve the saturation equations of the
// assigned links as a linear system in the per-link levels, and keep the
// assignments whose rates satisfy the GW-fair conditions.
std::vector<std::vector<double>> brute_force(const NetworkSpec& net) {
  const std::size_t n = net.sessions.size();
  const std::size_t m = net.links.size();
  std::vector<std::size_t> choice(n, 0);
  std::vector<std::vector<double>> found;
  auto options = [&](std::size_t s) { return net.sessions[s].route.size() + (net.sessions[s].cap_mbps ? 1 : 0); };
  auto link_of = [&](std::size_t s, std::size_t c) -> std::size_t {
    for (std::size_t l = 0; l < m; ++l)
      if (net.links[l].id == net.sessions[s].route[c]) return l;
    return m;
  };
  auto on = [&](std::size_t s, std::size_t l) {
    for (const auto& id : net.sessions[s].route)
      if (id == net.links[l].id) return true;
    return false;
  };

  while (true) {
    // Unknown level per used link; capped sessions are constants.
    std::vector<int> var(m, -1);
    int nv = 0;
    std::vector<std::size_t> assigned(n, m);
    for (std::size_t s = 0; s < n; ++s) {
      if (choice[s] < net.sessions[s].route.size()) {
        assigned[s] = link_of(s, choice[s]);
        if (var[assigned[s]] < 0) var[assigned[s]] = nv++;
      }
    }
    // Row per used link: sum of rates on it equals capacity.
    std::vector<std::vector<double>> a(nv, std::vector<double>(nv + 1, 0.0));
    for (std::size_t l = 0; l < m; ++l) {
      if (var[l] < 0) continue;
      auto& row = a[var[l]];
      row[nv] = net.links[l].capacity_mbps;
      for (std::size_t s = 0; s < n; ++s) {
        if (!on(s, l)) continue;
        if (assigned[s] == m) {
          row[nv] -= *net.sessions[s].cap_mbps;
        } else {
          row[nv] -= net.sessions[s].mcr_mbps;
          row[var[assigned[s]]] += net.sessions[s].weight;
        }
      }
    }
    // Gaussian elimination with partial pivoting.
    bool singular = false;
    for (int c = 0; c < nv && !singular; ++c) {
      int piv = c;
      for (int r = c + 1; r < nv; ++r)
        if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
      if (std::abs(a[piv][c]) < 1e-12) {
        singular = true;
        break;
      }
      std::swap(a[c], a[piv]);
      for (int r = 0; r < nv; ++r) {
        if (r == c) continue;
        const double f = a[r][c] / a[c][c];
        for (int k = c; k <= nv; ++k) a[r][k] -= f * a[c][k];
      }
    }
    if (!singular) {
      std::vector<double> level(m, 0.0);
      for (std::size_t l = 0; l < m; ++l)
        if (var[l] >= 0) level[l] = a[var[l]][nv] / a[var[l]][var[l]];
      std::vector<double> rate(n);
      for (std::size_t s = 0; s < n; ++s)
        rate[s] = assigned[s] == m ? *net.sessions[s].cap_mbps
                                   : net.sessions[s].mcr_mbps + net.sessions[s].weight * level[assigned[s]];

      const double eps = 1e-7;
      bool ok = true;
      std::vector<double> load(m, 0.0), top(m, -1e300);
      for (std::size_t s = 0; s < n; ++s) {
        const auto& ss = net.sessions[s];
        if (rate[s] < ss.mcr_mbps - eps) ok = false;
        if (ss.cap_mbps && rate[s] > *ss.cap_mbps + eps) ok = false;
        for (std::size_t l = 0; l < m; ++l) {
          if (!on(s, l)) continue;
          load[l] += rate[s];
          top[l] = std::max(top[l], (rate[s] - ss.mcr_mbps) / ss.weight);
        }
      }
      for (std::size_t l = 0; l < m; ++l)
        if (load[l] > net.links[l].capacity_mbps + eps) ok = false;
      for (std::size_t s = 0; s < n && ok; ++s) {
        if (assigned[s] == m) continue;
        const std::size_t l = assigned[s];
        const double excess = (rate[s] - net.sessions[s].mcr_mbps) / net.sessions[s].weight;
        if (excess < top[l] - eps) ok = false;
      }
      if (ok) found.push_back(rate);
    }

    std::size_t k = 0;
    while (k < n && ++choice[k] == options(k)) choice[k++] = 0;
    if (k == n) break;
  }
  return found;
}

NetworkSpec random_network(std::mt19937_64& rng, int max_links, int max_sessions, bool with_caps = true) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int m = std::uniform_int_distribution<int>(1, max_links)(rng);
  const int n = std::uniform_int_distribution<int>(1, max_sessions)(rng);
  NetworkSpec net;
  for (int l = 0; l < m; ++l) net.links.push_back({"L" + std::to_string(l), 10.0 + 150.0 * unit(rng), 0, "", ""});
  std::vector<double> mcr_room(m);
  for (int l = 0; l < m; ++l) mcr_room[l] = net.links[l].capacity_mbps;
  for (int s = 0; s < n; ++s) {
    Session sess;
    sess.id = "S" + std::to_string(s);
    const int first = std::uniform_int_distribution<int>(0, m - 1)(rng);
    const int len = std::uniform_int_distribution<int>(1, m - first)(rng);
    for (int l = first; l < first + len; ++l) sess.route.push_back(net.links[l].id);
    double room = 1e300;
    for (int l = first; l < first + len; ++l) room = std::min(room, mcr_room[l]);
    sess.mcr_mbps = unit(rng) < 0.5 ? 0.0 : 0.3 * room * unit(rng);
    for (int l = first; l < first + len; ++l) mcr_room[l] -= sess.mcr_mbps;
    sess.weight = 0.1 + 10.0 * unit(rng);
    if (with_caps && unit(rng) < 0.3) sess.cap_mbps = sess.mcr_mbps + 60.0 * unit(rng);
    net.sessions.push_back(std::move(sess));
  }
  return net;
}

}  // namespace

TEST(Solve, PricingWeightsThreeSources) {
  const auto a = solve(single_link({10, 30, 50}, {15, 35, 55}));
  EXPECT_NEAR(a.at("S1"), 18.53, 0.01);
  EXPECT_NEAR(a.at("S2"), 49.92, 0.01);
  EXPECT_NEAR(a.at("S3"), 81.30, 0.01);
}

TEST(Solve, CappedSessionAgreesWithBruteForce) {
  const auto net = single_link({0, 0, 0}, {1, 1, 1}, {10.0, std::nullopt, std::nullopt});
  const auto ref = brute_force(net);
  ASSERT_EQ(ref.size(), 1u);
  EXPECT_NEAR(ref[0][0], 10.0, 1e-9);
  EXPECT_NEAR(ref[0][1], 69.88, 1e-9);
  EXPECT_NEAR(ref[0][2], 69.88, 1e-9);
  const auto a = solve(net);
  EXPECT_NEAR(a.at("S1"), ref[0][0], 1e-9);
  EXPECT_NEAR(a.at("S2"), ref[0][1], 1e-9);
  EXPECT_NEAR(a.at("S3"), ref[0][2], 1e-9);
}

TEST(Solve, ParkingLotAgreesWithBruteForce) {
  const auto net = parking_lot();
  const auto ref = brute_force(net);
  ASSERT_EQ(ref.size(), 1u);
  EXPECT_NEAR(ref[0][0], 25.0, 1e-9);
  EXPECT_NEAR(ref[0][1], 75.0, 1e-9);
  EXPECT_NEAR(ref[0][2], 25.0, 1e-9);
  const auto a = solve(net);
  EXPECT_NEAR(a.at("cross"), 25.0, 1e-9);
  EXPECT_NEAR(a.at("solo100"), 75.0, 1e-9);
  EXPECT_NEAR(a.at("solo50"), 25.0, 1e-9);
}

TEST(Solve, SingleSessionTakesTheLink) {
  NetworkSpec net;
  net.links.push_back({"L1", 42.5, 0, "", ""});
  net.sessions.push_back({"only", {"L1"}, 0, 3, std::nullopt});
  EXPECT_DOUBLE_EQ(solve(net).at("only"), 42.5);
}

TEST(Solve, CapAboveFairShareIsInactive) {
  const auto a = solve(single_link({0, 0}, {1, 1}, {100.0, std::nullopt}));
  EXPECT_NEAR(a.at("S1"), 74.88, 1e-9);
  EXPECT_NEAR(a.at("S2"), 74.88, 1e-9);
}

TEST(Solve, InfeasibleAndStructuralErrors) {
  auto over = single_link({100, 60}, {1, 1});
  try {
    solve(over);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Infeasible);
  }
  auto missing = single_link({0}, {1});
  missing.sessions[0].route = {"nope"};
  try {
    solve(missing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SemanticError);
  }
}

TEST(Solve, IdleLinkIsSkipped) {
  auto net = parking_lot();
  net.links.push_back({"spare", 10, 0, "", ""});
  EXPECT_NEAR(solve(net).at("cross"), 25.0, 1e-9);
}

TEST(BottleneckOrder, SingleLink) {
  const auto order = bottleneck_order(single_link({0, 0, 0}, {1, 1, 1}));
  ASSERT_EQ(order.size(), 1u);
  EXPECT_EQ(order[0].links, std::vector<std::string>{"L1"});
  EXPECT_EQ(order[0].resolved_sessions.size(), 3u);
}

TEST(BottleneckOrder, ParkingLot) {
  const auto order = bottleneck_order(parking_lot());
  ASSERT_EQ(order.size(), 2u);
  EXPECT_EQ(order[0].iteration, 1);
  EXPECT_EQ(order[0].links, std::vector<std::string>{"L50"});
  EXPECT_EQ(order[1].links, std::vector<std::string>{"L100"});
}

TEST(BottleneckOrder, CapResolvesFirst) {
  const auto order = bottleneck_order(single_link({0, 0, 0}, {1, 1, 1}, {10.0, std::nullopt, std::nullopt}));
  ASSERT_EQ(order.size(), 2u);
  EXPECT_EQ(order[0].capped_sessions, std::vector<std::string>{"S1"});
  EXPECT_TRUE(order[0].links.empty());
}

TEST(VerifyAllocation, Examples) {
  const auto net = single_link({10, 30, 50}, {1, 1, 1});
  EXPECT_TRUE(verify_allocation(net, Allocation{{{"S1", 29.92}, {"S2", 49.92}, {"S3", 69.92}}}).empty());

  const auto equal = verify_allocation(net, Allocation{{{"S1", 49.92}, {"S2", 49.92}, {"S3", 49.92}}});
  ASSERT_FALSE(equal.empty());
  bool s3_flagged = false;
  for (const auto& v : equal) s3_flagged |= v.kind == Violation::Kind::NoBottleneck && v.subject == "S3";
  EXPECT_TRUE(s3_flagged);

  const auto low = verify_allocation(net, Allocation{{{"S1", 5}, {"S2", 49.92}, {"S3", 69.92}}});
  bool below = false;
  for (const auto& v : low) below |= v.kind == Violation::Kind::BelowMcr && v.subject == "S1";
  EXPECT_TRUE(below);

  const auto missing = verify_allocation(net, Allocation{{{"S1", 29.92}}});
  ASSERT_FALSE(missing.empty());
  EXPECT_EQ(missing[0].kind, Violation::Kind::MissingRate);

  const auto over = verify_allocation(net, Allocation{{{"S1", 40}, {"S2", 50}, {"S3", 70}}});
  bool oversub = false;
  for (const auto& v : over) oversub |= v.kind == Violation::Kind::LinkOversubscribed;
  EXPECT_TRUE(oversub);
}

TEST(OracleProperties, RandomNetworksVerify) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto net = random_network(rng, 6, 10);
    SCOPED_TRACE("trial " + std::to_string(trial));
    const auto a = solve(net);
    const auto v = verify_allocation(net, a);
    EXPECT_TRUE(v.empty()) << (v.empty() ? "" : v[0].message);
  }
}

TEST(OracleProperties, MatchesBruteForceOnSmallNetworks) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 150; ++trial) {
    const auto net = random_network(rng, 3, 5);
    SCOPED_TRACE("trial " + std::to_string(trial));
    const auto a = solve(net);
    const auto ref = brute_force(net);
    ASSERT_FALSE(ref.empty());
    // Every assignment that passes the conditions gives the same rates.
    for (const auto& r : ref)
      for (std::size_t s = 0; s < net.sessions.size(); ++s)
        EXPECT_NEAR(r[s], a.at(net.sessions[s].id), 1e-6 * std::max(1.0, r[s]));
  }
}

// Holds when every session shares the one link.
TEST(OracleProperties, RemovingASessionNeverHurtsOthersOnOneLink) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = random_network(rng, 1, 8);
    if (net.sessions.size() < 2) continue;
    const auto before = brute_force(net);
    ASSERT_FALSE(before.empty());
    const std::size_t drop = std::uniform_int_distribution<std::size_t>(0, net.sessions.size() - 1)(rng);
    auto smaller = net;
    smaller.sessions.erase(smaller.sessions.begin() + static_cast<long>(drop));
    const auto after = solve(smaller);
    for (std::size_t s = 0; s < net.sessions.size(); ++s) {
      if (s == drop) continue;
      EXPECT_GE(after.at(net.sessions[s].id), before[0][s] - 1e-6) << "trial " << trial;
    }
  }
}

// Across links it does not: freeing L1 lets "b" claim more of L2 at c's expense.
TEST(OracleProperties, RemovalCanLowerASessionOnAnotherLink) {
  NetworkSpec net;
  net.links = {{"L1", 60, 0, "X", "Y"}, {"L2", 100, 0, "Y", "Z"}};
  net.sessions = {{"a", {"L1"}, 0, 1, std::nullopt},
                  {"b", {"L1", "L2"}, 0, 1, std::nullopt},
                  {"c", {"L2"}, 0, 1, std::nullopt}};
  const auto ref = brute_force(net);
  ASSERT_EQ(ref.size(), 1u);
  EXPECT_NEAR(ref[0][2], 70.0, 1e-9);
  auto smaller = net;
  smaller.sessions.erase(smaller.sessions.begin());
  const auto ref_smaller = brute_force(smaller);
  ASSERT_EQ(ref_smaller.size(), 1u);
  EXPECT_NEAR(ref_smaller[0][1], 50.0, 1e-9);
  EXPECT_NEAR(solve(smaller).at("c"), 50.0, 1e-9);
}

TEST(OracleProperties, IdempotentResolveAndWeightScaling) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = random_network(rng, 6, 10);
    const auto a = solve(net);

    auto pinned = net;
    for (auto& s : pinned.sessions)
      if (s.cap_mbps) s.cap_mbps = a.at(s.id);
    const auto b = solve(pinned);
    for (const auto& s : net.sessions) EXPECT_NEAR(b.at(s.id), a.at(s.id), 1e-9 * std::max(1.0, a.at(s.id)));

    auto scaled = net;
    const double c = 0.01 + 100.0 * unit(rng);
    for (auto& s : scaled.sessions) s.weight *= c;
    const auto d = solve(scaled);
    for (const auto& s : net.sessions) EXPECT_NEAR(d.at(s.id), a.at(s.id), 1e-9 * std::max(1.0, a.at(s.id)));
  }
}

TEST(OracleProperties, SingleLinkReducesToGwShare) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 8;
    std::vector<double> mcr(n), w(n);
    for (int i = 0; i < n; ++i) {
      mcr[i] = 149.76 / n * 0.8 * unit(rng);
      w[i] = 0.5 + 5.0 * unit(rng);
    }
    const auto net = single_link(mcr, w);
    LinkShareProblem p{149.76, {}};
    for (const auto& s : net.sessions) p.contenders.push_back({s.id, s.mcr_mbps, s.weight});
    const auto g = gw_share(p);
    const auto a = solve(net);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(a.at(net.sessions[i].id), g[i], 1e-9);
  }
}
