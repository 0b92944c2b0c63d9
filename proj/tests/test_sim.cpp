#include <gtest/gtest.h>

#include "gwfair/oracle.hpp"
#include "gwfair/sim/engine.hpp"

using namespace gwfair;
using namespace gwfair::sim;

namespace {

NetworkSpec one_link(std::vector<double> mcr, std::vector<double> w, double length_km = 1000) {
  NetworkSpec net;
  net.links.push_back({"L1", 149.76, length_km, "SW1", "SW2"});
  for (std::size_t i = 0; i < mcr.size(); ++i)
    net.sessions.push_back({"S" + std::to_string(i + 1), {"L1"}, mcr[i], w[i], std::nullopt});
  return net;
}

std::map<std::string, SourceModel> greedy_sources(std::vector<double> icr) {
  std::map<std::string, SourceModel> out;
  for (std::size_t i = 0; i < icr.size(); ++i) out["S" + std::to_string(i + 1)] = SourceModel::greedy(icr[i]);
  return out;
}

Trace run_three(double ms, bool measured = true) {
  SwitchParams p;
  p.use_measured_source_rate = measured;
  auto e = Engine::build(one_link({0, 0, 0}, {1, 1, 1}), p, greedy_sources({50, 40, 55}));
  return e.run(ms);
}

Trace synthetic(std::vector<std::vector<double>> per_vc) {
  Trace t;
  t.sample_period_ms = 1.0;
  for (std::size_t v = 0; v < per_vc.size(); ++v) {
    t.vc_names.push_back("V" + std::to_string(v));
    for (std::size_t k = 0; k < per_vc[v].size(); ++k)
      t.rates.push_back({static_cast<double>(k), static_cast<std::uint32_t>(v), per_vc[v][k], per_vc[v][k]});
    t.duration_ms = std::max(t.duration_ms, static_cast<double>(per_vc[v].size()));
  }
  return t;
}

}  // namespace

TEST(Engine, BuildCountsElements) {
  auto e = Engine::build(one_link({0, 0, 0}, {1, 1, 1}), {}, greedy_sources({50, 40, 55}));
  EXPECT_EQ(e.num_switches(), 2u);
  EXPECT_EQ(e.num_ports(), 1u);
  EXPECT_EQ(e.num_sources(), 3u);
  EXPECT_EQ(e.port_params(0).vc_table.size(), 3u);
}

TEST(Engine, BuildErrorsAreConfigErrors) {
  auto expect_config_error = [](auto&& fn) {
    try {
      fn();
      ADD_FAILURE() << "no error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << e.what();
    }
  };
  expect_config_error([] { Engine::build(one_link({0}, {1}), {}, {}); });
  expect_config_error([] { Engine::build(one_link({0}, {1}), {}, greedy_sources({200})); });
  expect_config_error([] { Engine::build(one_link({60, 100}, {1, 1}), {}, greedy_sources({60, 100})); });
  expect_config_error([] {
    NetworkSpec net = one_link({0}, {1});
    net.sessions[0].route = {"L9"};
    Engine::build(net, {}, greedy_sources({10}));
  });
  expect_config_error([] {
    auto src = greedy_sources({10});
    src["S7"] = SourceModel::greedy(10);
    Engine::build(one_link({0}, {1}), {}, src);
  });
  expect_config_error([] {
    // Source cap without the matching session cap.
    Engine::build(one_link({0}, {1}), {}, {{"S1", SourceModel::rate_capped(10, 5)}});
  });
  expect_config_error([] {
    EngineOptions o;
    o.vbr_reservation_mbps["L1"] = 149.76;
    Engine::build(one_link({0}, {1}), {}, greedy_sources({10}), o);
  });
  expect_config_error([] {
    NetworkSpec net;
    net.links = {{"A", 100, 1, "X", "Y"}, {"B", 100, 1, "Z", "W"}};
    net.sessions = {{"S1", {"A", "B"}, 0, 1, std::nullopt}};
    Engine::build(net, {}, greedy_sources({10}));
  });
  auto e = Engine::build(one_link({0}, {1}), {}, greedy_sources({10}));
  expect_config_error([&] { e.run(0); });
}

TEST(Engine, Deterministic) {
  const auto a = run_three(100);
  const auto b = run_three(100);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a.rates.empty());
}

TEST(Engine, CellConservation) {
  const auto t = run_three(200);
  EXPECT_EQ(t.conservation_failures, 0u);
  const auto& c = t.final_counters;
  EXPECT_EQ(c.sent, c.delivered + c.in_flight + c.queued);
  EXPECT_GT(c.delivered, 0u);
}

TEST(Engine, PropagationDelay) {
  // 1000 km at 5 us/km: nothing reaches the destination before 5 ms.
  auto e = Engine::build(one_link({0}, {1}), {}, greedy_sources({10}));
  EXPECT_EQ(e.run(4.9).final_counters.delivered, 0u);
  EXPECT_GT(e.run(5.5).final_counters.delivered, 0u);

  auto longer = Engine::build(one_link({0}, {1}, 2000), {}, greedy_sources({10}));
  EXPECT_EQ(longer.run(9.9).final_counters.delivered, 0u);
  EXPECT_GT(longer.run(10.5).final_counters.delivered, 0u);
}

TEST(Engine, NoFeedbackBeforeRoundTrip) {
  // The first backward RM cell returns after 10 ms; ACR holds at ICR until then.
  auto e = Engine::build(one_link({0}, {1}), {}, greedy_sources({10}));
  const auto t = e.run(9.5);
  for (const auto& s : t.rates) EXPECT_DOUBLE_EQ(s.acr_mbps, 10.0);
  const auto later = e.run(30);
  EXPECT_GT(later.rates.back().acr_mbps, 10.0);
}

TEST(Engine, SoleSourceFillsTheLink) {
  auto e = Engine::build(one_link({0}, {1}), {}, greedy_sources({10}));
  const auto t = e.run(200);
  EXPECT_NEAR(steady_state_rates(t).at("S1"), 149.76, 0.02 * 149.76);
}

TEST(Engine, ThreeEqualSourcesReachFairShare) {
  const auto t = run_three(400);
  const auto ss = steady_state_rates(t, 0.2);
  for (const auto& [vc, r] : ss) EXPECT_NEAR(r, 49.92, 0.02 * 49.92) << vc;
  EXPECT_GE(utilization(t, "L1", 320, 400), 0.95);
  EXPECT_NEAR(mean_load_factor(t, "L1", 320, 400), 1.0, 0.05);
  EXPECT_TRUE(queue_stable(queue_stats(t, "L1", 320, 400)));
}

TEST(Engine, WeightedSharesFollowTheOracle) {
  NetworkSpec net = one_link({10, 30, 50}, {15, 35, 55});
  auto e = Engine::build(net, {}, greedy_sources({50, 40, 55}));
  const auto ss = steady_state_rates(e.run(400));
  const auto alloc = solve(net);
  for (const auto& s : net.sessions) EXPECT_NEAR(ss.at(s.id), alloc.at(s.id), 0.02 * alloc.at(s.id)) << s.id;
}

TEST(Engine, TransientSourceShiftsShares) {
  std::map<std::string, SourceModel> src{{"S1", SourceModel::greedy(50)},
                                         {"S2", SourceModel::transient(40, 100, 300)}};
  auto e = Engine::build(one_link({0, 0}, {1, 1}), {}, src);
  const auto t = e.run(500);
  const auto alone = mean_rates(t, 50, 100);
  const auto shared = mean_rates(t, 200, 300);
  const auto after = mean_rates(t, 450, 500);
  EXPECT_NEAR(alone.at("S1"), 149.76, 3.0);
  EXPECT_NEAR(shared.at("S1"), 74.88, 1.5);
  EXPECT_NEAR(shared.at("S2"), 74.88, 1.5);
  EXPECT_NEAR(after.at("S1"), 149.76, 3.0);
  EXPECT_EQ(t.conservation_failures, 0u);
}

TEST(Engine, RateCappedSourceSendsAtCap) {
  NetworkSpec net = one_link({0, 0}, {1, 1});
  net.sessions[0].cap_mbps = 10;
  std::map<std::string, SourceModel> src{{"S1", SourceModel::rate_capped(50, 10)}, {"S2", SourceModel::greedy(30)}};
  auto e = Engine::build(net, {}, src);
  const auto ss = steady_state_rates(e.run(600));
  EXPECT_NEAR(ss.at("S1"), 10.0, 0.2);
  EXPECT_NEAR(ss.at("S2"), 139.76, 0.02 * 139.76);
}

TEST(Engine, CcrModeDiffersFromMeasuredWithCappedSource) {
  NetworkSpec net = one_link({0, 0, 0}, {1, 1, 1});
  net.sessions[0].cap_mbps = 10;
  std::map<std::string, SourceModel> src{{"S1", SourceModel::rate_capped(50, 10)},
                                         {"S2", SourceModel::greedy(30)},
                                         {"S3", SourceModel::greedy(110)}};
  SwitchParams measured;
  SwitchParams ccr;
  ccr.use_measured_source_rate = false;
  const auto tm = Engine::build(net, measured, src).run(1000);
  const auto tc = Engine::build(net, ccr, src).run(1000);
  const auto alloc = solve(net);
  std::map<std::string, double> targets{{"S2", alloc.at("S2")}, {"S3", alloc.at("S3")}};
  EXPECT_TRUE(convergence_time(tm, targets, {0.02, 1.0}).has_value());
  // With the CCR field S1 appears to use its full ACR and the others stay short.
  EXPECT_FALSE(convergence_time(tc, targets, {0.02, 1.0}).has_value());
}

TEST(TraceAnalysis, EmptyTraceAndBadWindow) {
  Trace t;
  EXPECT_THROW(mean_rates(t, 0, 1), Error);
  try {
    steady_state_rates(synthetic({{1, 2}}), 0.0);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
  try {
    mean_rates(t, 0, 1);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyTrace);
  }
}

TEST(TraceAnalysis, MeanIsTimeWeighted) {
  const auto t = synthetic({{0, 0, 10, 10}});
  EXPECT_DOUBLE_EQ(mean_rates(t, 0, 4).at("V0"), 5.0);
  EXPECT_DOUBLE_EQ(mean_rates(t, 1.5, 2.5).at("V0"), 5.0);
  EXPECT_DOUBLE_EQ(steady_state_rates(t, 0.5).at("V0"), 10.0);
}

TEST(TraceAnalysis, ConvergenceTime) {
  const auto t = synthetic({{0, 50, 100, 100, 100}, {100, 100, 100, 100, 100}});
  EXPECT_EQ(convergence_time(t, {{"V0", 100}}, {0.02, 0}), 2.0);
  EXPECT_EQ(convergence_time(t, {{"V1", 100}}, {0.02, 0}), 0.0);
  EXPECT_EQ(convergence_time(t, {{"V0", 100}, {"V1", 100}}, {0.02, 0}), 2.0);
  EXPECT_EQ(convergence_time(t, {{"V0", 100}}, {0.02, 0}, 3.0), 3.0);
  // Still outside the band at the end of the window: not converged.
  EXPECT_FALSE(convergence_time(t, {{"V0", 50}}, {0.02, 0}).has_value());
  EXPECT_FALSE(convergence_time(t, {{"V0", 100}}, {0.02, 0}, 0.0, 1.0).has_value());
  // Absolute bound dominates for small targets.
  EXPECT_EQ(convergence_time(t, {{"V0", 100}}, {0.0, 50}), 1.0);
  EXPECT_THROW(convergence_time(t, {{"nope", 1}}, {}), Error);
}

TEST(TraceAnalysis, QueueStability) {
  EXPECT_TRUE(queue_stable({100, 125, 110}));
  EXPECT_FALSE(queue_stable({0, 60, 30}));
  EXPECT_TRUE(queue_stable({0, 9, 3}));
}
