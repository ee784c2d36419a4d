#include <gtest/gtest.h>

#include <limits>
#include <map>
#include <sstream>

#include "support.hpp"

using namespace portsim;
using namespace portsim::testing;

namespace {

const Dataset& data() {
  static const Dataset d = small_dataset();
  return d;
}

std::string all_csv(MetricsReport m, const std::string& rename = {}) {
  if (!rename.empty()) m.scenario = rename;
  std::ostringstream out;
  write_cycle_csv(out, {m});
  write_provider_csv(out, {m});
  write_switch_csv(out, {m});
  write_summary_csv(out, summarize(m));
  for (const auto& [p, n] : m.clicks_by_provider) out << p << ',' << n << '\n';
  for (const auto& [p, n] : m.provenance_counts) out << to_string(p) << ',' << n << '\n';
  out << m.slates << ',' << m.selections << '\n';
  return out.str();
}

Dataset three_consumers() {
  const std::vector<std::string> g{"Comedy", "Horror"};
  std::vector<ItemRecord> items;
  for (int i = 1; i <= 12; ++i) {
    items.push_back(make_item(i, i % 3 == 0 ? gvec(g, {"Horror"}) : gvec(g, {"Comedy"}), i % 3 == 0 ? "scary" : "fun"));
  }
  auto log = make_log({rating(1, 1, 5), rating(1, 2, 4), rating(2, 3, 5), rating(2, 6, 4), rating(3, 4, 5),
                       rating(3, 9, 2)});
  return prepare_dataset(std::move(log), Catalog(g, items), "Horror");
}

}  // namespace

TEST(Engine, BaselineMatchesUniversalWithoutNicheOrSwitching) {
  auto base = small_scenario(std::nullopt);
  auto uni = small_scenario(PortabilityPolicy::Universal);
  uni.recommenders.resize(1);
  uni.behavior.tau = -std::numeric_limits<double>::infinity();
  const auto a = run_scenario(base, data(), {true, true, false});
  const auto b = run_scenario(uni, data(), {true, true, false});
  EXPECT_EQ(all_csv(a.metrics), all_csv(b.metrics, a.metrics.scenario));
  EXPECT_EQ(a.audit, b.audit);
  ASSERT_EQ(a.per_day.size(), b.per_day.size());
  for (std::size_t i = 0; i < a.per_day.size(); ++i) {
    EXPECT_EQ(a.per_day[i].utility, b.per_day[i].utility);
    EXPECT_EQ(a.per_day[i].clicked, b.per_day[i].clicked);
  }
  EXPECT_TRUE(a.metrics.switches.empty());
}

TEST(Engine, NoSwitchesDuringWarmup) {
  for (auto p : kAllPolicies) {
    auto cfg = small_scenario(p);
    cfg.warmup_cycles = 2;
    cfg.behavior.tau = 1.0;  // everyone is unhappy
    const auto r = run_scenario(cfg, data(), {true, false, false});
    ASSERT_FALSE(r.metrics.switches.empty());
    for (const auto& s : r.metrics.switches) EXPECT_GE(s.cycle, cfg.warmup_cycles);
    for (const auto& e : r.audit) {
      if (e.kind != AuditEvent::Kind::Click) {
        EXPECT_GE(e.day, cfg.warmup_cycles * cfg.days_per_cycle - 1);
      }
    }
  }
}

TEST(Engine, PerDayTimingAlsoRespectsWarmup) {
  auto cfg = small_scenario(PortabilityPolicy::ColdStart);
  cfg.switch_timing = SwitchTiming::PerDay;
  cfg.behavior.tau = 1.0;
  const auto r = run_scenario(cfg, data());
  ASSERT_FALSE(r.metrics.switches.empty());
  for (const auto& s : r.metrics.switches) EXPECT_GE(s.cycle, cfg.warmup_cycles);
}

TEST(Engine, ClickConservation) {
  for (auto p : kAllPolicies) {
    const auto r = run_scenario(small_scenario(p), data(), {false, true, false});
    std::int64_t by_type = 0, by_provider = 0, clicked_rows = 0;
    for (const auto& [t, n] : r.metrics.provider_clicks) by_type += n;
    for (const auto& [v, n] : r.metrics.clicks_by_provider) by_provider += n;
    for (const auto& row : r.per_day) clicked_rows += row.clicked.has_value();
    EXPECT_EQ(by_type, r.metrics.selections);
    EXPECT_EQ(by_provider, r.metrics.selections);
    EXPECT_EQ(clicked_rows, r.metrics.selections);
    std::int64_t tiers = 0;
    for (const auto& [t, n] : r.metrics.provenance_counts) tiers += n;
    EXPECT_EQ(tiers, r.metrics.slates);
  }
}

TEST(Engine, OneSlatePerConsumerPerDay) {
  auto d = three_consumers();
  auto cfg = small_scenario(PortabilityPolicy::AlgorithmSpecific);
  cfg.slate_size = 3;
  for (auto& r : cfg.recommenders) r.popular_list_size = 3;
  Simulation sim(cfg, d);
  sim.begin_cycle();
  const auto rows = sim.run_day();
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(sim.metrics().slates, 3);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].consumer, ConsumerId{static_cast<std::int64_t>(i + 1)});
}

TEST(Engine, ClickCreditsTheItemsProvider) {
  auto d = three_consumers();
  auto cfg = small_scenario(PortabilityPolicy::Universal);
  cfg.slate_size = 3;
  for (auto& r : cfg.recommenders) r.popular_list_size = 3;
  Simulation sim(cfg, d);
  sim.begin_cycle();
  std::map<ProviderId, std::int64_t> expect;
  for (int day = 0; day < 3; ++day) {
    for (const auto& row : sim.run_day()) {
      if (row.clicked) ++expect[d.catalog.item(*row.clicked).provider];
    }
    EXPECT_EQ(sim.metrics().clicks_by_provider, expect);
  }
}

TEST(Engine, EstimateUpdatedWithoutClick) {
  auto d = three_consumers();
  auto cfg = small_scenario(PortabilityPolicy::Universal);
  cfg.slate_size = 3;
  cfg.behavior.select_threshold = 1.0;
  for (auto& r : cfg.recommenders) r.popular_list_size = 3;
  Simulation sim(cfg, d);
  sim.begin_cycle();
  // only exact genre matches can be clicked at this threshold
  const auto rows = sim.run_day();
  int unclicked = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    unclicked += !rows[i].clicked;
    EXPECT_EQ(sim.consumers()[i].estimate(kGenericRecommender), rows[i].utility);
  }
  EXPECT_GT(unclicked, 0);
}

TEST(Engine, SwitchEventsHappyConsumersStay) {
  auto d = three_consumers();
  auto cfg = small_scenario(PortabilityPolicy::Universal);
  cfg.slate_size = 3;
  for (auto& r : cfg.recommenders) r.popular_list_size = 3;
  cfg.behavior.tau = 0.0;
  Simulation sim(cfg, d);
  sim.begin_cycle();
  sim.run_day();
  EXPECT_TRUE(sim.evaluate_switches().empty());
}

TEST(Engine, UnhappyNicheConsumerMovesToNiche) {
  auto d = three_consumers();
  auto cfg = small_scenario(PortabilityPolicy::UserOwnership);
  Simulation sim(cfg, d);
  sim.begin_cycle();
  sim.run_day();
  auto& c = sim.consumers()[1];
  ASSERT_EQ(c.type, ConsumerType::Niche);
  c.estimates[kGenericRecommender] = 0.05;
  const auto events = sim.evaluate_switches();
  auto it = std::find_if(events.begin(), events.end(), [](const SwitchEvent& e) { return e.consumer == ConsumerId{2}; });
  ASSERT_NE(it, events.end());
  EXPECT_EQ(it->type, ConsumerType::Niche);
  EXPECT_EQ(it->from, kGenericRecommender);
  EXPECT_EQ(it->to, kNicheRecommender);
  EXPECT_EQ(sim.store().visible_profile(ConsumerId{2}, kGenericRecommender), nullptr);
}

TEST(Engine, AuditReplayReproducesSwitches) {
  for (auto p : kAllPolicies) {
    auto cfg = small_scenario(p);
    cfg.behavior.tau = 0.6;
    const auto r = run_scenario(cfg, data(), {true, false, false});
    std::ostringstream out;
    write_audit_ndjson(out, r.audit);
    std::istringstream in(out.str());
    std::vector<std::tuple<int, ConsumerId, RecommenderId, RecommenderId>> replayed, logged;
    for (const auto& e : read_audit_ndjson(in)) {
      if (e.kind == AuditEvent::Kind::Switch) replayed.emplace_back(e.day, e.consumer, e.from, e.to);
    }
    for (const auto& s : r.metrics.switches) logged.emplace_back(s.day, s.consumer, s.from, s.to);
    ASSERT_FALSE(logged.empty());
    EXPECT_EQ(replayed, logged);
  }
}

TEST(Engine, Deterministic) {
  auto cfg = small_scenario(PortabilityPolicy::ColdStart);
  EXPECT_EQ(all_csv(run_scenario(cfg, data()).metrics), all_csv(run_scenario(cfg, data()).metrics));
}

TEST(Engine, InvalidConfigRejectedUpFront) {
  auto cfg = small_scenario(PortabilityPolicy::ColdStart);
  cfg.warmup_cycles = cfg.cycles;
  EXPECT_THROW(run_scenario(cfg, data()), ConfigError);
  cfg = small_scenario(std::nullopt);
  cfg.recommenders.push_back(small_scenario(PortabilityPolicy::ColdStart).recommenders.back());
  EXPECT_THROW(run_scenario(cfg, data()), ConfigError);
  cfg = small_scenario(PortabilityPolicy::ColdStart);
  cfg.recommenders.back().genre.reset();
  EXPECT_THROW(run_scenario(cfg, data()), ConfigError);
  cfg = small_scenario(PortabilityPolicy::ColdStart);
  cfg.recommenders.back().genre = "Polka";
  EXPECT_THROW(run_scenario(cfg, data()), ConfigError);
}

TEST(Engine, AttachmentAndLedgerMonotone) {
  auto cfg = small_scenario(PortabilityPolicy::AlgorithmSpecific);
  cfg.behavior.tau = 0.5;
  Simulation sim(cfg, data());
  std::int64_t prev = 0;
  for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
    sim.begin_cycle();
    for (int d = 0; d < cfg.days_per_cycle; ++d) {
      sim.run_day();
      std::int64_t total = 0;
      for (const auto& [t, n] : sim.metrics().provider_clicks) total += n;
      EXPECT_GE(total, prev);
      prev = total;
    }
    sim.end_cycle();
    if (cycle >= cfg.warmup_cycles) sim.evaluate_switches();
    for (const auto& c : sim.consumers()) {
      EXPECT_NE(std::find(sim.active().begin(), sim.active().end(), c.current), sim.active().end());
      EXPECT_TRUE(c.tried.contains(c.current));
    }
  }
}

TEST(Suite, FiveScenarioTable) {
  std::vector<ScenarioConfig> configs{small_scenario(std::nullopt)};
  for (auto p : kAllPolicies) configs.push_back(small_scenario(p));
  const auto suite = run_experiment_suite(configs, data());
  const auto& t = suite.table;
  EXPECT_EQ(t.scenarios, (std::vector<std::string>{"Baseline", "Algorithm-Specific", "Cold Start", "User Ownership",
                                                   "Universal"}));
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.rows[0].section, kConsumerUtility);
  EXPECT_EQ(t.rows[2].section, kProviderClicks);
  for (const auto& row : t.rows) EXPECT_EQ(row.values.size(), 5u);
  EXPECT_EQ(t.baseline, 0u);
  const auto text = render_summary(suite.metrics());
  EXPECT_NE(text.find("# Ratio to Baseline"), std::string::npos);
}

TEST(Suite, SingleBaselineHasNoDeltas) {
  const auto suite = run_experiment_suite({small_scenario(std::nullopt)}, data());
  EXPECT_EQ(suite.table.scenarios.size(), 1u);
  EXPECT_EQ(render_summary(suite.metrics()).find("# Ratio"), std::string::npos);
}

TEST(Suite, MismatchedConstantsRejected) {
  auto a = small_scenario(std::nullopt);
  auto b = small_scenario(PortabilityPolicy::Universal);
  b.days_per_cycle += 1;
  EXPECT_THROW(run_experiment_suite({a, b}, data()), ConfigError);
  b = small_scenario(PortabilityPolicy::Universal);
  b.recommenders.front().mf.factors += 1;
  EXPECT_THROW(run_experiment_suite({a, b}, data()), ConfigError);
}

TEST(Suite, SeedsIsolated) {
  auto one = run_experiment_suite({small_scenario(PortabilityPolicy::ColdStart, 1)}, data());
  auto two = run_experiment_suite({small_scenario(PortabilityPolicy::ColdStart, 2)}, data());
  auto one_again = run_experiment_suite({small_scenario(PortabilityPolicy::ColdStart, 1)}, data());
  EXPECT_NE(all_csv(one.results[0].metrics), all_csv(two.results[0].metrics));
  EXPECT_EQ(all_csv(one.results[0].metrics), all_csv(one_again.results[0].metrics));
}

TEST(Suite, ParallelMatchesSerial) {
  std::vector<ScenarioConfig> configs{small_scenario(std::nullopt), small_scenario(PortabilityPolicy::UserOwnership)};
  auto par = run_experiment_suite(configs, data(), {}, true);
  auto ser = run_experiment_suite(configs, data(), {}, false);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    EXPECT_EQ(all_csv(par.results[i].metrics), all_csv(ser.results[i].metrics));
  }
}

TEST(Slug, ScenarioNames) {
  EXPECT_EQ(scenario_slug("Algorithm-Specific"), "algorithm_specific");
  EXPECT_EQ(scenario_slug("Cold Start"), "cold_start");
  EXPECT_EQ(scenario_slug("Baseline"), "baseline");
}
