#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "portsim/als.hpp"
#include "portsim/behavior.hpp"
#include "portsim/dataset.hpp"
#include "portsim/portability.hpp"
#include "portsim/recommender.hpp"
#include "portsim/rng.hpp"
#include "portsim/types.hpp"

namespace portsim {

enum class SwitchTiming { EndOfCycle, PerDay };

struct ScenarioConfig {
  std::string name;
  std::optional<PortabilityPolicy> policy;  // nullopt: single-recommender baseline, no switching
  int cycles = 10;
  int days_per_cycle = 10;
  std::size_t slate_size = 10;
  int warmup_cycles = 2;
  BehaviorParams behavior;
  std::vector<RecommenderConfig> recommenders;  // front() is where every consumer starts
  std::string niche_genre;
  std::uint64_t seed = 0;
  SwitchTiming switch_timing = SwitchTiming::EndOfCycle;

  bool is_baseline() const noexcept { return !policy.has_value(); }
  // The baseline keeps a single shared profile store.
  PortabilityPolicy store_policy() const noexcept { return policy.value_or(PortabilityPolicy::Universal); }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

inline std::string scenario_name(std::optional<PortabilityPolicy> policy) {
  return policy ? std::string(display_name(*policy)) : std::string("Baseline");
}

// "Algorithm-Specific" -> "algorithm_specific"
inline std::string scenario_slug(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

// Generic recommender first; the niche recommender is added for switching
// scenarios only.
inline ScenarioConfig standard_scenario(std::optional<PortabilityPolicy> policy, std::uint64_t seed,
                                        std::string niche_genre, MfParams mf = {},
                                        std::size_t popular_list_size = 100) {
  ScenarioConfig cfg;
  cfg.name = scenario_name(policy);
  cfg.policy = policy;
  cfg.seed = seed;
  cfg.niche_genre = niche_genre;
  cfg.recommenders.push_back({kGenericRecommender, std::nullopt, mf, popular_list_size});
  if (policy) cfg.recommenders.push_back({kNicheRecommender, niche_genre, mf, popular_list_size});
  return cfg;
}

inline std::vector<ScenarioConfig> standard_suite(std::uint64_t seed, std::string niche_genre, MfParams mf = {}) {
  std::vector<ScenarioConfig> out;
  out.push_back(standard_scenario(std::nullopt, seed, niche_genre, mf));
  for (auto p : kAllPolicies) out.push_back(standard_scenario(p, seed, niche_genre, mf));
  return out;
}

inline void validate(const ScenarioConfig& cfg) {
  if (cfg.cycles < 1) throw ConfigError("cycles must be >= 1");
  if (cfg.days_per_cycle < 1) throw ConfigError("days per cycle must be >= 1");
  if (cfg.slate_size < 1) throw ConfigError("slate size must be >= 1");
  if (cfg.warmup_cycles < 0 || cfg.warmup_cycles >= cfg.cycles) {
    throw ConfigError("warmup cycles must satisfy 0 <= warmup < cycles");
  }
  if (cfg.niche_genre.empty()) throw ConfigError("niche genre is empty");
  validate(cfg.behavior);
  if (cfg.recommenders.empty()) throw ConfigError("no recommenders configured");
  std::set<RecommenderId> ids;
  for (const auto& r : cfg.recommenders) {
    validate(r, cfg.slate_size);
    if (!ids.insert(r.id).second) throw ConfigError("duplicate recommender id " + r.id);
  }
  if (cfg.is_baseline() && cfg.recommenders.size() != 1) {
    throw ConfigError("baseline scenario must have exactly one recommender");
  }
  if (cfg.recommenders.size() > 2) throw ConfigError("at most two recommenders are supported");
  if (cfg.recommenders.size() == 2) {
    const auto specialized = std::count_if(cfg.recommenders.begin(), cfg.recommenders.end(),
                                           [](const RecommenderConfig& r) { return r.genre.has_value(); });
    if (specialized != 1) throw ConfigError("two-recommender setup needs exactly one genre-specialized recommender");
  }
}

struct CycleUtility {
  int cycle = 0;
  ConsumerType type = ConsumerType::Generic;
  double mean = 0.0;
  std::size_t n = 0;
  friend bool operator==(const CycleUtility&, const CycleUtility&) = default;
};

struct SwitchEvent {
  int cycle = 0;
  int day = 0;
  ConsumerId consumer{};
  ConsumerType type = ConsumerType::Generic;
  RecommenderId from, to;
  friend bool operator==(const SwitchEvent&, const SwitchEvent&) = default;
};

struct DayRow {
  int day = 0;
  ConsumerId consumer{};
  RecommenderId recommender;
  Provenance provenance = Provenance::Model;
  std::size_t slate_size = 0;
  double utility = 0.0;
  std::optional<ItemId> clicked;
};

struct ModelDump {
  int cycle = 0;
  RecommenderId recommender;
  TrainedModel model;
};

struct MetricsReport {
  std::string scenario;
  std::vector<CycleUtility> cycle_utility;
  std::map<ConsumerType, double> last_cycle_utility;
  std::map<ProviderType, std::int64_t> provider_clicks{{ProviderType::Generic, 0}, {ProviderType::Niche, 0}};
  std::map<ProviderId, std::int64_t> clicks_by_provider;
  std::vector<SwitchEvent> switches;
  std::map<Provenance, std::int64_t> provenance_counts;
  std::int64_t slates = 0;
  std::int64_t selections = 0;

  std::map<std::pair<ConsumerType, RecommenderId>, std::int64_t> switch_counts() const {
    std::map<std::pair<ConsumerType, RecommenderId>, std::int64_t> out;
    for (const auto& s : switches) ++out[{s.type, s.to}];
    return out;
  }
};

struct RunOptions {
  bool audit = false;
  bool per_day = false;
  bool model_dump = false;
};

struct ScenarioResult {
  ScenarioConfig config;
  MetricsReport metrics;
  std::vector<AuditEvent> audit;
  std::vector<DayRow> per_day;
  std::vector<ModelDump> models;
};

// Ecosystem state for one scenario. Consumers are always processed in
// ascending id order and every consumer draws from its own rng stream, so a
// run is a pure function of (config, data).
class Simulation {
 public:
  Simulation(ScenarioConfig cfg, const Dataset& data, RunOptions opts = {})
      : cfg_(std::move(cfg)),
        data_(data),
        opts_(opts),
        store_(cfg_.store_policy(), recommender_ids(cfg_), make_sink()) {
    validate(cfg_);
    if (data_.consumers.empty()) throw DataError("no consumers to simulate");
    for (const auto& r : cfg_.recommenders) {
      active_.push_back(r.id);
      std::optional<std::size_t> g;
      if (r.genre) {
        g = data_.catalog.genre_index(*r.genre);
        if (!g) throw ConfigError("genre '" + *r.genre + "' not in catalog");
      }
      genre_of_[r.id] = g;
      config_of_[r.id] = r;
    }
    global_popular_ = popular_list(data_.log, cfg_.recommenders.front().popular_list_size);

    const auto& home = active_.front();
    for (const auto& seed : data_.consumers) {
      consumers_.emplace_back(seed.consumer, seed.preference, seed.type, home);
      rngs_.emplace_back(derive_seed(cfg_.seed, "consumer", raw(seed.consumer)));
    }
    std::vector<std::size_t> order(consumers_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return consumers_[a].id < consumers_[b].id; });
    std::vector<ConsumerState> sorted_c;
    std::vector<Rng> sorted_r;
    for (auto i : order) {
      sorted_c.push_back(std::move(consumers_[i]));
      sorted_r.push_back(rngs_[i]);
    }
    consumers_ = std::move(sorted_c);
    rngs_ = std::move(sorted_r);
    for (std::size_t i = 1; i < consumers_.size(); ++i) {
      if (consumers_[i].id == consumers_[i - 1].id) throw DataError("duplicate consumer id");
    }

    for (const auto& seed : data_.consumers) store_.seed_history(seed.consumer, home, seed.initial_history);
    cycle_sum_.assign(consumers_.size(), 0.0);
    result_.config = cfg_;
    result_.metrics.scenario = cfg_.name;
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const ScenarioConfig& config() const noexcept { return cfg_; }
  const std::vector<ConsumerState>& consumers() const noexcept { return consumers_; }
  std::vector<ConsumerState>& consumers() noexcept { return consumers_; }
  const ProfileStore& store() const noexcept { return store_; }
  const std::vector<RecommenderId>& active() const noexcept { return active_; }
  const MetricsReport& metrics() const noexcept { return result_.metrics; }
  const ServingState& serving(const RecommenderId& k) const { return serving_.at(k); }
  int cycle() const noexcept { return cycle_; }
  int day() const noexcept { return day_; }

  // Trains every active recommender on its current training view and
  // freezes the subscriber popularity ranking for tier-2 serving.
  void begin_cycle() {
    for (const auto& k : active_) {
      const auto snapshot = store_.training_view(k);
      ServingState state;
      state.model = train_als(snapshot, config_of_.at(k).mf, derive_seed(cfg_.seed, "train:" + k, cycle_), cycle_);
      std::set<ConsumerId> subscribers;
      for (const auto& c : consumers_) {
        if (c.current == k) subscribers.insert(c.id);
      }
      state.subscriber_popular = popular_list(snapshot, std::numeric_limits<std::size_t>::max(), &subscribers);
      if (opts_.model_dump) result_.models.push_back({cycle_, k, state.model});
      serving_[k] = std::move(state);
    }
    std::fill(cycle_sum_.begin(), cycle_sum_.end(), 0.0);
    days_in_cycle_ = 0;
  }

  // One slate per consumer; utility estimate updated from the slate whether
  // or not anything is clicked.
  std::vector<DayRow> run_day() {
    std::vector<DayRow> rows;
    rows.reserve(consumers_.size());
    auto& m = result_.metrics;
    for (std::size_t i = 0; i < consumers_.size(); ++i) {
      auto& c = consumers_[i];
      auto& rng = rngs_[i];
      const auto& k = c.current;
      const auto candidates = candidate_items(data_.catalog, genre_of_.at(k), store_.visible_profile(c.id, k));
      const auto slate = recommend(k, c.id, serving_.at(k), candidates, cfg_.slate_size, global_popular_, rng);
      const double mu = list_utility(c.preference, slate.items, data_.catalog);
      c.observe(k, mu, cfg_.behavior.beta);
      cycle_sum_[i] += mu;
      ++m.slates;
      ++m.provenance_counts[slate.provenance];

      const auto picked = select_item(c.preference, slate.items, data_.catalog, cfg_.behavior, rng);
      if (picked) {
        store_.record_click(c.id, k, *picked, day_);
        const auto& provider = data_.catalog.item(*picked).provider;
        ++m.clicks_by_provider[provider];
        ++m.provider_clicks[data_.catalog.provider(provider).type];
        ++m.selections;
      }
      rows.push_back({day_, c.id, k, slate.provenance, slate.items.size(), mu, picked});
    }
    ++days_in_cycle_;
    last_day_ = day_;
    ++day_;
    if (opts_.per_day) result_.per_day.insert(result_.per_day.end(), rows.begin(), rows.end());
    return rows;
  }

  // Applies the switching rule to every consumer and the policy's profile
  // management to every switch.
  std::vector<SwitchEvent> evaluate_switches() {
    std::vector<SwitchEvent> events;
    for (auto& c : consumers_) {
      const auto from = c.current;
      const auto decision = maybe_switch(c, cfg_.behavior, active_);
      if (decision.stays()) continue;
      store_.emit_switch(c.id, from, *decision.to, last_day_);
      store_.on_switch(c.id, from, *decision.to, last_day_);
      events.push_back({cycle_, last_day_, c.id, c.type, from, *decision.to});
    }
    auto& log = result_.metrics.switches;
    log.insert(log.end(), events.begin(), events.end());
    return events;
  }

  // Closes the cycle's utility accounting: per-consumer mean over days,
  // then the mean within each consumer type.
  void end_cycle() {
    std::map<ConsumerType, std::pair<double, std::size_t>> acc;
    for (std::size_t i = 0; i < consumers_.size(); ++i) {
      auto& a = acc[consumers_[i].type];
      a.first += days_in_cycle_ > 0 ? cycle_sum_[i] / days_in_cycle_ : 0.0;
      ++a.second;
    }
    auto& m = result_.metrics;
    for (auto type : {ConsumerType::Generic, ConsumerType::Niche}) {
      auto it = acc.find(type);
      if (it == acc.end()) continue;
      const double mean = it->second.first / static_cast<double>(it->second.second);
      m.cycle_utility.push_back({cycle_, type, mean, it->second.second});
      m.last_cycle_utility[type] = mean;
    }
  }

  bool switching_allowed() const noexcept { return !cfg_.is_baseline() && cycle_ >= cfg_.warmup_cycles; }

  ScenarioResult run() {
    for (cycle_ = 0; cycle_ < cfg_.cycles; ++cycle_) {
      begin_cycle();
      for (int d = 0; d < cfg_.days_per_cycle; ++d) {
        run_day();
        if (cfg_.switch_timing == SwitchTiming::PerDay && switching_allowed()) evaluate_switches();
      }
      end_cycle();
      if (cfg_.switch_timing == SwitchTiming::EndOfCycle && switching_allowed()) evaluate_switches();
    }
    --cycle_;
    return std::move(result_);
  }

 private:
  static std::vector<RecommenderId> recommender_ids(const ScenarioConfig& cfg) {
    std::vector<RecommenderId> ids;
    for (const auto& r : cfg.recommenders) ids.push_back(r.id);
    return ids;
  }

  AuditSink make_sink() {
    if (!opts_.audit) return {};
    return [this](const AuditEvent& e) { result_.audit.push_back(e); };
  }

  ScenarioConfig cfg_;
  const Dataset& data_;
  RunOptions opts_;
  ScenarioResult result_;
  ProfileStore store_;
  std::vector<RecommenderId> active_;
  std::map<RecommenderId, std::optional<std::size_t>> genre_of_;
  std::map<RecommenderId, RecommenderConfig> config_of_;
  std::vector<ItemId> global_popular_;
  std::vector<ConsumerState> consumers_;
  std::vector<Rng> rngs_;
  std::map<RecommenderId, ServingState> serving_;
  std::vector<double> cycle_sum_;
  int days_in_cycle_ = 0;
  int cycle_ = 0;
  int day_ = 0;
  int last_day_ = 0;
};

inline ScenarioResult run_scenario(const ScenarioConfig& cfg, const Dataset& data, RunOptions opts = {}) {
  validate(cfg);
  Simulation sim(cfg, data, opts);
  return sim.run();
}

}  // namespace portsim
