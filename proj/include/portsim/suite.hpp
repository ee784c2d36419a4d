#pragma once

#include <future>
#include <string>
#include <vector>

#include "portsim/engine.hpp"
#include "portsim/report.hpp"

namespace portsim {

// Scenarios in a suite may differ only in name, policy and (for the
// single-recommender baseline) the missing niche recommender.
inline void check_shared_constants(const std::vector<ScenarioConfig>& configs) {
  if (configs.empty()) throw ConfigError("empty scenario suite");
  const auto& a = configs.front();
  for (const auto& b : configs) {
    const bool same = a.cycles == b.cycles && a.days_per_cycle == b.days_per_cycle && a.slate_size == b.slate_size &&
                      a.warmup_cycles == b.warmup_cycles && a.behavior == b.behavior && a.niche_genre == b.niche_genre &&
                      a.seed == b.seed && a.switch_timing == b.switch_timing && !b.recommenders.empty() &&
                      a.recommenders.front() == b.recommenders.front();
    if (!same) throw ConfigError("scenario '" + b.name + "' differs from '" + a.name + "' in shared constants");
  }
  for (const auto& b : configs) {
    for (const auto& r : b.recommenders) {
      for (const auto& other : configs) {
        for (const auto& o : other.recommenders) {
          if (o.id == r.id && !(o == r)) throw ConfigError("recommender " + r.id + " configured inconsistently");
        }
      }
    }
  }
}

struct SuiteReport {
  std::vector<ScenarioResult> results;
  ComparisonTable table;

  std::vector<MetricsReport> metrics() const {
    std::vector<MetricsReport> out;
    for (const auto& r : results) out.push_back(r.metrics);
    return out;
  }
};

// Scenarios only share the immutable dataset, so they may run concurrently.
inline SuiteReport run_experiment_suite(const std::vector<ScenarioConfig>& configs, const Dataset& data,
                                        RunOptions opts = {}, bool parallel = true) {
  check_shared_constants(configs);
  for (const auto& c : configs) validate(c);
  SuiteReport out;
  if (parallel && configs.size() > 1) {
    std::vector<std::future<ScenarioResult>> jobs;
    for (const auto& c : configs) {
      jobs.push_back(std::async(std::launch::async, [&data, c, opts] { return run_scenario(c, data, opts); }));
    }
    for (auto& j : jobs) out.results.push_back(j.get());
  } else {
    for (const auto& c : configs) out.results.push_back(run_scenario(c, data, opts));
  }
  out.table = build_comparison(out.metrics());
  return out;
}

}  // namespace portsim
