// Runs Baseline and Universal on a small synthetic ecosystem and prints
// the comparison.
#include <iostream>

#include "portsim/portsim.hpp"

int main() {
  portsim::SyntheticSpec spec;
  spec.consumers = 120;
  spec.items = 150;
  spec.providers = 8;
  spec.seed = 7;
  auto synth = portsim::generate_synthetic(spec);
  const auto data = portsim::prepare_dataset(std::move(synth.log), std::move(synth.catalog), spec.niche_genre);

  std::vector<portsim::ScenarioConfig> suite{
      portsim::standard_scenario(std::nullopt, spec.seed, spec.niche_genre),
      portsim::standard_scenario(portsim::PortabilityPolicy::Universal, spec.seed, spec.niche_genre),
  };
  for (auto& s : suite) s.cycles = 5;

  const auto report = portsim::run_experiment_suite(suite, data);
  std::cout << portsim::render_summary(report.metrics());
}
