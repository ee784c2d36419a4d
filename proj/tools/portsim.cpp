#include <iostream>

#include <CLI11.hpp>

#include "portsim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"portsim: recommender ecosystem simulation under profile portability policies"};
  app.require_subcommand(1);

  portsim::RunManifest manifest;
  std::vector<std::string> emit;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "run the scenario suite and write reports");
  run->add_option("--config", manifest.config, "config file")->required();
  run->add_option("--out", manifest.out, "output directory")->required();
  auto* run_seed = run->add_option("--seed", seed, "override the root seed");
  run->add_option("--emit", emit, "audit-log | model-dump | per-day")->take_all();

  std::vector<std::filesystem::path> reports;
  std::string baseline;
  auto* compare = app.add_subcommand("compare", "compare summary reports against a baseline");
  compare->add_option("reports", reports, "summary_<scenario>.csv files")->required();
  auto* base_opt = compare->add_option("--baseline", baseline, "scenario name of the baseline report");

  std::filesystem::path synth_config, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--config", synth_config, "config file")->required();
  synth->add_option("--out", synth_out, "output directory")->required();
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "override the root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : portsim::kExitValidation;
  }

  return portsim::guarded(
      [&] {
        if (*run) {
          manifest.emit = portsim::parse_emit(emit);
          if (*run_seed) manifest.seed = seed;
          return portsim::cmd_run(manifest, std::cout);
        }
        if (*compare) {
          std::optional<std::string> b;
          if (*base_opt) b = baseline;
          return portsim::cmd_compare(reports, b, std::cout);
        }
        std::optional<std::uint64_t> s;
        if (*synth_seed_opt) s = synth_seed;
        return portsim::cmd_synth(synth_config, synth_out, s, std::cout);
      },
      std::cerr);
}
