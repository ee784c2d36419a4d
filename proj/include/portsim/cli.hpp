#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "portsim/config.hpp"
#include "portsim/report.hpp"
#include "portsim/suite.hpp"

namespace portsim {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitData = 2 };

struct EmitFlags {
  bool audit_log = false;
  bool model_dump = false;
  bool per_day = false;
};

struct RunManifest {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  EmitFlags emit;
};

inline EmitFlags parse_emit(const std::vector<std::string>& values) {
  EmitFlags f;
  for (const auto& v : values) {
    if (v == "audit-log") {
      f.audit_log = true;
    } else if (v == "model-dump") {
      f.model_dump = true;
    } else if (v == "per-day") {
      f.per_day = true;
    } else {
      throw ConfigError("unknown --emit value '" + v + "'");
    }
  }
  return f;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

inline void prepare_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("output directory not writable: " + dir.string());
}

}  // namespace detail

// Writes the suite's reports under dir; returns the summary text.
inline std::string write_suite(const SuiteReport& suite, const std::filesystem::path& dir, const EmitFlags& emit) {
  detail::prepare_out_dir(dir);
  const auto metrics = suite.metrics();
  {
    auto f = detail::open_out(dir / "utility.csv");
    write_cycle_csv(f, metrics);
  }
  {
    auto f = detail::open_out(dir / "providers.csv");
    write_provider_csv(f, metrics);
  }
  {
    auto f = detail::open_out(dir / "switches.csv");
    write_switch_csv(f, metrics);
  }
  for (const auto& r : suite.results) {
    const auto slug = scenario_slug(r.config.name);
    {
      auto f = detail::open_out(dir / ("summary_" + slug + ".csv"));
      write_summary_csv(f, summarize(r.metrics));
    }
    if (emit.audit_log) {
      auto f = detail::open_out(dir / ("audit_" + slug + ".ndjson"));
      write_audit_ndjson(f, r.audit);
    }
    if (emit.per_day) {
      auto f = detail::open_out(dir / ("per_day_" + slug + ".csv"));
      write_per_day_csv(f, r.config.name, r.per_day);
    }
    if (emit.model_dump) {
      const auto models = dir / "models";
      detail::prepare_out_dir(models);
      for (const auto& m : r.models) {
        write_model_dump(models / fmt::format("{}_{}_cycle{:02d}", slug, m.recommender, m.cycle + 1), m.model);
      }
    }
  }
  const auto text = render_summary(metrics);
  auto f = detail::open_out(dir / "summary.txt");
  f << text;
  return text;
}

inline int cmd_run(const RunManifest& m, std::ostream& out) {
  auto cfg = parse_config(m.config);
  if (m.seed) override_seed(cfg, *m.seed);
  if (m.out.empty()) throw ConfigError("--out is required");
  detail::prepare_out_dir(m.out);
  const auto data = load_data(cfg.data, cfg.scenarios.front().niche_genre);
  RunOptions opts{m.emit.audit_log, m.emit.per_day, m.emit.model_dump};
  const auto suite = run_experiment_suite(cfg.scenarios, data, opts);
  out << write_suite(suite, m.out, m.emit);
  return kExitOk;
}

// baseline: scenario name to compare against; defaults to "Baseline" or the
// first report.
inline int cmd_compare(const std::vector<std::filesystem::path>& reports, const std::optional<std::string>& baseline,
                       std::ostream& out) {
  std::vector<ScenarioSummary> summaries;
  for (const auto& p : reports) summaries.push_back(load_summary(p));
  std::size_t idx = default_baseline(summaries);
  if (baseline) {
    auto it = std::find_if(summaries.begin(), summaries.end(),
                           [&](const ScenarioSummary& s) { return s.scenario == *baseline; });
    if (it == summaries.end()) throw ConfigError("no report for baseline '" + *baseline + "'");
    idx = static_cast<std::size_t>(it - summaries.begin());
  }
  write_compare(out, compare_reports(summaries, idx));
  return kExitOk;
}

inline int cmd_synth(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                     std::optional<std::uint64_t> seed, std::ostream& out) {
  auto cfg = parse_config(config);
  if (seed) override_seed(cfg, *seed);
  if (cfg.data.kind != DataSource::Kind::Synthetic) throw ConfigError("synth needs a synthetic data source");
  auto spec = cfg.data.synthetic;
  spec.niche_genre = cfg.scenarios.front().niche_genre;
  detail::prepare_out_dir(out_dir);
  const auto data = generate_synthetic(spec);
  write_dataset(data, out_dir);
  out << fmt::format("wrote {} ratings, {} items, {} providers to {}\n", data.log.records.size(),
                     data.catalog.items().size(), data.catalog.providers().size(), out_dir.string());
  return kExitOk;
}

// Maps library errors onto exit codes.
inline int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace portsim
