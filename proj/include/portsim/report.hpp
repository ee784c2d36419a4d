#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "portsim/csv.hpp"
#include "portsim/engine.hpp"

namespace portsim {

inline std::string format_value(double v) { return fmt::format("{:.6f}", v); }

inline void write_cycle_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << "scenario,cycle,consumer_type,mean_utility,n\n";
  for (const auto& r : reports) {
    for (const auto& row : r.cycle_utility) {
      out << csv::quote(r.scenario) << ',' << row.cycle + 1 << ',' << to_string(row.type) << ','
          << format_value(row.mean) << ',' << row.n << '\n';
    }
  }
}

inline void write_provider_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << "scenario,provider_type,cumulative_clicks\n";
  for (const auto& r : reports) {
    for (const auto& [type, clicks] : r.provider_clicks) {
      out << csv::quote(r.scenario) << ',' << to_string(type) << ',' << clicks << '\n';
    }
  }
}

inline void write_switch_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << "scenario,cycle,consumer_type,to_recommender,count\n";
  for (const auto& r : reports) {
    std::map<std::tuple<int, ConsumerType, RecommenderId>, std::int64_t> counts;
    for (const auto& s : r.switches) ++counts[{s.cycle, s.type, s.to}];
    for (const auto& [key, n] : counts) {
      const auto& [cycle, type, to] = key;
      out << csv::quote(r.scenario) << ',' << cycle + 1 << ',' << to_string(type) << ',' << to << ',' << n << '\n';
    }
  }
}

inline void write_per_day_csv(std::ostream& out, const std::string& scenario, const std::vector<DayRow>& rows) {
  out << "scenario,day,consumer,recommender,provenance,slate_size,utility,clicked_item\n";
  for (const auto& r : rows) {
    out << csv::quote(scenario) << ',' << r.day << ',' << raw(r.consumer) << ',' << r.recommender << ','
        << to_string(r.provenance) << ',' << r.slate_size << ',' << format_value(r.utility) << ',';
    if (r.clicked) out << raw(*r.clicked);
    out << '\n';
  }
}

inline void write_audit_ndjson(std::ostream& out, const std::vector<AuditEvent>& events) {
  for (const auto& e : events) out << to_json(e).dump() << '\n';
}

inline std::vector<AuditEvent> read_audit_ndjson(std::istream& in) {
  std::vector<AuditEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    out.push_back(audit_event_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

// Two files per dump: `<prefix>_users.csv` and `<prefix>_items.csv`, rows `id,f1,...,fd`.
inline void write_model_dump(const std::filesystem::path& prefix, const TrainedModel& model) {
  auto dump = [](const std::filesystem::path& path, const auto& ids, const Eigen::MatrixXd& f) {
    std::ofstream out(path);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      out << raw(ids[r]);
      for (Eigen::Index c = 0; c < f.cols(); ++c) out << ',' << fmt::format("{:.9g}", f(static_cast<Eigen::Index>(r), c));
      out << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
  };
  dump(prefix.string() + "_users.csv", model.users(), model.user_factors());
  dump(prefix.string() + "_items.csv", model.items(), model.item_factors());
}

// Per-scenario summary, the unit `compare` works on. Schema:
// `scenario,metric,group,value` with metrics consumer_utility (last cycle)
// and provider_clicks (cumulative).
struct SummaryRow {
  std::string metric;
  std::string group;
  double value = 0.0;
  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct ScenarioSummary {
  std::string scenario;
  std::vector<SummaryRow> rows;
  friend bool operator==(const ScenarioSummary&, const ScenarioSummary&) = default;

  std::optional<double> value(std::string_view metric, std::string_view group) const {
    for (const auto& r : rows) {
      if (r.metric == metric && r.group == group) return r.value;
    }
    return std::nullopt;
  }
};

inline const std::string kSummaryHeader = "scenario,metric,group,value";
inline const std::string kConsumerUtility = "consumer_utility";
inline const std::string kProviderClicks = "provider_clicks";

inline ScenarioSummary summarize(const MetricsReport& r) {
  ScenarioSummary s{r.scenario, {}};
  for (const auto& [type, v] : r.last_cycle_utility) s.rows.push_back({kConsumerUtility, std::string(to_string(type)), v});
  for (const auto& [type, v] : r.provider_clicks) {
    s.rows.push_back({kProviderClicks, std::string(to_string(type)), static_cast<double>(v)});
  }
  return s;
}

inline void write_summary_csv(std::ostream& out, const ScenarioSummary& s) {
  out << kSummaryHeader << '\n';
  for (const auto& r : s.rows) {
    const bool integral = r.metric == kProviderClicks;
    out << csv::quote(s.scenario) << ',' << r.metric << ',' << r.group << ','
        << (integral ? fmt::format("{}", static_cast<std::int64_t>(std::llround(r.value))) : format_value(r.value))
        << '\n';
  }
}

inline ScenarioSummary parse_summary(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  ScenarioSummary s;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    if (!header) {
      if (csv::trim(line) != kSummaryHeader) throw ParseError("schema mismatch: expected header '" + kSummaryHeader + "'", lineno);
      header = true;
      continue;
    }
    auto f = csv::split(line);
    if (f.size() != 4) throw ParseError("schema mismatch: expected 4 fields", lineno);
    if (s.scenario.empty()) {
      s.scenario = f[0];
    } else if (s.scenario != f[0]) {
      throw ParseError("summary mixes scenarios", lineno);
    }
    s.rows.push_back({f[1], f[2], detail::parse_number<double>(f[3], lineno, "value")});
  }
  if (!header) throw DataError("schema mismatch: empty summary");
  return s;
}

inline ScenarioSummary load_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path.string());
  return parse_summary(in);
}

struct CompareRow {
  std::string metric;
  std::string group;
  std::string scenario;
  double value = 0.0;
  double baseline = 0.0;
  double delta = 0.0;
  std::optional<double> ratio;  // undefined for a zero baseline
};

// Deltas and ratios of every report against reports[baseline].
inline std::vector<CompareRow> compare_reports(const std::vector<ScenarioSummary>& reports, std::size_t baseline) {
  if (reports.size() < 2) throw ConfigError("compare needs at least two reports");
  if (baseline >= reports.size()) throw ConfigError("baseline index out of range");
  const auto& base = reports[baseline];
  for (const auto& r : reports) {
    if (r.rows.size() != base.rows.size()) throw DataError("schema mismatch: '" + r.scenario + "' has different rows");
    for (const auto& row : base.rows) {
      if (!r.value(row.metric, row.group)) {
        throw DataError("schema mismatch: '" + r.scenario + "' lacks " + row.metric + "/" + row.group);
      }
    }
  }
  std::vector<CompareRow> out;
  for (const auto& row : base.rows) {
    for (const auto& r : reports) {
      CompareRow c{row.metric, row.group, r.scenario, *r.value(row.metric, row.group), row.value, 0.0, std::nullopt};
      c.delta = c.value - c.baseline;
      if (c.baseline != 0.0) c.ratio = c.value / c.baseline;
      out.push_back(std::move(c));
    }
  }
  return out;
}

// Baseline is the report named "Baseline", else the first one.
inline std::size_t default_baseline(const std::vector<ScenarioSummary>& reports) {
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].scenario == "Baseline") return i;
  }
  return 0;
}

inline void write_compare(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "metric,group,scenario,value,baseline,delta,ratio\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << r.group << ',' << csv::quote(r.scenario) << ',' << format_value(r.value) << ','
        << format_value(r.baseline) << ',' << format_value(r.delta) << ',' << (r.ratio ? format_value(*r.ratio) : "")
        << '\n';
  }
}

// Wide table: one column per scenario, one row per (section, group).
struct ComparisonTable {
  struct Row {
    std::string section;  // consumer_utility | provider_clicks
    std::string group;
    std::vector<double> values;
  };
  std::vector<std::string> scenarios;
  std::vector<Row> rows;
  std::optional<std::size_t> baseline;
};

inline ComparisonTable build_comparison(const std::vector<MetricsReport>& reports) {
  ComparisonTable t;
  for (const auto& r : reports) {
    t.scenarios.push_back(r.scenario);
    if (r.scenario == "Baseline" && !t.baseline) t.baseline = t.scenarios.size() - 1;
  }
  auto add = [&](const std::string& section, const std::string& group, auto getter) {
    ComparisonTable::Row row{section, group, {}};
    for (const auto& r : reports) row.values.push_back(getter(r));
    t.rows.push_back(std::move(row));
  };
  for (auto type : {ConsumerType::Generic, ConsumerType::Niche}) {
    add(kConsumerUtility, std::string(to_string(type)), [type](const MetricsReport& r) {
      auto it = r.last_cycle_utility.find(type);
      return it == r.last_cycle_utility.end() ? std::nan("") : it->second;
    });
  }
  for (auto type : {ProviderType::Generic, ProviderType::Niche}) {
    add(kProviderClicks, std::string(to_string(type)), [type](const MetricsReport& r) {
      return static_cast<double>(r.provider_clicks.at(type));
    });
  }
  return t;
}

inline std::string render_value(const std::string& section, double v) {
  if (std::isnan(v)) return "-";
  return section == kProviderClicks ? fmt::format("{}", static_cast<std::int64_t>(std::llround(v))) : fmt::format("{:.3f}", v);
}

// Tab-delimited text: long-form consumer and provider tables, switch counts,
// the wide comparison table and, when a baseline is present among several
// scenarios, deltas against it.
inline std::string render_summary(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "# Average consumer utility (last cycle)\n";
  out << "consumer_type\tscenario\taverage_utility\n";
  for (auto type : {ConsumerType::Generic, ConsumerType::Niche}) {
    for (const auto& r : reports) {
      auto it = r.last_cycle_utility.find(type);
      if (it == r.last_cycle_utility.end()) continue;
      out << to_string(type) << '\t' << r.scenario << '\t' << fmt::format("{:.3f}", it->second) << '\n';
    }
  }
  out << "\n# Cumulative provider utility (clicks, all cycles)\n";
  out << "provider_type\tscenario\tcumulative_utility\n";
  for (auto type : {ProviderType::Generic, ProviderType::Niche}) {
    for (const auto& r : reports) out << to_string(type) << '\t' << r.scenario << '\t' << r.provider_clicks.at(type) << '\n';
  }
  out << "\n# Switch events (all cycles)\n";
  out << "consumer_type\tscenario\tto_recommender\tcount\n";
  for (const auto& r : reports) {
    for (const auto& [key, n] : r.switch_counts()) {
      out << to_string(key.first) << '\t' << r.scenario << '\t' << key.second << '\t' << n << '\n';
    }
  }

  const auto table = build_comparison(reports);
  out << "\n# Comparison\n";
  out << "metric\tgroup";
  for (const auto& s : table.scenarios) out << '\t' << s;
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.section << '\t' << row.group;
    for (double v : row.values) out << '\t' << render_value(row.section, v);
    out << '\n';
  }
  if (table.baseline && table.scenarios.size() > 1) {
    const auto b = *table.baseline;
    out << "\n# Ratio to " << table.scenarios[b] << "\n";
    out << "metric\tgroup";
    for (std::size_t i = 0; i < table.scenarios.size(); ++i) {
      if (i != b) out << '\t' << table.scenarios[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
      out << row.section << '\t' << row.group;
      for (std::size_t i = 0; i < row.values.size(); ++i) {
        if (i == b) continue;
        const double base = row.values[b];
        out << '\t' << (base != 0.0 && !std::isnan(base) && !std::isnan(row.values[i]) ? fmt::format("{:.3f}", row.values[i] / base) : "-");
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace portsim
