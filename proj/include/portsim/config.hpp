#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "portsim/csv.hpp"
#include "portsim/engine.hpp"
#include "portsim/synthetic.hpp"

namespace portsim {

struct DataSource {
  enum class Kind { Synthetic, Files };
  Kind kind = Kind::Synthetic;
  std::filesystem::path ratings;
  std::filesystem::path items;
  std::filesystem::path providers;
  std::optional<RatingsFormat> ratings_format;  // by extension when unset
  double history_min_rating = kDefaultHistoryRating;
  SyntheticSpec synthetic;                       // niche genre and seed follow the scenario
  std::optional<std::uint64_t> synthetic_seed;   // overrides the scenario seed for data generation

  friend bool operator==(const DataSource&, const DataSource&) = default;
};

struct RunConfig {
  std::vector<ScenarioConfig> scenarios;
  DataSource data;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

using boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"scenario",
       {"seed", "niche_genre", "cycles", "days_per_cycle", "slate_size", "warmup_cycles", "switch_timing", "policies"}},
      {"behavior", {"beta", "tau", "select_threshold"}},
      {"recommenders", {"factors", "epochs", "regularization", "confidence_weight", "popular_list_size"}},
      {"data", {"source", "ratings", "ratings_format", "items", "providers", "history_min_rating"}},
      {"synthetic",
       {"consumers", "niche_fraction", "items", "providers", "genres", "seed", "min_ratings", "max_ratings",
        "niche_item_share", "niche_popularity", "niche_provider_share", "niche_mixed_share", "popularity_exponent",
        "niche_taste_lo", "niche_taste_hi", "niche_secondary_genres", "generic_taste_lo", "generic_taste_hi",
        "popularity_bias", "affinity_exponent", "quality_weight"}},
  };
  return keys;
}

template <typename T>
T config_number(const std::string& key, const std::string& text) {
  const auto s = csv::trim(text);
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end || s.empty()) {
    throw ConfigError("invalid value '" + std::string(s) + "' for key '" + key + "'");
  }
  return value;
}

class Section {
 public:
  Section(std::string name, const ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> get(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return std::string(csv::trim(*v));
  }

  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v || v->empty()) throw ConfigError("missing required key '" + key + "' in [" + name_ + "]");
    return *v;
  }

  template <typename T>
  T number(const std::string& key, T fallback) const {
    auto v = get(key);
    return v ? config_number<T>(key, *v) : fallback;
  }

 private:
  std::string name_;
  const ptree* tree_;
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : csv::split(s, ',')) {
    auto t = std::string(csv::trim(part));
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

inline std::string policy_key(const std::optional<PortabilityPolicy>& p) {
  return p ? std::string(config_key(*p)) : std::string("baseline");
}

}  // namespace detail

// Flat sectioned key-value text; unknown sections or keys are errors.
// Relative data paths resolve against base_dir.
inline RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using detail::ptree;
  ptree root;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  const auto& known = detail::known_keys();
  for (const auto& [section, tree] : root) {
    auto it = known.find(section);
    if (it == known.end()) {
      if (tree.empty()) throw ConfigError("key '" + section + "' outside any section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, _] : tree) {
      if (!it->second.contains(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }
  auto section = [&](const std::string& name) {
    auto child = root.get_child_optional(ptree::path_type(name, '\0'));
    return detail::Section(name, child ? &*child : nullptr);
  };

  const auto sc = section("scenario");
  const auto bh = section("behavior");
  const auto rc = section("recommenders");
  const auto ds = section("data");
  const auto sy = section("synthetic");

  ScenarioConfig base;
  base.seed = detail::config_number<std::uint64_t>("seed", sc.require("seed"));
  base.niche_genre = sc.require("niche_genre");
  base.cycles = sc.number<int>("cycles", base.cycles);
  base.days_per_cycle = sc.number<int>("days_per_cycle", base.days_per_cycle);
  base.slate_size = sc.number<std::size_t>("slate_size", base.slate_size);
  base.warmup_cycles = sc.number<int>("warmup_cycles", base.warmup_cycles);
  if (auto t = sc.get("switch_timing")) {
    if (*t == "end_of_cycle") {
      base.switch_timing = SwitchTiming::EndOfCycle;
    } else if (*t == "per_day") {
      base.switch_timing = SwitchTiming::PerDay;
    } else {
      throw ConfigError("switch_timing must be end_of_cycle or per_day");
    }
  }
  base.behavior.beta = bh.number<double>("beta", base.behavior.beta);
  base.behavior.tau = bh.number<double>("tau", base.behavior.tau);
  base.behavior.select_threshold = bh.number<double>("select_threshold", base.behavior.select_threshold);

  MfParams mf;
  mf.factors = rc.number<int>("factors", mf.factors);
  mf.epochs = rc.number<int>("epochs", mf.epochs);
  mf.regularization = rc.number<double>("regularization", mf.regularization);
  mf.confidence = rc.number<double>("confidence_weight", mf.confidence);
  const auto popular = rc.number<std::size_t>("popular_list_size", 100);

  std::vector<std::optional<PortabilityPolicy>> policies;
  if (auto list = sc.get("policies")) {
    for (const auto& key : detail::split_list(*list)) {
      if (key == "baseline") {
        policies.emplace_back(std::nullopt);
      } else if (auto p = policy_from_key(key)) {
        policies.emplace_back(*p);
      } else {
        throw ConfigError("unknown policy '" + key + "'");
      }
    }
    if (policies.empty()) throw ConfigError("policies list is empty");
  } else {
    policies.emplace_back(std::nullopt);
    for (auto p : kAllPolicies) policies.emplace_back(p);
  }

  RunConfig out;
  for (const auto& p : policies) {
    auto cfg = standard_scenario(p, base.seed, base.niche_genre, mf, popular);
    cfg.cycles = base.cycles;
    cfg.days_per_cycle = base.days_per_cycle;
    cfg.slate_size = base.slate_size;
    cfg.warmup_cycles = base.warmup_cycles;
    cfg.switch_timing = base.switch_timing;
    cfg.behavior = base.behavior;
    validate(cfg);
    out.scenarios.push_back(std::move(cfg));
  }

  auto& data = out.data;
  const auto source = ds.get("source").value_or("synthetic");
  if (source == "synthetic") {
    data.kind = DataSource::Kind::Synthetic;
    for (const auto* key : {"ratings", "items", "providers", "ratings_format"}) {
      if (ds.get(key)) throw ConfigError(std::string("key '") + key + "' requires source = files");
    }
  } else if (source == "files") {
    data.kind = DataSource::Kind::Files;
    auto resolve = [&](const std::string& key) {
      std::filesystem::path p = ds.require(key);
      return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    data.ratings = resolve("ratings");
    data.items = resolve("items");
    data.providers = resolve("providers");
    if (auto f = ds.get("ratings_format")) {
      if (*f == "movielens-dat") {
        data.ratings_format = RatingsFormat::MovieLensDat;
      } else if (*f == "csv") {
        data.ratings_format = RatingsFormat::Csv;
      } else {
        throw ConfigError("ratings_format must be movielens-dat or csv");
      }
    }
  } else {
    throw ConfigError("data source must be synthetic or files");
  }
  data.history_min_rating = ds.number<double>("history_min_rating", data.history_min_rating);

  auto& spec = data.synthetic;
  spec.consumers = sy.number<std::size_t>("consumers", spec.consumers);
  spec.niche_fraction = sy.number<double>("niche_fraction", spec.niche_fraction);
  spec.items = sy.number<std::size_t>("items", spec.items);
  spec.providers = sy.number<std::size_t>("providers", spec.providers);
  if (auto g = sy.get("genres")) spec.genres = detail::split_list(*g);
  if (sy.get("seed")) data.synthetic_seed = sy.number<std::uint64_t>("seed", 0);
  spec.min_ratings = sy.number<std::size_t>("min_ratings", spec.min_ratings);
  spec.max_ratings = sy.number<std::size_t>("max_ratings", spec.max_ratings);
  spec.niche_item_share = sy.number<double>("niche_item_share", spec.niche_item_share);
  spec.niche_popularity = sy.number<double>("niche_popularity", spec.niche_popularity);
  spec.niche_provider_share = sy.number<double>("niche_provider_share", spec.niche_provider_share);
  spec.niche_mixed_share = sy.number<double>("niche_mixed_share", spec.niche_mixed_share);
  spec.popularity_exponent = sy.number<double>("popularity_exponent", spec.popularity_exponent);
  spec.niche_taste_lo = sy.number<double>("niche_taste_lo", spec.niche_taste_lo);
  spec.niche_taste_hi = sy.number<double>("niche_taste_hi", spec.niche_taste_hi);
  spec.niche_secondary_genres = sy.number<std::size_t>("niche_secondary_genres", spec.niche_secondary_genres);
  spec.generic_taste_lo = sy.number<double>("generic_taste_lo", spec.generic_taste_lo);
  spec.generic_taste_hi = sy.number<double>("generic_taste_hi", spec.generic_taste_hi);
  spec.popularity_bias = sy.number<double>("popularity_bias", spec.popularity_bias);
  spec.affinity_exponent = sy.number<double>("affinity_exponent", spec.affinity_exponent);
  spec.quality_weight = sy.number<double>("quality_weight", spec.quality_weight);
  spec.niche_genre = base.niche_genre;
  spec.seed = data.synthetic_seed.value_or(base.seed);
  if (data.kind == DataSource::Kind::Synthetic) validate(spec);
  return out;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.parent_path());
}

// Every value written explicitly; parse_config_text(serialize(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  if (c.scenarios.empty()) throw ConfigError("nothing to serialize");
  const auto& s = c.scenarios.front();
  const auto& rec = s.recommenders.front();
  std::string policies;
  for (const auto& sc : c.scenarios) {
    if (!policies.empty()) policies += ", ";
    policies += detail::policy_key(sc.policy);
  }
  std::string out;
  out += "[scenario]\n";
  out += fmt::format("seed = {}\nniche_genre = {}\ncycles = {}\ndays_per_cycle = {}\nslate_size = {}\n", s.seed,
                     s.niche_genre, s.cycles, s.days_per_cycle, s.slate_size);
  out += fmt::format("warmup_cycles = {}\nswitch_timing = {}\npolicies = {}\n\n", s.warmup_cycles,
                     s.switch_timing == SwitchTiming::PerDay ? "per_day" : "end_of_cycle", policies);
  out += fmt::format("[behavior]\nbeta = {}\ntau = {}\nselect_threshold = {}\n\n", s.behavior.beta, s.behavior.tau,
                     s.behavior.select_threshold);
  out += fmt::format(
      "[recommenders]\nfactors = {}\nepochs = {}\nregularization = {}\nconfidence_weight = {}\npopular_list_size = {}\n\n",
      rec.mf.factors, rec.mf.epochs, rec.mf.regularization, rec.mf.confidence, rec.popular_list_size);
  const auto& d = c.data;
  out += "[data]\n";
  if (d.kind == DataSource::Kind::Files) {
    out += fmt::format("source = files\nratings = {}\nitems = {}\nproviders = {}\n", d.ratings.string(),
                       d.items.string(), d.providers.string());
    if (d.ratings_format) {
      out += fmt::format("ratings_format = {}\n",
                         *d.ratings_format == RatingsFormat::MovieLensDat ? "movielens-dat" : "csv");
    }
  } else {
    out += "source = synthetic\n";
  }
  out += fmt::format("history_min_rating = {}\n\n", d.history_min_rating);
  const auto& y = d.synthetic;
  std::string genres;
  for (const auto& g : y.genres) genres += (genres.empty() ? "" : ", ") + g;
  out += fmt::format("[synthetic]\nconsumers = {}\nniche_fraction = {}\nitems = {}\nproviders = {}\ngenres = {}\n",
                     y.consumers, y.niche_fraction, y.items, y.providers, genres);
  if (d.synthetic_seed) out += fmt::format("seed = {}\n", *d.synthetic_seed);
  out += fmt::format(
      "min_ratings = {}\nmax_ratings = {}\nniche_item_share = {}\nniche_popularity = {}\nniche_provider_share = {}\n",
      y.min_ratings, y.max_ratings, y.niche_item_share, y.niche_popularity, y.niche_provider_share);
  out += fmt::format("niche_mixed_share = {}\npopularity_exponent = {}\nniche_taste_lo = {}\nniche_taste_hi = {}\n"
                     "niche_secondary_genres = {}\ngeneric_taste_lo = {}\ngeneric_taste_hi = {}\n"
                     "popularity_bias = {}\naffinity_exponent = {}\nquality_weight = {}\n",
                     y.niche_mixed_share, y.popularity_exponent, y.niche_taste_lo, y.niche_taste_hi,
                     y.niche_secondary_genres, y.generic_taste_lo, y.generic_taste_hi, y.popularity_bias,
                     y.affinity_exponent, y.quality_weight);
  return out;
}

// Replaces the root seed everywhere it is used.
inline void override_seed(RunConfig& c, std::uint64_t seed) {
  for (auto& s : c.scenarios) s.seed = seed;
  if (!c.data.synthetic_seed) c.data.synthetic.seed = seed;
}

inline Dataset load_data(const DataSource& src, const std::string& niche_genre) {
  if (src.kind == DataSource::Kind::Synthetic) {
    auto spec = src.synthetic;
    spec.niche_genre = niche_genre;
    auto synth = generate_synthetic(spec);
    return prepare_dataset(std::move(synth.log), std::move(synth.catalog), niche_genre, src.history_min_rating);
  }
  auto log = load_ratings(src.ratings, src.ratings_format.value_or(ratings_format_for(src.ratings)));
  auto catalog = load_catalog(src.items, src.providers);
  return prepare_dataset(std::move(log), std::move(catalog), niche_genre, src.history_min_rating);
}

}  // namespace portsim
