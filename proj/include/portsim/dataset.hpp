#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "portsim/csv.hpp"
#include "portsim/types.hpp"

namespace portsim {

struct Interaction {
  ConsumerId consumer{};
  ItemId item{};
  double rating = 1.0;
  std::int64_t timestamp = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;

// Unique (consumer, item) pairs, sorted by consumer then item.
struct InteractionLog {
  std::vector<Interaction> records;

  bool empty() const noexcept { return records.empty(); }
  std::size_t size() const noexcept { return records.size(); }
  friend bool operator==(const InteractionLog&, const InteractionLog&) = default;
};

// Collapses duplicate (consumer, item) pairs keeping the record with the
// latest timestamp; on equal timestamps the record appearing later wins.
inline InteractionLog make_log(const std::vector<Interaction>& rows) {
  std::map<std::pair<ConsumerId, ItemId>, Interaction> latest;
  for (const auto& r : rows) {
    auto [it, inserted] = latest.try_emplace({r.consumer, r.item}, r);
    if (!inserted && r.timestamp >= it->second.timestamp) it->second = r;
  }
  InteractionLog log;
  log.records.reserve(latest.size());
  for (auto& [key, rec] : latest) log.records.push_back(rec);
  return log;
}

enum class RatingsFormat { MovieLensDat, Csv };

namespace detail {

template <typename T>
T parse_number(std::string_view field, std::size_t line, std::string_view what) {
  field = csv::trim(field);
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("malformed " + std::string(what) + " '" + std::string(field) + "'", line);
  }
  return value;
}

inline bool blank(std::string_view line) { return csv::trim(line).empty(); }

}  // namespace detail

inline InteractionLog parse_ratings(std::istream& in, RatingsFormat format) {
  std::vector<Interaction> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    std::vector<std::string> fields;
    if (format == RatingsFormat::MovieLensDat) {
      fields = csv::split_on(line, "::");
    } else {
      fields = csv::split(line);
      if (!header_seen) {
        header_seen = true;
        if (fields.size() != 4 || csv::trim(fields[0]) != "user" || csv::trim(fields[1]) != "item" ||
            csv::trim(fields[2]) != "rating" || csv::trim(fields[3]) != "timestamp") {
          throw ParseError("expected header 'user,item,rating,timestamp'", lineno);
        }
        continue;
      }
    }
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), lineno);
    }
    Interaction r;
    r.consumer = ConsumerId{detail::parse_number<std::int64_t>(fields[0], lineno, "user id")};
    r.item = ItemId{detail::parse_number<std::int64_t>(fields[1], lineno, "item id")};
    r.rating = detail::parse_number<double>(fields[2], lineno, "rating");
    r.timestamp = detail::parse_number<std::int64_t>(fields[3], lineno, "timestamp");
    if (!(r.rating >= kMinRating && r.rating <= kMaxRating)) {
      throw ParseError("rating outside [1, 5]", lineno);
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError("no interactions");
  return make_log(rows);
}

inline InteractionLog load_ratings(const std::filesystem::path& path, RatingsFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file " + path.string());
  return parse_ratings(in, format);
}

inline RatingsFormat ratings_format_for(const std::filesystem::path& path) {
  return path.extension() == ".dat" ? RatingsFormat::MovieLensDat : RatingsFormat::Csv;
}

struct ItemRecord {
  ItemId id{};
  std::string title;
  std::vector<double> genres;  // 0/1 over the catalog taxonomy
  ProviderId provider;

  bool has_genre(std::size_t g) const { return g < genres.size() && genres[g] > 0.0; }
  std::size_t genre_count() const {
    return static_cast<std::size_t>(std::count_if(genres.begin(), genres.end(), [](double v) { return v > 0.0; }));
  }
  friend bool operator==(const ItemRecord&, const ItemRecord&) = default;
};

struct ProviderRecord {
  ProviderId id;
  ProviderType type = ProviderType::Generic;
  std::vector<ItemId> items;  // ascending
  friend bool operator==(const ProviderRecord&, const ProviderRecord&) = default;
};

class Catalog {
 public:
  Catalog() = default;

  // Validates: non-empty taxonomy, every item has >= 1 genre and the
  // taxonomy's dimension, every item's provider exists. Provider item lists
  // are rebuilt from the items.
  Catalog(std::vector<std::string> genres, std::vector<ItemRecord> items,
          std::vector<ProviderId> extra_providers = {})
      : genres_(std::move(genres)) {
    if (genres_.empty()) throw DataError("catalog has no genres");
    for (const auto& p : extra_providers) providers_.try_emplace(p, ProviderRecord{p, ProviderType::Generic, {}});
    for (auto& item : items) {
      if (item.genres.size() != genres_.size()) {
        throw DataError("item " + std::to_string(raw(item.id)) + " genre vector has wrong dimension");
      }
      if (item.genre_count() == 0) {
        throw DataError("item " + std::to_string(raw(item.id)) + " has no genre");
      }
      if (item.provider.empty()) {
        throw DataError("item " + std::to_string(raw(item.id)) + " has no provider");
      }
      auto& prov = providers_.try_emplace(item.provider, ProviderRecord{item.provider, ProviderType::Generic, {}})
                       .first->second;
      prov.items.push_back(item.id);
      const auto id = item.id;
      if (!items_.emplace(id, std::move(item)).second) {
        throw DataError("duplicate item " + std::to_string(raw(id)));
      }
    }
    for (auto& [_, p] : providers_) std::sort(p.items.begin(), p.items.end());
  }

  const std::vector<std::string>& genres() const noexcept { return genres_; }
  const std::map<ItemId, ItemRecord>& items() const noexcept { return items_; }
  const std::map<ProviderId, ProviderRecord>& providers() const noexcept { return providers_; }

  std::optional<std::size_t> genre_index(std::string_view name) const {
    for (std::size_t g = 0; g < genres_.size(); ++g) {
      if (genres_[g] == name) return g;
    }
    return std::nullopt;
  }

  bool contains(ItemId id) const { return items_.contains(id); }

  const ItemRecord& item(ItemId id) const {
    auto it = items_.find(id);
    if (it == items_.end()) throw DataError("unknown item " + std::to_string(raw(id)));
    return it->second;
  }

  const ProviderRecord& provider(const ProviderId& id) const {
    auto it = providers_.find(id);
    if (it == providers_.end()) throw DataError("unknown provider " + id);
    return it->second;
  }

  ProviderType provider_type_of(ItemId item_id) const { return provider(item(item_id).provider).type; }

  void set_provider_type(const ProviderId& id, ProviderType t) { providers_.at(id).type = t; }

  std::vector<ItemId> item_ids() const {
    std::vector<ItemId> ids;
    ids.reserve(items_.size());
    for (const auto& [id, _] : items_) ids.push_back(id);
    return ids;
  }

  friend bool operator==(const Catalog&, const Catalog&) = default;

 private:
  std::vector<std::string> genres_;
  std::map<ItemId, ItemRecord> items_;
  std::map<ProviderId, ProviderRecord> providers_;
};

// Items whose id is missing from the provider map are attributed to this
// provider so that every item resolves.
inline const ProviderId kUnmappedProvider = "(unmapped)";

struct RawItem {
  ItemId id{};
  std::string title;
  std::vector<std::string> genres;
};

// items: CSV `item,title,genres` (pipe-delimited genres) or MovieLens
// `movies.dat` (`MovieID::Title::Genres`) when the extension is .dat.
inline std::vector<RawItem> parse_items(std::istream& in, bool movielens_dat) {
  std::vector<RawItem> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = movielens_dat;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    auto fields = movielens_dat ? csv::split_on(line, "::") : csv::split(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 3 && csv::trim(fields[0]) == "item") continue;
      throw ParseError("expected header 'item,title,genres'", lineno);
    }
    if (fields.size() != 3) throw ParseError("expected 3 fields, got " + std::to_string(fields.size()), lineno);
    RawItem item;
    item.id = ItemId{detail::parse_number<std::int64_t>(fields[0], lineno, "item id")};
    item.title = fields[1];
    for (auto& g : csv::split(csv::trim(fields[2]), '|')) {
      auto name = std::string(csv::trim(g));
      if (!name.empty()) item.genres.push_back(std::move(name));
    }
    if (item.genres.empty()) throw ParseError("item has no genres", lineno);
    out.push_back(std::move(item));
  }
  if (out.empty()) throw DataError("no items");
  return out;
}

// provider map: CSV `item,provider`, single-valued per item.
inline std::map<ItemId, ProviderId> parse_provider_map(std::istream& in) {
  std::map<ItemId, ProviderId> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    auto fields = csv::split(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 2 && csv::trim(fields[0]) == "item") continue;
      throw ParseError("expected header 'item,provider'", lineno);
    }
    if (fields.size() != 2) throw ParseError("expected 2 fields, got " + std::to_string(fields.size()), lineno);
    const auto id = ItemId{detail::parse_number<std::int64_t>(fields[0], lineno, "item id")};
    auto provider = std::string(csv::trim(fields[1]));
    if (provider.empty()) throw ParseError("empty provider", lineno);
    auto [it, inserted] = out.emplace(id, provider);
    if (!inserted && it->second != provider) throw ParseError("item mapped to two providers", lineno);
  }
  return out;
}

// Genre taxonomy is the sorted set of genre names, so labels never depend on
// file row order.
inline Catalog assemble_catalog(const std::vector<RawItem>& raw_items,
                                const std::map<ItemId, ProviderId>& provider_map) {
  std::set<std::string> names;
  for (const auto& item : raw_items) names.insert(item.genres.begin(), item.genres.end());
  std::vector<std::string> genres(names.begin(), names.end());

  std::vector<ItemRecord> items;
  items.reserve(raw_items.size());
  std::set<ItemId> known;
  for (const auto& r : raw_items) {
    ItemRecord rec;
    rec.id = r.id;
    rec.title = r.title;
    rec.genres.assign(genres.size(), 0.0);
    for (const auto& g : r.genres) {
      rec.genres[static_cast<std::size_t>(std::lower_bound(genres.begin(), genres.end(), g) - genres.begin())] = 1.0;
    }
    auto it = provider_map.find(r.id);
    rec.provider = it == provider_map.end() ? kUnmappedProvider : it->second;
    known.insert(r.id);
    items.push_back(std::move(rec));
  }
  // Providers whose mapped items are all absent from the catalog still get a
  // (zero-item) record.
  std::vector<ProviderId> extra;
  for (const auto& [id, p] : provider_map) {
    if (!known.contains(id)) extra.push_back(p);
  }
  return Catalog(std::move(genres), std::move(items), std::move(extra));
}

inline Catalog load_catalog(const std::filesystem::path& items_path, const std::filesystem::path& providers_path) {
  std::ifstream items_in(items_path);
  if (!items_in) throw DataError("cannot open items file " + items_path.string());
  std::ifstream prov_in(providers_path);
  if (!prov_in) throw DataError("cannot open provider map " + providers_path.string());
  return assemble_catalog(parse_items(items_in, items_path.extension() == ".dat"), parse_provider_map(prov_in));
}

struct ConsumerProfileSeed {
  ConsumerId consumer{};
  std::vector<double> preference;  // L1-normalized over catalog genres
  ConsumerType type = ConsumerType::Generic;
  std::vector<ItemId> initial_history;
  friend bool operator==(const ConsumerProfileSeed&, const ConsumerProfileSeed&) = default;
};

// Niche iff the niche genre is the strict, unique maximum.
inline ConsumerType classify_consumer(const std::vector<double>& preference, std::optional<std::size_t> niche) {
  if (!niche || *niche >= preference.size()) return ConsumerType::Generic;
  const double top = preference[*niche];
  for (std::size_t g = 0; g < preference.size(); ++g) {
    if (g != *niche && preference[g] >= top) return ConsumerType::Generic;
  }
  return ConsumerType::Niche;
}

struct PreferenceBuild {
  std::vector<ConsumerProfileSeed> seeds;  // ascending consumer id
  std::size_t excluded = 0;                // consumers with no usable rating mass
};

inline constexpr double kDefaultHistoryRating = 4.0;

inline PreferenceBuild build_preferences(const InteractionLog& log, const Catalog& catalog,
                                         std::string_view niche_genre,
                                         double history_min_rating = kDefaultHistoryRating) {
  const auto niche = catalog.genre_index(niche_genre);
  const std::size_t dims = catalog.genres().size();
  PreferenceBuild out;

  auto flush = [&](ConsumerId consumer, std::vector<double>& mass, std::vector<const Interaction*>& rated) {
    double total = 0.0;
    for (double m : mass) total += m;
    if (!(total > 0.0)) {
      ++out.excluded;
      return;
    }
    ConsumerProfileSeed seed;
    seed.consumer = consumer;
    seed.preference.resize(dims);
    for (std::size_t g = 0; g < dims; ++g) seed.preference[g] = mass[g] / total;
    seed.type = classify_consumer(seed.preference, niche);
    std::stable_sort(rated.begin(), rated.end(),
                     [](const Interaction* a, const Interaction* b) { return a->timestamp < b->timestamp; });
    for (const auto* r : rated) {
      if (r->rating >= history_min_rating) seed.initial_history.push_back(r->item);
    }
    out.seeds.push_back(std::move(seed));
  };

  std::vector<double> mass(dims, 0.0);
  std::vector<const Interaction*> rated;
  std::optional<ConsumerId> current;
  for (const auto& r : log.records) {
    if (current && *current != r.consumer) {
      flush(*current, mass, rated);
      std::fill(mass.begin(), mass.end(), 0.0);
      rated.clear();
    }
    current = r.consumer;
    const auto& item = catalog.item(r.item);
    const double share = r.rating / static_cast<double>(item.genre_count());
    for (std::size_t g = 0; g < dims; ++g) {
      if (item.has_genre(g)) mass[g] += share;
    }
    rated.push_back(&r);
  }
  if (current) flush(*current, mass, rated);
  return out;
}

struct ProviderClassification {
  Catalog catalog;
  std::size_t niche = 0;
  std::size_t generic = 0;
  std::size_t empty = 0;  // zero-item providers, labeled Generic
};

// Niche iff strictly more than half of the provider's items carry the niche genre.
inline ProviderClassification classify_providers(Catalog catalog, std::string_view niche_genre) {
  if (catalog.items().empty()) throw DataError("catalog is empty");
  const auto niche = catalog.genre_index(niche_genre);
  ProviderClassification out;
  std::vector<std::pair<ProviderId, ProviderType>> labels;
  for (const auto& [id, prov] : catalog.providers()) {
    std::size_t tagged = 0;
    for (auto item : prov.items) {
      if (niche && catalog.item(item).has_genre(*niche)) ++tagged;
    }
    ProviderType t = ProviderType::Generic;
    if (prov.items.empty()) {
      ++out.empty;
    } else if (2 * tagged > prov.items.size()) {
      t = ProviderType::Niche;
    }
    (t == ProviderType::Niche ? out.niche : out.generic)++;
    labels.emplace_back(id, t);
  }
  for (const auto& [id, t] : labels) catalog.set_provider_type(id, t);
  out.catalog = std::move(catalog);
  return out;
}

// Everything ingested for one run.
struct Dataset {
  InteractionLog log;
  Catalog catalog;
  std::vector<ConsumerProfileSeed> consumers;
  std::string niche_genre;
};

inline Dataset prepare_dataset(InteractionLog log, Catalog catalog, const std::string& niche_genre,
                               double history_min_rating = kDefaultHistoryRating) {
  Dataset d;
  auto classified = classify_providers(std::move(catalog), niche_genre);
  d.catalog = std::move(classified.catalog);
  for (const auto& r : log.records) {
    if (!d.catalog.contains(r.item)) {
      throw DataError("rated item " + std::to_string(raw(r.item)) + " missing from catalog");
    }
  }
  d.consumers = build_preferences(log, d.catalog, niche_genre, history_min_rating).seeds;
  d.log = std::move(log);
  d.niche_genre = niche_genre;
  return d;
}

}  // namespace portsim
