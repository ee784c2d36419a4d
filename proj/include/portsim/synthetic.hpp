#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "portsim/dataset.hpp"
#include "portsim/rng.hpp"

namespace portsim {

// Desk-scale stand-in for a ratings dataset plus provider map. Niche-genre
// items are less popular, niche consumers rate many popular generic items
// but give their strongest ratings to the niche genre, and a few providers
// specialize in the niche genre.
struct SyntheticSpec {
  std::size_t consumers = 500;
  double niche_fraction = 0.1;
  std::size_t items = 300;
  std::size_t providers = 20;
  std::vector<std::string> genres{"Action", "Adventure", "Animation", "Comedy", "Crime",   "Drama",
                                  "Fantasy", "Horror",    "Romance",   "SciFi",  "Thriller", "War"};
  std::string niche_genre = "Horror";
  std::uint64_t seed = 1;

  double niche_item_share = 0.4;      // items carrying the niche genre
  double niche_mixed_share = 0.7;     // niche-tagged items that also carry one other genre
  double niche_popularity = 0.4;      // popularity multiplier for niche-tagged items
  double popularity_exponent = 1.2;   // Zipf exponent of item popularity
  double niche_provider_share = 0.1;  // providers specializing in the niche genre
  double niche_taste_lo = 0.5;        // niche consumers' weight on the niche genre
  double niche_taste_hi = 0.7;
  std::size_t niche_secondary_genres = 0;  // further liked genres of niche consumers
  double generic_taste_lo = 0.12;     // generic consumers' weight on their favourite genre
  double generic_taste_hi = 0.2;
  double popularity_bias = 0.5;       // exponent on popularity when sampling rated items
  double affinity_exponent = 1.5;     // exponent on taste affinity when sampling rated items
  double quality_weight = 1.5;        // rating points explained by item popularity rather than taste
  std::size_t min_ratings = 20;
  std::size_t max_ratings = 40;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

struct SyntheticData {
  InteractionLog log;
  Catalog catalog;
};

namespace detail {

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

inline std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

}  // namespace detail

inline void validate(const SyntheticSpec& spec) {
  if (spec.consumers == 0 || spec.items == 0 || spec.providers == 0) {
    throw ConfigError("synthetic counts must be positive");
  }
  if (!(spec.niche_fraction > 0.0 && spec.niche_fraction < 1.0)) {
    throw ConfigError("synthetic niche fraction must lie in (0, 1)");
  }
  if (spec.genres.empty()) throw ConfigError("synthetic genre taxonomy is empty");
  if (std::set<std::string>(spec.genres.begin(), spec.genres.end()).size() != spec.genres.size()) {
    throw ConfigError("synthetic genre taxonomy has duplicates");
  }
  if (spec.items < spec.providers) throw ConfigError("synthetic spec needs at least one item per provider");
  if (spec.min_ratings == 0 || spec.min_ratings > spec.max_ratings) {
    throw ConfigError("synthetic rating counts must satisfy 0 < min <= max");
  }
  if (!(spec.niche_item_share > 0.0 && spec.niche_item_share < 1.0)) {
    throw ConfigError("synthetic niche item share must lie in (0, 1)");
  }
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(spec.niche_mixed_share) || !unit(spec.niche_provider_share) || !(spec.niche_popularity > 0.0)) {
    throw ConfigError("synthetic niche shares must lie in [0, 1] and niche popularity must be positive");
  }
  if (!unit(spec.niche_taste_lo) || !unit(spec.niche_taste_hi) || spec.niche_taste_lo > spec.niche_taste_hi ||
      !unit(spec.generic_taste_lo) || !unit(spec.generic_taste_hi) || spec.generic_taste_lo > spec.generic_taste_hi) {
    throw ConfigError("synthetic taste ranges must satisfy 0 <= lo <= hi <= 1");
  }
  for (double x : {spec.popularity_exponent, spec.popularity_bias, spec.affinity_exponent, spec.quality_weight}) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("synthetic exponents and weights must be finite and >= 0");
  }
  const bool has_niche = std::find(spec.genres.begin(), spec.genres.end(), spec.niche_genre) != spec.genres.end();
  if (has_niche && spec.genres.size() > 1) {
    const auto n = detail::round_count(spec.niche_fraction * static_cast<double>(spec.consumers));
    if (n == 0 || n >= spec.consumers) {
      throw ConfigError(fmt::format("infeasible niche fraction {} for {} consumers", spec.niche_fraction,
                                    spec.consumers));
    }
    if (spec.providers < 2) throw ConfigError("synthetic spec needs >= 2 providers to include a niche provider");
  }
}

inline SyntheticData generate_synthetic(const SyntheticSpec& input) {
  validate(input);
  SyntheticSpec spec = input;
  std::sort(spec.genres.begin(), spec.genres.end());
  const std::size_t dims = spec.genres.size();
  const auto niche_it = std::find(spec.genres.begin(), spec.genres.end(), spec.niche_genre);
  const bool has_niche = niche_it != spec.genres.end();
  const std::size_t niche = has_niche ? static_cast<std::size_t>(niche_it - spec.genres.begin()) : dims;
  const bool degenerate = !has_niche || dims == 1;

  Rng rng(derive_seed(spec.seed, "synthetic"));

  std::vector<std::size_t> plain;  // non-niche genre indices
  for (std::size_t g = 0; g < dims; ++g) {
    if (g != niche) plain.push_back(g);
  }

  // Plain genres differ in how common they are.
  std::vector<double> genre_weight(dims, 0.0);
  {
    auto ranks = plain;
    rng.shuffle(ranks);
    for (std::size_t r = 0; r < ranks.size(); ++r) genre_weight[ranks[r]] = 1.0 / std::pow(1.0 + r, 0.7);
  }
  // k distinct genres from pool, weighted by genre_weight.
  auto weighted_distinct = [&](std::vector<std::size_t> pool, std::size_t k) {
    std::vector<std::size_t> out;
    while (out.size() < k && !pool.empty()) {
      double total = 0.0;
      for (auto g : pool) total += genre_weight[g];
      double u = rng.uniform() * total;
      std::size_t at = pool.size() - 1;
      for (std::size_t j = 0; j < pool.size(); ++j) {
        if (u < genre_weight[pool[j]]) {
          at = j;
          break;
        }
        u -= genre_weight[pool[j]];
      }
      out.push_back(pool[at]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
    }
    return out;
  };

  // Items.
  const std::size_t n_items = spec.items;
  const std::size_t n_niche_items =
      degenerate ? (has_niche ? n_items : 0)
                 : std::clamp<std::size_t>(detail::round_count(spec.niche_item_share * static_cast<double>(n_items)),
                                           1, n_items - 1);
  std::vector<std::size_t> order(n_items);
  for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<bool> niche_tagged(n_items, false);
  for (std::size_t k = 0; k < n_niche_items; ++k) niche_tagged[order[k]] = true;

  std::vector<std::vector<double>> item_genres(n_items, std::vector<double>(dims, 0.0));
  std::vector<bool> pure_niche(n_items, false);
  for (std::size_t i = 0; i < n_items; ++i) {
    auto& gv = item_genres[i];
    if (niche_tagged[i]) {
      gv[niche] = 1.0;
      if (!plain.empty() && rng.uniform() < spec.niche_mixed_share) {
        gv[weighted_distinct(plain, 1).front()] = 1.0;
      } else {
        pure_niche[i] = true;
      }
    } else {
      const double u = rng.uniform();
      const std::size_t want = std::min<std::size_t>(u < 0.5 ? 1 : (u < 0.85 ? 2 : 3), plain.size());
      for (auto g : weighted_distinct(plain, want)) gv[g] = 1.0;
    }
  }

  // Popularity ranks: niche-tagged items take evenly spaced slots so every
  // seed sees the same popularity profile per genre group.
  std::vector<std::size_t> rank(n_items);
  {
    std::vector<std::size_t> tagged, untagged;
    for (std::size_t i = 0; i < n_items; ++i) (niche_tagged[i] ? tagged : untagged).push_back(i);
    rng.shuffle(tagged);
    rng.shuffle(untagged);
    std::size_t t = 0, u = 0;
    for (std::size_t r = 0; r < n_items; ++r) {
      const bool slot = (r + 1) * tagged.size() / n_items > r * tagged.size() / n_items;
      rank[slot ? tagged[t++] : untagged[u++]] = r;
    }
  }
  std::vector<double> popularity(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    popularity[i] = 1.0 / std::pow(1.0 + static_cast<double>(rank[i]), spec.popularity_exponent);
    if (niche_tagged[i] && !degenerate) popularity[i] *= spec.niche_popularity;
  }

  // Providers: niche specialists take mostly niche items, the rest is dealt
  // round-robin to generic providers.
  const std::size_t n_prov = spec.providers;
  std::vector<std::string> provider_names(n_prov);
  for (std::size_t p = 0; p < n_prov; ++p) provider_names[p] = fmt::format("studio-{:02}", p + 1);
  std::vector<std::size_t> prov_order(n_prov);
  for (std::size_t p = 0; p < n_prov; ++p) prov_order[p] = p;
  rng.shuffle(prov_order);

  std::vector<std::size_t> item_provider(n_items, n_prov);
  std::vector<std::size_t> niche_pool, plain_pool;
  for (std::size_t i = 0; i < n_items; ++i) {
    if (niche_tagged[i] && !degenerate) {
      niche_pool.push_back(i);
    } else {
      plain_pool.push_back(i);
    }
  }
  // Specialists are small studios: they get the least popular pure niche items.
  std::stable_sort(niche_pool.begin(), niche_pool.end(), [&](std::size_t a, std::size_t b) {
    if (pure_niche[a] != pure_niche[b]) return static_cast<bool>(pure_niche[a]);
    return popularity[a] < popularity[b];
  });
  std::size_t first_generic_provider = 0;
  if (!degenerate) {
    const std::size_t quota = std::max<std::size_t>(1, n_items / n_prov);
    const std::size_t n_specialists = std::clamp<std::size_t>(
        detail::round_count(spec.niche_provider_share * static_cast<double>(n_prov)), 1, n_prov - 1);
    // Specialists carry pure niche items only.
    std::size_t next_niche = 0, next_plain = 0;
    for (std::size_t s = 0; s < n_specialists; ++s) {
      const std::size_t p = prov_order[s];
      for (std::size_t took = 0; took < quota && next_niche < niche_pool.size() && pure_niche[niche_pool[next_niche]];
           ++took) {
        item_provider[niche_pool[next_niche++]] = p;
      }
    }
    first_generic_provider = n_specialists;
    // Leftover niche items are dealt first so they spread evenly and no
    // generic provider tips into a niche majority by chance.
    std::vector<std::size_t> rest(niche_pool.begin() + static_cast<std::ptrdiff_t>(next_niche), niche_pool.end());
    rng.shuffle(rest);
    std::vector<std::size_t> plain_rest(plain_pool.begin() + static_cast<std::ptrdiff_t>(next_plain), plain_pool.end());
    rng.shuffle(plain_rest);
    rest.insert(rest.end(), plain_rest.begin(), plain_rest.end());
    const std::size_t n_generic = n_prov - first_generic_provider;
    for (std::size_t k = 0; k < rest.size(); ++k) {
      item_provider[rest[k]] = prov_order[first_generic_provider + k % n_generic];
    }
  } else {
    std::vector<std::size_t> all(n_items);
    for (std::size_t i = 0; i < n_items; ++i) all[i] = i;
    rng.shuffle(all);
    for (std::size_t k = 0; k < n_items; ++k) item_provider[all[k]] = prov_order[k % n_prov];
  }

  std::vector<ItemRecord> records;
  records.reserve(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    ItemRecord r;
    r.id = ItemId{static_cast<std::int64_t>(i + 1)};
    r.title = fmt::format("Title {}", i + 1);
    r.genres = item_genres[i];
    r.provider = provider_names[item_provider[i]];
    records.push_back(std::move(r));
  }
  // Providers left without items (possible only when specialists ran out of
  // niche items) still appear in the table.
  Catalog catalog(spec.genres, std::move(records), provider_names);

  // Consumers and latent tastes.
  const std::size_t n_cons = spec.consumers;
  const std::size_t n_niche_cons =
      degenerate ? (has_niche ? n_cons : 0)
                 : detail::round_count(spec.niche_fraction * static_cast<double>(n_cons));
  std::vector<std::size_t> cons_order(n_cons);
  for (std::size_t c = 0; c < n_cons; ++c) cons_order[c] = c;
  rng.shuffle(cons_order);
  std::vector<bool> wants_niche(n_cons, false);
  for (std::size_t k = 0; k < n_niche_cons; ++k) wants_niche[cons_order[k]] = true;

  std::vector<std::vector<double>> taste(n_cons, std::vector<double>(dims, 0.0));
  std::vector<std::size_t> favourite(n_cons, 0);
  for (std::size_t c = 0; c < n_cons; ++c) {
    auto& t = taste[c];
    if (dims == 1) {
      t[0] = 1.0;
      continue;
    }
    // A favourite, two further liked genres and a thin spread elsewhere.
    const bool niche_fan = wants_niche[c];
    const std::size_t fav = niche_fan ? niche : weighted_distinct(plain, 1).front();
    favourite[c] = fav;
    t[fav] = niche_fan ? rng.uniform(spec.niche_taste_lo, spec.niche_taste_hi)
                     : rng.uniform(spec.generic_taste_lo, spec.generic_taste_hi);
    std::vector<std::size_t> others;
    for (auto g : plain) {
      if (g != fav) others.push_back(g);
    }
    const auto liked = weighted_distinct(others, niche_fan ? spec.niche_secondary_genres : 2);
    double used = t[fav];
    for (std::size_t k = 0; k < liked.size(); ++k) {
      t[liked[k]] = t[fav] * (k == 0 ? rng.uniform(0.5, 0.8) : rng.uniform(0.3, 0.6));
      used += t[liked[k]];
    }
    if (!niche_fan && has_niche) {
      t[niche] = rng.uniform(0.0, 0.03);
      used += t[niche];
    }
    std::vector<std::size_t> rest;
    for (auto g : others) {
      if (std::find(liked.begin(), liked.end(), g) == liked.end()) rest.push_back(g);
    }
    std::vector<double> w(rest.size());
    double wsum = 0.0;
    for (auto& x : w) {
      x = rng.uniform(0.2, 1.0);
    }
    for (std::size_t k = 0; k < rest.size(); ++k) {
      w[k] *= genre_weight[rest[k]];
      wsum += w[k];
    }
    for (std::size_t k = 0; k < rest.size(); ++k) t[rest[k]] = std::max(0.0, 1.0 - used) * w[k] / wsum;
  }

  // Ratings. Popular items are also rated higher by everyone.
  std::vector<double> quality(n_items);
  {
    const double top = *std::max_element(popularity.begin(), popularity.end());
    const double bottom = *std::min_element(popularity.begin(), popularity.end());
    const double span = std::log(top) - std::log(bottom);
    for (std::size_t i = 0; i < n_items; ++i) {
      quality[i] = span > 0.0 ? (std::log(popularity[i]) - std::log(bottom)) / span : 0.5;
    }
  }
  std::vector<Interaction> rows;
  std::int64_t clock = 978300000;
  for (std::size_t c = 0; c < n_cons; ++c) {
    Rng crng(derive_seed(spec.seed, "synthetic-consumer", static_cast<std::int64_t>(c)));
    const std::size_t count = std::min(
        n_items, spec.min_ratings + static_cast<std::size_t>(crng.index(spec.max_ratings - spec.min_ratings + 1)));
    std::vector<double> weight(n_items);
    std::vector<double> affinity(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
      affinity[i] = detail::cosine(taste[c], item_genres[i]);
      weight[i] = std::pow(popularity[i], spec.popularity_bias) * (0.01 + std::pow(affinity[i], spec.affinity_exponent));
    }
    const double best_affinity = std::max(1e-9, *std::max_element(affinity.begin(), affinity.end()));
    for (std::size_t k = 0; k < count; ++k) {
      double total = 0.0;
      for (double w : weight) total += w;
      if (!(total > 0.0)) break;
      double u = crng.uniform() * total;
      std::size_t pick = n_items - 1;
      for (std::size_t i = 0; i < n_items; ++i) {
        if (weight[i] <= 0.0) continue;
        pick = i;
        if (u < weight[i]) break;
        u -= weight[i];
      }
      weight[pick] = 0.0;
      const double score = 1.5 + 2.5 * affinity[pick] / best_affinity + spec.quality_weight * quality[pick] +
                           0.6 * crng.normal();
      Interaction r;
      r.consumer = ConsumerId{static_cast<std::int64_t>(c + 1)};
      r.item = ItemId{static_cast<std::int64_t>(pick + 1)};
      r.rating = std::clamp(std::round(score), kMinRating, kMaxRating);
      r.timestamp = clock++;
      rows.push_back(r);
    }
  }

  // Top up ratings until every consumer's derived label matches the intended one.
  if (!degenerate) {
    for (int round = 0;; ++round) {
      auto log = make_log(rows);
      auto built = build_preferences(log, catalog, spec.niche_genre);
      std::map<ConsumerId, std::set<ItemId>> rated;
      for (const auto& r : log.records) rated[r.consumer].insert(r.item);
      bool changed = false;
      for (const auto& seed : built.seeds) {
        const auto c = static_cast<std::size_t>(raw(seed.consumer) - 1);
        const auto want = wants_niche[c] ? ConsumerType::Niche : ConsumerType::Generic;
        if (seed.type == want) continue;
        // Best unrated item of the favourite genre, preferring single-genre items.
        std::size_t best = n_items;
        std::size_t best_width = dims + 1;
        for (std::size_t i = 0; i < n_items; ++i) {
          if (item_genres[i][favourite[c]] <= 0.0) continue;
          if (rated[seed.consumer].contains(ItemId{static_cast<std::int64_t>(i + 1)})) continue;
          const auto width = static_cast<std::size_t>(std::count(item_genres[i].begin(), item_genres[i].end(), 1.0));
          if (width < best_width) {
            best = i;
            best_width = width;
          }
        }
        if (best == n_items) {
          throw ConfigError(fmt::format("synthetic spec infeasible: cannot realize label for consumer {}", c + 1));
        }
        rows.push_back(Interaction{seed.consumer, ItemId{static_cast<std::int64_t>(best + 1)}, kMaxRating, clock++});
        changed = true;
      }
      if (!changed) break;
      if (round > 1000) throw ConfigError("synthetic spec infeasible: labels did not converge");
    }
  }

  return SyntheticData{make_log(rows), std::move(catalog)};
}

namespace detail {
inline std::string format_rating(double r) { return fmt::format("{}", r); }
}  // namespace detail

// Writes ratings.csv, items.csv and providers.csv into dir.
inline void write_dataset(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream ratings(dir / "ratings.csv");
  ratings << "user,item,rating,timestamp\n";
  for (const auto& r : data.log.records) {
    ratings << raw(r.consumer) << ',' << raw(r.item) << ',' << detail::format_rating(r.rating) << ','
            << r.timestamp << '\n';
  }
  std::ofstream items(dir / "items.csv");
  items << "item,title,genres\n";
  std::ofstream providers(dir / "providers.csv");
  providers << "item,provider\n";
  const auto& genres = data.catalog.genres();
  for (const auto& [id, item] : data.catalog.items()) {
    std::string gs;
    for (std::size_t g = 0; g < genres.size(); ++g) {
      if (!item.has_genre(g)) continue;
      if (!gs.empty()) gs += '|';
      gs += genres[g];
    }
    items << raw(id) << ',' << csv::quote(item.title) << ',' << csv::quote(gs) << '\n';
    providers << raw(id) << ',' << csv::quote(item.provider) << '\n';
  }
  if (!ratings || !items || !providers) throw DataError("failed writing dataset to " + dir.string());
}

}  // namespace portsim
