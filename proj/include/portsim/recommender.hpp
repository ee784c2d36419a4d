#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "portsim/als.hpp"
#include "portsim/dataset.hpp"
#include "portsim/portability.hpp"
#include "portsim/rng.hpp"
#include "portsim/types.hpp"

namespace portsim {

struct RecommenderConfig {
  RecommenderId id;
  std::optional<std::string> genre;  // nullopt: serves every genre
  MfParams mf;
  std::size_t popular_list_size = 100;

  friend bool operator==(const RecommenderConfig&, const RecommenderConfig&) = default;
};

inline void validate(const RecommenderConfig& c, std::size_t slate_size) {
  if (c.id.empty()) throw ConfigError("recommender id is empty");
  validate(c.mf);
  if (c.popular_list_size < slate_size) {
    throw ConfigError("popular list size must be >= slate size for recommender " + c.id);
  }
}

enum class Provenance { Model, UserPopularity, GlobalPopularFallback };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Model: return "model";
    case Provenance::UserPopularity: return "user_popularity";
    case Provenance::GlobalPopularFallback: return "global_popular";
  }
  return "?";
}

struct Slate {
  RecommenderId recommender;
  ConsumerId consumer{};
  std::vector<ItemId> items;
  Provenance provenance = Provenance::GlobalPopularFallback;
};

namespace detail {
inline std::vector<ItemId> rank_by_count(const std::map<ItemId, std::size_t>& counts, std::size_t k) {
  std::vector<std::pair<ItemId, std::size_t>> v(counts.begin(), counts.end());
  // counts is ordered by id, so stable_sort keeps ascending ids among ties
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<ItemId> out;
  for (std::size_t i = 0; i < v.size() && i < k; ++i) out.push_back(v[i].first);
  return out;
}
}  // namespace detail

// Items by interaction count, descending; ties by ascending item id.
inline std::vector<ItemId> popular_list(const InteractionLog& log, std::size_t k) {
  std::map<ItemId, std::size_t> counts;
  for (const auto& r : log.records) ++counts[r.item];
  return detail::rank_by_count(counts, k);
}

// Same ranking over a profile snapshot; `only` restricts which consumers count.
inline std::vector<ItemId> popular_list(const TrainingSnapshot& snapshot, std::size_t k,
                                        const std::set<ConsumerId>* only = nullptr) {
  std::map<ItemId, std::size_t> counts;
  for (const auto& [consumer, profile] : snapshot) {
    if (only && !only->contains(consumer)) continue;
    for (const auto& e : profile) ++counts[e.item];
  }
  return detail::rank_by_count(counts, k);
}

// What a recommender serves from during one cycle.
struct ServingState {
  TrainedModel model;
  std::vector<ItemId> subscriber_popular;  // ranking over current subscribers' profiles
};

// Catalog items inside the specialization, minus items in the visible
// profile. Sorted ascending.
inline std::vector<ItemId> candidate_items(const Catalog& catalog, std::optional<std::size_t> genre,
                                           const Profile* visible) {
  std::set<ItemId> seen;
  if (visible) {
    for (const auto& e : *visible) seen.insert(e.item);
  }
  std::vector<ItemId> out;
  for (const auto& [id, item] : catalog.items()) {
    if (genre && !item.has_genre(*genre)) continue;
    if (seen.contains(id)) continue;
    out.push_back(id);
  }
  return out;
}

// Three tiers, exactly one of which fires:
//  1. consumer has user factors: top-n candidates by score, ties by id;
//  2. subscribers' popularity ranking intersects the candidates: top-n of it;
//  3. otherwise a seeded uniform draw of n from global_popular ∩ candidates.
// `candidates` must be sorted ascending.
inline Slate recommend(const RecommenderId& recommender, ConsumerId consumer, const ServingState& state,
                       const std::vector<ItemId>& candidates, std::size_t n,
                       const std::vector<ItemId>& global_popular, Rng& rng) {
  Slate slate{recommender, consumer, {}, Provenance::Model};
  auto is_candidate = [&](ItemId id) { return std::binary_search(candidates.begin(), candidates.end(), id); };

  if (auto row = state.model.user_row(consumer)) {
    std::vector<std::pair<double, ItemId>> scored;
    scored.reserve(candidates.size());
    for (auto id : candidates) scored.emplace_back(state.model.score(*row, id), id);
    const auto take = std::min(n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t i = 0; i < take; ++i) slate.items.push_back(scored[i].second);
    return slate;
  }

  for (auto id : state.subscriber_popular) {
    if (slate.items.size() == n) break;
    if (is_candidate(id)) slate.items.push_back(id);
  }
  if (!slate.items.empty()) {
    slate.provenance = Provenance::UserPopularity;
    return slate;
  }

  std::vector<ItemId> pool;
  for (auto id : global_popular) {
    if (is_candidate(id)) pool.push_back(id);
  }
  slate.provenance = Provenance::GlobalPopularFallback;
  slate.items = rng.sample(std::move(pool), n);
  return slate;
}

}  // namespace portsim
