#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "portsim/dataset.hpp"
#include "portsim/rng.hpp"
#include "portsim/types.hpp"

namespace portsim {

struct BehaviorParams {
  double beta = 2.0;              // recency bias
  double tau = 0.2;               // satisfaction threshold
  double select_threshold = 0.2;  // minimum similarity for a click

  friend bool operator==(const BehaviorParams&, const BehaviorParams&) = default;
};

// tau may also be -inf, which disables switching.
inline void validate(const BehaviorParams& p) {
  if (!(p.beta >= 0.0) || !std::isfinite(p.beta)) throw ConfigError("beta must be a finite value >= 0");
  const bool tau_off = p.tau == -std::numeric_limits<double>::infinity();
  if (!tau_off && !(p.tau >= 0.0 && p.tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (!(p.select_threshold >= 0.0 && p.select_threshold <= 1.0)) {
    throw ConfigError("select threshold must lie in [0, 1]");
  }
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Mean cosine similarity between the preference vector and the slate items'
// genre vectors; 0 for an empty slate.
inline double list_utility(std::span<const double> preference, const std::vector<ItemId>& items,
                           const Catalog& catalog) {
  if (items.empty()) return 0.0;
  double sum = 0.0;
  for (auto id : items) sum += cosine_similarity(preference, catalog.item(id).genres);
  return sum / static_cast<double>(items.size());
}

// prev == mu is returned as is; (x*beta + x) / (1 + beta) can be off by an ulp.
inline double update_utility(double prev, double mu, double beta) {
  if (prev == mu) return mu;
  return (prev * beta + mu) / (1.0 + beta);
}

// Draws one slate item with probability proportional to similarity among
// those at or above the threshold.
inline std::optional<ItemId> select_item(std::span<const double> preference, const std::vector<ItemId>& items,
                                         const Catalog& catalog, const BehaviorParams& params, Rng& rng) {
  std::vector<std::pair<ItemId, double>> eligible;
  double total = 0.0;
  for (auto id : items) {
    const double s = cosine_similarity(preference, catalog.item(id).genres);
    if (s >= params.select_threshold) {
      eligible.emplace_back(id, s);
      total += s;
    }
  }
  if (eligible.empty() || !(total > 0.0)) return std::nullopt;
  double u = rng.uniform() * total;
  for (const auto& [id, s] : eligible) {
    if (u < s) return id;
    u -= s;
  }
  return eligible.back().first;
}

struct ConsumerState {
  ConsumerId id{};
  std::vector<double> preference;
  ConsumerType type = ConsumerType::Generic;
  RecommenderId current;
  std::map<RecommenderId, double> estimates;
  std::set<RecommenderId> tried;

  ConsumerState() = default;
  ConsumerState(ConsumerId id_, std::vector<double> pref, ConsumerType t, RecommenderId start)
      : id(id_), preference(std::move(pref)), type(t), current(start), tried{std::move(start)} {}

  // First observation initializes the estimate, later ones smooth it.
  void observe(const RecommenderId& k, double mu, double beta) {
    auto [it, inserted] = estimates.try_emplace(k, mu);
    if (!inserted) it->second = update_utility(it->second, mu, beta);
  }

  std::optional<double> estimate(const RecommenderId& k) const {
    auto it = estimates.find(k);
    if (it == estimates.end()) return std::nullopt;
    return it->second;
  }

  void attach(const RecommenderId& k) {
    current = k;
    tried.insert(k);
  }
};

struct SwitchDecision {
  std::optional<RecommenderId> to;
  bool stays() const noexcept { return !to.has_value(); }
};

// Below tau, a consumer moves to an untried recommender or to one whose
// estimate is at least the current one. Among several, the highest estimate
// wins (untried counts as +inf), ties by recommender id.
inline SwitchDecision decide_switch(const ConsumerState& c, const BehaviorParams& params,
                                    const std::vector<RecommenderId>& active) {
  const double mine = c.estimate(c.current).value_or(std::numeric_limits<double>::infinity());
  if (!(mine < params.tau)) return {};
  std::optional<RecommenderId> best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& k : active) {
    if (k == c.current) continue;
    const bool untried = !c.tried.contains(k);
    const auto est = c.estimate(k);
    const double value = untried || !est ? std::numeric_limits<double>::infinity() : *est;
    if (!untried && est && *est < mine) continue;
    if (!best || value > best_value || (value == best_value && k < *best)) {
      best = k;
      best_value = value;
    }
  }
  return {best};
}

inline SwitchDecision maybe_switch(ConsumerState& c, const BehaviorParams& params,
                                   const std::vector<RecommenderId>& active) {
  auto d = decide_switch(c, params, active);
  if (d.to) c.attach(*d.to);
  return d;
}

}  // namespace portsim
