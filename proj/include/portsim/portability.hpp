#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "portsim/types.hpp"

namespace portsim {

enum class PortabilityPolicy { AlgorithmSpecific, ColdStart, UserOwnership, Universal };

inline constexpr PortabilityPolicy kAllPolicies[] = {PortabilityPolicy::AlgorithmSpecific,
                                                     PortabilityPolicy::ColdStart,
                                                     PortabilityPolicy::UserOwnership,
                                                     PortabilityPolicy::Universal};

// exclusive: the profile stays with the recommender that gathered it.
// permanent: the recommender keeps the profile after the consumer leaves.
struct PolicyTraits {
  bool exclusive;
  bool permanent;
};

constexpr PolicyTraits traits(PortabilityPolicy p) noexcept {
  switch (p) {
    case PortabilityPolicy::AlgorithmSpecific: return {true, true};
    case PortabilityPolicy::ColdStart: return {true, false};
    case PortabilityPolicy::UserOwnership: return {false, false};
    case PortabilityPolicy::Universal: return {false, true};
  }
  return {true, true};
}

inline std::string_view display_name(PortabilityPolicy p) {
  switch (p) {
    case PortabilityPolicy::AlgorithmSpecific: return "Algorithm-Specific";
    case PortabilityPolicy::ColdStart: return "Cold Start";
    case PortabilityPolicy::UserOwnership: return "User Ownership";
    case PortabilityPolicy::Universal: return "Universal";
  }
  return "?";
}

inline std::string_view config_key(PortabilityPolicy p) {
  switch (p) {
    case PortabilityPolicy::AlgorithmSpecific: return "algorithm_specific";
    case PortabilityPolicy::ColdStart: return "cold_start";
    case PortabilityPolicy::UserOwnership: return "user_ownership";
    case PortabilityPolicy::Universal: return "universal";
  }
  return "?";
}

inline std::optional<PortabilityPolicy> policy_from_key(std::string_view key) {
  for (auto p : kAllPolicies) {
    if (config_key(p) == key) return p;
  }
  return std::nullopt;
}

struct ProfileEntry {
  ItemId item{};
  int day = 0;  // -1 for pre-simulation history
  friend bool operator==(const ProfileEntry&, const ProfileEntry&) = default;
  friend auto operator<=>(const ProfileEntry&, const ProfileEntry&) = default;
};

using Profile = std::vector<ProfileEntry>;

// Immutable copy of the profiles one recommender may train on.
using TrainingSnapshot = std::map<ConsumerId, Profile>;

inline constexpr int kHistoryDay = -1;
inline const std::string kSharedStore = "shared";

struct AuditEvent {
  enum class Kind { Click, Switch, Delete, Transfer };
  Kind kind = Kind::Click;
  int day = 0;
  ConsumerId consumer{};
  ItemId item{};              // click
  std::string store;          // click, delete: store written or erased
  RecommenderId from, to;     // switch, transfer
  std::size_t count = 0;      // delete, transfer: entries affected

  friend bool operator==(const AuditEvent&, const AuditEvent&) = default;
};

inline std::string_view to_string(AuditEvent::Kind k) {
  switch (k) {
    case AuditEvent::Kind::Click: return "click";
    case AuditEvent::Kind::Switch: return "switch";
    case AuditEvent::Kind::Delete: return "delete";
    case AuditEvent::Kind::Transfer: return "transfer";
  }
  return "?";
}

inline nlohmann::ordered_json to_json(const AuditEvent& e) {
  nlohmann::ordered_json j;
  j["event"] = to_string(e.kind);
  j["day"] = e.day;
  j["consumer"] = raw(e.consumer);
  switch (e.kind) {
    case AuditEvent::Kind::Click:
      j["store"] = e.store;
      j["item"] = raw(e.item);
      break;
    case AuditEvent::Kind::Delete:
      j["store"] = e.store;
      j["count"] = e.count;
      break;
    case AuditEvent::Kind::Switch:
      j["from"] = e.from;
      j["to"] = e.to;
      break;
    case AuditEvent::Kind::Transfer:
      j["from"] = e.from;
      j["to"] = e.to;
      j["count"] = e.count;
      break;
  }
  return j;
}

inline AuditEvent audit_event_from_json(const nlohmann::json& j) {
  AuditEvent e;
  const auto kind = j.at("event").get<std::string>();
  if (kind == "click") {
    e.kind = AuditEvent::Kind::Click;
  } else if (kind == "switch") {
    e.kind = AuditEvent::Kind::Switch;
  } else if (kind == "delete") {
    e.kind = AuditEvent::Kind::Delete;
  } else if (kind == "transfer") {
    e.kind = AuditEvent::Kind::Transfer;
  } else {
    throw DataError("unknown audit event '" + kind + "'");
  }
  e.day = j.at("day").get<int>();
  e.consumer = ConsumerId{j.at("consumer").get<std::int64_t>()};
  if (j.contains("item")) e.item = ItemId{j.at("item").get<std::int64_t>()};
  if (j.contains("store")) e.store = j.at("store").get<std::string>();
  if (j.contains("from")) e.from = j.at("from").get<std::string>();
  if (j.contains("to")) e.to = j.at("to").get<std::string>();
  if (j.contains("count")) e.count = j.at("count").get<std::size_t>();
  return e;
}

using AuditSink = std::function<void(const AuditEvent&)>;

// Owns every profile. Universal keeps one shared map that all recommenders
// read; the other policies keep one map per recommender.
class ProfileStore {
 public:
  ProfileStore(PortabilityPolicy policy, std::vector<RecommenderId> recommenders, AuditSink sink = {})
      : policy_(policy), sink_(std::move(sink)) {
    if (!shared()) {
      for (auto& r : recommenders) per_recommender_.try_emplace(std::move(r));
    }
  }

  PortabilityPolicy policy() const noexcept { return policy_; }
  bool shared() const noexcept { return policy_ == PortabilityPolicy::Universal; }

  // Pre-simulation history, placed where a click at `home` would land.
  void seed_history(ConsumerId consumer, const RecommenderId& home, const std::vector<ItemId>& items) {
    for (auto item : items) record_click(consumer, home, item, kHistoryDay);
  }

  void record_click(ConsumerId consumer, const RecommenderId& via, ItemId item, int day) {
    const std::string store = shared() ? kSharedStore : via;
    map_for(via)[consumer].push_back({item, day});
    emit({AuditEvent::Kind::Click, day, consumer, item, store, {}, {}, 0});
  }

  void on_switch(ConsumerId consumer, const RecommenderId& from, const RecommenderId& to, int day) {
    if (from == to) throw Error("on_switch called with from == to");
    switch (policy_) {
      case PortabilityPolicy::AlgorithmSpecific:
      case PortabilityPolicy::Universal:
        return;
      case PortabilityPolicy::ColdStart: {
        erase(consumer, from, day);
        return;
      }
      case PortabilityPolicy::UserOwnership: {
        auto& src = map_for(from);
        auto it = src.find(consumer);
        if (it == src.end()) return;
        auto& dst = map_for(to)[consumer];
        std::set<ProfileEntry> present(dst.begin(), dst.end());
        std::size_t moved = 0;
        for (const auto& e : it->second) {
          if (present.insert(e).second) {
            dst.push_back(e);
            ++moved;
          }
        }
        std::stable_sort(dst.begin(), dst.end(),
                         [](const ProfileEntry& a, const ProfileEntry& b) { return a.day < b.day; });
        emit({AuditEvent::Kind::Transfer, day, consumer, {}, {}, from, to, moved});
        erase(consumer, from, day);
        return;
      }
    }
  }

  TrainingSnapshot training_view(const RecommenderId& recommender) const {
    if (shared()) return shared_;
    auto it = per_recommender_.find(recommender);
    return it == per_recommender_.end() ? TrainingSnapshot{} : it->second;
  }

  // Live profile the serving recommender sees for this consumer.
  const Profile* visible_profile(ConsumerId consumer, const RecommenderId& recommender) const {
    const TrainingSnapshot* m = nullptr;
    if (shared()) {
      m = &shared_;
    } else {
      auto it = per_recommender_.find(recommender);
      if (it == per_recommender_.end()) return nullptr;
      m = &it->second;
    }
    auto it = m->find(consumer);
    return it == m->end() ? nullptr : &it->second;
  }

  const TrainingSnapshot& shared_profiles() const noexcept { return shared_; }
  const std::map<RecommenderId, TrainingSnapshot>& per_recommender() const noexcept { return per_recommender_; }

  void emit_switch(ConsumerId consumer, const RecommenderId& from, const RecommenderId& to, int day) {
    emit({AuditEvent::Kind::Switch, day, consumer, {}, {}, from, to, 0});
  }

 private:
  TrainingSnapshot& map_for(const RecommenderId& recommender) {
    if (shared()) return shared_;
    auto it = per_recommender_.find(recommender);
    if (it == per_recommender_.end()) throw Error("unknown recommender " + recommender);
    return it->second;
  }

  void erase(ConsumerId consumer, const RecommenderId& from, int day) {
    auto& m = map_for(from);
    auto it = m.find(consumer);
    if (it == m.end()) return;
    const auto count = it->second.size();
    m.erase(it);
    emit({AuditEvent::Kind::Delete, day, consumer, {}, from, {}, {}, count});
  }

  void emit(const AuditEvent& e) {
    if (sink_) sink_(e);
  }

  PortabilityPolicy policy_;
  AuditSink sink_;
  TrainingSnapshot shared_;
  std::map<RecommenderId, TrainingSnapshot> per_recommender_;
};

}  // namespace portsim
