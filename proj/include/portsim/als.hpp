#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "portsim/portability.hpp"
#include "portsim/rng.hpp"
#include "portsim/types.hpp"

namespace portsim {

struct MfParams {
  int factors = 32;
  int epochs = 10;
  double regularization = 0.1;
  double confidence = 40.0;  // c = 1 + confidence * weight

  friend bool operator==(const MfParams&, const MfParams&) = default;
};

inline void validate(const MfParams& p) {
  if (p.factors < 1) throw ConfigError("latent factors must be >= 1");
  if (p.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(p.regularization > 0.0)) throw ConfigError("regularization must be > 0");
  if (!(p.confidence >= 0.0)) throw ConfigError("confidence weight must be >= 0");
}

// Factor matrices keyed by sorted id lists (row r of user_factors belongs to
// users[r]). Immutable once trained.
class TrainedModel {
 public:
  TrainedModel() = default;
  TrainedModel(std::vector<ConsumerId> users, std::vector<ItemId> items, Eigen::MatrixXd user_factors,
               Eigen::MatrixXd item_factors, int cycle)
      : users_(std::move(users)),
        items_(std::move(items)),
        user_factors_(std::move(user_factors)),
        item_factors_(std::move(item_factors)),
        cycle_(cycle) {
    item_row_.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) item_row_.emplace(raw(items_[i]), static_cast<Eigen::Index>(i));
  }

  bool empty() const noexcept { return users_.empty(); }
  int trained_at_cycle() const noexcept { return cycle_; }
  Eigen::Index factors() const noexcept { return user_factors_.cols(); }
  const std::vector<ConsumerId>& users() const noexcept { return users_; }
  const std::vector<ItemId>& items() const noexcept { return items_; }
  const Eigen::MatrixXd& user_factors() const noexcept { return user_factors_; }
  const Eigen::MatrixXd& item_factors() const noexcept { return item_factors_; }

  std::optional<Eigen::Index> user_row(ConsumerId c) const {
    auto it = std::lower_bound(users_.begin(), users_.end(), c);
    if (it == users_.end() || *it != c) return std::nullopt;
    return static_cast<Eigen::Index>(it - users_.begin());
  }

  // Items never seen in training have a zero factor vector, so score 0.
  double score(Eigen::Index user_row, ItemId item) const {
    auto it = item_row_.find(raw(item));
    if (it == item_row_.end()) return 0.0;
    return user_factors_.row(user_row).dot(item_factors_.row(it->second));
  }

  friend bool operator==(const TrainedModel& a, const TrainedModel& b) {
    return a.users_ == b.users_ && a.items_ == b.items_ && a.cycle_ == b.cycle_ &&
           a.user_factors_.rows() == b.user_factors_.rows() && a.user_factors_.cols() == b.user_factors_.cols() &&
           a.item_factors_.rows() == b.item_factors_.rows() && a.item_factors_.cols() == b.item_factors_.cols() &&
           a.user_factors_ == b.user_factors_ && a.item_factors_ == b.item_factors_;
  }

 private:
  std::vector<ConsumerId> users_;
  std::vector<ItemId> items_;
  Eigen::MatrixXd user_factors_;
  Eigen::MatrixXd item_factors_;
  std::unordered_map<std::int64_t, Eigen::Index> item_row_;
  int cycle_ = -1;
};

namespace detail {

struct Cell {
  Eigen::Index row;
  double weight;
};

// One half-step of implicit ALS: for each row r of `target`,
//   (F'F + lambda I + sum_j (c_rj - 1) f_j f_j') x_r = sum_j c_rj f_j
// where j runs over the observed cells of r and c = 1 + alpha * weight.
inline void solve_side(Eigen::MatrixXd& target, const Eigen::MatrixXd& fixed,
                       const std::vector<std::vector<Cell>>& cells, double lambda, double alpha) {
  const Eigen::Index k = fixed.cols();
  Eigen::MatrixXd gram = fixed.transpose() * fixed;
  gram.diagonal().array() += lambda;
  Eigen::MatrixXd a(k, k);
  Eigen::VectorXd b(k);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  for (std::size_t r = 0; r < cells.size(); ++r) {
    a = gram;
    b.setZero();
    for (const auto& cell : cells[r]) {
      const double c = 1.0 + alpha * cell.weight;
      auto f = fixed.row(cell.row).transpose();
      a.selfadjointView<Eigen::Lower>().rankUpdate(f, c - 1.0);
      b.noalias() += c * f;
    }
    llt.compute(a);  // reads the lower triangle only
    target.row(static_cast<Eigen::Index>(r)) = llt.solve(b).transpose();
  }
}

}  // namespace detail

// Implicit-feedback alternating least squares. Each profile entry counts as
// one unit of weight; ids are processed in sorted order so the result only
// depends on (snapshot, params, seed).
inline TrainedModel train_als(const TrainingSnapshot& snapshot, const MfParams& params, std::uint64_t seed,
                              int cycle = 0) {
  validate(params);
  std::vector<ConsumerId> users;
  std::map<ItemId, Eigen::Index> item_index;
  for (const auto& [consumer, profile] : snapshot) {
    if (profile.empty()) continue;
    users.push_back(consumer);
    for (const auto& e : profile) item_index.emplace(e.item, 0);
  }
  if (users.empty()) return TrainedModel{};

  std::vector<ItemId> items;
  items.reserve(item_index.size());
  for (auto& [id, idx] : item_index) {
    idx = static_cast<Eigen::Index>(items.size());
    items.push_back(id);
  }

  std::vector<std::vector<detail::Cell>> by_user(users.size());
  std::vector<std::vector<detail::Cell>> by_item(items.size());
  {
    Eigen::Index u = 0;
    for (const auto& [consumer, profile] : snapshot) {
      if (profile.empty()) continue;
      std::map<Eigen::Index, double> weights;
      for (const auto& e : profile) weights[item_index.at(e.item)] += 1.0;
      for (const auto& [i, w] : weights) {
        by_user[static_cast<std::size_t>(u)].push_back({i, w});
        by_item[static_cast<std::size_t>(i)].push_back({u, w});
      }
      ++u;
    }
  }

  const Eigen::Index k = params.factors;
  Rng rng(seed);
  Eigen::MatrixXd user_f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(users.size()), k);
  Eigen::MatrixXd item_f(static_cast<Eigen::Index>(items.size()), k);
  for (Eigen::Index i = 0; i < item_f.rows(); ++i) {
    for (Eigen::Index f = 0; f < k; ++f) item_f(i, f) = 0.1 * rng.normal();
  }

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    detail::solve_side(user_f, item_f, by_user, params.regularization, params.confidence);
    detail::solve_side(item_f, user_f, by_item, params.regularization, params.confidence);
    if (!user_f.allFinite() || !item_f.allFinite()) {
      throw NumericError("non-finite factors while training at cycle " + std::to_string(cycle));
    }
  }
  return TrainedModel(std::move(users), std::move(items), std::move(user_f), std::move(item_f), cycle);
}

}  // namespace portsim
