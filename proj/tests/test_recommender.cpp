#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <map>
#include <set>

#include "support.hpp"

using namespace portsim;
using namespace portsim::testing;

namespace {

MfParams small_mf(int factors = 4, int epochs = 10) {
  MfParams p;
  p.factors = factors;
  p.epochs = epochs;
  return p;
}

Profile clicks(std::initializer_list<std::int64_t> items) {
  Profile p;
  for (auto i : items) p.push_back({ItemId{i}, 0});
  return p;
}

}  // namespace

TEST(Train, SingleClickOutscoresUnclicked) {
  TrainingSnapshot snap{{ConsumerId{1}, clicks({1})}, {ConsumerId{2}, clicks({2})}};
  for (int k : {1, 2, 8}) {
    auto model = train_als(snap, small_mf(k), 5);
    auto row = model.user_row(ConsumerId{1});
    ASSERT_TRUE(row);
    EXPECT_GT(model.score(*row, ItemId{1}), model.score(*row, ItemId{2})) << "factors " << k;
  }
}

TEST(Train, EmptySnapshotGivesEmptyModel) {
  auto model = train_als({}, small_mf(), 1);
  EXPECT_TRUE(model.empty());
  auto global = std::vector<ItemId>{ItemId{1}, ItemId{2}, ItemId{3}};
  Rng rng(4);
  auto slate = recommend("RG", ConsumerId{1}, ServingState{model, {}}, global, 2, global, rng);
  EXPECT_EQ(slate.provenance, Provenance::GlobalPopularFallback);
  EXPECT_EQ(slate.items.size(), 2u);
}

TEST(Train, Deterministic) {
  TrainingSnapshot snap{{ConsumerId{1}, clicks({1, 2, 3})}, {ConsumerId{4}, clicks({2, 5})}};
  EXPECT_EQ(train_als(snap, small_mf(), 77), train_als(snap, small_mf(), 77));
}

TEST(Train, InvalidParamsRejected) {
  EXPECT_THROW(train_als({}, small_mf(0), 1), ConfigError);
  RecommenderConfig rc{"RG", std::nullopt, small_mf(), 5};
  EXPECT_THROW(validate(rc, 10), ConfigError);
  EXPECT_NO_THROW(validate(rc, 5));
}

// The last half-step solves the item side; recompute it densely with the
// full confidence matrix and compare.
TEST(Train, ItemFactorsSatisfyDenseNormalEquations) {
  Rng gen(12);
  for (int trial = 0; trial < 20; ++trial) {
    TrainingSnapshot snap;
    for (std::int64_t u = 1; u <= 6; ++u) {
      Profile p;
      for (std::int64_t i = 1; i <= 7; ++i) {
        if (gen.uniform() < 0.35) p.push_back({ItemId{i}, 0});
      }
      if (!p.empty()) snap[ConsumerId{u}] = p;
    }
    if (snap.empty()) continue;
    const auto mf = small_mf(3, 3);
    auto model = train_als(snap, mf, 8);
    const auto& U = model.user_factors();
    for (std::size_t i = 0; i < model.items().size(); ++i) {
      Eigen::VectorXd c = Eigen::VectorXd::Ones(U.rows());
      Eigen::VectorXd pref = Eigen::VectorXd::Zero(U.rows());
      for (std::size_t u = 0; u < model.users().size(); ++u) {
        for (const auto& e : snap.at(model.users()[u])) {
          if (e.item == model.items()[i]) {
            c(static_cast<Eigen::Index>(u)) = 1.0 + mf.confidence;
            pref(static_cast<Eigen::Index>(u)) = 1.0;
          }
        }
      }
      Eigen::MatrixXd a = U.transpose() * c.asDiagonal() * U;
      a.diagonal().array() += mf.regularization;
      Eigen::VectorXd expect = a.colPivHouseholderQr().solve(U.transpose() * c.asDiagonal() * pref);
      for (Eigen::Index f = 0; f < U.cols(); ++f) {
        EXPECT_NEAR(model.item_factors()(static_cast<Eigen::Index>(i), f), expect(f), 1e-8);
      }
    }
  }
}

TEST(Train, BlockDiagonalToyStaysInBlock) {
  // users 1-3 x items 1-3 and users 4-5 x items 4-5, each block partly
  // observed; default hyperparameters
  TrainingSnapshot snap{{ConsumerId{1}, clicks({1, 2})}, {ConsumerId{2}, clicks({2, 3})},
                        {ConsumerId{3}, clicks({1, 3})}, {ConsumerId{4}, clicks({4, 5})},
                        {ConsumerId{5}, clicks({4})}};
  auto in_a = [](std::int64_t id) { return id <= 3; };
  for (std::uint64_t seed : {1, 2, 3}) {
    auto model = train_als(snap, MfParams{}, seed);
    int checked = 0;
    for (const auto& [consumer, profile] : snap) {
      std::set<ItemId> seen;
      for (const auto& e : profile) seen.insert(e.item);
      std::vector<ItemId> candidates;
      bool own_block_left = false;
      for (std::int64_t i = 1; i <= 5; ++i) {
        if (seen.contains(ItemId{i})) continue;
        candidates.push_back(ItemId{i});
        own_block_left |= in_a(i) == in_a(raw(consumer));
      }
      if (!own_block_left) continue;
      ++checked;
      Rng rng(1);
      auto slate = recommend("RG", consumer, ServingState{model, {}}, candidates, 1, {}, rng);
      ASSERT_EQ(slate.items.size(), 1u);
      EXPECT_EQ(in_a(raw(slate.items[0])), in_a(raw(consumer))) << "user " << raw(consumer) << " seed " << seed;
    }
    EXPECT_EQ(checked, 4);
  }
}

TEST(Recommend, ScoreTiesBrokenById) {
  Eigen::MatrixXd users(1, 1);
  users << 1.0;
  Eigen::MatrixXd items(3, 1);
  items << 0.9, 0.5, 0.5;
  TrainedModel model({ConsumerId{1}}, {ItemId{10}, ItemId{11}, ItemId{12}}, users, items, 0);
  Rng rng(1);
  std::vector<ItemId> cands{ItemId{10}, ItemId{11}, ItemId{12}};
  auto slate = recommend("RG", ConsumerId{1}, ServingState{model, {}}, cands, 2, {}, rng);
  EXPECT_EQ(slate.items, (std::vector<ItemId>{ItemId{10}, ItemId{11}}));
  EXPECT_EQ(slate.provenance, Provenance::Model);
}

TEST(Recommend, NewNicheSubscriberGetsPopularHorror) {
  const std::vector<std::string> g{"Comedy", "Horror"};
  std::vector<ItemRecord> items;
  for (int i = 1; i <= 10; ++i) items.push_back(make_item(i, i % 2 ? gvec(g, {"Horror"}) : gvec(g, {"Comedy"}), "p"));
  Catalog catalog(g, items);
  TrainingSnapshot rn{{ConsumerId{1}, clicks({1, 2, 3, 4, 5})}, {ConsumerId{2}, clicks({3, 5, 7})}};
  ServingState state{train_als(rn, small_mf(), 1), popular_list(rn, 100)};
  const auto cands = candidate_items(catalog, catalog.genre_index("Horror"), nullptr);
  Rng rng(1);
  auto slate = recommend("RN", ConsumerId{9}, state, cands, 4, {}, rng);
  EXPECT_EQ(slate.provenance, Provenance::UserPopularity);
  ASSERT_FALSE(slate.items.empty());
  EXPECT_EQ(slate.items, (std::vector<ItemId>{ItemId{3}, ItemId{5}, ItemId{1}, ItemId{7}}));
  for (auto id : slate.items) EXPECT_TRUE(catalog.item(id).has_genre(1));
}

TEST(PopularList, CountsThenIds) {
  auto log = make_log({rating(1, 1, 5), rating(2, 1, 5), rating(3, 1, 5), rating(1, 2, 5), rating(1, 3, 5),
                       rating(2, 3, 5), rating(3, 3, 5)});
  EXPECT_EQ(popular_list(log, 2), (std::vector<ItemId>{ItemId{1}, ItemId{3}}));
  EXPECT_EQ(popular_list(log, 10), (std::vector<ItemId>{ItemId{1}, ItemId{3}, ItemId{2}}));
  EXPECT_TRUE(popular_list(InteractionLog{}, 5).empty());
}

TEST(PopularList, MatchesCountingOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Interaction> rows;
    for (int k = 0; k < 60; ++k) {
      rows.push_back(rating(static_cast<std::int64_t>(rng.index(20)), static_cast<std::int64_t>(rng.index(15)), 4));
    }
    auto log = make_log(rows);
    std::map<std::int64_t, int> count;
    for (const auto& r : log.records) ++count[raw(r.item)];
    auto list = popular_list(log, 100);
    ASSERT_EQ(list.size(), count.size());
    for (std::size_t i = 1; i < list.size(); ++i) {
      const int a = count[raw(list[i - 1])], b = count[raw(list[i])];
      EXPECT_TRUE(a > b || (a == b && raw(list[i - 1]) < raw(list[i])));
    }
  }
}

// Random catalogs, stores and models: containment, no-reconsumption and
// fallback totality.
TEST(RecommendProperties, RandomStates) {
  Rng rng(1234);
  const std::vector<std::string> g{"Comedy", "Drama", "Horror"};
  const std::size_t horror = 2;
  int by_tier[3] = {0, 0, 0};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ItemRecord> items;
    const auto n_items = 3 + rng.index(25);
    for (std::size_t i = 1; i <= n_items; ++i) {
      std::vector<double> v(3, 0.0);
      v[rng.index(3)] = 1.0;
      if (rng.uniform() < 0.3) v[rng.index(3)] = 1.0;
      items.push_back(make_item(static_cast<std::int64_t>(i), v, "p"));
    }
    Catalog catalog(g, items);
    const auto ids = catalog.item_ids();

    TrainingSnapshot snap;
    const auto n_users = rng.index(6);
    for (std::size_t u = 1; u <= n_users; ++u) {
      Profile p;
      for (auto id : rng.sample(ids, 1 + rng.index(5))) p.push_back({id, 0});
      snap[ConsumerId{static_cast<std::int64_t>(u)}] = p;
    }
    ServingState state;
    if (rng.uniform() < 0.6) state.model = train_als(snap, small_mf(2, 2), trial);
    if (rng.uniform() < 0.6) state.subscriber_popular = popular_list(snap, 100);
    const auto global = rng.sample(ids, rng.index(ids.size() + 1));

    const ConsumerId who{1 + static_cast<std::int64_t>(rng.index(7))};
    auto it = snap.find(who);
    const Profile* visible = it == snap.end() ? nullptr : &it->second;
    const bool niche = rng.uniform() < 0.5;
    std::optional<std::size_t> genre;
    if (niche) genre = horror;
    const auto cands = candidate_items(catalog, genre, visible);
    const auto n = 1 + rng.index(6);

    Slate slate;
    ASSERT_NO_THROW(slate = recommend(niche ? "RN" : "RG", who, state, cands, n, global, rng));
    ++by_tier[static_cast<int>(slate.provenance)];
    ASSERT_LE(slate.items.size(), n);
    std::set<ItemId> uniq(slate.items.begin(), slate.items.end());
    ASSERT_EQ(uniq.size(), slate.items.size());
    for (auto id : slate.items) {
      if (niche) {
        ASSERT_TRUE(catalog.item(id).has_genre(horror)) << "containment";
      }
      if (visible) {
        for (const auto& e : *visible) ASSERT_NE(e.item, id) << "no-reconsumption";
      }
    }
    const bool known = state.model.user_row(who).has_value();
    ASSERT_EQ(slate.provenance == Provenance::Model, known);
    if (known) {
      ASSERT_EQ(slate.items.size(), std::min(n, cands.size()));
    }
  }
  EXPECT_GT(by_tier[0], 0);
  EXPECT_GT(by_tier[1], 0);
  EXPECT_GT(by_tier[2], 0);
}

TEST(Recommend, SameRngStateSameSlate) {
  auto data = small_dataset();
  const auto global = popular_list(data.log, 100);
  const auto cands = candidate_items(data.catalog, std::nullopt, nullptr);
  Rng a(5), b(5);
  EXPECT_EQ(recommend("RG", ConsumerId{1}, {}, cands, 10, global, a).items,
            recommend("RG", ConsumerId{1}, {}, cands, 10, global, b).items);
}
