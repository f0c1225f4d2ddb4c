/*
 * Copyright 2026 the recfair authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "recfair/models/baselines.hpp"

#include <gtest/gtest.h>

#include <set>

#include "recfair/models/registry.hpp"
#include "test_support.hpp"

using namespace recfair;

TEST(RandomModel, CounterBasedScoresAreReproducible) {
  RatingMatrix m = testsupport::random_matrix(10, 15, 5, 3);
  TrainContext ctx{&m, nullptr, 42, 1};
  RandomRecommender a{Hyperparams{}};
  RandomRecommender b{Hyperparams{}};
  a.fit(ctx);
  b.fit(ctx);
  for (int u = 0; u < 10; ++u) {
    for (int i = 0; i < 15; ++i) {
      const double s = a.score(u, i);
      EXPECT_EQ(s, b.score(u, i));
      EXPECT_GE(s, 0.0);
      EXPECT_LT(s, 1.0);
    }
  }
  // Scoring order cannot matter: same pair, fresh queries, same value.
  EXPECT_EQ(a.score(9, 14), a.score(9, 14));

  TrainContext other{&m, nullptr, 43, 1};
  RandomRecommender c{Hyperparams{}};
  c.fit(other);
  int differing = 0;
  for (int u = 0; u < 10; ++u) {
    for (int i = 0; i < 15; ++i) {
      if (c.score(u, i) != a.score(u, i)) ++differing;
    }
  }
  EXPECT_GT(differing, 100);  // different seed, essentially all scores move
}

TEST(MostPopular, ScoresEqualTrainingCounts) {
  RatingMatrix m = testsupport::random_matrix(12, 10, 6, 9);
  MostPopularRecommender model{Hyperparams{}};
  TrainContext ctx{&m, nullptr, 0, 1};
  model.fit(ctx);
  for (int i = 0; i < m.item_count(); ++i) {
    EXPECT_EQ(model.score(0, i), static_cast<double>(m.item_col(i).size()));
    EXPECT_EQ(model.score(5, i), model.score(0, i));  // user independent
  }
}

TEST(Baselines, RejectUnknownHyperparameters) {
  Hyperparams hp;
  hp.set("neighbors", "10");
  EXPECT_THROW(RandomRecommender{hp}, ConfigError);
  EXPECT_THROW(MostPopularRecommender{hp}, ConfigError);
}

TEST(TopN, MatchesSelectionOracle) {
  RatingMatrix m = testsupport::random_matrix(14, 20, 8, 21);
  RandomRecommender model{Hyperparams{}};
  TrainContext ctx{&m, nullptr, 5, 1};
  model.fit(ctx);
  const int n = 6;
  RecommendationSet recs = top_n(model, m, n);
  for (int u = 0; u < m.user_count(); ++u) {
    std::vector<double> scores;
    model.score_user(u, scores);
    const auto expect = testsupport::top_n_oracle(m, u, scores, n);
    const auto& got = recs.list(u);
    ASSERT_EQ(got.size(), static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      EXPECT_EQ(got[static_cast<std::size_t>(j)].item, expect[static_cast<std::size_t>(j)].item);
      EXPECT_EQ(got[static_cast<std::size_t>(j)].score, expect[static_cast<std::size_t>(j)].score);
    }
  }
}

TEST(TopN, NeverRecommendsTrainingItems) {
  RatingMatrix m = testsupport::random_matrix(10, 12, 6, 33);
  MostPopularRecommender model{Hyperparams{}};
  TrainContext ctx{&m, nullptr, 0, 1};
  model.fit(ctx);
  RecommendationSet recs = top_n(model, m, 5);
  for (int u = 0; u < m.user_count(); ++u) {
    std::set<int> seen;
    for (const ScoredItem& s : recs.list(u)) {
      EXPECT_FALSE(m.rated(u, s.item));
      EXPECT_TRUE(seen.insert(s.item).second) << "duplicate item in list";
    }
  }
}

TEST(TopN, TieBreaksByItemIndex) {
  // All scores equal: the list must be the first n unrated indices.
  RatingMatrix m = testsupport::random_matrix(4, 10, 3, 8);
  struct Flat : Recommender {
    Flat() : Recommender("flat", Hyperparams{}) {}
    void fit(const TrainContext& ctx) override { bind(ctx); }
    double score(int, int) const override { return 1.0; }
  } model;
  model.fit(TrainContext{&m, nullptr, 0, 1});
  RecommendationSet recs = top_n(model, m, 4);
  for (int u = 0; u < m.user_count(); ++u) {
    std::vector<int> expect;
    for (int i = 0; i < m.item_count() && static_cast<int>(expect.size()) < 4; ++i) {
      if (!m.rated(u, i)) expect.push_back(i);
    }
    const auto& got = recs.list(u);
    for (std::size_t j = 0; j < got.size(); ++j) {
      EXPECT_EQ(got[j].item, expect[j]);
    }
  }
}

TEST(TopN, ValidatesArguments) {
  RatingMatrix m = testsupport::random_matrix(4, 6, 2, 8);
  RandomRecommender model{Hyperparams{}};
  model.fit(TrainContext{&m, nullptr, 0, 1});
  EXPECT_THROW(top_n(model, m, 0), ConfigError);
  EXPECT_THROW(top_n(model, m, -3), ConfigError);
  // More slots than unrated items: 6 items, 2 rated -> 4 unrated < 5.
  EXPECT_THROW(top_n(model, m, 5), Error);

  struct Nan : Recommender {
    Nan() : Recommender("nan", Hyperparams{}) {}
    void fit(const TrainContext& ctx) override { bind(ctx); }
    double score(int, int) const override { return std::nan(""); }
  } bad;
  bad.fit(TrainContext{&m, nullptr, 0, 1});
  EXPECT_THROW(top_n(bad, m, 2), ModelError);
}

TEST(Registry, BuildsEveryAlgorithmAndChecksKeys) {
  for (const std::string& name : algorithm_names()) {
    auto model = make_model(name, Hyperparams{});
    ASSERT_NE(model, nullptr);
    EXPECT_EQ(model->name(), name);
  }
  EXPECT_THROW(make_model("pagerank", Hyperparams{}), ConfigError);
  Hyperparams bad;
  bad.set("nieghbors", "40");  // typo must be named in the error
  try {
    make_model("userknn", bad);
    FAIL() << "typo not rejected";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("nieghbors"), std::string::npos);
  }
}

TEST(Registry, FamiliesAndTrustRequirements) {
  EXPECT_EQ(model_family("random"), ModelFamily::baseline);
  EXPECT_EQ(model_family("userknn"), ModelFamily::neighborhood);
  EXPECT_EQ(model_family("trustknn"), ModelFamily::neighborhood);
  EXPECT_EQ(model_family("biasedmf"), ModelFamily::factorization);
  EXPECT_EQ(model_family("slim"), ModelFamily::factorization);
  EXPECT_TRUE(requires_trust("trustknn"));
  EXPECT_TRUE(requires_trust("soreg"));
  EXPECT_TRUE(requires_trust("socialmf"));
  EXPECT_FALSE(requires_trust("svdpp"));
  EXPECT_EQ(algorithm_names().size(), 11u);
}

TEST(HyperparamsType, TypedAccessAndCanonicalForm) {
  Hyperparams hp;
  hp.set("neighbors", "40");
  hp.set("similarity", "cosine");
  EXPECT_EQ(hp.integer("neighbors", 0), 40);
  EXPECT_EQ(hp.number("shrinkage", 2.5), 2.5);
  EXPECT_EQ(hp.text("similarity", "pearson"), "cosine");
  EXPECT_EQ(hp.canonical(), "neighbors=40,similarity=cosine");
  hp.set("shrinkage", "ten");
  EXPECT_THROW(hp.number("shrinkage", 0), ConfigError);
  hp.set("neighbors", "4.5");
  EXPECT_THROW(hp.integer("neighbors", 0), ConfigError);
}
