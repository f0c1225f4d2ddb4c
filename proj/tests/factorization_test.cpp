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
#include "recfair/models/factorization.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>

#include "recfair/models/listrank.hpp"
#include "test_support.hpp"

using namespace recfair;

namespace {

// Random parameters, including nonzero biases, away from the tiny SGD
// init range so gradient checks exercise generic points.
FactorState random_state(int users, int items, int factors, std::uint64_t seed,
                         bool with_implicit) {
  FactorState s;
  Rng rng(seed);
  s.global_mean = 3.1;
  s.user_bias.resize(static_cast<std::size_t>(users));
  s.item_bias.resize(static_cast<std::size_t>(items));
  for (double& x : s.user_bias) x = rng.uniform(-0.5, 0.5);
  for (double& x : s.item_bias) x = rng.uniform(-0.5, 0.5);
  s.user_factors = Matrix(users, factors);
  s.item_factors = Matrix(items, factors);
  for (double& x : s.user_factors.data) x = rng.uniform(-0.8, 0.8);
  for (double& x : s.item_factors.data) x = rng.uniform(-0.8, 0.8);
  if (with_implicit) {
    s.implicit_factors = Matrix(items, factors);
    for (double& x : s.implicit_factors.data) x = rng.uniform(-0.8, 0.8);
  }
  return s;
}

// Ratings carrying a planted rank-2 signal, so a factor model can actually
// drive the training error down (noise-only data has nothing to learn).
RatingMatrix planted_matrix(int users, int items, int per_user, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::array<double, 2>> p(static_cast<std::size_t>(users));
  std::vector<std::array<double, 2>> q(static_cast<std::size_t>(items));
  for (auto& row : p) row = {rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
  for (auto& row : q) row = {rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
  auto user_index = std::make_shared<IdIndex>();
  auto item_index = std::make_shared<IdIndex>();
  for (int u = 0; u < users; ++u) user_index->intern("u" + std::to_string(u));
  for (int i = 0; i < items; ++i) item_index->intern("i" + std::to_string(i));
  std::vector<RatingEntry> entries;
  for (int u = 0; u < users; ++u) {
    std::vector<int> all(static_cast<std::size_t>(items));
    for (int i = 0; i < items; ++i) all[static_cast<std::size_t>(i)] = i;
    rng.shuffle(all);
    for (int j = 0; j < std::min(per_user, items); ++j) {
      const int i = all[static_cast<std::size_t>(j)];
      const auto& pu = p[static_cast<std::size_t>(u)];
      const auto& qi = q[static_cast<std::size_t>(i)];
      const double value = 3.0 + pu[0] * qi[0] + pu[1] * qi[1];
      entries.push_back({u, i, std::clamp(value, kMinRating, kMaxRating)});
    }
  }
  return RatingMatrix(user_index, item_index, std::move(entries));
}

TrustGraph random_trust(int users, std::uint64_t seed) {
  std::vector<std::pair<int, int>> edges;
  Rng rng(seed);
  for (int u = 0; u < users; ++u) {
    const int degree = 1 + static_cast<int>(rng.below(3));
    for (int e = 0; e < degree; ++e) {
      const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(users)));
      if (v != u) edges.push_back({u, v});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return TrustGraph(users, {}, std::move(edges));
}

}  // namespace

TEST(MfGradient, PlainBiasedModelMatchesFiniteDifferences) {
  RatingMatrix m = testsupport::random_matrix(6, 8, 4, 11);
  MfOptions o;
  o.factors = 3;
  o.reg_user = 0.05;
  o.reg_item = 0.02;
  o.reg_bias = 0.03;
  FactorState s = random_state(6, 8, 3, 91, false);
  SocialLinks links;
  const FactorState grad = mf_gradient(s, m, links, o);
  const double err =
      testsupport::max_gradient_error(s, [&] { return mf_loss(s, m, links, o); }, grad);
  EXPECT_LT(err, 1e-6);
}

TEST(MfGradient, PairwiseSocialTermMatchesFiniteDifferences) {
  RatingMatrix m = testsupport::random_matrix(7, 9, 4, 29);
  TrustGraph g = random_trust(7, 5);
  MfOptions o;
  o.factors = 3;
  o.reg_user = 0.01;
  o.reg_item = 0.01;
  o.reg_bias = 0.02;
  o.reg_social = 0.4;
  o.social = SocialTerm::pairwise_similarity;
  SocialLinks links = social_links(m, g, o.social);
  FactorState s = random_state(7, 9, 3, 17, false);
  const FactorState grad = mf_gradient(s, m, links, o);
  const double err =
      testsupport::max_gradient_error(s, [&] { return mf_loss(s, m, links, o); }, grad);
  EXPECT_LT(err, 1e-6);
}

TEST(MfGradient, TrustMeanLogisticTermMatchesFiniteDifferences) {
  RatingMatrix m = testsupport::random_matrix(6, 7, 4, 37);
  TrustGraph g = random_trust(6, 3);
  MfOptions o;
  o.factors = 3;
  o.reg_user = 0.02;
  o.reg_item = 0.02;
  o.reg_social = 0.7;
  o.social = SocialTerm::trust_mean;
  o.logistic = true;
  SocialLinks links = social_links(m, g, o.social);
  FactorState s = random_state(6, 7, 3, 53, false);
  const FactorState grad = mf_gradient(s, m, links, o);
  const double err =
      testsupport::max_gradient_error(s, [&] { return mf_loss(s, m, links, o); }, grad);
  EXPECT_LT(err, 1e-6);
}

TEST(SvdppGradient, MatchesFiniteDifferences) {
  RatingMatrix m = testsupport::random_matrix(5, 7, 3, 43);
  SvdppOptions o;
  o.factors = 3;
  o.reg_user = 0.03;
  o.reg_item = 0.01;
  o.reg_bias = 0.02;
  o.reg_implicit = 0.04;
  FactorState s = random_state(5, 7, 3, 77, true);
  const FactorState grad = svdpp_gradient(s, m, o);
  const double err =
      testsupport::max_gradient_error(s, [&] { return svdpp_loss(s, m, o); }, grad);
  EXPECT_LT(err, 1e-6);
}

TEST(ListRankGradient, MatchesFiniteDifferences) {
  RatingMatrix m = testsupport::random_matrix(6, 9, 5, 61);
  ListRankOptions o;
  o.factors = 3;
  o.reg_user = 0.02;
  o.reg_item = 0.05;
  FactorState s = random_state(6, 9, 3, 19, false);
  s.user_bias.assign(6, 0.0);  // not part of this model
  s.item_bias.assign(9, 0.0);
  const FactorState grad = listrank_gradient(s, m, o);
  FactorState padded = grad;
  padded.user_bias.assign(6, 0.0);
  padded.item_bias.assign(9, 0.0);
  const double err =
      testsupport::max_gradient_error(s, [&] { return listrank_loss(s, m, o); }, padded);
  EXPECT_LT(err, 1e-6);
}

TEST(BiasedMf, TrainingRmseDecreasesOnLearnableData) {
  RatingMatrix m = planted_matrix(30, 25, 12, 7);
  MfOptions o;
  o.factors = 8;
  o.learn_rate = 0.02;
  o.reg_user = o.reg_item = o.reg_bias = 0.005;
  o.iterations = 80;
  MfFit fit = fit_mf(m, nullptr, o, 123);
  ASSERT_EQ(fit.trace.size(), 80u);
  EXPECT_LT(fit.trace[1], fit.trace[0]);
  EXPECT_LT(fit.trace[2], fit.trace[1]);
  EXPECT_LT(fit.trace.back(), 0.5 * fit.trace.front());
  EXPECT_LT(fit.trace.back(), 0.25);  // the planted signal is recoverable
}

TEST(BiasedMf, DeterministicPerSeed) {
  RatingMatrix m = testsupport::random_matrix(12, 10, 6, 3);
  MfOptions o;
  o.iterations = 5;
  MfFit a = fit_mf(m, nullptr, o, 9);
  MfFit b = fit_mf(m, nullptr, o, 9);
  MfFit c = fit_mf(m, nullptr, o, 10);
  EXPECT_EQ(a.state.user_factors.data, b.state.user_factors.data);
  EXPECT_EQ(a.state.user_bias, b.state.user_bias);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_NE(a.state.user_factors.data, c.state.user_factors.data);
}

TEST(BiasedMf, DivergenceIsAModelError) {
  RatingMatrix m = testsupport::random_matrix(15, 12, 8, 5);
  MfOptions o;
  o.learn_rate = 20.0;  // hopeless step size
  o.iterations = 50;
  EXPECT_THROW(fit_mf(m, nullptr, o, 1), ModelError);
}

// With the social weight at zero the social phase must not run at all:
// not merely converge to the same place, but produce the identical
// bit-for-bit trajectory as the plain biased model.
TEST(SoReg, ZeroSocialWeightReproducesBiasedMfExactly) {
  RatingMatrix m = testsupport::random_matrix(14, 11, 7, 31);
  TrustGraph g = random_trust(14, 8);
  MfOptions plain;
  plain.iterations = 12;
  MfFit base = fit_mf(m, nullptr, plain, 77);

  MfOptions social = plain;
  social.social = SocialTerm::pairwise_similarity;
  social.reg_social = 0.0;
  MfFit with_graph = fit_mf(m, &g, social, 77);

  EXPECT_EQ(base.state.user_factors.data, with_graph.state.user_factors.data);
  EXPECT_EQ(base.state.item_factors.data, with_graph.state.item_factors.data);
  EXPECT_EQ(base.state.user_bias, with_graph.state.user_bias);
  EXPECT_EQ(base.state.item_bias, with_graph.state.item_bias);
  EXPECT_EQ(base.trace, with_graph.trace);

  // And a nonzero weight changes the trajectory.
  social.reg_social = 0.5;
  MfFit active = fit_mf(m, &g, social, 77);
  EXPECT_NE(base.state.user_factors.data, active.state.user_factors.data);
}

TEST(SocialMf, LogisticModeStaysInRatingRangeAndUsesTrust) {
  RatingMatrix m = testsupport::random_matrix(16, 12, 7, 67);
  TrustGraph g = random_trust(16, 21);
  Hyperparams hp;
  hp.set("factors", "6");
  hp.set("iterations", "15");
  hp.set("learn_rate", "0.5");
  hp.set("reg_social", "1.0");
  SocialMfRecommender model{hp};
  model.fit(TrainContext{&m, &g, 3, 1});
  for (int u = 0; u < m.user_count(); ++u) {
    for (int i = 0; i < m.item_count(); ++i) {
      const double s = model.score(u, i);
      EXPECT_GT(s, kMinRating - 1e-9);
      EXPECT_LT(s, kMaxRating + 1e-9);
    }
  }
  // The trust term matters: an empty graph leads elsewhere.
  TrustGraph empty = TrustGraph::empty(16);
  SocialMfRecommender without{hp};
  without.fit(TrainContext{&m, &empty, 3, 1});
  int moved = 0;
  for (int u = 0; u < m.user_count(); ++u) {
    if (model.score(u, 0) != without.score(u, 0)) ++moved;
  }
  EXPECT_GT(moved, 0);
}

TEST(Svdpp, TrainsAndImplicitHistoryMatters) {
  RatingMatrix m = testsupport::random_matrix(20, 15, 8, 83);
  SvdppOptions o;
  o.factors = 6;
  o.iterations = 20;
  o.learn_rate = 0.02;
  MfFit fit = fit_svdpp(m, o, 55);
  ASSERT_EQ(fit.trace.size(), 20u);
  EXPECT_LT(fit.trace.back(), fit.trace.front());
  // The implicit factors end up non-trivial.
  double magnitude = 0;
  for (double x : fit.state.implicit_factors.data) magnitude += std::abs(x);
  EXPECT_GT(magnitude, 0.0);
}

TEST(ListRank, ObjectiveDecreasesAndScoresRank) {
  RatingMatrix m = testsupport::random_matrix(20, 16, 8, 101);
  ListRankOptions o;
  o.factors = 6;
  o.iterations = 30;
  o.learn_rate = 0.3;
  ListRankFit fit = fit_listrank(m, o, 41);
  ASSERT_EQ(fit.trace.size(), 30u);
  EXPECT_LT(fit.trace[1], fit.trace[0]);
  EXPECT_LT(fit.trace.back(), fit.trace.front());
}

TEST(ListRank, DeterministicPerSeed) {
  RatingMatrix m = testsupport::random_matrix(10, 8, 5, 2);
  ListRankOptions o;
  o.iterations = 4;
  ListRankFit a = fit_listrank(m, o, 6);
  ListRankFit b = fit_listrank(m, o, 6);
  EXPECT_EQ(a.state.user_factors.data, b.state.user_factors.data);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(FactorModels, RecommenderWrappersValidateAndScore) {
  RatingMatrix m = testsupport::random_matrix(10, 9, 5, 13);
  TrustGraph g = random_trust(10, 4);
  Hyperparams hp;
  hp.set("factors", "4");
  hp.set("iterations", "6");

  BiasedMfRecommender mf{hp};
  mf.fit(TrainContext{&m, nullptr, 1, 1});
  const FactorState& s = mf.result().state;
  const double expect = s.global_mean + s.user_bias[2] + s.item_bias[3] +
                        dot(s.user_factors.row(2), s.item_factors.row(3), 4);
  EXPECT_DOUBLE_EQ(mf.score(2, 3), expect);

  SoRegRecommender soreg{hp};
  EXPECT_THROW(soreg.fit(TrainContext{&m, nullptr, 1, 1}), Error);  // needs trust
  soreg.fit(TrainContext{&m, &g, 1, 1});

  Hyperparams bad;
  bad.set("reg_implicit", "0.1");  // not a biasedmf key
  EXPECT_THROW(BiasedMfRecommender{bad}, ConfigError);
  Hyperparams negative;
  negative.set("learn_rate", "-1");
  EXPECT_THROW(BiasedMfRecommender{negative}, ConfigError);
  Hyperparams zero_factors;
  zero_factors.set("factors", "0");
  EXPECT_THROW(SvdppRecommender{zero_factors}, ConfigError);
}
