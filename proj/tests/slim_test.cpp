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
#include "recfair/models/slim.hpp"

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace recfair;

namespace {

// Independent solver for the same per-column problem: projected gradient
// on f(w) = 1/2 |a_i - A w|^2 + l2/2 |w|^2 + l1 sum(w), w >= 0, w_i = 0,
// written against the Gram form so it shares no code with the coordinate
// descent under test. With l2 > 0 the problem is strictly convex, so both
// solvers must land on the same objective value.
std::vector<double> pgd_column(const RatingMatrix& train, int target, double l1, double l2,
                               int iterations) {
  const int items = train.item_count();
  std::vector<std::vector<double>> gram(static_cast<std::size_t>(items),
                                        std::vector<double>(static_cast<std::size_t>(items), 0.0));
  for (int u = 0; u < train.user_count(); ++u) {
    const auto& row = train.user_row(u);
    for (const auto& [a, ra] : row) {
      for (const auto& [b, rb] : row) {
        gram[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += 1.0;
      }
    }
  }
  // Gershgorin bound on the Lipschitz constant of the smooth part.
  double lipschitz = l2;
  for (int k = 0; k < items; ++k) {
    double row_sum = 0;
    for (int j = 0; j < items; ++j) row_sum += gram[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    lipschitz = std::max(lipschitz, row_sum + l2);
  }
  const double step = 1.0 / lipschitz;
  std::vector<double> w(static_cast<std::size_t>(items), 0.0);
  for (int it = 0; it < iterations; ++it) {
    for (int k = 0; k < items; ++k) {
      if (k == target) continue;
      double gw = 0;
      for (int j = 0; j < items; ++j) {
        gw += gram[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(j)];
      }
      const double grad = gw - gram[static_cast<std::size_t>(k)][static_cast<std::size_t>(target)] +
                          l2 * w[static_cast<std::size_t>(k)] + l1;
      w[static_cast<std::size_t>(k)] = std::max(0.0, w[static_cast<std::size_t>(k)] - step * grad);
    }
  }
  w[static_cast<std::size_t>(target)] = 0.0;
  return w;
}

std::vector<double> dense_column(const SlimWeights& weights, int item, int items) {
  std::vector<double> w(static_cast<std::size_t>(items), 0.0);
  for (const auto& [j, v] : weights.column(item)) w[static_cast<std::size_t>(j)] = v;
  return w;
}

}  // namespace

TEST(Slim, CoordinateDescentMatchesProjectedGradientObjective) {
  RatingMatrix m = testsupport::random_matrix(14, 10, 5, 23);
  SlimOptions o;
  o.l1 = 0.3;
  o.l2 = 0.5;
  o.tolerance = 1e-10;  // tight, so the comparison tolerance is about optima
  o.max_sweeps = 10000;
  SlimWeights weights = fit_slim(m, o);
  for (int i = 0; i < m.item_count(); ++i) {
    const std::vector<double> cd = dense_column(weights, i, m.item_count());
    const std::vector<double> pg = pgd_column(m, i, o.l1, o.l2, 20000);
    const double f_cd = slim_column_objective(m, i, cd, o.l1, o.l2);
    const double f_pg = slim_column_objective(m, i, pg, o.l1, o.l2);
    EXPECT_NEAR(f_cd, f_pg, 1e-6) << "column " << i;
    EXPECT_LE(f_cd, f_pg + 1e-6) << "column " << i;
  }
}

TEST(Slim, WeightsAreNonnegativeWithZeroDiagonal) {
  RatingMatrix m = testsupport::random_matrix(20, 15, 6, 3);
  SlimWeights weights = fit_slim(m, SlimOptions{});
  for (int i = 0; i < m.item_count(); ++i) {
    for (const auto& [j, w] : weights.column(i)) {
      EXPECT_NE(j, i);
      EXPECT_GT(w, 0.0);
    }
  }
  EXPECT_GT(weights.nonzeros(), 0u);
}

TEST(Slim, UsesBinarizedFeedbackOnly) {
  RatingMatrix m = testsupport::random_matrix(12, 9, 4, 47);
  // Same sparsity pattern, every rating forced to a constant.
  std::vector<RatingEntry> flat;
  for (int u = 0; u < m.user_count(); ++u) {
    for (const auto& [i, r] : m.user_row(u)) flat.push_back({u, i, 4.0});
  }
  RatingMatrix constant(m.users_ptr(), m.items_ptr(), std::move(flat));
  SlimOptions o;
  SlimWeights a = fit_slim(m, o);
  SlimWeights b = fit_slim(constant, o);
  ASSERT_EQ(a.item_count(), b.item_count());
  for (int i = 0; i < a.item_count(); ++i) {
    EXPECT_EQ(a.column(i), b.column(i));
  }
}

TEST(Slim, ColumnsAreIndependentOfJobCount) {
  RatingMatrix m = testsupport::random_matrix(18, 14, 6, 9);
  SlimOptions o;
  SlimWeights serial = fit_slim(m, o, 1);
  SlimWeights parallel = fit_slim(m, o, 4);
  for (int i = 0; i < m.item_count(); ++i) {
    EXPECT_EQ(serial.column(i), parallel.column(i));
  }
}

TEST(Slim, RecommenderScoreAgreesWithBatchPath) {
  RatingMatrix m = testsupport::random_matrix(16, 12, 5, 77);
  Hyperparams hp;
  hp.set("l1", "0.05");
  hp.set("l2", "0.05");
  SlimRecommender model{hp};
  model.fit(TrainContext{&m, nullptr, 1, 1});
  for (int u = 0; u < m.user_count(); ++u) {
    std::vector<double> pointwise(static_cast<std::size_t>(m.item_count()));
    for (int i = 0; i < m.item_count(); ++i) {
      pointwise[static_cast<std::size_t>(i)] = model.score(u, i);
    }
    std::vector<double> batch;
    model.score_user(u, batch);
    EXPECT_EQ(batch, pointwise);  // bitwise: same accumulation order
  }
}

TEST(Slim, ScoreIsSumOfWeightsOverRatedItems) {
  RatingMatrix m = testsupport::random_matrix(10, 8, 4, 5);
  SlimOptions o;
  SlimWeights weights = fit_slim(m, o);
  Hyperparams hp;
  SlimRecommender model{hp};
  model.fit(TrainContext{&m, nullptr, 1, 1});
  for (int u = 0; u < m.user_count(); ++u) {
    for (int i = 0; i < m.item_count(); ++i) {
      double expect = 0;
      const std::vector<double> col = dense_column(weights, i, m.item_count());
      for (const auto& [j, r] : m.user_row(u)) expect += col[static_cast<std::size_t>(j)];
      EXPECT_NEAR(model.score(u, i), expect, 1e-12);
    }
  }
}

TEST(Slim, OptionValidation) {
  Hyperparams bad_l1;
  bad_l1.set("l1", "-0.5");
  EXPECT_THROW(SlimRecommender{bad_l1}, ConfigError);
  Hyperparams unknown;
  unknown.set("shrinkage", "4");
  EXPECT_THROW(SlimRecommender{unknown}, ConfigError);
  SlimOptions bad_sweeps;
  bad_sweeps.max_sweeps = 0;
  EXPECT_THROW(validate(bad_sweeps), ConfigError);
  SlimOptions bad_tol;
  bad_tol.tolerance = 0.0;
  EXPECT_THROW(validate(bad_tol), ConfigError);
}
