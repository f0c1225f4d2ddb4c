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
#include "recfair/metrics.hpp"

#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace recfair;

namespace {

RatingMatrix matrix_from(int users, int items, const std::vector<RatingEntry>& entries) {
  auto user_index = std::make_shared<IdIndex>();
  auto item_index = std::make_shared<IdIndex>();
  for (int u = 0; u < users; ++u) user_index->intern("u" + std::to_string(u));
  for (int i = 0; i < items; ++i) item_index->intern("i" + std::to_string(i));
  return RatingMatrix(user_index, item_index, std::vector<RatingEntry>(entries));
}

RecommendationSet recs_from(int list_size, int users,
                            const std::vector<std::vector<int>>& lists) {
  RecommendationSet recs(list_size, users);
  for (int u = 0; u < users; ++u) {
    std::vector<ScoredItem> scored;
    double score = 1.0;
    for (int item : lists.at(static_cast<std::size_t>(u))) {
      scored.push_back({item, score});
      score -= 0.01;
    }
    recs.set_list(u, std::move(scored));
  }
  return recs;
}

// Plain nested-loop recount of group interactions, written without reusing
// any library accumulation logic.
GroupCategoryCounts count_oracle(const std::vector<int>& members,
                                 const std::vector<std::vector<int>>& items_by_user,
                                 const CategoryMap& categories) {
  GroupCategoryCounts counts;
  counts.per_category.assign(static_cast<std::size_t>(categories.category_count()), 0);
  for (int u : members) {
    for (int item : items_by_user.at(static_cast<std::size_t>(u))) {
      counts.total += 1;
      for (int c = 0; c < categories.category_count(); ++c) {
        const auto& of_item = categories.item_categories(item);
        if (std::find(of_item.begin(), of_item.end(), c) != of_item.end()) {
          counts.per_category[static_cast<std::size_t>(c)] += 1;
        }
      }
    }
  }
  return counts;
}

}  // namespace

// Worked example, two groups and two categories over a four-item catalog:
// items {0,1} in A, {2,3} in B, so each category holds half the catalog.
// Group G = {u0, u1} rates 0,1,2 and 0,2: five interactions, three in A.
//   PR(G, A) = 3/5, bias = (3/5) / (1/2) = 1.2.
// Its lists are [0,1] and [1,3]: four slots, three in A.
//   PR_rec = 3/4,  bias_rec = 1.5,  disparity = (1.5 - 1.2) / 1.2 = 0.25.
TEST(BiasDisparity, WorkedExample) {
  CategoryMap categories(4, {{0}, {0}, {1}, {1}}, {"A", "B"});
  RatingMatrix train = matrix_from(2, 4,
                                   {{0, 0, 5}, {0, 1, 4}, {0, 2, 3}, {1, 0, 2}, {1, 2, 5}});
  RecommendationSet recs = recs_from(2, 2, {{0, 1}, {1, 3}});
  const std::vector<int> group = {0, 1};

  BinaryView view(train);
  GroupCategoryCounts train_counts = interaction_counts(group, view, categories);
  GroupCategoryCounts rec_counts = interaction_counts(group, recs, categories);
  EXPECT_EQ(train_counts.total, 5);
  EXPECT_EQ(train_counts.per_category[0], 3);
  EXPECT_EQ(rec_counts.total, 4);
  EXPECT_EQ(rec_counts.per_category[0], 3);

  const double share = category_fraction(categories, 0, 4);
  EXPECT_DOUBLE_EQ(share, 0.5);
  auto pr_train = preference_ratio(train_counts, 0);
  auto pr_rec = preference_ratio(rec_counts, 0);
  ASSERT_TRUE(pr_train && pr_rec);
  EXPECT_NEAR(*pr_train, 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(*pr_rec, 0.75);

  auto bt = bias_value(pr_train, share);
  auto br = bias_value(pr_rec, share);
  ASSERT_TRUE(bt && br);
  EXPECT_NEAR(*bt, 1.2, 1e-15);
  EXPECT_DOUBLE_EQ(*br, 1.5);

  auto bd = bias_disparity(bt, br);
  ASSERT_TRUE(bd);
  EXPECT_NEAR(*bd, 0.25, 1e-12);
}

TEST(BiasDisparity, ProportionPreservingListsScoreZero) {
  CategoryMap categories(6, {{0}, {0}, {0}, {1}, {1}, {1}}, {"A", "B"});
  // One user: half of the profile in each category, lists likewise.
  RatingMatrix train = matrix_from(1, 6, {{0, 0, 4}, {0, 3, 4}});
  RecommendationSet recs = recs_from(2, 1, {{1, 4}});
  BinaryView view(train);
  GroupCategoryCounts t = interaction_counts({0}, view, categories);
  GroupCategoryCounts r = interaction_counts({0}, recs, categories);
  const double share = category_fraction(categories, 0, 6);
  for (int c : {0, 1}) {
    auto bd = bias_disparity(bias_value(preference_ratio(t, c), share),
                             bias_value(preference_ratio(r, c), share));
    ASSERT_TRUE(bd.has_value());
    EXPECT_DOUBLE_EQ(*bd, 0.0);
  }
}

TEST(BiasDisparity, UndefinedCasesPropagate) {
  CategoryMap categories(3, {{0}, {0}, {}}, {"A"});
  // Empty member list: no interactions at all.
  RatingMatrix train = matrix_from(2, 3, {{0, 0, 3}});
  BinaryView view(train);
  GroupCategoryCounts none = interaction_counts({1}, view, categories);
  EXPECT_EQ(none.total, 0);
  EXPECT_FALSE(preference_ratio(none, 0).has_value());
  EXPECT_FALSE(bias_value(preference_ratio(none, 0), 0.5).has_value());
  EXPECT_FALSE(bias_disparity(std::nullopt, 1.0).has_value());
  EXPECT_FALSE(bias_disparity(1.0, std::nullopt).has_value());
  // Zero training bias: relative change is undefined, not infinite.
  EXPECT_FALSE(bias_disparity(0.0, 1.3).has_value());
  // Degenerate inputs are hard errors, not values.
  EXPECT_THROW(bias_value(0.4, 0.0), Error);
  EXPECT_THROW(category_fraction(categories, 2, 3), Error);
  EXPECT_THROW(preference_ratio(none, 5), Error);
}

TEST(Counts, MultiCategoryItemsCountOncePerCategory) {
  CategoryMap categories(2, {{0, 1}, {1}}, {"A", "B"});
  RatingMatrix train = matrix_from(1, 2, {{0, 0, 5}});
  BinaryView view(train);
  GroupCategoryCounts counts = interaction_counts({0}, view, categories);
  EXPECT_EQ(counts.total, 1);
  EXPECT_EQ(counts.per_category[0], 1);
  EXPECT_EQ(counts.per_category[1], 1);
  // Ratios per category can therefore sum above one.
  EXPECT_DOUBLE_EQ(*preference_ratio(counts, 0) + *preference_ratio(counts, 1), 2.0);
}

TEST(Counts, MatchNestedLoopOracleOnRandomData) {
  Rng rng(404);
  RatingMatrix train = testsupport::random_matrix(25, 18, 6, 12);
  std::vector<std::vector<int>> cats_of_item(18);
  for (auto& cats : cats_of_item) {
    const int k = static_cast<int>(rng.below(3));  // 0, 1, or 2 categories
    for (int j = 0; j < k; ++j) cats.push_back(static_cast<int>(rng.below(4)));
  }
  CategoryMap categories(18, cats_of_item, {"a", "b", "c", "d"});
  std::vector<int> members;
  for (int u = 0; u < 25; ++u) {
    if (rng.below(2) == 0) members.push_back(u);
  }

  std::vector<std::vector<int>> train_items(25);
  for (int u = 0; u < 25; ++u) {
    for (const auto& [i, r] : train.user_row(u)) train_items[static_cast<std::size_t>(u)].push_back(i);
  }
  BinaryView view(train);
  GroupCategoryCounts got = interaction_counts(members, view, categories);
  GroupCategoryCounts want = count_oracle(members, train_items, categories);
  EXPECT_EQ(got.total, want.total);
  EXPECT_EQ(got.per_category, want.per_category);

  std::vector<std::vector<int>> lists(25);
  for (auto& list : lists) {
    std::vector<int> all(18);
    for (int i = 0; i < 18; ++i) all[static_cast<std::size_t>(i)] = i;
    rng.shuffle(all);
    list.assign(all.begin(), all.begin() + 5);
  }
  RecommendationSet recs = recs_from(5, 25, lists);
  GroupCategoryCounts got_rec = interaction_counts(members, recs, categories);
  GroupCategoryCounts want_rec = count_oracle(members, lists, categories);
  EXPECT_EQ(got_rec.total, want_rec.total);
  EXPECT_EQ(got_rec.per_category, want_rec.per_category);
}

TEST(AverageDisparity, HandExampleOnRawCounts) {
  // Two categories. Unprotected shift: A +3, B -1. Protected shift: A -1, B +1.
  // Gaps |shift_u - shift_p|: A 4, B 2. Mean 3.
  GroupCategoryCounts tu{{5, 5}, 10}, ru{{8, 4}, 12};
  GroupCategoryCounts tp{{4, 2}, 6}, rp{{3, 3}, 6};
  EXPECT_DOUBLE_EQ(average_disparity(tu, ru, tp, rp), 3.0);
  // Normalized variant works in ratios: shifts u (8/12-5/10, 4/12-5/10),
  // p (3/6-4/6, 3/6-2/6); gaps |1/6+1/6| and |-1/6-1/6| -> mean 1/3.
  EXPECT_NEAR(average_disparity_normalized(tu, ru, tp, rp), 1.0 / 3.0, 1e-15);
  GroupCategoryCounts short_table{{1}, 1};
  EXPECT_THROW(average_disparity(tu, ru, tp, short_table), Error);
}

TEST(AverageDisparity, ZeroWhenBothGroupsShiftIdentically) {
  GroupCategoryCounts tu{{5, 3}, 8}, ru{{7, 4}, 11};
  GroupCategoryCounts tp{{2, 6}, 8}, rp{{4, 7}, 11};
  EXPECT_DOUBLE_EQ(average_disparity(tu, ru, tp, rp), 0.0);
}

TEST(Coverage, CountsDistinctRecommendedItems) {
  RecommendationSet recs = recs_from(2, 3, {{0, 1}, {1, 2}, {2, 0}});
  EXPECT_DOUBLE_EQ(item_coverage(recs, 10), 30.0);
  EXPECT_DOUBLE_EQ(item_coverage(recs, 3), 100.0);
  EXPECT_THROW(item_coverage(recs, 0), Error);
}

TEST(Coverage, MatchesSetOracleOnRandomLists) {
  Rng rng(11);
  const int users = 40, items = 30, n = 6;
  std::vector<std::vector<int>> lists(users);
  std::set<int> oracle;
  for (auto& list : lists) {
    std::vector<int> all(items);
    for (int i = 0; i < items; ++i) all[static_cast<std::size_t>(i)] = i;
    rng.shuffle(all);
    list.assign(all.begin(), all.begin() + n);
    oracle.insert(list.begin(), list.end());
  }
  RecommendationSet recs = recs_from(n, users, lists);
  EXPECT_DOUBLE_EQ(item_coverage(recs, items),
                   100.0 * static_cast<double>(oracle.size()) / items);
}

TEST(Ndcg, HandComputedCases) {
  // Single relevant item at rank 2 (0-based 1): DCG = 1/log2(3), IDCG = 1.
  RecommendationSet recs = recs_from(3, 1, {{7, 5, 9}});
  EXPECT_NEAR(ndcg_at_k(recs, {{5}}, 3), 1.0 / std::log2(3.0), 1e-15);
  // Perfect ranking of two held-out items.
  RecommendationSet perfect = recs_from(3, 1, {{4, 6, 1}});
  EXPECT_DOUBLE_EQ(ndcg_at_k(perfect, {{4, 6}}, 3), 1.0);
  // Nothing relevant anywhere.
  EXPECT_DOUBLE_EQ(ndcg_at_k(recs, {{0}}, 3), 0.0);
  // Users whose held-out set is empty are skipped, not averaged as zero.
  RecommendationSet two = recs_from(2, 2, {{4, 6}, {3, 2}});
  EXPECT_DOUBLE_EQ(ndcg_at_k(two, {{4, 6}, {}}, 2), 1.0);
  // All users empty: defined as zero.
  EXPECT_DOUBLE_EQ(ndcg_at_k(two, {{}, {}}, 2), 0.0);
  // Ideal gain is clipped at the held-out size, so recommending every
  // held-out item within the list yields exactly one.
  RecommendationSet deep = recs_from(3, 1, {{8, 2, 5}});
  EXPECT_DOUBLE_EQ(ndcg_at_k(deep, {{2, 8}}, 10), 1.0);
  EXPECT_THROW(ndcg_at_k(deep, {{2}}, 0), Error);
}

TEST(Ndcg, MatchesIndependentOracleOnRandomLists) {
  Rng rng(77);
  const int users = 30, items = 25, n = 8, k = 8;
  std::vector<std::vector<int>> lists(users);
  std::vector<std::vector<int>> held(users);
  for (int u = 0; u < users; ++u) {
    std::vector<int> all(items);
    for (int i = 0; i < items; ++i) all[static_cast<std::size_t>(i)] = i;
    rng.shuffle(all);
    lists[static_cast<std::size_t>(u)].assign(all.begin(), all.begin() + n);
    rng.shuffle(all);
    const int h = static_cast<int>(rng.below(5));  // 0..4 held-out items
    held[static_cast<std::size_t>(u)].assign(all.begin(), all.begin() + h);
    std::sort(held[static_cast<std::size_t>(u)].begin(), held[static_cast<std::size_t>(u)].end());
  }
  RecommendationSet recs = recs_from(n, users, lists);

  double sum = 0;
  int counted = 0;
  for (int u = 0; u < users; ++u) {
    const auto& hu = held[static_cast<std::size_t>(u)];
    if (hu.empty()) continue;
    double dcg = 0;
    for (int pos = 0; pos < std::min(k, n); ++pos) {
      const int item = lists[static_cast<std::size_t>(u)][static_cast<std::size_t>(pos)];
      if (std::find(hu.begin(), hu.end(), item) != hu.end()) {
        dcg += 1.0 / std::log2(pos + 2.0);
      }
    }
    double idcg = 0;
    for (int pos = 0; pos < std::min<int>(k, static_cast<int>(hu.size())); ++pos) {
      idcg += 1.0 / std::log2(pos + 2.0);
    }
    sum += dcg / idcg;
    ++counted;
  }
  ASSERT_GT(counted, 0);
  EXPECT_NEAR(ndcg_at_k(recs, held, k), sum / counted, 1e-15);
}

TEST(EvaluateRun, WiresEveryMetricConsistently) {
  RatingMatrix train = testsupport::random_matrix(20, 16, 6, 99);
  CategoryMap categories(16,
                         {{0}, {0}, {0}, {0}, {0}, {0}, {1}, {1}, {1}, {1}, {1}, {2}, {2}, {2},
                          {2}, {}},
                         {"a", "b", "c"});
  std::vector<int> group_of(20, 0);
  for (int u = 10; u < 20; ++u) group_of[static_cast<std::size_t>(u)] = 1;
  group_of[5] = -1;  // one unlabeled user
  GroupAssignment groups(group_of, {"big", "small"}, 1, 0);

  Rng rng(31);
  std::vector<std::vector<int>> lists(20);
  std::vector<std::vector<int>> held(20);
  for (int u = 0; u < 20; ++u) {
    std::vector<int> all(16);
    for (int i = 0; i < 16; ++i) all[static_cast<std::size_t>(i)] = i;
    rng.shuffle(all);
    lists[static_cast<std::size_t>(u)].assign(all.begin(), all.begin() + 4);
    held[static_cast<std::size_t>(u)] = {static_cast<int>(rng.below(16))};
    std::sort(held[static_cast<std::size_t>(u)].begin(), held[static_cast<std::size_t>(u)].end());
  }
  RecommendationSet recs = recs_from(4, 20, lists);

  RunMetrics run = evaluate_run(train, groups, categories, recs, held);
  EXPECT_DOUBLE_EQ(run.ndcg, ndcg_at_k(recs, held, 4));
  EXPECT_DOUBLE_EQ(run.coverage, item_coverage(recs, 16));

  BinaryView view(train);
  GroupCategoryCounts tu = interaction_counts(groups.members(0), view, categories);
  GroupCategoryCounts ru = interaction_counts(groups.members(0), recs, categories);
  GroupCategoryCounts tp = interaction_counts(groups.members(1), view, categories);
  GroupCategoryCounts rp = interaction_counts(groups.members(1), recs, categories);
  EXPECT_DOUBLE_EQ(run.disparity, average_disparity(tu, ru, tp, rp));
  EXPECT_DOUBLE_EQ(run.disparity_normalized,
                   average_disparity_normalized(tu, ru, tp, rp));

  ASSERT_EQ(run.group_category.size(), 6u);  // two groups x three categories
  for (const GroupCategoryStat& stat : run.group_category) {
    const GroupCategoryCounts& t = (stat.group == 0) ? tu : tp;
    const GroupCategoryCounts& r = (stat.group == 0) ? ru : rp;
    const double share = category_fraction(categories, stat.category, 16);
    EXPECT_EQ(stat.pr_train, preference_ratio(t, stat.category));
    EXPECT_EQ(stat.pr_rec, preference_ratio(r, stat.category));
    EXPECT_EQ(stat.bias_train, bias_value(stat.pr_train, share));
    EXPECT_EQ(stat.bias_rec, bias_value(stat.pr_rec, share));
  }
  // Unprotected listed first, then protected, categories in order.
  EXPECT_EQ(run.group_category[0].group, groups.unprotected_group());
  EXPECT_EQ(run.group_category[0].category, 0);
  EXPECT_EQ(run.group_category[3].group, groups.protected_group());
}
