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
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/errors.hpp"
#include "recfair/recommender.hpp"

namespace recfair {

// Share of the catalog that belongs to a category.
inline double category_fraction(const CategoryMap& categories, int category, int item_count) {
  if (category < 0 || category >= categories.category_count()) {
    throw Error("category index out of range");
  }
  if (item_count <= 0) throw Error("item count must be positive");
  return static_cast<double>(categories.category_items(category).size()) /
         static_cast<double>(item_count);
}

// Interaction counts of one user group: per category and in total. The
// total runs over all interactions; items in several categories count once
// toward each, so per-category numerators may overlap.
struct GroupCategoryCounts {
  std::vector<std::int64_t> per_category;
  std::int64_t total = 0;
};

inline GroupCategoryCounts interaction_counts(const std::vector<int>& members,
                                              const BinaryView& train,
                                              const CategoryMap& categories) {
  GroupCategoryCounts counts;
  counts.per_category.assign(static_cast<std::size_t>(categories.category_count()), 0);
  for (int u : members) {
    for (const auto& [item, value] : train.user_row(u)) {
      ++counts.total;
      for (int c : categories.item_categories(item)) {
        ++counts.per_category[static_cast<std::size_t>(c)];
      }
    }
  }
  return counts;
}

inline GroupCategoryCounts interaction_counts(const std::vector<int>& members,
                                              const RecommendationSet& recs,
                                              const CategoryMap& categories) {
  GroupCategoryCounts counts;
  counts.per_category.assign(static_cast<std::size_t>(categories.category_count()), 0);
  for (int u : members) {
    for (const ScoredItem& s : recs.list(u)) {
      ++counts.total;
      for (int c : categories.item_categories(s.item)) {
        ++counts.per_category[static_cast<std::size_t>(c)];
      }
    }
  }
  return counts;
}

// Preference ratio of a group for a category: the fraction of the group's
// interactions that fall in the category. Undefined when the group has no
// interactions at all.
inline std::optional<double> preference_ratio(const GroupCategoryCounts& counts, int category) {
  if (category < 0 || category >= static_cast<int>(counts.per_category.size())) {
    throw Error("category index out of range");
  }
  if (counts.total == 0) return std::nullopt;
  return static_cast<double>(counts.per_category[static_cast<std::size_t>(category)]) /
         static_cast<double>(counts.total);
}

// Bias of a preference ratio against the category's catalog share: above 1
// means over-represented relative to a uniform catalog draw.
inline std::optional<double> bias_value(std::optional<double> pr, double category_share) {
  if (category_share <= 0) throw Error("bias undefined for an empty category");
  if (!pr) return std::nullopt;
  return *pr / category_share;
}

// Relative change of bias from the input data to the recommendations:
// (B_R - B_T) / B_T. Undefined when either side is undefined or B_T is 0.
inline std::optional<double> bias_disparity(std::optional<double> bias_train,
                                            std::optional<double> bias_rec) {
  if (!bias_train || !bias_rec) return std::nullopt;
  if (*bias_train == 0) return std::nullopt;
  return (*bias_rec - *bias_train) / *bias_train;
}

// Mean absolute gap, over all categories, between how much the
// recommender shifted the unprotected group's category incidence and how
// much it shifted the protected group's. Counts are raw interaction
// incidences; the normalized variant uses preference ratios instead, so
// group sizes and list lengths cancel.
inline double average_disparity(const GroupCategoryCounts& train_unprotected,
                                const GroupCategoryCounts& rec_unprotected,
                                const GroupCategoryCounts& train_protected,
                                const GroupCategoryCounts& rec_protected) {
  const std::size_t categories = train_unprotected.per_category.size();
  if (rec_unprotected.per_category.size() != categories ||
      train_protected.per_category.size() != categories ||
      rec_protected.per_category.size() != categories) {
    throw Error("category spaces differ between count tables");
  }
  if (categories == 0) throw Error("average disparity undefined without categories");
  double sum = 0;
  for (std::size_t c = 0; c < categories; ++c) {
    const double shift_u =
        static_cast<double>(rec_unprotected.per_category[c] - train_unprotected.per_category[c]);
    const double shift_p =
        static_cast<double>(rec_protected.per_category[c] - train_protected.per_category[c]);
    sum += std::abs(shift_u - shift_p);
  }
  return sum / static_cast<double>(categories);
}

inline double average_disparity_normalized(const GroupCategoryCounts& train_unprotected,
                                           const GroupCategoryCounts& rec_unprotected,
                                           const GroupCategoryCounts& train_protected,
                                           const GroupCategoryCounts& rec_protected) {
  const std::size_t categories = train_unprotected.per_category.size();
  if (rec_unprotected.per_category.size() != categories ||
      train_protected.per_category.size() != categories ||
      rec_protected.per_category.size() != categories) {
    throw Error("category spaces differ between count tables");
  }
  if (categories == 0) throw Error("average disparity undefined without categories");
  auto ratio = [](const GroupCategoryCounts& counts, std::size_t c) {
    return counts.total == 0 ? 0.0
                             : static_cast<double>(counts.per_category[c]) /
                                   static_cast<double>(counts.total);
  };
  double sum = 0;
  for (std::size_t c = 0; c < categories; ++c) {
    const double shift_u = ratio(rec_unprotected, c) - ratio(train_unprotected, c);
    const double shift_p = ratio(rec_protected, c) - ratio(train_protected, c);
    sum += std::abs(shift_u - shift_p);
  }
  return sum / static_cast<double>(categories);
}

// Percentage of the catalog that shows up in at least one list.
inline double item_coverage(const RecommendationSet& recs, int item_count) {
  if (item_count <= 0) throw Error("item count must be positive");
  std::vector<char> seen(static_cast<std::size_t>(item_count), 0);
  for (int u = 0; u < recs.user_count(); ++u) {
    for (const ScoredItem& s : recs.list(u)) {
      seen.at(static_cast<std::size_t>(s.item)) = 1;
    }
  }
  std::size_t distinct = 0;
  for (char c : seen) distinct += static_cast<std::size_t>(c);
  return 100.0 * static_cast<double>(distinct) / static_cast<double>(item_count);
}

// Normalized discounted cumulative gain at k with binary relevance: a
// recommended item is relevant iff the user held it out. The ideal gain
// uses min(k, held-out size) slots. Users with nothing held out are
// skipped; the result is the mean over the rest.
inline double ndcg_at_k(const RecommendationSet& recs,
                        const std::vector<std::vector<int>>& test_items_by_user, int k) {
  if (k <= 0) throw Error("ndcg cutoff must be positive");
  double sum = 0;
  std::size_t counted = 0;
  for (int u = 0; u < recs.user_count(); ++u) {
    const auto& held = test_items_by_user.at(static_cast<std::size_t>(u));
    if (held.empty()) continue;
    const auto& list = recs.list(u);
    const int depth = std::min<int>(k, static_cast<int>(list.size()));
    double dcg = 0;
    for (int pos = 0; pos < depth; ++pos) {
      if (std::binary_search(held.begin(), held.end(), list[static_cast<std::size_t>(pos)].item)) {
        dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
      }
    }
    const int ideal = std::min<int>(k, static_cast<int>(held.size()));
    double idcg = 0;
    for (int pos = 0; pos < ideal; ++pos) {
      idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
    }
    sum += dcg / idcg;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

// Per (group, category) view of one evaluated run.
struct GroupCategoryStat {
  int group = 0;
  int category = 0;
  std::optional<double> pr_train, pr_rec;
  std::optional<double> bias_train, bias_rec;
};

struct RunMetrics {
  double ndcg = 0;
  double coverage = 0;
  double disparity = 0;
  double disparity_normalized = 0;
  std::vector<GroupCategoryStat> group_category;
};

// All per-run metrics for one trained model on one fold.
inline RunMetrics evaluate_run(const RatingMatrix& train_fold, const GroupAssignment& groups,
                               const CategoryMap& categories, const RecommendationSet& recs,
                               const std::vector<std::vector<int>>& test_items) {
  const int item_count = train_fold.item_count();
  BinaryView train_view(train_fold);
  RunMetrics out;
  out.ndcg = ndcg_at_k(recs, test_items, recs.list_size());
  out.coverage = item_coverage(recs, item_count);

  const int gp = groups.protected_group();
  const int gu = groups.unprotected_group();
  GroupCategoryCounts train_u = interaction_counts(groups.members(gu), train_view, categories);
  GroupCategoryCounts rec_u = interaction_counts(groups.members(gu), recs, categories);
  GroupCategoryCounts train_p = interaction_counts(groups.members(gp), train_view, categories);
  GroupCategoryCounts rec_p = interaction_counts(groups.members(gp), recs, categories);
  out.disparity = average_disparity(train_u, rec_u, train_p, rec_p);
  out.disparity_normalized = average_disparity_normalized(train_u, rec_u, train_p, rec_p);

  for (int g : {gu, gp}) {
    const GroupCategoryCounts& train_counts = (g == gu) ? train_u : train_p;
    const GroupCategoryCounts& rec_counts = (g == gu) ? rec_u : rec_p;
    for (int c = 0; c < categories.category_count(); ++c) {
      GroupCategoryStat stat;
      stat.group = g;
      stat.category = c;
      stat.pr_train = preference_ratio(train_counts, c);
      stat.pr_rec = preference_ratio(rec_counts, c);
      const double share = category_fraction(categories, c, item_count);
      if (share > 0) {
        stat.bias_train = bias_value(stat.pr_train, share);
        stat.bias_rec = bias_value(stat.pr_rec, share);
      }
      out.group_category.push_back(stat);
    }
  }
  return out;
}

}  // namespace recfair
