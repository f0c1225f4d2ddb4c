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
#include <span>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/errors.hpp"
#include "recfair/util.hpp"

namespace recfair {

// Running moments over a co-rated support. Both the pairwise functions and
// the table builder accumulate these in ascending co-ordinate order, so the
// two paths produce bit-identical similarities.
struct PairMoments {
  int n = 0;
  double sum_a = 0, sum_b = 0;
  double sum_aa = 0, sum_bb = 0, sum_ab = 0;

  void add(double a, double b) {
    ++n;
    sum_a += a;
    sum_b += b;
    sum_aa += a * a;
    sum_bb += b * b;
    sum_ab += a * b;
  }
};

// Support damping n / (n + shrinkage): similarities backed by few co-rated
// points are pulled toward zero instead of trusted at full strength.
inline double support_damping(int n, double shrinkage) {
  return static_cast<double>(n) / (static_cast<double>(n) + shrinkage);
}

// Pearson correlation over the co-rated support, damped. Fewer than two
// co-rated points or zero variance on either side yields 0.
inline double pearson_from_moments(const PairMoments& m, double shrinkage) {
  if (m.n < 2) return 0.0;
  const double n = static_cast<double>(m.n);
  const double cov = m.sum_ab - m.sum_a * m.sum_b / n;
  const double var_a = m.sum_aa - m.sum_a * m.sum_a / n;
  const double var_b = m.sum_bb - m.sum_b * m.sum_b / n;
  if (var_a <= 0.0 || var_b <= 0.0) return 0.0;
  return support_damping(m.n, shrinkage) * cov / std::sqrt(var_a * var_b);
}

// Cosine over the co-rated support, damped. Empty support yields 0.
inline double cosine_from_moments(const PairMoments& m, double shrinkage) {
  if (m.n < 1) return 0.0;
  const double norm = std::sqrt(m.sum_aa) * std::sqrt(m.sum_bb);
  if (norm <= 0.0) return 0.0;
  return support_damping(m.n, shrinkage) * m.sum_ab / norm;
}

// Pairwise entry points: a and b are the two sides' ratings over the
// co-rated support, listed in the same (ascending) co-ordinate order.
inline double pearson(std::span<const double> a, std::span<const double> b, double shrinkage) {
  if (a.size() != b.size()) throw Error("pearson requires equal-length co-rated vectors");
  PairMoments m;
  for (std::size_t j = 0; j < a.size(); ++j) m.add(a[j], b[j]);
  return pearson_from_moments(m, shrinkage);
}

inline double cosine(std::span<const double> a, std::span<const double> b, double shrinkage) {
  if (a.size() != b.size()) throw Error("cosine requires equal-length co-rated vectors");
  PairMoments m;
  for (std::size_t j = 0; j < a.size(); ++j) m.add(a[j], b[j]);
  return cosine_from_moments(m, shrinkage);
}

enum class SimilarityKind { pearson, cosine };

inline SimilarityKind similarity_kind_from_name(const std::string& name) {
  if (name == "pearson" || name == "pcc") return SimilarityKind::pearson;
  if (name == "cosine" || name == "cos") return SimilarityKind::cosine;
  throw ConfigError("unknown similarity '" + name + "' (expected pearson or cosine)");
}

struct Neighbor {
  int index = 0;
  double weight = 0;
};

// Per-anchor top-k positive-similarity neighbor lists, ordered by weight
// descending then index ascending.
class SimilarityTable {
 public:
  explicit SimilarityTable(std::vector<std::vector<Neighbor>> rows) : rows_(std::move(rows)) {}

  int size() const { return static_cast<int>(rows_.size()); }

  const std::vector<Neighbor>& neighbors(int anchor) const {
    return rows_.at(static_cast<std::size_t>(anchor));
  }

 private:
  std::vector<std::vector<Neighbor>> rows_;
};

namespace detail {

// Shared builder over either orientation. `count` anchors; `anchor_list(a)`
// enumerates the anchor's profile; `cross_list(x)` enumerates, for profile
// co-ordinate x, the other axis' entries touching x. Co-ordinates arrive in
// ascending order on both levels, which fixes the accumulation order.
template <class AnchorList, class CrossList>
SimilarityTable build_similarity_table(int count, int k, SimilarityKind kind, double shrinkage,
                                       AnchorList&& anchor_list, CrossList&& cross_list) {
  if (k <= 0) throw ConfigError("neighborhood size must be positive");
  if (shrinkage < 0) throw ConfigError("shrinkage must be non-negative");
  std::vector<std::vector<Neighbor>> rows(static_cast<std::size_t>(count));
  std::vector<PairMoments> stats(static_cast<std::size_t>(count));
  std::vector<int> touched;
  for (int a = 0; a < count; ++a) {
    touched.clear();
    for (const auto& [x, value_a] : anchor_list(a)) {
      for (const auto& [other, value_b] : cross_list(x)) {
        if (other == a) continue;
        PairMoments& m = stats[static_cast<std::size_t>(other)];
        if (m.n == 0) touched.push_back(other);
        m.add(value_a, value_b);
      }
    }
    std::vector<Neighbor>& mine = rows[static_cast<std::size_t>(a)];
    for (int other : touched) {
      PairMoments& m = stats[static_cast<std::size_t>(other)];
      const double w = kind == SimilarityKind::pearson ? pearson_from_moments(m, shrinkage)
                                                       : cosine_from_moments(m, shrinkage);
      if (w > 0.0) mine.push_back({other, w});
      m = PairMoments{};
    }
    auto stronger = [](const Neighbor& x, const Neighbor& y) {
      if (x.weight != y.weight) return x.weight > y.weight;
      return x.index < y.index;
    };
    if (static_cast<int>(mine.size()) > k) {
      std::partial_sort(mine.begin(), mine.begin() + k, mine.end(), stronger);
      mine.resize(static_cast<std::size_t>(k));
    } else {
      std::sort(mine.begin(), mine.end(), stronger);
    }
    mine.shrink_to_fit();
  }
  return SimilarityTable(std::move(rows));
}

}  // namespace detail

// User-user table: co-rated support runs over items both users rated.
inline SimilarityTable user_similarity_table(const RatingMatrix& train, int k, SimilarityKind kind,
                                             double shrinkage) {
  return detail::build_similarity_table(
      train.user_count(), k, kind, shrinkage,
      [&](int u) -> const std::vector<std::pair<int, double>>& { return train.user_row(u); },
      [&](int i) -> const std::vector<std::pair<int, double>>& { return train.item_col(i); });
}

// Item-item table: co-rated support runs over users who rated both items.
inline SimilarityTable item_similarity_table(const RatingMatrix& train, int k, SimilarityKind kind,
                                             double shrinkage) {
  return detail::build_similarity_table(
      train.item_count(), k, kind, shrinkage,
      [&](int i) -> const std::vector<std::pair<int, double>>& { return train.item_col(i); },
      [&](int u) -> const std::vector<std::pair<int, double>>& { return train.user_row(u); });
}

}  // namespace recfair
