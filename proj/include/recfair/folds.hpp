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
#include <cstdint>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/errors.hpp"
#include "recfair/rng.hpp"

namespace recfair {

// Per-user stratified k-fold split over rating entries. Each user's
// interactions are spread across folds so every fold's test set samples
// every (eligible) user. Users with fewer than k ratings contribute no
// test entries: all their ratings stay in training everywhere.
class FoldSplit {
 public:
  FoldSplit(int folds, std::vector<std::vector<std::uint32_t>> test_positions)
      : test_(std::move(test_positions)) {
    if (folds < 2) throw Error("fold count must be at least 2");
    if (static_cast<int>(test_.size()) != folds) throw Error("fold bucket count mismatch");
    for (auto& bucket : test_) std::sort(bucket.begin(), bucket.end());
  }

  int fold_count() const { return static_cast<int>(test_.size()); }

  // Positions into RatingMatrix::entries(), sorted ascending.
  const std::vector<std::uint32_t>& test_positions(int fold) const {
    return test_.at(static_cast<std::size_t>(fold));
  }

 private:
  std::vector<std::vector<std::uint32_t>> test_;
};

inline FoldSplit kfold_split(const RatingMatrix& ratings, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error("fold count must be at least 2");
  std::vector<std::vector<std::uint32_t>> positions_by_user(
      static_cast<std::size_t>(ratings.user_count()));
  const auto& entries = ratings.entries();
  for (std::size_t pos = 0; pos < entries.size(); ++pos) {
    positions_by_user[static_cast<std::size_t>(entries[pos].user)].push_back(
        static_cast<std::uint32_t>(pos));
  }
  std::vector<std::vector<std::uint32_t>> test(static_cast<std::size_t>(folds));
  for (int u = 0; u < ratings.user_count(); ++u) {
    auto& mine = positions_by_user[static_cast<std::size_t>(u)];
    if (static_cast<int>(mine.size()) < folds) continue;  // too sparse: keep in train
    Rng rng(mix64(seed, 0x666f6c64ULL, static_cast<std::uint64_t>(u)));
    rng.shuffle(mine);
    // Round-robin from a random offset so remainders don't pile onto fold 0.
    const int offset = static_cast<int>(rng.below(static_cast<std::uint64_t>(folds)));
    for (std::size_t j = 0; j < mine.size(); ++j) {
      int fold = static_cast<int>((j + static_cast<std::size_t>(offset)) % static_cast<std::size_t>(folds));
      test[static_cast<std::size_t>(fold)].push_back(mine[j]);
    }
  }
  return FoldSplit(folds, std::move(test));
}

// Training matrix for one fold: everything except that fold's test entries.
inline RatingMatrix train_matrix(const RatingMatrix& ratings, const FoldSplit& split, int fold) {
  return ratings.without_entries(split.test_positions(fold));
}

// Held-out items per user for one fold, each list sorted ascending.
inline std::vector<std::vector<int>> test_items_by_user(const RatingMatrix& ratings,
                                                        const FoldSplit& split, int fold) {
  std::vector<std::vector<int>> held(static_cast<std::size_t>(ratings.user_count()));
  for (std::uint32_t pos : split.test_positions(fold)) {
    const RatingEntry& e = ratings.entries().at(pos);
    held[static_cast<std::size_t>(e.user)].push_back(e.item);
  }
  for (auto& list : held) std::sort(list.begin(), list.end());
  return held;
}

}  // namespace recfair
