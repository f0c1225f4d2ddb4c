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

#include <cstdint>
#include <vector>

#include "recfair/recommender.hpp"
#include "recfair/rng.hpp"

namespace recfair {

// Uniform random scores from a counter-based stream: score(u, i) depends
// only on (seed, u, i), never on evaluation order, so runs reproduce
// exactly regardless of threading or which users get scored first.
class RandomRecommender : public Recommender {
 public:
  explicit RandomRecommender(Hyperparams params) : Recommender("random", std::move(params)) {
    this->params().check_keys({});
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    seed_ = mix64(ctx.seed, 0x72616e646f6dULL);  // offset the stream away from other consumers
  }

  double score(int user, int item) const override {
    return unit_from_bits(mix64(seed_, static_cast<std::uint64_t>(user),
                                static_cast<std::uint64_t>(item)));
  }

 private:
  std::uint64_t seed_ = 0;
};

// Ranks items by training interaction count; ties by item index. Scores
// are shared by all users, so lists differ only through the exclusion of
// already-rated items.
class MostPopularRecommender : public Recommender {
 public:
  explicit MostPopularRecommender(Hyperparams params)
      : Recommender("mostpopular", std::move(params)) {
    this->params().check_keys({});
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    counts_.assign(static_cast<std::size_t>(item_count_), 0.0);
    for (int i = 0; i < item_count_; ++i) {
      counts_[static_cast<std::size_t>(i)] = static_cast<double>(ctx.train->item_col(i).size());
    }
  }

  double score(int /*user*/, int item) const override {
    return counts_.at(static_cast<std::size_t>(item));
  }

 private:
  std::vector<double> counts_;
};

}  // namespace recfair
