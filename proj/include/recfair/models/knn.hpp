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
#include <vector>

#include "recfair/models/similarity.hpp"
#include "recfair/recommender.hpp"

namespace recfair {

// Score assigned when no neighbor can weigh in: the user's mean minus a
// fixed offset. Far below any reachable rating, so unsupported items sink
// to the bottom in a deterministic (index-tie-broken) order while lists
// stay full-length.
constexpr double kUnsupportedOffset = 100.0;

namespace detail {

struct KnnParams {
  int neighbors = 50;
  double shrinkage = 10;
  SimilarityKind kind = SimilarityKind::pearson;
};

inline KnnParams knn_params(const Hyperparams& hp) {
  hp.check_keys({"neighbors", "shrinkage", "similarity"});
  KnnParams p;
  p.neighbors = hp.integer("neighbors", p.neighbors);
  p.shrinkage = hp.number("shrinkage", p.shrinkage);
  p.kind = similarity_kind_from_name(hp.text("similarity", "pearson"));
  if (p.neighbors <= 0) throw ConfigError("neighbors must be positive");
  if (p.shrinkage < 0) throw ConfigError("shrinkage must be non-negative");
  return p;
}

}  // namespace detail

// Mean-centered user-based neighborhood model:
//   score(u, i) = mean(u) + sum_v w(u,v) (r(v,i) - mean(v)) / sum_v w(u,v)
// over the stored neighbors of u who rated i.
class UserKnnRecommender : public Recommender {
 public:
  explicit UserKnnRecommender(Hyperparams params)
      : Recommender("userknn", std::move(params)), table_({}) {
    opts_ = detail::knn_params(this->params());
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    train_ = ctx.train;
    table_ = user_similarity_table(*train_, opts_.neighbors, opts_.kind, opts_.shrinkage);
  }

  double score(int user, int item) const override {
    double num = 0, den = 0;
    for (const Neighbor& nb : table_.neighbors(user)) {
      if (auto r = train_->rating(nb.index, item)) {
        num += nb.weight * (*r - train_->user_mean(nb.index));
        den += nb.weight;  // weights are positive by construction
      }
    }
    const double mean = train_->user_mean(user);
    return den > 0 ? mean + num / den : mean - kUnsupportedOffset;
  }

  void score_user(int user, std::vector<double>& out) const override {
    const std::size_t items = static_cast<std::size_t>(item_count_);
    num_.assign(items, 0.0);
    den_.assign(items, 0.0);
    for (const Neighbor& nb : table_.neighbors(user)) {
      const double centered_by = train_->user_mean(nb.index);
      for (const auto& [item, value] : train_->user_row(nb.index)) {
        num_[static_cast<std::size_t>(item)] += nb.weight * (value - centered_by);
        den_[static_cast<std::size_t>(item)] += nb.weight;
      }
    }
    const double mean = train_->user_mean(user);
    out.resize(items);
    for (std::size_t i = 0; i < items; ++i) {
      out[i] = den_[i] > 0 ? mean + num_[i] / den_[i] : mean - kUnsupportedOffset;
    }
  }

  const SimilarityTable& table() const { return table_; }

 private:
  detail::KnnParams opts_;
  const RatingMatrix* train_ = nullptr;
  SimilarityTable table_;
  mutable std::vector<double> num_, den_;
};

// Item-based neighborhood model on raw ratings:
//   score(u, i) = sum_j w(i,j) r(u,j) / sum_j w(i,j)
// over the stored neighbors of i that u rated.
class ItemKnnRecommender : public Recommender {
 public:
  explicit ItemKnnRecommender(Hyperparams params)
      : Recommender("itemknn", std::move(params)), table_({}) {
    opts_ = detail::knn_params(this->params());
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    train_ = ctx.train;
    table_ = item_similarity_table(*train_, opts_.neighbors, opts_.kind, opts_.shrinkage);
    // Reverse view: for each item j, the anchors i that keep j as neighbor.
    influences_.assign(static_cast<std::size_t>(item_count_), {});
    for (int i = 0; i < item_count_; ++i) {
      for (const Neighbor& nb : table_.neighbors(i)) {
        influences_[static_cast<std::size_t>(nb.index)].push_back({i, nb.weight});
      }
    }
  }

  double score(int user, int item) const override {
    double num = 0, den = 0;
    for (const Neighbor& nb : table_.neighbors(item)) {
      if (auto r = train_->rating(user, nb.index)) {
        num += nb.weight * *r;
        den += nb.weight;
      }
    }
    return den > 0 ? num / den : train_->user_mean(user) - kUnsupportedOffset;
  }

  void score_user(int user, std::vector<double>& out) const override {
    const std::size_t items = static_cast<std::size_t>(item_count_);
    num_.assign(items, 0.0);
    den_.assign(items, 0.0);
    for (const auto& [j, value] : train_->user_row(user)) {
      for (const Neighbor& target : influences_[static_cast<std::size_t>(j)]) {
        num_[static_cast<std::size_t>(target.index)] += target.weight * value;
        den_[static_cast<std::size_t>(target.index)] += target.weight;
      }
    }
    const double fallback = train_->user_mean(user) - kUnsupportedOffset;
    out.resize(items);
    for (std::size_t i = 0; i < items; ++i) {
      out[i] = den_[i] > 0 ? num_[i] / den_[i] : fallback;
    }
  }

  const SimilarityTable& table() const { return table_; }

 private:
  detail::KnnParams opts_;
  const RatingMatrix* train_ = nullptr;
  SimilarityTable table_;
  std::vector<std::vector<Neighbor>> influences_;
  mutable std::vector<double> num_, den_;
};

// Trust-based neighborhood model. Neighbors are the users u directly
// trusts (quarantined ids never qualify), ranked by co-rated count with u
// (descending, ties by index) and truncated to `neighbors`. Trust carries
// no magnitude, so every kept neighbor weighs 1 and the prediction is the
// same mean-centered form as UserKnn.
class TrustKnnRecommender : public Recommender {
 public:
  explicit TrustKnnRecommender(Hyperparams params)
      : Recommender("trustknn", std::move(params)) {
    this->params().check_keys({"neighbors"});
    neighbors_ = this->params().integer("neighbors", 50);
    if (neighbors_ <= 0) throw ConfigError("neighbors must be positive");
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    train_ = ctx.train;
    if (!ctx.trust) throw Error("trustknn requires a trust graph");
    lists_.assign(static_cast<std::size_t>(user_count_), {});
    std::vector<std::pair<int, int>> ranked;  // (-overlap, index) for easy sorting
    for (int u = 0; u < user_count_; ++u) {
      ranked.clear();
      for (int v : ctx.trust->trusts(u)) {
        if (v >= user_count_) continue;
        ranked.push_back({-co_rated(u, v), v});
      }
      std::sort(ranked.begin(), ranked.end());
      if (static_cast<int>(ranked.size()) > neighbors_) {
        ranked.resize(static_cast<std::size_t>(neighbors_));
      }
      auto& mine = lists_[static_cast<std::size_t>(u)];
      mine.reserve(ranked.size());
      for (const auto& [neg, v] : ranked) mine.push_back(v);
    }
  }

  double score(int user, int item) const override {
    double num = 0, den = 0;
    for (int v : lists_.at(static_cast<std::size_t>(user))) {
      if (auto r = train_->rating(v, item)) {
        num += *r - train_->user_mean(v);
        den += 1.0;
      }
    }
    const double mean = train_->user_mean(user);
    return den > 0 ? mean + num / den : mean - kUnsupportedOffset;
  }

  void score_user(int user, std::vector<double>& out) const override {
    const std::size_t items = static_cast<std::size_t>(item_count_);
    num_.assign(items, 0.0);
    den_.assign(items, 0.0);
    for (int v : lists_.at(static_cast<std::size_t>(user))) {
      const double centered_by = train_->user_mean(v);
      for (const auto& [item, value] : train_->user_row(v)) {
        num_[static_cast<std::size_t>(item)] += value - centered_by;
        den_[static_cast<std::size_t>(item)] += 1.0;
      }
    }
    const double mean = train_->user_mean(user);
    out.resize(items);
    for (std::size_t i = 0; i < items; ++i) {
      out[i] = den_[i] > 0 ? mean + num_[i] / den_[i] : mean - kUnsupportedOffset;
    }
  }

  const std::vector<int>& neighbors(int user) const {
    return lists_.at(static_cast<std::size_t>(user));
  }

 private:
  int co_rated(int u, int v) const {
    const auto& a = train_->user_row(u);
    const auto& b = train_->user_row(v);
    int count = 0;
    std::size_t x = 0, y = 0;
    while (x < a.size() && y < b.size()) {
      if (a[x].first == b[y].first) {
        ++count;
        ++x;
        ++y;
      } else if (a[x].first < b[y].first) {
        ++x;
      } else {
        ++y;
      }
    }
    return count;
  }

  int neighbors_ = 50;
  const RatingMatrix* train_ = nullptr;
  std::vector<std::vector<int>> lists_;
  mutable std::vector<double> num_, den_;
};

}  // namespace recfair
