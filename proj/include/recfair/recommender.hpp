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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/errors.hpp"

namespace recfair {

// String-keyed hyperparameters with typed accessors. Models declare their
// allowed keys; anything else is rejected by name so grid typos surface
// before any training starts.
class Hyperparams {
 public:
  Hyperparams() = default;
  explicit Hyperparams(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void check_keys(std::initializer_list<const char*> allowed) const {
    for (const auto& [key, value] : values_) {
      bool ok = false;
      for (const char* a : allowed) {
        if (key == a) {
          ok = true;
          break;
        }
      }
      if (!ok) throw ConfigError("unknown hyperparameter key '" + key + "'");
    }
  }

  double number(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto value = parse_double(it->second);
    if (!value) throw ConfigError("hyperparameter '" + key + "' = '" + it->second + "' is not a number");
    return *value;
  }

  int integer(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto value = parse_int(it->second);
    if (!value) throw ConfigError("hyperparameter '" + key + "' = '" + it->second + "' is not an integer");
    return static_cast<int>(*value);
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  // "k1=v1,k2=v2" with keys in sorted order; used in hashes and reports.
  std::string canonical() const {
    std::string out;
    for (const auto& [key, value] : values_) {
      if (!out.empty()) out += ',';
      out += key;
      out += '=';
      out += value;
    }
    return out;
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct TrainContext {
  const RatingMatrix* train = nullptr;
  const TrustGraph* trust = nullptr;  // may be null for models that ignore it
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Common contract: fit on a training matrix, then produce a real-valued
// preference score for any (user, item) pair. Higher is better. Scores are
// only compared within one user's list.
class Recommender {
 public:
  Recommender(std::string name, Hyperparams params)
      : name_(std::move(name)), params_(std::move(params)) {}
  virtual ~Recommender() = default;

  const std::string& name() const { return name_; }
  const Hyperparams& params() const { return params_; }

  virtual void fit(const TrainContext& ctx) = 0;
  virtual double score(int user, int item) const = 0;

  // Scores every item for one user into `out` (resized to item count).
  // Override when a batched pass is cheaper than item-by-item scoring.
  virtual void score_user(int user, std::vector<double>& out) const {
    out.resize(static_cast<std::size_t>(item_count_));
    for (int i = 0; i < item_count_; ++i) out[static_cast<std::size_t>(i)] = score(user, i);
  }

 protected:
  void bind(const TrainContext& ctx) {
    if (!ctx.train) throw Error("train context has no rating matrix");
    user_count_ = ctx.train->user_count();
    item_count_ = ctx.train->item_count();
  }

  int user_count_ = 0;
  int item_count_ = 0;

 private:
  std::string name_;
  Hyperparams params_;
};

struct ScoredItem {
  int item = 0;
  double score = 0;
};

// Fixed-length top-N lists for every user.
class RecommendationSet {
 public:
  RecommendationSet(int list_size, int user_count)
      : list_size_(list_size), lists_(static_cast<std::size_t>(user_count)) {}

  int list_size() const { return list_size_; }
  int user_count() const { return static_cast<int>(lists_.size()); }

  const std::vector<ScoredItem>& list(int user) const {
    return lists_.at(static_cast<std::size_t>(user));
  }

  void set_list(int user, std::vector<ScoredItem> items) {
    lists_.at(static_cast<std::size_t>(user)) = std::move(items);
  }

 private:
  int list_size_;
  std::vector<std::vector<ScoredItem>> lists_;
};

// Top-N selection over unrated items: rank by score descending, break ties
// by ascending item index. Training items are excluded. Every list has
// exactly n items (callers guarantee n <= unrated items per user, which
// holds for the datasets this toolkit targets).
inline RecommendationSet top_n(const Recommender& model, const RatingMatrix& train, int n) {
  if (n <= 0) throw ConfigError("list size must be positive");
  RecommendationSet recs(n, train.user_count());
  std::vector<double> scores;
  std::vector<ScoredItem> pool;
  for (int u = 0; u < train.user_count(); ++u) {
    model.score_user(u, scores);
    if (static_cast<int>(scores.size()) != train.item_count()) {
      throw ModelError("model '" + model.name() + "' scored the wrong number of items");
    }
    pool.clear();
    const auto& row = train.user_row(u);
    std::size_t next = 0;
    for (int i = 0; i < train.item_count(); ++i) {
      if (next < row.size() && row[next].first == i) {
        ++next;
        continue;  // already consumed in training
      }
      const double s = scores[static_cast<std::size_t>(i)];
      if (!std::isfinite(s)) {
        throw ModelError("model '" + model.name() + "' produced a non-finite score for user #" +
                         std::to_string(u) + " item #" + std::to_string(i));
      }
      pool.push_back({i, s});
    }
    if (static_cast<int>(pool.size()) < n) {
      throw Error("user #" + std::to_string(u) + " has fewer than " + std::to_string(n) +
                  " unrated items");
    }
    auto better = [](const ScoredItem& a, const ScoredItem& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.item < b.item;
    };
    std::partial_sort(pool.begin(), pool.begin() + n, pool.end(), better);
    recs.set_list(u, std::vector<ScoredItem>(pool.begin(), pool.begin() + n));
  }
  return recs;
}

}  // namespace recfair
