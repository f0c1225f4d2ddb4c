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
#include <vector>

#include "recfair/recommender.hpp"
#include "recfair/util.hpp"

namespace recfair {

struct SlimOptions {
  double l1 = 0.1;
  double l2 = 0.1;
  double tolerance = 1e-4;  // stop when no weight moves more than this in a sweep
  int max_sweeps = 100;
};

inline void validate(const SlimOptions& o) {
  if (o.l1 < 0 || o.l2 < 0) throw ConfigError("l1 and l2 must be non-negative");
  if (o.tolerance <= 0) throw ConfigError("tolerance must be positive");
  if (o.max_sweeps <= 0) throw ConfigError("max_sweeps must be positive");
}

// Learned item-item weight matrix, zero diagonal, non-negative entries.
// Stored sparsely by column (the per-item solves) and by row (scoring).
class SlimWeights {
 public:
  explicit SlimWeights(std::vector<std::vector<std::pair<int, double>>> columns)
      : columns_(std::move(columns)) {
    rows_.assign(columns_.size(), {});
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      for (const auto& [j, w] : columns_[i]) {
        rows_[static_cast<std::size_t>(j)].push_back({static_cast<int>(i), w});
      }
    }
  }

  int item_count() const { return static_cast<int>(columns_.size()); }

  // Non-zero weights of column i: pairs (j, w_{j,i}) sorted by j.
  const std::vector<std::pair<int, double>>& column(int i) const {
    return columns_.at(static_cast<std::size_t>(i));
  }

  // Non-zero weights with source row j: pairs (i, w_{j,i}) sorted by i.
  const std::vector<std::pair<int, double>>& row(int j) const {
    return rows_.at(static_cast<std::size_t>(j));
  }

  std::size_t nonzeros() const {
    std::size_t n = 0;
    for (const auto& col : columns_) n += col.size();
    return n;
  }

 private:
  std::vector<std::vector<std::pair<int, double>>> columns_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

// Per-column elastic-net objective on the binarized matrix:
//   f(w) = 1/2 |a_i - A w|^2 + l2/2 |w|^2 + l1 |w|_1,  w >= 0, w_i = 0.
// `weights` is a dense item-sized vector. Evaluated straight from the
// training rows; used to assess solver output.
inline double slim_column_objective(const RatingMatrix& train, int target_item,
                                    const std::vector<double>& weights, double l1, double l2) {
  double loss = 0;
  for (int u = 0; u < train.user_count(); ++u) {
    double pred = 0;
    for (const auto& [j, r] : train.user_row(u)) pred += weights[static_cast<std::size_t>(j)];
    const double a = train.rated(u, target_item) ? 1.0 : 0.0;
    const double res = a - pred;
    loss += 0.5 * res * res;
  }
  for (double w : weights) loss += 0.5 * l2 * w * w + l1 * w;
  return loss;
}

// Fits one weight column per item by cyclic coordinate descent over the
// items that co-occur with the target (all other coefficients are zero at
// any stationary point when l1 > 0, and harmless to pin at zero otherwise).
// The binarized Gram matrix G = A^T A drives the updates:
//   w_k <- max(0, (G_ki - sum_{l != k} G_kl w_l - l1) / (G_kk + l2)).
inline SlimWeights fit_slim(const RatingMatrix& train, const SlimOptions& o, int jobs = 1) {
  validate(o);
  const int items = train.item_count();
  // Dense Gram of the binarized matrix: G[i][j] = co-rating count.
  std::vector<std::vector<double>> gram(static_cast<std::size_t>(items),
                                        std::vector<double>(static_cast<std::size_t>(items), 0.0));
  for (int u = 0; u < train.user_count(); ++u) {
    const auto& row = train.user_row(u);
    for (std::size_t x = 0; x < row.size(); ++x) {
      auto* gx = gram[static_cast<std::size_t>(row[x].first)].data();
      for (std::size_t y = 0; y < row.size(); ++y) {
        gx[row[y].first] += 1.0;
      }
    }
  }

  std::vector<std::vector<std::pair<int, double>>> columns(static_cast<std::size_t>(items));
  parallel_for(static_cast<std::size_t>(items), jobs, [&](std::size_t target) {
    const int i = static_cast<int>(target);
    const auto& gi = gram[target];
    std::vector<int> active;
    for (int k = 0; k < items; ++k) {
      if (k != i && gi[static_cast<std::size_t>(k)] > 0) active.push_back(k);
    }
    if (active.empty()) return;
    const std::size_t m = active.size();
    std::vector<double> w(m, 0.0);
    std::vector<double> s(m, 0.0);  // s[x] = sum_l G[active[x]][l] w_l over active l
    for (int sweep = 0; sweep < o.max_sweeps; ++sweep) {
      double max_delta = 0;
      for (std::size_t x = 0; x < m; ++x) {
        const int k = active[x];
        const auto* gk = gram[static_cast<std::size_t>(k)].data();
        const double gkk = gk[k];
        const double rest = s[x] - gkk * w[x];
        double next = (gi[static_cast<std::size_t>(k)] - rest - o.l1) / (gkk + o.l2);
        if (next < 0) next = 0;
        const double delta = next - w[x];
        if (delta != 0) {
          w[x] = next;
          for (std::size_t y = 0; y < m; ++y) {
            s[y] += gram[static_cast<std::size_t>(active[y])][static_cast<std::size_t>(k)] * delta;
          }
          max_delta = std::max(max_delta, std::abs(delta));
        }
      }
      if (max_delta < o.tolerance) break;
    }
    auto& col = columns[target];
    for (std::size_t x = 0; x < m; ++x) {
      if (w[x] > 0) col.push_back({active[x], w[x]});
    }
  });
  return SlimWeights(std::move(columns));
}

// Sparse linear item-item model over implicit feedback:
//   score(u, i) = sum_{j rated by u} w_{j,i}.
class SlimRecommender : public Recommender {
 public:
  explicit SlimRecommender(Hyperparams params)
      : Recommender("slim", std::move(params)), weights_({}) {
    this->params().check_keys({"l1", "l2"});
    opts_.l1 = this->params().number("l1", opts_.l1);
    opts_.l2 = this->params().number("l2", opts_.l2);
    validate(opts_);
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    train_ = ctx.train;
    weights_ = fit_slim(*ctx.train, opts_, ctx.jobs);
  }

  double score(int user, int item) const override {
    const auto& col = weights_.column(item);
    const auto& row = train_->user_row(user);
    double s = 0;
    std::size_t x = 0, y = 0;
    while (x < col.size() && y < row.size()) {
      if (col[x].first == row[y].first) {
        s += col[x].second;
        ++x;
        ++y;
      } else if (col[x].first < row[y].first) {
        ++x;
      } else {
        ++y;
      }
    }
    return s;
  }

  void score_user(int user, std::vector<double>& out) const override {
    out.assign(static_cast<std::size_t>(item_count_), 0.0);
    for (const auto& [j, r] : train_->user_row(user)) {
      for (const auto& [i, w] : weights_.row(j)) {
        out[static_cast<std::size_t>(i)] += w;
      }
    }
  }

  const SlimWeights& weights() const { return weights_; }

 private:
  SlimOptions opts_;
  const RatingMatrix* train_ = nullptr;
  SlimWeights weights_;
};

}  // namespace recfair
