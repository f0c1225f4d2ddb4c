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
#include <string>
#include <vector>

#include "recfair/errors.hpp"
#include "recfair/models/factorization.hpp"
#include "recfair/recommender.hpp"
#include "recfair/rng.hpp"

namespace recfair {

struct ListRankOptions {
  int factors = 10;
  double learn_rate = 0.1;
  int iterations = 30;
  double reg_user = 0.01;
  double reg_item = 0.01;
};

inline void validate(const ListRankOptions& o) {
  if (o.factors <= 0) throw ConfigError("factors must be positive");
  if (o.learn_rate <= 0) throw ConfigError("learn_rate must be positive");
  if (o.iterations <= 0) throw ConfigError("iterations must be positive");
  if (o.reg_user < 0 || o.reg_item < 0) {
    throw ConfigError("regularization strengths must be non-negative");
  }
}

namespace detail {

// Softmax over g(values) with the usual max-shift for stability. Both the
// target distribution (over ratings) and the model distribution (over raw
// scores) go through the same transform.
inline void listwise_distribution(const std::vector<double>& values, std::vector<double>& out) {
  out.resize(values.size());
  double hi = -1e300;
  for (std::size_t j = 0; j < values.size(); ++j) {
    out[j] = logistic(values[j]);
    hi = std::max(hi, out[j]);
  }
  double total = 0;
  for (double& x : out) {
    x = std::exp(x - hi);
    total += x;
  }
  for (double& x : out) x /= total;
}

}  // namespace detail

// Listwise objective: per user, the cross entropy between the top-one
// probability distribution induced by the ratings and the one induced by
// the model scores, plus L2 on the user's factors (once per user) and on
// the factors of each rated item (once per occurrence):
//
//   L = sum_u [ -sum_{i in R(u)} t_ui log pi_ui ]
//       + (reg_user/2) sum_u |p_u|^2 + (reg_item/2) sum_u sum_{i in R(u)} |q_i|^2
inline double listrank_loss(const FactorState& s, const RatingMatrix& train,
                            const ListRankOptions& o) {
  const int factors = o.factors;
  double loss = 0;
  std::vector<double> scores, ratings, target, model;
  for (int u = 0; u < train.user_count(); ++u) {
    const auto& row = train.user_row(u);
    if (row.empty()) continue;
    scores.clear();
    ratings.clear();
    const double* pu = s.user_factors.row(u);
    for (const auto& [i, r] : row) {
      scores.push_back(dot(pu, s.item_factors.row(i), factors));
      ratings.push_back(r);
    }
    detail::listwise_distribution(ratings, target);
    detail::listwise_distribution(scores, model);
    double reg = o.reg_user * dot(pu, pu, factors);
    for (std::size_t j = 0; j < row.size(); ++j) {
      loss -= target[j] * std::log(model[j]);
      const double* qi = s.item_factors.row(row[j].first);
      reg += o.reg_item * dot(qi, qi, factors);
    }
    loss += 0.5 * reg;
  }
  return loss;
}

inline FactorState listrank_gradient(const FactorState& s, const RatingMatrix& train,
                                     const ListRankOptions& o) {
  const int factors = o.factors;
  FactorState g;
  g.user_factors = Matrix(s.user_factors.rows, factors);
  g.item_factors = Matrix(s.item_factors.rows, factors);
  std::vector<double> scores, ratings, target, model;
  for (int u = 0; u < train.user_count(); ++u) {
    const auto& row = train.user_row(u);
    if (row.empty()) continue;
    scores.clear();
    ratings.clear();
    const double* pu = s.user_factors.row(u);
    for (const auto& [i, r] : row) {
      scores.push_back(dot(pu, s.item_factors.row(i), factors));
      ratings.push_back(r);
    }
    detail::listwise_distribution(ratings, target);
    detail::listwise_distribution(scores, model);
    double* gpu = g.user_factors.row(u);
    for (int k = 0; k < factors; ++k) gpu[k] += o.reg_user * pu[k];
    for (std::size_t j = 0; j < row.size(); ++j) {
      // dL/ds_j = (pi_j - t_j) g'(s_j); the softmax is over g(s).
      const double gs = logistic(scores[j]);
      const double delta = (model[j] - target[j]) * gs * (1.0 - gs);
      const int i = row[j].first;
      const double* qi = s.item_factors.row(i);
      double* gqi = g.item_factors.row(i);
      for (int k = 0; k < factors; ++k) {
        gpu[k] += delta * qi[k];
        gqi[k] += delta * pu[k] + o.reg_item * qi[k];
      }
    }
  }
  return g;
}

struct ListRankFit {
  FactorState state;
  std::vector<double> trace;  // per-epoch objective value
};

// Gradient descent over per-user lists: each epoch visits the users in a
// shuffled order and applies that user's exact contribution to the
// gradient (computed before any of it is applied).
inline ListRankFit fit_listrank(const RatingMatrix& train, const ListRankOptions& o,
                                std::uint64_t seed) {
  validate(o);
  const int users = train.user_count();
  const int items = train.item_count();
  const int factors = o.factors;
  ListRankFit fit;
  FactorState& s = fit.state;
  s.user_factors = Matrix(users, factors);
  s.item_factors = Matrix(items, factors);
  Rng init_rng(mix64(seed, 0x6c722d696e6974ULL));
  for (double& x : s.user_factors.data) x = init_rng.uniform(-0.05, 0.05);
  for (double& x : s.item_factors.data) x = init_rng.uniform(-0.05, 0.05);

  std::vector<std::uint32_t> order;
  for (int u = 0; u < users; ++u) {
    if (!train.user_row(u).empty()) order.push_back(static_cast<std::uint32_t>(u));
  }
  Rng order_rng(mix64(seed, 0x6c722d6f72646572ULL));
  std::vector<double> scores, ratings, target, model, gpu;

  for (int epoch = 0; epoch < o.iterations; ++epoch) {
    order_rng.shuffle(order);
    for (std::uint32_t u : order) {
      const auto& row = train.user_row(static_cast<int>(u));
      scores.clear();
      ratings.clear();
      double* pu = s.user_factors.row(static_cast<int>(u));
      for (const auto& [i, r] : row) {
        scores.push_back(dot(pu, s.item_factors.row(i), factors));
        ratings.push_back(r);
      }
      detail::listwise_distribution(ratings, target);
      detail::listwise_distribution(scores, model);
      gpu.assign(static_cast<std::size_t>(factors), 0.0);
      for (int k = 0; k < factors; ++k) gpu[static_cast<std::size_t>(k)] = o.reg_user * pu[k];
      for (std::size_t j = 0; j < row.size(); ++j) {
        const double gs = logistic(scores[j]);
        const double delta = (model[j] - target[j]) * gs * (1.0 - gs);
        double* qi = s.item_factors.row(row[j].first);
        for (int k = 0; k < factors; ++k) {
          gpu[static_cast<std::size_t>(k)] += delta * qi[k];
          qi[k] -= o.learn_rate * (delta * pu[k] + o.reg_item * qi[k]);
        }
      }
      for (int k = 0; k < factors; ++k) pu[k] -= o.learn_rate * gpu[static_cast<std::size_t>(k)];
    }
    const double objective = listrank_loss(s, train, o);
    fit.trace.push_back(objective);
    if (!std::isfinite(objective) || !s.all_finite()) {
      throw ModelError("listwise model diverged at epoch " + std::to_string(epoch + 1) +
                       " (non-finite parameters)");
    }
  }
  return fit;
}

// Listwise ranking factorization; scores are the raw factor products.
class ListRankMfRecommender : public Recommender {
 public:
  explicit ListRankMfRecommender(Hyperparams params)
      : Recommender("listrankmf", std::move(params)) {
    this->params().check_keys({"factors", "learn_rate", "iterations", "reg_user", "reg_item"});
    opts_.factors = this->params().integer("factors", opts_.factors);
    opts_.learn_rate = this->params().number("learn_rate", opts_.learn_rate);
    opts_.iterations = this->params().integer("iterations", opts_.iterations);
    opts_.reg_user = this->params().number("reg_user", opts_.reg_user);
    opts_.reg_item = this->params().number("reg_item", opts_.reg_item);
    validate(opts_);
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    fit_ = fit_listrank(*ctx.train, opts_, ctx.seed);
  }

  double score(int user, int item) const override {
    return dot(fit_.state.user_factors.row(user), fit_.state.item_factors.row(item), opts_.factors);
  }

  const ListRankFit& result() const { return fit_; }

 private:
  ListRankOptions opts_;
  ListRankFit fit_;
};

}  // namespace recfair
