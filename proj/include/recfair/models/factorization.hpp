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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/errors.hpp"
#include "recfair/models/similarity.hpp"
#include "recfair/recommender.hpp"
#include "recfair/rng.hpp"

namespace recfair {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }
  const double* row(int r) const {
    return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
  }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
  }
};

inline double dot(const double* a, const double* b, int n) {
  double s = 0;
  for (int f = 0; f < n; ++f) s += a[f] * b[f];
  return s;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Learned parameters shared by all factor models. `implicit_factors` is
// populated only by the implicit-feedback model.
struct FactorState {
  double global_mean = 0;
  std::vector<double> user_bias;
  std::vector<double> item_bias;
  Matrix user_factors;
  Matrix item_factors;
  Matrix implicit_factors;

  bool all_finite() const {
    auto ok = [](const std::vector<double>& v) {
      for (double x : v)
        if (!std::isfinite(x)) return false;
      return true;
    };
    return ok(user_bias) && ok(item_bias) && ok(user_factors.data) && ok(item_factors.data) &&
           ok(implicit_factors.data);
  }
};

// --- shared SGD core: explicit-feedback factor models ---------------------

enum class SocialTerm { none, pairwise_similarity, trust_mean };

struct MfOptions {
  int factors = 10;
  double learn_rate = 0.01;
  int iterations = 30;
  double reg_user = 0.01;
  double reg_item = 0.01;
  double reg_bias = 0.01;
  double reg_social = 0.0;
  SocialTerm social = SocialTerm::none;
  // Logistic mode maps ratings to [0,1] and predicts through the logistic
  // function with no bias terms (the trust-propagation model's form).
  bool logistic = false;
};

inline void validate(const MfOptions& o) {
  if (o.factors <= 0) throw ConfigError("factors must be positive");
  if (o.learn_rate <= 0) throw ConfigError("learn_rate must be positive");
  if (o.iterations <= 0) throw ConfigError("iterations must be positive");
  if (o.reg_user < 0 || o.reg_item < 0 || o.reg_bias < 0 || o.reg_social < 0) {
    throw ConfigError("regularization strengths must be non-negative");
  }
}

// Directed social edges among known users, with weights chosen by the
// term: full-profile cosine (floored at zero) for pairwise similarity,
// constant 1 for the trust-mean term. `in` mirrors `out` for gradient
// terms where a user appears on the receiving side.
struct SocialLinks {
  std::vector<std::vector<Neighbor>> out;
  std::vector<std::vector<Neighbor>> in;
};

inline SocialLinks social_links(const RatingMatrix& train, const TrustGraph& trust, SocialTerm term) {
  const int users = train.user_count();
  SocialLinks links;
  links.out.assign(static_cast<std::size_t>(users), {});
  links.in.assign(static_cast<std::size_t>(users), {});
  if (term == SocialTerm::none) return links;
  std::vector<double> norm(static_cast<std::size_t>(users), 0.0);
  if (term == SocialTerm::pairwise_similarity) {
    for (int u = 0; u < users; ++u) {
      double s = 0;
      for (const auto& [item, value] : train.user_row(u)) s += value * value;
      norm[static_cast<std::size_t>(u)] = std::sqrt(s);
    }
  }
  for (int u = 0; u < users && u < trust.node_count(); ++u) {
    for (int f : trust.trusts(u)) {
      if (f >= users) continue;  // quarantined endpoint
      double w = 1.0;
      if (term == SocialTerm::pairwise_similarity) {
        const auto& a = train.user_row(u);
        const auto& b = train.user_row(f);
        double prod = 0;
        std::size_t x = 0, y = 0;
        while (x < a.size() && y < b.size()) {
          if (a[x].first == b[y].first) {
            prod += a[x].second * b[y].second;
            ++x;
            ++y;
          } else if (a[x].first < b[y].first) {
            ++x;
          } else {
            ++y;
          }
        }
        const double den = norm[static_cast<std::size_t>(u)] * norm[static_cast<std::size_t>(f)];
        w = den > 0 ? prod / den : 0.0;
        if (w < 0) w = 0;  // keep the regularizer a penalty
      }
      links.out[static_cast<std::size_t>(u)].push_back({f, w});
      links.in[static_cast<std::size_t>(f)].push_back({u, w});
    }
  }
  return links;
}

namespace detail {

inline double mf_target(double rating, const MfOptions& o) {
  return o.logistic ? (rating - kMinRating) / (kMaxRating - kMinRating) : rating;
}

inline double mf_predict(const FactorState& s, int u, int i, const MfOptions& o) {
  const double raw = dot(s.user_factors.row(u), s.item_factors.row(i), s.user_factors.cols);
  if (o.logistic) return logistic(raw);
  return s.global_mean + s.user_bias[static_cast<std::size_t>(u)] +
         s.item_bias[static_cast<std::size_t>(i)] + raw;
}

inline std::vector<double> trust_means_row(const FactorState& s, const SocialLinks& links, int u) {
  const int f = s.user_factors.cols;
  std::vector<double> mean(static_cast<std::size_t>(f), 0.0);
  const auto& out = links.out[static_cast<std::size_t>(u)];
  if (out.empty()) return mean;
  for (const Neighbor& nb : out) {
    const double* p = s.user_factors.row(nb.index);
    for (int k = 0; k < f; ++k) mean[static_cast<std::size_t>(k)] += p[k];
  }
  for (int k = 0; k < f; ++k) mean[static_cast<std::size_t>(k)] /= static_cast<double>(out.size());
  return mean;
}

}  // namespace detail

// Batch objective the SGD stochastically descends. Regularization is
// counted per training entry (each rating regularizes the vectors it
// touches), matching the per-entry updates; the social term is counted
// once, scaled by reg_social.
inline double mf_loss(const FactorState& s, const RatingMatrix& train, const SocialLinks& links,
                      const MfOptions& o) {
  const int factors = o.factors;
  double loss = 0;
  for (const RatingEntry& e : train.entries()) {
    const double err = detail::mf_target(e.value, o) - detail::mf_predict(s, e.user, e.item, o);
    double reg = o.reg_user * dot(s.user_factors.row(e.user), s.user_factors.row(e.user), factors) +
                 o.reg_item * dot(s.item_factors.row(e.item), s.item_factors.row(e.item), factors);
    if (!o.logistic) {
      const double bu = s.user_bias[static_cast<std::size_t>(e.user)];
      const double bi = s.item_bias[static_cast<std::size_t>(e.item)];
      reg += o.reg_bias * (bu * bu + bi * bi);
    }
    loss += 0.5 * (err * err + reg);
  }
  if (o.social == SocialTerm::pairwise_similarity) {
    for (int u = 0; u < train.user_count(); ++u) {
      for (const Neighbor& nb : links.out[static_cast<std::size_t>(u)]) {
        double d2 = 0;
        const double* pu = s.user_factors.row(u);
        const double* pf = s.user_factors.row(nb.index);
        for (int k = 0; k < factors; ++k) {
          const double d = pu[k] - pf[k];
          d2 += d * d;
        }
        loss += 0.5 * o.reg_social * nb.weight * d2;
      }
    }
  } else if (o.social == SocialTerm::trust_mean) {
    for (int u = 0; u < train.user_count(); ++u) {
      if (links.out[static_cast<std::size_t>(u)].empty()) continue;
      const std::vector<double> mean = detail::trust_means_row(s, links, u);
      const double* pu = s.user_factors.row(u);
      double d2 = 0;
      for (int k = 0; k < factors; ++k) {
        const double d = pu[k] - mean[static_cast<std::size_t>(k)];
        d2 += d * d;
      }
      loss += 0.5 * o.reg_social * d2;
    }
  }
  return loss;
}

// Exact gradient of mf_loss with respect to every learned parameter,
// returned in a state-shaped container (global_mean is fixed, not learned).
inline FactorState mf_gradient(const FactorState& s, const RatingMatrix& train,
                               const SocialLinks& links, const MfOptions& o) {
  const int factors = o.factors;
  FactorState g;
  g.global_mean = 0;
  g.user_bias.assign(s.user_bias.size(), 0.0);
  g.item_bias.assign(s.item_bias.size(), 0.0);
  g.user_factors = Matrix(s.user_factors.rows, factors);
  g.item_factors = Matrix(s.item_factors.rows, factors);
  for (const RatingEntry& e : train.entries()) {
    const double* pu = s.user_factors.row(e.user);
    const double* qi = s.item_factors.row(e.item);
    const double raw = dot(pu, qi, factors);
    double* gpu = g.user_factors.row(e.user);
    double* gqi = g.item_factors.row(e.item);
    double derr;  // d(0.5 err^2)/d raw-score
    if (o.logistic) {
      const double pred = logistic(raw);
      const double err = detail::mf_target(e.value, o) - pred;
      derr = -err * pred * (1.0 - pred);
    } else {
      const double err = detail::mf_target(e.value, o) -
                         (s.global_mean + s.user_bias[static_cast<std::size_t>(e.user)] +
                          s.item_bias[static_cast<std::size_t>(e.item)] + raw);
      derr = -err;
      g.user_bias[static_cast<std::size_t>(e.user)] +=
          derr + o.reg_bias * s.user_bias[static_cast<std::size_t>(e.user)];
      g.item_bias[static_cast<std::size_t>(e.item)] +=
          derr + o.reg_bias * s.item_bias[static_cast<std::size_t>(e.item)];
    }
    for (int k = 0; k < factors; ++k) {
      gpu[k] += derr * qi[k] + o.reg_user * pu[k];
      gqi[k] += derr * pu[k] + o.reg_item * qi[k];
    }
  }
  if (o.social == SocialTerm::pairwise_similarity) {
    for (int u = 0; u < train.user_count(); ++u) {
      const double* pu = s.user_factors.row(u);
      double* gpu = g.user_factors.row(u);
      for (const Neighbor& nb : links.out[static_cast<std::size_t>(u)]) {
        const double* pf = s.user_factors.row(nb.index);
        double* gpf = g.user_factors.row(nb.index);
        for (int k = 0; k < factors; ++k) {
          const double d = o.reg_social * nb.weight * (pu[k] - pf[k]);
          gpu[k] += d;
          gpf[k] -= d;
        }
      }
    }
  } else if (o.social == SocialTerm::trust_mean) {
    for (int u = 0; u < train.user_count(); ++u) {
      const auto& out = links.out[static_cast<std::size_t>(u)];
      if (out.empty()) continue;
      const std::vector<double> mean = detail::trust_means_row(s, links, u);
      const double* pu = s.user_factors.row(u);
      double* gpu = g.user_factors.row(u);
      const double inv = 1.0 / static_cast<double>(out.size());
      for (int k = 0; k < factors; ++k) {
        const double d = o.reg_social * (pu[k] - mean[static_cast<std::size_t>(k)]);
        gpu[k] += d;
        for (const Neighbor& nb : out) {
          g.user_factors.row(nb.index)[k] -= d * inv;
        }
      }
    }
  }
  return g;
}

struct MfFit {
  FactorState state;
  std::vector<double> trace;  // per-epoch training RMSE on the target scale
};

// Stochastic minimization of mf_loss: one pass over the shuffled entries
// per epoch (per-entry regularized updates), then one social pass with
// neighbor means frozen at phase start. Initialization and shuffling draw
// from fixed streams of `seed`, so equal inputs give bit-equal results:
// in particular reg_social = 0 skips the social phase entirely and leaves
// the trajectory identical to the plain model's.
inline MfFit fit_mf(const RatingMatrix& train, const TrustGraph* trust, const MfOptions& o,
                    std::uint64_t seed) {
  validate(o);
  const int users = train.user_count();
  const int items = train.item_count();
  const int factors = o.factors;
  const bool social_on = o.social != SocialTerm::none && o.reg_social > 0;
  SocialLinks links;
  if (social_on) {
    if (!trust) throw Error("social factor model requires a trust graph");
    links = social_links(train, *trust, o.social);
  }

  MfFit fit;
  FactorState& s = fit.state;
  s.global_mean = o.logistic ? 0.0 : train.global_mean();
  s.user_bias.assign(static_cast<std::size_t>(users), 0.0);
  s.item_bias.assign(static_cast<std::size_t>(items), 0.0);
  s.user_factors = Matrix(users, factors);
  s.item_factors = Matrix(items, factors);
  Rng init_rng(mix64(seed, 0x6d662d696e6974ULL));
  for (double& x : s.user_factors.data) x = init_rng.uniform(-0.05, 0.05);
  for (double& x : s.item_factors.data) x = init_rng.uniform(-0.05, 0.05);

  const auto& entries = train.entries();
  std::vector<std::uint32_t> order(entries.size());
  for (std::size_t p = 0; p < order.size(); ++p) order[p] = static_cast<std::uint32_t>(p);
  Rng order_rng(mix64(seed, 0x6d662d6f72646572ULL));
  const double lr = o.learn_rate;

  for (int epoch = 0; epoch < o.iterations; ++epoch) {
    order_rng.shuffle(order);
    for (std::uint32_t pos : order) {
      const RatingEntry& e = entries[pos];
      double* pu = s.user_factors.row(e.user);
      double* qi = s.item_factors.row(e.item);
      const double raw = dot(pu, qi, factors);
      double derr;
      if (o.logistic) {
        const double pred = logistic(raw);
        const double err = detail::mf_target(e.value, o) - pred;
        derr = err * pred * (1.0 - pred);
      } else {
        double& bu = s.user_bias[static_cast<std::size_t>(e.user)];
        double& bi = s.item_bias[static_cast<std::size_t>(e.item)];
        const double err = detail::mf_target(e.value, o) - (s.global_mean + bu + bi + raw);
        bu += lr * (err - o.reg_bias * bu);
        bi += lr * (err - o.reg_bias * bi);
        derr = err;
      }
      for (int k = 0; k < factors; ++k) {
        const double pu_k = pu[k];
        pu[k] += lr * (derr * qi[k] - o.reg_user * pu_k);
        qi[k] += lr * (derr * pu_k - o.reg_item * qi[k]);
      }
    }
    if (social_on) {
      if (o.social == SocialTerm::pairwise_similarity) {
        std::vector<double> grad(static_cast<std::size_t>(factors));
        for (int u = 0; u < users; ++u) {
          double* pu = s.user_factors.row(u);
          std::fill(grad.begin(), grad.end(), 0.0);
          for (const Neighbor& nb : links.out[static_cast<std::size_t>(u)]) {
            const double* pf = s.user_factors.row(nb.index);
            for (int k = 0; k < factors; ++k) grad[static_cast<std::size_t>(k)] += nb.weight * (pu[k] - pf[k]);
          }
          for (const Neighbor& nb : links.in[static_cast<std::size_t>(u)]) {
            const double* pg = s.user_factors.row(nb.index);
            for (int k = 0; k < factors; ++k) grad[static_cast<std::size_t>(k)] += nb.weight * (pu[k] - pg[k]);
          }
          for (int k = 0; k < factors; ++k) pu[k] -= lr * o.reg_social * grad[static_cast<std::size_t>(k)];
        }
      } else {
        // Means frozen at phase start keep the pass order-stable.
        Matrix means(users, factors);
        std::vector<char> has_links(static_cast<std::size_t>(users), 0);
        for (int u = 0; u < users; ++u) {
          const auto& out = links.out[static_cast<std::size_t>(u)];
          if (out.empty()) continue;
          has_links[static_cast<std::size_t>(u)] = 1;
          const std::vector<double> m = detail::trust_means_row(s, links, u);
          for (int k = 0; k < factors; ++k) means.at(u, k) = m[static_cast<std::size_t>(k)];
        }
        for (int u = 0; u < users; ++u) {
          double* pu = s.user_factors.row(u);
          for (int k = 0; k < factors; ++k) {
            double grad = 0;
            if (has_links[static_cast<std::size_t>(u)]) grad += pu[k] - means.at(u, k);
            for (const Neighbor& nb : links.in[static_cast<std::size_t>(u)]) {
              if (!has_links[static_cast<std::size_t>(nb.index)]) continue;
              const double share =
                  1.0 / static_cast<double>(links.out[static_cast<std::size_t>(nb.index)].size());
              grad -= share * (s.user_factors.row(nb.index)[k] - means.at(nb.index, k));
            }
            pu[k] -= lr * o.reg_social * grad;
          }
        }
      }
    }
    double sq = 0;
    for (const RatingEntry& e : entries) {
      const double err = detail::mf_target(e.value, o) - detail::mf_predict(s, e.user, e.item, o);
      sq += err * err;
    }
    const double rmse = entries.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(entries.size()));
    fit.trace.push_back(rmse);
    if (!std::isfinite(rmse) || !s.all_finite()) {
      throw ModelError("factor model diverged at epoch " + std::to_string(epoch + 1) +
                       " (non-finite parameters)");
    }
  }
  return fit;
}

// --- implicit-feedback extension -------------------------------------------

struct SvdppOptions {
  int factors = 10;
  double learn_rate = 0.01;
  int iterations = 30;
  double reg_user = 0.01;
  double reg_item = 0.01;
  double reg_bias = 0.01;
  double reg_implicit = 0.01;
};

inline void validate(const SvdppOptions& o) {
  if (o.factors <= 0) throw ConfigError("factors must be positive");
  if (o.learn_rate <= 0) throw ConfigError("learn_rate must be positive");
  if (o.iterations <= 0) throw ConfigError("iterations must be positive");
  if (o.reg_user < 0 || o.reg_item < 0 || o.reg_bias < 0 || o.reg_implicit < 0) {
    throw ConfigError("regularization strengths must be non-negative");
  }
}

namespace detail {

// z_u = p_u + |N(u)|^{-1/2} sum_{j in N(u)} y_j, the implicit-enhanced
// user representation.
inline std::vector<double> svdpp_z(const FactorState& s, const RatingMatrix& train, int u) {
  const int factors = s.user_factors.cols;
  std::vector<double> z(s.user_factors.row(u), s.user_factors.row(u) + factors);
  const auto& row = train.user_row(u);
  if (row.empty()) return z;
  const double c = 1.0 / std::sqrt(static_cast<double>(row.size()));
  for (const auto& [j, value] : row) {
    const double* yj = s.implicit_factors.row(j);
    for (int k = 0; k < factors; ++k) z[static_cast<std::size_t>(k)] += c * yj[k];
  }
  return z;
}

inline double svdpp_predict(const FactorState& s, const RatingMatrix& train, int u, int i) {
  const std::vector<double> z = svdpp_z(s, train, u);
  return s.global_mean + s.user_bias[static_cast<std::size_t>(u)] +
         s.item_bias[static_cast<std::size_t>(i)] +
         dot(z.data(), s.item_factors.row(i), s.user_factors.cols);
}

}  // namespace detail

// Batch objective for the implicit-feedback model, per-entry regularized
// like mf_loss; each entry also regularizes every implicit vector in the
// user's history, matching the per-entry update.
inline double svdpp_loss(const FactorState& s, const RatingMatrix& train, const SvdppOptions& o) {
  const int factors = o.factors;
  double loss = 0;
  for (int u = 0; u < train.user_count(); ++u) {
    const auto& row = train.user_row(u);
    if (row.empty()) continue;
    const std::vector<double> z = detail::svdpp_z(s, train, u);
    double implicit_reg = 0;
    for (const auto& [j, value] : row) {
      implicit_reg += dot(s.implicit_factors.row(j), s.implicit_factors.row(j), factors);
    }
    const double bu = s.user_bias[static_cast<std::size_t>(u)];
    const double pu_sq = dot(s.user_factors.row(u), s.user_factors.row(u), factors);
    for (const auto& [i, value] : row) {
      const double bi = s.item_bias[static_cast<std::size_t>(i)];
      const double pred = s.global_mean + bu + bi + dot(z.data(), s.item_factors.row(i), factors);
      const double err = value - pred;
      const double reg = o.reg_user * pu_sq +
                         o.reg_item * dot(s.item_factors.row(i), s.item_factors.row(i), factors) +
                         o.reg_bias * (bu * bu + bi * bi) + o.reg_implicit * implicit_reg;
      loss += 0.5 * (err * err + reg);
    }
  }
  return loss;
}

inline FactorState svdpp_gradient(const FactorState& s, const RatingMatrix& train,
                                  const SvdppOptions& o) {
  const int factors = o.factors;
  FactorState g;
  g.user_bias.assign(s.user_bias.size(), 0.0);
  g.item_bias.assign(s.item_bias.size(), 0.0);
  g.user_factors = Matrix(s.user_factors.rows, factors);
  g.item_factors = Matrix(s.item_factors.rows, factors);
  g.implicit_factors = Matrix(s.implicit_factors.rows, factors);
  for (int u = 0; u < train.user_count(); ++u) {
    const auto& row = train.user_row(u);
    if (row.empty()) continue;
    const std::vector<double> z = detail::svdpp_z(s, train, u);
    const double c = 1.0 / std::sqrt(static_cast<double>(row.size()));
    const double bu = s.user_bias[static_cast<std::size_t>(u)];
    const double* pu = s.user_factors.row(u);
    double* gpu = g.user_factors.row(u);
    const double n_u = static_cast<double>(row.size());
    for (const auto& [i, value] : row) {
      const double* qi = s.item_factors.row(i);
      double* gqi = g.item_factors.row(i);
      const double bi = s.item_bias[static_cast<std::size_t>(i)];
      const double err = value - (s.global_mean + bu + bi + dot(z.data(), qi, factors));
      const double derr = -err;
      g.user_bias[static_cast<std::size_t>(u)] += derr + o.reg_bias * bu;
      g.item_bias[static_cast<std::size_t>(i)] += derr + o.reg_bias * bi;
      for (int k = 0; k < factors; ++k) {
        gpu[k] += derr * qi[k] + o.reg_user * pu[k];
        gqi[k] += derr * z[static_cast<std::size_t>(k)] + o.reg_item * qi[k];
      }
      for (const auto& [j, r_j] : row) {
        (void)r_j;
        double* gyj = g.implicit_factors.row(j);
        for (int k = 0; k < factors; ++k) {
          gyj[k] += derr * c * qi[k];
        }
      }
    }
    // Per-entry implicit regularization: every entry of u regularizes all
    // y_j in the history, so the batch multiplier is |N(u)|.
    for (const auto& [j, r_j] : row) {
      (void)r_j;
      double* gyj = g.implicit_factors.row(j);
      const double* yj = s.implicit_factors.row(j);
      for (int k = 0; k < factors; ++k) gyj[k] += o.reg_implicit * n_u * yj[k];
    }
  }
  return g;
}

// SGD for the implicit-feedback model. The enhanced representation z_u is
// recomputed per entry from the current parameters.
inline MfFit fit_svdpp(const RatingMatrix& train, const SvdppOptions& o, std::uint64_t seed) {
  validate(o);
  const int users = train.user_count();
  const int items = train.item_count();
  const int factors = o.factors;
  MfFit fit;
  FactorState& s = fit.state;
  s.global_mean = train.global_mean();
  s.user_bias.assign(static_cast<std::size_t>(users), 0.0);
  s.item_bias.assign(static_cast<std::size_t>(items), 0.0);
  s.user_factors = Matrix(users, factors);
  s.item_factors = Matrix(items, factors);
  s.implicit_factors = Matrix(items, factors);
  Rng init_rng(mix64(seed, 0x73766470702d69ULL));
  for (double& x : s.user_factors.data) x = init_rng.uniform(-0.05, 0.05);
  for (double& x : s.item_factors.data) x = init_rng.uniform(-0.05, 0.05);
  for (double& x : s.implicit_factors.data) x = init_rng.uniform(-0.05, 0.05);

  const auto& entries = train.entries();
  std::vector<std::uint32_t> order(entries.size());
  for (std::size_t p = 0; p < order.size(); ++p) order[p] = static_cast<std::uint32_t>(p);
  Rng order_rng(mix64(seed, 0x73766470702d6fULL));
  const double lr = o.learn_rate;
  std::vector<double> z(static_cast<std::size_t>(factors));

  for (int epoch = 0; epoch < o.iterations; ++epoch) {
    order_rng.shuffle(order);
    for (std::uint32_t pos : order) {
      const RatingEntry& e = entries[pos];
      const auto& row = train.user_row(e.user);
      const double c = 1.0 / std::sqrt(static_cast<double>(row.size()));
      double* pu = s.user_factors.row(e.user);
      double* qi = s.item_factors.row(e.item);
      for (int k = 0; k < factors; ++k) z[static_cast<std::size_t>(k)] = pu[k];
      for (const auto& [j, value] : row) {
        const double* yj = s.implicit_factors.row(j);
        for (int k = 0; k < factors; ++k) z[static_cast<std::size_t>(k)] += c * yj[k];
      }
      double& bu = s.user_bias[static_cast<std::size_t>(e.user)];
      double& bi = s.item_bias[static_cast<std::size_t>(e.item)];
      const double err = e.value - (s.global_mean + bu + bi + dot(z.data(), qi, factors));
      bu += lr * (err - o.reg_bias * bu);
      bi += lr * (err - o.reg_bias * bi);
      for (const auto& [j, value] : row) {
        double* yj = s.implicit_factors.row(j);
        for (int k = 0; k < factors; ++k) {
          yj[k] += lr * (err * c * qi[k] - o.reg_implicit * yj[k]);
        }
      }
      for (int k = 0; k < factors; ++k) {
        const double pu_k = pu[k];
        pu[k] += lr * (err * qi[k] - o.reg_user * pu_k);
        qi[k] += lr * (err * z[static_cast<std::size_t>(k)] - o.reg_item * qi[k]);
      }
    }
    double sq = 0;
    for (const RatingEntry& e : entries) {
      const double err = e.value - detail::svdpp_predict(s, train, e.user, e.item);
      sq += err * err;
    }
    const double rmse = entries.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(entries.size()));
    fit.trace.push_back(rmse);
    if (!std::isfinite(rmse) || !s.all_finite()) {
      throw ModelError("implicit factor model diverged at epoch " + std::to_string(epoch + 1) +
                       " (non-finite parameters)");
    }
  }
  return fit;
}

// --- recommender wrappers ---------------------------------------------------

namespace detail {

inline MfOptions mf_options_from(const Hyperparams& hp, bool social, bool logistic) {
  MfOptions o;
  o.factors = hp.integer("factors", o.factors);
  o.learn_rate = hp.number("learn_rate", o.learn_rate);
  o.iterations = hp.integer("iterations", o.iterations);
  o.reg_user = hp.number("reg_user", o.reg_user);
  o.reg_item = hp.number("reg_item", o.reg_item);
  if (!logistic) o.reg_bias = hp.number("reg_bias", o.reg_bias);
  if (social) o.reg_social = hp.number("reg_social", 0.1);
  o.logistic = logistic;
  validate(o);
  return o;
}

}  // namespace detail

// Biased matrix factorization: score(u, i) = mu + b_u + b_i + p_u . q_i.
class BiasedMfRecommender : public Recommender {
 public:
  explicit BiasedMfRecommender(Hyperparams params) : Recommender("biasedmf", std::move(params)) {
    this->params().check_keys(
        {"factors", "learn_rate", "iterations", "reg_user", "reg_item", "reg_bias"});
    opts_ = detail::mf_options_from(this->params(), false, false);
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    fit_ = fit_mf(*ctx.train, nullptr, opts_, ctx.seed);
  }

  double score(int user, int item) const override {
    return detail::mf_predict(fit_.state, user, item, opts_);
  }

  const MfFit& result() const { return fit_; }

 protected:
  MfOptions opts_;
  MfFit fit_;
};

// Matrix factorization with a pairwise social regularizer: trusted pairs
// are pulled together in factor space proportionally to their rating
// profile similarity.
class SoRegRecommender : public Recommender {
 public:
  explicit SoRegRecommender(Hyperparams params) : Recommender("soreg", std::move(params)) {
    this->params().check_keys(
        {"factors", "learn_rate", "iterations", "reg_user", "reg_item", "reg_bias", "reg_social"});
    opts_ = detail::mf_options_from(this->params(), true, false);
    opts_.social = SocialTerm::pairwise_similarity;
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    if (!ctx.trust) throw Error("soreg requires a trust graph");
    fit_ = fit_mf(*ctx.train, ctx.trust, opts_, ctx.seed);
  }

  double score(int user, int item) const override {
    return detail::mf_predict(fit_.state, user, item, opts_);
  }

  const MfFit& result() const { return fit_; }

 private:
  MfOptions opts_;
  MfFit fit_;
};

// Trust-propagation factorization: ratings mapped to [0,1], predictions
// through the logistic function, each user's factors regularized toward
// the mean of the factors of users they trust. Scores map back to the
// rating scale through the inverse of the target mapping.
class SocialMfRecommender : public Recommender {
 public:
  explicit SocialMfRecommender(Hyperparams params) : Recommender("socialmf", std::move(params)) {
    this->params().check_keys(
        {"factors", "learn_rate", "iterations", "reg_user", "reg_item", "reg_social"});
    opts_ = detail::mf_options_from(this->params(), true, true);
    opts_.social = SocialTerm::trust_mean;
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    if (!ctx.trust) throw Error("socialmf requires a trust graph");
    fit_ = fit_mf(*ctx.train, ctx.trust, opts_, ctx.seed);
  }

  double score(int user, int item) const override {
    const double raw = detail::mf_predict(fit_.state, user, item, opts_);  // in (0, 1)
    return kMinRating + (kMaxRating - kMinRating) * raw;
  }

  const MfFit& result() const { return fit_; }

 private:
  MfOptions opts_;
  MfFit fit_;
};

// Implicit-feedback factorization: the user representation is enhanced by
// the normalized sum of implicit item factors over the rated history.
class SvdppRecommender : public Recommender {
 public:
  explicit SvdppRecommender(Hyperparams params) : Recommender("svdpp", std::move(params)) {
    this->params().check_keys({"factors", "learn_rate", "iterations", "reg_user", "reg_item",
                               "reg_bias", "reg_implicit"});
    opts_.factors = this->params().integer("factors", opts_.factors);
    opts_.learn_rate = this->params().number("learn_rate", opts_.learn_rate);
    opts_.iterations = this->params().integer("iterations", opts_.iterations);
    opts_.reg_user = this->params().number("reg_user", opts_.reg_user);
    opts_.reg_item = this->params().number("reg_item", opts_.reg_item);
    opts_.reg_bias = this->params().number("reg_bias", opts_.reg_bias);
    opts_.reg_implicit = this->params().number("reg_implicit", opts_.reg_implicit);
    validate(opts_);
  }

  void fit(const TrainContext& ctx) override {
    bind(ctx);
    fit_ = fit_svdpp(*ctx.train, opts_, ctx.seed);
    // Freeze z_u once for scoring; fitting is done.
    z_ = Matrix(user_count_, opts_.factors);
    for (int u = 0; u < user_count_; ++u) {
      const std::vector<double> z = detail::svdpp_z(fit_.state, *ctx.train, u);
      for (int k = 0; k < opts_.factors; ++k) z_.at(u, k) = z[static_cast<std::size_t>(k)];
    }
  }

  double score(int user, int item) const override {
    const FactorState& s = fit_.state;
    return s.global_mean + s.user_bias[static_cast<std::size_t>(user)] +
           s.item_bias[static_cast<std::size_t>(item)] +
           dot(z_.row(user), s.item_factors.row(item), opts_.factors);
  }

  const MfFit& result() const { return fit_; }

 private:
  SvdppOptions opts_;
  MfFit fit_;
  Matrix z_;
};

}  // namespace recfair
