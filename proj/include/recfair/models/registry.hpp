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

#include <memory>
#include <string>
#include <vector>

#include "recfair/models/baselines.hpp"
#include "recfair/models/factorization.hpp"
#include "recfair/models/knn.hpp"
#include "recfair/models/listrank.hpp"
#include "recfair/models/slim.hpp"
#include "recfair/recommender.hpp"

namespace recfair {

// Families used for reporting: the accuracy bands that make algorithms
// comparable are calibrated per family, since neighborhood models and
// factor models live on different accuracy scales.
enum class ModelFamily { baseline, neighborhood, factorization };

inline const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names = {
      "random",  "mostpopular", "userknn",    "itemknn", "trustknn", "biasedmf",
      "svdpp",   "listrankmf",  "slim",       "soreg",   "socialmf"};
  return names;
}

inline ModelFamily model_family(const std::string& name) {
  if (name == "random" || name == "mostpopular") return ModelFamily::baseline;
  if (name == "userknn" || name == "itemknn" || name == "trustknn") {
    return ModelFamily::neighborhood;
  }
  if (name == "biasedmf" || name == "svdpp" || name == "listrankmf" || name == "slim" ||
      name == "soreg" || name == "socialmf") {
    return ModelFamily::factorization;
  }
  throw ConfigError("unknown algorithm '" + name + "'");
}

inline const char* family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::baseline:
      return "baseline";
    case ModelFamily::neighborhood:
      return "neighborhood";
    case ModelFamily::factorization:
      return "factorization";
  }
  return "unknown";
}

inline bool requires_trust(const std::string& name) {
  return name == "trustknn" || name == "soreg" || name == "socialmf";
}

// Constructs a model by name, validating the hyperparameter keys against
// what that model accepts. Unknown algorithms and unknown keys throw
// ConfigError before any training happens.
inline std::unique_ptr<Recommender> make_model(const std::string& name, Hyperparams params) {
  if (name == "random") return std::make_unique<RandomRecommender>(std::move(params));
  if (name == "mostpopular") return std::make_unique<MostPopularRecommender>(std::move(params));
  if (name == "userknn") return std::make_unique<UserKnnRecommender>(std::move(params));
  if (name == "itemknn") return std::make_unique<ItemKnnRecommender>(std::move(params));
  if (name == "trustknn") return std::make_unique<TrustKnnRecommender>(std::move(params));
  if (name == "biasedmf") return std::make_unique<BiasedMfRecommender>(std::move(params));
  if (name == "svdpp") return std::make_unique<SvdppRecommender>(std::move(params));
  if (name == "listrankmf") return std::make_unique<ListRankMfRecommender>(std::move(params));
  if (name == "slim") return std::make_unique<SlimRecommender>(std::move(params));
  if (name == "soreg") return std::make_unique<SoRegRecommender>(std::move(params));
  if (name == "socialmf") return std::make_unique<SocialMfRecommender>(std::move(params));
  throw ConfigError("unknown algorithm '" + name + "'");
}

}  // namespace recfair
