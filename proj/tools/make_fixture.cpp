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

// Generates the bundled evaluation fixture: a small rating + trust +
// demographic dataset with two taste clusters, so preference ratios and
// biases differ between groups the way real review data does. Everything
// is drawn from fixed streams; the same seed always writes the same bytes.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "recfair/rng.hpp"

namespace {

constexpr int kUsers = 120;
constexpr int kItems = 150;

std::string user_id(int u) {
  std::string n = std::to_string(u + 1);
  return "u" + std::string(3 - n.size(), '0') + n;
}

std::string item_id(int i) {
  std::string n = std::to_string(i + 1);
  return "b" + std::string(3 - n.size(), '0') + n;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2 || argc > 3) {
    std::cerr << "usage: make_fixture <out_dir> [seed]\n";
    return 2;
  }
  const std::string out_dir = argv[1];
  const std::uint64_t seed = argc == 3 ? std::stoull(argv[2]) : 7;
  std::filesystem::create_directories(out_dir);

  // Categories in uneven blocks; every 7th item gets a second category and
  // the last item none at all.
  const std::vector<std::string> category_names = {"bars",      "breakfast", "coffee",
                                                   "nightlife", "shopping",  "vegan"};
  const std::vector<int> block_ends = {40, 70, 95, 120, 140, 149};  // item 149 uncategorized
  std::vector<std::vector<int>> cats_of_item(kItems);
  for (int i = 0; i < kItems - 1; ++i) {
    int primary = 0;
    while (i >= block_ends[static_cast<std::size_t>(primary)]) ++primary;
    cats_of_item[static_cast<std::size_t>(i)].push_back(primary);
    if (i % 7 == 3) {
      const int secondary = (primary + 3) % 6;
      if (secondary != primary) cats_of_item[static_cast<std::size_t>(i)].push_back(secondary);
    }
  }

  // Two taste clusters. Cluster 0 leans bars/coffee/vegan, cluster 1 leans
  // breakfast/nightlife/shopping. Group labels follow the clusters.
  recfair::Rng cluster_rng(recfair::mix64(seed, 1));
  std::vector<int> cluster(kUsers);
  for (int u = 0; u < kUsers; ++u) cluster[static_cast<std::size_t>(u)] = static_cast<int>(cluster_rng.below(2));
  const std::vector<int> liked_by_cluster0 = {0, 2, 5};
  const std::vector<int> liked_by_cluster1 = {1, 3, 4};
  auto likes = [&](int u, int item) {
    if (item >= kItems - 1) return false;  // the uncategorized item
    const auto& liked = cluster[static_cast<std::size_t>(u)] == 0 ? liked_by_cluster0 : liked_by_cluster1;
    for (int c : cats_of_item[static_cast<std::size_t>(item)]) {
      for (int l : liked) {
        if (c == l) return true;
      }
    }
    return false;
  };

  // Items a cluster likes, for biased sampling.
  std::vector<std::vector<int>> pool(2);
  for (int i = 0; i < kItems; ++i) {
    for (int g = 0; g < 2; ++g) {
      const auto& liked = g == 0 ? liked_by_cluster0 : liked_by_cluster1;
      for (int c : cats_of_item[static_cast<std::size_t>(i)]) {
        if (std::find(liked.begin(), liked.end(), c) != liked.end()) {
          pool[static_cast<std::size_t>(g)].push_back(i);
          break;
        }
      }
    }
  }

  recfair::Rng rating_rng(recfair::mix64(seed, 2));
  std::vector<std::set<int>> rated(kUsers);
  std::vector<std::vector<std::pair<int, int>>> ratings(kUsers);  // (item, value)
  for (int u = 0; u < kUsers; ++u) {
    const int want = 20 + static_cast<int>(rating_rng.below(13));
    const auto& mine = pool[static_cast<std::size_t>(cluster[static_cast<std::size_t>(u)])];
    while (static_cast<int>(rated[static_cast<std::size_t>(u)].size()) < want) {
      int item;
      if (rating_rng.uniform() < 0.72) {
        item = mine[static_cast<std::size_t>(rating_rng.below(mine.size()))];
      } else {
        item = static_cast<int>(rating_rng.below(kItems));
      }
      if (!rated[static_cast<std::size_t>(u)].insert(item).second) continue;
      const int value = likes(u, item) ? 3 + static_cast<int>(rating_rng.below(3))
                                       : 1 + static_cast<int>(rating_rng.below(3));
      ratings[static_cast<std::size_t>(u)].push_back({item, value});
    }
  }
  // Every item must appear at least once so the catalog equals kItems.
  {
    std::vector<int> missing;
    std::vector<char> seen(kItems, 0);
    for (int u = 0; u < kUsers; ++u) {
      for (const auto& [item, value] : ratings[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(item)] = 1;
      }
    }
    for (int i = 0; i < kItems; ++i) {
      if (!seen[static_cast<std::size_t>(i)]) missing.push_back(i);
    }
    for (int item : missing) {
      for (;;) {
        const int u = static_cast<int>(rating_rng.below(kUsers));
        if (rated[static_cast<std::size_t>(u)].insert(item).second) {
          const int value = likes(u, item) ? 4 : 2;
          ratings[static_cast<std::size_t>(u)].push_back({item, value});
          break;
        }
      }
    }
  }

  // Trust edges lean heavily inside the taste clusters. A few statements
  // reference accounts that never rated anything.
  recfair::Rng trust_rng(recfair::mix64(seed, 3));
  std::set<std::pair<int, int>> edges;
  for (int u = 0; u < kUsers; ++u) {
    const int degree = static_cast<int>(trust_rng.below(9));
    for (int e = 0; e < degree; ++e) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const int v = static_cast<int>(trust_rng.below(kUsers));
        if (v == u) continue;
        const bool same = cluster[static_cast<std::size_t>(u)] == cluster[static_cast<std::size_t>(v)];
        if (!same && trust_rng.uniform() < 0.8) continue;
        if (edges.insert({u, v}).second) break;
      }
    }
  }

  // Groups: clusters map to labels; a handful of users stay unlabeled.
  const std::set<int> unlabeled = {24, 55, 83, 101, 117};

  {
    std::ofstream out(out_dir + "/ratings.csv");
    out << "user_id,item_id,rating\n";
    for (int u = 0; u < kUsers; ++u) {
      for (const auto& [item, value] : ratings[static_cast<std::size_t>(u)]) {
        out << user_id(u) << ',' << item_id(item) << ',' << value << '\n';
      }
    }
  }
  {
    std::ofstream out(out_dir + "/trust.csv");
    int row = 0;
    for (const auto& [a, b] : edges) {
      // Every tenth statement carries the optional value column.
      if (++row % 10 == 0) {
        out << user_id(a) << ',' << user_id(b) << ",1\n";
      } else {
        out << user_id(a) << ',' << user_id(b) << '\n';
      }
    }
    out << "ghost1," << user_id(9) << '\n';
    out << user_id(19) << ",ghost2\n";
    out << "ghost1,ghost2\n";
  }
  {
    std::ofstream out(out_dir + "/groups.csv");  // tab separated on purpose
    for (int u = 0; u < kUsers; ++u) {
      if (unlabeled.count(u)) continue;
      out << user_id(u) << '\t' << (cluster[static_cast<std::size_t>(u)] == 0 ? "west" : "east")
          << '\n';
    }
  }
  {
    std::ofstream out(out_dir + "/categories.csv");
    for (int i = 0; i < kItems; ++i) {
      for (int c : cats_of_item[static_cast<std::size_t>(i)]) {
        out << item_id(i) << ',' << category_names[static_cast<std::size_t>(c)] << '\n';
      }
    }
  }

  std::size_t total = 0;
  for (const auto& r : ratings) total += r.size();
  std::cout << "fixture written to " << out_dir << ": " << kUsers << " users, " << kItems
            << " items, " << total << " ratings, " << edges.size() + 3 << " trust statements\n";
  return 0;
}
