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
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "recfair/errors.hpp"
#include "recfair/util.hpp"

namespace recfair {

constexpr double kMinRating = 1.0;
constexpr double kMaxRating = 5.0;

// Maps external string ids to dense indices in first-seen order.
class IdIndex {
 public:
  int intern(std::string_view id) {
    auto it = index_.find(std::string(id));
    if (it != index_.end()) return it->second;
    int slot = static_cast<int>(labels_.size());
    labels_.emplace_back(id);
    index_.emplace(labels_.back(), slot);
    return slot;
  }

  std::optional<int> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& label(int index) const { return labels_.at(static_cast<std::size_t>(index)); }

  int size() const { return static_cast<int>(labels_.size()); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

struct RatingEntry {
  int user = 0;
  int item = 0;
  double value = 0;
};

// Immutable sparse rating matrix with both row (per-user) and column
// (per-item) views. Rows and columns are sorted by index so lookups can
// binary-search and iteration order is deterministic.
class RatingMatrix {
 public:
  RatingMatrix(std::shared_ptr<const IdIndex> users, std::shared_ptr<const IdIndex> items,
               std::vector<RatingEntry> entries)
      : users_(std::move(users)), items_(std::move(items)), entries_(std::move(entries)) {
    if (!users_ || !items_) throw Error("rating matrix requires id indexes");
    rows_.assign(static_cast<std::size_t>(users_->size()), {});
    cols_.assign(static_cast<std::size_t>(items_->size()), {});
    for (const RatingEntry& e : entries_) {
      if (e.user < 0 || e.user >= users_->size() || e.item < 0 || e.item >= items_->size()) {
        throw Error("rating entry index out of range");
      }
      if (e.value < kMinRating || e.value > kMaxRating) {
        throw Error("rating value " + format_double(e.value) + " outside [" +
                    format_double(kMinRating) + ", " + format_double(kMaxRating) + "]");
      }
      rows_[static_cast<std::size_t>(e.user)].push_back({e.item, e.value});
      cols_[static_cast<std::size_t>(e.item)].push_back({e.user, e.value});
    }
    for (auto& row : rows_) std::sort(row.begin(), row.end());
    for (auto& col : cols_) std::sort(col.begin(), col.end());
    for (std::size_t u = 0; u < rows_.size(); ++u) {
      const auto& row = rows_[u];
      for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j].first == row[j - 1].first) {
          throw Error("duplicate rating for user '" + users_->label(static_cast<int>(u)) +
                      "' item '" + items_->label(row[j].first) + "'");
        }
      }
    }
    double sum = 0;
    for (const RatingEntry& e : entries_) sum += e.value;
    global_mean_ = entries_.empty() ? 0.0 : sum / static_cast<double>(entries_.size());
    user_mean_.assign(rows_.size(), global_mean_);
    for (std::size_t u = 0; u < rows_.size(); ++u) {
      if (rows_[u].empty()) continue;
      double s = 0;
      for (const auto& [item, value] : rows_[u]) s += value;
      user_mean_[u] = s / static_cast<double>(rows_[u].size());
    }
  }

  int user_count() const { return users_->size(); }
  int item_count() const { return items_->size(); }
  std::size_t rating_count() const { return entries_.size(); }

  const std::vector<RatingEntry>& entries() const { return entries_; }

  const std::vector<std::pair<int, double>>& user_row(int user) const {
    return rows_.at(static_cast<std::size_t>(user));
  }

  const std::vector<std::pair<int, double>>& item_col(int item) const {
    return cols_.at(static_cast<std::size_t>(item));
  }

  std::optional<double> rating(int user, int item) const {
    const auto& row = rows_.at(static_cast<std::size_t>(user));
    auto it = std::lower_bound(row.begin(), row.end(), std::pair<int, double>{item, -1.0});
    if (it != row.end() && it->first == item) return it->second;
    return std::nullopt;
  }

  bool rated(int user, int item) const { return rating(user, item).has_value(); }

  // Mean of the user's ratings; global mean for users with none.
  double user_mean(int user) const { return user_mean_.at(static_cast<std::size_t>(user)); }

  double global_mean() const { return global_mean_; }

  // Keeps the id spaces, drops the entries whose positions are listed.
  // Positions index into entries() and must be sorted ascending.
  RatingMatrix without_entries(const std::vector<std::uint32_t>& drop_sorted) const {
    std::vector<RatingEntry> kept;
    kept.reserve(entries_.size() - drop_sorted.size());
    std::size_t next = 0;
    for (std::size_t pos = 0; pos < entries_.size(); ++pos) {
      if (next < drop_sorted.size() && drop_sorted[next] == pos) {
        ++next;
        continue;
      }
      kept.push_back(entries_[pos]);
    }
    if (next != drop_sorted.size()) throw Error("entry positions to drop are out of range or unsorted");
    return RatingMatrix(users_, items_, std::move(kept));
  }

  const IdIndex& users() const { return *users_; }
  const IdIndex& items() const { return *items_; }
  std::shared_ptr<const IdIndex> users_ptr() const { return users_; }
  std::shared_ptr<const IdIndex> items_ptr() const { return items_; }

 private:
  std::shared_ptr<const IdIndex> users_;
  std::shared_ptr<const IdIndex> items_;
  std::vector<RatingEntry> entries_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> user_mean_;
  double global_mean_ = 0;
};

// Implicit-feedback view of a rating matrix: T(u, i) = 1 iff u rated i.
// Non-owning; keep the source alive.
class BinaryView {
 public:
  explicit BinaryView(const RatingMatrix& source) : source_(&source) {}

  bool value(int user, int item) const { return source_->rated(user, item); }
  std::size_t ones() const { return source_->rating_count(); }
  const std::vector<std::pair<int, double>>& user_row(int user) const {
    return source_->user_row(user);
  }
  const RatingMatrix& source() const { return *source_; }

 private:
  const RatingMatrix* source_;
};

// Directed trust graph over the rating matrix's user index space. Edge
// endpoints that never appear in the ratings are quarantined: they get
// node indices past user_count() so the edges stay inspectable, but no
// model ever sees them as users.
class TrustGraph {
 public:
  TrustGraph(int known_users, std::vector<std::string> external_labels,
             std::vector<std::pair<int, int>> edges)
      : known_users_(known_users), external_labels_(std::move(external_labels)) {
    const int nodes = node_count();
    out_.assign(static_cast<std::size_t>(nodes), {});
    in_.assign(static_cast<std::size_t>(nodes), {});
    std::sort(edges.begin(), edges.end());
    for (std::size_t k = 0; k < edges.size(); ++k) {
      auto [a, b] = edges[k];
      if (a < 0 || a >= nodes || b < 0 || b >= nodes) throw Error("trust edge endpoint out of range");
      if (a == b) throw Error("self trust edge for node " + node_label(a));
      if (k > 0 && edges[k] == edges[k - 1]) {
        throw Error("duplicate trust edge " + node_label(a) + " -> " + node_label(b));
      }
      out_[static_cast<std::size_t>(a)].push_back(b);
      in_[static_cast<std::size_t>(b)].push_back(a);
      ++edge_count_;
      if (a >= known_users_ || b >= known_users_) ++edges_with_unknown_endpoint_;
    }
    for (const auto& adj : out_)
      if (!adj.empty()) ++distinct_trustors_;
    for (const auto& adj : in_)
      if (!adj.empty()) ++distinct_trustees_;
  }

  static TrustGraph empty(int known_users) { return TrustGraph(known_users, {}, {}); }

  int known_user_count() const { return known_users_; }
  int quarantined_node_count() const { return static_cast<int>(external_labels_.size()); }
  int node_count() const { return known_users_ + quarantined_node_count(); }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t edges_with_unknown_endpoint() const { return edges_with_unknown_endpoint_; }
  int distinct_trustors() const { return distinct_trustors_; }
  int distinct_trustees() const { return distinct_trustees_; }

  const std::vector<int>& trusts(int node) const { return out_.at(static_cast<std::size_t>(node)); }
  const std::vector<int>& trusted_by(int node) const { return in_.at(static_cast<std::size_t>(node)); }

  const std::string& external_label(int node) const {
    return external_labels_.at(static_cast<std::size_t>(node - known_users_));
  }

  std::string node_label(int node) const {
    return node < known_users_ ? ("#" + std::to_string(node)) : external_label(node);
  }

 private:
  int known_users_ = 0;
  std::vector<std::string> external_labels_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::size_t edge_count_ = 0;
  std::size_t edges_with_unknown_endpoint_ = 0;
  int distinct_trustors_ = 0;
  int distinct_trustees_ = 0;
};

// Partition of (a subset of) users into demographic groups, with one group
// designated protected and one unprotected.
class GroupAssignment {
 public:
  GroupAssignment(std::vector<int> group_of_user, std::vector<std::string> labels,
                  int protected_group, int unprotected_group)
      : group_of_user_(std::move(group_of_user)),
        labels_(std::move(labels)),
        protected_(protected_group),
        unprotected_(unprotected_group) {
    members_.assign(labels_.size(), {});
    for (std::size_t u = 0; u < group_of_user_.size(); ++u) {
      int g = group_of_user_[u];
      if (g < 0) {
        ++unlabeled_;
        continue;
      }
      members_.at(static_cast<std::size_t>(g)).push_back(static_cast<int>(u));
    }
    if (protected_ < 0 || protected_ >= group_count() || unprotected_ < 0 ||
        unprotected_ >= group_count() || protected_ == unprotected_) {
      throw Error("invalid protected/unprotected group designation");
    }
  }

  int group_count() const { return static_cast<int>(labels_.size()); }
  const std::string& group_label(int g) const { return labels_.at(static_cast<std::size_t>(g)); }

  std::optional<int> group_of(int user) const {
    int g = group_of_user_.at(static_cast<std::size_t>(user));
    if (g < 0) return std::nullopt;
    return g;
  }

  const std::vector<int>& members(int g) const { return members_.at(static_cast<std::size_t>(g)); }

  int protected_group() const { return protected_; }
  int unprotected_group() const { return unprotected_; }
  int unlabeled_count() const { return unlabeled_; }

  std::optional<int> find_group(std::string_view label) const {
    for (std::size_t g = 0; g < labels_.size(); ++g) {
      if (labels_[g] == label) return static_cast<int>(g);
    }
    return std::nullopt;
  }

 private:
  std::vector<int> group_of_user_;  // -1 when the user never appears in the groups file
  std::vector<std::string> labels_;
  std::vector<std::vector<int>> members_;
  int protected_ = 0;
  int unprotected_ = 0;
  int unlabeled_ = 0;
};

// Item -> categories map (many-to-many; items may also be uncategorized).
class CategoryMap {
 public:
  CategoryMap(int item_count, std::vector<std::vector<int>> categories_of_item,
              std::vector<std::string> labels)
      : categories_of_item_(std::move(categories_of_item)), labels_(std::move(labels)) {
    if (static_cast<int>(categories_of_item_.size()) != item_count) {
      throw Error("category map does not cover the item index space");
    }
    items_of_category_.assign(labels_.size(), {});
    for (int i = 0; i < item_count; ++i) {
      auto& cats = categories_of_item_[static_cast<std::size_t>(i)];
      std::sort(cats.begin(), cats.end());
      cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
      if (cats.empty()) uncategorized_.push_back(i);
      for (int c : cats) items_of_category_.at(static_cast<std::size_t>(c)).push_back(i);
    }
  }

  int category_count() const { return static_cast<int>(labels_.size()); }
  const std::string& category_label(int c) const { return labels_.at(static_cast<std::size_t>(c)); }

  const std::vector<int>& item_categories(int item) const {
    return categories_of_item_.at(static_cast<std::size_t>(item));
  }

  const std::vector<int>& category_items(int c) const {
    return items_of_category_.at(static_cast<std::size_t>(c));
  }

  const std::vector<int>& uncategorized_items() const { return uncategorized_; }

  std::optional<int> find_category(std::string_view label) const {
    for (std::size_t c = 0; c < labels_.size(); ++c) {
      if (labels_[c] == label) return static_cast<int>(c);
    }
    return std::nullopt;
  }

 private:
  std::vector<std::vector<int>> categories_of_item_;
  std::vector<std::string> labels_;
  std::vector<std::vector<int>> items_of_category_;
  std::vector<int> uncategorized_;
};

// Percentage densities. The trust density convention divides by
// (distinct trustors x distinct trustees) rather than all-user pairs:
// only accounts that participate in the trust network span its space.
inline double density(const RatingMatrix& m) {
  if (m.user_count() == 0 || m.item_count() == 0) throw Error("density undefined for empty id space");
  return 100.0 * static_cast<double>(m.rating_count()) /
         (static_cast<double>(m.user_count()) * static_cast<double>(m.item_count()));
}

inline double density(const TrustGraph& g) {
  if (g.distinct_trustors() == 0 || g.distinct_trustees() == 0) {
    throw Error("trust density undefined without trustors and trustees");
  }
  return 100.0 * static_cast<double>(g.edge_count()) /
         (static_cast<double>(g.distinct_trustors()) * static_cast<double>(g.distinct_trustees()));
}

struct LoadReport {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t ratings = 0;
  double rating_density = 0;
  std::size_t trust_edges = 0;
  std::size_t trustors = 0;
  std::size_t trustees = 0;
  std::optional<double> trust_density;
  std::size_t quarantined_trust_ids = 0;
  std::size_t trust_edges_outside_ratings = 0;
  std::vector<std::pair<std::string, std::size_t>> group_sizes;
  std::size_t users_without_group = 0;
  std::size_t group_rows_for_unknown_users = 0;
  std::string protected_label;
  std::string unprotected_label;
  std::size_t categories = 0;
  std::size_t uncategorized_items = 0;
  std::size_t category_rows_for_unknown_items = 0;
  std::string digest;
};

struct Dataset {
  RatingMatrix ratings;
  TrustGraph trust;
  GroupAssignment groups;
  CategoryMap categories;
  LoadReport report;
};

struct LoadOptions {
  std::string protected_label;    // empty: pick the smaller of the two groups
  std::string unprotected_label;  // empty: the other group
};

namespace detail {

struct RawFile {
  std::string path;
  std::vector<std::string> lines;  // blank lines removed, order kept, 1-based numbers preserved
  std::vector<std::size_t> numbers;
};

inline RawFile read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  RawFile raw;
  raw.path = path;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    raw.lines.push_back(line);
    raw.numbers.push_back(number);
  }
  return raw;
}

}  // namespace detail

// Ratings file: one interaction per line, `user_id  item_id  rating`
// separated by tabs or commas. A header line is auto-detected by a
// non-numeric third field.
inline RatingMatrix load_ratings(const std::string& path) {
  detail::RawFile raw = detail::read_lines(path);
  auto users = std::make_shared<IdIndex>();
  auto items = std::make_shared<IdIndex>();
  std::vector<RatingEntry> entries;
  std::size_t start = 0;
  if (!raw.lines.empty()) {
    auto fields = split_record(raw.lines[0]);
    if (fields.size() >= 3 && !parse_double(fields[2]).has_value()) start = 1;
  }
  for (std::size_t k = start; k < raw.lines.size(); ++k) {
    auto fields = split_record(raw.lines[k]);
    const std::size_t line = raw.numbers[k];
    if (fields.size() != 3) {
      throw DataError(path, line, "expected 3 fields (user, item, rating), found " +
                                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw DataError(path, line, "empty id field");
    auto value = parse_double(fields[2]);
    if (!value) throw DataError(path, line, "rating '" + std::string(fields[2]) + "' is not a number");
    if (*value < kMinRating || *value > kMaxRating) {
      throw DataError(path, line, "rating " + format_double(*value) + " outside [" +
                                      format_double(kMinRating) + ", " + format_double(kMaxRating) + "]");
    }
    entries.push_back({users->intern(fields[0]), items->intern(fields[1]), *value});
  }
  if (entries.empty()) throw DataError("'" + path + "' contains no interactions");
  // Duplicate detection happens here, before the matrix constructor, so the
  // error can report the offending line, not just the pair.
  {
    std::vector<std::size_t> order(entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const RatingEntry& x = entries[a];
      const RatingEntry& y = entries[b];
      if (x.user != y.user) return x.user < y.user;
      if (x.item != y.item) return x.item < y.item;
      return a < b;
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
      const RatingEntry& x = entries[order[i - 1]];
      const RatingEntry& y = entries[order[i]];
      if (x.user == y.user && x.item == y.item) {
        throw DataError(path, raw.numbers[start + order[i]],
                        "duplicate rating for user '" + users->label(y.user) + "' item '" +
                            items->label(y.item) + "'");
      }
    }
  }
  return RatingMatrix(std::move(users), std::move(items), std::move(entries));
}

// Trust file: `trustor_id  trustee_id [value]`; when the value column is
// present it must be 1 (binary trust statements). Unknown ids are kept as
// quarantined nodes. Self loops and duplicate statements are rejected.
inline TrustGraph load_trust(const std::string& path, const IdIndex& users) {
  detail::RawFile raw = detail::read_lines(path);
  IdIndex external;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::pair<std::pair<int, int>, std::size_t>> seen;
  std::size_t start = 0;
  if (!raw.lines.empty()) {
    auto fields = split_record(raw.lines[0]);
    if (fields.size() >= 3 && !parse_double(fields[2]).has_value()) start = 1;
  }
  auto resolve = [&](std::string_view id) {
    if (auto known = users.find(id)) return *known;
    return users.size() + external.intern(id);
  };
  for (std::size_t k = start; k < raw.lines.size(); ++k) {
    auto fields = split_record(raw.lines[k]);
    const std::size_t line = raw.numbers[k];
    if (fields.size() != 2 && fields.size() != 3) {
      throw DataError(path, line, "expected 2 or 3 fields (trustor, trustee[, value]), found " +
                                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw DataError(path, line, "empty id field");
    if (fields.size() == 3) {
      auto value = parse_double(fields[2]);
      if (!value || *value != 1.0) {
        throw DataError(path, line, "trust value '" + std::string(fields[2]) + "' must be 1");
      }
    }
    if (fields[0] == fields[1]) {
      throw DataError(path, line, "self trust statement for '" + std::string(fields[0]) + "'");
    }
    int a = resolve(fields[0]);
    int b = resolve(fields[1]);
    seen.push_back({{a, b}, line});
    edges.push_back({a, b});
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 1; i < seen.size(); ++i) {
    if (seen[i].first == seen[i - 1].first) {
      throw DataError(path, seen[i].second, "duplicate trust statement");
    }
  }
  std::vector<std::string> external_labels;
  external_labels.reserve(static_cast<std::size_t>(external.size()));
  for (int i = 0; i < external.size(); ++i) external_labels.push_back(external.label(i));
  return TrustGraph(users.size(), std::move(external_labels), std::move(edges));
}

// Groups file: `user_id  group_label`. Users absent from the file stay
// unlabeled; rows for ids absent from the ratings are counted and dropped.
// Exactly two distinct labels must remain in use. When no explicit
// designation is given, the smaller group is treated as protected
// (ties broken by label order).
inline GroupAssignment load_groups(const std::string& path, const IdIndex& users,
                                   const LoadOptions& options, std::size_t* unknown_rows) {
  detail::RawFile raw = detail::read_lines(path);
  std::vector<int> group_of_user(static_cast<std::size_t>(users.size()), -1);
  std::vector<std::string> labels;
  std::size_t unknown = 0;
  auto label_index = [&](std::string_view label) {
    for (std::size_t g = 0; g < labels.size(); ++g) {
      if (labels[g] == label) return static_cast<int>(g);
    }
    labels.emplace_back(label);
    return static_cast<int>(labels.size() - 1);
  };
  for (std::size_t k = 0; k < raw.lines.size(); ++k) {
    auto fields = split_record(raw.lines[k]);
    const std::size_t line = raw.numbers[k];
    if (fields.size() != 2) {
      throw DataError(path, line, "expected 2 fields (user, group), found " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw DataError(path, line, "empty field");
    auto user = users.find(fields[0]);
    if (!user) {
      ++unknown;
      continue;
    }
    int g = label_index(fields[1]);
    int& slot = group_of_user[static_cast<std::size_t>(*user)];
    if (slot >= 0 && slot != g) {
      throw DataError(path, line, "conflicting group for user '" + std::string(fields[0]) + "'");
    }
    slot = g;
  }
  if (unknown_rows) *unknown_rows = unknown;
  std::vector<std::size_t> sizes(labels.size(), 0);
  for (int g : group_of_user) {
    if (g >= 0) ++sizes[static_cast<std::size_t>(g)];
  }
  std::vector<int> in_use;
  for (std::size_t g = 0; g < labels.size(); ++g) {
    if (sizes[g] > 0) in_use.push_back(static_cast<int>(g));
  }
  if (in_use.size() != 2) {
    throw DataError("'" + path + "' must define exactly 2 groups over rated users, found " +
                    std::to_string(in_use.size()));
  }
  int prot, unprot;
  if (!options.protected_label.empty()) {
    int g0 = in_use[0], g1 = in_use[1];
    if (labels[static_cast<std::size_t>(g0)] == options.protected_label) {
      prot = g0;
    } else if (labels[static_cast<std::size_t>(g1)] == options.protected_label) {
      prot = g1;
    } else {
      throw DataError("protected group '" + options.protected_label + "' not present in '" + path + "'");
    }
    unprot = (prot == g0) ? g1 : g0;
    if (!options.unprotected_label.empty() &&
        labels[static_cast<std::size_t>(unprot)] != options.unprotected_label) {
      throw DataError("unprotected group '" + options.unprotected_label + "' not present in '" + path + "'");
    }
  } else {
    // Smaller group is protected; tie broken by first-seen label order.
    int g0 = in_use[0], g1 = in_use[1];
    prot = sizes[static_cast<std::size_t>(g1)] < sizes[static_cast<std::size_t>(g0)] ? g1 : g0;
    unprot = (prot == g0) ? g1 : g0;
  }
  return GroupAssignment(std::move(group_of_user), std::move(labels), prot, unprot);
}

// Categories file: `item_id  category_label`, repeated lines add more
// categories to the same item. Rows for unknown items are counted and
// dropped; duplicates of the same (item, category) pair are rejected.
inline CategoryMap load_categories(const std::string& path, const IdIndex& items,
                                   std::size_t* unknown_rows) {
  detail::RawFile raw = detail::read_lines(path);
  std::vector<std::vector<int>> cats_of_item(static_cast<std::size_t>(items.size()));
  std::vector<std::string> labels;
  std::size_t unknown = 0;
  auto label_index = [&](std::string_view label) {
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (labels[c] == label) return static_cast<int>(c);
    }
    labels.emplace_back(label);
    return static_cast<int>(labels.size() - 1);
  };
  for (std::size_t k = 0; k < raw.lines.size(); ++k) {
    auto fields = split_record(raw.lines[k]);
    const std::size_t line = raw.numbers[k];
    if (fields.size() != 2) {
      throw DataError(path, line, "expected 2 fields (item, category), found " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw DataError(path, line, "empty field");
    auto item = items.find(fields[0]);
    if (!item) {
      ++unknown;
      continue;
    }
    int c = label_index(fields[1]);
    auto& cats = cats_of_item[static_cast<std::size_t>(*item)];
    if (std::find(cats.begin(), cats.end(), c) != cats.end()) {
      throw DataError(path, line, "duplicate category '" + std::string(fields[1]) + "' for item '" +
                                      std::string(fields[0]) + "'");
    }
    cats.push_back(c);
  }
  if (unknown_rows) *unknown_rows = unknown;
  if (labels.empty()) throw DataError("'" + path + "' defines no categories");
  return CategoryMap(items.size(), std::move(cats_of_item), std::move(labels));
}

// Content digest over the canonical form of all four inputs. Stable across
// reload; ledger records bind to it.
inline std::string dataset_digest(const RatingMatrix& ratings, const TrustGraph& trust,
                                  const GroupAssignment& groups, const CategoryMap& categories) {
  std::uint64_t h = fnv1a64("recfair-dataset-v1");
  auto feed = [&h](std::string_view text) { h = fnv1a64(text, h); };
  feed("|ratings|");
  for (const RatingEntry& e : ratings.entries()) {
    feed(ratings.users().label(e.user));
    feed("\t");
    feed(ratings.items().label(e.item));
    feed("\t");
    feed(format_double(e.value));
    feed("\n");
  }
  feed("|trust|");
  for (int a = 0; a < trust.node_count(); ++a) {
    std::string left = a < trust.known_user_count() ? ratings.users().label(a) : trust.external_label(a);
    for (int b : trust.trusts(a)) {
      feed(left);
      feed("\t");
      feed(b < trust.known_user_count() ? ratings.users().label(b) : trust.external_label(b));
      feed("\n");
    }
  }
  feed("|groups|");
  for (int u = 0; u < ratings.user_count(); ++u) {
    for (int g = 0; g < groups.group_count(); ++g) {
      const auto& m = groups.members(g);
      if (std::binary_search(m.begin(), m.end(), u)) {
        feed(ratings.users().label(u));
        feed("\t");
        feed(groups.group_label(g));
        feed("\n");
      }
    }
  }
  feed("|categories|");
  for (int i = 0; i < ratings.item_count(); ++i) {
    for (int c : categories.item_categories(i)) {
      feed(ratings.items().label(i));
      feed("\t");
      feed(categories.category_label(c));
      feed("\n");
    }
  }
  return hex64(h);
}

inline Dataset load_dataset(const std::string& ratings_path, const std::string& trust_path,
                            const std::string& groups_path, const std::string& categories_path,
                            const LoadOptions& options = {}) {
  RatingMatrix ratings = load_ratings(ratings_path);
  // An empty trust path means the dataset simply has no trust network.
  TrustGraph trust = trust_path.empty() ? TrustGraph::empty(ratings.user_count())
                                        : load_trust(trust_path, ratings.users());
  std::size_t unknown_group_rows = 0;
  GroupAssignment groups = load_groups(groups_path, ratings.users(), options, &unknown_group_rows);
  std::size_t unknown_category_rows = 0;
  CategoryMap categories = load_categories(categories_path, ratings.items(), &unknown_category_rows);

  LoadReport report;
  report.users = static_cast<std::size_t>(ratings.user_count());
  report.items = static_cast<std::size_t>(ratings.item_count());
  report.ratings = ratings.rating_count();
  report.rating_density = density(ratings);
  report.trust_edges = trust.edge_count();
  report.trustors = static_cast<std::size_t>(trust.distinct_trustors());
  report.trustees = static_cast<std::size_t>(trust.distinct_trustees());
  if (trust.distinct_trustors() > 0 && trust.distinct_trustees() > 0) {
    report.trust_density = density(trust);
  }
  report.quarantined_trust_ids = static_cast<std::size_t>(trust.quarantined_node_count());
  report.trust_edges_outside_ratings = trust.edges_with_unknown_endpoint();
  for (int g = 0; g < groups.group_count(); ++g) {
    if (!groups.members(g).empty()) {
      report.group_sizes.push_back({groups.group_label(g), groups.members(g).size()});
    }
  }
  report.users_without_group = static_cast<std::size_t>(groups.unlabeled_count());
  report.group_rows_for_unknown_users = unknown_group_rows;
  report.protected_label = groups.group_label(groups.protected_group());
  report.unprotected_label = groups.group_label(groups.unprotected_group());
  report.categories = static_cast<std::size_t>(categories.category_count());
  report.uncategorized_items = categories.uncategorized_items().size();
  report.category_rows_for_unknown_items = unknown_category_rows;
  report.digest = dataset_digest(ratings, trust, groups, categories);

  return Dataset{std::move(ratings), std::move(trust), std::move(groups), std::move(categories),
                 std::move(report)};
}

// Writes the canonical form the digest is computed over. Reloading a saved
// dataset reproduces identical structures and digest.
inline void save_dataset(const Dataset& data, const std::string& ratings_path,
                         const std::string& trust_path, const std::string& groups_path,
                         const std::string& categories_path) {
  const RatingMatrix& m = data.ratings;
  {
    std::ofstream out(ratings_path);
    if (!out) throw DataError("cannot write '" + ratings_path + "'");
    out << "user_id,item_id,rating\n";
    for (const RatingEntry& e : m.entries()) {
      out << m.users().label(e.user) << ',' << m.items().label(e.item) << ','
          << format_double(e.value) << '\n';
    }
  }
  {
    std::ofstream out(trust_path);
    if (!out) throw DataError("cannot write '" + trust_path + "'");
    const TrustGraph& g = data.trust;
    for (int a = 0; a < g.node_count(); ++a) {
      std::string left = a < g.known_user_count() ? m.users().label(a) : g.external_label(a);
      for (int b : g.trusts(a)) {
        out << left << ','
            << (b < g.known_user_count() ? m.users().label(b) : g.external_label(b)) << ",1\n";
      }
    }
  }
  {
    std::ofstream out(groups_path);
    if (!out) throw DataError("cannot write '" + groups_path + "'");
    for (int u = 0; u < m.user_count(); ++u) {
      if (auto g = data.groups.group_of(u)) {
        out << m.users().label(u) << ',' << data.groups.group_label(*g) << '\n';
      }
    }
  }
  {
    std::ofstream out(categories_path);
    if (!out) throw DataError("cannot write '" + categories_path + "'");
    for (int i = 0; i < m.item_count(); ++i) {
      for (int c : data.categories.item_categories(i)) {
        out << m.items().label(i) << ',' << data.categories.category_label(c) << '\n';
      }
    }
  }
}

}  // namespace recfair
