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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "recfair/dataset.hpp"
#include "recfair/errors.hpp"
#include "recfair/folds.hpp"
#include "recfair/metrics.hpp"
#include "recfair/models/registry.hpp"
#include "recfair/recommender.hpp"
#include "recfair/util.hpp"

namespace recfair {

// ---------------------------------------------------------------------------
// Sweep configuration
// ---------------------------------------------------------------------------

// Accuracy band "target:halfwidth". Runs whose mean ranking accuracy falls
// within [target - halfwidth, target + halfwidth] count as calibrated.
struct BandSpec {
  double target = 0;
  double halfwidth = 0;
};

inline BandSpec parse_band_spec(std::string_view text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("band '" + std::string(text) + "' is not of the form target:halfwidth");
  }
  auto target = parse_double(trim(text.substr(0, colon)));
  auto halfwidth = parse_double(trim(text.substr(colon + 1)));
  if (!target || !halfwidth) {
    throw ConfigError("band '" + std::string(text) + "' holds a non-numeric field");
  }
  if (*halfwidth < 0) throw ConfigError("band halfwidth must be non-negative");
  BandSpec band;
  band.target = *target;
  band.halfwidth = *halfwidth;
  return band;
}

// One algorithm section of a sweep: every key maps to the list of values
// to try; the grid is the cartesian product.
struct AlgorithmGrid {
  std::string algorithm;
  std::map<std::string, std::vector<std::string>> values;
};

struct SweepConfig {
  // [data]
  std::string ratings_path;
  std::string trust_path;      // may be empty: no trust network
  std::string groups_path;
  std::string categories_path;
  std::string protected_label;  // empty: smaller group is protected
  int folds = 5;
  std::uint64_t seed = 42;
  int list_size = 10;
  // [band] family -> accuracy band
  std::map<std::string, BandSpec> bands;
  // one section per algorithm, kept in file order
  std::vector<AlgorithmGrid> algorithms;
};

// Minimal INI subset: "[section]" headers, "key = value" pairs, comments
// starting with '#' or ';', values split on commas into grids. Sections
// named after algorithms carry hyperparameter grids; "data" and "band" are
// reserved.
inline SweepConfig parse_sweep_config(const std::string& text, const std::string& origin) {
  SweepConfig config;
  std::string section;
  AlgorithmGrid* grid = nullptr;
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_number;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(origin, line_number, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(origin, line_number, "empty section name");
      if (section == "data" || section == "band") {
        grid = nullptr;
      } else {
        model_family(section);  // throws on unknown algorithm names
        for (const AlgorithmGrid& existing : config.algorithms) {
          if (existing.algorithm == section) {
            throw ConfigError(origin, line_number, "duplicate section [" + section + "]");
          }
        }
        config.algorithms.push_back({section, {}});
        grid = &config.algorithms.back();
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin, line_number, "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(origin, line_number, "empty key");
    if (section.empty()) {
      throw ConfigError(origin, line_number, "'" + key + "' appears before any [section]");
    }
    if (section == "data") {
      if (key == "ratings") {
        config.ratings_path = value;
      } else if (key == "trust") {
        config.trust_path = value;
      } else if (key == "groups") {
        config.groups_path = value;
      } else if (key == "categories") {
        config.categories_path = value;
      } else if (key == "protected") {
        config.protected_label = value;
      } else if (key == "folds") {
        auto n = parse_int(value);
        if (!n || *n < 2) throw ConfigError(origin, line_number, "folds must be an integer >= 2");
        config.folds = static_cast<int>(*n);
      } else if (key == "seed") {
        auto n = parse_int(value);
        if (!n || *n < 0) throw ConfigError(origin, line_number, "seed must be a non-negative integer");
        config.seed = static_cast<std::uint64_t>(*n);
      } else if (key == "list_size") {
        auto n = parse_int(value);
        if (!n || *n < 1) throw ConfigError(origin, line_number, "list_size must be a positive integer");
        config.list_size = static_cast<int>(*n);
      } else {
        throw ConfigError(origin, line_number, "unknown [data] key '" + key + "'");
      }
    } else if (section == "band") {
      bool known = false;
      for (ModelFamily f : {ModelFamily::baseline, ModelFamily::neighborhood,
                            ModelFamily::factorization}) {
        if (key == family_name(f)) known = true;
      }
      if (!known) throw ConfigError(origin, line_number, "unknown family '" + key + "' in [band]");
      config.bands[key] = parse_band_spec(value);
    } else {
      // Split by hand instead of using split_list: empty segments such as
      // "5,,6" must be reported as config errors, not silently dropped.
      std::vector<std::string> parts;
      std::size_t start = 0;
      while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        std::string item(trim(std::string_view(value).substr(start, comma - start)));
        if (item.empty()) throw ConfigError(origin, line_number, "empty value in grid for '" + key + "'");
        parts.push_back(std::move(item));
        start = comma + 1;
      }
      if (!grid->values.emplace(key, std::move(parts)).second) {
        throw ConfigError(origin, line_number, "duplicate key '" + key + "' in [" + section + "]");
      }
    }
  }
  if (config.ratings_path.empty()) throw ConfigError(origin + ": [data] is missing 'ratings'");
  if (config.groups_path.empty()) throw ConfigError(origin + ": [data] is missing 'groups'");
  if (config.categories_path.empty()) throw ConfigError(origin + ": [data] is missing 'categories'");
  if (config.algorithms.empty()) throw ConfigError(origin + ": no algorithm sections");
  return config;
}

inline SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_sweep_config(text, path);
}

// ---------------------------------------------------------------------------
// Grid enumeration
// ---------------------------------------------------------------------------

struct GridPoint {
  std::string algorithm;
  Hyperparams params;
};

// Cartesian product per algorithm section, enumerated with the last sorted
// key varying fastest. The order is a function of the config alone, never
// of map iteration quirks, so ledgers enumerate identically everywhere.
inline std::vector<GridPoint> grid_points(const SweepConfig& config) {
  std::vector<GridPoint> points;
  for (const AlgorithmGrid& grid : config.algorithms) {
    std::vector<const std::string*> keys;
    std::vector<std::size_t> sizes;
    for (const auto& [key, values] : grid.values) {
      keys.push_back(&key);
      sizes.push_back(values.size());
    }
    std::vector<std::size_t> at(keys.size(), 0);
    while (true) {
      Hyperparams params;
      for (std::size_t k = 0; k < keys.size(); ++k) {
        params.set(*keys[k], grid.values.at(*keys[k])[at[k]]);
      }
      points.push_back({grid.algorithm, std::move(params)});
      std::size_t k = keys.size();
      while (k > 0) {
        --k;
        if (++at[k] < sizes[k]) break;
        at[k] = 0;
        if (k == 0) goto next_algorithm;
      }
      if (keys.empty()) break;
    }
  next_algorithm:;
  }
  return points;
}

// Construction is the cheap part of a model's life; building every grid
// point up front surfaces bad keys and bad values before any training.
inline void validate_grid(const std::vector<GridPoint>& points, bool have_trust) {
  if (points.empty()) throw ConfigError("the sweep grid is empty");
  for (const GridPoint& point : points) {
    make_model(point.algorithm, point.params);
    if (requires_trust(point.algorithm) && !have_trust) {
      throw ConfigError("algorithm '" + point.algorithm +
                        "' needs a trust network, but the sweep has none");
    }
  }
}

// ---------------------------------------------------------------------------
// Ledger records
// ---------------------------------------------------------------------------

// A run is one grid point trained and evaluated on one fold. Its file name
// is a digest of everything that determines its result, so re-running a
// sweep finds finished work by content, not by position.
inline std::string run_key(const std::string& dataset_digest, const SweepConfig& config,
                           const GridPoint& point, int fold) {
  std::string material = dataset_digest;
  material += "|protected=" + config.protected_label;
  material += "|folds=" + std::to_string(config.folds);
  material += "|seed=" + std::to_string(config.seed);
  material += "|n=" + std::to_string(config.list_size);
  material += "|" + point.algorithm;
  material += "|" + point.params.canonical();
  material += "|fold=" + std::to_string(fold);
  return hex64(fnv1a64(material));
}

struct LedgerCell {
  std::string group;
  std::string category;
  std::optional<double> pr_train, pr_rec;
  std::optional<double> bias_train, bias_rec;
};

struct RunRecord {
  std::string key;
  std::string algorithm;
  Hyperparams params;
  int fold = 0;
  std::string status;  // "ok" or "failed"
  std::string error;   // set when failed
  double ndcg = 0;
  double coverage = 0;
  double disparity = 0;
  double disparity_normalized = 0;
  std::vector<LedgerCell> cells;
};

namespace detail {

inline nlohmann::json json_optional(const std::optional<double>& value) {
  if (!value) return nullptr;
  return *value;
}

inline std::optional<double> optional_from_json(const nlohmann::json& value) {
  if (value.is_null()) return std::nullopt;
  return value.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const RunRecord& record) {
  nlohmann::json j;
  j["key"] = record.key;
  j["algorithm"] = record.algorithm;
  j["params"] = record.params.raw();
  j["fold"] = record.fold;
  j["status"] = record.status;
  if (record.status == "failed") {
    j["error"] = record.error;
    return j;
  }
  nlohmann::json metrics;
  metrics["ndcg"] = record.ndcg;
  metrics["coverage"] = record.coverage;
  metrics["disparity"] = record.disparity;
  metrics["disparity_normalized"] = record.disparity_normalized;
  nlohmann::json cells = nlohmann::json::array();
  for (const LedgerCell& cell : record.cells) {
    nlohmann::json c;
    c["group"] = cell.group;
    c["category"] = cell.category;
    c["pr_train"] = detail::json_optional(cell.pr_train);
    c["pr_rec"] = detail::json_optional(cell.pr_rec);
    c["bias_train"] = detail::json_optional(cell.bias_train);
    c["bias_rec"] = detail::json_optional(cell.bias_rec);
    cells.push_back(std::move(c));
  }
  metrics["cells"] = std::move(cells);
  j["metrics"] = std::move(metrics);
  return j;
}

inline RunRecord run_record_from_json(const nlohmann::json& j) {
  RunRecord record;
  record.key = j.at("key").get<std::string>();
  record.algorithm = j.at("algorithm").get<std::string>();
  record.params = Hyperparams(j.at("params").get<std::map<std::string, std::string>>());
  record.fold = j.at("fold").get<int>();
  record.status = j.at("status").get<std::string>();
  if (record.status == "failed") {
    record.error = j.at("error").get<std::string>();
    return record;
  }
  const nlohmann::json& metrics = j.at("metrics");
  record.ndcg = metrics.at("ndcg").get<double>();
  record.coverage = metrics.at("coverage").get<double>();
  record.disparity = metrics.at("disparity").get<double>();
  record.disparity_normalized = metrics.at("disparity_normalized").get<double>();
  for (const nlohmann::json& c : metrics.at("cells")) {
    LedgerCell cell;
    cell.group = c.at("group").get<std::string>();
    cell.category = c.at("category").get<std::string>();
    cell.pr_train = detail::optional_from_json(c.at("pr_train"));
    cell.pr_rec = detail::optional_from_json(c.at("pr_rec"));
    cell.bias_train = detail::optional_from_json(c.at("bias_train"));
    cell.bias_rec = detail::optional_from_json(c.at("bias_rec"));
    record.cells.push_back(std::move(cell));
  }
  return record;
}

namespace detail {

// Records never carry wall-clock state, and writes go through a rename so
// an interrupted sweep leaves either a finished record or nothing.
inline void write_text_atomically(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sweep execution
// ---------------------------------------------------------------------------

// The manifest pins everything a ledger depends on. Resuming into an
// output directory whose manifest differs is refused rather than merged.
inline nlohmann::json sweep_manifest(const SweepConfig& config, const Dataset& data,
                                     const FoldSplit& split,
                                     const std::vector<GridPoint>& points) {
  nlohmann::json j;
  nlohmann::json dataset;
  dataset["digest"] = data.report.digest;
  dataset["users"] = data.report.users;
  dataset["items"] = data.report.items;
  dataset["ratings"] = data.report.ratings;
  dataset["protected"] = data.report.protected_label;
  dataset["unprotected"] = data.report.unprotected_label;
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& [label, size] : data.report.group_sizes) {
    groups.push_back({{"label", label}, {"users", size}});
  }
  dataset["groups"] = std::move(groups);
  nlohmann::json categories = nlohmann::json::array();
  for (int c = 0; c < data.categories.category_count(); ++c) {
    categories.push_back({{"label", data.categories.category_label(c)},
                          {"items", data.categories.category_items(c).size()}});
  }
  dataset["categories"] = std::move(categories);
  j["dataset"] = std::move(dataset);

  nlohmann::json protocol;
  protocol["folds"] = config.folds;
  protocol["seed"] = config.seed;
  protocol["list_size"] = config.list_size;
  j["protocol"] = std::move(protocol);

  nlohmann::json bands = nlohmann::json::object();
  for (const auto& [family, band] : config.bands) {
    bands[family] = {{"target", band.target}, {"halfwidth", band.halfwidth}};
  }
  j["bands"] = std::move(bands);

  nlohmann::json folds = nlohmann::json::array();
  for (int fold = 0; fold < split.fold_count(); ++fold) {
    folds.push_back({{"fold", fold},
                     {"test_ratings", split.test_positions(fold).size()}});
  }
  j["folds"] = std::move(folds);

  nlohmann::json grid = nlohmann::json::array();
  for (const GridPoint& point : points) {
    grid.push_back({{"algorithm", point.algorithm}, {"params", point.params.raw()}});
  }
  j["grid"] = std::move(grid);
  return j;
}

struct SweepSummary {
  int total = 0;
  int executed = 0;
  int resumed = 0;
  int failed = 0;  // subset of executed whose training diverged
};

inline SweepSummary run_sweep(const SweepConfig& config, const std::string& out_dir, int jobs,
                              std::ostream* log = nullptr) {
  // Validate keys and value types before touching the dataset so a typo in the
  // config is reported even when the data paths are also wrong.
  const std::vector<GridPoint> points = grid_points(config);
  validate_grid(points, /*have_trust=*/true);

  Dataset data = load_dataset(config.ratings_path, config.trust_path, config.groups_path,
                              config.categories_path, LoadOptions{config.protected_label, ""});
  validate_grid(points, data.trust.edge_count() > 0);

  const FoldSplit split = kfold_split(data.ratings, config.folds, config.seed);
  std::vector<RatingMatrix> trains;
  std::vector<std::vector<std::vector<int>>> held;
  for (int fold = 0; fold < config.folds; ++fold) {
    trains.push_back(train_matrix(data.ratings, split, fold));
    held.push_back(test_items_by_user(data.ratings, split, fold));
  }

  const std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out / "runs");
  const nlohmann::json manifest = sweep_manifest(config, data, split, points);
  const std::string manifest_text = manifest.dump(2) + "\n";
  const std::filesystem::path manifest_path = out / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    if (detail::read_text(manifest_path) != manifest_text) {
      throw ConfigError("'" + out_dir + "' already holds a different sweep; refusing to mix ledgers");
    }
  } else {
    detail::write_text_atomically(manifest_path, manifest_text);
  }

  SweepSummary summary;
  summary.total = static_cast<int>(points.size()) * config.folds;
  int done = 0;
  for (const GridPoint& point : points) {
    for (int fold = 0; fold < config.folds; ++fold) {
      ++done;
      const std::string key = run_key(data.report.digest, config, point, fold);
      const std::filesystem::path record_path = out / "runs" / (key + ".json");
      if (std::filesystem::exists(record_path)) {
        ++summary.resumed;
        if (log) {
          *log << "[" << done << "/" << summary.total << "] " << point.algorithm << " {"
               << point.params.canonical() << "} fold " << fold << ": resumed\n";
        }
        continue;
      }

      RunRecord record;
      record.key = key;
      record.algorithm = point.algorithm;
      record.params = point.params;
      record.fold = fold;
      const RatingMatrix& train = trains[static_cast<std::size_t>(fold)];
      try {
        std::unique_ptr<Recommender> model = make_model(point.algorithm, point.params);
        TrainContext ctx;
        ctx.train = &train;
        ctx.trust = &data.trust;
        ctx.seed = mix64(config.seed, 0x666974ULL, static_cast<std::uint64_t>(fold));
        ctx.jobs = jobs;
        model->fit(ctx);
        RecommendationSet recs = top_n(*model, train, config.list_size);
        RunMetrics metrics = evaluate_run(train, data.groups, data.categories, recs,
                                          held[static_cast<std::size_t>(fold)]);
        record.status = "ok";
        record.ndcg = metrics.ndcg;
        record.coverage = metrics.coverage;
        record.disparity = metrics.disparity;
        record.disparity_normalized = metrics.disparity_normalized;
        for (const GroupCategoryStat& stat : metrics.group_category) {
          LedgerCell cell;
          cell.group = data.groups.group_label(stat.group);
          cell.category = data.categories.category_label(stat.category);
          cell.pr_train = stat.pr_train;
          cell.pr_rec = stat.pr_rec;
          cell.bias_train = stat.bias_train;
          cell.bias_rec = stat.bias_rec;
          record.cells.push_back(std::move(cell));
        }
      } catch (const ModelError& e) {
        // A diverging configuration is a result, not a crash: record it and
        // keep sweeping the rest of the grid.
        record.status = "failed";
        record.error = e.what();
        ++summary.failed;
      }
      detail::write_text_atomically(record_path, to_json(record).dump(2) + "\n");
      ++summary.executed;
      if (log) {
        *log << "[" << done << "/" << summary.total << "] " << point.algorithm << " {"
             << point.params.canonical() << "} fold " << fold << ": " << record.status;
        if (record.status == "ok") *log << " (ndcg " << format_double(record.ndcg) << ")";
        *log << "\n";
      }
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Reading a ledger back
// ---------------------------------------------------------------------------

struct Ledger {
  nlohmann::json manifest;
  std::vector<RunRecord> runs;  // sorted by (algorithm, params, fold)
};

inline Ledger load_ledger(const std::string& dir) {
  const std::filesystem::path root(dir);
  Ledger ledger;
  try {
    ledger.manifest = nlohmann::json::parse(detail::read_text(root / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + dir + "/manifest.json' is not valid JSON: " + e.what());
  }
  const std::filesystem::path runs = root / "runs";
  if (!std::filesystem::is_directory(runs)) {
    throw DataError("'" + dir + "' has no runs/ directory; not a sweep ledger");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(runs)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const std::filesystem::path& file : files) {
    try {
      RunRecord record = run_record_from_json(nlohmann::json::parse(detail::read_text(file)));
      if (file.stem().string() != record.key) {
        throw DataError("'" + file.string() + "' does not match its embedded key");
      }
      ledger.runs.push_back(std::move(record));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("'" + file.string() + "' is not a valid run record: " + e.what());
    }
  }
  std::sort(ledger.runs.begin(), ledger.runs.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
    const std::string pa = a.params.canonical(), pb = b.params.canonical();
    if (pa != pb) return pa < pb;
    return a.fold < b.fold;
  });
  return ledger;
}

// ---------------------------------------------------------------------------
// Aggregation across folds
// ---------------------------------------------------------------------------

struct AggregateCell {
  std::string group;
  std::string category;
  std::optional<double> pr_train, pr_rec;
  std::optional<double> bias_train, bias_rec;
  std::optional<double> disparity;  // relative bias change, from the mean biases
};

struct AggregateRun {
  std::string algorithm;
  std::string family;
  Hyperparams params;
  int folds_ok = 0;
  int folds_failed = 0;
  double ndcg = 0;
  double coverage = 0;
  double disparity = 0;
  double disparity_normalized = 0;
  std::vector<AggregateCell> cells;
};

namespace detail {

// Mean over the folds where the value is defined; undefined when it never is.
class OptionalMean {
 public:
  void add(const std::optional<double>& value) {
    if (!value) return;
    sum_ += *value;
    ++count_;
  }
  std::optional<double> mean() const {
    if (count_ == 0) return std::nullopt;
    return sum_ / static_cast<double>(count_);
  }

 private:
  double sum_ = 0;
  int count_ = 0;
};

}  // namespace detail

// Collapses per-fold records into one row per grid point. Scalar metrics
// average over the successful folds; per-cell bias disparity is computed
// from the averaged train-side and recommender-side biases.
inline std::vector<AggregateRun> aggregate_runs(const Ledger& ledger) {
  std::vector<AggregateRun> aggregates;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::map<std::size_t, std::vector<const RunRecord*>> records_of;
  for (const RunRecord& record : ledger.runs) {
    const std::pair<std::string, std::string> id{record.algorithm, record.params.canonical()};
    auto [it, inserted] = index.emplace(id, aggregates.size());
    if (inserted) {
      AggregateRun aggregate;
      aggregate.algorithm = record.algorithm;
      aggregate.family = family_name(model_family(record.algorithm));
      aggregate.params = record.params;
      aggregates.push_back(std::move(aggregate));
    }
    records_of[it->second].push_back(&record);
  }
  for (auto& [slot, records] : records_of) {
    AggregateRun& aggregate = aggregates[slot];
    std::vector<detail::OptionalMean> pr_train, pr_rec, bias_train, bias_rec;
    std::vector<std::pair<std::string, std::string>> cell_names;
    for (const RunRecord* record : records) {
      if (record->status != "ok") {
        ++aggregate.folds_failed;
        continue;
      }
      ++aggregate.folds_ok;
      aggregate.ndcg += record->ndcg;
      aggregate.coverage += record->coverage;
      aggregate.disparity += record->disparity;
      aggregate.disparity_normalized += record->disparity_normalized;
      if (cell_names.empty()) {
        for (const LedgerCell& cell : record->cells) {
          cell_names.push_back({cell.group, cell.category});
        }
        pr_train.resize(cell_names.size());
        pr_rec.resize(cell_names.size());
        bias_train.resize(cell_names.size());
        bias_rec.resize(cell_names.size());
      }
      if (record->cells.size() != cell_names.size()) {
        throw DataError("run '" + record->key + "' reports a different cell layout than its peers");
      }
      for (std::size_t c = 0; c < record->cells.size(); ++c) {
        const LedgerCell& cell = record->cells[c];
        if (cell.group != cell_names[c].first || cell.category != cell_names[c].second) {
          throw DataError("run '" + record->key + "' reports a different cell layout than its peers");
        }
        pr_train[c].add(cell.pr_train);
        pr_rec[c].add(cell.pr_rec);
        bias_train[c].add(cell.bias_train);
        bias_rec[c].add(cell.bias_rec);
      }
    }
    if (aggregate.folds_ok > 0) {
      const double n = static_cast<double>(aggregate.folds_ok);
      aggregate.ndcg /= n;
      aggregate.coverage /= n;
      aggregate.disparity /= n;
      aggregate.disparity_normalized /= n;
      for (std::size_t c = 0; c < cell_names.size(); ++c) {
        AggregateCell cell;
        cell.group = cell_names[c].first;
        cell.category = cell_names[c].second;
        cell.pr_train = pr_train[c].mean();
        cell.pr_rec = pr_rec[c].mean();
        cell.bias_train = bias_train[c].mean();
        cell.bias_rec = bias_rec[c].mean();
        cell.disparity = bias_disparity(cell.bias_train, cell.bias_rec);
        aggregate.cells.push_back(std::move(cell));
      }
    }
  }
  return aggregates;
}

// ---------------------------------------------------------------------------
// Equal-accuracy band selection and the accuracy/disparity frontier
// ---------------------------------------------------------------------------

struct BandChoice {
  std::string algorithm;
  std::size_t aggregate_index = 0;  // into the aggregates vector
  double distance = 0;              // |mean ndcg - band target|
  bool matched = false;             // distance <= halfwidth
};

struct BandSelection {
  std::string family;
  BandSpec band;
  std::vector<BandChoice> choices;  // one per algorithm of the family, sorted by name
};

// For each banded family, picks per algorithm the grid point whose mean
// ranking accuracy lands closest to the band target. Algorithms whose best
// point still falls outside the band stay listed, flagged unmatched, so a
// report never silently compares runs at different accuracy levels.
inline std::vector<BandSelection> select_equal_ndcg(const std::vector<AggregateRun>& aggregates,
                                                    const std::map<std::string, BandSpec>& bands) {
  std::vector<BandSelection> selections;
  for (const auto& [family, band] : bands) {
    BandSelection selection;
    selection.family = family;
    selection.band = band;
    std::map<std::string, BandChoice> best;
    for (std::size_t i = 0; i < aggregates.size(); ++i) {
      const AggregateRun& aggregate = aggregates[i];
      if (aggregate.family != family || aggregate.folds_ok == 0) continue;
      const double distance = std::abs(aggregate.ndcg - band.target);
      auto it = best.find(aggregate.algorithm);
      bool take = it == best.end() || distance < it->second.distance;
      if (it != best.end() && distance == it->second.distance) {
        // Deterministic tie: keep the earlier aggregate (sorted order).
        take = i < it->second.aggregate_index;
      }
      if (take) {
        BandChoice choice;
        choice.algorithm = aggregate.algorithm;
        choice.aggregate_index = i;
        choice.distance = distance;
        choice.matched = distance <= band.halfwidth;
        best[aggregate.algorithm] = choice;
      }
    }
    for (const auto& [algorithm, choice] : best) selection.choices.push_back(choice);
    selections.push_back(std::move(selection));
  }
  return selections;
}

// Indices of the aggregates on the accuracy/disparity frontier: no other
// successful run has both better-or-equal accuracy and smaller-or-equal
// normalized disparity (with one strictly better). Sorted by descending
// accuracy, ties by ascending disparity then stable order.
inline std::vector<std::size_t> pareto_frontier(const std::vector<AggregateRun>& aggregates) {
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < aggregates.size(); ++i) {
    if (aggregates[i].folds_ok == 0) continue;
    bool dominated = false;
    for (std::size_t j = 0; j < aggregates.size() && !dominated; ++j) {
      if (i == j || aggregates[j].folds_ok == 0) continue;
      const bool no_worse = aggregates[j].ndcg >= aggregates[i].ndcg &&
                            aggregates[j].disparity_normalized <= aggregates[i].disparity_normalized;
      const bool better = aggregates[j].ndcg > aggregates[i].ndcg ||
                          aggregates[j].disparity_normalized < aggregates[i].disparity_normalized;
      dominated = no_worse && better;
    }
    if (!dominated) frontier.push_back(i);
  }
  std::sort(frontier.begin(), frontier.end(), [&](std::size_t a, std::size_t b) {
    if (aggregates[a].ndcg != aggregates[b].ndcg) return aggregates[a].ndcg > aggregates[b].ndcg;
    if (aggregates[a].disparity_normalized != aggregates[b].disparity_normalized) {
      return aggregates[a].disparity_normalized < aggregates[b].disparity_normalized;
    }
    return a < b;
  });
  return frontier;
}

}  // namespace recfair
