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

// recfair: train recommenders over rating/trust data and audit the top-N
// output for group bias. Subcommands:
//   inspect  - load a dataset and print its audit counts
//   split    - materialize the per-user k-fold split as CSV files
//   sweep    - train and evaluate a hyperparameter grid into a ledger
//   report   - aggregate a ledger into CSV tables and SVG charts
//   verify   - rebuild a report from its ledger and byte-compare
//
// Exit codes: 0 success, 1 operational failure (verification mismatch,
// training crash), 2 configuration or data errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "recfair/dataset.hpp"
#include "recfair/folds.hpp"
#include "recfair/harness.hpp"
#include "recfair/report.hpp"

namespace {

struct InspectArgs {
  std::string ratings, trust, groups, categories;
  std::string protected_label;
};

int run_inspect(const InspectArgs& args) {
  recfair::Dataset data =
      recfair::load_dataset(args.ratings, args.trust, args.groups, args.categories,
                            recfair::LoadOptions{args.protected_label, ""});
  const recfair::LoadReport& r = data.report;
  std::cout << "users: " << r.users << "\n";
  std::cout << "items: " << r.items << "\n";
  std::cout << "ratings: " << r.ratings << "\n";
  std::cout << "rating_density: " << recfair::format_double(r.rating_density) << "\n";
  std::cout << "trust_edges: " << r.trust_edges << "\n";
  std::cout << "trustors: " << r.trustors << "\n";
  std::cout << "trustees: " << r.trustees << "\n";
  if (r.trust_density) {
    std::cout << "trust_density: " << recfair::format_double(*r.trust_density) << "\n";
  }
  std::cout << "quarantined_trust_ids: " << r.quarantined_trust_ids << "\n";
  std::cout << "trust_edges_outside_ratings: " << r.trust_edges_outside_ratings << "\n";
  for (const auto& [label, size] : r.group_sizes) {
    std::cout << "group " << label << ": " << size << "\n";
  }
  std::cout << "users_without_group: " << r.users_without_group << "\n";
  std::cout << "protected: " << r.protected_label << "\n";
  std::cout << "unprotected: " << r.unprotected_label << "\n";
  std::cout << "categories: " << r.categories << "\n";
  std::cout << "uncategorized_items: " << r.uncategorized_items << "\n";
  std::cout << "digest: " << r.digest << "\n";
  return 0;
}

struct SplitArgs {
  std::string ratings;
  std::string out;
  int folds = 5;
  std::uint64_t seed = 42;
};

void write_rating_rows(const std::string& path, const recfair::RatingMatrix& m,
                       const std::vector<recfair::RatingEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw recfair::DataError("cannot write '" + path + "'");
  out << "user_id,item_id,rating\n";
  for (const recfair::RatingEntry& e : entries) {
    out << m.users().label(e.user) << ',' << m.items().label(e.item) << ','
        << recfair::format_double(e.value) << '\n';
  }
}

int run_split(const SplitArgs& args) {
  recfair::RatingMatrix ratings = recfair::load_ratings(args.ratings);
  recfair::FoldSplit split = recfair::kfold_split(ratings, args.folds, args.seed);
  const std::filesystem::path root(args.out);
  nlohmann::json summary;
  summary["folds"] = args.folds;
  summary["seed"] = args.seed;
  summary["users"] = ratings.user_count();
  summary["items"] = ratings.item_count();
  summary["ratings"] = ratings.rating_count();
  nlohmann::json per_fold = nlohmann::json::array();
  for (int fold = 0; fold < args.folds; ++fold) {
    const std::filesystem::path dir = root / ("fold-" + std::to_string(fold));
    std::filesystem::create_directories(dir);
    recfair::RatingMatrix train = recfair::train_matrix(ratings, split, fold);
    write_rating_rows((dir / "train.csv").string(), ratings, train.entries());
    std::vector<recfair::RatingEntry> test;
    for (std::uint32_t pos : split.test_positions(fold)) {
      test.push_back(ratings.entries().at(pos));
    }
    write_rating_rows((dir / "test.csv").string(), ratings, test);
    per_fold.push_back({{"fold", fold},
                        {"train_ratings", train.rating_count()},
                        {"test_ratings", test.size()}});
    std::cout << "fold " << fold << ": " << train.rating_count() << " train, " << test.size()
              << " test\n";
  }
  summary["per_fold"] = std::move(per_fold);
  std::filesystem::create_directories(root);
  std::ofstream json_out(root / "split.json", std::ios::binary);
  if (!json_out) throw recfair::DataError("cannot write '" + (root / "split.json").string() + "'");
  json_out << summary.dump(2) << "\n";
  return 0;
}

struct SweepArgs {
  std::string config;
  std::string out;
  int jobs = 1;
};

int run_sweep_command(const SweepArgs& args) {
  recfair::SweepConfig config = recfair::load_sweep_config(args.config);
  recfair::SweepSummary summary = recfair::run_sweep(config, args.out, args.jobs, &std::cout);
  std::cout << "sweep: " << summary.total << " runs (" << summary.executed << " executed, "
            << summary.resumed << " resumed, " << summary.failed << " failed)\n";
  return 0;
}

struct ReportArgs {
  std::string ledger;
  std::string out;
  std::string band_model;  // factorization-family accuracy band, "target:halfwidth"
  std::string band_knn;    // neighborhood-family accuracy band
  std::string rank_by = "pr";
};

int run_report(const ReportArgs& args) {
  recfair::Ledger ledger = recfair::load_ledger(args.ledger);
  recfair::ReportOptions options;
  options.rank_by = args.rank_by;
  if (!args.band_model.empty()) {
    options.band_overrides["factorization"] = recfair::parse_band_spec(args.band_model);
  }
  if (!args.band_knn.empty()) {
    options.band_overrides["neighborhood"] = recfair::parse_band_spec(args.band_knn);
  }
  recfair::ReportManifest manifest = recfair::write_report(ledger, args.out, options);
  std::cout << "report: " << manifest.files.size() << " files in " << args.out << "\n";
  for (const recfair::ReportFile& file : manifest.files) {
    std::cout << "  " << file.path << " (" << file.bytes << " bytes, " << file.digest << ")\n";
  }
  return 0;
}

struct VerifyArgs {
  std::string ledger;
  std::string report;
};

int run_verify(const VerifyArgs& args) {
  std::vector<std::string> problems = recfair::verify_report(args.ledger, args.report);
  if (problems.empty()) {
    std::cout << "report verified: every file matches its ledger\n";
    return 0;
  }
  for (const std::string& problem : problems) std::cout << problem << "\n";
  std::cout << "verification failed: " << problems.size() << " problem(s)\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collaborative filtering with group bias auditing"};
  app.require_subcommand(1);

  InspectArgs inspect_args;
  CLI::App* inspect = app.add_subcommand("inspect", "load a dataset and print audit counts");
  inspect->add_option("--ratings", inspect_args.ratings, "ratings CSV")->required();
  inspect->add_option("--trust", inspect_args.trust, "trust edges CSV (optional)");
  inspect->add_option("--groups", inspect_args.groups, "user group CSV")->required();
  inspect->add_option("--categories", inspect_args.categories, "item category CSV")->required();
  inspect->add_option("--protected", inspect_args.protected_label,
                      "group label to treat as protected (default: the smaller group)");

  SplitArgs split_args;
  CLI::App* split = app.add_subcommand("split", "write the k-fold split as CSV files");
  split->add_option("--ratings", split_args.ratings, "ratings CSV")->required();
  split->add_option("--out", split_args.out, "output directory")->required();
  split->add_option("--folds", split_args.folds, "fold count")->check(CLI::Range(2, 1000));
  split->add_option("--seed", split_args.seed, "split seed");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "train and evaluate a grid into a ledger");
  sweep->add_option("--config", sweep_args.config, "sweep config (INI)")->required();
  sweep->add_option("--out", sweep_args.out, "ledger directory")->required();
  sweep->add_option("--jobs", sweep_args.jobs, "worker threads (0 = all cores)");

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "aggregate a ledger into tables and charts");
  report->add_option("--ledger", report_args.ledger, "ledger directory")->required();
  report->add_option("--out", report_args.out, "report directory")->required();
  report->add_option("--band-model", report_args.band_model,
                     "factorization accuracy band target:halfwidth (e.g. 0.023:0.001)");
  report->add_option("--band-knn", report_args.band_knn,
                     "neighborhood accuracy band target:halfwidth (e.g. 0.074:0.01)");
  report->add_option("--rank-by", report_args.rank_by, "category order within groups: pr or bias")
      ->check(CLI::IsMember({"pr", "bias"}));

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "rebuild a report and byte-compare it");
  verify->add_option("--ledger", verify_args.ledger, "ledger directory")->required();
  verify->add_option("--report", verify_args.report, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (inspect->parsed()) return run_inspect(inspect_args);
    if (split->parsed()) return run_split(split_args);
    if (sweep->parsed()) return run_sweep_command(sweep_args);
    if (report->parsed()) return run_report(report_args);
    if (verify->parsed()) return run_verify(verify_args);
    return 2;
  } catch (const recfair::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const recfair::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
