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
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "recfair/harness.hpp"
#include "recfair/util.hpp"

namespace recfair {

struct ReportOptions {
  std::map<std::string, BandSpec> band_overrides;  // merged over the ledger's bands
  std::string rank_by = "pr";                      // "pr" or "bias": category order in tables
};

struct ReportFile {
  std::string path;   // relative to the report directory
  std::size_t bytes = 0;
  std::string digest;  // fnv1a64 of the content
};

struct ReportManifest {
  std::map<std::string, BandSpec> bands;  // effective bands used
  std::string rank_by;
  std::vector<ReportFile> files;
};

namespace detail {

// CSV field with RFC-style quoting; numbers never need it, labels might.
inline std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

inline std::string csv_optional(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

// Hyperparameters joined with ';' so CSV cells stay comma-free.
inline std::string params_text(const Hyperparams& params) {
  std::string out;
  for (const auto& [key, value] : params.raw()) {
    if (!out.empty()) out += ';';
    out += key + "=" + value;
  }
  return out;
}

struct RankedCell {
  const AggregateCell* cell = nullptr;
  double rank_value = 0;
  bool ranked = false;
};

// Rows of one (run, group) block, ordered by descending train-side
// preference (or bias), with undefined values last and label ties stable.
inline std::vector<const AggregateCell*> ranked_cells(const AggregateRun& run,
                                                      const std::string& group,
                                                      const std::string& rank_by) {
  std::vector<RankedCell> rows;
  for (const AggregateCell& cell : run.cells) {
    if (cell.group != group) continue;
    RankedCell row;
    row.cell = &cell;
    const std::optional<double>& key = rank_by == "bias" ? cell.bias_train : cell.pr_train;
    row.ranked = key.has_value();
    row.rank_value = key.value_or(0);
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const RankedCell& a, const RankedCell& b) {
    if (a.ranked != b.ranked) return a.ranked;
    if (a.ranked && a.rank_value != b.rank_value) return a.rank_value > b.rank_value;
    return a.cell->category < b.cell->category;
  });
  std::vector<const AggregateCell*> out;
  for (const RankedCell& row : rows) out.push_back(row.cell);
  return out;
}

// ---------------------------------------------------------------------------
// Tiny deterministic SVG canvas
// ---------------------------------------------------------------------------

class SvgCanvas {
 public:
  SvgCanvas(double width, double height) : width_(width), height_(height) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + format_double(width) +
             " " + format_double(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    body_ += "<rect x=\"0\" y=\"0\" width=\"" + format_double(width) + "\" height=\"" +
             format_double(height) + "\" fill=\"white\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& color,
            double stroke = 1.0) {
    body_ += "<line x1=\"" + format_double(x1) + "\" y1=\"" + format_double(y1) + "\" x2=\"" +
             format_double(x2) + "\" y2=\"" + format_double(y2) + "\" stroke=\"" + color +
             "\" stroke-width=\"" + format_double(stroke) + "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += "<rect x=\"" + format_double(x) + "\" y=\"" + format_double(y) + "\" width=\"" +
             format_double(w) + "\" height=\"" + format_double(h) + "\" fill=\"" + fill + "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& fill) {
    body_ += "<circle cx=\"" + format_double(x) + "\" cy=\"" + format_double(y) + "\" r=\"" +
             format_double(r) + "\" fill=\"" + fill + "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& points, const std::string& color) {
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i) body_ += ' ';
      body_ += format_double(points[i].first) + "," + format_double(points[i].second);
    }
    body_ += "\"/>\n";
  }

  void text(double x, double y, const std::string& content, const std::string& anchor = "start",
            double size = 11, const std::string& color = "#333") {
    body_ += "<text x=\"" + format_double(x) + "\" y=\"" + format_double(y) + "\" text-anchor=\"" +
             anchor + "\" font-size=\"" + format_double(size) + "\" fill=\"" + color + "\">" +
             escape(content) + "</text>\n";
  }

  std::string finish() const { return body_ + "</svg>\n"; }

  double width() const { return width_; }
  double height() const { return height_; }

 private:
  static std::string escape(const std::string& raw) {
    std::string out;
    for (char c : raw) {
      switch (c) {
        case '&':
          out += "&amp;";
          break;
        case '<':
          out += "&lt;";
          break;
        case '>':
          out += "&gt;";
          break;
        default:
          out += c;
      }
    }
    return out;
  }

  double width_, height_;
  std::string body_;
};

// Linear [lo, hi] -> [a, b] mapping for chart axes.
struct AxisScale {
  double lo = 0, hi = 1, a = 0, b = 1;
  double at(double v) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

inline AxisScale make_scale(double lo, double hi, double a, double b) {
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = (hi - lo) * 0.08;
  return AxisScale{lo - pad, hi + pad, a, b};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chart builders
// ---------------------------------------------------------------------------

// Bar chart of per-category bias disparity for every band-selected run;
// one bar group per category, one bar per user group.
inline std::string bias_disparity_chart(const std::vector<AggregateRun>& aggregates,
                                        const std::vector<BandSelection>& selections,
                                        const std::string& unprotected,
                                        const std::string& protected_label,
                                        const std::string& rank_by) {
  struct Bar {
    std::string label;
    std::string color;
    std::optional<double> value;
  };
  struct Block {
    std::string title;
    std::vector<Bar> bars;
  };
  std::vector<Block> blocks;
  const std::string color_u = "#4878a8";  // unprotected
  const std::string color_p = "#c45850";  // protected
  for (const BandSelection& selection : selections) {
    for (const BandChoice& choice : selection.choices) {
      if (!choice.matched) continue;
      const AggregateRun& run = aggregates[choice.aggregate_index];
      Block block;
      block.title = run.algorithm;
      for (const AggregateCell* cell : detail::ranked_cells(run, unprotected, rank_by)) {
        block.bars.push_back({cell->category, color_u, cell->disparity});
      }
      // Interleave the protected group's bar next to the same category.
      std::vector<Bar> merged;
      for (const Bar& bar : block.bars) {
        merged.push_back(bar);
        for (const AggregateCell& cell : run.cells) {
          if (cell.group == protected_label && cell.category == bar.label) {
            merged.push_back({cell.category, color_p, cell.disparity});
          }
        }
      }
      block.bars = std::move(merged);
      blocks.push_back(std::move(block));
    }
  }

  detail::SvgCanvas svg(960, 420);
  const double left = 56, right = 16, top = 40, bottom = 64;
  svg.text(16, 22, "Bias disparity of band-selected runs by category", "start", 14, "#111");
  svg.text(svg.width() - right, 22, unprotected, "end", 11, color_u);
  svg.text(svg.width() - right, 36, protected_label, "end", 11, color_p);

  double lo = 0, hi = 0;
  std::size_t total_bars = 0;
  for (const Block& block : blocks) {
    for (const Bar& bar : block.bars) {
      if (bar.value) {
        lo = std::min(lo, *bar.value);
        hi = std::max(hi, *bar.value);
      }
      ++total_bars;
    }
  }
  detail::AxisScale y = detail::make_scale(lo, hi, svg.height() - bottom, top);
  svg.line(left, y.at(y.lo), left, y.at(y.hi), "#888");
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = y.lo + (y.hi - y.lo) * tick / 4.0;
    svg.line(left - 4, y.at(v), svg.width() - right, y.at(v), tick == 0 ? "#888" : "#e5e5e5");
    svg.text(left - 8, y.at(v) + 4, format_double(v), "end", 10, "#555");
  }
  if (total_bars == 0) {
    svg.text(svg.width() / 2, svg.height() / 2, "no runs matched the requested bands", "middle",
             13, "#777");
    return svg.finish();
  }
  const double span = svg.width() - left - right;
  const double slot = span / static_cast<double>(total_bars + blocks.size());
  double x = left + slot / 2;
  const double zero_y = y.at(0);
  svg.line(left, zero_y, svg.width() - right, zero_y, "#888");
  for (const Block& block : blocks) {
    const double block_start = x;
    for (const Bar& bar : block.bars) {
      if (bar.value) {
        const double vy = y.at(*bar.value);
        svg.rect(x, std::min(vy, zero_y), slot * 0.85, std::max(1.0, std::abs(vy - zero_y)),
                 bar.color);
      } else {
        svg.text(x + slot * 0.4, zero_y - 4, "n/a", "middle", 9, "#999");
      }
      if (bar.color == color_p) {
        svg.text(x, svg.height() - bottom + 14, bar.label, "start", 9, "#555");
      }
      x += slot;
    }
    svg.text((block_start + x) / 2, svg.height() - bottom + 34, block.title, "middle", 12, "#111");
    x += slot;
  }
  return svg.finish();
}

// Accuracy/disparity scatter with the frontier drawn through the
// non-dominated points.
inline std::string tradeoff_chart(const std::vector<AggregateRun>& aggregates,
                                  const std::vector<std::size_t>& frontier) {
  detail::SvgCanvas svg(720, 420);
  const double left = 64, right = 16, top = 40, bottom = 48;
  svg.text(16, 22, "Ranking accuracy vs normalized disparity", "start", 14, "#111");

  std::vector<std::size_t> shown;
  for (std::size_t i = 0; i < aggregates.size(); ++i) {
    if (aggregates[i].folds_ok > 0) shown.push_back(i);
  }
  if (shown.empty()) {
    svg.text(svg.width() / 2, svg.height() / 2, "no successful runs", "middle", 13, "#777");
    return svg.finish();
  }
  double xlo = aggregates[shown[0]].ndcg, xhi = xlo;
  double ylo = aggregates[shown[0]].disparity_normalized, yhi = ylo;
  for (std::size_t i : shown) {
    xlo = std::min(xlo, aggregates[i].ndcg);
    xhi = std::max(xhi, aggregates[i].ndcg);
    ylo = std::min(ylo, aggregates[i].disparity_normalized);
    yhi = std::max(yhi, aggregates[i].disparity_normalized);
  }
  detail::AxisScale x = detail::make_scale(xlo, xhi, left, svg.width() - right);
  detail::AxisScale y = detail::make_scale(ylo, yhi, svg.height() - bottom, top);
  svg.line(left, y.at(y.lo), left, y.at(y.hi), "#888");
  svg.line(x.at(x.lo), svg.height() - bottom, x.at(x.hi), svg.height() - bottom, "#888");
  for (int tick = 0; tick <= 4; ++tick) {
    const double vx = x.lo + (x.hi - x.lo) * tick / 4.0;
    const double vy = y.lo + (y.hi - y.lo) * tick / 4.0;
    svg.text(x.at(vx), svg.height() - bottom + 16, format_double(vx), "middle", 9, "#555");
    svg.text(left - 8, y.at(vy) + 3, format_double(vy), "end", 9, "#555");
  }
  svg.text((left + svg.width() - right) / 2, svg.height() - 8, "mean ndcg", "middle", 11, "#333");

  static const std::map<std::string, std::string> family_colors = {
      {"baseline", "#999999"}, {"neighborhood", "#4878a8"}, {"factorization", "#c45850"}};
  std::vector<std::pair<double, double>> path;
  for (std::size_t i : frontier) {
    path.push_back({x.at(aggregates[i].ndcg), y.at(aggregates[i].disparity_normalized)});
  }
  if (path.size() > 1) svg.polyline(path, "#70ad70");
  for (std::size_t i : shown) {
    const AggregateRun& run = aggregates[i];
    const auto color = family_colors.find(run.family);
    svg.circle(x.at(run.ndcg), y.at(run.disparity_normalized), 4,
               color == family_colors.end() ? "#333" : color->second);
  }
  for (std::size_t i : frontier) {
    const AggregateRun& run = aggregates[i];
    svg.text(x.at(run.ndcg) + 6, y.at(run.disparity_normalized) - 6, run.algorithm, "start", 9,
             "#333");
  }
  double legend_y = top;
  for (const auto& [family, color] : family_colors) {
    svg.circle(svg.width() - right - 110, legend_y, 4, color);
    svg.text(svg.width() - right - 100, legend_y + 4, family, "start", 10, "#333");
    legend_y += 16;
  }
  return svg.finish();
}

// ---------------------------------------------------------------------------
// Report generation
// ---------------------------------------------------------------------------

namespace detail {

inline void add_report_file(std::vector<ReportFile>& files, const std::filesystem::path& root,
                            const std::string& relative, const std::string& content) {
  const std::filesystem::path path = root / relative;
  std::filesystem::create_directories(path.parent_path());
  write_text_atomically(path, content);
  ReportFile file;
  file.path = relative;
  file.bytes = content.size();
  file.digest = hex64(fnv1a64(content));
  files.push_back(std::move(file));
}

}  // namespace detail

inline ReportManifest write_report(const Ledger& ledger, const std::string& out_dir,
                                   const ReportOptions& options = {}) {
  if (options.rank_by != "pr" && options.rank_by != "bias") {
    throw ConfigError("rank_by must be 'pr' or 'bias', got '" + options.rank_by + "'");
  }
  std::map<std::string, BandSpec> bands;
  if (ledger.manifest.contains("bands")) {
    for (const auto& [family, spec] : ledger.manifest.at("bands").items()) {
      bands[family] = BandSpec{spec.at("target").get<double>(), spec.at("halfwidth").get<double>()};
    }
  }
  for (const auto& [family, band] : options.band_overrides) bands[family] = band;

  const std::string unprotected =
      ledger.manifest.at("dataset").at("unprotected").get<std::string>();
  const std::string protected_label =
      ledger.manifest.at("dataset").at("protected").get<std::string>();

  const std::vector<AggregateRun> aggregates = aggregate_runs(ledger);
  const std::vector<BandSelection> selections = select_equal_ndcg(aggregates, bands);
  const std::vector<std::size_t> frontier = pareto_frontier(aggregates);

  const std::filesystem::path root(out_dir);
  std::filesystem::create_directories(root);
  std::vector<ReportFile> files;

  {
    std::string csv =
        "algorithm,family,params,folds_ok,folds_failed,ndcg,coverage,disparity,"
        "disparity_normalized\n";
    for (const AggregateRun& run : aggregates) {
      csv += detail::csv_field(run.algorithm) + ',' + run.family + ',' +
             detail::csv_field(detail::params_text(run.params)) + ',' +
             std::to_string(run.folds_ok) + ',' + std::to_string(run.folds_failed) + ',';
      if (run.folds_ok > 0) {
        csv += format_double(run.ndcg) + ',' + format_double(run.coverage) + ',' +
               format_double(run.disparity) + ',' + format_double(run.disparity_normalized);
      } else {
        csv += ",,,";
      }
      csv += '\n';
    }
    detail::add_report_file(files, root, "summary.csv", csv);
  }

  {
    std::string csv = "family,algorithm,params,in_band,group,category,pr_train,bias_train,pr_rec,"
                      "bias_rec,bias_disparity\n";
    for (const BandSelection& selection : selections) {
      for (const BandChoice& choice : selection.choices) {
        const AggregateRun& run = aggregates[choice.aggregate_index];
        for (const std::string& group : {unprotected, protected_label}) {
          for (const AggregateCell* cell : detail::ranked_cells(run, group, options.rank_by)) {
            csv += selection.family + ',' + detail::csv_field(run.algorithm) + ',' +
                   detail::csv_field(detail::params_text(run.params)) + ',' +
                   (choice.matched ? "true" : "false") + ',' + detail::csv_field(cell->group) +
                   ',' + detail::csv_field(cell->category) + ',' +
                   detail::csv_optional(cell->pr_train) + ',' +
                   detail::csv_optional(cell->bias_train) + ',' +
                   detail::csv_optional(cell->pr_rec) + ',' + detail::csv_optional(cell->bias_rec) +
                   ',' + detail::csv_optional(cell->disparity) + '\n';
          }
        }
      }
    }
    detail::add_report_file(files, root, "bias.csv", csv);
  }

  {
    std::string csv = "family,algorithm,params,ndcg,target,halfwidth,distance,in_band\n";
    for (const BandSelection& selection : selections) {
      for (const BandChoice& choice : selection.choices) {
        const AggregateRun& run = aggregates[choice.aggregate_index];
        csv += selection.family + ',' + detail::csv_field(run.algorithm) + ',' +
               detail::csv_field(detail::params_text(run.params)) + ',' +
               format_double(run.ndcg) + ',' + format_double(selection.band.target) + ',' +
               format_double(selection.band.halfwidth) + ',' + format_double(choice.distance) +
               ',' + (choice.matched ? "true" : "false") + '\n';
      }
    }
    detail::add_report_file(files, root, "bands.csv", csv);
  }

  {
    std::string csv = "rank,algorithm,family,params,ndcg,disparity_normalized,coverage\n";
    for (std::size_t r = 0; r < frontier.size(); ++r) {
      const AggregateRun& run = aggregates[frontier[r]];
      csv += std::to_string(r + 1) + ',' + detail::csv_field(run.algorithm) + ',' + run.family +
             ',' + detail::csv_field(detail::params_text(run.params)) + ',' +
             format_double(run.ndcg) + ',' + format_double(run.disparity_normalized) + ',' +
             format_double(run.coverage) + '\n';
    }
    detail::add_report_file(files, root, "frontier.csv", csv);
  }

  detail::add_report_file(files, root, "charts/bias_disparity.svg",
                          bias_disparity_chart(aggregates, selections, unprotected,
                                               protected_label, options.rank_by));
  detail::add_report_file(files, root, "charts/tradeoff.svg",
                          tradeoff_chart(aggregates, frontier));

  std::sort(files.begin(), files.end(),
            [](const ReportFile& a, const ReportFile& b) { return a.path < b.path; });

  ReportManifest manifest;
  manifest.bands = bands;
  manifest.rank_by = options.rank_by;
  manifest.files = files;
  nlohmann::json j;
  j["rank_by"] = manifest.rank_by;
  nlohmann::json jbands = nlohmann::json::object();
  for (const auto& [family, band] : bands) {
    jbands[family] = {{"target", band.target}, {"halfwidth", band.halfwidth}};
  }
  j["bands"] = std::move(jbands);
  nlohmann::json jfiles = nlohmann::json::array();
  for (const ReportFile& file : files) {
    jfiles.push_back({{"path", file.path}, {"bytes", file.bytes}, {"fnv1a64", file.digest}});
  }
  j["files"] = std::move(jfiles);
  detail::write_text_atomically(root / "report.json", j.dump(2) + "\n");
  return manifest;
}

// ---------------------------------------------------------------------------
// Verification: rebuild and byte-compare
// ---------------------------------------------------------------------------

// Regenerates the report from the ledger with the options recorded in
// report.json and compares every produced byte against what is on disk.
// Returns human-readable mismatch lines; empty means the report is exactly
// what this ledger produces.
inline std::vector<std::string> verify_report(const std::string& ledger_dir,
                                              const std::string& report_dir) {
  std::vector<std::string> problems;
  const std::filesystem::path report_root(report_dir);
  const std::filesystem::path manifest_path = report_root / "report.json";
  if (!std::filesystem::exists(manifest_path)) {
    problems.push_back("missing: report.json");
    return problems;
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(detail::read_text(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(std::string("unreadable: report.json: ") + e.what());
    return problems;
  }

  ReportOptions options;
  options.rank_by = manifest.at("rank_by").get<std::string>();
  for (const auto& [family, spec] : manifest.at("bands").items()) {
    options.band_overrides[family] =
        BandSpec{spec.at("target").get<double>(), spec.at("halfwidth").get<double>()};
  }

  const Ledger ledger = load_ledger(ledger_dir);
  std::random_device entropy;
  const std::filesystem::path rebuilt =
      std::filesystem::temp_directory_path() /
      ("recfair-verify-" + hex64((static_cast<std::uint64_t>(entropy()) << 32) ^ entropy()));
  std::filesystem::create_directories(rebuilt);
  ReportManifest fresh = write_report(ledger, rebuilt.string(), options);

  std::set<std::string> listed;
  for (const nlohmann::json& entry : manifest.at("files")) {
    const std::string relative = entry.at("path").get<std::string>();
    listed.insert(relative);
    const std::filesystem::path actual = report_root / relative;
    const std::filesystem::path expected = rebuilt / relative;
    if (!std::filesystem::exists(actual)) {
      problems.push_back("missing: " + relative);
      continue;
    }
    const std::string actual_text = detail::read_text(actual);
    const std::string expected_text = detail::read_text(expected);
    if (actual_text != expected_text) {
      problems.push_back("changed: " + relative);
      continue;
    }
    if (entry.at("fnv1a64").get<std::string>() != hex64(fnv1a64(actual_text))) {
      problems.push_back("digest mismatch: " + relative);
    }
  }
  for (const ReportFile& file : fresh.files) {
    if (!listed.count(file.path)) problems.push_back("unlisted: " + file.path);
  }
  // Files lying around that neither manifest knows.
  for (const auto& entry : std::filesystem::recursive_directory_iterator(report_root)) {
    if (!entry.is_regular_file()) continue;
    const std::string relative =
        std::filesystem::relative(entry.path(), report_root).generic_string();
    if (relative == "report.json") continue;
    if (!listed.count(relative)) problems.push_back("unexpected: " + relative);
  }
  std::filesystem::remove_all(rebuilt);
  std::sort(problems.begin(), problems.end());
  return problems;
}

}  // namespace recfair
