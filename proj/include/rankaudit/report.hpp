/*
 * Copyright 2026 The rankaudit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Audit orchestration and report artifacts: report.json, moments.csv and
// moments.svg; plus binned calibration of scores against outcomes.

#ifndef RANKAUDIT_REPORT_HPP_
#define RANKAUDIT_REPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "rankaudit/inference.hpp"
#include "rankaudit/io.hpp"
#include "rankaudit/model.hpp"
#include "rankaudit/moments.hpp"
#include "rankaudit/svg.hpp"

namespace rankaudit {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchema = 1;

struct AuditConfig {
  std::string input_path = "-";
  DataFormat format = DataFormat::Jsonl;
  std::vector<std::string> protected_groups;
  double alpha = 0.05;
  double gamma = 0.0;
  bool normalize = false;
  ConditioningMode conditioning = ConditioningMode::Pair;
  std::size_t min_n = 30;
  JointMethod joint = JointMethod::LeastFavorable;
  std::size_t mc_reps = 10000;
  std::uint64_t seed = 0;
  std::vector<std::string> stratify_by;
  std::string out_dir = "rankaudit-out";

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
    if (!(gamma > -1.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be > -1");
    if (mc_reps < 1) throw std::invalid_argument("mc-reps must be positive");
  }
};

struct DatasetSummary {
  std::size_t queries = 0;
  std::size_t skipped_zero_idcg = 0;
  std::size_t max_len = 0;
  std::map<std::size_t, std::size_t> length_histogram;
  std::map<std::string, std::size_t> group_counts;
};

struct TestReport {
  AuditConfig config;
  DatasetSummary summary;
  std::vector<MomentEstimate> estimates;
  std::vector<PointwiseResult> pointwise;  // parallel to estimates
  std::vector<std::string> subset_of;      // bucket label per estimate
  std::vector<bool> in_joint;              // entered the overall joint test
  std::vector<JointResult> joint;          // "all" first
  std::vector<std::string> warnings;
};

inline DatasetSummary summarize(const Dataset& data, bool normalized) {
  DatasetSummary s;
  s.queries = data.size();
  s.max_len = data.max_len();
  for (const QueryRecord& q : data.queries()) {
    ++s.length_histogram[q.size()];
    for (const Entry& e : q.entries()) ++s.group_counts[e.group];
  }
  if (normalized) s.skipped_zero_idcg = count_zero_idcg(data);
  return s;
}

// Builds the adjacent family, estimates it, and runs pointwise and subset
// joint tests. Throws NoTestableMoments when the joint test has nothing to
// work with.
inline TestReport run_audit(const Dataset& data, const AuditConfig& config,
                            std::vector<std::string> warnings = {}) {
  config.validate();
  TestReport report;
  report.config = config;
  report.warnings = std::move(warnings);
  report.summary = summarize(data, config.normalize);
  if (report.summary.skipped_zero_idcg > 0) {
    report.warnings.push_back(std::to_string(report.summary.skipped_zero_idcg) +
                              " query(ies) with zero IDCG skipped by NDCG normalization");
  }
  for (const std::string& g : config.protected_groups) {
    if (!data.group_code(g)) report.warnings.push_back("protected group '" + g + "' never appears");
  }

  const Adjustment adjustment{config.gamma, config.normalize};
  const auto family = build_adjacent_family(data, config.conditioning, adjustment, config.stratify_by);
  report.estimates = estimate_family(data, family);
  std::size_t empty = 0;
  for (const MomentEstimate& e : report.estimates) {
    report.pointwise.push_back(pointwise_test(e));
    report.subset_of.push_back(subset_label(e.spec));
    if (e.matched_nothing()) ++empty;
  }
  if (empty > 0) {
    report.warnings.push_back(std::to_string(empty) + " moment(s) match no query");
  }

  JointOptions jo;
  jo.alpha = config.alpha;
  jo.mc_reps = config.mc_reps;
  jo.seed = config.seed;
  jo.min_n = config.min_n;
  SubsetTests tests = subset_joint_tests(report.estimates, config.joint, jo);
  report.joint = std::move(tests.results);
  for (const std::string& w : report.joint.front().warnings) report.warnings.push_back(w);
  for (std::string& w : tests.warnings) report.warnings.push_back(std::move(w));

  report.in_joint.assign(report.estimates.size(), false);
  for (std::size_t i : report.joint.front().moments) report.in_joint[i] = true;
  return report;
}

namespace detail {

inline nlohmann::ordered_json conditioning_json(const MomentSpec& spec) {
  if (const auto* p = std::get_if<PairCondition>(&spec.conditioning)) {
    return {{"type", "pair"}, {"high_group", p->high_group}, {"low_group", p->low_group}};
  }
  return {{"type", "pattern"}, {"groups", std::get<PatternCondition>(spec.conditioning).groups}};
}

inline std::string alpha_key(double a) { return format_double(a); }

}  // namespace detail

inline nlohmann::ordered_json to_json(const TestReport& report) {
  using json = nlohmann::ordered_json;
  const AuditConfig& c = report.config;
  json j;
  j["schema"] = kReportSchema;
  j["tool"] = "rankaudit";
  j["version"] = kVersion;
  j["config"] = {
      {"input", c.input_path},
      {"format", c.format == DataFormat::Jsonl ? "jsonl" : "csv"},
      {"protected_groups", c.protected_groups},
      {"alpha", c.alpha},
      {"gamma", c.gamma},
      {"normalize", c.normalize},
      {"conditioning", c.conditioning == ConditioningMode::Pair ? "pair" : "full"},
      {"min_n", c.min_n},
      {"joint", to_string(c.joint)},
      {"mc_reps", c.mc_reps},
      {"seed", c.seed},
      {"stratify_by", c.stratify_by},
      {"out", c.out_dir},
  };

  json hist = json::object();
  for (const auto& [len, n] : report.summary.length_histogram) hist[std::to_string(len)] = n;
  json groups = json::object();
  for (const auto& [g, n] : report.summary.group_counts) groups[g] = n;
  j["dataset"] = {{"queries", report.summary.queries},
                  {"max_len", report.summary.max_len},
                  {"skipped_zero_idcg", report.summary.skipped_zero_idcg},
                  {"length_histogram", hist},
                  {"group_counts", groups}};

  json moments = json::array();
  for (std::size_t i = 0; i < report.estimates.size(); ++i) {
    const MomentEstimate& e = report.estimates[i];
    const PointwiseResult& p = report.pointwise[i];
    json stratum = json::object();
    for (const FeatureCondition& f : e.spec.stratum) {
      stratum[f.key] = {{"high", f.high_value}, {"low", f.low_value}};
    }
    moments.push_back({
        {"high_rank", e.spec.high_rank},
        {"low_rank", e.spec.low_rank},
        {"conditioning", detail::conditioning_json(e.spec)},
        {"stratum", stratum},
        {"subset", report.subset_of[i]},
        {"n_matched", e.n_matched},
        {"n_total", e.n_total},
        {"mean_conditional", e.mean_conditional},
        {"se_conditional", e.se_conditional},
        {"mean_unconditional", e.mean_unconditional},
        {"se_unconditional", e.se_unconditional},
        {"t_stat", p.t_stat},
        {"p_value", p.p_value},
        {"ci_lower", p.ci_lower},
        {"ci_upper", p.ci_upper},
        {"in_joint", static_cast<bool>(report.in_joint[i])},
    });
  }
  j["moments"] = std::move(moments);

  json joint = json::array();
  for (const JointResult& r : report.joint) {
    json cv = json::object();
    for (const auto& [a, v] : r.critical_values) cv[detail::alpha_key(a)] = v;
    joint.push_back({{"subset", r.subset},
                     {"method", to_string(r.method)},
                     {"K", r.K},
                     {"T_stat", r.T_stat},
                     {"critical_values", cv},
                     {"p_value", r.p_value},
                     {"alpha", r.alpha},
                     {"reject", r.reject},
                     {"mc_reps", r.mc_reps},
                     {"seed", r.seed}});
  }
  j["joint"] = std::move(joint);
  j["warnings"] = report.warnings;
  return j;
}

namespace detail {

inline std::string csv_num(double v) { return std::isfinite(v) ? format_double(v) : ""; }

inline std::string pattern_text(const MomentSpec& spec) {
  const auto* p = std::get_if<PatternCondition>(&spec.conditioning);
  if (!p) return "";
  std::string s;
  for (std::size_t i = 0; i < p->groups.size(); ++i) s += (i ? ";" : "") + p->groups[i];
  return s;
}

inline std::string stratum_text(const MomentSpec& spec) {
  std::string s;
  for (std::size_t i = 0; i < spec.stratum.size(); ++i) {
    const FeatureCondition& f = spec.stratum[i];
    s += (i ? ";" : "") + f.key + "=" + f.high_value + "/" + f.low_value;
  }
  return s;
}

}  // namespace detail

// Plot data: one row per moment with its conditional mean and 95% CI.
inline void write_moments_csv(std::ostream& out, const TestReport& report) {
  out << "high_rank,low_rank,high_group,low_group,pattern,stratum,n_matched,mean,se,ci_lower,ci_upper,"
         "t_stat,p_value\n";
  for (std::size_t i = 0; i < report.estimates.size(); ++i) {
    const MomentEstimate& e = report.estimates[i];
    const PointwiseResult& p = report.pointwise[i];
    const auto [high, low] = compared_groups(e.spec);
    out << e.spec.high_rank << "," << e.spec.low_rank << "," << detail::csv_escape(high) << ","
        << detail::csv_escape(low) << "," << detail::csv_escape(detail::pattern_text(e.spec)) << ","
        << detail::csv_escape(detail::stratum_text(e.spec)) << "," << e.n_matched << ","
        << detail::csv_num(e.mean_conditional) << "," << detail::csv_num(e.se_conditional) << ","
        << detail::csv_num(p.ci_lower) << "," << detail::csv_num(p.ci_upper) << ","
        << detail::csv_num(p.t_stat) << "," << detail::csv_num(p.p_value) << "\n";
  }
}

// One panel per compared group pair with different groups (all pairs when
// there is a single group). x: rank of the higher-ranked candidate; y: mean
// with 95% CI whisker.
inline std::string render_moments_svg(const TestReport& report) {
  std::map<std::string, std::vector<std::size_t>> panels;
  for (std::size_t i = 0; i < report.estimates.size(); ++i) {
    const auto [high, low] = compared_groups(report.estimates[i].spec);
    if (high != low) panels[report.subset_of[i]].push_back(i);
  }
  if (panels.empty()) {
    for (std::size_t i = 0; i < report.estimates.size(); ++i) panels[report.subset_of[i]].push_back(i);
  }

  constexpr double kPanelW = 360, kPanelH = 260, kMarginL = 70, kMarginT = 40, kGap = 50;
  const double width = kMarginL + panels.size() * (kPanelW + kGap);
  svg::Document doc(std::max(width, 200.0), kMarginT + kPanelH + 60);

  std::size_t k = 0;
  for (const auto& [label, idx] : panels) {
    svg::Range xr, yr;
    for (std::size_t i : idx) {
      xr.include(static_cast<double>(report.estimates[i].spec.high_rank));
      yr.include(report.pointwise[i].ci_lower);
      yr.include(report.pointwise[i].ci_upper);
      yr.include(report.estimates[i].mean_conditional);
    }
    yr.include(0.0);
    xr = svg::Range{xr.lo - 0.5, xr.hi + 0.5};
    if (!(xr.lo <= xr.hi)) xr = {0.5, 1.5};
    svg::Panel panel{kMarginL + k * (kPanelW + kGap), kMarginT, kPanelW, kPanelH, xr, yr.padded()};
    const auto [high, low] = compared_groups(report.estimates[idx.front()].spec);
    doc.axes(panel, "higher " + high + ", lower " + low, "rank of higher-ranked candidate",
             "mean diff");

    // Several moments at one rank (strata, patterns) are spread sideways.
    std::map<std::size_t, std::size_t> per_rank, seen;
    for (std::size_t i : idx) ++per_rank[report.estimates[i].spec.high_rank];
    for (std::size_t i : idx) {
      const MomentEstimate& e = report.estimates[i];
      if (!std::isfinite(e.mean_conditional)) continue;
      const std::size_t n_here = per_rank[e.spec.high_rank];
      const std::size_t slot = seen[e.spec.high_rank]++;
      const double offset = n_here > 1 ? (static_cast<double>(slot) / (n_here - 1) - 0.5) * 0.5 : 0.0;
      const double x = panel.px(static_cast<double>(e.spec.high_rank) + offset);
      const PointwiseResult& p = report.pointwise[i];
      if (std::isfinite(p.ci_lower) && std::isfinite(p.ci_upper)) {
        doc.line(x, panel.py(p.ci_lower), x, panel.py(p.ci_upper), svg::palette(k), 1.5);
        doc.line(x - 4, panel.py(p.ci_lower), x + 4, panel.py(p.ci_lower), svg::palette(k), 1.5);
        doc.line(x - 4, panel.py(p.ci_upper), x + 4, panel.py(p.ci_upper), svg::palette(k), 1.5);
      }
      doc.circle(x, panel.py(e.mean_conditional), 3.5, svg::palette(k));
    }
    ++k;
  }
  return doc.str();
}

// Writes report.json, moments.csv and moments.svg into dir.
inline void write_audit_artifacts(const TestReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("report.json");
    f << to_json(report).dump(2) << '\n';
  }
  {
    auto f = open("moments.csv");
    write_moments_csv(f, report);
  }
  {
    auto f = open("moments.svg");
    f << render_moments_svg(report);
  }
}

// ---- binned calibration --------------------------------------------------

struct ScoredRow {
  std::string group;
  double score = 0.0;
  double outcome = 0.0;
};

struct CalibrationBin {
  std::string group;
  std::size_t bin = 0;
  std::size_t n = 0;
  double mean_score = 0.0;
  double mean_outcome = 0.0;
};

struct CalibrationResult {
  std::vector<CalibrationBin> bins;
  std::vector<std::string> warnings;
};

// Reads rows carrying score, group and outcome columns; others are ignored.
inline std::vector<ScoredRow> read_scored_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty input");
  const auto header = detail::split_csv_line(line);
  int col_s = -1, col_g = -1, col_y = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "score") col_s = static_cast<int>(i);
    if (header[i] == "group") col_g = static_cast<int>(i);
    if (header[i] == "outcome") col_y = static_cast<int>(i);
  }
  if (col_s < 0 || col_g < 0 || col_y < 0) {
    throw ParseError("csv: calibration input needs score, group and outcome columns");
  }
  std::vector<ScoredRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "csv line " + std::to_string(line_no);
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw ParseError(where + ": wrong number of fields");
    rows.push_back({f[static_cast<std::size_t>(col_g)],
                    detail::parse_double(f[static_cast<std::size_t>(col_s)], where),
                    detail::parse_double(f[static_cast<std::size_t>(col_y)], where)});
  }
  return rows;
}

// Per group, splits rows into n_bins equal-count bins by score and reports
// bin means. Groups with fewer distinct scores than n_bins get fewer bins.
inline CalibrationResult binned_calibration(std::span<const ScoredRow> rows, std::size_t n_bins) {
  if (n_bins < 1) throw std::invalid_argument("calibration: n_bins must be >= 1");
  std::map<std::string, std::vector<ScoredRow>> by_group;
  for (const ScoredRow& r : rows) by_group[r.group].push_back(r);

  CalibrationResult out;
  for (auto& [group, g] : by_group) {
    std::stable_sort(g.begin(), g.end(),
                     [](const ScoredRow& a, const ScoredRow& b) { return a.score < b.score; });
    std::set<double> distinct;
    for (const ScoredRow& r : g) distinct.insert(r.score);
    std::size_t bins = n_bins;
    if (distinct.size() < n_bins) {
      bins = distinct.size();
      out.warnings.push_back("group " + group + ": only " + std::to_string(bins) +
                             " distinct score(s); using " + std::to_string(bins) + " bin(s)");
    }
    const std::size_t n = g.size();
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t lo = b * n / bins;
      const std::size_t hi = (b + 1) * n / bins;
      CalibrationBin cb;
      cb.group = group;
      cb.bin = b + 1;
      cb.n = hi - lo;
      for (std::size_t i = lo; i < hi; ++i) {
        cb.mean_score += g[i].score;
        cb.mean_outcome += g[i].outcome;
      }
      cb.mean_score /= static_cast<double>(cb.n);
      cb.mean_outcome /= static_cast<double>(cb.n);
      out.bins.push_back(cb);
    }
  }
  return out;
}

inline void write_calibration_csv(std::ostream& out, const CalibrationResult& result) {
  out << "group,bin,n,mean_score,mean_outcome\n";
  for (const CalibrationBin& b : result.bins) {
    out << detail::csv_escape(b.group) << "," << b.bin << "," << b.n << ","
        << detail::format_double(b.mean_score) << "," << detail::format_double(b.mean_outcome) << "\n";
  }
}

inline std::string render_calibration_svg(const CalibrationResult& result) {
  svg::Range xr, yr;
  for (const CalibrationBin& b : result.bins) {
    xr.include(b.mean_score);
    yr.include(b.mean_outcome);
  }
  const svg::Range both{std::min(xr.lo, yr.lo), std::max(xr.hi, yr.hi)};
  svg::Document doc(560, 420);
  svg::Panel panel{80, 40, 360, 320, both.padded(), both.padded()};
  doc.axes(panel, "Outcome by score", "mean score in bin", "mean outcome");
  doc.line(panel.px(panel.x.lo), panel.py(panel.x.lo), panel.px(panel.x.hi), panel.py(panel.x.hi),
           "#bbb", 1.0, "2,2");
  std::map<std::string, std::size_t> color;
  for (const CalibrationBin& b : result.bins) color.try_emplace(b.group, color.size());
  for (const CalibrationBin& b : result.bins) {
    doc.circle(panel.px(b.mean_score), panel.py(b.mean_outcome), 4.0, svg::palette(color[b.group]));
  }
  double ly = 60;
  for (const auto& [g, c] : color) {
    doc.circle(460, ly - 4, 4.0, svg::palette(c));
    doc.text(470, ly, g, "start");
    ly += 18;
  }
  return doc.str();
}

}  // namespace rankaudit

#endif  // RANKAUDIT_REPORT_HPP_
