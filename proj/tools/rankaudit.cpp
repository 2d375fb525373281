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

// rankaudit: outcome tests for bias in ranked lists.
//
//   rankaudit audit       --input log.jsonl --out dir
//   rankaudit simulate    --tau 0.5 --q 2000 --j 11 --seed 7 > sim.jsonl
//   rankaudit power       --tau 0,0.2,0.5 --reps 200
//   rankaudit rationalize --input dist.txt
//   rankaudit calibrate   --input scores.csv --bins 10 --out dir
//
// Exit status is 0 whenever the command completes, whatever the test
// outcome; nonzero only for usage and operational errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rankaudit/rankaudit.hpp"

namespace {

using namespace rankaudit;

// Opens a file for reading, or returns std::cin for "-".
class Input {
 public:
  explicit Input(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file_) throw std::runtime_error("cannot open " + path);
  }
  std::istream& stream() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path == "-") return;
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw std::runtime_error("cannot write " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

DataFormat infer_format(const std::string& flag, const std::string& path) {
  if (flag == "csv") return DataFormat::Csv;
  if (flag == "jsonl") return DataFormat::Jsonl;
  return std::filesystem::path(path).extension() == ".csv" ? DataFormat::Csv : DataFormat::Jsonl;
}

QualityLaw parse_quality(const std::string& s) {
  if (s == "uniform") return Uniform01{};
  double mean = 0, sd = 1;
  char sep = 0;
  std::istringstream in(s.substr(s.find(':') + 1));
  if (s.rfind("normal:", 0) == 0 && (in >> mean >> sep >> sd) && sep == ',') {
    return NormalQuality{mean, sd};
  }
  throw CLI::ValidationError("--quality", "expected 'uniform' or 'normal:MEAN,SD'");
}

OutcomeNoise parse_noise(const std::string& s) {
  if (s == "bernoulli") return BernoulliNoise{};
  if (s.rfind("normal:", 0) == 0) {
    try {
      return NormalNoise{std::stod(s.substr(7))};
    } catch (const std::exception&) {
    }
  }
  throw CLI::ValidationError("--noise", "expected 'bernoulli' or 'normal:SD'");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw CLI::ValidationError("--tau", "empty list");
  return out;
}

struct SimFlags {
  std::size_t j = 11;
  std::size_t q = 1000;
  double p_group = 0.5;
  std::string quality = "uniform";
  std::string noise = "bernoulli";
  double gamma = 0.0;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--j", j, "Candidates per query")->capture_default_str();
    app->add_option("--q", q, "Number of queries")->capture_default_str();
    app->add_option("--p-group", p_group, "Probability a candidate is in group 1")->capture_default_str();
    app->add_option("--quality", quality, "uniform | normal:MEAN,SD")->capture_default_str();
    app->add_option("--noise", noise, "bernoulli | normal:SD")->capture_default_str();
    app->add_option("--gamma", gamma, "Position effect on realized outcomes")->capture_default_str();
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
  }

  SimConfig config(double tau) const {
    SimConfig c;
    c.J = j;
    c.Q = q;
    c.p_group = p_group;
    c.quality = parse_quality(quality);
    c.noise = parse_noise(noise);
    c.tau = tau;
    c.gamma = gamma;
    c.seed = seed;
    return c;
  }
};

void print_joint_table(const TestReport& report) {
  std::cout << "queries: " << report.summary.queries << "  moments: " << report.estimates.size()
            << "  joint method: " << to_string(report.config.joint) << "\n";
  std::cout << "subset        K      T_stat     p_value  reject@" << report.config.alpha << "\n";
  for (const JointResult& r : report.joint) {
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %4zu %11.4f %11.5f  %s\n", r.subset.c_str(), r.K, r.T_stat,
                  r.p_value, r.reject ? "yes" : "no");
    std::cout << line;
  }
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rankaudit: outcome tests for bias in ranked lists"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // audit
  AuditConfig audit;
  std::string audit_format = "auto";
  std::string conditioning = "pair";
  std::string joint = "lf";
  std::string stratify;
  CLI::App* audit_cmd = app.add_subcommand("audit", "Test a ranked-list log for bias");
  audit_cmd->add_option("--input", audit.input_path, "JSONL or CSV log ('-' = stdin)")->capture_default_str();
  audit_cmd->add_option("--format", audit_format, "jsonl | csv | auto")
      ->check(CLI::IsMember({"jsonl", "csv", "auto"}))
      ->capture_default_str();
  audit_cmd->add_option("--protected", audit.protected_groups, "Protected group label(s)");
  audit_cmd->add_option("--alpha", audit.alpha, "Test level")->capture_default_str();
  audit_cmd->add_option("--gamma", audit.gamma, "Known position effect")->capture_default_str();
  audit_cmd->add_flag("--normalize", audit.normalize, "Normalize outcomes by each query's IDCG");
  audit_cmd->add_option("--conditioning", conditioning, "pair | full")
      ->check(CLI::IsMember({"pair", "full"}))
      ->capture_default_str();
  audit_cmd->add_option("--min-n", audit.min_n, "Minimum matched queries for joint tests")
      ->capture_default_str();
  audit_cmd->add_option("--joint", joint, "lf | bonferroni")
      ->check(CLI::IsMember({"lf", "bonferroni"}))
      ->capture_default_str();
  audit_cmd->add_option("--mc-reps", audit.mc_reps, "Monte Carlo draws for critical values")
      ->capture_default_str();
  audit_cmd->add_option("--seed", audit.seed, "Monte Carlo seed")->capture_default_str();
  audit_cmd->add_option("--stratify-by", stratify, "Comma-separated feature names");
  audit_cmd->add_option("--out", audit.out_dir, "Output directory")->capture_default_str();

  // simulate
  SimFlags sim;
  double sim_tau = 0.0;
  std::string sim_format = "jsonl";
  std::string sim_out = "-";
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Emit a synthetic ranked-list dataset");
  sim.add_to(sim_cmd);
  sim_cmd->add_option("--tau", sim_tau, "Penalty on group 1 in the ranker's utility")->capture_default_str();
  sim_cmd->add_option("--format", sim_format, "jsonl | csv")
      ->check(CLI::IsMember({"jsonl", "csv"}))
      ->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "Output file ('-' = stdout)")->capture_default_str();

  // power
  SimFlags pw;
  std::string pw_taus = "0,0.2,0.5";
  PowerOptions pw_opt;
  pw_opt.reps = 200;
  double pw_audit_gamma = 0.0;
  std::string pw_out = "-";
  CLI::App* pw_cmd = app.add_subcommand("power", "Size/power Monte Carlo over a tau grid");
  pw.add_to(pw_cmd);
  pw_cmd->add_option("--tau", pw_taus, "Comma-separated tau grid")->capture_default_str();
  pw_cmd->add_option("--reps", pw_opt.reps, "Replications per configuration (>= 100)")
      ->check(CLI::Range(std::size_t{100}, std::size_t{1} << 40))
      ->capture_default_str();
  pw_cmd->add_option("--alpha", pw_opt.alpha, "Test level")->capture_default_str();
  pw_cmd->add_option("--mc-reps", pw_opt.mc_reps, "Monte Carlo draws per test")->capture_default_str();
  pw_cmd->add_option("--min-n", pw_opt.min_n, "Minimum matched queries")->capture_default_str();
  pw_cmd->add_option("--audit-gamma", pw_audit_gamma, "Position effect assumed by the audit")
      ->capture_default_str();
  pw_cmd->add_option("--threads", pw_opt.threads, "Worker threads (0 = all cores)")->capture_default_str();
  pw_cmd->add_option("--out", pw_out, "Output CSV ('-' = stdout)")->capture_default_str();

  // rationalize
  std::string rat_in = "-";
  std::string rat_out = "-";
  CLI::App* rat_cmd =
      app.add_subcommand("rationalize", "Check the inequalities on a finite distribution and build a certificate");
  rat_cmd->add_option("--input", rat_in, "Distribution file ('-' = stdin)")->capture_default_str();
  rat_cmd->add_option("--out", rat_out, "Certificate JSON ('-' = stdout)")->capture_default_str();

  // calibrate
  std::string cal_in = "-";
  std::string cal_out = "rankaudit-calibration";
  std::size_t cal_bins = 10;
  CLI::App* cal_cmd = app.add_subcommand("calibrate", "Binned outcome-by-score calibration per group");
  cal_cmd->add_option("--input", cal_in, "CSV with score, group, outcome ('-' = stdin)")->capture_default_str();
  cal_cmd->add_option("--bins", cal_bins, "Equal-count bins per group")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cal_cmd->add_option("--out", cal_out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*audit_cmd) {
      audit.format = infer_format(audit_format, audit.input_path);
      audit.conditioning = conditioning == "full" ? ConditioningMode::FullPattern : ConditioningMode::Pair;
      audit.joint = joint == "bonferroni" ? JointMethod::Bonferroni : JointMethod::LeastFavorable;
      if (!stratify.empty()) {
        std::stringstream ss(stratify);
        std::string key;
        while (std::getline(ss, key, ',')) audit.stratify_by.push_back(key);
      }
      audit.validate();
      Input in(audit.input_path);
      IngestResult data = ingest(in.stream(), audit.format);
      TestReport report;
      try {
        report = run_audit(data.dataset, audit, data.warnings);
      } catch (const NoTestableMoments&) {
        std::cerr << "rankaudit audit: no testable moments (every moment has fewer than min-n="
                  << audit.min_n << " matched queries or zero variance)\n";
        return 2;
      }
      write_audit_artifacts(report, audit.out_dir);
      print_joint_table(report);
      std::cout << "wrote " << (std::filesystem::path(audit.out_dir) / "report.json").string() << "\n";
    } else if (*sim_cmd) {
      const Dataset data = simulate_dataset(sim.config(sim_tau));
      Output out(sim_out);
      if (sim_format == "csv") {
        write_csv(out.stream(), data);
      } else {
        write_jsonl(out.stream(), data);
      }
    } else if (*pw_cmd) {
      std::vector<SimConfig> grid;
      for (double tau : parse_list(pw_taus)) grid.push_back(pw.config(tau));
      pw_opt.seed = pw.seed;
      pw_opt.audit.gamma = pw_audit_gamma;
      const auto rows = run_size_power(grid, pw_opt);
      Output out(pw_out);
      out.stream() << "tau,J,Q,gamma,audit_gamma,reps,rejections,rejection_rate,mc_se\n";
      for (const PowerRow& r : rows) {
        out.stream() << detail::format_double(r.config.tau) << "," << r.config.J << "," << r.config.Q << ","
                     << detail::format_double(r.config.gamma) << "," << detail::format_double(pw_audit_gamma)
                     << "," << r.reps << "," << r.rejections << "," << detail::format_double(r.rejection_rate)
                     << "," << detail::format_double(r.mc_se) << "\n";
      }
    } else if (*rat_cmd) {
      Input in(rat_in);
      const auto dist = parse_distribution(in.stream());
      const auto cert = construct_information_structure(dist);
      Output out(rat_out);
      out.stream() << to_json(cert).dump(2) << "\n";
    } else if (*cal_cmd) {
      Input in(cal_in);
      const auto rows = read_scored_csv(in.stream());
      const auto result = binned_calibration(rows, cal_bins);
      std::filesystem::create_directories(cal_out);
      Output csv((std::filesystem::path(cal_out) / "calibration.csv").string());
      write_calibration_csv(csv.stream(), result);
      Output svg((std::filesystem::path(cal_out) / "calibration.svg").string());
      svg.stream() << render_calibration_svg(result);
      for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "rankaudit: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
