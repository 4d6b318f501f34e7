#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmtl/analyze.hpp"
#include "rmtl/io.hpp"
#include "rmtl/simulation.hpp"

namespace {

constexpr int kExitInputError = 2;
constexpr int kExitNumericalError = 3;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  out << content;
}

std::string normalize_method(std::string method) {
  for (auto& c : method) {
    if (c == '-') c = '_';
  }
  return method;
}

int run_analyze(const rmtl::AnalysisRequest& request) {
  const rmtl::LabeledSamples data = rmtl::ingest_csv_file(request.input_path);
  const nlohmann::json report = rmtl::run_analysis(request, data);
  std::cout << rmtl::render_analysis_table(report);
  if (!request.out_path.empty()) {
    write_file(request.out_path, report.dump(2) + "\n");
    std::cout << "\nreport written to " << request.out_path << "\n";
  }
  return 0;
}

struct SimulateOptions {
  std::string config_path;
  std::string preset;
  std::string out_path;
  std::string csv_path;
  int replications = -1;
  int B = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
  bool threads_set = false;
};

int run_simulate(const SimulateOptions& opts) {
  rmtl::ScenarioConfig cfg;
  if (!opts.preset.empty()) {
    cfg = rmtl::preset_scenario(opts.preset);
  } else {
    cfg = rmtl::read_scenario_file(opts.config_path);
  }
  if (opts.replications > 0) cfg.replications = opts.replications;
  if (opts.B > 0) cfg.B = opts.B;
  if (opts.seed_set) cfg.master_seed = opts.seed;
  if (opts.threads_set) cfg.threads = opts.threads;
  cfg.validate();

  const rmtl::StudyReport report = rmtl::run_study(cfg);
  std::cout << rmtl::render_study_table(report);
  std::cout << "runtime: " << report.runtime_seconds << " s\n";
  if (!opts.out_path.empty()) {
    write_file(opts.out_path, rmtl::study_report_to_json(report).dump(2) + "\n");
    std::cout << "report written to " << opts.out_path << "\n";
  }
  if (!opts.csv_path.empty()) {
    write_file(opts.csv_path, rmtl::study_report_to_csv(report));
    std::cout << "csv written to " << opts.csv_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restricted mean time lost estimation and tests for competing risks data"};
  app.require_subcommand(1);

  rmtl::AnalysisRequest request;
  std::string method_flag = "multiple";
  auto* analyze = app.add_subcommand("analyze", "analyze a CSV dataset (header: group,time,status)");
  analyze->add_option("input", request.input_path, "input CSV file")->required();
  analyze->add_option("--tau", request.tau, "time horizon for the restricted means")->required();
  analyze->add_option("--alpha", request.alpha, "significance level (default 0.05)");
  analyze
      ->add_option("--method", method_flag,
                   "asymptotic | permutation | multiple | asymptotic-bonf | permutation-bonf")
      ->check(CLI::IsMember({"asymptotic", "permutation", "multiple", "asymptotic-bonf",
                             "permutation-bonf", "asymptotic_bonf", "permutation_bonf"}));
  analyze->add_option("--contrast", request.contrast, "dunnett | tukey | 2x2 | file:PATH");
  analyze->add_flag("--per-event", request.per_event,
                    "one hypothesis per contrast row and event type");
  analyze->add_option("--causes", request.causes, "restrict to these causes (1-based)")
      ->delimiter(',');
  analyze->add_option("--B", request.B, "resampling iterations (default 1999)");
  analyze->add_option("--seed", request.seed, "master seed (default 1)");
  analyze->add_option("--out", request.out_path, "write the JSON report to this path");
  analyze->add_option("--threads", request.threads, "worker threads (0 = all cores)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "run a simulation study");
  auto* cfg_opt = simulate->add_option("--config", sim.config_path, "scenario config JSON");
  std::string preset_help = "named preset:";
  for (const auto& name : rmtl::preset_names()) preset_help += " " + name;
  auto* preset_opt = simulate->add_option("--preset", sim.preset, preset_help);
  cfg_opt->excludes(preset_opt);
  simulate->add_option("--replications", sim.replications, "override replication count");
  simulate->add_option("--B", sim.B, "override resampling iterations");
  simulate->add_option("--seed", sim.seed, "override master seed")
      ->each([&sim](const std::string&) { sim.seed_set = true; });
  simulate->add_option("--threads", sim.threads, "worker threads (0 = all cores)")
      ->each([&sim](const std::string&) { sim.threads_set = true; });
  simulate->add_option("--out", sim.out_path, "write the JSON report to this path");
  simulate->add_option("--csv", sim.csv_path, "write rejection rates as CSV to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (analyze->parsed()) {
      request.method = normalize_method(method_flag);
      return run_analyze(request);
    }
    if (sim.preset.empty() && sim.config_path.empty()) {
      std::cerr << "error: simulate needs --config or --preset\n";
      return kExitInputError;
    }
    return run_simulate(sim);
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::domain_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalError;
  }
}
