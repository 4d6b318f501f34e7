#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmtl/io.hpp"

namespace rmtl {

/// One analysis run: which data, horizon, test and contrasts.
struct AnalysisRequest {
  std::string input_path;
  double tau = 0.0;
  double alpha = 0.05;
  std::string method = "multiple";   // asymptotic | permutation | multiple |
                                     // asymptotic_bonf | permutation_bonf
  std::string contrast = "dunnett";  // dunnett | tukey | 2x2 | file:PATH
  bool per_event = false;
  std::vector<int> causes;  // 1-based cause selection; empty = all
  int B = 1999;
  std::uint64_t seed = 1;
  std::string out_path;  // optional JSON report destination
  unsigned threads = 0;

  void validate() const;
};

/// Builds the contrast specification the request asks for (built-in name or
/// contrast file) for a dataset with k groups and M event types.
ContrastSpec request_contrast(const AnalysisRequest& req, int k, int num_causes);

/// Runs the full analysis and returns the versioned JSON report.
nlohmann::json run_analysis(const AnalysisRequest& req, const LabeledSamples& data);

/// Human-readable rendering of an analysis report.
std::string render_analysis_table(const nlohmann::json& report);

}  // namespace rmtl
