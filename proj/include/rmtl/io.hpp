#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmtl/contrasts.hpp"
#include "rmtl/estimators.hpp"
#include "rmtl/simulation.hpp"

namespace rmtl {

/// Samples keyed by group label; labels are lexicographically ordered and
/// define the group indices used by contrast matrices.
struct LabeledSamples {
  std::vector<std::string> labels;
  std::vector<GroupSample> samples;
};

/// Parses CSV with header `group,time,status`.  Rows are grouped by label,
/// times must be nonnegative reals, statuses nonnegative integers; the
/// number of event types is the maximum status seen.  Malformed rows are
/// reported with their line number.
LabeledSamples ingest_csv(std::istream& in, const std::string& source_name);
LabeledSamples ingest_csv_file(const std::string& path);

/// Writes samples back out in the same format with round-trip-exact numbers.
void emit_csv(std::ostream& out, const LabeledSamples& data);

/// Parses a plain-text contrast file: whitespace-separated numeric rows of
/// H, plus optional `c:`, `blocks:` (1-based starting rows) and `labels:`
/// lines; `#` starts a comment.  Rows default to one block each.
ContrastSpec read_contrast_spec(std::istream& in, const std::string& source_name);
ContrastSpec read_contrast_file(const std::string& path);

/// Scenario configs as declarative JSON.
ScenarioConfig parse_scenario_config(const nlohmann::json& j);
ScenarioConfig read_scenario_file(const std::string& path);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

/// Study reports: machine-readable JSON/CSV and a human summary table.
nlohmann::json study_report_to_json(const StudyReport& report);
std::string study_report_to_csv(const StudyReport& report);
std::string render_study_table(const StudyReport& report);

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace rmtl
