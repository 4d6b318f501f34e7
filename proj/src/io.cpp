#include "rmtl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rmtl {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(s);
  while (std::getline(stream, field, sep)) out.push_back(field);
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double parse_double(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument(where + ": cannot parse '" + raw + "' as a number");
  }
  return value;
}

int parse_int(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument(where + ": cannot parse '" + raw + "' as an integer");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  (void)ec;
  return std::string(buffer, ptr);
}

LabeledSamples ingest_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  int line_number = 0;

  if (!std::getline(in, line)) {
    throw std::invalid_argument(source_name + ": empty input");
  }
  ++line_number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto header = split(line, ',');
    if (header.size() != 3 || lower(trim(header[0])) != "group" ||
        lower(trim(header[1])) != "time" || lower(trim(header[2])) != "status") {
      throw std::invalid_argument(source_name + ":1: expected header 'group,time,status'");
    }
  }

  struct RawGroup {
    std::vector<double> times;
    std::vector<int> statuses;
  };
  std::map<std::string, RawGroup> groups;  // lexicographic order
  int max_status = 0;

  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string where = source_name + ":" + std::to_string(line_number);
    const auto fields = split(line, ',');
    if (fields.size() != 3) {
      throw std::invalid_argument(where + ": expected 3 fields, got " +
                                  std::to_string(fields.size()));
    }
    const std::string label = trim(fields[0]);
    if (label.empty()) throw std::invalid_argument(where + ": empty group label");
    const double time = parse_double(fields[1], where);
    if (!(time >= 0.0) || !std::isfinite(time)) {
      throw std::invalid_argument(where + ": time must be finite and nonnegative");
    }
    const int status = parse_int(fields[2], where);
    if (status < 0) throw std::invalid_argument(where + ": status must be >= 0");
    max_status = std::max(max_status, status);
    auto& group = groups[label];
    group.times.push_back(time);
    group.statuses.push_back(status);
  }

  if (groups.empty()) throw std::invalid_argument(source_name + ": no data rows");
  if (max_status == 0) {
    throw std::invalid_argument(source_name + ": every status is 0, there is no event to analyze");
  }

  LabeledSamples out;
  for (auto& [label, raw] : groups) {
    if (raw.times.size() < 2) {
      throw std::invalid_argument(source_name + ": group '" + label +
                                  "' has fewer than 2 observations");
    }
    GroupSample sample;
    sample.times = std::move(raw.times);
    sample.statuses = std::move(raw.statuses);
    sample.num_causes = max_status;
    sample.validate();
    out.labels.push_back(label);
    out.samples.push_back(std::move(sample));
  }
  return out;
}

LabeledSamples ingest_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return ingest_csv(in, path);
}

void emit_csv(std::ostream& out, const LabeledSamples& data) {
  out << "group,time,status\n";
  for (std::size_t g = 0; g < data.samples.size(); ++g) {
    const auto& sample = data.samples[g];
    for (std::size_t j = 0; j < sample.times.size(); ++j) {
      out << data.labels[g] << ',' << format_double(sample.times[j]) << ','
          << sample.statuses[j] << '\n';
    }
  }
}

ContrastSpec read_contrast_spec(std::istream& in, const std::string& source_name) {
  std::vector<std::vector<double>> rows;
  std::vector<double> offsets;
  std::vector<int> block_starts_1based;
  std::vector<std::string> labels;
  bool have_offsets = false, have_blocks = false, have_labels = false;

  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string where = source_name + ":" + std::to_string(line_number);
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    const std::string content = trim(line);
    if (content.empty()) continue;

    std::istringstream stream(content);
    if (lower(content).rfind("c:", 0) == 0) {
      if (have_offsets) throw std::invalid_argument(where + ": duplicate 'c:' line");
      have_offsets = true;
      std::istringstream values(content.substr(2));
      std::string token;
      while (values >> token) offsets.push_back(parse_double(token, where));
      continue;
    }
    if (lower(content).rfind("blocks:", 0) == 0) {
      if (have_blocks) throw std::invalid_argument(where + ": duplicate 'blocks:' line");
      have_blocks = true;
      std::istringstream values(content.substr(7));
      std::string token;
      while (values >> token) block_starts_1based.push_back(parse_int(token, where));
      continue;
    }
    if (lower(content).rfind("labels:", 0) == 0) {
      if (have_labels) throw std::invalid_argument(where + ": duplicate 'labels:' line");
      have_labels = true;
      std::istringstream values(content.substr(7));
      std::string token;
      while (values >> token) labels.push_back(token);
      continue;
    }

    std::vector<double> row;
    std::string token;
    while (stream >> token) row.push_back(parse_double(token, where));
    if (rows.empty()) {
      if (row.empty()) throw std::invalid_argument(where + ": empty matrix row");
    } else if (row.size() != rows.front().size()) {
      throw std::invalid_argument(where + ": row has " + std::to_string(row.size()) +
                                  " entries, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw std::invalid_argument(source_name + ": no matrix rows found");
  const int r = static_cast<int>(rows.size());
  const int cols = static_cast<int>(rows.front().size());

  ContrastSpec spec;
  spec.H.resize(r, cols);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < cols; ++j) spec.H(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  spec.c = Eigen::VectorXd::Zero(r);
  if (have_offsets) {
    if (static_cast<int>(offsets.size()) != r) {
      throw std::invalid_argument(source_name + ": 'c:' has " + std::to_string(offsets.size()) +
                                  " entries, expected " + std::to_string(r));
    }
    for (int i = 0; i < r; ++i) spec.c[i] = offsets[static_cast<std::size_t>(i)];
  }
  if (have_blocks) {
    for (int start : block_starts_1based) {
      if (start < 1 || start > r) {
        throw std::invalid_argument(source_name + ": block start " + std::to_string(start) +
                                    " out of range 1..." + std::to_string(r));
      }
      spec.block_starts.push_back(start - 1);
    }
    if (spec.block_starts.empty() || spec.block_starts.front() != 0) {
      throw std::invalid_argument(source_name + ": first block must start at row 1");
    }
  } else {
    for (int i = 0; i < r; ++i) spec.block_starts.push_back(i);
  }
  const int L = spec.num_blocks();
  if (have_labels) {
    if (static_cast<int>(labels.size()) != L) {
      throw std::invalid_argument(source_name + ": " + std::to_string(labels.size()) +
                                  " labels for " + std::to_string(L) + " blocks");
    }
    spec.labels = std::move(labels);
  } else {
    for (int l = 0; l < L; ++l) spec.labels.push_back("H" + std::to_string(l + 1));
  }
  return spec;
}

ContrastSpec read_contrast_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return read_contrast_spec(in, path);
}

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& message) {
  throw std::invalid_argument("config " + path + ": " + message);
}

const json& need(const json& j, const std::string& path, const char* key) {
  if (!j.is_object() || !j.contains(key)) config_error(path + "." + key, "missing field");
  return j.at(key);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) config_error(path, "expected an integer");
  return j.get<int>();
}

EventLaw parse_event_law(const json& j, const std::string& path) {
  EventLaw law;
  const std::string kind = need(j, path, "kind").get<std::string>();
  if (kind == "exponential") {
    law.kind = EventLaw::Kind::Exponential;
    law.rate = as_number(need(j, path, "rate"), path + ".rate");
  } else if (kind == "weibull") {
    law.kind = EventLaw::Kind::Weibull;
    law.shape = as_number(need(j, path, "shape"), path + ".shape");
    law.scale = as_number(need(j, path, "scale"), path + ".scale");
  } else if (kind == "piecewise_exponential") {
    law.kind = EventLaw::Kind::PiecewiseExponential;
    for (const auto& b : need(j, path, "breakpoints")) {
      law.breakpoints.push_back(as_number(b, path + ".breakpoints"));
    }
    for (const auto& r : need(j, path, "rates")) {
      law.rates.push_back(as_number(r, path + ".rates"));
    }
  } else {
    config_error(path + ".kind", "unknown event law '" + kind + "'");
  }
  if (j.contains("hazard_multiplier")) {
    law.hazard_multiplier = as_number(j.at("hazard_multiplier"), path + ".hazard_multiplier");
  }
  law.validate(path);
  return law;
}

json event_law_to_json(const EventLaw& law) {
  json j;
  switch (law.kind) {
    case EventLaw::Kind::Exponential:
      j["kind"] = "exponential";
      j["rate"] = law.rate;
      break;
    case EventLaw::Kind::Weibull:
      j["kind"] = "weibull";
      j["shape"] = law.shape;
      j["scale"] = law.scale;
      break;
    case EventLaw::Kind::PiecewiseExponential:
      j["kind"] = "piecewise_exponential";
      j["breakpoints"] = law.breakpoints;
      j["rates"] = law.rates;
      break;
  }
  if (law.hazard_multiplier != 1.0) j["hazard_multiplier"] = law.hazard_multiplier;
  return j;
}

CensoringLaw parse_censoring_law(const json& j, const std::string& path) {
  CensoringLaw law;
  const std::string kind = need(j, path, "kind").get<std::string>();
  if (kind == "none") {
    law.kind = CensoringLaw::Kind::None;
  } else if (kind == "exponential") {
    law.kind = CensoringLaw::Kind::Exponential;
    law.rate = as_number(need(j, path, "rate"), path + ".rate");
  } else if (kind == "uniform") {
    law.kind = CensoringLaw::Kind::Uniform;
    if (j.contains("lower")) law.lower = as_number(j.at("lower"), path + ".lower");
    law.upper = as_number(need(j, path, "upper"), path + ".upper");
  } else if (kind == "weibull") {
    law.kind = CensoringLaw::Kind::Weibull;
    law.shape = as_number(need(j, path, "shape"), path + ".shape");
    law.scale = as_number(need(j, path, "scale"), path + ".scale");
  } else {
    config_error(path + ".kind", "unknown censoring law '" + kind + "'");
  }
  law.validate(path);
  return law;
}

json censoring_law_to_json(const CensoringLaw& law) {
  json j;
  switch (law.kind) {
    case CensoringLaw::Kind::None:
      j["kind"] = "none";
      break;
    case CensoringLaw::Kind::Exponential:
      j["kind"] = "exponential";
      j["rate"] = law.rate;
      break;
    case CensoringLaw::Kind::Uniform:
      j["kind"] = "uniform";
      j["lower"] = law.lower;
      j["upper"] = law.upper;
      break;
    case CensoringLaw::Kind::Weibull:
      j["kind"] = "weibull";
      j["shape"] = law.shape;
      j["scale"] = law.scale;
      break;
  }
  return j;
}

}  // namespace

ScenarioConfig parse_scenario_config(const nlohmann::json& j) {
  ScenarioConfig cfg;
  cfg.k = as_int(need(j, "", "k"), ".k");
  cfg.num_causes = as_int(need(j, "", "M"), ".M");
  cfg.cause_probabilities.clear();
  for (const auto& p : need(j, "", "cause_probabilities")) {
    cfg.cause_probabilities.push_back(as_number(p, ".cause_probabilities"));
  }
  cfg.event_laws.clear();
  if (j.contains("event_law")) {
    cfg.event_laws.push_back(parse_event_law(j.at("event_law"), ".event_law"));
  } else if (j.contains("event_laws")) {
    int i = 0;
    for (const auto& law : j.at("event_laws")) {
      cfg.event_laws.push_back(parse_event_law(law, ".event_laws[" + std::to_string(i++) + "]"));
    }
  } else {
    config_error(".event_law", "missing field");
  }
  cfg.censoring_laws.clear();
  if (j.contains("censoring_law")) {
    cfg.censoring_laws.push_back(parse_censoring_law(j.at("censoring_law"), ".censoring_law"));
  } else if (j.contains("censoring_laws")) {
    int i = 0;
    for (const auto& law : j.at("censoring_laws")) {
      cfg.censoring_laws.push_back(
          parse_censoring_law(law, ".censoring_laws[" + std::to_string(i++) + "]"));
    }
  } else {
    CensoringLaw none;
    cfg.censoring_laws.push_back(none);
  }
  cfg.sample_sizes.clear();
  for (const auto& n : need(j, "", "sample_sizes")) {
    cfg.sample_sizes.push_back(as_int(n, ".sample_sizes"));
  }
  cfg.tau = as_number(need(j, "", "tau"), ".tau");
  if (j.contains("delta")) cfg.delta = as_number(j.at("delta"), ".delta");
  if (j.contains("discrete_rounding")) {
    if (!j.at("discrete_rounding").is_boolean()) config_error(".discrete_rounding", "expected a boolean");
    cfg.discrete_rounding = j.at("discrete_rounding").get<bool>();
  }
  if (j.contains("alpha")) cfg.alpha = as_number(j.at("alpha"), ".alpha");
  if (j.contains("B")) cfg.B = as_int(j.at("B"), ".B");
  if (j.contains("replications")) cfg.replications = as_int(j.at("replications"), ".replications");
  if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j.at("methods")) cfg.methods.push_back(m.get<std::string>());
  }
  if (j.contains("contrast")) cfg.contrast = j.at("contrast").get<std::string>();
  if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
  if (j.contains("band_coverage")) {
    cfg.band_coverage = as_number(j.at("band_coverage"), ".band_coverage");
  }
  if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
  cfg.validate();
  return cfg;
}

ScenarioConfig read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  try {
    return parse_scenario_config(j);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["k"] = cfg.k;
  j["M"] = cfg.num_causes;
  j["cause_probabilities"] = cfg.cause_probabilities;
  json laws = json::array();
  for (const auto& law : cfg.event_laws) laws.push_back(event_law_to_json(law));
  j["event_laws"] = laws;
  json censoring = json::array();
  for (const auto& law : cfg.censoring_laws) censoring.push_back(censoring_law_to_json(law));
  j["censoring_laws"] = censoring;
  j["delta"] = cfg.delta;
  j["sample_sizes"] = cfg.sample_sizes;
  j["tau"] = cfg.tau;
  j["discrete_rounding"] = cfg.discrete_rounding;
  j["alpha"] = cfg.alpha;
  j["B"] = cfg.B;
  j["replications"] = cfg.replications;
  j["master_seed"] = cfg.master_seed;
  j["methods"] = cfg.methods;
  j["contrast"] = cfg.contrast;
  j["mode"] = cfg.mode;
  j["band_coverage"] = cfg.band_coverage;
  return j;
}

nlohmann::json study_report_to_json(const StudyReport& report) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "study";
  j["config"] = scenario_to_json(report.config);
  j["replications"] = report.replications;
  j["alpha"] = report.alpha;
  j["band"] = {{"lo", report.band.lo}, {"hi", report.band.hi}, {"coverage", report.band_coverage}};
  j["block_labels"] = report.block_labels;
  json methods = json::array();
  for (const auto& m : report.methods) {
    json method;
    method["method"] = m.method;
    method["global_rejection_rate"] = m.global_rate;
    method["block_rejection_rates"] = m.block_rates;
    methods.push_back(method);
  }
  j["methods"] = methods;
  return j;
}

std::string study_report_to_csv(const StudyReport& report) {
  std::ostringstream out;
  out << "method,hypothesis,rejection_rate,band_lo,band_hi\n";
  for (const auto& m : report.methods) {
    out << m.method << ",global," << format_double(m.global_rate) << ','
        << format_double(report.band.lo) << ',' << format_double(report.band.hi) << '\n';
    for (std::size_t l = 0; l < m.block_rates.size(); ++l) {
      out << m.method << ',' << report.block_labels[l] << ',' << format_double(m.block_rates[l])
          << ',' << format_double(report.band.lo) << ',' << format_double(report.band.hi) << '\n';
    }
  }
  return out.str();
}

std::string render_study_table(const StudyReport& report) {
  std::ostringstream out;
  const auto& cfg = report.config;
  out << "scenario: k=" << cfg.k << " M=" << cfg.num_causes << " n=(";
  for (std::size_t i = 0; i < cfg.sample_sizes.size(); ++i) {
    out << (i ? "," : "") << cfg.sample_sizes[i];
  }
  out << ") tau=" << cfg.tau << " delta=" << cfg.delta
      << (cfg.discrete_rounding ? " discrete" : "") << " contrast=" << cfg.contrast << "/"
      << cfg.mode << "\n";
  out << "replications=" << report.replications << " B=" << cfg.B << " alpha=" << report.alpha
      << " seed=" << cfg.master_seed << "\n";
  char band[96];
  std::snprintf(band, sizeof(band), "band (%.0f%% normal approx): [%.4f, %.4f]\n",
                100.0 * report.band_coverage, report.band.lo, report.band.hi);
  out << band;

  std::size_t width = 12;
  for (const auto& label : report.block_labels) width = std::max(width, label.size() + 2);
  out << "\n";
  {
    std::string header = "method";
    header.resize(20, ' ');
    header += "global";
    out << header;
    for (const auto& label : report.block_labels) {
      std::string cell = label;
      cell.insert(0, width - std::min(width, cell.size()), ' ');
      out << cell;
    }
    out << "\n";
  }
  for (const auto& m : report.methods) {
    std::string row = m.method;
    row.resize(20, ' ');
    char value[32];
    std::snprintf(value, sizeof(value), "%.4f", m.global_rate);
    row += value;
    out << row;
    for (double rate : m.block_rates) {
      std::snprintf(value, sizeof(value), "%*.4f", static_cast<int>(width), rate);
      out << value;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace rmtl
