#include "rmtl/analyze.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "rmtl/inference.hpp"

namespace rmtl {

namespace {

using nlohmann::json;

bool known_method(const std::string& m) {
  return m == "asymptotic" || m == "permutation" || m == "multiple" || m == "asymptotic_bonf" ||
         m == "permutation_bonf";
}

json interval_json(const Interval& ci) { return json{{"lo", ci.lo}, {"hi", ci.hi}}; }

json global_result_json(const GlobalTestResult& r) {
  json j;
  j["type"] = "global";
  j["method"] = r.method;
  j["statistic"] = r.statistic;
  j["df"] = r.df;
  j["critical_value"] = r.critical_value;
  j["p_value"] = r.p_value;
  j["rejected"] = r.rejected;
  j["alpha"] = r.alpha;
  if (r.B_used > 0) j["B"] = r.B_used;
  j["rank_mismatch"] = r.rank_mismatch;
  return j;
}

json multiple_result_json(const MultipleTestResult& r) {
  json j;
  j["type"] = "multiple";
  j["method"] = r.method;
  j["alpha"] = r.alpha;
  j["local_level"] = r.local_level_beta;
  if (r.B_used > 0) j["B"] = r.B_used;
  j["any_rejection"] = r.any_rejection();
  json blocks = json::array();
  for (const auto& b : r.blocks) {
    json block;
    block["label"] = b.label;
    block["statistic"] = b.statistic;
    block["rank"] = b.rank;
    block["critical_value"] = b.critical_value;
    block["p_value"] = b.p_value;
    block["adjusted_p"] = b.adjusted_p;
    block["rejected"] = b.rejected;
    block["rank_mismatch"] = b.rank_mismatch;
    if (b.has_interval) block["simultaneous_ci"] = interval_json(b.interval);
    blocks.push_back(block);
  }
  j["blocks"] = blocks;
  return j;
}

}  // namespace

void AnalysisRequest::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (B < 1) throw std::invalid_argument("B must be >= 1");
  if (!known_method(method)) throw std::invalid_argument("unknown method '" + method + "'");
  for (int m : causes) {
    if (m < 1) throw std::invalid_argument("cause indices are 1-based and must be >= 1");
  }
}

ContrastSpec request_contrast(const AnalysisRequest& req, int k, int num_causes) {
  if (req.contrast.rfind("file:", 0) == 0) {
    if (req.per_event || !req.causes.empty()) {
      throw std::invalid_argument(
          "a contrast file fixes the hypothesis matrix; --per-event/--causes do not apply");
    }
    ContrastSpec spec = read_contrast_file(req.contrast.substr(5));
    require_valid(spec, k, num_causes);
    return spec;
  }

  Eigen::MatrixXd group_matrix;
  std::vector<std::string> labels;
  if (req.contrast == "dunnett") {
    if (k < 2) throw std::invalid_argument("dunnett contrasts need at least 2 groups");
    group_matrix = dunnett(k);
    for (int i = 2; i <= k; ++i) labels.push_back("g" + std::to_string(i) + "-g1");
  } else if (req.contrast == "tukey") {
    if (k < 2) throw std::invalid_argument("tukey contrasts need at least 2 groups");
    group_matrix = tukey(k);
    for (int i = 1; i < k; ++i) {
      for (int j = i + 1; j <= k; ++j) {
        labels.push_back("g" + std::to_string(j) + "-g" + std::to_string(i));
      }
    }
  } else if (req.contrast == "2x2") {
    if (k != 4) {
      throw std::invalid_argument("the 2x2 factorial contrast requires exactly 4 groups, data has " +
                                  std::to_string(k));
    }
    group_matrix = factorial_2x2();
    labels = factorial_2x2_labels();
  } else {
    throw std::invalid_argument("unknown contrast '" + req.contrast +
                                "' (expected dunnett, tukey, 2x2 or file:PATH)");
  }

  for (int m : req.causes) {
    if (m > num_causes) {
      throw std::invalid_argument("selected cause " + std::to_string(m) + " exceeds M = " +
                                  std::to_string(num_causes));
    }
  }
  ExpandMode mode = ExpandMode::AllEvents;
  if (!req.causes.empty()) {
    mode = ExpandMode::SelectedEvents;
  } else if (req.per_event) {
    mode = ExpandMode::PerEvent;
  }
  ContrastSpec spec = expand(group_matrix, num_causes, mode, req.causes, labels);
  require_valid(spec, k, num_causes);
  return spec;
}

nlohmann::json run_analysis(const AnalysisRequest& req, const LabeledSamples& data) {
  req.validate();
  const RmtlSummary summary = fit_all(data.samples, req.tau);
  const bool estimation_only = summary.k == 1;  // no group contrast is testable

  json report;
  report["schema_version"] = 1;
  report["kind"] = "analysis";

  json parameters;
  parameters["tau"] = req.tau;
  parameters["alpha"] = req.alpha;
  parameters["method"] = req.method;
  parameters["contrast"] = req.contrast;
  parameters["per_event"] = req.per_event;
  parameters["causes"] = req.causes;
  parameters["B"] = req.B;
  parameters["seed"] = req.seed;
  report["parameters"] = parameters;

  json groups = json::array();
  for (int i = 0; i < summary.k; ++i) {
    json g;
    g["index"] = i + 1;
    g["label"] = data.labels[static_cast<std::size_t>(i)];
    g["n"] = summary.n_per_group[static_cast<std::size_t>(i)];
    groups.push_back(g);
  }
  report["data"] = {{"n", summary.n}, {"k", summary.k}, {"M", summary.num_causes},
                    {"groups", groups}};

  json estimates = json::array();
  for (int i = 0; i < summary.k; ++i) {
    for (int m = 1; m <= summary.num_causes; ++m) {
      json e;
      e["group"] = data.labels[static_cast<std::size_t>(i)];
      e["cause"] = m;
      e["rmtl"] = summary.mu_hat[summary.index(i, m)];
      e["se"] = summary.standard_error(i, m);
      estimates.push_back(e);
    }
  }
  report["estimates"] = estimates;

  json sigma = json::array();
  for (Eigen::Index i = 0; i < summary.sigma_hat.dim(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < summary.sigma_hat.dim(); ++j) {
      row.push_back(summary.sigma_hat(i, j));
    }
    sigma.push_back(row);
  }
  report["sigma_hat"] = sigma;

  json warnings = json::array();
  for (int i = 0; i < summary.k; ++i) {
    const auto& w = summary.group_warnings[static_cast<std::size_t>(i)];
    if (!w.any()) continue;
    json entry;
    entry["group"] = data.labels[static_cast<std::size_t>(i)];
    entry["tau_beyond_data"] = w.tau_beyond_data;
    entry["zero_event_causes"] = w.zero_event_causes;
    warnings.push_back(entry);
  }
  report["warnings"] = warnings;

  if (estimation_only) {
    report["note"] = "single group: estimates only, no contrast to test";
    return report;
  }

  const ContrastSpec spec = request_contrast(req, summary.k, summary.num_causes);
  json blocks = json::array();
  for (int l = 0; l < spec.num_blocks(); ++l) {
    json b;
    b["label"] = spec.labels[static_cast<std::size_t>(l)];
    b["first_row"] = spec.block_begin(l) + 1;
    b["rows"] = spec.block_size(l);
    blocks.push_back(b);
  }
  json contrast;
  json h_rows = json::array();
  for (int i = 0; i < spec.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < spec.H.cols(); ++j) row.push_back(spec.H(i, j));
    h_rows.push_back(row);
  }
  contrast["H"] = h_rows;
  json c_values = json::array();
  for (int i = 0; i < spec.rows(); ++i) c_values.push_back(spec.c[i]);
  contrast["c"] = c_values;
  contrast["blocks"] = blocks;
  report["contrast"] = contrast;

  if (req.method == "asymptotic") {
    auto result = asymptotic_global_test(summary, spec, req.alpha);
    json test = global_result_json(result);
    if (spec.rows() == 1) {
      test["confidence_interval"] =
          interval_json(contrast_interval(summary, spec.H, result.critical_value));
    }
    report["test"] = test;
  } else if (req.method == "permutation") {
    auto result = permutation_global_test(data.samples, spec, req.tau, req.alpha, req.B, req.seed,
                                          req.threads);
    json test = global_result_json(result);
    if (spec.rows() == 1) {
      test["confidence_interval"] =
          interval_json(contrast_interval(summary, spec.H, result.critical_value));
    }
    report["test"] = test;
  } else if (req.method == "multiple") {
    report["test"] = multiple_result_json(
        multiple_asymptotic_test(summary, spec, req.alpha, req.B, req.seed, req.threads));
  } else if (req.method == "asymptotic_bonf") {
    report["test"] = multiple_result_json(bonferroni_asymptotic_test(summary, spec, req.alpha));
  } else {
    report["test"] = multiple_result_json(bonferroni_permutation_test(
        data.samples, spec, req.tau, req.alpha, req.B, req.seed, req.threads));
  }
  return report;
}

std::string render_analysis_table(const nlohmann::json& report) {
  std::ostringstream out;
  const auto& data = report.at("data");
  const auto& params = report.at("parameters");
  out << "n=" << data.at("n").get<int>() << "  k=" << data.at("k").get<int>()
      << "  M=" << data.at("M").get<int>() << "  tau=" << params.at("tau").get<double>()
      << "  alpha=" << params.at("alpha").get<double>() << "\n";
  out << "groups:";
  for (const auto& g : data.at("groups")) {
    out << "  [" << g.at("index").get<int>() << "] " << g.at("label").get<std::string>() << " (n="
        << g.at("n").get<int>() << ")";
  }
  out << "\n\n";

  out << "restricted mean time lost by group and cause\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %6s %14s %14s\n", "group", "cause", "estimate", "se");
  out << line;
  for (const auto& e : report.at("estimates")) {
    std::snprintf(line, sizeof(line), "%-16s %6d %14.6f %14.6f\n",
                  e.at("group").get<std::string>().c_str(), e.at("cause").get<int>(),
                  e.at("rmtl").get<double>(), e.at("se").get<double>());
    out << line;
  }

  if (!report.at("warnings").empty()) {
    out << "\nwarnings:\n";
    for (const auto& w : report.at("warnings")) {
      out << "  group " << w.at("group").get<std::string>() << ":";
      if (w.at("tau_beyond_data").get<bool>()) out << " nobody at risk at tau";
      const auto& zero = w.at("zero_event_causes");
      if (!zero.empty()) {
        out << " no events for cause(s)";
        for (const auto& m : zero) out << " " << m.get<int>();
      }
      out << "\n";
    }
  }

  if (!report.contains("test")) {
    if (report.contains("note")) out << "\n" << report.at("note").get<std::string>() << "\n";
    return out.str();
  }
  const auto& test = report.at("test");
  out << "\n";
  if (test.at("type").get<std::string>() == "global") {
    out << "global " << test.at("method").get<std::string>() << " test\n";
    std::snprintf(line, sizeof(line),
                  "  statistic=%.6f  df=%d  critical=%.6f  p=%.6g  rejected=%s\n",
                  test.at("statistic").get<double>(), test.at("df").get<int>(),
                  test.at("critical_value").get<double>(), test.at("p_value").get<double>(),
                  test.at("rejected").get<bool>() ? "yes" : "no");
    out << line;
    if (test.contains("confidence_interval")) {
      const auto& ci = test.at("confidence_interval");
      std::snprintf(line, sizeof(line), "  confidence interval: [%.6f, %.6f]\n",
                    ci.at("lo").get<double>(), ci.at("hi").get<double>());
      out << line;
    }
  } else {
    out << test.at("method").get<std::string>() << " multiple test, local level "
        << test.at("local_level").get<double>() << "\n";
    std::snprintf(line, sizeof(line), "%-20s %12s %6s %12s %12s %10s %9s\n", "hypothesis",
                  "statistic", "rank", "p", "adj p", "rejected", "ci");
    out << line;
    for (const auto& b : test.at("blocks")) {
      std::string ci_text = "-";
      if (b.contains("simultaneous_ci")) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "[%.4f, %.4f]", b.at("simultaneous_ci").at("lo").get<double>(),
                      b.at("simultaneous_ci").at("hi").get<double>());
        ci_text = buf;
      }
      std::snprintf(line, sizeof(line), "%-20s %12.6f %6d %12.6g %12.6g %10s %s\n",
                    b.at("label").get<std::string>().c_str(), b.at("statistic").get<double>(),
                    b.at("rank").get<int>(), b.at("p_value").get<double>(),
                    b.at("adjusted_p").get<double>(), b.at("rejected").get<bool>() ? "yes" : "no",
                    ci_text.c_str());
      out << line;
    }
  }
  return out.str();
}

}  // namespace rmtl
