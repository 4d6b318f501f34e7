#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rmtl/analyze.hpp"
#include "rmtl/io.hpp"

using namespace rmtl;

namespace {

LabeledSamples from_string(const std::string& csv) {
  std::istringstream in(csv);
  return ingest_csv(in, "test.csv");
}

LabeledSamples two_sample_data() {
  return from_string(
      "group,time,status\n"
      "ctrl,1,1\nctrl,2,0\nctrl,2,2\nctrl,3.5,1\nctrl,4,2\nctrl,5,0\nctrl,6,1\nctrl,7.5,2\n"
      "trt,0.5,2\ntrt,1.5,1\ntrt,2,1\ntrt,3,0\ntrt,4.5,2\ntrt,5.5,1\ntrt,6.5,0\ntrt,8,1\n");
}

}  // namespace

TEST_CASE("csv ingestion") {
  SUBCASE("four groups, statuses up to three") {
    const auto data = from_string(
        "group,time,status\n"
        "a,1,1\na,2,3\nb,1,0\nb,2,1\nc,3,2\nc,4,0\nd,5,3\nd,6,1\n");
    CHECK(data.labels == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(data.samples.size() == 4);
    for (const auto& s : data.samples) CHECK(s.num_causes == 3);
  }
  SUBCASE("single group is allowed") {
    const auto data = from_string("group,time,status\nonly,1,1\nonly,2,0\n");
    CHECK(data.samples.size() == 1);
  }
  SUBCASE("groups ordered lexicographically regardless of file order") {
    const auto data = from_string("group,time,status\nzeta,1,1\nzeta,2,0\nalpha,3,1\nalpha,4,0\n");
    CHECK(data.labels == std::vector<std::string>{"alpha", "zeta"});
  }
  SUBCASE("error cases carry the line number") {
    CHECK_THROWS_WITH_AS(from_string("group,time\n"), doctest::Contains("header"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(from_string("group,time,status\na,1\n"), doctest::Contains("test.csv:2"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(from_string("group,time,status\na,1,1\na,oops,0\n"),
                         doctest::Contains("test.csv:3"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(from_string("group,time,status\na,-1,1\na,1,0\n"),
                         doctest::Contains("nonnegative"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(from_string("group,time,status\na,1,-2\na,1,0\n"),
                         doctest::Contains("status"), std::invalid_argument);
  }
  SUBCASE("degenerate datasets rejected") {
    CHECK_THROWS_WITH_AS(from_string("group,time,status\na,1,1\n"),
                         doctest::Contains("fewer than 2"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(from_string("group,time,status\na,1,0\na,2,0\n"),
                         doctest::Contains("status is 0"), std::invalid_argument);
    CHECK_THROWS_AS(from_string("group,time,status\n"), std::invalid_argument);
  }
}

TEST_CASE("csv round trip is exact") {
  LabeledSamples data;
  data.labels = {"g1", "g2"};
  GroupSample a;
  a.times = {0.1, 1.0 / 3.0, 2.5000000000000004, 7.213e-5};
  a.statuses = {1, 0, 2, 1};
  a.num_causes = 2;
  GroupSample b;
  b.times = {1e-12, 3.141592653589793, 12345.6789, 2.0};
  b.statuses = {2, 1, 0, 0};
  b.num_causes = 2;
  data.samples = {a, b};

  std::ostringstream out;
  emit_csv(out, data);
  std::istringstream in(out.str());
  const auto back = ingest_csv(in, "roundtrip");
  REQUIRE(back.labels == data.labels);
  for (std::size_t g = 0; g < 2; ++g) {
    REQUIRE(back.samples[g].times.size() == data.samples[g].times.size());
    for (std::size_t j = 0; j < data.samples[g].times.size(); ++j) {
      CHECK(back.samples[g].times[j] == data.samples[g].times[j]);
      CHECK(back.samples[g].statuses[j] == data.samples[g].statuses[j]);
    }
  }
}

TEST_CASE("contrast files") {
  SUBCASE("rows, offsets, blocks and labels") {
    std::istringstream in(
        "# two-sample, two causes\n"
        "-1 0 1 0\n"
        "0 -1 0 1\n"
        "c: 0.5 0\n"
        "blocks: 1 2\n"
        "labels: first second\n");
    const auto spec = read_contrast_spec(in, "h.txt");
    CHECK(spec.rows() == 2);
    CHECK(spec.H(0, 0) == -1.0);
    CHECK(spec.c[0] == 0.5);
    CHECK(spec.num_blocks() == 2);
    CHECK(spec.labels[0] == "first");
    CHECK(validate(spec, 2, 2).empty());
  }
  SUBCASE("defaults: zero offsets, one block per row") {
    std::istringstream in("-1 1\n");
    const auto spec = read_contrast_spec(in, "h.txt");
    CHECK(spec.c[0] == 0.0);
    CHECK(spec.num_blocks() == 1);
    CHECK(spec.labels[0] == "H1");
  }
  SUBCASE("multi-row block grouping") {
    std::istringstream in(
        "-1 0 1 0\n"
        "0 -1 0 1\n"
        "blocks: 1\n");
    const auto spec = read_contrast_spec(in, "h.txt");
    CHECK(spec.num_blocks() == 1);
    CHECK(spec.block(0).rows() == 2);
  }
  SUBCASE("parse errors") {
    std::istringstream ragged("-1 1\n-1 1 0\n");
    CHECK_THROWS_WITH_AS(read_contrast_spec(ragged, "h.txt"), doctest::Contains("h.txt:2"),
                         std::invalid_argument);
    std::istringstream bad_c("-1 1\nc: 1 2 3\n");
    CHECK_THROWS_AS(read_contrast_spec(bad_c, "h.txt"), std::invalid_argument);
    std::istringstream bad_block("-1 1\nblocks: 2\n");
    CHECK_THROWS_AS(read_contrast_spec(bad_block, "h.txt"), std::invalid_argument);
    std::istringstream empty("# nothing\n");
    CHECK_THROWS_AS(read_contrast_spec(empty, "h.txt"), std::invalid_argument);
  }
}

TEST_CASE("scenario config json") {
  SUBCASE("full round trip") {
    const nlohmann::json j = {
        {"k", 4},
        {"M", 3},
        {"cause_probabilities", {0.33, 0.25, 0.42}},
        {"event_law", {{"kind", "exponential"}, {"rate", 0.2}}},
        {"censoring_law", {{"kind", "uniform"}, {"lower", 0.0}, {"upper", 25.0}}},
        {"sample_sizes", {60, 60, 60, 60}},
        {"tau", 10.0},
        {"delta", 1.5},
        {"B", 199},
        {"replications", 10},
        {"master_seed", 99},
        {"contrast", "2x2"},
        {"mode", "per_event"},
    };
    const auto cfg = parse_scenario_config(j);
    CHECK(cfg.k == 4);
    CHECK(cfg.delta == 1.5);
    CHECK(cfg.event_laws.size() == 1);
    const auto round = scenario_to_json(cfg);
    const auto cfg2 = parse_scenario_config(round);
    CHECK(cfg2.master_seed == 99);
    CHECK(cfg2.event_laws[0].rate == 0.2);
    CHECK(cfg2.censoring_laws[0].upper == 25.0);
  }
  SUBCASE("errors name the offending field") {
    nlohmann::json j = {{"k", 2}};
    CHECK_THROWS_WITH_AS(parse_scenario_config(j), doctest::Contains(".M"), std::invalid_argument);
    j = {{"k", 2},
         {"M", 1},
         {"cause_probabilities", {1.0}},
         {"event_law", {{"kind", "gamma"}}},
         {"sample_sizes", {10, 10}},
         {"tau", 5.0}};
    CHECK_THROWS_WITH_AS(parse_scenario_config(j), doctest::Contains("unknown event law"),
                         std::invalid_argument);
    j["event_law"] = {{"kind", "exponential"}, {"rate", -2.0}};
    CHECK_THROWS_WITH_AS(parse_scenario_config(j), doctest::Contains(".event_law.rate"),
                         std::invalid_argument);
  }
}

TEST_CASE("analysis requests") {
  const auto data = two_sample_data();

  SUBCASE("two-sample per-event permutation") {
    AnalysisRequest req;
    req.tau = 6.0;
    req.alpha = 0.05;
    req.method = "permutation_bonf";
    req.contrast = "dunnett";
    req.per_event = true;
    req.B = 99;
    req.seed = 11;
    const auto report = run_analysis(req, data);
    CHECK(report.at("schema_version").get<int>() == 1);
    CHECK(report.at("data").at("k").get<int>() == 2);
    CHECK(report.at("data").at("M").get<int>() == 2);
    const auto& blocks = report.at("test").at("blocks");
    REQUIRE(blocks.size() == 2);  // one hypothesis per event type
    CHECK(blocks[0].at("label").get<std::string>() == "g2-g1:cause1");
    for (const auto& b : blocks) {
      CHECK(b.contains("adjusted_p"));
      CHECK(b.contains("simultaneous_ci"));
    }
  }
  SUBCASE("single group falls back to estimation only") {
    const auto one = from_string("group,time,status\nonly,1,1\nonly,2,0\nonly,3,2\nonly,4,1\n");
    AnalysisRequest req;
    req.tau = 3.0;
    const auto report = run_analysis(req, one);
    CHECK(report.at("estimates").size() == 2);
    CHECK_FALSE(report.contains("test"));
    CHECK(render_analysis_table(report).find("estimates only") != std::string::npos);
  }
  SUBCASE("selected causes restrict the hypotheses") {
    AnalysisRequest req;
    req.tau = 6.0;
    req.method = "asymptotic";
    req.contrast = "dunnett";
    req.causes = {1};
    const auto report = run_analysis(req, data);
    CHECK(report.at("contrast").at("H").size() == 1);
    CHECK(report.at("test").contains("confidence_interval"));
  }
  SUBCASE("2x2 factorial with three causes yields nine adjusted p-values") {
    const auto four = from_string(
        "group,time,status\n"
        "a,1,1\na,2,2\na,3,3\na,4,0\na,5,1\na,6,2\na,7,3\na,8,0\n"
        "b,1,2\nb,2,3\nb,3,1\nb,4,0\nb,5,2\nb,6,1\nb,7,3\nb,9,0\n"
        "c,1,3\nc,2,1\nc,3,2\nc,4,0\nc,5,3\nc,6,2\nc,7,1\nc,10,0\n"
        "d,1,1\nd,2,3\nd,3,2\nd,4,0\nd,5,1\nd,6,3\nd,7,2\nd,11,0\n");
    AnalysisRequest req;
    req.tau = 6.0;
    req.method = "multiple";
    req.contrast = "2x2";
    req.per_event = true;
    req.B = 499;
    const auto report = run_analysis(req, four);
    CHECK(report.at("test").at("blocks").size() == 9);
    CHECK(report.at("test").at("local_level").get<double>() > 0.0);
  }
  SUBCASE("byte-identical reports for the same seed and any worker count") {
    AnalysisRequest req;
    req.tau = 6.0;
    req.method = "multiple";
    req.contrast = "dunnett";
    req.per_event = true;
    req.B = 199;
    req.seed = 1234;
    req.threads = 1;
    const std::string first = run_analysis(req, data).dump(2);
    req.threads = 3;
    const std::string second = run_analysis(req, data).dump(2);
    CHECK(first == second);
  }
  SUBCASE("request validation") {
    AnalysisRequest req;
    req.tau = 0.0;
    CHECK_THROWS_AS(run_analysis(req, data), std::invalid_argument);
    req.tau = 5.0;
    req.method = "wild_bootstrap";
    CHECK_THROWS_AS(run_analysis(req, data), std::invalid_argument);
    req.method = "asymptotic";
    req.contrast = "2x2";  // needs four groups
    CHECK_THROWS_WITH_AS(run_analysis(req, data), doctest::Contains("4 groups"),
                         std::invalid_argument);
  }
  SUBCASE("table rendering mentions the essentials") {
    AnalysisRequest req;
    req.tau = 6.0;
    req.method = "asymptotic_bonf";
    req.contrast = "dunnett";
    req.per_event = true;
    const auto report = run_analysis(req, data);
    const std::string table = render_analysis_table(report);
    CHECK(table.find("restricted mean time lost") != std::string::npos);
    CHECK(table.find("ctrl") != std::string::npos);
    CHECK(table.find("g2-g1:cause1") != std::string::npos);
  }
}

TEST_CASE("study report serialization") {
  ScenarioConfig cfg = preset_scenario("balanced_null");
  cfg.replications = 5;
  cfg.B = 49;
  cfg.sample_sizes = {15, 15, 15, 15};
  cfg.threads = 1;
  const auto report = run_study(cfg);

  const auto j = study_report_to_json(report);
  CHECK(j.at("schema_version").get<int>() == 1);
  CHECK(j.at("kind").get<std::string>() == "study");
  CHECK(j.at("methods").size() == 3);
  CHECK_FALSE(j.contains("runtime_seconds"));
  const auto cfg_round = parse_scenario_config(j.at("config"));
  CHECK(cfg_round.replications == 5);

  const std::string csv = study_report_to_csv(report);
  CHECK(csv.find("method,hypothesis,rejection_rate") != std::string::npos);
  CHECK(csv.find("permutation_bonf,global,") != std::string::npos);

  const std::string table = render_study_table(report);
  CHECK(table.find("asymptotic") != std::string::npos);
  CHECK(table.find("band") != std::string::npos);
}
