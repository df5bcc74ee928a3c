#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mcran/errors.hpp"
#include "mcran/runner.hpp"
#include "mcran/scenario.hpp"

using namespace mcran;
using json = nlohmann::ordered_json;

namespace {

std::string scenario_path(const std::string& name) {
    return std::string(MCRAN_SCENARIO_DIR) + "/" + name;
}

json minimal_overload() {
    return json::parse(R"({
      "name": "mini-overload",
      "duration_ms": 1200,
      "seed": 5,
      "uac": {
        "mc_category": 2,
        "commercial_category": 7,
        "categories": {
          "2": {"barring_factor": 0.0, "barring_time_ms": 320, "exempt_identities": [1]},
          "7": {"barring_factor": 0.3, "barring_time_ms": 320}
        }
      },
      "cells": [{"id": "macro", "capacity_prbs": 20, "position": [0, 0, 25]}],
      "ues": [
        {"prefix": "shopper", "count": 24, "class": "commercial", "service": "commercial",
         "cell": "macro", "arrival_window_ms": [0, 100], "rate_kbps": 1000, "radius_m": 150},
        {"prefix": "responder", "count": 6, "class": "mc", "service": "mcptt_voice",
         "cell": "macro", "arrival_window_ms": [200, 300], "radius_m": 150}
      ]
    })");
}

} // namespace

TEST_CASE("bundled scenario catalog validates cleanly") {
    for (const char* name :
         {"overload.json", "deployable-coverage.json", "group-comms.json",
          "burning-building-positioning.json"}) {
        std::ifstream in(scenario_path(name));
        REQUIRE(in);
        json j;
        in >> j;
        const ValidationReport report = validate_scenario(j);
        CHECK_MESSAGE(report.ok(), name, ": ", report.to_string());
    }
}

TEST_CASE("unknown cell reference is a semantic error naming the UE group") {
    json j = minimal_overload();
    j["ues"][1]["cell"] = "nowhere";
    const ValidationReport report = validate_scenario(j);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& issue : report.issues) {
        if (issue.message.find("responder") != std::string::npos &&
            issue.message.find("nowhere") != std::string::npos) {
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("barring factor outside [0,1] is a range error") {
    json j = minimal_overload();
    j["uac"]["categories"]["7"]["barring_factor"] = 1.3;
    const ValidationReport report = validate_scenario(j);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& issue : report.issues) {
        if (issue.path.find("barring_factor") != std::string::npos) {
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("several issues are reported in one pass") {
    json j = minimal_overload();
    j["uac"]["categories"]["7"]["barring_factor"] = -0.2;
    j["ues"][0]["cell"] = "ghost";
    j["ues"][1]["rate_kbps"] = 99999;
    const ValidationReport report = validate_scenario(j);
    CHECK(report.issues.size() >= 3);
}

TEST_CASE("qos overrides patch the built-in rows") {
    json j = minimal_overload();
    j["qos"] = {{"65", {{"gbr_kbps", 40}}}};
    Scenario sc;
    REQUIRE(parse_scenario(j, sc).ok());
    CHECK(*sc.profile_for(ServiceKind::McpttVoice).gbr_kbps == 40);
    CHECK(sc.profile_for(ServiceKind::McpttVoice).priority_level == 7);
}

TEST_CASE("empty scenario runs to a report of zeros") {
    json j = json::parse(
        R"({"name": "empty", "duration_ms": 10, "seed": 1})");
    Scenario sc;
    REQUIRE(parse_scenario(j, sc).ok());
    const RunResult result = run_scenario(sc);
    CHECK(result.report["access"]["mc"]["uac_attempts"] == 0);
    CHECK(result.report["admission"]["requests"] == 0);
    CHECK(result.report["flows"]["count"] == 0);
    CHECK(result.report["events_executed"] == 0);
}

TEST_CASE("arrival events match the population enumeration") {
    json j = minimal_overload();
    Scenario sc;
    REQUIRE(parse_scenario(j, sc).ok());
    const RunResult result = run_scenario(sc);
    // Direct enumeration of the arrival process: one UAC attempt per UE,
    // no retries configured.
    std::int64_t expected = 0;
    for (const auto& pop : sc.populations) {
        expected += pop.count;
    }
    std::int64_t uac_events = 0;
    for (const MetricEvent& ev : result.events) {
        if (ev.kind == "uac") {
            ++uac_events;
        }
    }
    CHECK(uac_events == expected);
}

TEST_CASE("mini overload exercises barring, preemption and MC admission") {
    Scenario sc;
    REQUIRE(parse_scenario(minimal_overload(), sc).ok());
    const RunResult result = run_scenario(sc);
    const json& adm = result.report["admission"];
    CHECK(adm["mc"]["gbr_requests"].get<int>() > 0);
    CHECK(adm["mc"]["gbr_admitted"] == adm["mc"]["gbr_requests"]);
    CHECK(adm["admitted_with_preemption"].get<int>() >= 1);
    CHECK(result.report["admission"]["preempted_notpreemptable"] == 0);
    CHECK(result.report["flows"]["gbr_pdb_violations"] == 0);
    const json& uac = result.report["access"]["commercial"];
    CHECK(uac["uac_barred"].get<int>() > 0);
    CHECK(result.report["access"]["mc"]["uac_barred"] == 0);
}

TEST_CASE("identical scenario and seed give byte-identical reports") {
    Scenario sc;
    REQUIRE(parse_scenario(minimal_overload(), sc).ok());
    const RunResult a = run_scenario(sc);
    const RunResult b = run_scenario(sc);
    CHECK(a.report.dump(2) == b.report.dump(2));
    const RunResult c = run_scenario(sc, 99);
    CHECK(a.report.dump(2) != c.report.dump(2));
}

TEST_CASE("trace round trip reproduces the report byte for byte") {
    Scenario sc;
    REQUIRE(parse_scenario(minimal_overload(), sc).ok());
    const RunResult result = run_scenario(sc);

    std::ostringstream out;
    write_trace(out, sc.raw, sc.seed, result.events);
    std::istringstream in(out.str());
    const TraceFile trace = read_trace(in);
    CHECK(trace.seed == sc.seed);
    REQUIRE(trace.events.size() == result.events.size());
    const json replayed = replay_trace(trace);
    CHECK(replayed.dump(2) == result.report.dump(2));
}

TEST_CASE("report schema is stable across scenario kinds") {
    json j = json::parse(R"({"name": "empty", "duration_ms": 1, "seed": 1})");
    Scenario sc;
    REQUIRE(parse_scenario(j, sc).ok());
    const json report = run_scenario(sc).report;
    for (const char* key : {"schema", "scenario", "seed", "access", "admission",
                            "flows", "mbs", "iab", "sidelink", "positioning",
                            "events_executed"}) {
        CHECK_MESSAGE(report.contains(key), "missing section: ", key);
    }
    CHECK(report["positioning"].contains("horizontal_error_m"));
    CHECK(report["sidelink"].contains("groupcast_rounds"));
}

TEST_CASE("load_scenario_file rejects invalid files with the issue list") {
    CHECK_THROWS_AS(load_scenario_file("/nonexistent/file.json"),
                    ValidationError);
}
