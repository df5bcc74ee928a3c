#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mcran/admission.hpp"
#include "mcran/iab.hpp"
#include "mcran/metrics.hpp"
#include "mcran/multicast.hpp"
#include "mcran/scenario.hpp"
#include "mcran/sidelink.hpp"
#include "mcran/sim_core.hpp"

namespace mcran {

struct RunResult {
    nlohmann::ordered_json report;
    std::vector<MetricEvent> events;
    std::uint64_t events_executed = 0;
    std::string summary;
};

// Builds one engine per call and executes the scenario end to end. The
// engine loop is single-threaded; run replicas in parallel by giving each
// its own ScenarioRunner.
class ScenarioRunner {
public:
    explicit ScenarioRunner(Scenario scenario);
    ~ScenarioRunner();

    RunResult run();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Convenience wrapper: load, run with an optional seed override.
RunResult run_scenario(const Scenario& scenario,
                       std::optional<std::uint64_t> seed_override = {});

// Rebuilds a report from a recorded trace (same aggregation path as run).
nlohmann::ordered_json replay_trace(const TraceFile& trace);

} // namespace mcran
