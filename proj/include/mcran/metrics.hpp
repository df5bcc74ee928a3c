#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcran/sim_core.hpp"

namespace mcran {

// One record in the metrics stream. All values travel as strings so the
// live path and the trace-replay path see byte-identical input.
struct MetricEvent {
    MicroSec t = 0;
    std::string kind;
    std::vector<std::pair<std::string, std::string>> fields;

    MetricEvent() = default;
    MetricEvent(MicroSec time, std::string k) : t(time), kind(std::move(k)) {}

    MetricEvent& add(const std::string& key, const std::string& value);
    MetricEvent& add_i(const std::string& key, std::int64_t value);
    MetricEvent& add_u(const std::string& key, std::uint64_t value);
    MetricEvent& add_d(const std::string& key, double value);

    const std::string* find(const std::string& key) const;
    std::int64_t get_i(const std::string& key, std::int64_t fallback = 0) const;
    double get_d(const std::string& key, double fallback = 0.0) const;
    std::string get_s(const std::string& key,
                      const std::string& fallback = "") const;
};

std::string format_double(double v); // round-trip safe
double parse_double(const std::string& s);

// Aggregates the event stream into the report. The report is a pure
// function of (config echo, seed, events), which is what makes `replay`
// reproduce `run` byte for byte.
class MetricsCollector {
public:
    void consume(const MetricEvent& ev);

    const std::vector<MetricEvent>& events() const { return events_; }

    nlohmann::ordered_json report(const nlohmann::ordered_json& config_echo,
                                  std::uint64_t seed) const;

    // One-line human summary for the CLI.
    std::string summary_line(const std::string& scenario_name) const;

private:
    std::vector<MetricEvent> events_;
};

// Trace file round trip. The header carries the scenario echo and seed so a
// trace is self-contained for replay.
void write_trace(std::ostream& out, const nlohmann::ordered_json& config_echo,
                 std::uint64_t seed, const std::vector<MetricEvent>& events);

struct TraceFile {
    nlohmann::ordered_json config_echo;
    std::uint64_t seed = 0;
    std::vector<MetricEvent> events;
};

TraceFile read_trace(std::istream& in);

} // namespace mcran
