#include "mcran/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "mcran/errors.hpp"

namespace mcran {

MetricEvent& MetricEvent::add(const std::string& key, const std::string& value) {
    fields.emplace_back(key, value);
    return *this;
}

MetricEvent& MetricEvent::add_i(const std::string& key, std::int64_t value) {
    return add(key, std::to_string(value));
}

MetricEvent& MetricEvent::add_u(const std::string& key, std::uint64_t value) {
    return add(key, std::to_string(value));
}

MetricEvent& MetricEvent::add_d(const std::string& key, double value) {
    return add(key, format_double(value));
}

const std::string* MetricEvent::find(const std::string& key) const {
    for (const auto& [k, v] : fields) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

std::int64_t MetricEvent::get_i(const std::string& key,
                                std::int64_t fallback) const {
    const std::string* v = find(key);
    return v ? std::stoll(*v) : fallback;
}

double MetricEvent::get_d(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    return v ? parse_double(*v) : fallback;
}

std::string MetricEvent::get_s(const std::string& key,
                               const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) { return std::stod(s); }

void MetricsCollector::consume(const MetricEvent& ev) {
    events_.push_back(ev);
}

namespace {

std::int64_t percentile_i(std::vector<std::int64_t> v, double pct) {
    if (v.empty()) {
        return 0;
    }
    std::sort(v.begin(), v.end());
    const double rank = pct / 100.0 * static_cast<double>(v.size());
    std::size_t idx =
        rank <= 1.0 ? 0 : static_cast<std::size_t>(std::ceil(rank)) - 1;
    idx = std::min(idx, v.size() - 1);
    return v[idx];
}

double percentile_d(std::vector<double> v, double pct) {
    if (v.empty()) {
        return 0.0;
    }
    std::sort(v.begin(), v.end());
    const double rank = pct / 100.0 * static_cast<double>(v.size());
    std::size_t idx =
        rank <= 1.0 ? 0 : static_cast<std::size_t>(std::ceil(rank)) - 1;
    idx = std::min(idx, v.size() - 1);
    return v[idx];
}

struct ClassAccess {
    std::int64_t uac_attempts = 0;
    std::int64_t uac_allowed = 0;
    std::int64_t uac_barred = 0;
    std::int64_t uac_unknown_category = 0;
    std::int64_t rach_attempts = 0;
    std::int64_t rach_success = 0;
    std::int64_t rach_failure = 0;
    std::vector<std::int64_t> latencies;

    nlohmann::ordered_json json() const {
        double mean = 0.0;
        for (std::int64_t l : latencies) {
            mean += static_cast<double>(l);
        }
        if (!latencies.empty()) {
            mean /= static_cast<double>(latencies.size());
        }
        return {
            {"uac_attempts", uac_attempts},
            {"uac_allowed", uac_allowed},
            {"uac_barred", uac_barred},
            {"uac_unknown_category", uac_unknown_category},
            {"rach_attempts", rach_attempts},
            {"rach_success", rach_success},
            {"rach_failure", rach_failure},
            {"mean_latency_us", mean},
            {"p95_latency_us", percentile_i(latencies, 95.0)},
        };
    }
};

struct ClassAdmission {
    std::int64_t requests = 0;
    std::int64_t admitted = 0;
    std::int64_t rejected = 0;
    std::int64_t gbr_requests = 0;
    std::int64_t gbr_admitted = 0;

    nlohmann::ordered_json json() const {
        return {
            {"requests", requests},         {"admitted", admitted},
            {"rejected", rejected},         {"gbr_requests", gbr_requests},
            {"gbr_admitted", gbr_admitted},
        };
    }
};

} // namespace

nlohmann::ordered_json
MetricsCollector::report(const nlohmann::ordered_json& config_echo,
                         std::uint64_t seed) const {
    std::map<std::string, ClassAccess> access;
    access["mc"];
    access["commercial"];
    std::map<std::string, ClassAdmission> adm_class;
    adm_class["mc"];
    adm_class["commercial"];

    std::int64_t adm_requests = 0, adm_admitted = 0, adm_with_preempt = 0,
                 adm_rejected = 0;
    std::int64_t preemptions = 0, preempted_notpreemptable = 0;

    std::map<std::int64_t, nlohmann::ordered_json> per_flow;
    std::int64_t flows_admitted = 0, flows_preempted = 0;
    std::int64_t pkts_delivered = 0, pdb_violations = 0, gbr_pdb_violations = 0;

    std::map<std::string, nlohmann::ordered_json> mbs_sessions;
    std::map<std::string, nlohmann::ordered_json> iab_nodes;
    std::vector<nlohmann::ordered_json> iab_replacements;

    std::int64_t sl_rounds = 0, sl_delivered = 0, sl_retx = 0;
    std::int64_t sl_selections = 0, sl_raises = 0;
    std::int64_t sl_kept = 0, sl_preempted = 0;

    std::vector<double> pos_h, pos_v;
    std::int64_t pos_draws = 0, pos_degenerate = 0;
    std::map<std::string, nlohmann::ordered_json> pos_dop;
    std::map<std::string, nlohmann::ordered_json> pos_compare;

    std::int64_t events_executed = 0;

    for (const MetricEvent& ev : events_) {
        if (ev.kind == "uac") {
            ClassAccess& a = access[ev.get_s("class")];
            a.uac_attempts += 1;
            if (ev.get_i("allowed") != 0) {
                a.uac_allowed += 1;
            } else {
                a.uac_barred += 1;
            }
            a.uac_unknown_category += ev.get_i("unknown");
        } else if (ev.kind == "rach") {
            ClassAccess& a = access[ev.get_s("class")];
            a.rach_attempts += 1;
            if (ev.get_i("success") != 0) {
                a.rach_success += 1;
                a.latencies.push_back(ev.get_i("latency_us"));
            } else {
                a.rach_failure += 1;
            }
        } else if (ev.kind == "admit") {
            const std::string cls = ev.get_s("class");
            const std::string outcome = ev.get_s("outcome");
            adm_requests += 1;
            adm_class[cls].requests += 1;
            const bool gbr = ev.get_i("gbr") != 0;
            if (gbr) {
                adm_class[cls].gbr_requests += 1;
            }
            if (outcome == "admitted" || outcome == "admitted_preempt") {
                adm_admitted += 1;
                adm_class[cls].admitted += 1;
                if (gbr) {
                    adm_class[cls].gbr_admitted += 1;
                }
                if (outcome == "admitted_preempt") {
                    adm_with_preempt += 1;
                }
            } else {
                adm_rejected += 1;
                adm_class[cls].rejected += 1;
            }
        } else if (ev.kind == "preempt") {
            preemptions += 1;
            if (ev.get_s("vulnerability") == "notpreemptable") {
                preempted_notpreemptable += 1;
            }
        } else if (ev.kind == "flow_summary") {
            const std::int64_t id = ev.get_i("flow");
            flows_admitted += ev.get_i("admitted");
            flows_preempted += ev.get_i("preempted");
            pkts_delivered += ev.get_i("delivered");
            pdb_violations += ev.get_i("violations");
            if (ev.get_i("gbr") != 0) {
                gbr_pdb_violations += ev.get_i("violations");
            }
            per_flow[id] = {
                {"class", ev.get_s("class")},
                {"service", ev.get_s("service")},
                {"gbr", ev.get_i("gbr") != 0},
                {"admitted", ev.get_i("admitted") != 0},
                {"preempted", ev.get_i("preempted") != 0},
                {"packets_delivered", ev.get_i("delivered")},
                {"pdb_violations", ev.get_i("violations")},
                {"latency_us",
                 {{"p50", ev.get_i("p50_us")},
                  {"p95", ev.get_i("p95_us")},
                  {"p99", ev.get_i("p99_us")},
                  {"max", ev.get_i("max_us")}}},
            };
        } else if (ev.kind == "mbs_session") {
            mbs_sessions[ev.get_s("session")] = {
                {"prbs_used", ev.get_i("prbs_used")},
                {"mode_switches", ev.get_i("mode_switches")},
                {"ptm_retx", ev.get_i("ptm_retx")},
                {"ptp_retx", ev.get_i("ptp_retx")},
                {"sdus_sent", ev.get_i("sdus_sent")},
                {"sdus_lost", ev.get_i("sdus_lost")},
                {"handovers", ev.get_i("handovers")},
                {"unicast_fallbacks", ev.get_i("fallbacks")},
            };
        } else if (ev.kind == "iab_node") {
            iab_nodes[ev.get_s("node")] = {
                {"dl_transmissions", ev.get_i("dl_tx")},
                {"suppressed_transmissions", ev.get_i("suppressed_tx")},
                {"dl_transmissions_during_flight", ev.get_i("dl_tx_during_flight")},
                {"hops", ev.get_i("hops")},
                {"path_latency_us", ev.get_i("path_latency_us")},
                {"bottleneck_prbs", ev.get_i("bottleneck_prbs")},
            };
        } else if (ev.kind == "iab_replacement") {
            iab_replacements.push_back({
                {"serving", ev.get_s("s")},
                {"replacement", ev.get_s("r")},
                {"mode", ev.get_s("mode")},
                {"handovers", ev.get_i("handovers")},
                {"sdus_lost", ev.get_i("sdus_lost")},
                {"interruption_us", ev.get_i("interruption_us")},
            });
        } else if (ev.kind == "sl_group") {
            sl_rounds += 1;
            sl_delivered += ev.get_i("delivered");
            sl_retx += ev.get_i("retx");
        } else if (ev.kind == "sl_select") {
            sl_selections += 1;
            sl_raises += ev.get_i("raises");
        } else if (ev.kind == "sl_preempt") {
            if (ev.get_s("outcome") == "preempted") {
                sl_preempted += 1;
            } else {
                sl_kept += 1;
            }
        } else if (ev.kind == "pos_draw") {
            pos_draws += 1;
            if (ev.get_i("degenerate") != 0) {
                pos_degenerate += 1;
            } else {
                pos_h.push_back(ev.get_d("h_err_m"));
                pos_v.push_back(ev.get_d("v_err_m"));
            }
        } else if (ev.kind == "pos_dop") {
            pos_dop[ev.get_s("tag")] = {
                {"hdop", ev.get_d("hdop")},
                {"vdop", ev.get_d("vdop")},
                {"gdop", ev.get_d("gdop")},
            };
        } else if (ev.kind == "pos_compare") {
            pos_compare[ev.get_s("tag")] = {
                {"draws_ok", ev.get_i("draws_ok")},
                {"h_rmse_m", ev.get_d("h_rmse_m")},
                {"v_rmse_m", ev.get_d("v_rmse_m")},
            };
        } else if (ev.kind == "run") {
            events_executed = ev.get_i("events_executed");
        }
    }

    nlohmann::ordered_json flows_json = nlohmann::ordered_json::object();
    for (const auto& [id, j] : per_flow) {
        flows_json[std::to_string(id)] = j;
    }

    nlohmann::ordered_json report{
        {"schema", "mcran-report-v1"},
        {"scenario", config_echo},
        {"seed", seed},
        {"access",
         {{"mc", access.at("mc").json()},
          {"commercial", access.at("commercial").json()}}},
        {"admission",
         {{"requests", adm_requests},
          {"admitted", adm_admitted},
          {"admitted_with_preemption", adm_with_preempt},
          {"rejected", adm_rejected},
          {"preemptions", preemptions},
          {"preempted_notpreemptable", preempted_notpreemptable},
          {"mc", adm_class.at("mc").json()},
          {"commercial", adm_class.at("commercial").json()}}},
        {"flows",
         {{"count", static_cast<std::int64_t>(per_flow.size())},
          {"admitted", flows_admitted},
          {"preempted", flows_preempted},
          {"packets_delivered", pkts_delivered},
          {"pdb_violations", pdb_violations},
          {"gbr_pdb_violations", gbr_pdb_violations},
          {"per_flow", flows_json}}},
        {"mbs", {{"sessions", nlohmann::ordered_json::object()}}},
        {"iab",
         {{"nodes", nlohmann::ordered_json::object()},
          {"replacements", nlohmann::ordered_json::array()}}},
        {"sidelink",
         {{"groupcast_rounds", sl_rounds},
          {"messages_delivered", sl_delivered},
          {"retransmissions", sl_retx},
          {"selections", sl_selections},
          {"threshold_raises", sl_raises},
          {"preemptions_kept", sl_kept},
          {"preemptions_preempted", sl_preempted}}},
        {"positioning",
         {{"draws", pos_draws},
          {"degenerate", pos_degenerate},
          {"horizontal_error_m",
           {{"p50", percentile_d(pos_h, 50.0)},
            {"p67", percentile_d(pos_h, 67.0)},
            {"p95", percentile_d(pos_h, 95.0)}}},
          {"vertical_error_m",
           {{"p50", percentile_d(pos_v, 50.0)},
            {"p67", percentile_d(pos_v, 67.0)},
            {"p95", percentile_d(pos_v, 95.0)}}},
          {"dop", nlohmann::ordered_json::object()},
          {"compare", nlohmann::ordered_json::object()}}},
        {"events_executed", events_executed},
    };
    for (const auto& [id, j] : mbs_sessions) {
        report["mbs"]["sessions"][id] = j;
    }
    for (const auto& [id, j] : iab_nodes) {
        report["iab"]["nodes"][id] = j;
    }
    for (const auto& j : iab_replacements) {
        report["iab"]["replacements"].push_back(j);
    }
    for (const auto& [tag, j] : pos_dop) {
        report["positioning"]["dop"][tag] = j;
    }
    for (const auto& [tag, j] : pos_compare) {
        report["positioning"]["compare"][tag] = j;
    }
    return report;
}

std::string MetricsCollector::summary_line(const std::string& scenario_name) const {
    std::int64_t rach_ok = 0, admits = 0, preempts = 0, pos = 0;
    for (const MetricEvent& ev : events_) {
        if (ev.kind == "rach" && ev.get_i("success") != 0) {
            ++rach_ok;
        } else if (ev.kind == "admit" &&
                   ev.get_s("outcome") != "rejected") {
            ++admits;
        } else if (ev.kind == "preempt") {
            ++preempts;
        } else if (ev.kind == "pos_draw") {
            ++pos;
        }
    }
    std::ostringstream out;
    out << scenario_name << ": " << events_.size() << " metric events, "
        << rach_ok << " rach successes, " << admits << " admissions, "
        << preempts << " preemptions, " << pos << " positioning draws";
    return out.str();
}

void write_trace(std::ostream& out, const nlohmann::ordered_json& config_echo,
                 std::uint64_t seed, const std::vector<MetricEvent>& events) {
    out << "# mcran-trace v1\n";
    out << "# seed " << seed << "\n";
    out << "# scenario " << config_echo.dump() << "\n";
    out << "time_us,kind,fields\n";
    for (const MetricEvent& ev : events) {
        out << ev.t << ',' << ev.kind << ',';
        for (std::size_t i = 0; i < ev.fields.size(); ++i) {
            if (i > 0) {
                out << '|';
            }
            out << ev.fields[i].first << '=' << ev.fields[i].second;
        }
        out << '\n';
    }
}

TraceFile read_trace(std::istream& in) {
    TraceFile trace;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line.rfind("# seed ", 0) == 0) {
            trace.seed = std::stoull(line.substr(7));
            continue;
        }
        if (line.rfind("# scenario ", 0) == 0) {
            trace.config_echo = nlohmann::ordered_json::parse(line.substr(11));
            continue;
        }
        if (line[0] == '#') {
            continue;
        }
        if (!header_seen) {
            header_seen = true; // column header row
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw ValidationError("malformed trace row: " + line);
        }
        MetricEvent ev;
        ev.t = std::stoll(line.substr(0, c1));
        ev.kind = line.substr(c1 + 1, c2 - c1 - 1);
        std::string rest = line.substr(c2 + 1);
        std::size_t start = 0;
        while (start < rest.size()) {
            std::size_t bar = rest.find('|', start);
            if (bar == std::string::npos) {
                bar = rest.size();
            }
            const std::string kv = rest.substr(start, bar - start);
            const std::size_t eq = kv.find('=');
            if (eq != std::string::npos) {
                ev.fields.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
            }
            start = bar + 1;
        }
        trace.events.push_back(std::move(ev));
    }
    return trace;
}

} // namespace mcran
