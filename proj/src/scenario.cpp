#include "mcran/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mcran/errors.hpp"

namespace mcran {

namespace {

using json = nlohmann::ordered_json;

// Collects typed field reads with their JSON paths so a single validation
// pass reports every problem at once.
struct Cursor {
    const json* node;
    std::string path;
    std::vector<ValidationIssue>* issues;

    bool has(const std::string& key) const {
        return node->is_object() && node->contains(key);
    }

    Cursor child(const std::string& key) const {
        return Cursor{&(*node)[key], path + "." + key, issues};
    }

    Cursor element(std::size_t i) const {
        return Cursor{&(*node)[i], path + "[" + std::to_string(i) + "]", issues};
    }

    void error(const std::string& message) const {
        issues->push_back({path, message});
    }

    template <typename T>
    T get(const std::string& key, T fallback) const {
        if (!has(key)) {
            return fallback;
        }
        try {
            return (*node)[key].get<T>();
        } catch (const json::exception&) {
            issues->push_back({path + "." + key, "wrong type"});
            return fallback;
        }
    }

    std::string require_string(const std::string& key) const {
        if (!has(key) || !(*node)[key].is_string()) {
            issues->push_back({path + "." + key, "required string missing"});
            return "";
        }
        return (*node)[key].get<std::string>();
    }
};

Position parse_position(const Cursor& c) {
    Position p;
    if (!c.node->is_array() || c.node->size() != 3) {
        c.error("position must be [x, y, z]");
        return p;
    }
    try {
        p.x = (*c.node)[0].get<double>();
        p.y = (*c.node)[1].get<double>();
        p.z = (*c.node)[2].get<double>();
    } catch (const json::exception&) {
        c.error("position coordinates must be numbers");
    }
    return p;
}

void check_probability(const Cursor& c, const std::string& key, double value) {
    if (value < 0.0 || value > 1.0) {
        c.issues->push_back(
            {c.path + "." + key, "probability out of [0,1]: " +
                                     std::to_string(value)});
    }
}

bool valid_identifier(const std::string& s) {
    if (s.empty()) {
        return false;
    }
    for (char ch : s) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                        (ch >= '0' && ch <= '9') || ch == '-' || ch == '_';
        if (!ok) {
            return false;
        }
    }
    return true;
}

} // namespace

ServiceKind service_kind_from_string(const std::string& s) {
    if (s == "mcptt_voice") {
        return ServiceKind::McpttVoice;
    }
    if (s == "mcptt_signaling") {
        return ServiceKind::McpttSignaling;
    }
    if (s == "mcvideo") {
        return ServiceKind::McVideo;
    }
    if (s == "mcdata") {
        return ServiceKind::McData;
    }
    if (s == "commercial") {
        return ServiceKind::Commercial;
    }
    throw ValidationError("unknown service kind: " + s);
}

std::string to_string(ServiceKind kind) {
    switch (kind) {
    case ServiceKind::McpttVoice:
        return "mcptt_voice";
    case ServiceKind::McpttSignaling:
        return "mcptt_signaling";
    case ServiceKind::McVideo:
        return "mcvideo";
    case ServiceKind::McData:
        return "mcdata";
    case ServiceKind::Commercial:
        return "commercial";
    }
    return "?";
}

QosProfile Scenario::profile_for(ServiceKind kind) const {
    const int fiveqi = five_qi_for(kind);
    auto it = qos_overrides.find(fiveqi);
    return it != qos_overrides.end() ? it->second : lookup(fiveqi);
}

bool Scenario::has_cell(const std::string& id) const {
    for (const auto& c : cells) {
        if (c.id == id) {
            return true;
        }
    }
    return false;
}

std::string ValidationReport::to_string() const {
    std::ostringstream out;
    for (const auto& issue : issues) {
        out << issue.path << ": " << issue.message << "\n";
    }
    return out.str();
}

ValidationReport parse_scenario(const nlohmann::ordered_json& root,
                                Scenario& sc) {
    ValidationReport report;
    Cursor top{&root, "$", &report.issues};
    if (!root.is_object()) {
        top.error("scenario must be a JSON object");
        return report;
    }
    sc.raw = root;

    sc.name = top.require_string("name");
    if (!sc.name.empty() && !valid_identifier(sc.name)) {
        top.error("name must be [a-zA-Z0-9_-]");
    }
    const std::int64_t duration_ms = top.get<std::int64_t>("duration_ms", 0);
    if (duration_ms < 0) {
        top.error("duration_ms must be >= 0");
    }
    sc.duration_us = us_from_ms(duration_ms);
    sc.seed = top.get<std::uint64_t>("seed", 1);

    // qos: per-5QI field patches on top of the built-in rows.
    if (top.has("qos")) {
        Cursor qos = top.child("qos");
        for (const auto& [key, patch] : qos.node->items()) {
            int fiveqi = 0;
            try {
                fiveqi = std::stoi(key);
            } catch (...) {
                qos.error("5QI keys must be integers, got " + key);
                continue;
            }
            QosProfile base;
            try {
                base = lookup(fiveqi);
            } catch (const NotFoundError&) {
                qos.error("unknown 5QI " + key);
                continue;
            }
            Cursor pc{&patch, qos.path + "." + key, &report.issues};
            base.priority_level =
                pc.get<int>("priority_level", base.priority_level);
            base.packet_delay_budget_ms =
                pc.get<int>("packet_delay_budget_ms", base.packet_delay_budget_ms);
            base.ran_delay_budget_ms =
                pc.get<int>("ran_delay_budget_ms", base.ran_delay_budget_ms);
            base.packet_error_rate =
                pc.get<double>("packet_error_rate", base.packet_error_rate);
            if (pc.has("gbr_kbps")) {
                base.gbr_kbps = pc.get<int>("gbr_kbps", 0);
            }
            if (!valid_profile(base)) {
                pc.error("override produces an invalid profile");
            }
            sc.qos_overrides[fiveqi] = base;
        }
    }

    if (top.has("radio")) {
        Cursor r = top.child("radio");
        sc.radio.ref_pathloss_db =
            r.get<double>("ref_pathloss_db", sc.radio.ref_pathloss_db);
        sc.radio.pathloss_exponent =
            r.get<double>("pathloss_exponent", sc.radio.pathloss_exponent);
        sc.radio.noise_dbm = r.get<double>("noise_dbm", sc.radio.noise_dbm);
        sc.radio.shadowing_sigma_db =
            r.get<double>("shadowing_sigma_db", sc.radio.shadowing_sigma_db);
        sc.radio.per_slope_per_db =
            r.get<double>("per_slope_per_db", sc.radio.per_slope_per_db);
        if (sc.radio.pathloss_exponent <= 0.0) {
            r.error("pathloss_exponent must be > 0");
        }
    }

    if (top.has("uac")) {
        Cursor u = top.child("uac");
        sc.uac.mc_category = u.get<int>("mc_category", sc.uac.mc_category);
        sc.uac.commercial_category =
            u.get<int>("commercial_category", sc.uac.commercial_category);
        sc.uac.retry_after_barring =
            u.get<bool>("retry_after_barring", sc.uac.retry_after_barring);
        if (u.has("categories")) {
            Cursor cats = u.child("categories");
            for (const auto& [key, val] : cats.node->items()) {
                int cat = 0;
                try {
                    cat = std::stoi(key);
                } catch (...) {
                    cats.error("category keys must be integers, got " + key);
                    continue;
                }
                Cursor cc{&val, cats.path + "." + key, &report.issues};
                UacCategoryConfig cfg;
                cfg.barring_factor = cc.get<double>("barring_factor", 1.0);
                check_probability(cc, "barring_factor", cfg.barring_factor);
                cfg.barring_time_ms = cc.get<int>("barring_time_ms", 0);
                if (cfg.barring_time_ms < 0) {
                    cc.error("barring_time_ms must be >= 0");
                }
                if (cc.has("exempt_identities")) {
                    for (const auto& idj : (*cc.node)["exempt_identities"]) {
                        cfg.exempt_identities.insert(idj.get<int>());
                    }
                }
                sc.uac.config.categories[cat] = cfg;
            }
        }
    }

    if (top.has("rach")) {
        Cursor r = top.child("rach");
        sc.rach.preamble_pool_size =
            r.get<int>("preambles", sc.rach.preamble_pool_size);
        if (sc.rach.preamble_pool_size < 1) {
            r.error("preambles must be >= 1");
        }
        sc.rach.initial_tx_power_dbm =
            r.get<double>("initial_power_dbm", sc.rach.initial_tx_power_dbm);
        sc.rach.max_attempts = r.get<int>("max_attempts", sc.rach.max_attempts);
        sc.rach.occasion_period_us = us_from_ms(
            r.get<std::int64_t>("occasion_period_ms",
                                sc.rach.occasion_period_us / 1000));
        sc.rach.msg_exchange_delay_us = us_from_ms(
            r.get<std::int64_t>("msg_exchange_delay_ms",
                                sc.rach.msg_exchange_delay_us / 1000));
        sc.rach.msg1_error_prob =
            r.get<double>("msg1_error_prob", sc.rach.msg1_error_prob);
        check_probability(r, "msg1_error_prob", sc.rach.msg1_error_prob);
        auto parse_class = [&](const std::string& key, ClassRachParams& out) {
            if (!r.has(key)) {
                return;
            }
            Cursor c = r.child(key);
            out.power_ramp_step_db =
                c.get<double>("power_ramp_db", out.power_ramp_step_db);
            out.backoff_max_ms = c.get<int>("backoff_max_ms", out.backoff_max_ms);
        };
        parse_class("mc", sc.rach.mc);
        parse_class("commercial", sc.rach.commercial);
        if (sc.rach.mc.power_ramp_step_db < sc.rach.commercial.power_ramp_step_db) {
            r.error("MC power ramp step must be >= commercial step");
        }
        if (sc.rach.mc.backoff_max_ms > sc.rach.commercial.backoff_max_ms) {
            r.error("MC backoff max must be <= commercial backoff max");
        }
    }

    if (top.has("cells")) {
        Cursor cells = top.child("cells");
        for (std::size_t i = 0; i < cells.node->size(); ++i) {
            Cursor c = cells.element(i);
            CellSpec cell;
            cell.id = c.require_string("id");
            if (!cell.id.empty() && !valid_identifier(cell.id)) {
                c.error("cell id must be [a-zA-Z0-9_-]");
            }
            cell.capacity_prbs = c.get<int>("capacity_prbs", cell.capacity_prbs);
            if (cell.capacity_prbs <= 0) {
                c.error("capacity_prbs must be > 0");
            }
            if (c.has("position")) {
                cell.position = parse_position(c.child("position"));
            }
            cell.slot_us =
                c.get<std::int64_t>("slot_us", cell.slot_us);
            if (c.has("iab_node")) {
                cell.iab_node = c.require_string("iab_node");
            }
            sc.cells.push_back(cell);
        }
    }

    if (top.has("ues")) {
        Cursor pops = top.child("ues");
        for (std::size_t i = 0; i < pops.node->size(); ++i) {
            Cursor p = pops.element(i);
            UePopulationSpec pop;
            pop.prefix = p.require_string("prefix");
            pop.count = p.get<int>("count", 0);
            if (pop.count < 0) {
                p.error("count must be >= 0");
            }
            const std::string cls = p.get<std::string>("class", "commercial");
            if (cls == "mc") {
                pop.user_class = UserClass::Mc;
            } else if (cls == "commercial") {
                pop.user_class = UserClass::Commercial;
            } else {
                p.error("class must be mc or commercial");
            }
            const std::string service =
                p.get<std::string>("service",
                                   pop.user_class == UserClass::Mc
                                       ? "mcptt_voice"
                                       : "commercial");
            try {
                pop.service = service_kind_from_string(service);
            } catch (const ValidationError& e) {
                p.error(e.what());
            }
            pop.cell = p.require_string("cell");
            if (p.has("arrival_window_ms")) {
                const json& w = (*p.node)["arrival_window_ms"];
                if (w.is_array() && w.size() == 2) {
                    pop.arrival_start_us = us_from_ms(w[0].get<std::int64_t>());
                    pop.arrival_end_us = us_from_ms(w[1].get<std::int64_t>());
                    if (pop.arrival_end_us < pop.arrival_start_us) {
                        p.error("arrival window end before start");
                    }
                } else {
                    p.error("arrival_window_ms must be [start, end]");
                }
            }
            pop.rate_kbps = p.get<int>("rate_kbps", 0);
            if (pop.rate_kbps == 0) {
                pop.rate_kbps = default_rate_kbps(pop.service);
            }
            const RateRange range = rate_range(pop.service);
            if (pop.rate_kbps < range.min_kbps || pop.rate_kbps > range.max_kbps) {
                p.error("rate_kbps outside the service range [" +
                        std::to_string(range.min_kbps) + "," +
                        std::to_string(range.max_kbps) + "]");
            }
            pop.radius_m = p.get<double>("radius_m", pop.radius_m);
            pop.packet_period_us =
                p.get<std::int64_t>("packet_period_us", pop.packet_period_us);
            pop.request_flow = p.get<bool>("request_flow", true);
            sc.populations.push_back(pop);
        }
    }

    if (top.has("iab")) {
        Cursor ij = top.child("iab");
        sc.iab.f1_setup_delay_us = us_from_ms(
            ij.get<std::int64_t>("f1_setup_delay_ms",
                                 sc.iab.f1_setup_delay_us / 1000));
        if (ij.has("nodes")) {
            Cursor nodes = ij.child("nodes");
            for (std::size_t i = 0; i < nodes.node->size(); ++i) {
                Cursor n = nodes.element(i);
                IabNodeSpec spec;
                spec.id = n.require_string("id");
                const std::string role = n.get<std::string>("role", "child");
                if (role == "donor") {
                    spec.role = IabRole::Donor;
                } else if (role == "child") {
                    spec.role = IabRole::Child;
                } else {
                    n.error("role must be donor or child");
                }
                if (n.has("parent")) {
                    spec.parent = n.require_string("parent");
                }
                if (n.has("position")) {
                    spec.position = parse_position(n.child("position"));
                }
                if (n.has("flight")) {
                    Cursor f = n.child("flight");
                    FlightSpec flight;
                    flight.speed_mps = f.get<double>("speed_mps", 10.0);
                    if (flight.speed_mps <= 0.0) {
                        f.error("speed_mps must be > 0");
                    }
                    if (f.has("waypoints")) {
                        const json& wps = (*f.node)["waypoints"];
                        for (std::size_t w = 0; w < wps.size(); ++w) {
                            Cursor wc{&wps[w],
                                      f.path + ".waypoints[" + std::to_string(w) + "]",
                                      &report.issues};
                            flight.waypoints.push_back(parse_position(wc));
                        }
                    }
                    if (flight.waypoints.size() < 2) {
                        f.error("flight needs at least two waypoints");
                    }
                    spec.flight = flight;
                }
                spec.battery_j = n.get<double>("battery_j", 0.0);
                spec.drain_w = n.get<double>("drain_w", 0.0);
                spec.link_capacity_prbs =
                    n.get<int>("link_capacity_prbs", spec.link_capacity_prbs);
                spec.link_latency_us =
                    n.get<std::int64_t>("link_latency_us", spec.link_latency_us);
                spec.defer_f1 = n.get<bool>("defer_f1", true);
                if (n.has("integrate_at_ms")) {
                    spec.integrate_at_us =
                        us_from_ms(n.get<std::int64_t>("integrate_at_ms", 0));
                }
                spec.dl_activity_period_us = n.get<std::int64_t>(
                    "dl_activity_period_us", spec.dl_activity_period_us);
                sc.iab.nodes.push_back(spec);
            }
        }
        if (ij.has("replacements")) {
            Cursor reps = ij.child("replacements");
            for (std::size_t i = 0; i < reps.node->size(); ++i) {
                Cursor rc = reps.element(i);
                ReplacementSpec spec;
                spec.serving = rc.require_string("serving");
                spec.replacement = rc.require_string("replacement");
                const std::string mode = rc.get<std::string>("mode", "coordinated");
                if (mode == "coordinated") {
                    spec.mode = ReplacementMode::CoordinatedDuplication;
                } else if (mode == "plain") {
                    spec.mode = ReplacementMode::PlainHandover;
                } else {
                    rc.error("mode must be coordinated or plain");
                }
                spec.traffic.ue_count = rc.get<int>("ue_count", 10);
                spec.traffic.arrival_period_us = rc.get<std::int64_t>(
                    "arrival_period_us", spec.traffic.arrival_period_us);
                spec.traffic.handover_gap_us = rc.get<std::int64_t>(
                    "handover_gap_us", spec.traffic.handover_gap_us);
                spec.traffic.handover_spacing_us = rc.get<std::int64_t>(
                    "handover_spacing_us", spec.traffic.handover_spacing_us);
                if (rc.has("at_ms")) {
                    spec.at_us = us_from_ms(rc.get<std::int64_t>("at_ms", 0));
                }
                spec.on_battery_low = rc.get<bool>("on_battery_low", false);
                spec.battery_trigger_fraction = rc.get<double>(
                    "battery_trigger_fraction", spec.battery_trigger_fraction);
                if (!spec.at_us && !spec.on_battery_low) {
                    rc.error("replacement needs at_ms or on_battery_low");
                }
                sc.iab.replacements.push_back(spec);
            }
        }
    }

    if (top.has("mbs")) {
        Cursor mj = top.child("mbs");
        if (mj.has("sessions")) {
            Cursor sessions = mj.child("sessions");
            for (std::size_t i = 0; i < sessions.node->size(); ++i) {
                Cursor s = sessions.element(i);
                MbsSessionSpec spec;
                spec.id = s.require_string("id");
                const std::string service = s.get<std::string>("service", "mcvideo");
                try {
                    spec.service = service_kind_from_string(service);
                } catch (const ValidationError& e) {
                    s.error(e.what());
                }
                spec.rate_kbps = s.get<int>("rate_kbps", 0);
                if (spec.rate_kbps == 0) {
                    spec.rate_kbps = default_rate_kbps(spec.service);
                }
                if (s.has("members")) {
                    Cursor mem = s.child("members");
                    for (const auto& [cell, count] : mem.node->items()) {
                        try {
                            spec.members_per_cell[cell] = count.get<int>();
                        } catch (const json::exception&) {
                            mem.error("member counts must be integers");
                        }
                    }
                }
                spec.member_radius_m =
                    s.get<double>("member_radius_m", spec.member_radius_m);
                spec.hysteresis_pct =
                    s.get<double>("hysteresis_pct", spec.hysteresis_pct);
                if (spec.hysteresis_pct < 0.0 || spec.hysteresis_pct >= 100.0) {
                    s.error("hysteresis_pct must be in [0,100)");
                }
                spec.nack_ptm_threshold =
                    s.get<int>("nack_ptm_threshold", spec.nack_ptm_threshold);
                spec.max_harq = s.get<int>("max_harq", spec.max_harq);
                spec.pdcp_retx_enabled =
                    s.get<bool>("pdcp_retx_enabled", spec.pdcp_retx_enabled);
                spec.as_forced_unicast =
                    s.get<bool>("as_forced_unicast", spec.as_forced_unicast);
                spec.packet_period_us = s.get<std::int64_t>(
                    "packet_period_us", spec.packet_period_us);
                spec.mode_update_period_us = s.get<std::int64_t>(
                    "mode_update_period_us", spec.mode_update_period_us);
                spec.csi_noise_db = s.get<double>("csi_noise_db", 0.0);
                if (s.has("handovers")) {
                    Cursor hos = s.child("handovers");
                    for (std::size_t h = 0; h < hos.node->size(); ++h) {
                        Cursor hc = hos.element(h);
                        MbsHandoverSpec ho;
                        ho.ue_index = hc.get<int>("ue_index", 0);
                        ho.from = hc.require_string("from");
                        ho.to = hc.require_string("to");
                        ho.at_us = us_from_ms(hc.get<std::int64_t>("at_ms", 0));
                        ho.gap_us =
                            us_from_ms(hc.get<std::int64_t>("gap_ms", 30));
                        ho.target_supports_mbs =
                            hc.get<bool>("target_supports_mbs", true);
                        spec.handovers.push_back(ho);
                    }
                }
                sc.mbs_sessions.push_back(spec);
            }
        }
    }

    if (top.has("sidelink")) {
        Cursor sj = top.child("sidelink");
        sc.sidelink.pool_slots = sj.get<int>("pool_slots", sc.sidelink.pool_slots);
        sc.sidelink.pool_subchannels =
            sj.get<int>("pool_subchannels", sc.sidelink.pool_subchannels);
        if (sc.sidelink.pool_slots <= 0 || sc.sidelink.pool_subchannels <= 0) {
            sj.error("pool dimensions must be > 0");
        }
        sc.sidelink.rsrp_threshold_dbm =
            sj.get<double>("rsrp_threshold_dbm", sc.sidelink.rsrp_threshold_dbm);
        if (sj.has("groups")) {
            Cursor groups = sj.child("groups");
            for (std::size_t i = 0; i < groups.node->size(); ++i) {
                Cursor g = groups.element(i);
                SidelinkGroupSpec spec;
                spec.id = g.require_string("id");
                spec.members = g.get<int>("members", spec.members);
                if (spec.members < 2) {
                    g.error("group needs at least 2 members");
                }
                spec.per = g.get<double>("per", spec.per);
                check_probability(g, "per", spec.per);
                spec.max_harq = g.get<int>("max_harq", spec.max_harq);
                spec.round_period_us = g.get<std::int64_t>(
                    "round_period_us", spec.round_period_us);
                spec.priority = g.get<int>("priority", spec.priority);
                sc.sidelink.groups.push_back(spec);
            }
        }
    }

    if (top.has("positioning")) {
        Cursor pj = top.child("positioning");
        PositioningSpec spec;
        if (pj.has("anchors")) {
            Cursor anchors = pj.child("anchors");
            for (std::size_t i = 0; i < anchors.node->size(); ++i) {
                Cursor a = anchors.element(i);
                Anchor anchor;
                anchor.id = static_cast<int>(i);
                if (a.has("position")) {
                    anchor.pos = parse_position(a.child("position"));
                } else {
                    a.error("anchor needs a position");
                }
                anchor.is_airborne = a.get<bool>("airborne", false);
                anchor.clock_offset_s = a.get<double>("clock_offset_s", 0.0);
                spec.anchors.push_back(anchor);
            }
        }
        if (pj.has("targets")) {
            Cursor targets = pj.child("targets");
            for (std::size_t i = 0; i < targets.node->size(); ++i) {
                spec.targets.push_back(parse_position(targets.element(i)));
            }
        }
        if (spec.anchors.size() < 4) {
            pj.error("positioning needs at least 4 anchors for a 3D fix");
        }
        if (spec.targets.empty()) {
            pj.error("positioning needs at least one target");
        }
        spec.sigma_s = pj.get<double>("sigma_ns", 10.0) * 1e-9;
        spec.epochs = pj.get<int>("epochs_per_fix", 1);
        if (spec.epochs < 1) {
            pj.error("epochs_per_fix must be >= 1");
        }
        spec.draws = pj.get<int>("draws", 0);
        const std::string method = pj.get<std::string>("method", "tdoa");
        if (method == "tdoa") {
            spec.method = PositioningMethod::Tdoa;
        } else if (method == "rtt") {
            spec.method = PositioningMethod::Rtt;
        } else {
            pj.error("method must be tdoa or rtt");
        }
        if (pj.has("improve")) {
            Cursor imp = pj.child("improve");
            Region region;
            if (imp.has("region_lo") && imp.has("region_hi")) {
                region.lo = parse_position(imp.child("region_lo"));
                region.hi = parse_position(imp.child("region_hi"));
            } else {
                imp.error("improve needs region_lo and region_hi");
            }
            spec.improve_region = region;
            spec.improve_step_m = imp.get<double>("step_m", spec.improve_step_m);
            if (spec.improve_step_m <= 0.0) {
                imp.error("step_m must be > 0");
            }
        }
        spec.compare_co_altitude =
            pj.get<bool>("compare_co_altitude", spec.compare_co_altitude);
        spec.co_altitude_m = pj.get<double>("co_altitude_m", spec.co_altitude_m);
        spec.anchor_offset_range_s =
            pj.get<double>("anchor_offset_range_us", 0.0) * 1e-6;
        sc.positioning = spec;
    }

    // Cross references.
    for (std::size_t i = 0; i < sc.populations.size(); ++i) {
        const auto& pop = sc.populations[i];
        if (!pop.cell.empty() && !sc.has_cell(pop.cell)) {
            report.issues.push_back(
                {"$.ues[" + std::to_string(i) + "].cell",
                 "UE population '" + pop.prefix + "' references unknown cell '" +
                     pop.cell + "'"});
        }
    }
    for (std::size_t i = 0; i < sc.mbs_sessions.size(); ++i) {
        const auto& session = sc.mbs_sessions[i];
        for (const auto& [cell, count] : session.members_per_cell) {
            if (!sc.has_cell(cell)) {
                report.issues.push_back(
                    {"$.mbs.sessions[" + std::to_string(i) + "].members",
                     "session '" + session.id + "' references unknown cell '" +
                         cell + "'"});
            }
            if (count < 0) {
                report.issues.push_back(
                    {"$.mbs.sessions[" + std::to_string(i) + "].members",
                     "negative member count for cell '" + cell + "'"});
            }
        }
        for (std::size_t h = 0; h < session.handovers.size(); ++h) {
            const auto& ho = session.handovers[h];
            for (const std::string& cell : {ho.from, ho.to}) {
                if (!cell.empty() && !sc.has_cell(cell)) {
                    report.issues.push_back(
                        {"$.mbs.sessions[" + std::to_string(i) + "].handovers[" +
                             std::to_string(h) + "]",
                         "handover references unknown cell '" + cell + "'"});
                }
            }
        }
    }
    {
        std::set<std::string> iab_ids;
        for (const auto& n : sc.iab.nodes) {
            if (!iab_ids.insert(n.id).second) {
                report.issues.push_back(
                    {"$.iab.nodes", "duplicate IAB node id '" + n.id + "'"});
            }
        }
        for (const auto& n : sc.iab.nodes) {
            if (n.parent && iab_ids.count(*n.parent) == 0) {
                report.issues.push_back(
                    {"$.iab.nodes",
                     "node '" + n.id + "' references unknown parent '" +
                         *n.parent + "'"});
            }
        }
        for (const auto& r : sc.iab.replacements) {
            for (const std::string& id : {r.serving, r.replacement}) {
                if (!id.empty() && iab_ids.count(id) == 0) {
                    report.issues.push_back(
                        {"$.iab.replacements",
                         "replacement references unknown node '" + id + "'"});
                }
            }
        }
        for (const auto& c : sc.cells) {
            if (c.iab_node && iab_ids.count(*c.iab_node) == 0) {
                report.issues.push_back(
                    {"$.cells",
                     "cell '" + c.id + "' references unknown IAB node '" +
                         *c.iab_node + "'"});
            }
        }
    }

    return report;
}

ValidationReport validate_scenario(const nlohmann::ordered_json& json) {
    Scenario scratch;
    return parse_scenario(json, scratch);
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open scenario file: " + path);
    }
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::ordered_json::exception& e) {
        throw ValidationError("scenario parse error in " + path + ": " +
                              e.what());
    }
    Scenario sc;
    ValidationReport report = parse_scenario(j, sc);
    if (!report.ok()) {
        throw ValidationError("scenario validation failed:\n" +
                              report.to_string());
    }
    return sc;
}

} // namespace mcran
