#include "mcran/runner.hpp"

#include <algorithm>
#include <cmath>

#include "mcran/errors.hpp"
#include "mcran/positioning.hpp"
#include "mcran/radio_env.hpp"

namespace mcran {

namespace {

constexpr double kMcUePowerDbm = 26.0; // high power class
constexpr double kCommercialUePowerDbm = 23.0;
constexpr double kDlTxPowerDbm = 40.0;

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return (a + b - 1) / b;
}

double flight_length_m(const FlightSpec& flight) {
    double length = 0.0;
    for (std::size_t i = 1; i < flight.waypoints.size(); ++i) {
        length += distance(flight.waypoints[i - 1], flight.waypoints[i]);
    }
    return length;
}

} // namespace

struct ScenarioRunner::Impl {
    struct UeRec {
        UeId id = 0;
        std::string name;
        UserClass cls = UserClass::Commercial;
        ServiceKind service = ServiceKind::Commercial;
        std::string cell;
        Position pos;
        double snr_db = 0.0;
        int mcs = 0;
        int demand_prbs = 0;
        int prb_slots_per_packet = 0;
        MicroSec packet_period_us = 20'000;
        bool request_flow = true;
        int rate_kbps = 0;
        MicroSec arrival_us = 0;
    };

    struct CellCtx {
        CellSpec spec;
        CellScheduler sched;
        RachContention rach;
        bool occasion_scheduled = false;
        bool slots_scheduled = false;
        std::set<UeId> rach_seen;

        CellCtx(const CellSpec& s, const CbraParams& rach_params)
            : spec(s), sched(s.id, s.capacity_prbs, s.slot_us),
              rach(rach_params) {}
    };

    struct FlowInfo {
        UserClass cls;
        ServiceKind service;
        bool gbr;
        PreemptionVulnerability vulnerability;
    };

    struct IabRt {
        IabNodeSpec spec;
        std::uint64_t tx_at_flight_start = 0;
        std::int64_t dl_tx_during_flight = 0;
        std::optional<MicroSec> serving_at;
        bool withdrawn = false;
    };

    struct SessionRt {
        MbsSessionSpec spec;
        std::unique_ptr<MbsSession> session;
        std::vector<UeId> member_list;
        std::map<UeId, double> base_snr;
        std::map<UeId, std::string> member_cell;
        std::uint64_t ptm_retx = 0;
        std::uint64_t ptp_retx = 0;
        std::uint64_t handovers = 0;
        std::uint64_t fallbacks = 0;
    };

    struct GroupRt {
        SidelinkGroupSpec spec;
        SlPool pool;
        std::vector<UeId> members;
        std::uint64_t round = 0;
    };

    Scenario sc;
    Engine engine;
    MetricsCollector collector;
    std::map<std::string, CellCtx> cells;
    std::vector<UeRec> ues; // index 0 unused
    std::map<FlowId, FlowInfo> flow_info;
    IabTopology iab;
    std::map<std::string, IabRt> iab_rt;
    std::vector<SessionRt> sessions;
    std::vector<GroupRt> groups;
    UeId next_ue_id = 1;

    explicit Impl(Scenario scenario)
        : sc(std::move(scenario)), engine(sc.seed) {}

    void emit(const MetricEvent& ev) { collector.consume(ev); }

    static const char* class_name(UserClass c) {
        return c == UserClass::Mc ? "mc" : "commercial";
    }

    // ---- cells and UE populations --------------------------------------

    void setup_cells() {
        for (const CellSpec& spec : sc.cells) {
            cells.emplace(spec.id, CellCtx(spec, sc.rach));
        }
    }

    void ensure_uac_defaults() {
        auto& cats = sc.uac.config.categories;
        if (cats.find(sc.uac.mc_category) == cats.end()) {
            UacCategoryConfig mc;
            mc.barring_factor = 1.0;
            mc.exempt_identities = {kMcAccessIdentity};
            cats[sc.uac.mc_category] = mc;
        }
        if (cats.find(sc.uac.commercial_category) == cats.end()) {
            cats[sc.uac.commercial_category] = UacCategoryConfig{};
        }
    }

    UeRec make_ue(const UePopulationSpec& pop, int index) {
        UeRec ue;
        ue.id = next_ue_id++;
        ue.name = pop.prefix + "-" + std::to_string(index);
        ue.cls = pop.user_class;
        ue.service = pop.service;
        ue.cell = pop.cell;
        ue.rate_kbps = pop.rate_kbps;
        ue.packet_period_us = pop.packet_period_us;
        ue.request_flow = pop.request_flow;

        const CellCtx& cell = cells.at(pop.cell);
        RngStream& place = engine.rng("placement");
        const double r = pop.radius_m * std::sqrt(place.uniform());
        const double theta = place.uniform(0.0, 2.0 * 3.14159265358979323846);
        ue.pos = {cell.spec.position.x + r * std::cos(theta),
                  cell.spec.position.y + r * std::sin(theta), 1.5};

        const double d = std::max(1.0, distance(ue.pos, cell.spec.position));
        LinkBudget budget;
        budget.tx_power_dbm =
            ue.cls == UserClass::Mc ? kMcUePowerDbm : kCommercialUePowerDbm;
        budget.pathloss_db = pathloss_db(d, sc.radio);
        budget.noise_dbm = sc.radio.noise_dbm;
        ue.snr_db = snr_db(budget) + shadowing_db(sc.radio, engine.rng("shadowing"));

        const QosProfile profile = sc.profile_for(ue.service);
        ue.mcs = select_mcs(ue.snr_db, profile.packet_error_rate, sc.radio);
        ue.demand_prbs = required_prbs(ue.rate_kbps, ue.mcs, sc.radio);
        // PRB-slots to drain one packet: packet bits over per-PRB bits/slot.
        const std::int64_t packet_kbit_x1e6 =
            static_cast<std::int64_t>(ue.rate_kbps) * ue.packet_period_us;
        const std::int64_t prbslot_kbit_x1e6 =
            static_cast<std::int64_t>(
                sc.radio.mcs_table[static_cast<std::size_t>(ue.mcs)].per_prb_kbps) *
            cell.spec.slot_us;
        ue.prb_slots_per_packet = static_cast<int>(
            ceil_div(packet_kbit_x1e6, prbslot_kbit_x1e6));
        return ue;
    }

    void setup_populations() {
        ues.emplace_back(); // index 0 unused
        for (const UePopulationSpec& pop : sc.populations) {
            for (int i = 0; i < pop.count; ++i) {
                UeRec ue = make_ue(pop, i);
                ue.arrival_us = static_cast<MicroSec>(
                    engine.rng("arrivals").uniform(
                        static_cast<double>(pop.arrival_start_us),
                        static_cast<double>(pop.arrival_end_us) + 1.0));
                ues.push_back(ue);
                const UeId id = ue.id;
                if (ue.arrival_us <= sc.duration_us) {
                    engine.schedule(ue.arrival_us, [this, id] { on_arrival(id); });
                }
            }
        }
    }

    void on_arrival(UeId id) {
        UeRec& ue = ues[id];
        AccessAttempt attempt;
        attempt.ue_id = id;
        attempt.access_category = ue.cls == UserClass::Mc
                                      ? sc.uac.mc_category
                                      : sc.uac.commercial_category;
        if (ue.cls == UserClass::Mc) {
            attempt.access_identities.insert(kMcAccessIdentity);
        }
        UeContext ctx;
        ctx.id = id;
        ctx.user_class = ue.cls;
        attempt.establishment_cause = classify_cause(ctx);
        attempt.request_time = engine.now();

        RngStream& rng = engine.rng("uac");
        const double draw = rng.uniform();
        const double duration_draw = rng.uniform();
        const UacDecision decision =
            uac_check(attempt, sc.uac.config, draw, duration_draw);
        emit(MetricEvent(engine.now(), "uac")
                 .add("class", class_name(ue.cls))
                 .add_i("allowed", decision.allowed ? 1 : 0)
                 .add_i("unknown", decision.unknown_category ? 1 : 0));
        if (!decision.allowed) {
            if (sc.uac.retry_after_barring) {
                const MicroSec retry = engine.now() + decision.barred_for_us;
                if (retry <= sc.duration_us) {
                    engine.schedule(retry, [this, id] { on_arrival(id); });
                }
            }
            return;
        }

        CellCtx& cell = cells.at(ue.cell);
        cell.rach.add(attempt, ue.cls);
        ensure_occasion(cell);
    }

    void ensure_occasion(CellCtx& cell) {
        if (cell.occasion_scheduled || cell.rach.idle()) {
            return;
        }
        cell.occasion_scheduled = true;
        const MicroSec t = cell.rach.next_occasion(engine.now());
        const std::string cell_id = cell.spec.id;
        engine.schedule(t, [this, cell_id, t] { on_occasion(cell_id, t); });
    }

    void on_occasion(const std::string& cell_id, MicroSec t) {
        CellCtx& cell = cells.at(cell_id);
        cell.occasion_scheduled = false;
        cell.rach.resolve_occasion(t, engine.rng("rach"));
        for (const auto& [ue_id, outcome] : cell.rach.outcomes()) {
            if (cell.rach_seen.count(ue_id) > 0) {
                continue;
            }
            cell.rach_seen.insert(ue_id);
            const UeRec& ue = ues[ue_id];
            emit(MetricEvent(t, "rach")
                     .add("class", class_name(ue.cls))
                     .add_i("success", outcome.success ? 1 : 0)
                     .add_i("latency_us", outcome.latency_us)
                     .add_i("attempts", outcome.attempts));
            if (outcome.success && ue.request_flow) {
                const MicroSec at = ues[ue_id].arrival_us + outcome.latency_us;
                const UeId id = ue_id;
                engine.schedule(std::max(at, t), [this, id] { on_admit(id); });
            }
        }
        if (!cell.rach.idle()) {
            cell.occasion_scheduled = true;
            const MicroSec next = t + sc.rach.occasion_period_us;
            engine.schedule(next,
                            [this, cell_id, next] { on_occasion(cell_id, next); });
        }
    }

    void on_admit(UeId id) {
        UeRec& ue = ues[id];
        CellCtx& cell = cells.at(ue.cell);
        FlowRequest req;
        req.flow_id = id; // one flow per UE
        req.ue_id = id;
        req.profile = sc.profile_for(ue.service);
        req.arp = default_arp(ue.service);
        req.demand_prbs = ue.demand_prbs;

        const AdmitResult result = cell.sched.admit(req, engine.now());
        const bool gbr = req.profile.resource_type == ResourceType::Gbr;
        const char* outcome =
            result.outcome == AdmissionOutcome::Admitted ? "admitted"
            : result.outcome == AdmissionOutcome::AdmittedWithPreemption
                ? "admitted_preempt"
                : "rejected";
        emit(MetricEvent(engine.now(), "admit")
                 .add("class", class_name(ue.cls))
                 .add("service", to_string(ue.service))
                 .add_i("gbr", gbr ? 1 : 0)
                 .add("outcome", outcome)
                 .add_u("victims", result.victims.size()));
        for (FlowId victim : result.victims) {
            const FlowInfo& info = flow_info.at(victim);
            emit(MetricEvent(engine.now(), "preempt")
                     .add("victim_class", class_name(info.cls))
                     .add("vulnerability",
                          info.vulnerability == PreemptionVulnerability::Preemptable
                              ? "preemptable"
                              : "notpreemptable"));
        }
        if (result.outcome == AdmissionOutcome::Rejected) {
            return;
        }
        flow_info[req.flow_id] =
            FlowInfo{ue.cls, ue.service, gbr, req.arp.vulnerability};
        const MicroSec first = engine.now() + ue.packet_period_us;
        if (first <= sc.duration_us) {
            engine.schedule(first, [this, id] { on_packet(id); });
        }
        ensure_slots(cell);
    }

    void on_packet(UeId id) {
        UeRec& ue = ues[id];
        CellCtx& cell = cells.at(ue.cell);
        if (!cell.sched.has_flow(id)) {
            return; // flow preempted; traffic stops
        }
        cell.sched.enqueue_packet(id, engine.now(), ue.prb_slots_per_packet);
        const MicroSec next = engine.now() + ue.packet_period_us;
        if (next <= sc.duration_us) {
            engine.schedule(next, [this, id] { on_packet(id); });
        }
    }

    void ensure_slots(CellCtx& cell) {
        if (cell.slots_scheduled) {
            return;
        }
        cell.slots_scheduled = true;
        const MicroSec slot = cell.spec.slot_us;
        const MicroSec first = ceil_div(engine.now(), slot) * slot;
        const std::string cell_id = cell.spec.id;
        engine.schedule(first, [this, cell_id, first] { on_slot(cell_id, first); });
    }

    void on_slot(const std::string& cell_id, MicroSec t) {
        CellCtx& cell = cells.at(cell_id);
        cell.sched.schedule_slot(t);
        const MicroSec next = t + cell.spec.slot_us;
        if (next + cell.spec.slot_us <= sc.duration_us + cell.spec.slot_us) {
            if (next <= sc.duration_us) {
                engine.schedule(next,
                                [this, cell_id, next] { on_slot(cell_id, next); });
            }
        }
    }

    // ---- IAB ------------------------------------------------------------

    std::string donor_of(const std::string& node_id) const {
        std::string cursor = node_id;
        for (std::size_t i = 0; i <= iab_rt.size(); ++i) {
            const auto& spec = iab_rt.at(cursor).spec;
            if (spec.role == IabRole::Donor) {
                return cursor;
            }
            if (!spec.parent) {
                throw TopologyError("node " + node_id + " has no donor above it");
            }
            cursor = *spec.parent;
        }
        throw TopologyError("parent chain too deep for " + node_id);
    }

    void setup_iab() {
        if (sc.iab.nodes.empty()) {
            return;
        }
        iab.f1_setup_delay_us = sc.iab.f1_setup_delay_us;
        iab.rach_params = sc.rach;
        for (const IabNodeSpec& spec : sc.iab.nodes) {
            IabNode node;
            node.node_id = spec.id;
            node.role = spec.role;
            node.position = spec.position;
            node.battery_j = spec.battery_j;
            node.drain_w = spec.drain_w;
            iab.add_node(node);
            iab_rt[spec.id] = IabRt{spec, 0, 0, std::nullopt, false};
        }
        for (const IabNodeSpec& spec : sc.iab.nodes) {
            if (spec.role == IabRole::Child && spec.parent) {
                iab.link(spec.id, *spec.parent, spec.link_capacity_prbs,
                         spec.link_latency_us);
            }
        }
        for (const IabNodeSpec& spec : sc.iab.nodes) {
            if (spec.role != IabRole::Child || !spec.integrate_at_us) {
                continue;
            }
            const std::string id = spec.id;
            engine.schedule(*spec.integrate_at_us,
                            [this, id] { on_integrate(id); });
        }
        for (const ReplacementSpec& rep : sc.iab.replacements) {
            if (rep.at_us) {
                const ReplacementSpec r = rep;
                engine.schedule(*rep.at_us, [this, r] { do_replace(r); });
            }
        }
    }

    void on_integrate(const std::string& id) {
        IabRt& rt = iab_rt.at(id);
        const std::string donor = donor_of(id);
        const MicroSec now = engine.now();
        const IntegrationTiming timing = iab.integrate(
            id, donor, rt.spec.defer_f1, now, engine.rng("iab"));
        if (!timing.rrc_connected_us) {
            // RRC failed; retry at the next occasion boundary.
            engine.schedule_in(sc.rach.occasion_period_us,
                               [this, id] { on_integrate(id); });
            return;
        }
        rt.tx_at_flight_start = iab.node(id).dl_transmissions;

        if (rt.spec.defer_f1) {
            MicroSec arrival = now;
            if (rt.spec.flight) {
                arrival = now + static_cast<MicroSec>(
                                    flight_length_m(*rt.spec.flight) /
                                    rt.spec.flight->speed_mps * 1e6);
            }
            engine.schedule(std::max(arrival, *timing.rrc_connected_us),
                            [this, id] { on_arrived(id); });
        } else if (timing.serving_us) {
            rt.serving_at = timing.serving_us;
            const MicroSec at = *timing.serving_us;
            engine.schedule(at, [this, id] { on_serving(id); });
        }

        // Downlink activity the DU would emit; suppressed until Serving.
        schedule_dl_activity(id, now + rt.spec.dl_activity_period_us);
        schedule_battery(id, now);
    }

    void on_arrived(const std::string& id) {
        IabRt& rt = iab_rt.at(id);
        if (rt.spec.flight && !rt.spec.flight->waypoints.empty()) {
            iab.node(id).position = rt.spec.flight->waypoints.back();
        }
        rt.dl_tx_during_flight = static_cast<std::int64_t>(
            iab.node(id).dl_transmissions - rt.tx_at_flight_start);
        const MicroSec serving = iab.complete_f1(id, engine.now());
        rt.serving_at = serving;
        engine.schedule(serving, [this, id] { on_serving(id); });
    }

    void on_serving(const std::string& id) {
        const PathMetrics pm = iab.path_metrics(id);
        for (auto& [cell_id, cell] : cells) {
            if (cell.spec.iab_node && *cell.spec.iab_node == id) {
                cell.sched.set_backhaul(pm.bottleneck_prbs, pm.latency_us);
            }
        }
    }

    void schedule_dl_activity(const std::string& id, MicroSec at) {
        if (at > sc.duration_us) {
            return;
        }
        engine.schedule(at, [this, id, at] {
            IabRt& rt = iab_rt.at(id);
            if (!rt.withdrawn) {
                iab.du_transmit(id, at);
            }
            schedule_dl_activity(id, at + rt.spec.dl_activity_period_us);
        });
    }

    void schedule_battery(const std::string& id, MicroSec active_from) {
        const auto runtime = iab.battery_runtime_us(id);
        if (!runtime) {
            return;
        }
        for (const ReplacementSpec& rep : sc.iab.replacements) {
            if (rep.on_battery_low && rep.serving == id) {
                const ReplacementSpec r = rep;
                const MicroSec trigger =
                    active_from + static_cast<MicroSec>(
                                      rep.battery_trigger_fraction *
                                      static_cast<double>(*runtime));
                if (trigger <= sc.duration_us) {
                    engine.schedule(trigger, [this, r] { do_replace(r); });
                }
            }
        }
        const MicroSec depleted = active_from + *runtime;
        if (depleted <= sc.duration_us) {
            engine.schedule(depleted, [this, id] {
                IabRt& rt = iab_rt.at(id);
                if (!rt.withdrawn) {
                    iab.deactivate(id, engine.now());
                    rt.withdrawn = true;
                }
            });
        }
    }

    void do_replace(const ReplacementSpec& rep) {
        IabRt& srt = iab_rt.at(rep.serving);
        if (srt.withdrawn) {
            return; // already replaced
        }
        const ReplacementReport report = iab.replace(
            rep.serving, rep.replacement, rep.mode, rep.traffic, engine.now());
        srt.withdrawn = true;
        emit(MetricEvent(engine.now(), "iab_replacement")
                 .add("s", rep.serving)
                 .add("r", rep.replacement)
                 .add("mode", rep.mode == ReplacementMode::CoordinatedDuplication
                                  ? "coordinated"
                                  : "plain")
                 .add_i("handovers", report.handovers)
                 .add_u("sdus_lost", report.sdus_lost)
                 .add_i("interruption_us", report.interruption_us));
    }

    // ---- MBS ------------------------------------------------------------

    void setup_mbs() {
        for (const MbsSessionSpec& spec : sc.mbs_sessions) {
            SessionRt rt;
            rt.spec = spec;
            MbsSessionCfg cfg;
            cfg.session_id = spec.id;
            cfg.profile = sc.profile_for(spec.service);
            cfg.rate_kbps = spec.rate_kbps;
            cfg.hysteresis_pct = spec.hysteresis_pct;
            cfg.nack_ptm_threshold = spec.nack_ptm_threshold;
            cfg.max_harq = spec.max_harq;
            cfg.pdcp_retx_enabled = spec.pdcp_retx_enabled;
            cfg.as_forced_unicast = spec.as_forced_unicast;
            rt.session = std::make_unique<MbsSession>(cfg, sc.radio);

            for (const auto& [cell_id, count] : spec.members_per_cell) {
                const CellCtx& cell = cells.at(cell_id);
                for (int i = 0; i < count; ++i) {
                    const UeId ue = next_ue_id++;
                    RngStream& place = engine.rng("mbs-placement");
                    const double r = spec.member_radius_m * std::sqrt(place.uniform());
                    const double theta =
                        place.uniform(0.0, 2.0 * 3.14159265358979323846);
                    const Position pos{cell.spec.position.x + r * std::cos(theta),
                                       cell.spec.position.y + r * std::sin(theta),
                                       1.5};
                    LinkBudget budget;
                    budget.tx_power_dbm = kDlTxPowerDbm;
                    budget.pathloss_db = pathloss_db(
                        std::max(1.0, distance(pos, cell.spec.position)), sc.radio);
                    budget.noise_dbm = sc.radio.noise_dbm;
                    rt.base_snr[ue] = snr_db(budget);
                    rt.member_cell[ue] = cell_id;
                    rt.member_list.push_back(ue);
                    rt.session->join(cell_id, ue);
                }
            }
            sessions.push_back(std::move(rt));
            const std::size_t idx = sessions.size() - 1;

            engine.schedule(0, [this, idx] { on_mbs_update(idx); });
            if (spec.packet_period_us <= sc.duration_us) {
                engine.schedule(spec.packet_period_us,
                                [this, idx] { on_mbs_tx(idx); });
            }
            for (const MbsHandoverSpec& ho : spec.handovers) {
                const MbsHandoverSpec h = ho;
                engine.schedule(ho.at_us, [this, idx, h] {
                    sessions[idx].session->begin_handover(
                        sessions[idx].member_list.at(
                            static_cast<std::size_t>(h.ue_index)));
                });
                engine.schedule(ho.at_us + h.gap_us,
                                [this, idx, h] { on_mbs_handover_done(idx, h); });
            }
        }
    }

    std::set<std::string> active_session_cells(const SessionRt& rt) const {
        std::set<std::string> out;
        for (const auto& [ue, cell] : rt.member_cell) {
            out.insert(cell);
        }
        return out;
    }

    std::map<UeId, double> session_csi(SessionRt& rt, const std::string& cell) {
        std::map<UeId, double> csi;
        RngStream& rng = engine.rng("mbs-csi");
        for (UeId ue : rt.session->members_in(cell)) {
            double noise = 0.0;
            if (rt.spec.csi_noise_db > 0.0) {
                noise = rng.uniform(-rt.spec.csi_noise_db, rt.spec.csi_noise_db);
            }
            csi[ue] = rt.base_snr.at(ue) + noise;
        }
        return csi;
    }

    void on_mbs_update(std::size_t idx) {
        SessionRt& rt = sessions[idx];
        for (const std::string& cell : active_session_cells(rt)) {
            if (rt.session->members_in(cell).empty()) {
                continue;
            }
            rt.session->update_mode(cell, session_csi(rt, cell));
        }
        const MicroSec next = engine.now() + rt.spec.mode_update_period_us;
        if (next <= sc.duration_us) {
            engine.schedule(next, [this, idx] { on_mbs_update(idx); });
        }
    }

    void on_mbs_tx(std::size_t idx) {
        SessionRt& rt = sessions[idx];
        // One IP multicast SDU, transmitted in every cell that carries the
        // session.
        const std::uint32_t sn = rt.session->next_sdu();
        for (const std::string& cell : active_session_cells(rt)) {
            if (rt.session->members_in(cell).empty()) {
                continue;
            }
            const MbsTxReport report = rt.session->transmit_and_harq(
                cell, sn, session_csi(rt, cell), engine.rng("mbs-harq"));
            rt.ptm_retx += static_cast<std::uint64_t>(report.ptm_retx);
            rt.ptp_retx += static_cast<std::uint64_t>(report.ptp_retx);
        }
        const MicroSec next = engine.now() + rt.spec.packet_period_us;
        if (next <= sc.duration_us) {
            engine.schedule(next, [this, idx] { on_mbs_tx(idx); });
        }
    }

    void on_mbs_handover_done(std::size_t idx, const MbsHandoverSpec& ho) {
        SessionRt& rt = sessions[idx];
        const UeId ue =
            rt.member_list.at(static_cast<std::size_t>(ho.ue_index));
        const MbsHandoverReport report = rt.session->complete_handover(
            ue, ho.from, ho.to, ho.target_supports_mbs);
        rt.member_cell[ue] = ho.to;
        rt.handovers += 1;
        if (report.fell_back_to_unicast) {
            rt.fallbacks += 1;
        }
        emit(MetricEvent(engine.now(), "mbs_handover")
                 .add("session", rt.spec.id)
                 .add_u("ue", ue)
                 .add_i("joined", report.target_joined_session ? 1 : 0)
                 .add_i("fallback", report.fell_back_to_unicast ? 1 : 0)
                 .add_u("lost", report.sdus_lost)
                 .add_u("retx", report.sdus_retransmitted));
    }

    // ---- sidelink ---------------------------------------------------------

    void setup_sidelink() {
        for (const SidelinkGroupSpec& spec : sc.sidelink.groups) {
            GroupRt rt;
            rt.spec = spec;
            rt.pool.slots_per_window = sc.sidelink.pool_slots;
            rt.pool.subchannels = sc.sidelink.pool_subchannels;
            for (int i = 0; i < spec.members; ++i) {
                rt.members.push_back(next_ue_id++);
            }
            groups.push_back(std::move(rt));
            const std::size_t idx = groups.size() - 1;
            if (spec.round_period_us <= sc.duration_us) {
                engine.schedule(spec.round_period_us,
                                [this, idx] { on_sl_round(idx); });
            }
        }
    }

    void on_sl_round(std::size_t idx) {
        GroupRt& rt = groups[idx];
        RngStream& rng = engine.rng("sl");
        const UeId tx =
            rt.members[static_cast<std::size_t>(rt.round % rt.members.size())];
        rt.round += 1;

        // Mode-2 style autonomous selection against the sensed reservations.
        std::vector<SlReservation> sensed;
        for (const SlReservation& r : rt.pool.reservations) {
            if (r.owner != tx) {
                sensed.push_back(r);
            }
        }
        const CandidateResult cand = candidate_resources(
            rt.pool, sensed, sc.sidelink.rsrp_threshold_dbm);
        emit(MetricEvent(engine.now(), "sl_select")
                 .add_u("ue", tx)
                 .add_i("raises", cand.threshold_raises)
                 .add_u("candidates", cand.candidates.size()));
        SlReservation mine =
            select_and_reserve(rt.pool, tx, cand, rt.spec.priority, rng);
        rt.pool.reservations.back().rsrp_dbm = rng.uniform(-95.0, -75.0);

        // Contest against an earlier reservation on the same resource.
        for (const SlReservation& prior : sensed) {
            if (prior.resource == mine.resource) {
                const SlPreemption result = preempt(prior, rt.spec.priority);
                emit(MetricEvent(engine.now(), "sl_preempt")
                         .add("outcome", result == SlPreemption::Preempted
                                             ? "preempted"
                                             : "kept"));
                break;
            }
        }
        if (rt.pool.reservations.size() >
            static_cast<std::size_t>(2 * rt.spec.members)) {
            rt.pool.reservations.erase(rt.pool.reservations.begin());
        }

        std::vector<UeId> others;
        std::map<UeId, double> per;
        for (UeId ue : rt.members) {
            if (ue != tx) {
                others.push_back(ue);
                per[ue] = rt.spec.per;
            }
        }
        const GroupcastReport report =
            groupcast_round(tx, others, per, rt.spec.max_harq, rng);
        emit(MetricEvent(engine.now(), "sl_group")
                 .add("group", rt.spec.id)
                 .add_u("members", others.size())
                 .add_u("delivered", report.delivered.size())
                 .add_i("retx", report.retransmissions));

        const MicroSec next = engine.now() + rt.spec.round_period_us;
        if (next <= sc.duration_us) {
            engine.schedule(next, [this, idx] { on_sl_round(idx); });
        }
    }

    // ---- positioning -------------------------------------------------------

    double capped(double v) const { return std::isfinite(v) ? v : 1e9; }

    void emit_mean_dop(const std::string& tag, const std::vector<Anchor>& anchors,
                       const PositioningSpec& spec) {
        double h = 0.0, v = 0.0, g = 0.0;
        for (const Position& target : spec.targets) {
            try {
                const Dop dop = compute_dop(anchors, target, spec.method);
                h += dop.hdop;
                v += dop.vdop;
                g += dop.gdop;
            } catch (const DegenerateGeometry&) {
                h = v = g = std::numeric_limits<double>::infinity();
                break;
            }
        }
        const double n = static_cast<double>(spec.targets.size());
        emit(MetricEvent(engine.now(), "pos_dop")
                 .add("tag", tag)
                 .add_d("hdop", capped(h / n))
                 .add_d("vdop", capped(v / n))
                 .add_d("gdop", capped(g / n)));
    }

    void emit_batch(const std::string& tag, const std::vector<Anchor>& anchors,
                    const PositioningSpec& spec, bool record_draws) {
        McBatchParams params;
        params.sigma_s = spec.sigma_s;
        params.epochs = spec.epochs;
        params.method = spec.method;
        params.seed = sc.seed;
        params.anchor_offset_range_s = spec.anchor_offset_range_s;
        const std::vector<McDraw> draws =
            position_error_batch(anchors, spec.targets, params, spec.draws);
        double h2 = 0.0, v2 = 0.0;
        std::int64_t ok = 0;
        for (const McDraw& draw : draws) {
            if (record_draws) {
                emit(MetricEvent(engine.now(), "pos_draw")
                         .add("method",
                              spec.method == PositioningMethod::Tdoa ? "tdoa"
                                                                     : "rtt")
                         .add_d("h_err_m",
                                draw.degenerate ? 0.0 : draw.horizontal_error_m)
                         .add_d("v_err_m",
                                draw.degenerate ? 0.0 : draw.vertical_error_m)
                         .add_i("degenerate", draw.degenerate ? 1 : 0));
            }
            if (!draw.degenerate) {
                h2 += draw.horizontal_error_m * draw.horizontal_error_m;
                v2 += draw.vertical_error_m * draw.vertical_error_m;
                ok += 1;
            }
        }
        const double denom = ok > 0 ? static_cast<double>(ok) : 1.0;
        emit(MetricEvent(engine.now(), "pos_compare")
                 .add("tag", tag)
                 .add_i("draws_ok", ok)
                 .add_d("h_rmse_m", std::sqrt(h2 / denom))
                 .add_d("v_rmse_m", std::sqrt(v2 / denom)));
    }

    void schedule_positioning() {
        if (!sc.positioning || sc.positioning->draws <= 0) {
            return;
        }
        engine.schedule(sc.duration_us, [this] {
            const PositioningSpec& spec = *sc.positioning;
            emit_mean_dop("initial", spec.anchors, spec);

            std::vector<Anchor> deployed = spec.anchors;
            if (spec.improve_region) {
                const PlacementResult placed = improve_placement(
                    deployed, *spec.improve_region, spec.targets,
                    spec.improve_step_m, spec.method);
                deployed = placed.anchors;
                emit_mean_dop("improved", deployed, spec);
            }
            if (spec.compare_co_altitude) {
                // Co-altitude baseline: the deployment as it arrived, every
                // drone at one altitude.
                std::vector<Anchor> flat = spec.anchors;
                for (Anchor& a : flat) {
                    a.pos.z = spec.co_altitude_m;
                }
                emit_mean_dop("co_altitude", flat, spec);
                emit_batch("co_altitude", flat, spec, false);
            }
            emit_batch("deployed", deployed, spec, true);
        });
    }

    // ---- finalize ------------------------------------------------------

    void finalize(std::uint64_t executed) {
        const MicroSec t = sc.duration_us;
        for (const auto& [cell_id, cell] : cells) {
            for (const auto& [flow, stats] : cell.sched.all_stats()) {
                auto info_it = flow_info.find(flow);
                const FlowInfo info =
                    info_it != flow_info.end()
                        ? info_it->second
                        : FlowInfo{ues[flow].cls, ues[flow].service, false,
                                   PreemptionVulnerability::Preemptable};
                std::vector<MicroSec> lat = stats.latencies_us;
                std::sort(lat.begin(), lat.end());
                auto pct = [&](double p) -> std::int64_t {
                    if (lat.empty()) {
                        return 0;
                    }
                    const double rank =
                        p / 100.0 * static_cast<double>(lat.size());
                    std::size_t i = rank <= 1.0
                                        ? 0
                                        : static_cast<std::size_t>(
                                              std::ceil(rank)) - 1;
                    i = std::min(i, lat.size() - 1);
                    return lat[i];
                };
                emit(MetricEvent(t, "flow_summary")
                         .add_u("flow", flow)
                         .add("class", class_name(info.cls))
                         .add("service", to_string(info.service))
                         .add_i("gbr", info.gbr ? 1 : 0)
                         .add_i("admitted", stats.admitted ? 1 : 0)
                         .add_i("preempted", stats.preempted ? 1 : 0)
                         .add_u("delivered", stats.packets_delivered)
                         .add_u("violations", stats.pdb_violations)
                         .add_i("p50_us", pct(50))
                         .add_i("p95_us", pct(95))
                         .add_i("p99_us", pct(99))
                         .add_i("max_us", lat.empty() ? 0 : lat.back()));
            }
        }
        for (const auto& [id, rt] : iab_rt) {
            const IabNode& node = iab.node(id);
            PathMetrics pm{};
            if (node.du_state == DuState::Serving) {
                pm = iab.path_metrics(id);
            }
            emit(MetricEvent(t, "iab_node")
                     .add("node", id)
                     .add_u("dl_tx", node.dl_transmissions)
                     .add_u("suppressed_tx", node.suppressed_transmissions)
                     .add_i("dl_tx_during_flight", rt.dl_tx_during_flight)
                     .add_i("hops", pm.hops)
                     .add_i("path_latency_us", pm.latency_us)
                     .add_i("bottleneck_prbs", pm.bottleneck_prbs));
        }
        for (const SessionRt& rt : sessions) {
            int switches = 0;
            for (const std::string& cell : active_session_cells(rt)) {
                switches += rt.session->mode_switches(cell);
            }
            emit(MetricEvent(t, "mbs_session")
                     .add("session", rt.spec.id)
                     .add_u("prbs_used", rt.session->prbs_used_total())
                     .add_i("mode_switches", switches)
                     .add_u("ptm_retx", rt.ptm_retx)
                     .add_u("ptp_retx", rt.ptp_retx)
                     .add_u("sdus_sent", rt.session->next_sn())
                     .add_u("sdus_lost", rt.session->total_sdus_lost())
                     .add_u("handovers", rt.handovers)
                     .add_u("fallbacks", rt.fallbacks));
        }
        emit(MetricEvent(t, "run").add_u("events_executed", executed));
    }

    RunResult run() {
        setup_cells();
        ensure_uac_defaults();
        setup_iab();
        setup_populations();
        setup_mbs();
        setup_sidelink();
        schedule_positioning();

        const std::uint64_t executed = engine.run_until(sc.duration_us);
        finalize(executed);

        RunResult result;
        result.events = collector.events();
        result.events_executed = executed;
        result.report = collector.report(sc.raw, sc.seed);
        result.summary = collector.summary_line(sc.name);
        return result;
    }
};

ScenarioRunner::ScenarioRunner(Scenario scenario)
    : impl_(std::make_unique<Impl>(std::move(scenario))) {}

ScenarioRunner::~ScenarioRunner() = default;

RunResult ScenarioRunner::run() { return impl_->run(); }

RunResult run_scenario(const Scenario& scenario,
                       std::optional<std::uint64_t> seed_override) {
    Scenario sc = scenario;
    if (seed_override) {
        sc.seed = *seed_override;
        sc.raw["seed"] = *seed_override;
    }
    ScenarioRunner runner(std::move(sc));
    return runner.run();
}

nlohmann::ordered_json replay_trace(const TraceFile& trace) {
    MetricsCollector collector;
    for (const MetricEvent& ev : trace.events) {
        collector.consume(ev);
    }
    return collector.report(trace.config_echo, trace.seed);
}

} // namespace mcran
