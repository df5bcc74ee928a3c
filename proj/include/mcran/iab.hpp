#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcran/access_control.hpp"
#include "mcran/radio_env.hpp"
#include "mcran/sim_core.hpp"

namespace mcran {

enum class IabRole { Donor, Child };
enum class MtState { Idle, RrcConnected };
enum class DuState { Inactive, F1Setup, Serving };

struct IabStateChange {
    MicroSec t;
    MtState mt;
    DuState du;
};

// Donor hosts the CU and a donor DU; children host an MT (the UE-like
// function towards the parent) and a DU controlled by the donor CU over F1.
struct IabNode {
    std::string node_id;
    IabRole role = IabRole::Child;
    MtState mt_state = MtState::Idle;
    DuState du_state = DuState::Inactive;
    std::optional<std::string> parent;
    Position position;
    double battery_j = 0.0; // 0 = externally powered
    double drain_w = 0.0;
    bool mt_is_drone_control_channel = false;
    std::vector<IabStateChange> trace;
    std::uint64_t dl_transmissions = 0; // emitted while Serving
    std::uint64_t suppressed_transmissions = 0;
};

struct BackhaulLink {
    std::string child;
    std::string parent;
    int capacity_prbs = 0;
    MicroSec per_hop_latency_us = 0;
};

struct PathMetrics {
    int hops = 0;
    MicroSec latency_us = 0;
    int bottleneck_prbs = 0;
};

enum class ReplacementMode { PlainHandover, CoordinatedDuplication };

// Downlink load carried by the node being replaced, used to replay SDU
// arrivals against per-UE service gaps.
struct ReplacementTraffic {
    int ue_count = 0;
    MicroSec arrival_period_us = 5'000; // per-UE downlink SDU period
    MicroSec handover_gap_us = 30'000;  // per-UE outage in PlainHandover
    MicroSec handover_spacing_us = 10'000;
};

struct ReplacementReport {
    ReplacementMode mode = ReplacementMode::PlainHandover;
    int handovers = 0;
    std::uint64_t sdus_lost = 0;
    MicroSec interruption_us = 0;
    // Event logs kept so the loss figure can be re-derived by replay.
    struct Sdu {
        int ue;
        MicroSec t;
    };
    struct Gap {
        int ue;
        MicroSec start;
        MicroSec end; // half-open
    };
    std::vector<Sdu> arrivals;
    std::vector<Gap> gaps;
};

struct IntegrationTiming {
    std::optional<MicroSec> rrc_connected_us;
    std::optional<MicroSec> serving_us; // set only when F1 completed
};

// Donor-rooted forest of IAB nodes. Topology changes happen only from
// sim-core events; this class is never shared across engines.
class IabTopology {
public:
    MicroSec f1_setup_delay_us = 50'000;
    CbraParams rach_params;

    IabNode& add_node(IabNode node);
    bool has_node(const std::string& id) const { return nodes_.count(id) > 0; }
    IabNode& node(const std::string& id);
    const IabNode& node(const std::string& id) const;

    // Attaches child under parent. Throws TopologyError on cycles, unknown
    // endpoints, or re-parenting a donor.
    void link(const std::string& child, const std::string& parent,
              int capacity_prbs, MicroSec per_hop_latency_us);

    const BackhaulLink* uplink(const std::string& child) const;

    // MT cell search + RRC connection to the donor CU (single-UE CBRA), then
    // F1 setup unless deferred. State timestamps are returned so callers can
    // schedule follow-up events; on RRC failure the node stays Idle.
    IntegrationTiming integrate(const std::string& node_id,
                                const std::string& donor_id, bool defer_f1,
                                MicroSec now, RngStream& rng);

    // Resumes a deferred integration. Requires MT RrcConnected and DU
    // Inactive; throws IllegalStateError otherwise. Returns the Serving time.
    MicroSec complete_f1(const std::string& node_id, MicroSec now);

    // Seamless (or plain) replacement of s_iab by r_iab under one parent.
    ReplacementReport replace(const std::string& s_iab, const std::string& r_iab,
                              ReplacementMode mode,
                              const ReplacementTraffic& traffic, MicroSec now);

    // Hops/latency/bottleneck along the path to the donor.
    PathMetrics path_metrics(const std::string& node_id) const;

    // Downlink transmission hook: counts and returns true only when the DU
    // is Serving; otherwise the transmission is suppressed.
    bool du_transmit(const std::string& node_id, MicroSec t);

    // Forest check: every child chains up to a donor, no cycles.
    bool is_donor_rooted_forest() const;

    std::optional<MicroSec> battery_runtime_us(const std::string& node_id) const;
    void deactivate(const std::string& node_id, MicroSec now);

private:
    void set_states(IabNode& n, MicroSec t, MtState mt, DuState du);

    std::map<std::string, IabNode> nodes_;
    std::map<std::string, BackhaulLink> links_by_child_;
};

} // namespace mcran
