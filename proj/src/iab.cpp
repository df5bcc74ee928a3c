#include "mcran/iab.hpp"

#include <algorithm>
#include <limits>

#include "mcran/errors.hpp"

namespace mcran {

IabNode& IabTopology::add_node(IabNode node) {
    if (node.role == IabRole::Donor) {
        node.du_state = DuState::Serving;
    }
    auto [it, inserted] = nodes_.emplace(node.node_id, std::move(node));
    if (!inserted) {
        throw TopologyError("duplicate IAB node " + it->first);
    }
    return it->second;
}

IabNode& IabTopology::node(const std::string& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw TopologyError("unknown IAB node " + id);
    }
    return it->second;
}

const IabNode& IabTopology::node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw TopologyError("unknown IAB node " + id);
    }
    return it->second;
}

void IabTopology::link(const std::string& child, const std::string& parent,
                       int capacity_prbs, MicroSec per_hop_latency_us) {
    IabNode& c = node(child);
    node(parent);
    if (c.role == IabRole::Donor) {
        throw TopologyError("donor " + child + " cannot have a parent");
    }
    // Cycle check: walking up from the parent must never reach the child.
    std::string cursor = parent;
    while (true) {
        if (cursor == child) {
            throw TopologyError("linking " + child + " under " + parent +
                                " would create a cycle");
        }
        auto it = links_by_child_.find(cursor);
        if (it == links_by_child_.end()) {
            break;
        }
        cursor = it->second.parent;
    }
    c.parent = parent;
    links_by_child_[child] =
        BackhaulLink{child, parent, capacity_prbs, per_hop_latency_us};
}

const BackhaulLink* IabTopology::uplink(const std::string& child) const {
    auto it = links_by_child_.find(child);
    return it == links_by_child_.end() ? nullptr : &it->second;
}

void IabTopology::set_states(IabNode& n, MicroSec t, MtState mt, DuState du) {
    n.mt_state = mt;
    n.du_state = du;
    n.trace.push_back({t, mt, du});
}

IntegrationTiming IabTopology::integrate(const std::string& node_id,
                                         const std::string& donor_id,
                                         bool defer_f1, MicroSec now,
                                         RngStream& rng) {
    IabNode& n = node(node_id);
    const IabNode& donor = node(donor_id);
    if (n.role != IabRole::Child) {
        throw IllegalStateError("integrate: " + node_id + " is not a child node");
    }
    if (n.mt_state != MtState::Idle) {
        throw IllegalStateError("integrate: MT of " + node_id + " is not Idle");
    }
    if (donor.role != IabRole::Donor) {
        throw IllegalStateError("integrate: " + donor_id + " is not a donor");
    }

    IntegrationTiming timing;
    // Cell search + RRC connection towards the donor CU, like a regular UE.
    AccessAttempt attempt;
    attempt.ue_id = static_cast<UeId>(hash_label(node_id) & 0xffffffu);
    attempt.establishment_cause = EstablishmentCause::McsPriorityAccess;
    attempt.request_time = now;
    const CbraOutcome rrc = run_cbra(attempt, UserClass::Mc, rach_params, rng);
    if (!rrc.success) {
        return timing; // stays Idle, caller retries via event
    }
    const MicroSec rrc_done = now + rrc.latency_us;
    timing.rrc_connected_us = rrc_done;
    set_states(n, rrc_done, MtState::RrcConnected, DuState::Inactive);

    if (!defer_f1) {
        set_states(n, rrc_done, MtState::RrcConnected, DuState::F1Setup);
        const MicroSec serving = rrc_done + f1_setup_delay_us;
        set_states(n, serving, MtState::RrcConnected, DuState::Serving);
        timing.serving_us = serving;
    }
    return timing;
}

MicroSec IabTopology::complete_f1(const std::string& node_id, MicroSec now) {
    IabNode& n = node(node_id);
    if (n.mt_state != MtState::RrcConnected) {
        throw IllegalStateError("complete_f1: MT of " + node_id +
                                " is not RRC-connected");
    }
    if (n.du_state != DuState::Inactive) {
        throw IllegalStateError("complete_f1: DU of " + node_id +
                                " is not Inactive");
    }
    set_states(n, now, MtState::RrcConnected, DuState::F1Setup);
    const MicroSec serving = now + f1_setup_delay_us;
    set_states(n, serving, MtState::RrcConnected, DuState::Serving);
    return serving;
}

ReplacementReport IabTopology::replace(const std::string& s_iab,
                                       const std::string& r_iab,
                                       ReplacementMode mode,
                                       const ReplacementTraffic& traffic,
                                       MicroSec now) {
    IabNode& s = node(s_iab);
    IabNode& r = node(r_iab);
    if (!s.parent || !r.parent || *s.parent != *r.parent) {
        throw UnsupportedError(
            "replacement requires a common parent serving both child nodes");
    }
    if (r.du_state != DuState::Serving) {
        throw IllegalStateError("replacement node " + r_iab + " is not Serving");
    }

    ReplacementReport report;
    report.mode = mode;
    report.handovers = traffic.ue_count;

    // Per-UE service gaps. Coordinated duplication keeps both nodes
    // transmitting through the common parent, so there is no gap at all.
    MicroSec window_end = now;
    for (int ue = 0; ue < traffic.ue_count; ++ue) {
        const MicroSec ho_at = now + static_cast<MicroSec>(ue) *
                                         traffic.handover_spacing_us;
        if (mode == ReplacementMode::PlainHandover) {
            report.gaps.push_back({ue, ho_at, ho_at + traffic.handover_gap_us});
            window_end = std::max(window_end, ho_at + traffic.handover_gap_us);
        } else {
            window_end = std::max(window_end, ho_at);
        }
    }

    // Downlink SDU arrivals at the serving node over the replacement window;
    // deterministic per-UE phase staggers the streams.
    for (int ue = 0; ue < traffic.ue_count; ++ue) {
        const MicroSec phase = (static_cast<MicroSec>(ue) * 997) %
                               traffic.arrival_period_us;
        for (MicroSec t = now + phase; t < window_end;
             t += traffic.arrival_period_us) {
            report.arrivals.push_back({ue, t});
        }
    }

    for (const auto& gap : report.gaps) {
        report.interruption_us += gap.end - gap.start;
        for (const auto& sdu : report.arrivals) {
            if (sdu.ue == gap.ue && sdu.t >= gap.start && sdu.t < gap.end) {
                report.sdus_lost += 1;
            }
        }
    }

    // S-IAB withdraws once its UEs are gone.
    set_states(s, window_end, s.mt_state, DuState::Inactive);
    return report;
}

PathMetrics IabTopology::path_metrics(const std::string& node_id) const {
    const IabNode& n = node(node_id);
    if (n.du_state != DuState::Serving) {
        throw IllegalStateError("path_metrics: " + node_id + " is not Serving");
    }
    PathMetrics pm;
    pm.bottleneck_prbs = std::numeric_limits<int>::max();
    std::string cursor = node_id;
    std::size_t steps = 0;
    while (node(cursor).role != IabRole::Donor) {
        auto it = links_by_child_.find(cursor);
        if (it == links_by_child_.end()) {
            throw TopologyError("node " + node_id + " has no path to a donor");
        }
        pm.hops += 1;
        pm.latency_us += it->second.per_hop_latency_us;
        pm.bottleneck_prbs = std::min(pm.bottleneck_prbs, it->second.capacity_prbs);
        cursor = it->second.parent;
        if (++steps > nodes_.size()) {
            throw TopologyError("cycle detected above " + node_id);
        }
    }
    if (pm.hops == 0) {
        pm.bottleneck_prbs = 0; // donor itself: no backhaul constraint
    }
    return pm;
}

bool IabTopology::du_transmit(const std::string& node_id, MicroSec) {
    IabNode& n = node(node_id);
    if (n.du_state == DuState::Serving) {
        n.dl_transmissions += 1;
        return true;
    }
    n.suppressed_transmissions += 1;
    return false;
}

bool IabTopology::is_donor_rooted_forest() const {
    for (const auto& [id, n] : nodes_) {
        if (n.role == IabRole::Donor) {
            continue;
        }
        if (!n.parent) {
            continue; // unattached child is fine, it is just not integrated
        }
        std::string cursor = id;
        std::size_t steps = 0;
        while (true) {
            auto it = links_by_child_.find(cursor);
            if (it == links_by_child_.end()) {
                if (nodes_.at(cursor).role != IabRole::Donor) {
                    return false;
                }
                break;
            }
            cursor = it->second.parent;
            if (++steps > nodes_.size()) {
                return false; // cycle
            }
        }
    }
    return true;
}

std::optional<MicroSec>
IabTopology::battery_runtime_us(const std::string& node_id) const {
    const IabNode& n = node(node_id);
    if (n.battery_j <= 0.0 || n.drain_w <= 0.0) {
        return std::nullopt;
    }
    return static_cast<MicroSec>(n.battery_j / n.drain_w * 1e6);
}

void IabTopology::deactivate(const std::string& node_id, MicroSec now) {
    IabNode& n = node(node_id);
    set_states(n, now, MtState::Idle, DuState::Inactive);
}

} // namespace mcran
