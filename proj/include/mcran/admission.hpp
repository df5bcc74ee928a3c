#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcran/access_control.hpp"
#include "mcran/qos.hpp"
#include "mcran/sim_core.hpp"

namespace mcran {

using FlowId = std::uint32_t;

struct FlowRequest {
    FlowId flow_id = 0;
    UeId ue_id = 0;
    QosProfile profile;
    Arp arp;
    int demand_prbs = 0; // per-slot reservation (from required_prbs)
};

enum class AdmissionOutcome { Admitted, AdmittedWithPreemption, Rejected };

struct AdmitResult {
    AdmissionOutcome outcome = AdmissionOutcome::Rejected;
    std::vector<FlowId> victims;
};

struct FlowStats {
    bool admitted = false;
    bool preempted = false;
    std::optional<FlowId> preempted_by;
    std::uint64_t packets_delivered = 0;
    std::uint64_t pdb_violations = 0;
    std::vector<MicroSec> latencies_us; // completed packets only
};

// Per-cell admission control with ARP pre-emption plus a per-slot scheduler
// that reserves PRBs for GBR flows in priority order and shares the rest
// round-robin among non-GBR flows. Deadline-expired packets are dropped and
// counted as RAN delay-budget violations.
class CellScheduler {
public:
    CellScheduler(std::string cell_id, int capacity_prbs,
                  MicroSec slot_us = 1000)
        : cell_id_(std::move(cell_id)), capacity_prbs_(capacity_prbs),
          slot_us_(slot_us) {}

    const std::string& cell_id() const { return cell_id_; }
    MicroSec slot_us() const { return slot_us_; }

    // Multi-hop backhaul accounting: access traffic is throttled to the
    // path bottleneck and delayed by the path latency.
    void set_backhaul(int bottleneck_prbs, MicroSec path_latency_us);

    int effective_capacity_prbs() const;
    int reserved_prbs() const;
    int headroom_prbs() const { return effective_capacity_prbs() - reserved_prbs(); }

    AdmitResult admit(const FlowRequest& req, MicroSec now);

    // Pre-emption candidates for a requester that MayPreempt: flows that are
    // Preemptable with a strictly worse (larger) ARP priority number, worst
    // first, most recently admitted first within a tie. Empty when even the
    // full candidate set cannot free needed_prbs.
    std::vector<FlowId> select_victims(int needed_prbs,
                                       const Arp& requester) const;

    void release(FlowId flow);
    bool has_flow(FlowId flow) const { return flows_.count(flow) > 0; }
    const FlowRequest& request(FlowId flow) const { return flows_.at(flow).req; }

    void enqueue_packet(FlowId flow, MicroSec arrival_us, int prb_slots);

    struct SlotResult {
        std::vector<std::pair<FlowId, int>> allocation;
        int total_allocated = 0;
    };

    // Serves one slot starting at `now`; completions are stamped at the slot
    // end. Throws ContractViolation if the allocation would exceed capacity.
    SlotResult schedule_slot(MicroSec now);

    const FlowStats& stats(FlowId flow) const { return stats_.at(flow); }
    const std::map<FlowId, FlowStats>& all_stats() const { return stats_; }

    // Admission safety: sum of admitted demand never exceeds capacity.
    void check_invariants(MicroSec now) const;

private:
    struct Packet {
        MicroSec arrival_us;
        int prb_slots_remaining;
    };
    struct Flow {
        FlowRequest req;
        MicroSec admitted_at;
        std::uint64_t admit_seq;
        std::deque<Packet> queue;
    };

    MicroSec deadline_for(const Flow& f, const Packet& p) const;
    void drop_expired(Flow& f, MicroSec now);

    std::string cell_id_;
    int capacity_prbs_;
    MicroSec slot_us_;
    int backhaul_bottleneck_prbs_ = -1; // -1: no throttle
    MicroSec backhaul_latency_us_ = 0;
    std::uint64_t admit_counter_ = 0;
    std::size_t rr_offset_ = 0;
    std::map<FlowId, Flow> flows_;
    std::map<FlowId, FlowStats> stats_;
};

} // namespace mcran
