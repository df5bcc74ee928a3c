#include "mcran/admission.hpp"

#include <algorithm>

#include "mcran/errors.hpp"

namespace mcran {

void CellScheduler::set_backhaul(int bottleneck_prbs,
                                 MicroSec path_latency_us) {
    backhaul_bottleneck_prbs_ = bottleneck_prbs;
    backhaul_latency_us_ = path_latency_us;
}

int CellScheduler::effective_capacity_prbs() const {
    if (backhaul_bottleneck_prbs_ < 0) {
        return capacity_prbs_;
    }
    return std::min(capacity_prbs_, backhaul_bottleneck_prbs_);
}

int CellScheduler::reserved_prbs() const {
    int sum = 0;
    for (const auto& [id, f] : flows_) {
        sum += f.req.demand_prbs;
    }
    return sum;
}

AdmitResult CellScheduler::admit(const FlowRequest& req, MicroSec now) {
    AdmitResult result;
    auto& st = stats_[req.flow_id];

    const int headroom = headroom_prbs();
    std::vector<FlowId> victims;
    if (headroom < req.demand_prbs) {
        if (req.arp.capability != PreemptionCapability::MayPreempt) {
            result.outcome = AdmissionOutcome::Rejected;
            return result;
        }
        victims = select_victims(req.demand_prbs - headroom, req.arp);
        if (victims.empty()) {
            result.outcome = AdmissionOutcome::Rejected;
            return result;
        }
        for (FlowId v : victims) {
            stats_.at(v).preempted = true;
            stats_.at(v).preempted_by = req.flow_id;
            release(v);
        }
    }

    flows_.emplace(req.flow_id, Flow{req, now, admit_counter_++, {}});
    st.admitted = true;
    result.outcome = victims.empty() ? AdmissionOutcome::Admitted
                                     : AdmissionOutcome::AdmittedWithPreemption;
    result.victims = std::move(victims);
    check_invariants(now);
    return result;
}

std::vector<FlowId> CellScheduler::select_victims(int needed_prbs,
                                                  const Arp& requester) const {
    struct Candidate {
        FlowId id;
        int arp_priority;
        std::uint64_t admit_seq;
        int demand;
    };
    std::vector<Candidate> candidates;
    for (const auto& [id, f] : flows_) {
        if (f.req.arp.vulnerability != PreemptionVulnerability::Preemptable) {
            continue;
        }
        if (f.req.arp.priority_level <= requester.priority_level) {
            continue; // strictly worse priority number only
        }
        candidates.push_back(
            {id, f.req.arp.priority_level, f.admit_seq, f.req.demand_prbs});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  if (a.arp_priority != b.arp_priority) {
                      return a.arp_priority > b.arp_priority;
                  }
                  return a.admit_seq > b.admit_seq; // newest first
              });
    std::vector<FlowId> victims;
    int freed = 0;
    for (const Candidate& c : candidates) {
        if (freed >= needed_prbs) {
            break;
        }
        victims.push_back(c.id);
        freed += c.demand;
    }
    if (freed < needed_prbs) {
        return {};
    }
    return victims;
}

void CellScheduler::release(FlowId flow) { flows_.erase(flow); }

void CellScheduler::enqueue_packet(FlowId flow, MicroSec arrival_us,
                                   int prb_slots) {
    auto it = flows_.find(flow);
    if (it == flows_.end()) {
        return; // flow was preempted/released; packet has nowhere to go
    }
    it->second.queue.push_back({arrival_us, prb_slots});
}

MicroSec CellScheduler::deadline_for(const Flow& f, const Packet& p) const {
    return p.arrival_us + us_from_ms(f.req.profile.ran_delay_budget_ms) -
           backhaul_latency_us_;
}

void CellScheduler::drop_expired(Flow& f, MicroSec now) {
    auto& st = stats_.at(f.req.flow_id);
    while (!f.queue.empty() && deadline_for(f, f.queue.front()) < now) {
        st.pdb_violations += 1;
        f.queue.pop_front();
    }
}

CellScheduler::SlotResult CellScheduler::schedule_slot(MicroSec now) {
    SlotResult result;
    int remaining = effective_capacity_prbs();

    for (auto& [id, f] : flows_) {
        drop_expired(f, now);
    }

    // GBR first, ascending priority; EDF within a priority level.
    struct Key {
        int priority;
        MicroSec head_deadline;
        FlowId id;
    };
    std::vector<Key> gbr_order;
    for (const auto& [id, f] : flows_) {
        if (f.req.profile.resource_type != ResourceType::Gbr ||
            f.queue.empty()) {
            continue;
        }
        gbr_order.push_back(
            {f.req.profile.priority_level, deadline_for(f, f.queue.front()), id});
    }
    std::sort(gbr_order.begin(), gbr_order.end(), [](const Key& a, const Key& b) {
        if (a.priority != b.priority) {
            return a.priority < b.priority;
        }
        if (a.head_deadline != b.head_deadline) {
            return a.head_deadline < b.head_deadline;
        }
        return a.id < b.id;
    });

    auto serve = [&](Flow& f, int prbs) {
        auto& st = stats_.at(f.req.flow_id);
        int used = 0;
        while (prbs > 0 && !f.queue.empty()) {
            Packet& head = f.queue.front();
            const int take = std::min(prbs, head.prb_slots_remaining);
            head.prb_slots_remaining -= take;
            prbs -= take;
            used += take;
            if (head.prb_slots_remaining == 0) {
                const MicroSec completion = now + slot_us_;
                const MicroSec latency =
                    completion - head.arrival_us + backhaul_latency_us_;
                if (latency > us_from_ms(f.req.profile.ran_delay_budget_ms)) {
                    st.pdb_violations += 1;
                } else {
                    st.packets_delivered += 1;
                    st.latencies_us.push_back(latency);
                }
                f.queue.pop_front();
            }
        }
        return used;
    };

    for (const Key& k : gbr_order) {
        if (remaining <= 0) {
            break;
        }
        Flow& f = flows_.at(k.id);
        const int grant = std::min(remaining, f.req.demand_prbs);
        const int used = serve(f, grant);
        if (used > 0) {
            result.allocation.emplace_back(k.id, used);
            remaining -= used;
            result.total_allocated += used;
        }
    }

    // Non-GBR round robin over the leftover capacity, priority order with a
    // rotating start so equal-priority flows share fairly across slots.
    std::vector<FlowId> nongbr;
    for (const auto& [id, f] : flows_) {
        if (f.req.profile.resource_type == ResourceType::NonGbr &&
            !f.queue.empty()) {
            nongbr.push_back(id);
        }
    }
    std::sort(nongbr.begin(), nongbr.end(), [&](FlowId a, FlowId b) {
        const int pa = flows_.at(a).req.profile.priority_level;
        const int pb = flows_.at(b).req.profile.priority_level;
        return pa != pb ? pa < pb : a < b;
    });
    if (!nongbr.empty()) {
        std::map<FlowId, int> granted;
        std::size_t i = rr_offset_ % nongbr.size();
        std::size_t idle_passes = 0;
        while (remaining > 0 && idle_passes < nongbr.size()) {
            Flow& f = flows_.at(nongbr[i]);
            if (!f.queue.empty()) {
                const int used = serve(f, 1);
                if (used > 0) {
                    granted[nongbr[i]] += used;
                    remaining -= used;
                    idle_passes = 0;
                } else {
                    ++idle_passes;
                }
            } else {
                ++idle_passes;
            }
            i = (i + 1) % nongbr.size();
        }
        rr_offset_ += 1;
        for (const auto& [id, prbs] : granted) {
            result.allocation.emplace_back(id, prbs);
            result.total_allocated += prbs;
        }
    }

    if (result.total_allocated > effective_capacity_prbs()) {
        throw ContractViolation("slot allocation exceeds cell capacity", now);
    }
    return result;
}

void CellScheduler::check_invariants(MicroSec now) const {
    int gbr_sum = 0;
    for (const auto& [id, f] : flows_) {
        if (f.req.profile.resource_type == ResourceType::Gbr) {
            gbr_sum += f.req.demand_prbs;
        }
    }
    if (gbr_sum > effective_capacity_prbs()) {
        throw ContractViolation("admitted GBR demand exceeds capacity", now);
    }
    if (reserved_prbs() > effective_capacity_prbs()) {
        throw ContractViolation("admitted demand exceeds capacity", now);
    }
}

} // namespace mcran
