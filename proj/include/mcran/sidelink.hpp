#pragma once

#include <map>
#include <set>
#include <vector>

#include "mcran/access_control.hpp"
#include "mcran/rng.hpp"

namespace mcran {

struct SlResource {
    int slot = 0;
    int subchannel = 0;

    auto operator<=>(const SlResource&) const = default;
};

struct SlReservation {
    SlResource resource;
    UeId owner = 0;
    int priority = 1; // lower = more critical
    double rsrp_dbm = -140.0;
};

struct SlPool {
    int slots_per_window = 0;
    int subchannels = 0;
    std::vector<SlReservation> reservations;

    int size() const { return slots_per_window * subchannels; }
};

struct CandidateResult {
    std::vector<SlResource> candidates;
    double final_threshold_dbm = 0.0;
    int threshold_raises = 0;
};

// Sensing-based candidate selection: excludes resources whose sensed
// reservation is at or above the RSRP threshold; when fewer than 20% of the
// pool survives, the threshold is raised 3 dB and the exclusion re-run.
CandidateResult candidate_resources(const SlPool& pool,
                                    const std::vector<SlReservation>& sensed,
                                    double rsrp_threshold_dbm);

// Uniform pick among candidates, recorded into the pool.
// Throws DomainError on an empty candidate set (candidate_resources never
// produces one).
SlReservation select_and_reserve(SlPool& pool, UeId ue,
                                 const CandidateResult& candidates,
                                 int priority, RngStream& rng);

enum class SlPreemption { Kept, Preempted };

// Priority contest on one contested resource. The incumbent wins ties.
SlPreemption preempt(const SlReservation& existing, int challenger_priority);

struct GroupcastReport {
    std::set<UeId> delivered;
    int retransmissions = 0;
    std::map<UeId, int> rounds_needed; // 0 = first transmission
};

// NACK-only groupcast HARQ: retransmit to the still-missing members until
// everyone has the packet or max_harq retransmissions are spent.
GroupcastReport groupcast_round(UeId tx_ue, const std::vector<UeId>& members,
                                const std::map<UeId, double>& per_per_link,
                                int max_harq, RngStream& rng);

} // namespace mcran
