#include "mcran/sidelink.hpp"

#include <algorithm>

#include "mcran/errors.hpp"

namespace mcran {

CandidateResult candidate_resources(const SlPool& pool,
                                    const std::vector<SlReservation>& sensed,
                                    double rsrp_threshold_dbm) {
    CandidateResult result;
    result.final_threshold_dbm = rsrp_threshold_dbm;
    const double floor_count = 0.2 * static_cast<double>(pool.size());

    while (true) {
        std::set<SlResource> excluded;
        for (const auto& r : sensed) {
            if (r.rsrp_dbm >= result.final_threshold_dbm) {
                excluded.insert(r.resource);
            }
        }
        result.candidates.clear();
        for (int slot = 0; slot < pool.slots_per_window; ++slot) {
            for (int sub = 0; sub < pool.subchannels; ++sub) {
                SlResource res{slot, sub};
                if (excluded.count(res) == 0) {
                    result.candidates.push_back(res);
                }
            }
        }
        if (static_cast<double>(result.candidates.size()) >= floor_count ||
            excluded.empty()) {
            return result;
        }
        result.final_threshold_dbm += 3.0;
        result.threshold_raises += 1;
    }
}

SlReservation select_and_reserve(SlPool& pool, UeId ue,
                                 const CandidateResult& candidates,
                                 int priority, RngStream& rng) {
    if (candidates.candidates.empty()) {
        throw DomainError("select_and_reserve on empty candidate set");
    }
    const std::size_t pick = static_cast<std::size_t>(
        rng.uniform_int(candidates.candidates.size()));
    SlReservation reservation{candidates.candidates[pick], ue, priority,
                              -140.0};
    pool.reservations.push_back(reservation);
    return reservation;
}

SlPreemption preempt(const SlReservation& existing, int challenger_priority) {
    return challenger_priority < existing.priority ? SlPreemption::Preempted
                                                   : SlPreemption::Kept;
}

GroupcastReport groupcast_round(UeId, const std::vector<UeId>& members,
                                const std::map<UeId, double>& per_per_link,
                                int max_harq, RngStream& rng) {
    GroupcastReport report;
    std::vector<UeId> missing = members;

    for (int round = 0; round <= max_harq && !missing.empty(); ++round) {
        if (round > 0) {
            report.retransmissions += 1;
        }
        std::vector<UeId> still_missing;
        for (UeId ue : missing) {
            const double per = per_per_link.count(ue) ? per_per_link.at(ue) : 0.0;
            if (rng.uniform() >= per) {
                report.delivered.insert(ue);
                report.rounds_needed[ue] = round;
            } else {
                still_missing.push_back(ue); // NACK
            }
        }
        missing = std::move(still_missing);
    }
    return report;
}

} // namespace mcran
