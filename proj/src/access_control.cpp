#include "mcran/access_control.hpp"

#include <algorithm>
#include <cmath>

#include "mcran/errors.hpp"

namespace mcran {

EstablishmentCause classify_cause(const UeContext& ue) {
    return ue.user_class == UserClass::Mc ? EstablishmentCause::McsPriorityAccess
                                          : EstablishmentCause::MoData;
}

UacDecision uac_check(const AccessAttempt& attempt, const UacConfig& config,
                      double draw, double duration_draw) {
    UacDecision decision;
    UacCategoryConfig category;
    auto it = config.categories.find(attempt.access_category);
    if (it == config.categories.end()) {
        // Unknown category: most restrictive configured behaviour.
        decision.unknown_category = true;
        category.barring_factor = 0.0;
        category.barring_time_ms = 512;
        for (const auto& [id, c] : config.categories) {
            category.barring_time_ms =
                std::max(category.barring_time_ms, c.barring_time_ms);
        }
    } else {
        category = it->second;
    }

    for (int identity : attempt.access_identities) {
        if (category.exempt_identities.count(identity) > 0) {
            decision.allowed = true;
            return decision;
        }
    }
    if (draw < category.barring_factor) {
        decision.allowed = true;
        return decision;
    }
    const double barred_ms =
        (0.7 + 0.6 * duration_draw) * static_cast<double>(category.barring_time_ms);
    decision.barred_for_us = std::llround(barred_ms * 1000.0);
    return decision;
}

void RachContention::add(const AccessAttempt& attempt, UserClass cls) {
    Pending p{attempt, cls, attempt.request_time, 0,
              params_.initial_tx_power_dbm, 0};
    pending_.emplace(attempt.ue_id, std::move(p));
}

MicroSec RachContention::next_occasion(MicroSec t) const {
    const MicroSec period = params_.occasion_period_us;
    return ((t + period - 1) / period) * period;
}

void RachContention::finish(UeId ue, const Pending& p, bool success,
                            MicroSec t) {
    CbraOutcome out;
    out.success = success;
    out.attempts = p.attempts_used;
    out.latency_us = t - p.attempt.request_time;
    out.final_power_dbm = p.power_dbm;
    out.total_backoff_us = p.backoff_total_us;
    out.cause = p.attempt.establishment_cause;
    outcomes_[ue] = out;
}

void RachContention::resolve_occasion(MicroSec t, RngStream& rng) {
    // Participants in UE-id order so draw order is reproducible.
    std::vector<UeId> participants;
    for (const auto& [ue, p] : pending_) {
        if (p.ready_us <= t) {
            participants.push_back(ue);
        }
    }
    if (participants.empty()) {
        return;
    }

    std::map<int, int> preamble_count;
    std::map<UeId, int> choice;
    std::map<UeId, bool> msg1_lost;
    for (UeId ue : participants) {
        const int preamble = static_cast<int>(
            rng.uniform_int(static_cast<std::uint64_t>(params_.preamble_pool_size)));
        choice[ue] = preamble;
        preamble_count[preamble] += 1;
        msg1_lost[ue] = params_.msg1_error_prob > 0.0 &&
                        rng.uniform() < params_.msg1_error_prob;
    }

    for (UeId ue : participants) {
        Pending& p = pending_.at(ue);
        p.attempts_used += 1;
        const bool collided = preamble_count[choice[ue]] > 1;
        if (!collided && !msg1_lost[ue]) {
            // Msg2 granted, Msg3 carries the establishment cause, contention
            // resolved at Msg4.
            finish(ue, p, true, t + params_.msg_exchange_delay_us);
            pending_.erase(ue);
            continue;
        }
        if (p.attempts_used >= params_.max_attempts) {
            finish(ue, p, false, t);
            pending_.erase(ue);
            continue;
        }
        const auto& cls = params_.for_class(p.cls);
        const MicroSec backoff = static_cast<MicroSec>(
            rng.uniform(0.0, static_cast<double>(cls.backoff_max_ms) * 1000.0));
        p.backoff_total_us += backoff;
        p.ready_us = t + backoff;
        p.power_dbm += cls.power_ramp_step_db;
    }
}

void RachContention::run_to_completion(RngStream& rng, MicroSec horizon_us) {
    MicroSec t = 0;
    if (!pending_.empty()) {
        MicroSec earliest = pending_.begin()->second.ready_us;
        for (const auto& [ue, p] : pending_) {
            earliest = std::min(earliest, p.ready_us);
        }
        t = next_occasion(earliest);
    }
    while (!pending_.empty() && t <= horizon_us) {
        resolve_occasion(t, rng);
        t += params_.occasion_period_us;
    }
    // Horizon passed: whoever is left never completed.
    while (!pending_.empty()) {
        auto it = pending_.begin();
        finish(it->first, it->second, false, horizon_us);
        pending_.erase(it);
    }
}

CbraOutcome run_cbra(const AccessAttempt& attempt, UserClass cls,
                     const CbraParams& params, RngStream& rng) {
    RachContention cell(params);
    cell.add(attempt, cls);
    cell.run_to_completion(rng);
    return cell.outcomes().at(attempt.ue_id);
}

} // namespace mcran
