#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mcran/radio_env.hpp"
#include "mcran/sim_core.hpp"

namespace mcran {

using UeId = std::uint32_t;

enum class UserClass { Mc, Commercial };

// Standardized access identity carried by MC UEs (configurable in the
// scenario file; the value is a convention, the concept is what matters).
inline constexpr int kMcAccessIdentity = 1;

enum class EstablishmentCause {
    McsPriorityAccess,
    MoData,
    MoSignalling,
    Emergency,
};

struct UeContext {
    UeId id = 0;
    UserClass user_class = UserClass::Commercial;
    std::set<int> access_identities;
    Position position;
    double power_class_dbm = 23.0;
};

EstablishmentCause classify_cause(const UeContext& ue);

struct AccessAttempt {
    UeId ue_id = 0;
    int access_category = 0;
    std::set<int> access_identities;
    EstablishmentCause establishment_cause = EstablishmentCause::MoData;
    MicroSec request_time = 0;
};

struct UacCategoryConfig {
    double barring_factor = 1.0; // probability the attempt is allowed
    int barring_time_ms = 0;
    std::set<int> exempt_identities;
};

struct UacConfig {
    std::map<int, UacCategoryConfig> categories;
};

struct UacDecision {
    bool allowed = false;
    MicroSec barred_for_us = 0;
    bool unknown_category = false; // treated as most restrictive, flagged
};

// Attempts whose identities intersect the category's exempt set are always
// allowed. Otherwise allowed iff draw < barring_factor; barred attempts wait
// (0.7 + 0.6 * duration_draw) * barring_time_ms.
UacDecision uac_check(const AccessAttempt& attempt, const UacConfig& config,
                      double draw, double duration_draw);

struct ClassRachParams {
    double power_ramp_step_db = 2.0;
    int backoff_max_ms = 80;
};

struct CbraParams {
    int preamble_pool_size = 64;
    double initial_tx_power_dbm = -10.0;
    ClassRachParams mc{4.0, 20};
    ClassRachParams commercial{2.0, 80};
    int max_attempts = 10;
    MicroSec occasion_period_us = 10'000;
    // Msg2..Msg4 exchange time after an uncontended preamble.
    MicroSec msg_exchange_delay_us = 6'000;
    // Optional Msg1 detection failure; 0 keeps contention effects isolated.
    double msg1_error_prob = 0.0;

    const ClassRachParams& for_class(UserClass c) const {
        return c == UserClass::Mc ? mc : commercial;
    }
};

struct CbraOutcome {
    bool success = false;
    int attempts = 0;
    MicroSec latency_us = 0;
    double final_power_dbm = 0.0;
    MicroSec total_backoff_us = 0;
    EstablishmentCause cause = EstablishmentCause::MoData;
};

// Four-step contention-based random access for one cell. UEs added to the
// contention pick preambles per RACH occasion; colliding UEs back off
// uniform(0, backoff_max[class]) and ramp power by the class step. MC UEs
// get the larger ramp step and the shorter backoff.
class RachContention {
public:
    explicit RachContention(CbraParams params) : params_(params) {}

    void add(const AccessAttempt& attempt, UserClass cls);

    // True when no UE is still contending.
    bool idle() const { return pending_.empty(); }

    // Next occasion boundary at or after t.
    MicroSec next_occasion(MicroSec t) const;

    // Resolves the RACH occasion at time t: preamble choice, collision
    // detection, Msg2..Msg4 for winners, backoff + power ramp for losers.
    void resolve_occasion(MicroSec t, RngStream& rng);

    // Convenience driver: iterates occasions until everyone is resolved or
    // the horizon passes (leftovers become failures).
    void run_to_completion(RngStream& rng, MicroSec horizon_us = 10'000'000);

    const std::map<UeId, CbraOutcome>& outcomes() const { return outcomes_; }

private:
    struct Pending {
        AccessAttempt attempt;
        UserClass cls;
        MicroSec ready_us;
        int attempts_used = 0;
        double power_dbm;
        MicroSec backoff_total_us = 0;
    };

    void finish(UeId ue, const Pending& p, bool success, MicroSec t);

    CbraParams params_;
    std::map<UeId, Pending> pending_;
    std::map<UeId, CbraOutcome> outcomes_;
};

// Single-UE CBRA against an otherwise empty cell.
CbraOutcome run_cbra(const AccessAttempt& attempt, UserClass cls,
                     const CbraParams& params, RngStream& rng);

} // namespace mcran
