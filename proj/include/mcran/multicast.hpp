#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mcran/access_control.hpp"
#include "mcran/qos.hpp"
#include "mcran/radio_env.hpp"

namespace mcran {

enum class DeliveryMode { Ptm, Ptp };

struct LegCosts {
    int ptm_prbs = 0;
    int ptp_prbs = 0;
    int ptm_mcs = 0;
};

struct MbsSessionCfg {
    std::string session_id;
    QosProfile profile; // packet_error_rate drives leg MCS selection
    int rate_kbps = 0;
    double hysteresis_pct = 20.0;
    int nack_ptm_threshold = 2; // >= this many NACKs: retransmit on PTM
    int max_harq = 3;
    bool pdcp_retx_enabled = true;
    bool as_forced_unicast = false; // AS-side exceptional IP unicast path
};

struct MbsTxReport {
    std::uint32_t sn = 0;
    std::set<UeId> delivered;
    int harq_rounds = 0;
    int prbs_used = 0;
    int ptm_retx = 0;
    int ptp_retx = 0;
};

struct MbsHandoverReport {
    bool target_joined_session = false;
    bool fell_back_to_unicast = false;
    std::uint64_t sdus_retransmitted = 0;
    std::uint64_t sdus_lost = 0;
};

// One multicast session and its per-cell MRB state: delivery mode with
// hysteresis, per-UE PDCP receive state, HARQ with PTM-or-PTP
// retransmission, and lossless handover via PDCP status transfer.
class MbsSession {
public:
    explicit MbsSession(MbsSessionCfg cfg, RadioConfig radio = {});

    const MbsSessionCfg& cfg() const { return cfg_; }

    // A UE is a member of at most one cell at a time; moving cells goes
    // through begin_handover/complete_handover.
    void join(const std::string& cell, UeId ue);
    void leave(UeId ue);

    bool cell_active(const std::string& cell) const;
    std::set<UeId> members_in(const std::string& cell) const;
    std::size_t member_count() const;

    // PTM serves the whole group at the worst member's MCS; PTP serves each
    // member at its own MCS. csi maps member UE -> SNR dB.
    LegCosts leg_costs(const std::string& cell,
                       const std::map<UeId, double>& csi) const;

    // Mode switch only when the other leg is cheaper by more than the
    // hysteresis margin; single-member cells always use PTP.
    DeliveryMode decide_delivery(const LegCosts& costs, DeliveryMode current,
                                 std::size_t member_count) const;

    // Applies decide_delivery to the cell's MRB and counts actual switches.
    DeliveryMode update_mode(const std::string& cell,
                             const std::map<UeId, double>& csi);
    DeliveryMode mode(const std::string& cell) const;
    int mode_switches(const std::string& cell) const;

    // Allocates the next PDCP SN of the session stream. The same SDU is
    // transmitted in every cell that carries the session.
    std::uint32_t next_sdu() { return next_sn_++; }

    // Transmits one SDU in this cell and runs HARQ: initial transmission on
    // each member's leg, then retransmissions on PTM when NACKs are
    // plentiful, per-UE PTP otherwise.
    MbsTxReport transmit_and_harq(const std::string& cell, std::uint32_t sn,
                                  const std::map<UeId, double>& csi,
                                  RngStream& rng);

    // Single-cell convenience: allocates and transmits the next SDU.
    MbsTxReport transmit_and_harq(const std::string& cell,
                                  const std::map<UeId, double>& csi,
                                  RngStream& rng) {
        return transmit_and_harq(cell, next_sdu(), csi, rng);
    }

    void begin_handover(UeId ue);
    MbsHandoverReport complete_handover(UeId ue, const std::string& source,
                                        const std::string& target,
                                        bool target_supports_mbs);

    // In-order SDU sequence delivered to the UE's application layer.
    const std::vector<std::uint32_t>& app_delivered(UeId ue) const;
    std::uint64_t sdus_lost(UeId ue) const;
    std::uint64_t total_sdus_lost() const;
    std::uint64_t prbs_used_total() const { return prbs_used_total_; }
    std::uint32_t next_sn() const { return next_sn_; }

private:
    struct UeRx {
        std::string cell;
        bool detached = false;
        bool unicast_fallback = false;
        std::uint32_t next_expected = 0;
        std::set<std::uint32_t> buffer;
        std::vector<std::uint32_t> app;
        std::uint64_t lost = 0;

        void receive(std::uint32_t sn);
        void advance_window(std::uint32_t through_sn); // marks gaps as lost
    };

    struct CellMrb {
        std::optional<DeliveryMode> mode;
        int switches = 0;
    };

    int mcs_for(double snr_db) const;
    UeRx& rx(UeId ue);
    const UeRx& rx(UeId ue) const;

    MbsSessionCfg cfg_;
    RadioConfig radio_;
    std::uint32_t next_sn_ = 0;
    std::uint64_t prbs_used_total_ = 0;
    std::map<std::string, std::set<UeId>> members_;
    std::map<std::string, CellMrb> mrbs_;
    std::map<UeId, UeRx> rx_;
};

} // namespace mcran
