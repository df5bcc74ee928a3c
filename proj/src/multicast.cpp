#include "mcran/multicast.hpp"

#include <algorithm>
#include <limits>

#include "mcran/errors.hpp"

namespace mcran {

MbsSession::MbsSession(MbsSessionCfg cfg, RadioConfig radio)
    : cfg_(std::move(cfg)), radio_(std::move(radio)) {}

void MbsSession::UeRx::receive(std::uint32_t sn) {
    if (sn < next_expected) {
        return; // duplicate of something already resolved
    }
    buffer.insert(sn);
    while (buffer.count(next_expected) > 0) {
        app.push_back(next_expected);
        buffer.erase(next_expected);
        next_expected += 1;
    }
}

void MbsSession::UeRx::advance_window(std::uint32_t through_sn) {
    while (next_expected <= through_sn) {
        auto it = buffer.find(next_expected);
        if (it != buffer.end()) {
            app.push_back(next_expected);
            buffer.erase(it);
        } else {
            lost += 1;
        }
        next_expected += 1;
    }
}

void MbsSession::join(const std::string& cell, UeId ue) {
    for (const auto& [c, set] : members_) {
        if (set.count(ue) > 0) {
            throw IllegalStateError("UE " + std::to_string(ue) +
                                    " is already a session member in cell " + c);
        }
    }
    members_[cell].insert(ue);
    auto [it, inserted] = rx_.emplace(ue, UeRx{});
    it->second.cell = cell;
    if (inserted) {
        // Late joiner starts from the current stream position.
        it->second.next_expected = next_sn_;
    }
}

void MbsSession::leave(UeId ue) {
    for (auto& [c, set] : members_) {
        set.erase(ue);
    }
}

bool MbsSession::cell_active(const std::string& cell) const {
    auto it = members_.find(cell);
    return it != members_.end() && !it->second.empty();
}

std::set<UeId> MbsSession::members_in(const std::string& cell) const {
    auto it = members_.find(cell);
    return it == members_.end() ? std::set<UeId>{} : it->second;
}

std::size_t MbsSession::member_count() const {
    std::size_t n = 0;
    for (const auto& [c, set] : members_) {
        n += set.size();
    }
    return n;
}

int MbsSession::mcs_for(double snr_db) const {
    return select_mcs(snr_db, cfg_.profile.packet_error_rate, radio_);
}

LegCosts MbsSession::leg_costs(const std::string& cell,
                               const std::map<UeId, double>& csi) const {
    const std::set<UeId> members = members_in(cell);
    if (members.empty()) {
        throw DomainError("leg_costs on cell with no members: " + cell);
    }
    double worst_snr = std::numeric_limits<double>::infinity();
    LegCosts costs;
    for (UeId ue : members) {
        auto it = csi.find(ue);
        if (it == csi.end()) {
            throw NotFoundError("no CSI for member UE " + std::to_string(ue));
        }
        worst_snr = std::min(worst_snr, it->second);
        costs.ptp_prbs += required_prbs(cfg_.rate_kbps, mcs_for(it->second), radio_);
    }
    costs.ptm_mcs = mcs_for(worst_snr);
    costs.ptm_prbs = required_prbs(cfg_.rate_kbps, costs.ptm_mcs, radio_);
    return costs;
}

DeliveryMode MbsSession::decide_delivery(const LegCosts& costs,
                                         DeliveryMode current,
                                         std::size_t member_count) const {
    if (member_count <= 1) {
        return DeliveryMode::Ptp;
    }
    const double keep = 1.0 - cfg_.hysteresis_pct / 100.0;
    if (current == DeliveryMode::Ptm) {
        if (static_cast<double>(costs.ptp_prbs) <
            keep * static_cast<double>(costs.ptm_prbs)) {
            return DeliveryMode::Ptp;
        }
        return DeliveryMode::Ptm;
    }
    if (static_cast<double>(costs.ptm_prbs) <
        keep * static_cast<double>(costs.ptp_prbs)) {
        return DeliveryMode::Ptm;
    }
    return DeliveryMode::Ptp;
}

DeliveryMode MbsSession::update_mode(const std::string& cell,
                                     const std::map<UeId, double>& csi) {
    const std::set<UeId> members = members_in(cell);
    CellMrb& mrb = mrbs_[cell];
    const LegCosts costs = leg_costs(cell, csi);
    if (!mrb.mode) {
        // Initial MRB setup; not a switch.
        mrb.mode = members.size() <= 1 ? DeliveryMode::Ptp
                                       : decide_delivery(costs, DeliveryMode::Ptm,
                                                         members.size());
        return *mrb.mode;
    }
    const DeliveryMode next = decide_delivery(costs, *mrb.mode, members.size());
    if (next != *mrb.mode) {
        mrb.switches += 1;
        mrb.mode = next;
    }
    return *mrb.mode;
}

DeliveryMode MbsSession::mode(const std::string& cell) const {
    auto it = mrbs_.find(cell);
    if (it == mrbs_.end() || !it->second.mode) {
        throw IllegalStateError("no MRB mode set for cell " + cell);
    }
    return *it->second.mode;
}

int MbsSession::mode_switches(const std::string& cell) const {
    auto it = mrbs_.find(cell);
    return it == mrbs_.end() ? 0 : it->second.switches;
}

MbsSession::UeRx& MbsSession::rx(UeId ue) {
    auto it = rx_.find(ue);
    if (it == rx_.end()) {
        throw NotFoundError("unknown session UE " + std::to_string(ue));
    }
    return it->second;
}

const MbsSession::UeRx& MbsSession::rx(UeId ue) const {
    auto it = rx_.find(ue);
    if (it == rx_.end()) {
        throw NotFoundError("unknown session UE " + std::to_string(ue));
    }
    return it->second;
}

MbsTxReport MbsSession::transmit_and_harq(const std::string& cell,
                                          std::uint32_t sn,
                                          const std::map<UeId, double>& csi,
                                          RngStream& rng) {
    MbsTxReport report;
    report.sn = sn;

    std::vector<UeId> receivers;
    for (UeId ue : members_in(cell)) {
        if (!rx(ue).detached) {
            receivers.push_back(ue);
        }
    }
    if (receivers.empty()) {
        return report;
    }

    const DeliveryMode cell_mode =
        cfg_.as_forced_unicast ? DeliveryMode::Ptp : mode(cell);

    auto snr_of = [&](UeId ue) {
        auto it = csi.find(ue);
        if (it == csi.end()) {
            throw NotFoundError("no CSI for member UE " + std::to_string(ue));
        }
        return it->second;
    };

    // One attempt towards every listed UE; PTM pays one group transmission
    // at the worst receiver's MCS, PTP pays per UE.
    auto attempt = [&](const std::vector<UeId>& targets, DeliveryMode leg,
                       std::vector<UeId>& nacks) {
        int mcs_group = 0;
        if (leg == DeliveryMode::Ptm) {
            double worst = std::numeric_limits<double>::infinity();
            for (UeId ue : targets) {
                worst = std::min(worst, snr_of(ue));
            }
            mcs_group = mcs_for(worst);
            report.prbs_used += required_prbs(cfg_.rate_kbps, mcs_group, radio_);
        }
        for (UeId ue : targets) {
            const bool forced_ptp = rx(ue).unicast_fallback;
            const int mcs = (leg == DeliveryMode::Ptm && !forced_ptp)
                                ? mcs_group
                                : mcs_for(snr_of(ue));
            if (leg == DeliveryMode::Ptp || forced_ptp) {
                report.prbs_used += required_prbs(cfg_.rate_kbps, mcs, radio_);
            }
            const double per = packet_error_prob(snr_of(ue), mcs, radio_);
            if (rng.uniform() >= per) {
                rx(ue).receive(report.sn);
                report.delivered.insert(ue);
            } else {
                nacks.push_back(ue); // NACK-based feedback
            }
        }
    };

    std::vector<UeId> nacks;
    attempt(receivers, cell_mode, nacks);

    while (!nacks.empty() && report.harq_rounds < cfg_.max_harq) {
        report.harq_rounds += 1;
        std::vector<UeId> next_nacks;
        const bool use_ptm =
            !cfg_.as_forced_unicast &&
            static_cast<int>(nacks.size()) >= cfg_.nack_ptm_threshold;
        if (use_ptm) {
            report.ptm_retx += 1;
        } else {
            report.ptp_retx += static_cast<int>(nacks.size());
        }
        attempt(nacks, use_ptm ? DeliveryMode::Ptm : DeliveryMode::Ptp,
                next_nacks);
        nacks = std::move(next_nacks);
    }

    // HARQ gave up on these; the receive window moves past the hole.
    for (UeId ue : nacks) {
        rx(ue).advance_window(report.sn);
    }

    prbs_used_total_ += static_cast<std::uint64_t>(report.prbs_used);
    return report;
}

void MbsSession::begin_handover(UeId ue) { rx(ue).detached = true; }

MbsHandoverReport MbsSession::complete_handover(UeId ue,
                                                const std::string& source,
                                                const std::string& target,
                                                bool target_supports_mbs) {
    MbsHandoverReport report;
    auto src_it = members_.find(source);
    if (src_it == members_.end() || src_it->second.count(ue) == 0) {
        throw IllegalStateError("UE " + std::to_string(ue) +
                                " is not a session member in cell " + source);
    }
    UeRx& state = rx(ue);

    // UE context transfer; the target connects with the session unless it
    // already runs it (or cannot, in which case delivery falls back to
    // dedicated unicast at the target).
    src_it->second.erase(ue);
    if (target_supports_mbs) {
        report.target_joined_session = !cell_active(target);
    } else {
        report.fell_back_to_unicast = true;
        state.unicast_fallback = true;
    }
    members_[target].insert(ue);
    state.cell = target;
    state.detached = false;

    // PDCP status transfer: packets the UE missed during the gap are
    // retransmitted by the target, unless retransmission is ablated.
    const std::uint64_t lost_before = state.lost;
    if (next_sn_ > 0) {
        const std::uint32_t through = next_sn_ - 1;
        if (cfg_.pdcp_retx_enabled) {
            for (std::uint32_t sn = state.next_expected; sn <= through; ++sn) {
                if (state.buffer.count(sn) == 0) {
                    report.sdus_retransmitted += 1;
                }
                state.receive(sn);
            }
        } else {
            state.advance_window(through);
        }
    }
    report.sdus_lost = state.lost - lost_before;
    return report;
}

const std::vector<std::uint32_t>& MbsSession::app_delivered(UeId ue) const {
    return rx(ue).app;
}

std::uint64_t MbsSession::sdus_lost(UeId ue) const { return rx(ue).lost; }

std::uint64_t MbsSession::total_sdus_lost() const {
    std::uint64_t n = 0;
    for (const auto& [ue, state] : rx_) {
        n += state.lost;
    }
    return n;
}

} // namespace mcran
