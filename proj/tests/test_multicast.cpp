#include <doctest.h>

#include <algorithm>

#include "mcran/errors.hpp"
#include "mcran/multicast.hpp"
#include "mcran/rng.hpp"

using namespace mcran;

namespace {

MbsSessionCfg video_cfg(int rate_kbps = 1000) {
    MbsSessionCfg cfg;
    cfg.session_id = "s";
    cfg.profile = lookup(67); // MCVideo
    cfg.rate_kbps = rate_kbps;
    return cfg;
}

// SNR high enough that every MCS meets the video PER target.
constexpr double kCleanSnr = 60.0;
// SNR so poor that delivery is effectively impossible.
constexpr double kDeadSnr = -60.0;

} // namespace

TEST_CASE("single member: PTM and PTP legs cost the same") {
    MbsSession session(video_cfg());
    session.join("c", 1);
    const LegCosts costs = session.leg_costs("c", {{1, 25.0}});
    CHECK(costs.ptm_prbs == costs.ptp_prbs);
}

TEST_CASE("twenty equal-SNR members: PTP costs twenty times PTM") {
    MbsSession session(video_cfg());
    std::map<UeId, double> csi;
    for (UeId ue = 1; ue <= 20; ++ue) {
        session.join("c", ue);
        csi[ue] = 30.0;
    }
    const LegCosts costs = session.leg_costs("c", csi);
    CHECK(costs.ptp_prbs == 20 * costs.ptm_prbs);
}

TEST_CASE("one far member inflates the PTM cost to its MCS") {
    RadioConfig radio;
    MbsSession session(video_cfg());
    std::map<UeId, double> csi;
    for (UeId ue = 1; ue <= 9; ++ue) {
        session.join("c", ue);
        csi[ue] = 40.0;
    }
    session.join("c", 10);
    csi[10] = 7.0; // forces a low MCS for the group transmission
    const LegCosts costs = session.leg_costs("c", csi);
    const int worst_mcs =
        select_mcs(7.0, video_cfg().profile.packet_error_rate, radio);
    CHECK(costs.ptm_mcs == worst_mcs);
    CHECK(costs.ptm_prbs == required_prbs(1000, worst_mcs, radio));
    CHECK(costs.ptm_prbs > required_prbs(1000, select_mcs(40.0, 1e-3, radio), radio));
}

TEST_CASE("hysteresis keeps the current mode inside the band") {
    MbsSession session(video_cfg());
    LegCosts costs;
    costs.ptm_prbs = 10;
    costs.ptp_prbs = 9; // 10% cheaper, inside the 20% band
    CHECK(session.decide_delivery(costs, DeliveryMode::Ptm, 5) ==
          DeliveryMode::Ptm);
    costs.ptm_prbs = 5;
    costs.ptp_prbs = 10; // PTM 50% cheaper than PTP
    CHECK(session.decide_delivery(costs, DeliveryMode::Ptp, 5) ==
          DeliveryMode::Ptm);
    // Ties keep the mode.
    costs.ptm_prbs = 10;
    costs.ptp_prbs = 10;
    CHECK(session.decide_delivery(costs, DeliveryMode::Ptp, 5) ==
          DeliveryMode::Ptp);
    CHECK(session.decide_delivery(costs, DeliveryMode::Ptm, 5) ==
          DeliveryMode::Ptm);
}

TEST_CASE("single-member sessions always use PTP") {
    MbsSession session(video_cfg());
    LegCosts costs;
    costs.ptm_prbs = 1;
    costs.ptp_prbs = 100;
    CHECK(session.decide_delivery(costs, DeliveryMode::Ptm, 1) ==
          DeliveryMode::Ptp);
}

TEST_CASE("all-ack transmission needs no retransmission") {
    MbsSession session(video_cfg());
    std::map<UeId, double> csi;
    for (UeId ue = 1; ue <= 10; ++ue) {
        session.join("c", ue);
        csi[ue] = kCleanSnr;
    }
    session.update_mode("c", csi);
    RngStream rng(1, "mbs");
    const MbsTxReport report = session.transmit_and_harq("c", csi, rng);
    CHECK(report.delivered.size() == 10);
    CHECK(report.harq_rounds == 0);
    CHECK(report.ptm_retx == 0);
    CHECK(report.ptp_retx == 0);
}

TEST_CASE("one NACK of ten retransmits on PTP") {
    MbsSession session(video_cfg());
    std::map<UeId, double> csi;
    for (UeId ue = 1; ue <= 10; ++ue) {
        session.join("c", ue);
        csi[ue] = ue == 10 ? kDeadSnr : kCleanSnr;
    }
    session.update_mode("c", csi);
    RngStream rng(2, "mbs");
    const MbsTxReport report = session.transmit_and_harq("c", csi, rng);
    CHECK(report.delivered.size() == 9);
    CHECK(report.ptm_retx == 0);
    CHECK(report.ptp_retx == 3); // one NACKer retried every HARQ round
}

TEST_CASE("five NACKs of ten: one PTM retransmission beats five PTPs") {
    MbsSessionCfg cfg = video_cfg();
    MbsSession session(cfg);
    std::map<UeId, double> csi;
    for (UeId ue = 1; ue <= 10; ++ue) {
        session.join("c", ue);
        csi[ue] = ue > 5 ? kDeadSnr : kCleanSnr;
    }
    session.update_mode("c", csi);
    RngStream rng(3, "mbs");
    const MbsTxReport report = session.transmit_and_harq("c", csi, rng);
    CHECK(report.ptm_retx == cfg.max_harq); // 5 NACKs >= k every round
    CHECK(report.ptp_retx == 0);

    // Cost comparison at the leg level: a PTM retransmission to the five
    // NACKers costs less than five per-UE PTPs at the same MCS.
    RadioConfig radio;
    const int mcs = select_mcs(kDeadSnr, cfg.profile.packet_error_rate, radio);
    const int ptm_cost = required_prbs(cfg.rate_kbps, mcs, radio);
    const int ptp_cost = 5 * required_prbs(cfg.rate_kbps, mcs, radio);
    CHECK(ptm_cost < ptp_cost);
}

TEST_CASE("mode updates count switches and respect hysteresis noise") {
    MbsSession session(video_cfg());
    std::map<UeId, double> csi;
    for (UeId ue = 1; ue <= 8; ++ue) {
        session.join("c", ue);
        csi[ue] = 30.0;
    }
    session.update_mode("c", csi);
    CHECK(session.mode("c") == DeliveryMode::Ptm);
    RngStream rng(4, "mbs-noise");
    for (int i = 0; i < 100; ++i) {
        std::map<UeId, double> noisy;
        for (const auto& [ue, snr] : csi) {
            noisy[ue] = snr + rng.uniform(-0.5, 0.5);
        }
        session.update_mode("c", noisy);
    }
    CHECK(session.mode_switches("c") <= 1);
    CHECK(session.mode("c") == DeliveryMode::Ptm);
}

TEST_CASE("handover to a cell already in the session") {
    MbsSession session(video_cfg());
    std::map<UeId, double> csi_a{{1, kCleanSnr}, {2, kCleanSnr}};
    std::map<UeId, double> csi_b{{3, kCleanSnr}};
    session.join("a", 1);
    session.join("a", 2);
    session.join("b", 3);
    const MbsHandoverReport report = session.complete_handover(1, "a", "b", true);
    CHECK_FALSE(report.target_joined_session);
    CHECK(report.sdus_lost == 0);
    CHECK(session.members_in("b").count(1) == 1);
}

TEST_CASE("handover prepares a supporting target that lacks the session") {
    MbsSession session(video_cfg());
    session.join("a", 1);
    session.join("a", 2);
    const MbsHandoverReport report = session.complete_handover(1, "a", "b", true);
    CHECK(report.target_joined_session);
    CHECK(report.sdus_lost == 0);
}

TEST_CASE("PDCP status transfer retransmits the gap losslessly") {
    MbsSession session(video_cfg());
    std::map<UeId, double> csi{{1, kCleanSnr}, {2, kCleanSnr}};
    session.join("a", 1);
    session.join("a", 2);
    session.update_mode("a", csi);
    RngStream rng(5, "mbs-ho");

    for (int i = 0; i < 5; ++i) {
        session.transmit_and_harq("a", csi, rng);
    }
    session.begin_handover(1);
    for (int i = 0; i < 7; ++i) {
        session.transmit_and_harq("a", csi, rng);
    }
    const MbsHandoverReport report = session.complete_handover(1, "a", "b", true);
    CHECK(report.sdus_retransmitted == 7);
    CHECK(report.sdus_lost == 0);
    CHECK(session.sdus_lost(1) == 0);
    // Application delivery is the full gap-free prefix.
    const auto& app = session.app_delivered(1);
    REQUIRE(app.size() == 12);
    for (std::uint32_t i = 0; i < app.size(); ++i) {
        CHECK(app[i] == i);
    }
}

TEST_CASE("ablated retransmission loses exactly the gap packets") {
    MbsSessionCfg cfg = video_cfg();
    cfg.pdcp_retx_enabled = false;
    MbsSession session(cfg);
    std::map<UeId, double> csi{{1, kCleanSnr}, {2, kCleanSnr}};
    session.join("a", 1);
    session.join("a", 2);
    session.update_mode("a", csi);
    RngStream rng(6, "mbs-ho");
    for (int i = 0; i < 5; ++i) {
        session.transmit_and_harq("a", csi, rng);
    }
    session.begin_handover(1);
    for (int i = 0; i < 7; ++i) {
        session.transmit_and_harq("a", csi, rng);
    }
    const MbsHandoverReport report = session.complete_handover(1, "a", "b", true);
    CHECK(report.sdus_lost == 7);
    CHECK(session.sdus_lost(1) == 7);
}

TEST_CASE("target without 5MBS support falls back to unicast") {
    MbsSession session(video_cfg());
    std::map<UeId, double> csi{{1, kCleanSnr}, {2, kCleanSnr}};
    session.join("a", 1);
    session.join("a", 2);
    session.update_mode("a", csi);
    const MbsHandoverReport report =
        session.complete_handover(1, "a", "b", false);
    CHECK(report.fell_back_to_unicast);
    CHECK(report.sdus_lost == 0);
    // Delivery still works at the target via the dedicated PTP path.
    RngStream rng(7, "mbs-fb");
    session.update_mode("b", {{1, kCleanSnr}});
    const MbsTxReport tx = session.transmit_and_harq("b", {{1, kCleanSnr}}, rng);
    CHECK(tx.delivered.count(1) == 1);
}

TEST_CASE("application delivery is an in-order gap-free prefix under HARQ") {
    MbsSessionCfg cfg = video_cfg();
    cfg.max_harq = 6;
    MbsSession session(cfg);
    // Moderate loss; HARQ with six rounds makes residual loss ~1e-5 per SDU.
    std::map<UeId, double> csi;
    for (UeId ue = 1; ue <= 4; ++ue) {
        session.join("c", ue);
        csi[ue] = 13.0;
    }
    session.update_mode("c", csi);
    RngStream rng(8, "mbs-order");
    for (int i = 0; i < 200; ++i) {
        session.transmit_and_harq("c", csi, rng);
    }
    for (UeId ue = 1; ue <= 4; ++ue) {
        const auto& app = session.app_delivered(ue);
        // Strictly increasing (prefix-preserving subsequence of the stream).
        CHECK(std::is_sorted(app.begin(), app.end()));
        CHECK(std::adjacent_find(app.begin(), app.end()) == app.end());
        // Gap-free when every HARQ succeeded for this UE.
        if (session.sdus_lost(ue) == 0) {
            REQUIRE(app.size() == 200);
            CHECK(app.front() == 0);
            CHECK(app.back() == 199);
        }
    }
}

TEST_CASE("a UE joins at most one cell at a time") {
    MbsSession session(video_cfg());
    session.join("a", 1);
    CHECK_THROWS_AS(session.join("b", 1), IllegalStateError);
}

TEST_CASE("AS-forced unicast bypasses the PTM leg entirely") {
    MbsSessionCfg cfg = video_cfg();
    cfg.as_forced_unicast = true;
    MbsSession session(cfg);
    std::map<UeId, double> csi;
    for (UeId ue = 1; ue <= 5; ++ue) {
        session.join("c", ue);
        csi[ue] = kCleanSnr;
    }
    RngStream rng(9, "mbs-as");
    const MbsTxReport report = session.transmit_and_harq("c", csi, rng);
    CHECK(report.delivered.size() == 5);
    // Five per-UE transmissions, no group transmission cost.
    RadioConfig radio;
    const int per_ue =
        required_prbs(cfg.rate_kbps,
                      select_mcs(kCleanSnr, cfg.profile.packet_error_rate, radio),
                      radio);
    CHECK(report.prbs_used == 5 * per_ue);
}
