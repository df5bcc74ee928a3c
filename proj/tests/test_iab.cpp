#include <doctest.h>

#include "mcran/errors.hpp"
#include "mcran/iab.hpp"
#include "mcran/rng.hpp"

using namespace mcran;

namespace {

IabTopology donor_with_children() {
    IabTopology topo;
    IabNode donor;
    donor.node_id = "donor";
    donor.role = IabRole::Donor;
    topo.add_node(donor);
    for (const char* id : {"a", "b"}) {
        IabNode child;
        child.node_id = id;
        child.role = IabRole::Child;
        topo.add_node(child);
        topo.link(id, "donor", 30, 2000);
    }
    return topo;
}

} // namespace

TEST_CASE("immediate integration walks Idle to Serving") {
    IabTopology topo = donor_with_children();
    RngStream rng(1, "iab");
    const IntegrationTiming timing = topo.integrate("a", "donor", false, 0, rng);
    REQUIRE(timing.rrc_connected_us.has_value());
    REQUIRE(timing.serving_us.has_value());
    CHECK(*timing.serving_us == *timing.rrc_connected_us + topo.f1_setup_delay_us);

    const IabNode& a = topo.node("a");
    CHECK(a.mt_state == MtState::RrcConnected);
    CHECK(a.du_state == DuState::Serving);
    // Trace: Idle->RrcConnected (DU Inactive), then F1Setup, then Serving.
    REQUIRE(a.trace.size() == 3);
    CHECK(a.trace[0].du == DuState::Inactive);
    CHECK(a.trace[0].mt == MtState::RrcConnected);
    CHECK(a.trace[1].du == DuState::F1Setup);
    CHECK(a.trace[2].du == DuState::Serving);
}

TEST_CASE("deferred integration holds the DU inactive until complete_f1") {
    IabTopology topo = donor_with_children();
    RngStream rng(2, "iab");
    const IntegrationTiming timing = topo.integrate("a", "donor", true, 0, rng);
    REQUIRE(timing.rrc_connected_us.has_value());
    CHECK_FALSE(timing.serving_us.has_value());
    CHECK(topo.node("a").du_state == DuState::Inactive);

    // Zero downlink transmissions while the F1 setup is on hold.
    for (MicroSec t = 0; t < 50'000; t += 5000) {
        CHECK_FALSE(topo.du_transmit("a", t));
    }
    CHECK(topo.node("a").dl_transmissions == 0);
    CHECK(topo.node("a").suppressed_transmissions == 10);

    const MicroSec serving = topo.complete_f1("a", 100'000);
    CHECK(serving == 100'000 + topo.f1_setup_delay_us);
    CHECK(topo.node("a").du_state == DuState::Serving);
    CHECK(topo.du_transmit("a", serving));
    CHECK(topo.node("a").dl_transmissions == 1);
}

TEST_CASE("complete_f1 preconditions") {
    IabTopology topo = donor_with_children();
    RngStream rng(3, "iab");
    // MT still idle.
    CHECK_THROWS_AS(topo.complete_f1("a", 0), IllegalStateError);
    topo.integrate("a", "donor", false, 0, rng);
    // Already serving.
    CHECK_THROWS_AS(topo.complete_f1("a", 10), IllegalStateError);
}

TEST_CASE("integrate preconditions") {
    IabTopology topo = donor_with_children();
    RngStream rng(4, "iab");
    CHECK_THROWS_AS(topo.integrate("donor", "donor", false, 0, rng),
                    IllegalStateError);
    topo.integrate("a", "donor", true, 0, rng);
    CHECK_THROWS_AS(topo.integrate("a", "donor", true, 10, rng),
                    IllegalStateError);
    CHECK_THROWS_AS(topo.integrate("b", "a", false, 0, rng), IllegalStateError);
}

TEST_CASE("coordinated duplication loses nothing") {
    IabTopology topo = donor_with_children();
    RngStream rng(5, "iab");
    topo.integrate("a", "donor", false, 0, rng);
    topo.integrate("b", "donor", false, 0, rng);
    ReplacementTraffic traffic;
    traffic.ue_count = 20;
    const ReplacementReport report = topo.replace(
        "a", "b", ReplacementMode::CoordinatedDuplication, traffic, 1'000'000);
    CHECK(report.sdus_lost == 0);
    CHECK(report.interruption_us == 0);
    CHECK(report.handovers == 20);
    CHECK(topo.node("a").du_state == DuState::Inactive);
}

TEST_CASE("plain handover loss matches the queue replay exactly") {
    IabTopology topo = donor_with_children();
    RngStream rng(6, "iab");
    topo.integrate("a", "donor", false, 0, rng);
    topo.integrate("b", "donor", false, 0, rng);
    ReplacementTraffic traffic;
    traffic.ue_count = 20;
    traffic.arrival_period_us = 5000;
    traffic.handover_gap_us = 30'000;
    const ReplacementReport report = topo.replace(
        "a", "b", ReplacementMode::PlainHandover, traffic, 1'000'000);
    CHECK(report.sdus_lost > 0);
    CHECK(report.interruption_us == 20 * 30'000);

    // Replay the recorded arrival log against the recorded gaps.
    std::uint64_t replayed = 0;
    for (const auto& sdu : report.arrivals) {
        for (const auto& gap : report.gaps) {
            if (sdu.ue == gap.ue && sdu.t >= gap.start && sdu.t < gap.end) {
                replayed += 1;
            }
        }
    }
    CHECK(report.sdus_lost == replayed);
    // Deterministic periodic arrivals: each 30 ms gap swallows 6 packets.
    CHECK(report.sdus_lost == 20 * 6);
}

TEST_CASE("replacement across different parents is unsupported") {
    IabTopology topo;
    IabNode d1, d2;
    d1.node_id = "d1";
    d1.role = IabRole::Donor;
    d2.node_id = "d2";
    d2.role = IabRole::Donor;
    topo.add_node(d1);
    topo.add_node(d2);
    IabNode a, b;
    a.node_id = "a";
    b.node_id = "b";
    topo.add_node(a);
    topo.add_node(b);
    topo.link("a", "d1", 30, 2000);
    topo.link("b", "d2", 30, 2000);
    RngStream rng(7, "iab");
    topo.integrate("a", "d1", false, 0, rng);
    topo.integrate("b", "d2", false, 0, rng);
    ReplacementTraffic traffic;
    traffic.ue_count = 5;
    CHECK_THROWS_AS(topo.replace("a", "b", ReplacementMode::CoordinatedDuplication,
                                 traffic, 0),
                    UnsupportedError);
}

TEST_CASE("replacement node must be serving") {
    IabTopology topo = donor_with_children();
    RngStream rng(8, "iab");
    topo.integrate("a", "donor", false, 0, rng);
    ReplacementTraffic traffic;
    traffic.ue_count = 1;
    CHECK_THROWS_AS(topo.replace("a", "b", ReplacementMode::PlainHandover,
                                 traffic, 0),
                    IllegalStateError);
}

TEST_CASE("path metrics add per hop and take the bottleneck") {
    IabTopology topo;
    IabNode donor;
    donor.node_id = "donor";
    donor.role = IabRole::Donor;
    topo.add_node(donor);
    IabNode a, b;
    a.node_id = "a";
    b.node_id = "b";
    topo.add_node(a);
    topo.add_node(b);
    topo.link("a", "donor", 50, 2000);
    topo.link("b", "a", 10, 3000);
    RngStream rng(9, "iab");
    topo.integrate("a", "donor", false, 0, rng);
    topo.integrate("b", "donor", false, 0, rng);

    const PathMetrics pa = topo.path_metrics("a");
    CHECK(pa.hops == 1);
    CHECK(pa.latency_us == 2000);
    CHECK(pa.bottleneck_prbs == 50);

    const PathMetrics pb = topo.path_metrics("b");
    CHECK(pb.hops == 2);
    CHECK(pb.latency_us == 5000);
    CHECK(pb.bottleneck_prbs == 10);
}

TEST_CASE("orphaned serving node raises a topology error") {
    IabTopology topo;
    IabNode donor;
    donor.node_id = "donor";
    donor.role = IabRole::Donor;
    topo.add_node(donor);
    CHECK(topo.path_metrics("donor").hops == 0);
    IabNode lost;
    lost.node_id = "lost";
    topo.add_node(lost);
    CHECK_THROWS_AS(topo.path_metrics("lost"), IllegalStateError);
}

TEST_CASE("cycles are rejected and the forest invariant holds") {
    IabTopology topo;
    IabNode donor;
    donor.node_id = "donor";
    donor.role = IabRole::Donor;
    topo.add_node(donor);
    IabNode a, b;
    a.node_id = "a";
    b.node_id = "b";
    topo.add_node(a);
    topo.add_node(b);
    topo.link("a", "donor", 30, 1000);
    topo.link("b", "a", 30, 1000);
    CHECK(topo.is_donor_rooted_forest());
    CHECK_THROWS_AS(topo.link("a", "b", 30, 1000), TopologyError);
    CHECK_THROWS_AS(topo.link("donor", "a", 30, 1000), TopologyError);
    CHECK(topo.is_donor_rooted_forest());
}

TEST_CASE("battery runtime and deactivation") {
    IabTopology topo = donor_with_children();
    topo.node("a").battery_j = 100.0;
    topo.node("a").drain_w = 10.0;
    REQUIRE(topo.battery_runtime_us("a").has_value());
    CHECK(*topo.battery_runtime_us("a") == 10'000'000);
    CHECK_FALSE(topo.battery_runtime_us("b").has_value());

    RngStream rng(10, "iab");
    topo.integrate("a", "donor", false, 0, rng);
    topo.deactivate("a", 500);
    CHECK(topo.node("a").du_state == DuState::Inactive);
    CHECK_FALSE(topo.du_transmit("a", 600));
}
