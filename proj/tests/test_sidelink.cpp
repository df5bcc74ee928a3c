#include <doctest.h>

#include <cmath>

#include "mcran/errors.hpp"
#include "mcran/sidelink.hpp"

using namespace mcran;

namespace {

SlPool pool_20x4() {
    SlPool pool;
    pool.slots_per_window = 20;
    pool.subchannels = 4;
    return pool;
}

} // namespace

TEST_CASE("empty sensed set yields the whole pool") {
    const SlPool pool = pool_20x4();
    const CandidateResult r = candidate_resources(pool, {}, -90.0);
    CHECK(r.candidates.size() == 80);
    CHECK(r.threshold_raises == 0);
}

TEST_CASE("threshold raises until a fifth of the pool is free") {
    const SlPool pool = pool_20x4();
    // Every resource reserved at -80 dBm, sensed against a -90 threshold.
    std::vector<SlReservation> sensed;
    for (int slot = 0; slot < pool.slots_per_window; ++slot) {
        for (int sub = 0; sub < pool.subchannels; ++sub) {
            sensed.push_back({{slot, sub}, 99, 4, -80.0});
        }
    }
    const CandidateResult r = candidate_resources(pool, sensed, -90.0);
    // Fixed point computed by hand-iterating the rule: -90 -> -87 -> -84
    // -> -81 -> -78; at -78 no reservation reaches the threshold.
    int expected_raises = 0;
    double threshold = -90.0;
    while (-80.0 >= threshold) {
        threshold += 3.0;
        expected_raises += 1;
    }
    CHECK(r.threshold_raises == expected_raises);
    CHECK(r.final_threshold_dbm == doctest::Approx(-78.0));
    CHECK(r.candidates.size() == 80);
    CHECK(static_cast<double>(r.candidates.size()) >= 0.2 * 80);
}

TEST_CASE("reservations below the threshold stay in the candidate set") {
    const SlPool pool = pool_20x4();
    std::vector<SlReservation> sensed{{{0, 0}, 5, 3, -95.0},
                                      {{0, 1}, 6, 3, -85.0}};
    const CandidateResult r = candidate_resources(pool, sensed, -90.0);
    CHECK(r.candidates.size() == 79); // only the -85 dBm one is excluded
    bool has_weak = false;
    for (const SlResource& res : r.candidates) {
        if (res == SlResource{0, 0}) {
            has_weak = true;
        }
    }
    CHECK(has_weak);
}

TEST_CASE("selection is uniform over the candidates") {
    SlPool pool = pool_20x4();
    CandidateResult cand;
    const int n = 8;
    for (int i = 0; i < n; ++i) {
        cand.candidates.push_back({i, 0});
    }
    RngStream rng(19, "sl-uniform");
    std::vector<int> counts(n, 0);
    const int draws = 10'000;
    for (int i = 0; i < draws; ++i) {
        SlPool scratch = pool;
        const SlReservation r = select_and_reserve(scratch, 1, cand, 3, rng);
        counts[static_cast<std::size_t>(r.resource.slot)] += 1;
    }
    const double p = 1.0 / n;
    const double sigma = std::sqrt(draws * p * (1.0 - p));
    for (int c : counts) {
        CHECK(std::abs(c - draws * p) < 3.0 * sigma);
    }
}

TEST_CASE("single candidate is always chosen and recorded") {
    SlPool pool = pool_20x4();
    CandidateResult cand;
    cand.candidates.push_back({7, 2});
    RngStream rng(20, "sl");
    const SlReservation r = select_and_reserve(pool, 42, cand, 2, rng);
    CHECK(r.resource == SlResource{7, 2});
    CHECK(r.owner == 42);
    REQUIRE(pool.reservations.size() == 1);
    CHECK(pool.reservations[0].resource == SlResource{7, 2});
}

TEST_CASE("empty candidates violate the contract") {
    SlPool pool = pool_20x4();
    RngStream rng(21, "sl");
    CHECK_THROWS_AS(select_and_reserve(pool, 1, CandidateResult{}, 2, rng),
                    DomainError);
}

TEST_CASE("priority preemption on a contested resource") {
    const SlReservation holder{{3, 1}, 9, 7, -80.0};
    CHECK(preempt(holder, 1) == SlPreemption::Preempted);
    CHECK(preempt(SlReservation{{3, 1}, 9, 1, -80.0}, 7) == SlPreemption::Kept);
    CHECK(preempt(SlReservation{{3, 1}, 9, 4, -80.0}, 4) == SlPreemption::Kept);
}

TEST_CASE("preemption never worsens the winning priority on a resource") {
    RngStream rng(22, "sl-prop");
    for (int i = 0; i < 1000; ++i) {
        const int holder_prio = 1 + static_cast<int>(rng.uniform_int(8));
        const int challenger_prio = 1 + static_cast<int>(rng.uniform_int(8));
        const SlReservation holder{{0, 0}, 1, holder_prio, -80.0};
        const int winner =
            preempt(holder, challenger_prio) == SlPreemption::Preempted
                ? challenger_prio
                : holder_prio;
        CHECK(winner <= holder_prio);
        CHECK(winner <= std::max(holder_prio, challenger_prio));
    }
}

TEST_CASE("groupcast with clean links needs no retransmission") {
    RngStream rng(23, "sl-harq");
    const std::vector<UeId> members{1, 2, 3, 4};
    std::map<UeId, double> per{{1, 0.0}, {2, 0.0}, {3, 0.0}, {4, 0.0}};
    const GroupcastReport r = groupcast_round(9, members, per, 3, rng);
    CHECK(r.delivered.size() == 4);
    CHECK(r.retransmissions == 0);
}

TEST_CASE("an absorbing link stays undelivered after max HARQ") {
    RngStream rng(24, "sl-harq");
    const std::vector<UeId> members{1, 2};
    std::map<UeId, double> per{{1, 0.0}, {2, 1.0}};
    const GroupcastReport r = groupcast_round(9, members, per, 3, rng);
    CHECK(r.delivered.count(1) == 1);
    CHECK(r.delivered.count(2) == 0);
    CHECK(r.retransmissions == 3);
}

TEST_CASE("residual loss matches the Bernoulli product") {
    // Monte-Carlo oracle: per member, P(miss) = per^(1+max_harq).
    RngStream rng(25, "sl-harq-mc");
    const std::vector<UeId> members{1, 2, 3, 4};
    std::map<UeId, double> per;
    for (UeId ue : members) {
        per[ue] = 0.5;
    }
    const int rounds = 4000;
    const int max_harq = 3;
    int missed = 0;
    for (int i = 0; i < rounds; ++i) {
        const GroupcastReport r = groupcast_round(9, members, per, max_harq, rng);
        missed += static_cast<int>(members.size() - r.delivered.size());
    }
    const double p_miss = std::pow(0.5, 1 + max_harq);
    const int trials = rounds * static_cast<int>(members.size());
    const double sigma = std::sqrt(trials * p_miss * (1 - p_miss));
    CHECK(std::abs(missed - trials * p_miss) < 3.0 * sigma);
}

TEST_CASE("delivered set is non-decreasing in max_harq") {
    const std::vector<UeId> members{1, 2, 3, 4, 5, 6};
    std::map<UeId, double> per;
    for (UeId ue : members) {
        per[ue] = 0.6;
    }
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::set<UeId> previous;
        for (int max_harq = 0; max_harq <= 4; ++max_harq) {
            RngStream rng(seed, "sl-mono");
            const GroupcastReport r =
                groupcast_round(9, members, per, max_harq, rng);
            for (UeId ue : previous) {
                CHECK(r.delivered.count(ue) == 1);
            }
            previous = r.delivered;
        }
    }
}
