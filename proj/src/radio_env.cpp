#include "mcran/radio_env.hpp"

#include <string>

#include "mcran/errors.hpp"

namespace mcran {

double pathloss_db(double distance_m, const RadioConfig& cfg) {
    if (!(distance_m > 0.0)) {
        throw DomainError("pathloss distance must be > 0, got " +
                          std::to_string(distance_m));
    }
    return cfg.ref_pathloss_db +
           10.0 * cfg.pathloss_exponent * std::log10(distance_m);
}

double shadowing_db(const RadioConfig& cfg, RngStream& rng) {
    if (cfg.shadowing_sigma_db <= 0.0) {
        return 0.0;
    }
    return rng.normal(0.0, cfg.shadowing_sigma_db);
}

double snr_db(const LinkBudget& budget) {
    return budget.tx_power_dbm + budget.beam_gain_db - budget.pathloss_db -
           budget.noise_dbm +
           10.0 * std::log10(static_cast<double>(budget.repetition_factor));
}

namespace {

const McsEntry& mcs_entry(int mcs, const RadioConfig& cfg) {
    if (mcs < 0 || static_cast<std::size_t>(mcs) >= cfg.mcs_table.size()) {
        throw NotFoundError("unknown MCS " + std::to_string(mcs));
    }
    return cfg.mcs_table[static_cast<std::size_t>(mcs)];
}

} // namespace

double packet_error_prob(double snr_db, int mcs, const RadioConfig& cfg) {
    const McsEntry& e = mcs_entry(mcs, cfg);
    return 1.0 / (1.0 + std::exp(cfg.per_slope_per_db * (snr_db - e.snr50_db)));
}

int required_prbs(int rate_kbps, int mcs, const RadioConfig& cfg) {
    if (rate_kbps <= 0) {
        throw DomainError("rate must be > 0 kbps");
    }
    const McsEntry& e = mcs_entry(mcs, cfg);
    return (rate_kbps + e.per_prb_kbps - 1) / e.per_prb_kbps;
}

int select_mcs(double snr_db, double target_per, const RadioConfig& cfg) {
    int best = 0;
    for (std::size_t m = 0; m < cfg.mcs_table.size(); ++m) {
        if (packet_error_prob(snr_db, static_cast<int>(m), cfg) <= target_per) {
            best = static_cast<int>(m);
        }
    }
    return best;
}

} // namespace mcran
