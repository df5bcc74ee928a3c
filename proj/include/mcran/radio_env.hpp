#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "mcran/rng.hpp"

namespace mcran {

struct Position {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0; // altitude, meters

    bool operator==(const Position&) const = default;
};

inline double distance(const Position& a, const Position& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Coverage knobs applied on top of the distance-dependent pathloss:
// transmit power class, beam gain and slot repetition.
struct LinkBudget {
    double tx_power_dbm = 23.0;
    double beam_gain_db = 0.0;
    int repetition_factor = 1; // >= 1; SNR gain is 10*log10(K)
    double pathloss_db = 0.0;
    double noise_dbm = -100.0;
};

struct McsEntry {
    int per_prb_kbps;
    double snr50_db; // SNR at which the packet error probability is 0.5
};

// Log-distance pathloss plus an 8-step MCS ladder. No fading by default;
// lognormal shadowing is opt-in via shadowing_sigma_db.
struct RadioConfig {
    double ref_pathloss_db = 32.4; // at d0 = 1 m
    double pathloss_exponent = 3.0;
    double noise_dbm = -100.0;
    double shadowing_sigma_db = 0.0;
    double per_slope_per_db = 2.0; // logistic steepness k
    std::vector<McsEntry> mcs_table = default_mcs_table();

    static std::vector<McsEntry> default_mcs_table() {
        std::vector<McsEntry> t;
        const std::array<int, 8> rates{18, 36, 72, 144, 288, 432, 576, 720};
        for (std::size_t i = 0; i < rates.size(); ++i) {
            t.push_back({rates[i], 3.0 * static_cast<double>(i)});
        }
        return t;
    }
};

// PL = PL0 + 10*n*log10(d). Throws DomainError for d <= 0.
double pathloss_db(double distance_m, const RadioConfig& cfg = {});

// Optional lognormal shadowing term, drawn from the caller's stream.
double shadowing_db(const RadioConfig& cfg, RngStream& rng);

// tx + beam gain - pathloss - noise + 10*log10(repetition).
double snr_db(const LinkBudget& budget);

// Logistic packet error curve: 1 / (1 + exp(k*(snr - snr50(mcs)))).
// Monotone decreasing in SNR. Throws NotFoundError for an unknown MCS.
double packet_error_prob(double snr_db, int mcs, const RadioConfig& cfg = {});

// ceil(rate / per-PRB rate of the MCS). Throws NotFoundError / DomainError.
int required_prbs(int rate_kbps, int mcs, const RadioConfig& cfg = {});

// Highest MCS whose error probability at this SNR stays within target_per;
// falls back to MCS 0 when even the lowest entry misses the target.
int select_mcs(double snr_db, double target_per, const RadioConfig& cfg = {});

} // namespace mcran
