#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "mcran/radio_env.hpp"
#include "mcran/rng.hpp"

namespace mcran {

inline constexpr double kSpeedOfLight = 299'792'458.0; // m/s

struct Anchor {
    int id = 0;
    Position pos;
    double clock_offset_s = 0.0; // inter-anchor sync error
    bool is_airborne = false;
};

struct TdoaSet {
    int reference_anchor = 0;
    std::map<int, double> tdoas_s; // tau_i = t_i - t_ref; ref entry exactly 0
    double noise_sigma_s = 0.0;
};

struct RttSet {
    std::map<int, double> rtts_s; // RTT_i = 2 d_i / c + noise
    double noise_sigma_s = 0.0;
};

struct PositionEstimate {
    Position position;
    int iterations = 0;
    double residual_m = 0.0;              // c * ||residual||_2
    std::array<double, 9> covariance{};   // row-major 3x3, sigma^2 (J'J)^-1
};

enum class PositioningMethod { Tdoa, Rtt };

// Reference anchor used for time differencing: the one nearest the anchor
// centroid, which keeps residuals balanced for symmetric deployments.
int reference_anchor(const std::vector<Anchor>& anchors);

// UL-SRS arrival-time differences. The UE transmit time and UE clock offset
// cancel in the differencing; per-anchor clock offsets do not. epochs > 1
// averages repeated measurements (noise sigma scales with 1/sqrt(epochs)).
TdoaSet measure_ul_tdoa(const Position& ue, double ue_clock_offset_s,
                        const std::vector<Anchor>& anchors, double sigma_s,
                        RngStream& rng, int epochs = 1);

// Round-trip times; immune to UE and anchor clock offsets by construction.
RttSet measure_rtt(const Position& ue, const std::vector<Anchor>& anchors,
                   double sigma_s, RngStream& rng, int epochs = 1);

// Gauss-Newton with step halving; stops when the step is below 1e-6 m or
// after 50 iterations. init defaults to the anchor centroid. Throws
// DegenerateGeometry when the normal equations are singular.
PositionEstimate solve_tdoa(const TdoaSet& tdoas,
                            const std::vector<Anchor>& anchors,
                            std::optional<Position> init = {});

PositionEstimate solve_multi_rtt(const RttSet& rtts,
                                 const std::vector<Anchor>& anchors,
                                 std::optional<Position> init = {});

struct Dop {
    double hdop = 0.0;
    double vdop = 0.0;
    double gdop = 0.0;
};

// Dilution of precision from the direction-cosine Jacobian of the chosen
// measurement model (dimensionless; invariant under geometry scaling).
Dop compute_dop(const std::vector<Anchor>& anchors, const Position& at,
                PositioningMethod method);

struct Region {
    Position lo;
    Position hi;

    bool contains(const Position& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
               p.z >= lo.z && p.z <= hi.z;
    }
};

struct PlacementResult {
    std::vector<Anchor> anchors;
    double initial_mean_gdop = 0.0;
    double final_mean_gdop = 0.0;
    int moves = 0;
};

// Greedy coordinate descent over the airborne anchors: try +-step on each
// axis inside the region, keep the move that most reduces the mean GDOP over
// the targets, repeat until no move improves.
PlacementResult improve_placement(std::vector<Anchor> anchors,
                                  const Region& region,
                                  const std::vector<Position>& targets,
                                  double step_m, PositioningMethod method);

// ---- Monte-Carlo batch kernels -------------------------------------------
//
// Draw i uses its own substream of (seed, "pos-mc", i), so the parallel and
// serial variants produce bit-identical records.

struct McBatchParams {
    double sigma_s = 10e-9;
    int epochs = 1;
    PositioningMethod method = PositioningMethod::Tdoa;
    std::uint64_t seed = 1;
    // Per-draw random anchor clock offsets (uniform in +-range); exercises
    // the TDOA sync sensitivity while leaving RTT untouched.
    double anchor_offset_range_s = 0.0;
};

struct McDraw {
    Position truth;
    Position estimate;
    double horizontal_error_m = 0.0;
    double vertical_error_m = 0.0;
    bool degenerate = false;
};

// Serial reference implementation.
std::vector<McDraw> position_error_batch_serial(
    const std::vector<Anchor>& anchors, const std::vector<Position>& targets,
    const McBatchParams& params, int n_draws);

// OpenMP-parallel variant; falls back to the serial loop when built without
// OpenMP. Output matches position_error_batch_serial exactly.
std::vector<McDraw> position_error_batch(const std::vector<Anchor>& anchors,
                                         const std::vector<Position>& targets,
                                         const McBatchParams& params,
                                         int n_draws);

double percentile(std::vector<double> values, double pct);

} // namespace mcran
