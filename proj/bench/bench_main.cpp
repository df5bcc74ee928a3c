// Timing comparison of the OpenMP kernels against their serial reference:
// the positioning Monte-Carlo batch and the brute-force grid search.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mcran/positioning.hpp"
#include "support/grid_oracle.hpp"

using namespace mcran;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

std::vector<Anchor> bench_anchors() {
    return {
        {0, {-60.0, -60.0, 12.0}, 0.0, true},  {1, {60.0, -60.0, 45.0}, 0.0, true},
        {2, {60.0, 60.0, 80.0}, 0.0, true},    {3, {-60.0, 60.0, 118.0}, 0.0, true},
        {4, {0.0, -80.0, 25.0}, 0.0, true},    {5, {0.0, 80.0, 95.0}, 0.0, true},
    };
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; parallel variants run serially\n");
#endif

    const std::vector<Anchor> anchors = bench_anchors();
    const std::vector<Position> targets{{5.0, -3.0, 11.0}, {-8.0, 12.0, 21.0}};

    {
        McBatchParams params;
        params.sigma_s = 10e-9;
        params.epochs = 5;
        params.seed = 7;
        const int draws = 2000;

        auto t0 = std::chrono::steady_clock::now();
        const auto serial =
            position_error_batch_serial(anchors, targets, params, draws);
        const double serial_s = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        const auto parallel =
            position_error_batch(anchors, targets, params, draws);
        const double parallel_s = seconds_since(t0);

        bool identical = serial.size() == parallel.size();
        for (std::size_t i = 0; identical && i < serial.size(); ++i) {
            identical = serial[i].estimate == parallel[i].estimate;
        }
        std::printf("mc-batch        %5d draws: serial %.3fs, openmp %.3fs, "
                    "speedup %.2fx, identical=%s\n",
                    draws, serial_s, parallel_s, serial_s / parallel_s,
                    identical ? "yes" : "NO");
    }

    {
        RngStream rng(11, "bench-grid");
        const Position truth{4.0, -6.0, 14.0};
        const TdoaSet set = measure_ul_tdoa(truth, 0.0, anchors, 5e-9, rng, 4);
        const Position lo{-20.0, -20.0, 0.0};
        const Position hi{20.0, 20.0, 30.0};

        auto t0 = std::chrono::steady_clock::now();
        const auto serial =
            test::grid_search_tdoa(set, anchors, lo, hi, 0.25, false);
        const double serial_s = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        const auto parallel =
            test::grid_search_tdoa(set, anchors, lo, hi, 0.25, true);
        const double parallel_s = seconds_since(t0);

        const bool identical = serial.argmin == parallel.argmin &&
                               serial.ssr == parallel.ssr;
        std::printf("grid-search %9llu points: serial %.3fs, openmp %.3fs, "
                    "speedup %.2fx, identical=%s\n",
                    static_cast<unsigned long long>(serial.points), serial_s,
                    parallel_s, serial_s / parallel_s,
                    identical ? "yes" : "NO");
    }
    return 0;
}
