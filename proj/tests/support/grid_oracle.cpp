#include "support/grid_oracle.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace mcran::test {

namespace {

struct Grid {
    Position lo;
    double step;
    std::int64_t nx, ny, nz;

    Position point(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
        return {lo.x + static_cast<double>(ix) * step,
                lo.y + static_cast<double>(iy) * step,
                lo.z + static_cast<double>(iz) * step};
    }
};

Grid make_grid(const Position& lo, const Position& hi, double step) {
    auto count = [&](double a, double b) {
        return static_cast<std::int64_t>(std::floor((b - a) / step + 1e-9)) + 1;
    };
    return Grid{lo, step, count(lo.x, hi.x), count(lo.y, hi.y),
                count(lo.z, hi.z)};
}

GridSearchResult scan(const Grid& grid,
                      const std::function<double(const Position&)>& ssr,
                      bool parallel) {
    const std::int64_t total = grid.nx * grid.ny * grid.nz;
    struct Best {
        double ssr = std::numeric_limits<double>::infinity();
        std::int64_t index = -1;
    };

    Best best;
    if (parallel) {
        Best global;
#pragma omp parallel
        {
            Best local;
#pragma omp for schedule(static)
            for (std::int64_t i = 0; i < total; ++i) {
                const std::int64_t ix = i / (grid.ny * grid.nz);
                const std::int64_t iy = (i / grid.nz) % grid.ny;
                const std::int64_t iz = i % grid.nz;
                const double s = ssr(grid.point(ix, iy, iz));
                if (s < local.ssr ||
                    (s == local.ssr && i < local.index)) {
                    local.ssr = s;
                    local.index = i;
                }
            }
#pragma omp critical
            {
                if (local.ssr < global.ssr ||
                    (local.ssr == global.ssr && local.index < global.index)) {
                    global = local;
                }
            }
        }
        best = global;
    } else {
        for (std::int64_t i = 0; i < total; ++i) {
            const std::int64_t ix = i / (grid.ny * grid.nz);
            const std::int64_t iy = (i / grid.nz) % grid.ny;
            const std::int64_t iz = i % grid.nz;
            const double s = ssr(grid.point(ix, iy, iz));
            if (s < best.ssr || (s == best.ssr && i < best.index)) {
                best.ssr = s;
                best.index = i;
            }
        }
    }

    GridSearchResult result;
    result.points = static_cast<std::uint64_t>(total);
    result.ssr = best.ssr;
    const std::int64_t ix = best.index / (grid.ny * grid.nz);
    const std::int64_t iy = (best.index / grid.nz) % grid.ny;
    const std::int64_t iz = best.index % grid.nz;
    result.argmin = grid.point(ix, iy, iz);
    return result;
}

std::function<double(const Position&)>
tdoa_ssr(const TdoaSet& tdoas, const std::vector<Anchor>& anchors) {
    Position ref;
    for (const auto& a : anchors) {
        if (a.id == tdoas.reference_anchor) {
            ref = a.pos;
        }
    }
    std::vector<std::pair<Position, double>> terms; // (anchor, c*tau)
    for (const auto& a : anchors) {
        if (a.id == tdoas.reference_anchor) {
            continue;
        }
        terms.emplace_back(a.pos, kSpeedOfLight * tdoas.tdoas_s.at(a.id));
    }
    return [ref, terms](const Position& x) {
        double s = 0.0;
        const double dr = distance(x, ref);
        for (const auto& [pos, diff] : terms) {
            const double r = diff - (distance(x, pos) - dr);
            s += r * r;
        }
        return s;
    };
}

std::function<double(const Position&)>
rtt_ssr(const RttSet& rtts, const std::vector<Anchor>& anchors) {
    std::vector<std::pair<Position, double>> terms; // (anchor, c*rtt/2)
    for (const auto& a : anchors) {
        terms.emplace_back(a.pos, kSpeedOfLight * rtts.rtts_s.at(a.id) / 2.0);
    }
    return [terms](const Position& x) {
        double s = 0.0;
        for (const auto& [pos, range] : terms) {
            const double r = range - distance(x, pos);
            s += r * r;
        }
        return s;
    };
}

} // namespace

GridSearchResult grid_search_tdoa(const TdoaSet& tdoas,
                                  const std::vector<Anchor>& anchors,
                                  const Position& lo, const Position& hi,
                                  double step_m, bool parallel) {
    return scan(make_grid(lo, hi, step_m), tdoa_ssr(tdoas, anchors), parallel);
}

GridSearchResult grid_search_rtt(const RttSet& rtts,
                                 const std::vector<Anchor>& anchors,
                                 const Position& lo, const Position& hi,
                                 double step_m, bool parallel) {
    return scan(make_grid(lo, hi, step_m), rtt_ssr(rtts, anchors), parallel);
}

Position grid_oracle_tdoa(const TdoaSet& tdoas,
                          const std::vector<Anchor>& anchors,
                          const Position& lo, const Position& hi,
                          double coarse_step_m, double fine_step_m,
                          bool parallel) {
    const GridSearchResult coarse =
        grid_search_tdoa(tdoas, anchors, lo, hi, coarse_step_m, parallel);
    // Along a shallow valley (high-DOP axis) the lattice argmin can sit
    // several cells from the continuum minimum; three cells of margin cover
    // the anisotropy of these geometries.
    const double margin = 3.0 * coarse_step_m;
    const Position flo{coarse.argmin.x - margin, coarse.argmin.y - margin,
                       coarse.argmin.z - margin};
    const Position fhi{coarse.argmin.x + margin, coarse.argmin.y + margin,
                       coarse.argmin.z + margin};
    return grid_search_tdoa(tdoas, anchors, flo, fhi, fine_step_m, parallel)
        .argmin;
}

} // namespace mcran::test
