#include "mcran/positioning.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mcran/errors.hpp"

namespace mcran {

namespace {

Eigen::Vector3d to_vec(const Position& p) { return {p.x, p.y, p.z}; }
Position to_pos(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Position centroid(const std::vector<Anchor>& anchors) {
    Position c;
    for (const auto& a : anchors) {
        c.x += a.pos.x;
        c.y += a.pos.y;
        c.z += a.pos.z;
    }
    const double n = static_cast<double>(anchors.size());
    return {c.x / n, c.y / n, c.z / n};
}

// Residuals and Jacobian in meters (range domain): better conditioned than
// working in seconds, same minimizer.
struct Model {
    // r_i(x) and the row gradient d r_i / d x.
    virtual int rows() const = 0;
    virtual double residual(int i, const Eigen::Vector3d& x) const = 0;
    virtual Eigen::RowVector3d jacobian_row(int i,
                                            const Eigen::Vector3d& x) const = 0;
    virtual ~Model() = default;
};

struct TdoaModel : Model {
    std::vector<Eigen::Vector3d> others; // non-reference anchors
    std::vector<double> range_diffs_m;   // c * tau_i
    Eigen::Vector3d ref;

    int rows() const override { return static_cast<int>(others.size()); }
    double residual(int i, const Eigen::Vector3d& x) const override {
        const double di = (x - others[static_cast<std::size_t>(i)]).norm();
        const double dr = (x - ref).norm();
        return range_diffs_m[static_cast<std::size_t>(i)] - (di - dr);
    }
    Eigen::RowVector3d jacobian_row(int i,
                                    const Eigen::Vector3d& x) const override {
        const Eigen::Vector3d ui =
            (x - others[static_cast<std::size_t>(i)]).normalized();
        const Eigen::Vector3d ur = (x - ref).normalized();
        return -(ui - ur).transpose();
    }
};

struct RttModel : Model {
    std::vector<Eigen::Vector3d> anchors;
    std::vector<double> ranges_m; // c * RTT_i / 2

    int rows() const override { return static_cast<int>(anchors.size()); }
    double residual(int i, const Eigen::Vector3d& x) const override {
        return ranges_m[static_cast<std::size_t>(i)] -
               (x - anchors[static_cast<std::size_t>(i)]).norm();
    }
    Eigen::RowVector3d jacobian_row(int i,
                                    const Eigen::Vector3d& x) const override {
        return -(x - anchors[static_cast<std::size_t>(i)]).normalized().transpose();
    }
};

double sum_sq(const Model& m, const Eigen::Vector3d& x) {
    double s = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
        const double r = m.residual(i, x);
        s += r * r;
    }
    return s;
}

constexpr double kStepTolM = 1e-6;
constexpr int kMaxIterations = 50;
constexpr int kMaxHalvings = 10;
constexpr double kConditionLimit = 1e12;

// Default starting points: the anchor centroid plus the corners of the
// (expanded) anchor bounding box. TDOA surfaces have a mirror-image local
// minimum on the far side of the anchor constellation; starting from both
// sides and keeping the lowest residual lands in the global basin.
std::vector<Eigen::Vector3d> default_starts(const std::vector<Anchor>& anchors) {
    Eigen::Vector3d lo(anchors.front().pos.x, anchors.front().pos.y,
                       anchors.front().pos.z);
    Eigen::Vector3d hi = lo;
    for (const auto& a : anchors) {
        const Eigen::Vector3d p(a.pos.x, a.pos.y, a.pos.z);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Eigen::Vector3d center = 0.5 * (lo + hi);
    const Eigen::Vector3d half = 0.5 * (hi - lo).cwiseMax(1.0);
    std::vector<Eigen::Vector3d> starts;
    starts.push_back(to_vec(centroid(anchors)));
    for (int corner = 0; corner < 8; ++corner) {
        const Eigen::Vector3d sign((corner & 1) ? 1.0 : -1.0,
                                   (corner & 2) ? 1.0 : -1.0,
                                   (corner & 4) ? 1.0 : -1.0);
        starts.push_back(center + 1.5 * half.cwiseProduct(sign));
    }
    return starts;
}

PositionEstimate gauss_newton(const Model& model, Eigen::Vector3d x,
                              double sigma_range_m) {
    PositionEstimate est;
    const int n = model.rows();
    Eigen::MatrixXd jac(n, 3);
    Eigen::VectorXd res(n);
    Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();

    double ssr = sum_sq(model, x);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        est.iterations = iter + 1;
        for (int i = 0; i < n; ++i) {
            res(i) = model.residual(i, x);
            jac.row(i) = model.jacobian_row(i, x);
        }
        normal = jac.transpose() * jac;

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal);
        const double lmin = eig.eigenvalues().minCoeff();
        const double lmax = eig.eigenvalues().maxCoeff();
        if (lmin <= 0.0 || lmax / lmin > kConditionLimit) {
            throw DegenerateGeometry("singular normal equations",
                                     lmin > 0.0 ? lmax / lmin
                                                : std::numeric_limits<double>::infinity());
        }

        Eigen::Vector3d step = normal.ldlt().solve(-jac.transpose() * res);

        // Step halving keeps the residual from increasing on hard geometry.
        double trial_ssr = sum_sq(model, x + step);
        int halvings = 0;
        while (trial_ssr > ssr && halvings < kMaxHalvings) {
            step *= 0.5;
            trial_ssr = sum_sq(model, x + step);
            ++halvings;
        }
        if (trial_ssr <= ssr) {
            x += step;
            ssr = trial_ssr;
        }
        if (step.norm() < kStepTolM) {
            break;
        }
    }

    est.position = to_pos(x);
    est.residual_m = std::sqrt(ssr);

    const Eigen::Matrix3d cov =
        sigma_range_m * sigma_range_m * normal.inverse();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            est.covariance[static_cast<std::size_t>(r * 3 + c)] = cov(r, c);
        }
    }
    return est;
}

// Explicit init runs alone; the default start set keeps the solution with
// the smallest residual.
PositionEstimate solve_least_squares(const Model& model,
                                     const std::vector<Anchor>& anchors,
                                     std::optional<Position> init,
                                     double sigma_range_m) {
    if (init) {
        return gauss_newton(model, to_vec(*init), sigma_range_m);
    }
    std::optional<PositionEstimate> best;
    std::optional<DegenerateGeometry> degenerate;
    for (const Eigen::Vector3d& start : default_starts(anchors)) {
        try {
            PositionEstimate est = gauss_newton(model, start, sigma_range_m);
            if (!best || est.residual_m < best->residual_m) {
                best = est;
            }
        } catch (const DegenerateGeometry& e) {
            degenerate = e;
        }
    }
    if (!best) {
        throw *degenerate;
    }
    return *best;
}

} // namespace

int reference_anchor(const std::vector<Anchor>& anchors) {
    if (anchors.empty()) {
        throw DomainError("no anchors");
    }
    const Position c = centroid(anchors);
    int best = anchors.front().id;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& a : anchors) {
        const double d = distance(a.pos, c);
        if (d < best_d) {
            best_d = d;
            best = a.id;
        }
    }
    return best;
}

TdoaSet measure_ul_tdoa(const Position& ue, double ue_clock_offset_s,
                        const std::vector<Anchor>& anchors, double sigma_s,
                        RngStream& rng, int epochs) {
    if (anchors.size() < 2) {
        throw DomainError("UL-TDOA needs at least two anchors");
    }
    TdoaSet set;
    set.reference_anchor = reference_anchor(anchors);
    set.noise_sigma_s = sigma_s / std::sqrt(static_cast<double>(epochs));

    // The transmit time and the UE clock offset are common to every arrival
    // and cancel exactly in the differencing; dropping them before the
    // subtraction keeps that cancellation exact in floating point as well.
    (void)ue_clock_offset_s;
    std::map<int, double> mean_arrival;
    for (int e = 0; e < epochs; ++e) {
        for (const auto& a : anchors) {
            const double t = distance(ue, a.pos) / kSpeedOfLight +
                             a.clock_offset_s + rng.normal(0.0, sigma_s);
            mean_arrival[a.id] += t / static_cast<double>(epochs);
        }
    }
    const double t_ref = mean_arrival.at(set.reference_anchor);
    for (const auto& a : anchors) {
        set.tdoas_s[a.id] =
            a.id == set.reference_anchor ? 0.0 : mean_arrival.at(a.id) - t_ref;
    }
    return set;
}

RttSet measure_rtt(const Position& ue, const std::vector<Anchor>& anchors,
                   double sigma_s, RngStream& rng, int epochs) {
    if (anchors.empty()) {
        throw DomainError("multi-RTT needs anchors");
    }
    RttSet set;
    set.noise_sigma_s = sigma_s / std::sqrt(static_cast<double>(epochs));
    for (const auto& a : anchors) {
        double mean = 0.0;
        for (int e = 0; e < epochs; ++e) {
            mean += (2.0 * distance(ue, a.pos) / kSpeedOfLight +
                     rng.normal(0.0, sigma_s)) /
                    static_cast<double>(epochs);
        }
        set.rtts_s[a.id] = mean;
    }
    return set;
}

PositionEstimate solve_tdoa(const TdoaSet& tdoas,
                            const std::vector<Anchor>& anchors,
                            std::optional<Position> init) {
    if (anchors.size() < 4) {
        throw DomainError("3D TDOA needs at least four anchors");
    }
    TdoaModel model;
    bool ref_found = false;
    for (const auto& a : anchors) {
        if (a.id == tdoas.reference_anchor) {
            model.ref = to_vec(a.pos);
            ref_found = true;
        }
    }
    if (!ref_found) {
        throw NotFoundError("reference anchor not in anchor list");
    }
    for (const auto& a : anchors) {
        if (a.id == tdoas.reference_anchor) {
            continue;
        }
        auto it = tdoas.tdoas_s.find(a.id);
        if (it == tdoas.tdoas_s.end()) {
            throw NotFoundError("missing TDOA for anchor " + std::to_string(a.id));
        }
        model.others.push_back(to_vec(a.pos));
        model.range_diffs_m.push_back(kSpeedOfLight * it->second);
    }
    return solve_least_squares(model, anchors, init,
                               kSpeedOfLight * tdoas.noise_sigma_s);
}

PositionEstimate solve_multi_rtt(const RttSet& rtts,
                                 const std::vector<Anchor>& anchors,
                                 std::optional<Position> init) {
    if (anchors.size() < 3) {
        throw DomainError("multi-RTT needs at least three anchors");
    }
    RttModel model;
    for (const auto& a : anchors) {
        auto it = rtts.rtts_s.find(a.id);
        if (it == rtts.rtts_s.end()) {
            throw NotFoundError("missing RTT for anchor " + std::to_string(a.id));
        }
        model.anchors.push_back(to_vec(a.pos));
        model.ranges_m.push_back(kSpeedOfLight * it->second / 2.0);
    }
    return solve_least_squares(model, anchors, init,
                               kSpeedOfLight * rtts.noise_sigma_s / 2.0);
}

Dop compute_dop(const std::vector<Anchor>& anchors, const Position& at,
                PositioningMethod method) {
    const Eigen::Vector3d x = to_vec(at);
    Eigen::MatrixXd jac;
    if (method == PositioningMethod::Tdoa) {
        const int ref_id = reference_anchor(anchors);
        Eigen::Vector3d ref;
        for (const auto& a : anchors) {
            if (a.id == ref_id) {
                ref = to_vec(a.pos);
            }
        }
        jac.resize(static_cast<int>(anchors.size()) - 1, 3);
        int row = 0;
        const Eigen::Vector3d ur = (x - ref).normalized();
        for (const auto& a : anchors) {
            if (a.id == ref_id) {
                continue;
            }
            jac.row(row++) = ((x - to_vec(a.pos)).normalized() - ur).transpose();
        }
    } else {
        jac.resize(static_cast<int>(anchors.size()), 3);
        int row = 0;
        for (const auto& a : anchors) {
            jac.row(row++) = (x - to_vec(a.pos)).normalized().transpose();
        }
    }

    const Eigen::Matrix3d normal = jac.transpose() * jac;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (lmin <= 0.0 || lmax / lmin > kConditionLimit) {
        throw DegenerateGeometry(
            "DOP undefined for this geometry",
            lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity());
    }
    const Eigen::Matrix3d q = normal.inverse();
    Dop dop;
    dop.hdop = std::sqrt(q(0, 0) + q(1, 1));
    dop.vdop = std::sqrt(q(2, 2));
    dop.gdop = std::sqrt(q.trace());
    return dop;
}

namespace {

double mean_gdop(const std::vector<Anchor>& anchors,
                 const std::vector<Position>& targets,
                 PositioningMethod method) {
    double sum = 0.0;
    for (const auto& t : targets) {
        try {
            sum += compute_dop(anchors, t, method).gdop;
        } catch (const DegenerateGeometry&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return sum / static_cast<double>(targets.size());
}

} // namespace

PlacementResult improve_placement(std::vector<Anchor> anchors,
                                  const Region& region,
                                  const std::vector<Position>& targets,
                                  double step_m, PositioningMethod method) {
    PlacementResult result;
    result.initial_mean_gdop = mean_gdop(anchors, targets, method);
    double current = result.initial_mean_gdop;

    const int max_moves = 10'000;
    bool improved = true;
    while (improved && result.moves < max_moves) {
        improved = false;
        for (std::size_t i = 0; i < anchors.size(); ++i) {
            if (!anchors[i].is_airborne) {
                continue;
            }
            double best_score = current;
            std::optional<Position> best_pos;
            const Position base = anchors[i].pos;
            for (int axis = 0; axis < 3; ++axis) {
                for (double dir : {-1.0, 1.0}) {
                    Position cand = base;
                    (axis == 0 ? cand.x : axis == 1 ? cand.y : cand.z) +=
                        dir * step_m;
                    if (!region.contains(cand)) {
                        continue;
                    }
                    anchors[i].pos = cand;
                    const double score = mean_gdop(anchors, targets, method);
                    if (score < best_score - 1e-12) {
                        best_score = score;
                        best_pos = cand;
                    }
                }
            }
            anchors[i].pos = best_pos ? *best_pos : base;
            if (best_pos) {
                current = best_score;
                result.moves += 1;
                improved = true;
            }
        }
    }
    result.final_mean_gdop = current;
    result.anchors = std::move(anchors);
    return result;
}

namespace {

McDraw run_one_draw(const std::vector<Anchor>& anchors,
                    const std::vector<Position>& targets,
                    const McBatchParams& params, int draw) {
    RngStream rng(params.seed, "pos-mc", static_cast<std::uint64_t>(draw));
    McDraw record;
    record.truth = targets[static_cast<std::size_t>(draw) % targets.size()];

    std::vector<Anchor> working = anchors;
    if (params.anchor_offset_range_s > 0.0) {
        for (auto& a : working) {
            a.clock_offset_s = rng.uniform(-params.anchor_offset_range_s,
                                           params.anchor_offset_range_s);
        }
    }

    try {
        PositionEstimate est;
        if (params.method == PositioningMethod::Tdoa) {
            const TdoaSet set = measure_ul_tdoa(record.truth, 0.0, working,
                                                params.sigma_s, rng,
                                                params.epochs);
            est = solve_tdoa(set, working);
        } else {
            const RttSet set = measure_rtt(record.truth, working,
                                           params.sigma_s, rng, params.epochs);
            est = solve_multi_rtt(set, working);
        }
        record.estimate = est.position;
        const double dx = est.position.x - record.truth.x;
        const double dy = est.position.y - record.truth.y;
        record.horizontal_error_m = std::sqrt(dx * dx + dy * dy);
        record.vertical_error_m = std::abs(est.position.z - record.truth.z);
    } catch (const DegenerateGeometry&) {
        record.degenerate = true;
        record.horizontal_error_m = std::numeric_limits<double>::infinity();
        record.vertical_error_m = std::numeric_limits<double>::infinity();
    }
    return record;
}

} // namespace

std::vector<McDraw> position_error_batch_serial(
    const std::vector<Anchor>& anchors, const std::vector<Position>& targets,
    const McBatchParams& params, int n_draws) {
    std::vector<McDraw> records(static_cast<std::size_t>(n_draws));
    for (int i = 0; i < n_draws; ++i) {
        records[static_cast<std::size_t>(i)] =
            run_one_draw(anchors, targets, params, i);
    }
    return records;
}

std::vector<McDraw> position_error_batch(const std::vector<Anchor>& anchors,
                                         const std::vector<Position>& targets,
                                         const McBatchParams& params,
                                         int n_draws) {
    std::vector<McDraw> records(static_cast<std::size_t>(n_draws));
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n_draws; ++i) {
        records[static_cast<std::size_t>(i)] =
            run_one_draw(anchors, targets, params, i);
    }
    return records;
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const double rank = pct / 100.0 * static_cast<double>(values.size());
    std::size_t idx = rank <= 1.0 ? 0
                                  : static_cast<std::size_t>(std::ceil(rank)) - 1;
    idx = std::min(idx, values.size() - 1);
    return values[idx];
}

} // namespace mcran
