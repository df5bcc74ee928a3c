// Command-line front end: scenario validation, execution, trace replay and
// the positioning demo.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcran/errors.hpp"
#include "mcran/metrics.hpp"
#include "mcran/positioning.hpp"
#include "mcran/runner.hpp"
#include "mcran/scenario.hpp"

namespace {

namespace fs = std::filesystem;

std::string default_out_dir() {
    const char* env = std::getenv("MCRAN_OUT_DIR");
    return env != nullptr && *env != '\0' ? env : ".";
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "."
                                                      : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << content;
}

int cmd_validate(const std::string& scenario_path) {
    std::ifstream in(scenario_path);
    if (!in) {
        std::cerr << "cannot open scenario file: " << scenario_path << "\n";
        return 1;
    }
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::ordered_json::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    }
    const mcran::ValidationReport report = mcran::validate_scenario(j);
    if (!report.ok()) {
        std::cerr << report.to_string();
        std::cerr << report.issues.size() << " issue(s) found\n";
        return 1;
    }
    std::cout << scenario_path << ": valid\n";
    return 0;
}

int cmd_run(const std::string& scenario_path, std::vector<std::uint64_t> seeds,
            const std::string& out_dir, bool with_trace) {
    const mcran::Scenario scenario = mcran::load_scenario_file(scenario_path);
    if (seeds.empty()) {
        seeds.push_back(scenario.seed);
    }

    std::vector<mcran::RunResult> results(seeds.size());
    // Replicas are independent engines; fan out across workers.
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(seeds.size()); ++i) {
        results[static_cast<std::size_t>(i)] = mcran::run_scenario(
            scenario, seeds[static_cast<std::size_t>(i)]);
    }

    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const std::string suffix =
            seeds.size() == 1 ? "" : "-seed" + std::to_string(seeds[i]);
        const fs::path report_path =
            fs::path(out_dir) / ("report" + suffix + ".json");
        write_file(report_path, results[i].report.dump(2) + "\n");
        if (with_trace) {
            std::ostringstream trace;
            nlohmann::ordered_json echo = scenario.raw;
            echo["seed"] = seeds[i];
            mcran::write_trace(trace, echo, seeds[i], results[i].events);
            write_file(fs::path(out_dir) / ("trace" + suffix + ".csv"),
                       trace.str());
        }
        std::cout << "seed " << seeds[i] << " " << results[i].summary << " -> "
                  << report_path.string() << "\n";
    }
    return 0;
}

int cmd_replay(const std::string& trace_path, const std::string& out_dir) {
    std::ifstream in(trace_path);
    if (!in) {
        std::cerr << "cannot open trace file: " << trace_path << "\n";
        return 1;
    }
    const mcran::TraceFile trace = mcran::read_trace(in);
    const nlohmann::ordered_json report = mcran::replay_trace(trace);
    const fs::path report_path = fs::path(out_dir) / "replay-report.json";
    write_file(report_path, report.dump(2) + "\n");
    std::cout << "replayed " << trace.events.size() << " events -> "
              << report_path.string() << "\n";
    return 0;
}

int cmd_position_demo(const std::string& scenario_path, int draws,
                      const std::string& out_dir) {
    const mcran::Scenario scenario = mcran::load_scenario_file(scenario_path);
    if (!scenario.positioning) {
        std::cerr << "scenario has no positioning section\n";
        return 1;
    }
    mcran::PositioningSpec spec = *scenario.positioning;
    if (draws > 0) {
        spec.draws = draws;
    }

    std::vector<mcran::Anchor> anchors = spec.anchors;
    if (spec.improve_region) {
        anchors = mcran::improve_placement(anchors, *spec.improve_region,
                                           spec.targets, spec.improve_step_m,
                                           spec.method)
                      .anchors;
    }
    mcran::McBatchParams params;
    params.sigma_s = spec.sigma_s;
    params.epochs = spec.epochs;
    params.method = spec.method;
    params.seed = scenario.seed;
    params.anchor_offset_range_s = spec.anchor_offset_range_s;
    const std::vector<mcran::McDraw> records =
        mcran::position_error_batch(anchors, spec.targets, params, spec.draws);

    std::ostringstream rows;
    rows << "draw,truth_x,truth_y,truth_z,est_x,est_y,est_z,"
            "h_err_m,v_err_m,degenerate\n";
    std::vector<double> h, v;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const mcran::McDraw& r = records[i];
        rows << i << ',' << mcran::format_double(r.truth.x) << ','
             << mcran::format_double(r.truth.y) << ','
             << mcran::format_double(r.truth.z) << ','
             << mcran::format_double(r.estimate.x) << ','
             << mcran::format_double(r.estimate.y) << ','
             << mcran::format_double(r.estimate.z) << ','
             << mcran::format_double(r.degenerate ? 0.0 : r.horizontal_error_m)
             << ','
             << mcran::format_double(r.degenerate ? 0.0 : r.vertical_error_m)
             << ',' << (r.degenerate ? 1 : 0) << '\n';
        if (!r.degenerate) {
            h.push_back(r.horizontal_error_m);
            v.push_back(r.vertical_error_m);
        }
    }
    write_file(fs::path(out_dir) / "position-draws.csv", rows.str());

    std::ostringstream cdf;
    cdf << "percentile,horizontal_m,vertical_m\n";
    for (int p = 1; p <= 100; ++p) {
        cdf << p << ',' << mcran::format_double(mcran::percentile(h, p)) << ','
            << mcran::format_double(mcran::percentile(v, p)) << '\n';
    }
    write_file(fs::path(out_dir) / "position-cdf.csv", cdf.str());

    std::cout << scenario.name << ": " << records.size() << " draws, p67 "
              << mcran::percentile(h, 67) << " m horizontal / "
              << mcran::percentile(v, 67) << " m vertical -> " << out_dir
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic system simulator for mission-critical 5G RAN "
                 "scenarios"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string trace_path;
    std::string out_dir = default_out_dir();
    std::vector<std::uint64_t> seeds;
    bool with_trace = false;
    int draws = 0;

    CLI::App* validate = app.add_subcommand("validate", "Validate a scenario file");
    validate->add_option("--scenario", scenario_path, "Scenario JSON file")
        ->required();

    CLI::App* run = app.add_subcommand("run", "Run a scenario");
    run->add_option("--scenario", scenario_path, "Scenario JSON file")
        ->required();
    run->add_option("--seed", seeds,
                    "Seed override; repeat for parallel replicas");
    run->add_option("--out", out_dir, "Output directory");
    run->add_flag("--trace", with_trace, "Also write the per-event CSV trace");

    CLI::App* replay = app.add_subcommand("replay", "Re-derive metrics from a trace");
    replay->add_option("--trace", trace_path, "Trace CSV file")->required();
    replay->add_option("--out", out_dir, "Output directory");

    CLI::App* demo = app.add_subcommand("position-demo",
                                        "Positioning error study over a scenario");
    demo->add_option("--scenario", scenario_path, "Scenario JSON file")
        ->required();
    demo->add_option("--draws", draws, "Monte-Carlo draws");
    demo->add_option("--out", out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            return cmd_validate(scenario_path);
        }
        if (run->parsed()) {
            return cmd_run(scenario_path, seeds, out_dir, with_trace);
        }
        if (replay->parsed()) {
            return cmd_replay(trace_path, out_dir);
        }
        if (demo->parsed()) {
            return cmd_position_demo(scenario_path, draws, out_dir);
        }
    } catch (const mcran::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const mcran::ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
