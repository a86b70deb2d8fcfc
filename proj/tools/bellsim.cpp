// bellsim: run measurement-record scenarios, evaluate influence-speed
// bounds and check the before-before predicate from the command line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bellsim/engine.hpp"
#include "bellsim/report.hpp"
#include "bellsim/scenario_io.hpp"
#include "bellsim/spacetime.hpp"

namespace {

int write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 1;
    }
    out << text;
    return 0;
}

struct RunArgs {
    std::string scenario_path;
    std::string out_path;
    std::string format = "json";
    std::optional<std::int64_t> trials;
    std::optional<std::uint64_t> seed;
    int workers = 1;
};

int cmd_run(const RunArgs& args) {
    try {
        bellsim::ScenarioFile file = bellsim::load_scenario_file(args.scenario_path);
        if (args.trials) file.trials = *args.trials;
        if (args.seed) file.seed = *args.seed;
        const std::string name = std::filesystem::path(args.scenario_path).stem().string();
        const bellsim::Scenario scenario = bellsim::to_scenario(file, name);
        const bellsim::ResultSet results = bellsim::run(scenario, args.workers);
        const bellsim::Summary summary = bellsim::summarize(scenario, results);
        const std::string text = args.format == "csv" ? bellsim::summary_to_csv(summary)
                                                      : bellsim::summary_to_json(summary);
        return write_output(text, args.out_path);
    } catch (const bellsim::InsufficientStatisticsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

struct BoundArgs {
    double length_m = 0.0;
    double jitter_s = 0.0;
    double beta = 0.0;
    double rho_rad = 0.0;
    int sweep_samples = 0;
    std::string out_path;
    std::string format = "plain";
};

int cmd_bound(const BoundArgs& args) {
    try {
        if (args.sweep_samples > 0) {
            if (args.format != "plain" && args.format != "csv")
                throw std::invalid_argument("sweeps are emitted as CSV");
            const auto sweep = bellsim::vqi_bound_sweep(args.length_m, args.jitter_s, args.beta,
                                                        args.sweep_samples);
            return write_output(bellsim::sweep_to_csv(sweep), args.out_path);
        }
        const bellsim::BoundInput in{args.length_m, args.jitter_s, args.beta, args.rho_rad};
        const bellsim::VqiBound b = bellsim::vqi_bound(in);
        std::string text;
        if (args.format == "json") {
            text = bellsim::bound_to_json(b, in);
        } else if (args.format == "csv") {
            text = "rho_rad,bound_c,divergent\n" + bellsim::sci6(in.rho_rad) + "," +
                   bellsim::sci6(b.bound_c) + "," + (b.divergent ? "1" : "0") + "\n";
        } else {
            text = bellsim::sci6(b.bound_c) + "\n";
        }
        return write_output(text, args.out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

struct BeforeBeforeArgs {
    double length_m = 0.0;
    double speed_mps = 0.0;
    double alignment_m = 0.0;
    double jitter_s = 0.0;
    std::string out_path;
};

int cmd_before_before(const BeforeBeforeArgs& args) {
    try {
        using namespace bellsim;
        const double slack_s = args.jitter_s + args.alignment_m / speed_of_light_mps;
        const SpacetimeEvent event_a{0.0, {0.0, 0.0, 0.0}};
        const SpacetimeEvent event_b{slack_s, {args.length_m, 0.0, 0.0}};
        const Frame frame_a{};
        const Frame frame_b{Vec3{args.speed_mps, 0.0, 0.0}};
        if (!(args.length_m > 0.0)) throw std::invalid_argument("length must be > 0");

        const double a_leads = boost(event_b, frame_a).t - boost(event_a, frame_a).t;
        const double b_leads = boost(event_a, frame_b).t - boost(event_b, frame_b).t;
        const bool verdict = before_before(event_a, event_b, frame_a, frame_b, 0.0);

        std::string text;
        text += std::string("before_before = ") + (verdict ? "TRUE" : "FALSE") + "\n";
        text += "delta_frame_a_s = " + sci6(a_leads) + "\n";
        text += "delta_frame_b_s = " + sci6(b_leads) + "\n";
        text += "slack_s = " + sci6(slack_s) + "\n";
        const double required =
            slack_s > 0.0 ? required_relative_speed(args.length_m, slack_s) : 0.0;
        text += "required_speed_mps = " + sci6(required) + "\n";
        return write_output(text, args.out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale laboratory for long-distance pair-correlation scenarios"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Run a scenario file and report its statistics");
    run->add_option("--scenario", run_args.scenario_path, "Scenario JSON file")->required();
    run->add_option("--out", run_args.out_path, "Output file (default stdout)");
    run->add_option("--format", run_args.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    std::int64_t trials_override = 0;
    std::uint64_t seed_override = 0;
    CLI::Option* trials_opt = run->add_option("--trials", trials_override, "Override trial count");
    CLI::Option* seed_opt = run->add_option("--seed", seed_override, "Override seed");
    run->add_option("--workers", run_args.workers, "Worker threads")->check(CLI::Range(1, 256));

    BoundArgs bound_args;
    CLI::App* bound = app.add_subcommand("bound", "Influence-speed lower bound in units of c");
    bound->add_option("--length-m", bound_args.length_m, "Detection separation")->required();
    bound->add_option("--jitter-s", bound_args.jitter_s, "Simultaneity jitter")->required();
    bound->add_option("--beta", bound_args.beta, "Candidate frame speed, v/c");
    CLI::Option* rho_opt = bound->add_option("--rho", bound_args.rho_rad,
                                             "Angle between frame motion and the axis, radians");
    CLI::Option* sweep_opt =
        bound->add_option("--rho-sweep", bound_args.sweep_samples, "Sample count over [0, pi]")
            ->check(CLI::Range(2, 10000000));
    sweep_opt->excludes(rho_opt);
    bound->add_option("--out", bound_args.out_path, "Output file (default stdout)");
    bound->add_option("--format", bound_args.format, "plain, json or csv")
        ->check(CLI::IsMember({"plain", "json", "csv"}));

    BeforeBeforeArgs bb_args;
    CLI::App* bb = app.add_subcommand("before-before",
                                      "Do both devices act first in their own rest frames?");
    bb->add_option("--length-m", bb_args.length_m, "Station separation")->required();
    bb->add_option("--speed-mps", bb_args.speed_mps, "Device speed along the axis")->required();
    bb->add_option("--alignment-m", bb_args.alignment_m, "Path-length alignment uncertainty");
    bb->add_option("--jitter-s", bb_args.jitter_s, "Extra timing jitter");
    bb->add_option("--out", bb_args.out_path, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (run->parsed()) {
        if (*trials_opt) run_args.trials = trials_override;
        if (*seed_opt) run_args.seed = seed_override;
        return cmd_run(run_args);
    }
    if (bound->parsed()) return cmd_bound(bound_args);
    if (bb->parsed()) return cmd_before_before(bb_args);
    return 1;
}
