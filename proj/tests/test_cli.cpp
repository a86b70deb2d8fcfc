#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <unistd.h>

#include "bellsim/report.hpp"
#include "bellsim/scenario_io.hpp"
#include "bellsim/spacetime.hpp"
#include "test_support.hpp"

using testing_support::run_command;

namespace {

std::string cli() {
    return std::string("\"") + BELLSIM_CLI_PATH + "\"";
}

std::string scenario(const std::string& name) {
    return std::string("\"") + BELLSIM_SCENARIO_DIR + "/" + name + "\"";
}

std::string temp_path(const std::string& stem) {
    return "/tmp/bellsim_cli_" + std::to_string(getpid()) + "_" + stem;
}

double json_number(const std::string& text, const std::string& key) {
    const std::string needle = "\"" + key + "\": ";
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    return std::stod(text.substr(pos + needle.size()));
}

int line_count(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("bound prints the static-frame value in scientific notation") {
    const auto res = run_command(cli() + " bound --length-m 10600 --jitter-s 5e-12");
    REQUIRE(res.exit_code == 0);
    CHECK(res.output == "7.07156e+06\n");
    const double value = std::stod(res.output);
    CHECK(value == Catch::Approx(7.0715588e6).epsilon(0.005));
}

TEST_CASE("bound agrees with the library for a moving candidate frame") {
    const double rho = std::numbers::pi / 3.0;
    const auto res = run_command(cli() + " bound --length-m 10600 --jitter-s 5e-12"
                                         " --beta 1.23e-3 --rho " +
                                 std::to_string(rho));
    REQUIRE(res.exit_code == 0);
    const bellsim::VqiBound expected = bellsim::vqi_bound({10600.0, 5e-12, 1.23e-3, rho});
    REQUIRE(!expected.divergent);
    CHECK(res.output == bellsim::sci6(expected.bound_c) + "\n");

    const auto orthogonal = run_command(cli() + " bound --length-m 10600 --jitter-s 5e-12"
                                                " --beta 1.23e-3 --rho 1.5707963267948966");
    REQUIRE(orthogonal.exit_code == 0);
    CHECK(orthogonal.output == "inf\n");
}

TEST_CASE("bound renders json and csv") {
    const auto js = run_command(cli() + " bound --length-m 10600 --jitter-s 5e-12 --format json");
    REQUIRE(js.exit_code == 0);
    CHECK(js.output.find("\"bound_c\": 7.07156e+06") != std::string::npos);
    CHECK(js.output.find("\"divergent\": false") != std::string::npos);
    CHECK(js.output.find("\"length_m\": 1.06000e+04") != std::string::npos);

    const auto diverged = run_command(cli() + " bound --length-m 10600 --jitter-s 5e-12"
                                              " --beta 1.23e-3 --rho 1.5707963267948966"
                                              " --format json");
    REQUIRE(diverged.exit_code == 0);
    CHECK(diverged.output.find("\"bound_c\": null") != std::string::npos);
    CHECK(diverged.output.find("\"divergent\": true") != std::string::npos);

    const auto csv = run_command(cli() + " bound --length-m 10600 --jitter-s 5e-12 --format csv");
    REQUIRE(csv.exit_code == 0);
    CHECK(csv.output == "rho_rad,bound_c,divergent\n0.00000e+00,7.07156e+06,0\n");
}

TEST_CASE("a sweep emits one csv row per sample and is reproducible") {
    const std::string cmd = cli() + " bound --length-m 10600 --jitter-s 5e-12"
                                    " --beta 1.23e-3 --rho-sweep 101 --format csv";
    const auto first = run_command(cmd);
    REQUIRE(first.exit_code == 0);
    CHECK(line_count(first.output) == 102);
    CHECK(first.output.rfind("rho_rad,bound_c,divergent\n", 0) == 0);
    CHECK(first.output.find("\n0.00000e+00,") != std::string::npos);
    CHECK(first.output.find("\n3.14159e+00,") != std::string::npos);
    // Sample 50 sits exactly orthogonal to the motion, where no finite
    // influence speed can restore the correlations.
    CHECK(first.output.find("\n1.57080e+00,inf,1\n") != std::string::npos);

    const auto second = run_command(cmd);
    CHECK(second.output == first.output);
}

TEST_CASE("bound rejects contradictory or unusable requests") {
    const auto json_sweep = run_command(cli() + " bound --length-m 10600 --jitter-s 5e-12"
                                                " --rho-sweep 10 --format json");
    CHECK(json_sweep.exit_code == 1);
    CHECK(json_sweep.output.find("sweeps are emitted as CSV") != std::string::npos);

    const auto both = run_command(cli() + " bound --length-m 10600 --jitter-s 5e-12"
                                          " --rho 0.5 --rho-sweep 10");
    CHECK(both.exit_code == 1);
    CHECK(both.output.find("excludes") != std::string::npos);

    const auto missing = run_command(cli() + " bound --length-m 10600");
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.find("--jitter-s") != std::string::npos);

    const auto lightlike = run_command(cli() + " bound --length-m 10600 --jitter-s 5e-12"
                                               " --beta 1.0 --rho 0.5");
    CHECK(lightlike.exit_code == 1);
    CHECK(lightlike.output.find("error:") != std::string::npos);
}

TEST_CASE("run reports a scenario and is byte-stable") {
    const std::string cmd = cli() + " run --scenario " + scenario("fig1_standard.json") +
                            " --trials 20000 --seed 11 --workers 4";
    const auto res = run_command(cmd);
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("\"scenario\": \"fig1_standard\"") != std::string::npos);
    CHECK(res.output.find("\"model\": \"STANDARD_QM\"") != std::string::npos);
    CHECK(res.output.find("\"violates_local\": true") != std::string::npos);
    CHECK(json_number(res.output, "trials") == 20000.0);
    CHECK(json_number(res.output, "seed") == 11.0);
    const double abs_s = json_number(res.output, "abs_s");
    CHECK(abs_s > 2.70);
    CHECK(abs_s < 2.95);

    const auto again = run_command(cmd);
    CHECK(again.output == res.output);

    const auto csv = run_command(cmd + " --format csv");
    REQUIRE(csv.exit_code == 0);
    CHECK(csv.output.rfind("key,value\n", 0) == 0);
    CHECK(csv.output.find("model,STANDARD_QM\n") != std::string::npos);
    CHECK(csv.output.find("\nabs_s,") != std::string::npos);
    CHECK(csv.output.find("\nviolates_local,1\n") != std::string::npos);
}

TEST_CASE("run writes the same bytes to a file as to stdout") {
    const std::string out = temp_path("summary.json");
    const std::string base = cli() + " run --scenario " + scenario("fig1_standard.json") +
                             " --trials 15000 --seed 3";
    const auto direct = run_command(base);
    REQUIRE(direct.exit_code == 0);

    const auto filed = run_command(base + " --out \"" + out + "\"");
    REQUIRE(filed.exit_code == 0);
    CHECK(filed.output.empty());
    std::ifstream in(out, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == direct.output);
    std::remove(out.c_str());
}

TEST_CASE("run distinguishes usage errors from starved statistics") {
    const auto missing = run_command(cli() + " run --scenario /nonexistent/sc.json");
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.find("/nonexistent/sc.json") != std::string::npos);

    const std::string bad = temp_path("bad.json");
    std::ofstream(bad) << "{ not json";
    const auto malformed = run_command(cli() + " run --scenario \"" + bad + "\"");
    CHECK(malformed.exit_code == 1);
    CHECK(malformed.output.find("error:") != std::string::npos);
    std::remove(bad.c_str());

    bellsim::ScenarioFile starved;
    starved.settings = {0.0, 1.5707963267948966, 0.7853981633974483, -0.7853981633974483};
    starved.geometry.separation_m = 10600.0;
    starved.geometry.timing_jitter_s = 5e-12;
    starved.efficiency = {0.05, 0.05};
    starved.trials = 300;
    starved.seed = 9;
    const std::string path = temp_path("starved.json");
    std::ofstream(path) << bellsim::serialize_scenario(starved);
    const auto res = run_command(cli() + " run --scenario \"" + path + "\"");
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("fewer than 2 coincidences") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("before-before answers both ways and reports the flip speed") {
    const std::string base = cli() + " before-before --length-m 10600 --alignment-m 0.001";
    const auto fast = run_command(base + " --speed-mps 100");
    REQUIRE(fast.exit_code == 0);
    CHECK(fast.output.find("before_before = TRUE") != std::string::npos);
    CHECK(fast.output.find("required_speed_mps = 2.82823e+01") != std::string::npos);
    CHECK(fast.output.find("delta_frame_a_s = 3.33564e-12") != std::string::npos);

    const auto slow = run_command(base + " --speed-mps 10");
    REQUIRE(slow.exit_code == 0);
    CHECK(slow.output.find("before_before = FALSE") != std::string::npos);

    const auto parked = run_command(cli() + " before-before --length-m 10600 --speed-mps 0");
    REQUIRE(parked.exit_code == 0);
    CHECK(parked.output.find("before_before = FALSE") != std::string::npos);
    CHECK(parked.output.find("slack_s = 0.00000e+00") != std::string::npos);
    CHECK(parked.output.find("required_speed_mps = 0.00000e+00") != std::string::npos);
}

TEST_CASE("top-level usage is self-describing") {
    const auto help = run_command(cli() + " --help");
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("before-before") != std::string::npos);
    CHECK(help.output.find("bound") != std::string::npos);

    CHECK(run_command(cli() + " frobnicate").exit_code == 1);
    CHECK(run_command(cli()).exit_code == 1);
    CHECK(run_command(cli() + " run --scenario x --workers 0").exit_code == 1);
}
