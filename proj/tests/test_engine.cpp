#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "bellsim/engine.hpp"
#include "test_support.hpp"

using namespace bellsim;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double c = speed_of_light_mps;
constexpr double tsirelson = 2.8284271247461903;

SettingQuad canonical_quad() {
    return {AnalyzerSetting(0.0), AnalyzerSetting(pi / 2), AnalyzerSetting(pi / 4),
            AnalyzerSetting(-pi / 4)};
}

Scenario base_scenario(std::int64_t trials, std::uint64_t seed) {
    Scenario s;
    s.name = "bench";
    s.state = TwoQubitState::singlet();
    s.model = CollapseModel{};
    s.quad = canonical_quad();
    s.station_a.choice_event = {0.0, {0.0, 0.0, 0.0}};
    s.station_a.trigger_event = {1e-9, {0.0, 0.0, 0.0}};
    s.station_b.choice_event = {5e-12, {10600.0, 0.0, 0.0}};
    s.station_b.trigger_event = {1e-9 + 5e-12, {10600.0, 0.0, 0.0}};
    s.trials = trials;
    s.seed = seed;
    return s;
}

Scenario wheel_scenario(CollapseModelKind kind, std::int64_t trials, std::uint64_t seed) {
    Scenario s = base_scenario(trials, seed);
    const double slack = 0.001 / c;
    s.station_b.choice_event.t = slack;
    s.station_b.trigger_event.t = 1e-9 + slack;
    s.station_b.trigger_frame = Frame(Vec3{100.0, 0.0, 0.0});
    s.model = CollapseModel{kind, Frame{}, 1e4};
    return s;
}

} // namespace

TEST_CASE("a standard run violates the inequality at the optimal quad") {
    const Scenario s = base_scenario(200000, 42);
    const ResultSet r = run(s, 2);
    const Summary sum = summarize(s, r);

    CHECK(sum.model == "STANDARD_QM");
    CHECK(sum.trials == 200000);
    CHECK(sum.coincidences == 200000);  // unit efficiency
    CHECK(sum.detected_pair_fraction == 1.0);
    CHECK(sum.abs_s == Catch::Approx(tsirelson).margin(0.04));
    CHECK(sum.violates_local);
    REQUIRE(sum.z_defined);
    CHECK(sum.z > 3.0);
    CHECK(sum.verdicts.size() == 1);
    CHECK(sum.verdicts[0].first == "STANDARD");
    CHECK(sum.verdicts[0].second == 200000);

    // Pair labels carry the canonicalized settings.
    CHECK(sum.pairs[0].label == "(a,b)");
    CHECK(sum.pairs[1].setting_b_rad == Catch::Approx(1.75 * pi));
    CHECK(sum.pairs[2].setting_a_rad == Catch::Approx(pi / 2));

    std::int64_t assigned = 0;
    for (const auto& p : r.pairs) assigned += p.assigned;
    CHECK(assigned == 200000);
}

TEST_CASE("correlation estimates converge at the advertised error bar") {
    const double expected = -1.0 / std::sqrt(2.0);  // E(a, b) at the canonical quad
    int inside = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const ResultSet r = run(base_scenario(20000, seed), 1);
        const CorrelationEstimate& est = r.estimates[0];
        if (std::abs(est.e - expected) < 4.0 * est.stderr_) ++inside;
    }
    CHECK(inside >= 99);
}

TEST_CASE("setting choices are independent and unbiased") {
    const Scenario s = base_scenario(200000, 7);
    const ResultSet r = run(s, 4);

    std::vector<double> assigned;
    for (const auto& p : r.pairs) assigned.push_back(double(p.assigned));
    const std::vector<double> expected(4, double(s.trials) / 4.0);
    CHECK(testing_support::chi_square(assigned, expected) < testing_support::chi2_99_df3);
}

TEST_CASE("the hidden variable never leaks into the setting choice") {
    Scenario s = base_scenario(50000, 11);
    s.model = LhvModel{LhvModelKind::deterministic_sign, 0.0};

    std::vector<std::int64_t> indices(std::size_t(s.trials));
    std::iota(indices.begin(), indices.end(), 0);
    const std::vector<TrialRecord> records = replay(s, indices);

    std::vector<std::vector<double>> table(2, std::vector<double>(8, 0.0));
    for (const TrialRecord& rec : records) {
        REQUIRE(rec.has_lambda);
        const int octant = std::min(7, int(rec.lambda / (pi / 4)));
        table[rec.primed_a ? 1 : 0][std::size_t(octant)] += 1.0;
    }
    CHECK(testing_support::chi_square_independence(table) < testing_support::chi2_99_df7);
}

TEST_CASE("results are identical for any worker count") {
    const Scenario s = base_scenario(30000, 99);
    const ResultSet r1 = run(s, 1);
    const ResultSet r2 = run(s, 2);
    const ResultSet r7 = run(s, 7);
    const ResultSet r300 = run(s, 300);  // clamped internally

    const auto same = [](const ResultSet& x, const ResultSet& y) {
        for (int p = 0; p < 4; ++p) {
            REQUIRE(x.pairs[p].assigned == y.pairs[p].assigned);
            REQUIRE(x.pairs[p].pp == y.pairs[p].pp);
            REQUIRE(x.pairs[p].pm == y.pairs[p].pm);
            REQUIRE(x.pairs[p].mp == y.pairs[p].mp);
            REQUIRE(x.pairs[p].mm == y.pairs[p].mm);
            REQUIRE(x.estimates[p].e == y.estimates[p].e);
        }
        REQUIRE(x.singles_a == y.singles_a);
        REQUIRE(x.singles_b == y.singles_b);
        REQUIRE(x.chsh.s == y.chsh.s);
        REQUIRE(x.chsh_stderr == y.chsh_stderr);
    };
    same(r1, r2);
    same(r1, r7);
    same(r1, r300);
}

TEST_CASE("different seeds give different samples") {
    const ResultSet r1 = run(base_scenario(20000, 1), 2);
    const ResultSet r2 = run(base_scenario(20000, 2), 2);
    CHECK(r1.chsh.s != r2.chsh.s);
}

TEST_CASE("replay reproduces exactly what the full run counted") {
    const Scenario s = base_scenario(2000, 13);
    const ResultSet r = run(s, 3);

    std::vector<std::int64_t> indices(std::size_t(s.trials));
    std::iota(indices.begin(), indices.end(), 0);
    const std::vector<TrialRecord> records = replay(s, indices);

    std::array<PairTally, 4> pairs{};
    for (const TrialRecord& rec : records) {
        const int p = (rec.primed_a ? 2 : 0) + (rec.primed_b ? 1 : 0);
        ++pairs[std::size_t(p)].assigned;
        if (detected(rec.outcome_a) && detected(rec.outcome_b)) {
            const bool ap = rec.outcome_a == Outcome::plus;
            const bool bp = rec.outcome_b == Outcome::plus;
            if (ap && bp) ++pairs[std::size_t(p)].pp;
            else if (ap) ++pairs[std::size_t(p)].pm;
            else if (bp) ++pairs[std::size_t(p)].mp;
            else ++pairs[std::size_t(p)].mm;
        }
    }
    for (int p = 0; p < 4; ++p) {
        CHECK(pairs[std::size_t(p)].assigned == r.pairs[std::size_t(p)].assigned);
        CHECK(pairs[std::size_t(p)].pp == r.pairs[std::size_t(p)].pp);
        CHECK(pairs[std::size_t(p)].pm == r.pairs[std::size_t(p)].pm);
        CHECK(pairs[std::size_t(p)].mp == r.pairs[std::size_t(p)].mp);
        CHECK(pairs[std::size_t(p)].mm == r.pairs[std::size_t(p)].mm);
    }

    const std::vector<TrialRecord> again = replay(s, {5, 5, 1999});
    CHECK(again[0].outcome_a == again[1].outcome_a);
    CHECK(again[0].outcome_b == again[1].outcome_b);
    CHECK(again[2].index == 1999);
    CHECK_THROWS_AS(replay(s, {2000}), std::out_of_range);
    CHECK_THROWS_AS(replay(s, {-1}), std::out_of_range);
}

TEST_CASE("an infinitely fast influence reproduces the standard run trial by trial") {
    const Scenario standard = base_scenario(5000, 21);
    Scenario preferred = base_scenario(5000, 21);
    preferred.model = CollapseModel{CollapseModelKind::preferred_frame, Frame{}, 1e8};

    std::vector<std::int64_t> indices(5000);
    std::iota(indices.begin(), indices.end(), 0);
    const auto lhs = replay(standard, indices);
    const auto rhs = replay(preferred, indices);
    for (std::size_t k = 0; k < lhs.size(); ++k) {
        REQUIRE(lhs[k].outcome_a == rhs[k].outcome_a);
        REQUIRE(lhs[k].outcome_b == rhs[k].outcome_b);
        REQUIRE(lhs[k].primed_a == rhs[k].primed_a);
        REQUIRE(lhs[k].primed_b == rhs[k].primed_b);
    }
}

TEST_CASE("a suppressed trial verdict erases the violation") {
    Scenario s = base_scenario(200000, 5);
    s.model = CollapseModel{CollapseModelKind::preferred_frame, Frame{}, 1e4};
    const ResultSet r = run(s, 4);
    CHECK(r.verdict_counts[int(VerdictReason::influence_too_slow)] == s.trials);
    CHECK(r.chsh.abs_s < 0.05);
    CHECK(!r.chsh.violates_local);
}

TEST_CASE("detector losses thin the coincidences and flag starved pairs") {
    Scenario s = base_scenario(3000, 17);
    s.efficiency_a = 0.3;
    s.efficiency_b = 0.3;
    const ResultSet r = run(s, 2);
    CHECK(r.coincidences < 500);
    CHECK(r.detected_pair_fraction < 0.2);
    for (const auto& est : r.estimates) CHECK(est.undersampled);
    const Summary sum = summarize(s, r);
    for (const auto& p : sum.pairs) CHECK(p.undersampled);

    s.efficiency_a = 0.05;
    s.efficiency_b = 0.05;
    s.trials = 500;
    CHECK_THROWS_AS(run(s, 1), InsufficientStatisticsError);
}

TEST_CASE("scenario validation rejects nonsense") {
    Scenario s = base_scenario(0, 1);
    CHECK_THROWS_AS(run(s, 1), std::invalid_argument);
    s.trials = 100;
    s.efficiency_a = 0.0;
    CHECK_THROWS_AS(run(s, 1), std::invalid_argument);
    s.efficiency_a = 1.2;
    CHECK_THROWS_AS(run(s, 1), std::invalid_argument);
}

TEST_CASE("local models run through the same engine") {
    Scenario s = base_scenario(100000, 23);
    s.model = LhvModel{LhvModelKind::deterministic_sign, 0.0};
    const ResultSet r = run(s, 4);
    CHECK(r.verdict_counts[int(VerdictReason::local_hidden_variable)] == s.trials);
    CHECK(r.detected_pair_fraction == 1.0);
    CHECK(r.chsh.abs_s <= 2.0 + 4.0 * r.chsh_stderr);
    CHECK(summarize(s, r).model == "LHV_DETERMINISTIC_SIGN");

    s.model = LhvModel{LhvModelKind::detection_loophole, 0.9};
    const ResultSet loop = run(s, 4);
    CHECK(loop.singles_a[2] > 0);  // no-detection slot
    CHECK(loop.detected_pair_fraction < 0.5);
    // The engine's coincidence estimate is the post-selected one, so this
    // local model shows up as a violation until the full sample is examined.
    CHECK(loop.chsh.abs_s > 2.0);
    CHECK(summarize(s, loop).model == "LHV_DETECTION_LOOPHOLE");
}

TEST_CASE("the engine matches the standalone local-model estimator") {
    Scenario s = base_scenario(40000, 31);
    s.model = LhvModel{LhvModelKind::detection_loophole, 0.6};
    const ResultSet r = run(s, 2);
    const PostselectedChsh direct = postselected_chsh(
        LhvModel{LhvModelKind::detection_loophole, 0.6}, s.quad, s.trials, s.seed);
    // Same seed, same lanes, same trials: the two estimators agree exactly.
    CHECK(r.chsh.s == direct.postselected.s);
    for (int p = 0; p < 4; ++p)
        CHECK(r.estimates[std::size_t(p)].n == direct.coincidences[std::size_t(p)]);
}

TEST_CASE("outcome marginals ignore the remote setting") {
    const ResultSet r = run(base_scenario(400000, 3), 4);
    const auto by_remote_z = [](const std::array<std::array<std::int64_t, 3>, 2>& split) {
        const std::int64_t n0 = split[0][0] + split[0][1] + split[0][2];
        const std::int64_t n1 = split[1][0] + split[1][1] + split[1][2];
        return testing_support::two_proportion_z(split[0][0], n0, split[1][0], n1);
    };
    CHECK(by_remote_z(r.a_by_remote) < 3.0);
    CHECK(by_remote_z(r.b_by_remote) < 3.0);
}

TEST_CASE("split-state scenarios tally the port detectors") {
    const Scenario s = wheel_scenario(CollapseModelKind::per_frame_state_vector, 100000, 29);
    const ResultSet r = run(s, 4);
    REQUIRE(r.multi_psi_active);
    CHECK(r.multi_psi.trials == s.trials);
    CHECK(double(r.multi_psi.double_detections) / double(s.trials) ==
          Catch::Approx(0.25).margin(0.006));
    CHECK(double(r.multi_psi.zero_detections) / double(s.trials) ==
          Catch::Approx(0.25).margin(0.006));
    CHECK(r.verdict_counts[int(VerdictReason::distinct_frames)] == s.trials);
    // Outcomes at the two stations come from unrelated state vectors here,
    // so the correlator sits at zero instead of the quantum value.
    CHECK(r.chsh.abs_s < 0.07);
    CHECK(r.coincidences == s.trials);

    const Summary sum = summarize(s, r);
    CHECK(sum.multi_psi);
    CHECK(sum.multi.moving_fired == r.multi_psi.moving_fired);
    CHECK(sum.model == "PER_FRAME_STATE_VECTOR");

    const std::vector<TrialRecord> recs = replay(s, {0, 1, 2, 3});
    for (const auto& rec : recs) {
        REQUIRE(rec.multi_psi);
        REQUIRE(rec.verdict.reason == VerdictReason::distinct_frames);
    }
}

TEST_CASE("split-state scenarios reject ambiguous motion") {
    Scenario two_wheels = wheel_scenario(CollapseModelKind::per_frame_state_vector, 1000, 1);
    two_wheels.station_a.trigger_frame = Frame(Vec3{50.0, 0.0, 0.0});
    CHECK_THROWS_AS(run(two_wheels, 1), std::invalid_argument);

    Scenario moving_chooser = wheel_scenario(CollapseModelKind::per_frame_state_vector, 1000, 1);
    moving_chooser.station_b.trigger_frame = Frame{};
    moving_chooser.station_b.choice_frame = Frame(Vec3{100.0, 0.0, 0.0});
    CHECK_THROWS_AS(run(moving_chooser, 1), std::invalid_argument);
}

TEST_CASE("model labels cover every hypothesis") {
    Scenario s = base_scenario(10, 1);
    s.model = CollapseModel{CollapseModelKind::trigger_device_frame, Frame{}, 2.0};
    CHECK(model_label(s) == "TRIGGER_DEVICE_FRAME");
    s.model = CollapseModel{CollapseModelKind::choice_device_frame, Frame{}, 2.0};
    CHECK(model_label(s) == "CHOICE_DEVICE_FRAME");
    s.model = CollapseModel{CollapseModelKind::preferred_frame, Frame{}, 2.0};
    CHECK(model_label(s) == "PREFERRED_FRAME");
    CHECK(std::string(verdict_label(VerdictReason::before_before_trigger)) ==
          "BEFORE_BEFORE_TRIGGER");
    CHECK(std::string(verdict_label(VerdictReason::distinct_frames)) == "DISTINCT_FRAMES");
}
