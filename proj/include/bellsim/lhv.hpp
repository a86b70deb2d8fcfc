#pragma once

// Local hidden-variable models over a shared angle lambda, including a
// detection-threshold variant that fakes nonlocal correlations once
// non-detections are post-selected away. Sampling both the post-selected
// and the full-sample CHSH side by side is what exposes the trick.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bellsim/bell.hpp"
#include "bellsim/errors.hpp"
#include "bellsim/qstate.hpp"
#include "bellsim/rng.hpp"

namespace bellsim {

/// The shared hidden cause carried by both particles of one pair.
struct HiddenVariable {
    HiddenVariable() = default;
    explicit HiddenVariable(double lam) : lambda(canonical_angle(lam)) {}
    double lambda = 0.0;
};

enum class LhvModelKind {
    deterministic_sign,   // outcome = sign of cos(setting - lambda), always detected
    detection_loophole,   // same sign rule, but |cos| < tau reports no detection
};

struct LhvModel {
    LhvModelKind kind = LhvModelKind::deterministic_sign;
    double tau = 0.0;  // detection threshold, only used by detection_loophole
};

inline HiddenVariable draw_lambda(PhiloxStream& stream) {
    return HiddenVariable(stream.uniform(0.0, two_pi));
}

/// Outcome of one station. Purely local: depends on the station's own
/// setting and the shared lambda, never on the remote side.
inline Outcome local_outcome(const LhvModel& model, Station station,
                             const AnalyzerSetting& setting, const HiddenVariable& hv) {
    if (model.kind == LhvModelKind::detection_loophole && !(model.tau >= 0.0 && model.tau <= 1.0))
        throw std::invalid_argument("tau must be in [0, 1]");
    const double c = std::cos(setting.radians - hv.lambda);
    if (model.kind == LhvModelKind::detection_loophole && std::abs(c) < model.tau)
        return Outcome::no_detection;
    const int sign = c >= 0.0 ? +1 : -1;  // sign(0) counts as +1
    return (station == Station::a ? sign : -sign) > 0 ? Outcome::plus : Outcome::minus;
}

/// Monte Carlo CHSH estimates for an LHV model under random setting choices.
/// `postselected` keeps only trials where both stations detected;
/// `full_sample` scores a missing detection as outcome 0 over all trials.
struct PostselectedChsh {
    ChshResult postselected;
    double stderr_s = 0.0;
    ChshResult full_sample;
    double full_sample_stderr_s = 0.0;
    double detected_fraction = 0.0;             // coincident pairs / trials
    std::array<std::int64_t, 4> coincidences{}; // per setting pair (ab, ab', a'b, a'b')
};

namespace detail {

inline const char* pair_name(int idx) {
    static constexpr const char* names[4] = {"(a,b)", "(a,b')", "(a',b)", "(a',b')"};
    return names[idx];
}

} // namespace detail

inline PostselectedChsh postselected_chsh(const LhvModel& model, const SettingQuad& quad,
                                          std::int64_t trials, std::uint64_t seed) {
    if (trials < 10000) throw std::invalid_argument("postselected_chsh needs at least 1e4 trials");

    std::array<std::int64_t, 4> assigned{}, coinc{}, sum_prod{};
    for (std::int64_t i = 0; i < trials; ++i) {
        auto sa = trial_stream(seed, i, Substream::setting_a);
        auto sb = trial_stream(seed, i, Substream::setting_b);
        auto sl = trial_stream(seed, i, Substream::hidden_variable);
        const bool primed_a = sa.coin();
        const bool primed_b = sb.coin();
        const HiddenVariable hv = draw_lambda(sl);
        const AnalyzerSetting& a = primed_a ? quad.a_prime : quad.a;
        const AnalyzerSetting& b = primed_b ? quad.b_prime : quad.b;
        const Outcome oa = local_outcome(model, Station::a, a, hv);
        const Outcome ob = local_outcome(model, Station::b, b, hv);
        const int p = (primed_a ? 2 : 0) + (primed_b ? 1 : 0);
        ++assigned[p];
        if (detected(oa) && detected(ob)) {
            ++coinc[p];
            sum_prod[p] += outcome_value(oa) * outcome_value(ob);
        }
    }

    PostselectedChsh out;
    std::array<double, 4> e_post{}, e_full{};
    double var_post = 0.0, var_full = 0.0;
    for (int p = 0; p < 4; ++p) {
        if (coinc[p] < 100)
            throw InsufficientStatisticsError(std::string("setting pair ") + detail::pair_name(p) +
                                              " has fewer than 100 coincidences");
        e_post[p] = double(sum_prod[p]) / double(coinc[p]);
        var_post += (1.0 - e_post[p] * e_post[p]) / double(coinc[p]);
        e_full[p] = double(sum_prod[p]) / double(assigned[p]);
        const double second_moment = double(coinc[p]) / double(assigned[p]);
        var_full += (second_moment - e_full[p] * e_full[p]) / double(assigned[p]);
        out.coincidences[p] = coinc[p];
        out.detected_fraction += double(coinc[p]);
    }
    out.postselected = chsh_value(e_post[0], e_post[1], e_post[2], e_post[3]);
    out.stderr_s = std::sqrt(var_post);
    out.full_sample = chsh_value(e_full[0], e_full[1], e_full[2], e_full[3]);
    out.full_sample_stderr_s = std::sqrt(var_full);
    out.detected_fraction /= double(trials);
    return out;
}

/// Deterministic quadrature of the post-selected pair statistics of the
/// threshold model over lambda, on the difference grid 2*pi*k/resolution.
/// overlap[k] is the probability both stations detect at setting difference
/// theta_k; expectation[k] the post-selected outcome-product mean (0 where
/// the overlap vanishes).
struct LoopholeTables {
    std::vector<double> overlap;
    std::vector<double> expectation;
};

inline LoopholeTables loophole_tables(double tau, int resolution) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in [0, 1]");
    if (resolution < 8) throw std::invalid_argument("resolution must be >= 8");
    const int per_cell = 2048;
    const int n = resolution * per_cell;
    std::vector<signed char> sgn(n);
    std::vector<signed char> det(n);
    for (int m = 0; m < n; ++m) {
        const double lam = two_pi * (m + 0.5) / n;
        const double c = std::cos(lam);
        sgn[m] = c >= 0.0 ? +1 : -1;
        det[m] = std::abs(c) >= tau ? 1 : 0;
    }
    LoopholeTables t;
    t.overlap.assign(resolution, 0.0);
    t.expectation.assign(resolution, 0.0);
    for (int k = 0; k < resolution; ++k) {
        // cos(theta_k - lambda_m) equals cos(lambda_m') with
        // m' = k*per_cell - m - 1 (mod n), so the same tables serve station A.
        std::int64_t both = 0, prod = 0;
        for (int m = 0; m < n; ++m) {
            int mp = k * per_cell - m - 1;
            mp %= n;
            if (mp < 0) mp += n;
            if (det[m] && det[mp]) {
                ++both;
                prod -= sgn[m] * sgn[mp];  // B carries the extra minus sign
            }
        }
        t.overlap[k] = double(both) / n;
        t.expectation[k] = both > 0 ? double(prod) / double(both) : 0.0;
    }
    return t;
}

struct CalibrationResult {
    LhvModel model;
    SettingQuad quad;
    double predicted_abs_s = 0.0;     // from the quadrature tables
    ChshResult postselected;          // Monte Carlo check of the winner
    double stderr_s = 0.0;
    double detected_fraction = 0.0;
    bool violates_local = false;
};

/// Sweeps detection thresholds and setting quads for the threshold model,
/// returning the combination with the largest post-selected |S|. The sweep
/// itself is exact quadrature; the winner is then validated by Monte Carlo
/// with `trials` pairs. A grid of {0} degenerates to the always-detect sign
/// model and reports no violation.
inline CalibrationResult calibrate_loophole(const std::vector<double>& tau_grid,
                                            int quad_resolution, std::int64_t trials,
                                            std::uint64_t seed = 0x5ca1ab1eULL) {
    if (tau_grid.empty()) throw std::invalid_argument("tau grid must not be empty");
    const int n = quad_resolution;

    double best_s = -1.0;
    double best_tau = tau_grid.front();
    std::array<int, 4> best_at{};
    for (double tau : tau_grid) {
        const LoopholeTables t = loophole_tables(tau, n);
        const auto diff = [n](int i, int j) {
            int d = (i - j) % n;
            return d < 0 ? d + n : d;
        };
        for (int ia = 0; ia < n; ++ia)
            for (int ip = 0; ip < n; ++ip)
                for (int ib = 0; ib < n; ++ib)
                    for (int jp = 0; jp < n; ++jp) {
                        const int d0 = diff(ia, ib), d1 = diff(ia, jp), d2 = diff(ip, ib),
                                  d3 = diff(ip, jp);
                        if (t.overlap[d0] < 1e-6 || t.overlap[d1] < 1e-6 ||
                            t.overlap[d2] < 1e-6 || t.overlap[d3] < 1e-6)
                            continue;
                        const double s = std::abs(t.expectation[d0] + t.expectation[d1] +
                                                  t.expectation[d2] - t.expectation[d3]);
                        if (s > best_s) {
                            best_s = s;
                            best_tau = tau;
                            best_at = {ia, ip, ib, jp};
                        }
                    }
    }
    if (best_s < 0.0) throw std::invalid_argument("no setting quad has detection overlap");

    CalibrationResult res;
    res.model = {LhvModelKind::detection_loophole, best_tau};
    res.quad = {AnalyzerSetting(two_pi * best_at[0] / n), AnalyzerSetting(two_pi * best_at[1] / n),
                AnalyzerSetting(two_pi * best_at[2] / n), AnalyzerSetting(two_pi * best_at[3] / n)};
    res.predicted_abs_s = best_s;

    const PostselectedChsh mc = postselected_chsh(res.model, res.quad, trials, seed);
    res.postselected = mc.postselected;
    res.stderr_s = mc.stderr_s;
    res.detected_fraction = mc.detected_fraction;
    // A claimed violation must clear the bound by more than sampling noise,
    // otherwise the degenerate always-detect case would flip on luck alone.
    res.violates_local = mc.postselected.abs_s > 2.0 + 2.0 * mc.stderr_s;
    return res;
}

inline std::vector<double> default_tau_grid() { return {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}; }

} // namespace bellsim
