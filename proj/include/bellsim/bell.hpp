#pragma once

// CHSH combinations, the per-trial algebraic identity and a deterministic
// optimizer for the setting quad.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bellsim/qstate.hpp"

namespace bellsim {

/// The four analyzer settings of a CHSH run: a, a' at station A and
/// b, b' at station B.
struct SettingQuad {
    AnalyzerSetting a, a_prime, b, b_prime;
};

struct ChshResult {
    double s = 0.0;
    double abs_s = 0.0;
    bool violates_local = false;  // |s| > 2 beyond rounding noise
};

/// S = E(a,b) + E(a,b') + E(a',b) - E(a',b'). Inputs must be correlations,
/// so each in [-1, 1]; values outside by more than rounding noise throw.
inline ChshResult chsh_value(double e_ab, double e_ab_prime, double e_a_prime_b,
                             double e_a_prime_b_prime) {
    for (double e : {e_ab, e_ab_prime, e_a_prime_b, e_a_prime_b_prime})
        if (!(std::abs(e) <= 1.0 + 1e-9))
            throw std::domain_error("correlation outside [-1, 1]");
    ChshResult r;
    r.s = e_ab + e_ab_prime + e_a_prime_b - e_a_prime_b_prime;
    r.abs_s = std::abs(r.s);
    // Correlations normalized through sqrt pick up a few ulp, so a boundary
    // quad can land slightly above 2 without meaning anything. Any real
    // violation clears this guard by twelve orders of magnitude.
    r.violates_local = r.abs_s > 2.0 + 1e-12;
    return r;
}

/// The combination alpha*(beta + beta') + alpha'*(beta - beta') for one set
/// of +-1 outcomes. Always +2 or -2.
inline double per_trial_value(int alpha, int beta, int alpha_prime, int beta_prime) {
    for (int v : {alpha, beta, alpha_prime, beta_prime})
        if (v != 1 && v != -1) throw std::domain_error("per-trial outcomes must be +-1");
    return alpha * (beta + beta_prime) + alpha_prime * (beta - beta_prime);
}

/// CHSH value of a state under a fixed quad, from Born-rule correlations.
inline ChshResult quantum_chsh(const TwoQubitState& state, const SettingQuad& q) {
    return chsh_value(correlation(state, q.a, q.b), correlation(state, q.a, q.b_prime),
                      correlation(state, q.a_prime, q.b), correlation(state, q.a_prime, q.b_prime));
}

struct OptimizedSettings {
    SettingQuad quad;
    ChshResult chsh;
};

namespace detail {

inline double abs_chsh_at(const TwoQubitState& state, const std::array<double, 4>& ang) {
    const AnalyzerSetting a(ang[0]), ap(ang[1]), b(ang[2]), bp(ang[3]);
    return std::abs(correlation(state, a, b) + correlation(state, a, bp) +
                    correlation(state, ap, b) - correlation(state, ap, bp));
}

} // namespace detail

/// Finds a setting quad maximizing |S| for the given state. A full scan of
/// the resolution^4 grid of angles 2*pi*k/resolution seeds a coordinate
/// descent whose step halves until below 1e-6 rad. Grid ties resolve to the
/// lexicographically smallest (a, a', b, b'), and the whole procedure is
/// deterministic.
inline OptimizedSettings optimize_settings(const TwoQubitState& state, int resolution) {
    if (resolution < 8) throw std::invalid_argument("optimize_settings needs resolution >= 8");
    const int n = resolution;
    std::vector<double> grid(n), table(std::size_t(n) * n);
    for (int i = 0; i < n; ++i) grid[i] = two_pi * i / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            table[std::size_t(i) * n + j] =
                correlation(state, AnalyzerSetting(grid[i]), AnalyzerSetting(grid[j]));

    // Ascending lexicographic scan with strict improvement keeps the first,
    // hence lexicographically smallest, maximizer.
    double best = -1.0;
    std::array<int, 4> at{};
    for (int ia = 0; ia < n; ++ia)
        for (int ip = 0; ip < n; ++ip)
            for (int ib = 0; ib < n; ++ib)
                for (int jp = 0; jp < n; ++jp) {
                    const double s = table[std::size_t(ia) * n + ib] +
                                     table[std::size_t(ia) * n + jp] +
                                     table[std::size_t(ip) * n + ib] -
                                     table[std::size_t(ip) * n + jp];
                    const double a = std::abs(s);
                    if (a > best) {
                        best = a;
                        at = {ia, ip, ib, jp};
                    }
                }

    std::array<double, 4> ang = {grid[at[0]], grid[at[1]], grid[at[2]], grid[at[3]]};
    double step = two_pi / n;
    while (step >= 1e-6) {
        bool improved = false;
        for (int k = 0; k < 4; ++k) {
            for (double delta : {step, -step}) {
                auto cand = ang;
                cand[k] += delta;
                const double v = detail::abs_chsh_at(state, cand);
                if (v > best) {
                    best = v;
                    ang = cand;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }

    OptimizedSettings out;
    out.quad = {AnalyzerSetting(ang[0]), AnalyzerSetting(ang[1]), AnalyzerSetting(ang[2]),
                AnalyzerSetting(ang[3])};
    out.chsh = quantum_chsh(state, out.quad);
    return out;
}

} // namespace bellsim
