#pragma once

// Two-qubit pure states, analyzer settings and the Born rule for a pair of
// two-outcome measurements. Amplitudes live in the ordered product basis
// {(1,1), (1,2), (2,1), (2,2)} of the two subsystems.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace bellsim {

using Complex = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Wraps any real angle into [0, 2*pi).
inline double canonical_angle(double radians) {
    double r = std::fmod(radians, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

/// One analyzer setting, a single real analysis angle in radians
/// (polarizer orientation, interferometer phase, ...).
struct AnalyzerSetting {
    AnalyzerSetting() = default;
    explicit AnalyzerSetting(double rad) : radians(canonical_angle(rad)) {}
    double radians = 0.0;
};

/// The two measurement stations of a pair experiment.
enum class Station { a, b };

/// Result of one single-station measurement attempt. NoDetection never
/// carries a numeric value; feeding it into correlation arithmetic is a
/// programming error and throws.
enum class Outcome : int { minus = -1, no_detection = 0, plus = +1 };

inline bool detected(Outcome o) { return o != Outcome::no_detection; }

inline int outcome_value(Outcome o) {
    if (!detected(o)) throw std::domain_error("no_detection carries no +/-1 value");
    return static_cast<int>(o);
}

namespace detail {

/// Eigenvector of the analyzer at angle s for the given port (+1 or -1).
inline std::array<Complex, 2> analyzer_eigenvector(const AnalyzerSetting& s, int port) {
    const double h = 0.5 * s.radians;
    if (port > 0) return {Complex(std::cos(h), 0.0), Complex(std::sin(h), 0.0)};
    return {Complex(-std::sin(h), 0.0), Complex(std::cos(h), 0.0)};
}

} // namespace detail

/// Normalized pure state of two two-level systems.
class TwoQubitState {
public:
    /// Builds a state from raw amplitudes, normalizing them. A (near) zero
    /// vector is rejected.
    static TwoQubitState from_amplitudes(const std::array<Complex, 4>& raw) {
        return TwoQubitState(raw);
    }

    /// The singlet state (|12> - |21>) / sqrt(2).
    static TwoQubitState singlet() {
        const double r = 1.0 / std::sqrt(2.0);
        return TwoQubitState({Complex(0.0), Complex(r), Complex(-r), Complex(0.0)});
    }

    /// c1 |a1>|b1> + c2 |a2>|b2> from single-qubit factors, normalized.
    static TwoQubitState superposition_of_products(Complex c1,
                                                   const std::array<Complex, 2>& a1,
                                                   const std::array<Complex, 2>& b1,
                                                   Complex c2,
                                                   const std::array<Complex, 2>& a2,
                                                   const std::array<Complex, 2>& b2) {
        std::array<Complex, 4> amps{};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                amps[2 * i + j] = c1 * a1[i] * b1[j] + c2 * a2[i] * b2[j];
        return TwoQubitState(amps);
    }

    const std::array<Complex, 4>& amplitudes() const { return amps_; }

    /// Amplitude of basis ket |i>|j>, i and j in {0, 1}.
    Complex amplitude(int i, int j) const { return amps_[2 * i + j]; }

    double norm_squared() const {
        double n = 0.0;
        for (const auto& c : amps_) n += std::norm(c);
        return n;
    }

private:
    explicit TwoQubitState(const std::array<Complex, 4>& raw) : amps_(raw) {
        double n2 = 0.0;
        for (const auto& c : raw) n2 += std::norm(c);
        if (!(n2 > 1e-24) || !std::isfinite(n2))
            throw std::invalid_argument("state amplitudes do not span a normalizable vector");
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& c : amps_) c *= inv;
    }

    std::array<Complex, 4> amps_;
};

/// Probabilities of the four joint outcomes of a pair of two-outcome
/// measurements, ordered (+,+), (+,-), (-,+), (-,-).
struct JointDistribution {
    std::array<double, 4> p{};

    static int index(int outcome_a, int outcome_b) {
        return (outcome_a > 0 ? 0 : 2) + (outcome_b > 0 ? 0 : 1);
    }

    double probability(int outcome_a, int outcome_b) const { return p[index(outcome_a, outcome_b)]; }

    double expectation() const { return p[0] - p[1] - p[2] + p[3]; }
    double marginal_plus_a() const { return p[0] + p[1]; }
    double marginal_plus_b() const { return p[0] + p[2]; }
};

/// Born probabilities for analyzers at settings a (station A) and b
/// (station B).
inline JointDistribution joint_probability(const TwoQubitState& state,
                                           const AnalyzerSetting& a,
                                           const AnalyzerSetting& b) {
    JointDistribution joint;
    int slot = 0;
    for (int pa : {+1, -1}) {
        const auto ea = detail::analyzer_eigenvector(a, pa);
        for (int pb : {+1, -1}) {
            const auto eb = detail::analyzer_eigenvector(b, pb);
            Complex amp(0.0);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    amp += std::conj(ea[i]) * std::conj(eb[j]) * state.amplitude(i, j);
            joint.p[slot++] = std::norm(amp);
        }
    }
    for (auto& q : joint.p)
        if (q < 0.0) q = 0.0;
    return joint;
}

/// E(a, b), the expectation of the +-1 outcome product.
inline double correlation(const TwoQubitState& state,
                          const AnalyzerSetting& a,
                          const AnalyzerSetting& b) {
    return joint_probability(state, a, b).expectation();
}

/// Conditional state of subsystem B after station A measured `outcome_a`
/// at setting a. When the branch has zero probability there is no
/// conditional state and `defined` is false.
struct CollapsedB {
    double probability = 0.0;
    bool defined = false;
    std::array<Complex, 2> state_b{};
};

inline CollapsedB collapse_after_A(const TwoQubitState& state,
                                   const AnalyzerSetting& a,
                                   int outcome_a) {
    const auto ea = detail::analyzer_eigenvector(a, outcome_a);
    std::array<Complex, 2> chi{};
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i)
            chi[j] += std::conj(ea[i]) * state.amplitude(i, j);

    CollapsedB res;
    res.probability = std::norm(chi[0]) + std::norm(chi[1]);
    if (res.probability <= 1e-15) return res;
    const double inv = 1.0 / std::sqrt(res.probability);
    res.state_b = {chi[0] * inv, chi[1] * inv};
    res.defined = true;
    return res;
}

/// Born probability of the +1 port for a single qubit at the given setting.
inline double single_qubit_plus_probability(const std::array<Complex, 2>& qubit,
                                            const AnalyzerSetting& s) {
    const auto e = detail::analyzer_eigenvector(s, +1);
    const Complex amp = std::conj(e[0]) * qubit[0] + std::conj(e[1]) * qubit[1];
    return std::norm(amp);
}

} // namespace bellsim
