#pragma once

// Special-relativistic bookkeeping: inertial frames, Lorentz boosts,
// event chronology, the before-before predicate for two moving devices
// and lower bounds on the speed of a hypothetical superluminal influence
// compatible with observed correlations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace bellsim {

/// Exact by SI definition.
inline constexpr double speed_of_light_mps = 299792458.0;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    friend Vec3 operator+(const Vec3& u, const Vec3& v) { return {u.x + v.x, u.y + v.y, u.z + v.z}; }
    friend Vec3 operator-(const Vec3& u, const Vec3& v) { return {u.x - v.x, u.y - v.y, u.z - v.z}; }
    friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double dot(const Vec3& v) const { return x * v.x + y * v.y + z * v.z; }
    double norm_squared() const { return dot(*this); }
    double norm() const { return std::sqrt(norm_squared()); }
};

/// An inertial frame, identified by its velocity relative to the laboratory.
class Frame {
public:
    Frame() = default;  // the laboratory itself

    explicit Frame(const Vec3& velocity_mps) : v_(velocity_mps) {
        const double b2 = v_.norm_squared() / (speed_of_light_mps * speed_of_light_mps);
        if (!(b2 < 1.0) || !std::isfinite(b2))
            throw std::invalid_argument("frame velocity must be slower than light");
    }

    const Vec3& velocity_mps() const { return v_; }
    double beta() const { return v_.norm() / speed_of_light_mps; }
    double gamma() const { return 1.0 / std::sqrt(1.0 - beta() * beta()); }
    bool is_lab() const { return v_.norm_squared() == 0.0; }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    Vec3 v_{};
};

/// An event in laboratory coordinates, or in frame coordinates when produced
/// by boost().
struct SpacetimeEvent {
    double t = 0.0;  // seconds
    Vec3 x;          // meters
};

/// Coordinates of `e` (given in the laboratory chart) in the chart of
/// `frame`, by the standard Lorentz boost along the frame velocity.
inline SpacetimeEvent boost(const SpacetimeEvent& e, const Frame& frame) {
    if (!std::isfinite(e.t) || !std::isfinite(e.x.norm_squared()))
        throw std::invalid_argument("event coordinates must be finite");
    const Vec3 v = frame.velocity_mps();
    const double v2 = v.norm_squared();
    if (v2 == 0.0) return e;
    const double c2 = speed_of_light_mps * speed_of_light_mps;
    const double g = frame.gamma();
    const double vx = v.dot(e.x);
    SpacetimeEvent out;
    out.t = g * (e.t - vx / c2);
    out.x = e.x + ((g - 1.0) * vx / v2 - g * e.t) * v;
    return out;
}

/// c^2 t^2 - |x|^2, the invariant the boost must preserve.
inline double interval_squared(const SpacetimeEvent& e) {
    return speed_of_light_mps * speed_of_light_mps * e.t * e.t - e.x.norm_squared();
}

enum class ChronologyOrder { a_first, b_first, simultaneous_within_tolerance };

struct ChronologyVerdict {
    ChronologyOrder order = ChronologyOrder::simultaneous_within_tolerance;
    double delta_t = 0.0;  // t_b - t_a in the requested frame, seconds
};

/// Time ordering of two events as judged from `frame`, with a symmetric
/// tolerance band around exact simultaneity.
inline ChronologyVerdict chronology(const SpacetimeEvent& a, const SpacetimeEvent& b,
                                    const Frame& frame, double tolerance_s) {
    if (!(tolerance_s >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
    ChronologyVerdict v;
    v.delta_t = boost(b, frame).t - boost(a, frame).t;
    if (std::abs(v.delta_t) <= tolerance_s)
        v.order = ChronologyOrder::simultaneous_within_tolerance;
    else
        v.order = v.delta_t > 0.0 ? ChronologyOrder::a_first : ChronologyOrder::b_first;
    return v;
}

/// True when each device, judged from its own rest frame, acted strictly
/// earlier than the other by more than `uncertainty_s`.
inline bool before_before(const SpacetimeEvent& event_a, const SpacetimeEvent& event_b,
                          const Frame& frame_a, const Frame& frame_b, double uncertainty_s) {
    if (!(uncertainty_s >= 0.0)) throw std::invalid_argument("uncertainty must be >= 0");
    const double a_leads = boost(event_b, frame_a).t - boost(event_a, frame_a).t;
    const double b_leads = boost(event_a, frame_b).t - boost(event_b, frame_b).t;
    return a_leads > uncertainty_s && b_leads > uncertainty_s;
}

/// Smallest relative device speed that tilts simultaneity across a distance
/// `length_m` by more than `jitter_s`: c^2 * jitter / length.
inline double required_relative_speed(double length_m, double jitter_s) {
    if (!(length_m > 0.0) || !(jitter_s > 0.0))
        throw std::invalid_argument("length and jitter must be > 0");
    return speed_of_light_mps * speed_of_light_mps * jitter_s / length_m;
}

/// Geometry of one bound evaluation: two detections separated by `length_m`
/// observed simultaneous within `jitter_s` in the laboratory, analyzed in a
/// candidate privileged frame of speed beta*c whose motion makes angle
/// `rho_rad` with the line joining the detections.
struct BoundInput {
    double length_m = 0.0;
    double jitter_s = 0.0;
    double beta = 0.0;
    double rho_rad = 0.0;
};

struct VqiBound {
    double bound_c = 0.0;  // lower bound on the influence speed, in units of c
    bool divergent = false;
};

namespace detail {

/// Influence speed (units of c) needed in the candidate frame when the true
/// laboratory delay between the detections is dt.
struct InfluenceSpeed {
    double length_m, jitter_s, beta, gamma, cos_rho, sin_rho;

    double operator()(double dt) const {
        const double c = speed_of_light_mps;
        const double lpar = gamma * (length_m * cos_rho - beta * c * dt);
        const double lperp = length_m * sin_rho;
        const double tsep = c * gamma * std::abs(dt - beta * length_m * cos_rho / c);
        return std::sqrt(lpar * lpar + lperp * lperp) / tsep;
    }
};

/// Golden-section minimum of f on [lo, hi] down to width `tol`, compared
/// against both endpoints.
template <class F>
double minimize_on_interval(const F& f, double lo, double hi, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    double best = std::min(f(0.5 * (a + b)), std::min(f(lo), f(hi)));
    return best;
}

} // namespace detail

/// Lower bound on the influence speed compatible with the observation,
/// minimized over all true delays the jitter allows. A moving candidate
/// frame (beta > 0) that admits exact simultaneity for some allowed delay,
/// |beta * length * cos(rho) / c| <= jitter, leaves no finite speed able to
/// carry the observed correlations there; that case is flagged divergent
/// and reported as +inf. The laboratory itself (beta = 0) measured the
/// delay to within the jitter, giving exactly length / (c * jitter).
inline VqiBound vqi_bound(const BoundInput& in) {
    if (!(in.length_m > 0.0)) throw std::invalid_argument("length must be > 0");
    if (!(in.jitter_s > 0.0)) throw std::invalid_argument("jitter must be > 0");
    if (!(in.beta >= 0.0 && in.beta < 1.0)) throw std::invalid_argument("beta must be in [0, 1)");
    if (!std::isfinite(in.rho_rad)) throw std::invalid_argument("rho must be finite");

    const double c = speed_of_light_mps;
    if (in.beta == 0.0) return {in.length_m / (c * in.jitter_s), false};

    const double cr = std::cos(in.rho_rad);
    const double zero_crossing = in.beta * in.length_m * cr / c;
    if (std::abs(zero_crossing) <= in.jitter_s)
        return {std::numeric_limits<double>::infinity(), true};

    detail::InfluenceSpeed f{in.length_m, in.jitter_s, in.beta,
                             1.0 / std::sqrt(1.0 - in.beta * in.beta), cr,
                             std::sin(in.rho_rad)};

    // Coarse scan to bracket the basin, then golden-section inside it.
    constexpr int scan = 256;
    double best = f(-in.jitter_s);
    int best_k = 0;
    for (int k = 1; k <= scan; ++k) {
        const double dt = -in.jitter_s + 2.0 * in.jitter_s * k / scan;
        const double v = f(dt);
        if (v < best) {
            best = v;
            best_k = k;
        }
    }
    const double lo = -in.jitter_s + 2.0 * in.jitter_s * std::max(0, best_k - 1) / scan;
    const double hi = -in.jitter_s + 2.0 * in.jitter_s * std::min(scan, best_k + 1) / scan;
    const double refined = detail::minimize_on_interval(f, lo, hi, 1e-15);
    return {std::min(best, refined), false};
}

struct RhoBound {
    double rho_rad = 0.0;
    double bound_c = 0.0;
    bool divergent = false;
};

/// Evaluates the bound on `samples` angles equally spaced over [0, pi].
inline std::vector<RhoBound> vqi_bound_sweep(double length_m, double jitter_s, double beta,
                                             int samples) {
    if (samples < 2) throw std::invalid_argument("sweep needs at least 2 samples");
    std::vector<RhoBound> out;
    out.reserve(samples);
    for (int k = 0; k < samples; ++k) {
        const double rho = std::numbers::pi * k / (samples - 1);
        const VqiBound b = vqi_bound({length_m, jitter_s, beta, rho});
        out.push_back({rho, b.bound_c, b.divergent});
    }
    return out;
}

} // namespace bellsim
