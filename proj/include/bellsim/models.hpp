#pragma once

// Collapse-frame hypotheses. Each model answers one question per trial:
// do the two stations of this geometry show quantum correlations, or do
// they fall back to independent single-particle statistics? Outcome
// generation then samples the joint or the product distribution through
// fixed randomness lanes, so hypotheses that agree on a trial agree
// outcome for outcome under the same seed.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

#include "bellsim/qstate.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/spacetime.hpp"

namespace bellsim {

enum class CollapseModelKind {
    standard_qm,             // correlations regardless of chronology
    preferred_frame,         // influence at finite speed v_qi in one privileged frame
    trigger_device_frame,    // each detection judged from its own detector's rest frame
    choice_device_frame,     // each judged from its setting chooser's rest frame
    per_frame_state_vector,  // one state vector per device frame, no cross talk
};

struct CollapseModel {
    CollapseModelKind kind = CollapseModelKind::standard_qm;
    Frame preferred_frame{};  // only read by preferred_frame
    double v_qi_c = std::numeric_limits<double>::infinity();  // influence speed in units of c
};

/// Where and when one station acts. The choice event fixes the setting
/// (beam splitter, polarizer drive), the trigger event is the detection
/// itself; each has the rest frame of the device executing it.
/// alignment_uncertainty_s absorbs how precisely the event times are known.
struct StationGeometry {
    SpacetimeEvent choice_event;
    SpacetimeEvent trigger_event;
    Frame choice_frame{};
    Frame trigger_frame{};
    double alignment_uncertainty_s = 0.0;
};

inline void validate_station(const StationGeometry& st) {
    if (st.trigger_event.t < st.choice_event.t)
        throw std::invalid_argument("trigger must not precede the setting choice");
    if (!(st.alignment_uncertainty_s >= 0.0))
        throw std::invalid_argument("alignment uncertainty must be >= 0");
}

enum class VerdictReason {
    standard,                // correlated, nothing suppressed them
    influence_too_slow,      // preferred-frame influence cannot span the gap
    before_before_trigger,   // both detectors acted first in their own frames
    before_before_choice,    // both choosers acted first in their own frames
    distinct_frames,         // devices disagree on a rest frame, states split
    local_hidden_variable,   // outcomes came from a local model, not collapse
};

struct TrialVerdict {
    bool correlated = true;
    VerdictReason reason = VerdictReason::standard;
};

/// Decides whether this geometry shows quantum correlations under the given
/// hypothesis. Pure function of model and geometry.
inline TrialVerdict trial_verdict(const CollapseModel& model, const StationGeometry& station_a,
                                  const StationGeometry& station_b) {
    validate_station(station_a);
    validate_station(station_b);
    const double slack = station_a.alignment_uncertainty_s + station_b.alignment_uncertainty_s;

    switch (model.kind) {
        case CollapseModelKind::standard_qm:
            return {true, VerdictReason::standard};

        case CollapseModelKind::preferred_frame: {
            if (!(model.v_qi_c > 1.0))
                throw std::invalid_argument("preferred-frame influence speed must exceed c");
            const SpacetimeEvent ta = boost(station_a.trigger_event, model.preferred_frame);
            const SpacetimeEvent tb = boost(station_b.trigger_event, model.preferred_frame);
            const double dt = std::abs(tb.t - ta.t) + slack;
            const double dx = (tb.x - ta.x).norm();
            const double reach = model.v_qi_c * speed_of_light_mps * dt;
            if (dx <= reach) return {true, VerdictReason::standard};
            return {false, VerdictReason::influence_too_slow};
        }

        case CollapseModelKind::trigger_device_frame:
            if (before_before(station_a.trigger_event, station_b.trigger_event,
                              station_a.trigger_frame, station_b.trigger_frame, slack))
                return {false, VerdictReason::before_before_trigger};
            return {true, VerdictReason::standard};

        case CollapseModelKind::choice_device_frame:
            if (before_before(station_a.choice_event, station_b.choice_event,
                              station_a.choice_frame, station_b.choice_frame, slack))
                return {false, VerdictReason::before_before_choice};
            return {true, VerdictReason::standard};

        case CollapseModelKind::per_frame_state_vector: {
            const bool one_frame = station_a.choice_frame == station_a.trigger_frame &&
                                   station_a.choice_frame == station_b.choice_frame &&
                                   station_a.choice_frame == station_b.trigger_frame;
            if (one_frame) return {true, VerdictReason::standard};
            return {false, VerdictReason::distinct_frames};
        }
    }
    throw std::logic_error("unknown collapse model kind");
}

/// Samples one pair of outcomes. Correlated trials draw the joint Born
/// distribution from the A lane alone; uncorrelated trials draw the two
/// single-station marginals independently, one lane each.
inline std::pair<Outcome, Outcome> generate_outcomes(const TrialVerdict& verdict,
                                                     const JointDistribution& joint,
                                                     PhiloxStream& lane_a,
                                                     PhiloxStream& lane_b) {
    if (verdict.correlated) {
        const double u = lane_a.uniform01();
        double acc = 0.0;
        for (int cell = 0; cell < 4; ++cell) {
            acc += joint.p[cell];
            if (u < acc || cell == 3) {
                const Outcome oa = cell < 2 ? Outcome::plus : Outcome::minus;
                const Outcome ob = (cell % 2 == 0) ? Outcome::plus : Outcome::minus;
                return {oa, ob};
            }
        }
    }
    const Outcome oa = lane_a.uniform01() < joint.marginal_plus_a() ? Outcome::plus : Outcome::minus;
    const Outcome ob = lane_b.uniform01() < joint.marginal_plus_b() ? Outcome::plus : Outcome::minus;
    return {oa, ob};
}

inline std::pair<Outcome, Outcome> generate_outcomes(const TrialVerdict& verdict,
                                                     const TwoQubitState& state,
                                                     const AnalyzerSetting& a,
                                                     const AnalyzerSetting& b,
                                                     PhiloxStream& lane_a, PhiloxStream& lane_b) {
    return generate_outcomes(verdict, joint_probability(state, a, b), lane_a, lane_b);
}

/// One trial under the split-state hypothesis with a single moving detector:
/// the moving device carries state psi1 and fires from its marginal; every
/// static device works off psi2, which collapses on the static station's
/// outcome. The two detectors watching the same particle may then disagree.
struct MultiPsiOutcome {
    Outcome moving = Outcome::no_detection;  // the moving detector's port
    Outcome remote = Outcome::no_detection;  // the static far station
    bool moving_fired = false;               // moving detector on the + port
    bool partner_fired = false;              // its static partner on the - port
    bool double_detection = false;           // both fired on one particle
    bool zero_detection = false;             // neither fired
};

inline MultiPsiOutcome generate_multi_psi(Station moving_station, const TwoQubitState& state,
                                          const AnalyzerSetting& a, const AnalyzerSetting& b,
                                          PhiloxStream& lane_joint, PhiloxStream& lane_moving) {
    // psi2: all static devices share one state vector; the static station's
    // outcome and the static partner detector at the moving station's port
    // both follow it.
    const JointDistribution joint = joint_probability(state, a, b);
    const double u = lane_joint.uniform01();
    double acc = 0.0;
    int cell = 3;
    for (int k = 0; k < 4; ++k) {
        acc += joint.p[k];
        if (u < acc) {
            cell = k;
            break;
        }
    }
    const Outcome psi2_a = cell < 2 ? Outcome::plus : Outcome::minus;
    const Outcome psi2_b = (cell % 2 == 0) ? Outcome::plus : Outcome::minus;

    // psi1: the moving detector sees only its own station's marginal.
    const double p_plus = moving_station == Station::a ? joint.marginal_plus_a()
                                                       : joint.marginal_plus_b();
    const Outcome moving = lane_moving.uniform01() < p_plus ? Outcome::plus : Outcome::minus;

    const Outcome psi2_here = moving_station == Station::a ? psi2_a : psi2_b;
    MultiPsiOutcome out;
    out.moving = moving;
    out.remote = moving_station == Station::a ? psi2_b : psi2_a;
    // The moving detector guards the + port; its static partner guards -.
    out.moving_fired = moving == Outcome::plus;
    out.partner_fired = psi2_here == Outcome::minus;
    out.double_detection = out.moving_fired && out.partner_fired;
    out.zero_detection = !out.moving_fired && !out.partner_fired;
    return out;
}

} // namespace bellsim
