#pragma once

// The trial engine. One scenario describes source state, hypothesis,
// settings, station geometry, efficiencies, trial count and seed; the
// engine turns it into counts and correlation estimates. All randomness is
// counter-addressed per trial, so results are bitwise identical for any
// worker count and any single trial can be replayed on its own.

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "bellsim/bell.hpp"
#include "bellsim/errors.hpp"
#include "bellsim/lhv.hpp"
#include "bellsim/models.hpp"
#include "bellsim/qstate.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/spacetime.hpp"

namespace bellsim {

struct Scenario {
    std::string name;
    TwoQubitState state = TwoQubitState::singlet();
    std::variant<CollapseModel, LhvModel> model = CollapseModel{};
    SettingQuad quad;
    StationGeometry station_a, station_b;
    double efficiency_a = 1.0, efficiency_b = 1.0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
};

inline void validate_scenario(const Scenario& s) {
    if (s.trials < 1) throw std::invalid_argument("scenario needs at least 1 trial");
    for (double eff : {s.efficiency_a, s.efficiency_b})
        if (!(eff > 0.0 && eff <= 1.0))
            throw std::invalid_argument("efficiencies must be in (0, 1]");
    validate_station(s.station_a);
    validate_station(s.station_b);
}

/// Everything observable about a single trial.
struct TrialRecord {
    std::int64_t index = 0;
    bool primed_a = false, primed_b = false;
    Outcome outcome_a = Outcome::no_detection;
    Outcome outcome_b = Outcome::no_detection;
    TrialVerdict verdict;
    bool has_lambda = false;
    double lambda = 0.0;
    bool multi_psi = false;
    bool multi_moving_fired = false;   // the moving detector itself
    bool multi_partner_fired = false;  // the static detector on the other port
    bool double_detection = false;
    bool zero_detection = false;
};

struct PairTally {
    std::int64_t assigned = 0;  // trials that drew this setting pair
    std::int64_t pp = 0, pm = 0, mp = 0, mm = 0;
    std::int64_t coincidences() const { return pp + pm + mp + mm; }
};

struct CorrelationEstimate {
    double e = 0.0;
    double stderr_ = 0.0;
    std::int64_t n = 0;
    bool undersampled = false;  // too few coincidences to take seriously
};

struct MultiPsiTally {
    std::int64_t trials = 0;
    std::int64_t double_detections = 0;
    std::int64_t zero_detections = 0;
    std::int64_t moving_fired = 0;
    std::int64_t partner_fired = 0;
};

inline constexpr int undersampled_floor = 100;

struct ResultSet {
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    std::array<PairTally, 4> pairs{};
    // index 0 plus, 1 minus, 2 no detection
    std::array<std::int64_t, 3> singles_a{}, singles_b{};
    // own-station outcome split by the remote station's setting choice
    std::array<std::array<std::int64_t, 3>, 2> a_by_remote{}, b_by_remote{};
    std::array<std::int64_t, 6> verdict_counts{};  // indexed by VerdictReason
    bool multi_psi_active = false;
    MultiPsiTally multi_psi;

    std::array<CorrelationEstimate, 4> estimates{};
    ChshResult chsh;
    double chsh_stderr = 0.0;
    std::int64_t coincidences = 0;
    double detected_pair_fraction = 0.0;
};

namespace detail {

inline int outcome_slot(Outcome o) {
    if (o == Outcome::plus) return 0;
    if (o == Outcome::minus) return 1;
    return 2;
}

/// Per-scenario constants hoisted out of the trial loop.
class EngineContext {
public:
    explicit EngineContext(const Scenario& s) : sc_(s) {
        validate_scenario(s);
        settings_a_ = {s.quad.a, s.quad.a_prime};
        settings_b_ = {s.quad.b, s.quad.b_prime};
        for (int p = 0; p < 4; ++p)
            joint_[p] = joint_probability(s.state, settings_a_[p >> 1], settings_b_[p & 1]);

        if (const auto* lhv = std::get_if<LhvModel>(&s.model)) {
            lhv_ = *lhv;
            is_lhv_ = true;
            verdict_ = {false, VerdictReason::local_hidden_variable};
            return;
        }
        const auto& cm = std::get<CollapseModel>(s.model);
        verdict_ = trial_verdict(cm, s.station_a, s.station_b);
        if (cm.kind == CollapseModelKind::per_frame_state_vector && !verdict_.correlated) {
            multi_psi_ = true;
            moving_station_ = deduce_moving_station(s);
        }
    }

    TrialRecord simulate(std::int64_t index) const {
        TrialRecord rec;
        rec.index = index;
        rec.verdict = verdict_;
        {
            auto lane = trial_stream(sc_.seed, index, Substream::setting_a);
            rec.primed_a = lane.coin();
        }
        {
            auto lane = trial_stream(sc_.seed, index, Substream::setting_b);
            rec.primed_b = lane.coin();
        }
        const AnalyzerSetting& sa = settings_a_[rec.primed_a ? 1 : 0];
        const AnalyzerSetting& sb = settings_b_[rec.primed_b ? 1 : 0];

        if (is_lhv_) {
            auto lane = trial_stream(sc_.seed, index, Substream::hidden_variable);
            const HiddenVariable hv = draw_lambda(lane);
            rec.has_lambda = true;
            rec.lambda = hv.lambda;
            rec.outcome_a = local_outcome(lhv_, Station::a, sa, hv);
            rec.outcome_b = local_outcome(lhv_, Station::b, sb, hv);
        } else if (multi_psi_) {
            auto lane_joint = trial_stream(sc_.seed, index, Substream::outcome_a);
            auto lane_moving = trial_stream(sc_.seed, index, Substream::outcome_b);
            const MultiPsiOutcome m =
                generate_multi_psi(moving_station_, sc_.state, sa, sb, lane_joint, lane_moving);
            rec.multi_psi = true;
            rec.multi_moving_fired = m.moving_fired;
            rec.multi_partner_fired = m.partner_fired;
            rec.double_detection = m.double_detection;
            rec.zero_detection = m.zero_detection;
            rec.outcome_a = moving_station_ == Station::a ? m.moving : m.remote;
            rec.outcome_b = moving_station_ == Station::b ? m.moving : m.remote;
        } else {
            auto lane_a = trial_stream(sc_.seed, index, Substream::outcome_a);
            auto lane_b = trial_stream(sc_.seed, index, Substream::outcome_b);
            const int p = (rec.primed_a ? 2 : 0) + (rec.primed_b ? 1 : 0);
            std::tie(rec.outcome_a, rec.outcome_b) =
                generate_outcomes(verdict_, joint_[p], lane_a, lane_b);
        }

        if (sc_.efficiency_a < 1.0 && detected(rec.outcome_a)) {
            auto lane = trial_stream(sc_.seed, index, Substream::thinning_a);
            if (!lane.bernoulli(sc_.efficiency_a)) rec.outcome_a = Outcome::no_detection;
        }
        if (sc_.efficiency_b < 1.0 && detected(rec.outcome_b)) {
            auto lane = trial_stream(sc_.seed, index, Substream::thinning_b);
            if (!lane.bernoulli(sc_.efficiency_b)) rec.outcome_b = Outcome::no_detection;
        }
        return rec;
    }

    bool multi_psi_active() const { return multi_psi_; }

private:
    static Station deduce_moving_station(const Scenario& s) {
        const std::array<const Frame*, 4> frames = {&s.station_a.choice_frame,
                                                    &s.station_a.trigger_frame,
                                                    &s.station_b.choice_frame,
                                                    &s.station_b.trigger_frame};
        // Majority frame is "static"; exactly one trigger device may differ.
        for (int cand = 0; cand < 4; ++cand) {
            int matches = 0;
            for (int k = 0; k < 4; ++k)
                if (*frames[k] == *frames[cand]) ++matches;
            if (matches == 3) {
                int odd = -1;
                for (int k = 0; k < 4; ++k)
                    if (!(*frames[k] == *frames[cand])) odd = k;
                if (odd == 1) return Station::a;
                if (odd == 3) return Station::b;
                throw std::invalid_argument(
                    "state splitting with a moving setting chooser is not supported");
            }
        }
        throw std::invalid_argument(
            "state splitting supports exactly one device frame apart from the rest");
    }

    Scenario sc_;
    std::array<AnalyzerSetting, 2> settings_a_{}, settings_b_{};
    std::array<JointDistribution, 4> joint_{};
    TrialVerdict verdict_{};
    bool is_lhv_ = false;
    LhvModel lhv_{};
    bool multi_psi_ = false;
    Station moving_station_ = Station::b;
};

struct Tally {
    std::array<PairTally, 4> pairs{};
    std::array<std::int64_t, 3> singles_a{}, singles_b{};
    std::array<std::array<std::int64_t, 3>, 2> a_by_remote{}, b_by_remote{};
    std::array<std::int64_t, 6> verdict_counts{};
    MultiPsiTally multi{};

    void add(const TrialRecord& rec) {
        const int p = (rec.primed_a ? 2 : 0) + (rec.primed_b ? 1 : 0);
        PairTally& pt = pairs[p];
        ++pt.assigned;
        const int slot_a = outcome_slot(rec.outcome_a);
        const int slot_b = outcome_slot(rec.outcome_b);
        ++singles_a[slot_a];
        ++singles_b[slot_b];
        ++a_by_remote[rec.primed_b ? 1 : 0][slot_a];
        ++b_by_remote[rec.primed_a ? 1 : 0][slot_b];
        ++verdict_counts[static_cast<int>(rec.verdict.reason)];
        if (detected(rec.outcome_a) && detected(rec.outcome_b)) {
            const bool ap = rec.outcome_a == Outcome::plus;
            const bool bp = rec.outcome_b == Outcome::plus;
            if (ap && bp)
                ++pt.pp;
            else if (ap)
                ++pt.pm;
            else if (bp)
                ++pt.mp;
            else
                ++pt.mm;
        }
        if (rec.multi_psi) {
            ++multi.trials;
            if (rec.double_detection) ++multi.double_detections;
            if (rec.zero_detection) ++multi.zero_detections;
            if (rec.multi_moving_fired) ++multi.moving_fired;
            if (rec.multi_partner_fired) ++multi.partner_fired;
        }
    }

    void merge(const Tally& o) {
        for (int p = 0; p < 4; ++p) {
            pairs[p].assigned += o.pairs[p].assigned;
            pairs[p].pp += o.pairs[p].pp;
            pairs[p].pm += o.pairs[p].pm;
            pairs[p].mp += o.pairs[p].mp;
            pairs[p].mm += o.pairs[p].mm;
        }
        for (int k = 0; k < 3; ++k) {
            singles_a[k] += o.singles_a[k];
            singles_b[k] += o.singles_b[k];
            for (int r = 0; r < 2; ++r) {
                a_by_remote[r][k] += o.a_by_remote[r][k];
                b_by_remote[r][k] += o.b_by_remote[r][k];
            }
        }
        for (int k = 0; k < 6; ++k) verdict_counts[k] += o.verdict_counts[k];
        multi.trials += o.multi.trials;
        multi.double_detections += o.multi.double_detections;
        multi.zero_detections += o.multi.zero_detections;
        multi.moving_fired += o.multi.moving_fired;
        multi.partner_fired += o.multi.partner_fired;
    }
};

} // namespace detail

/// Runs the scenario. The trial range is split into contiguous chunks, one
/// per worker, and integer tallies are merged in worker order; the result
/// does not depend on the worker count.
inline ResultSet run(const Scenario& s, int workers = 1) {
    const detail::EngineContext ctx(s);
    workers = std::clamp<int>(workers, 1, 256);
    workers = int(std::min<std::int64_t>(workers, s.trials));

    std::vector<detail::Tally> parts(workers);
    const auto worker_body = [&](int w, std::int64_t lo, std::int64_t hi) {
        detail::Tally local;
        for (std::int64_t i = lo; i < hi; ++i) local.add(ctx.simulate(i));
        parts[w] = local;
    };

    if (workers == 1) {
        worker_body(0, 0, s.trials);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const std::int64_t q = s.trials / workers, r = s.trials % workers;
        std::int64_t lo = 0;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t hi = lo + q + (w < r ? 1 : 0);
            pool.emplace_back(worker_body, w, lo, hi);
            lo = hi;
        }
        for (auto& th : pool) th.join();
    }

    detail::Tally total;
    for (const auto& part : parts) total.merge(part);

    ResultSet res;
    res.trials = s.trials;
    res.seed = s.seed;
    res.pairs = total.pairs;
    res.singles_a = total.singles_a;
    res.singles_b = total.singles_b;
    res.a_by_remote = total.a_by_remote;
    res.b_by_remote = total.b_by_remote;
    res.verdict_counts = total.verdict_counts;
    res.multi_psi_active = ctx.multi_psi_active();
    res.multi_psi = total.multi;

    std::array<double, 4> e{};
    double var_s = 0.0;
    for (int p = 0; p < 4; ++p) {
        const std::int64_t n = res.pairs[p].coincidences();
        if (n < 2)
            throw InsufficientStatisticsError(std::string("setting pair ") +
                                              detail::pair_name(p) +
                                              " has fewer than 2 coincidences");
        e[p] = double(res.pairs[p].pp - res.pairs[p].pm - res.pairs[p].mp + res.pairs[p].mm) /
               double(n);
        CorrelationEstimate& est = res.estimates[p];
        est.e = e[p];
        est.n = n;
        est.stderr_ = std::sqrt((1.0 - e[p] * e[p]) / double(n));
        est.undersampled = n < undersampled_floor;
        var_s += est.stderr_ * est.stderr_;
        res.coincidences += n;
    }
    res.chsh = chsh_value(e[0], e[1], e[2], e[3]);
    res.chsh_stderr = std::sqrt(var_s);
    res.detected_pair_fraction = double(res.coincidences) / double(s.trials);
    return res;
}

/// Regenerates the requested trials exactly as run() saw them.
inline std::vector<TrialRecord> replay(const Scenario& s, const std::vector<std::int64_t>& indices) {
    const detail::EngineContext ctx(s);
    std::vector<TrialRecord> out;
    out.reserve(indices.size());
    for (std::int64_t idx : indices) {
        if (idx < 0 || idx >= s.trials)
            throw std::out_of_range("trial index outside the scenario's range");
        out.push_back(ctx.simulate(idx));
    }
    return out;
}

struct PairSummary {
    std::string label;
    double setting_a_rad = 0.0, setting_b_rad = 0.0;
    std::int64_t coincidences = 0;
    double e = 0.0, stderr_ = 0.0;
    bool undersampled = false;
};

struct Summary {
    std::string scenario;
    std::string model;
    std::uint64_t seed = 0;
    std::int64_t trials = 0;
    std::array<PairSummary, 4> pairs{};
    double s = 0.0, abs_s = 0.0, stderr_s = 0.0;
    bool violates_local = false;
    bool z_defined = false;
    double z = 0.0;  // (|s| - 2) / stderr_s
    std::int64_t coincidences = 0;
    double detected_pair_fraction = 0.0;
    std::array<std::int64_t, 3> singles_a{}, singles_b{};
    std::vector<std::pair<std::string, std::int64_t>> verdicts;
    bool multi_psi = false;
    MultiPsiTally multi{};
};

inline std::string model_label(const Scenario& s) {
    if (const auto* lhv = std::get_if<LhvModel>(&s.model))
        return lhv->kind == LhvModelKind::deterministic_sign ? "LHV_DETERMINISTIC_SIGN"
                                                             : "LHV_DETECTION_LOOPHOLE";
    switch (std::get<CollapseModel>(s.model).kind) {
        case CollapseModelKind::standard_qm: return "STANDARD_QM";
        case CollapseModelKind::preferred_frame: return "PREFERRED_FRAME";
        case CollapseModelKind::trigger_device_frame: return "TRIGGER_DEVICE_FRAME";
        case CollapseModelKind::choice_device_frame: return "CHOICE_DEVICE_FRAME";
        case CollapseModelKind::per_frame_state_vector: return "PER_FRAME_STATE_VECTOR";
    }
    return "UNKNOWN";
}

inline const char* verdict_label(VerdictReason r) {
    switch (r) {
        case VerdictReason::standard: return "STANDARD";
        case VerdictReason::influence_too_slow: return "INFLUENCE_TOO_SLOW";
        case VerdictReason::before_before_trigger: return "BEFORE_BEFORE_TRIGGER";
        case VerdictReason::before_before_choice: return "BEFORE_BEFORE_CHOICE";
        case VerdictReason::distinct_frames: return "DISTINCT_FRAMES";
        case VerdictReason::local_hidden_variable: return "LOCAL_HIDDEN_VARIABLE";
    }
    return "UNKNOWN";
}

inline Summary summarize(const Scenario& s, const ResultSet& r) {
    Summary sum;
    sum.scenario = s.name;
    sum.model = model_label(s);
    sum.seed = r.seed;
    sum.trials = r.trials;
    static constexpr const char* labels[4] = {"(a,b)", "(a,b')", "(a',b)", "(a',b')"};
    const std::array<double, 2> sa = {s.quad.a.radians, s.quad.a_prime.radians};
    const std::array<double, 2> sb = {s.quad.b.radians, s.quad.b_prime.radians};
    for (int p = 0; p < 4; ++p) {
        PairSummary& ps = sum.pairs[p];
        ps.label = labels[p];
        ps.setting_a_rad = sa[p >> 1];
        ps.setting_b_rad = sb[p & 1];
        ps.coincidences = r.estimates[p].n;
        ps.e = r.estimates[p].e;
        ps.stderr_ = r.estimates[p].stderr_;
        ps.undersampled = r.estimates[p].undersampled;
    }
    sum.s = r.chsh.s;
    sum.abs_s = r.chsh.abs_s;
    sum.stderr_s = r.chsh_stderr;
    sum.violates_local = r.chsh.violates_local;
    if (r.chsh_stderr > 0.0) {
        sum.z_defined = true;
        sum.z = (r.chsh.abs_s - 2.0) / r.chsh_stderr;
    }
    sum.coincidences = r.coincidences;
    sum.detected_pair_fraction = r.detected_pair_fraction;
    sum.singles_a = r.singles_a;
    sum.singles_b = r.singles_b;
    for (int k = 0; k < 6; ++k)
        if (r.verdict_counts[k] > 0)
            sum.verdicts.emplace_back(verdict_label(static_cast<VerdictReason>(k)),
                                      r.verdict_counts[k]);
    sum.multi_psi = r.multi_psi_active;
    sum.multi = r.multi_psi;
    return sum;
}

} // namespace bellsim
