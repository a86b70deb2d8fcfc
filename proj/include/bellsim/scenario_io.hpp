#pragma once

// Scenario files: a small strict JSON schema describing source state,
// hypothesis, settings, bench geometry, efficiencies, trial count and seed.
// Unknown keys are rejected so a typo cannot silently fall back to a
// default. to_scenario() places the stations on a canonical east-west axis
// with the combined timing slack realized as a worst-case offset of
// station B's events.

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bellsim/engine.hpp"

namespace bellsim {

class ScenarioFormatError : public std::runtime_error {
public:
    explicit ScenarioFormatError(const std::string& what) : std::runtime_error(what) {}
};

struct StationSpec {
    Vec3 choice_velocity_mps{};
    Vec3 trigger_velocity_mps{};
    friend bool operator==(const StationSpec&, const StationSpec&) = default;
};

struct GeometrySpec {
    double separation_m = 0.0;
    double timing_jitter_s = 0.0;
    double alignment_uncertainty_m = 0.0;
    StationSpec station_a, station_b;
    friend bool operator==(const GeometrySpec&, const GeometrySpec&) = default;
};

struct StateSpec {
    std::string kind = "singlet";  // "singlet" or "raw"
    std::array<std::array<double, 2>, 4> amplitudes{};
    friend bool operator==(const StateSpec&, const StateSpec&) = default;
};

struct ModelSpec {
    std::string kind = "standard_qm";
    Vec3 frame_velocity_mps{};  // preferred_frame only
    double v_qi_c = 0.0;        // preferred_frame only
    double tau = 0.0;           // lhv_detection_loophole only
    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct SettingsSpec {
    double a_rad = 0.0, a_prime_rad = 0.0, b_rad = 0.0, b_prime_rad = 0.0;
    friend bool operator==(const SettingsSpec&, const SettingsSpec&) = default;
};

struct EfficiencySpec {
    double a = 1.0, b = 1.0;
    friend bool operator==(const EfficiencySpec&, const EfficiencySpec&) = default;
};

struct ScenarioFile {
    StateSpec state;
    ModelSpec model;
    SettingsSpec settings;
    GeometrySpec geometry;
    EfficiencySpec efficiency;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    friend bool operator==(const ScenarioFile&, const ScenarioFile&) = default;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void bad_scenario(const std::string& where, const std::string& what) {
    throw ScenarioFormatError(where + ": " + what);
}

inline const json& member(const json& obj, const std::string& where, const char* key) {
    if (!obj.is_object()) bad_scenario(where, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) bad_scenario(where, std::string("missing key '") + key + "'");
    return *it;
}

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad_scenario(where, "expected an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) ok = true;
        if (!ok) bad_scenario(where, "unknown key '" + item.key() + "'");
    }
}

inline double number_at(const json& obj, const std::string& where, const char* key) {
    const json& v = member(obj, where, key);
    if (!v.is_number()) bad_scenario(where, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

inline Vec3 velocity_at(const json& obj, const std::string& where, const char* key) {
    const json& v = member(obj, where, key);
    if (!v.is_array() || v.size() != 3) bad_scenario(where, std::string("'") + key + "' must be [vx, vy, vz]");
    for (const auto& c : v)
        if (!c.is_number()) bad_scenario(where, std::string("'") + key + "' components must be numbers");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline StationSpec station_at(const json& obj, const std::string& where, const char* key) {
    const json& st = member(obj, where, key);
    const std::string here = where + "." + key;
    check_keys(st, here, {"choice_velocity_mps", "trigger_velocity_mps"});
    StationSpec out;
    out.choice_velocity_mps = velocity_at(st, here, "choice_velocity_mps");
    out.trigger_velocity_mps = velocity_at(st, here, "trigger_velocity_mps");
    return out;
}

} // namespace detail

inline ScenarioFile parse_scenario_text(const std::string& text) {
    using detail::bad_scenario;
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioFormatError(std::string("not valid JSON: ") + e.what());
    }
    detail::check_keys(root, "scenario",
                       {"state", "model", "settings", "geometry", "efficiency", "trials", "seed"});

    ScenarioFile f;

    const auto& state = detail::member(root, "scenario", "state");
    const auto& state_kind = detail::member(state, "state", "kind");
    if (!state_kind.is_string()) bad_scenario("state", "'kind' must be a string");
    f.state.kind = state_kind.get<std::string>();
    if (f.state.kind == "singlet") {
        detail::check_keys(state, "state", {"kind"});
    } else if (f.state.kind == "raw") {
        detail::check_keys(state, "state", {"kind", "amplitudes"});
        const auto& amps = detail::member(state, "state", "amplitudes");
        if (!amps.is_array() || amps.size() != 4)
            bad_scenario("state", "'amplitudes' must be 4 entries of [re, im]");
        for (int k = 0; k < 4; ++k) {
            const auto& c = amps[k];
            if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
                bad_scenario("state", "'amplitudes' must be 4 entries of [re, im]");
            f.state.amplitudes[k] = {c[0].get<double>(), c[1].get<double>()};
        }
    } else {
        bad_scenario("state", "unknown kind '" + f.state.kind + "'");
    }

    const auto& model = detail::member(root, "scenario", "model");
    if (!detail::member(model, "model", "kind").is_string())
        bad_scenario("model", "'kind' must be a string");
    f.model.kind = model.at("kind").get<std::string>();
    if (f.model.kind == "preferred_frame") {
        detail::check_keys(model, "model", {"kind", "frame_velocity_mps", "v_qi_c"});
        f.model.frame_velocity_mps = detail::velocity_at(model, "model", "frame_velocity_mps");
        f.model.v_qi_c = detail::number_at(model, "model", "v_qi_c");
    } else if (f.model.kind == "lhv_detection_loophole") {
        detail::check_keys(model, "model", {"kind", "tau"});
        f.model.tau = detail::number_at(model, "model", "tau");
    } else if (f.model.kind == "standard_qm" || f.model.kind == "trigger_device_frame" ||
               f.model.kind == "choice_device_frame" || f.model.kind == "per_frame_state_vector" ||
               f.model.kind == "lhv_deterministic_sign") {
        detail::check_keys(model, "model", {"kind"});
    } else {
        bad_scenario("model", "unknown kind '" + f.model.kind + "'");
    }

    const auto& settings = detail::member(root, "scenario", "settings");
    detail::check_keys(settings, "settings", {"a_rad", "a_prime_rad", "b_rad", "b_prime_rad"});
    f.settings.a_rad = detail::number_at(settings, "settings", "a_rad");
    f.settings.a_prime_rad = detail::number_at(settings, "settings", "a_prime_rad");
    f.settings.b_rad = detail::number_at(settings, "settings", "b_rad");
    f.settings.b_prime_rad = detail::number_at(settings, "settings", "b_prime_rad");

    const auto& geo = detail::member(root, "scenario", "geometry");
    detail::check_keys(geo, "geometry",
                       {"separation_m", "timing_jitter_s", "alignment_uncertainty_m", "station_a",
                        "station_b"});
    f.geometry.separation_m = detail::number_at(geo, "geometry", "separation_m");
    f.geometry.timing_jitter_s = detail::number_at(geo, "geometry", "timing_jitter_s");
    f.geometry.alignment_uncertainty_m = detail::number_at(geo, "geometry", "alignment_uncertainty_m");
    if (!(f.geometry.separation_m > 0.0)) bad_scenario("geometry", "'separation_m' must be > 0");
    if (!(f.geometry.timing_jitter_s >= 0.0)) bad_scenario("geometry", "'timing_jitter_s' must be >= 0");
    if (!(f.geometry.alignment_uncertainty_m >= 0.0))
        bad_scenario("geometry", "'alignment_uncertainty_m' must be >= 0");
    f.geometry.station_a = detail::station_at(geo, "geometry", "station_a");
    f.geometry.station_b = detail::station_at(geo, "geometry", "station_b");

    const auto& eff = detail::member(root, "scenario", "efficiency");
    detail::check_keys(eff, "efficiency", {"a", "b"});
    f.efficiency.a = detail::number_at(eff, "efficiency", "a");
    f.efficiency.b = detail::number_at(eff, "efficiency", "b");

    const auto& trials = detail::member(root, "scenario", "trials");
    if (!trials.is_number_integer() || trials.get<std::int64_t>() < 1)
        detail::bad_scenario("scenario", "'trials' must be a positive integer");
    f.trials = trials.get<std::int64_t>();

    const auto& seed = detail::member(root, "scenario", "seed");
    if (!(seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<std::int64_t>() >= 0)))
        detail::bad_scenario("scenario", "'seed' must be a non-negative integer");
    f.seed = seed.get<std::uint64_t>();

    return f;
}

inline ScenarioFile load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioFormatError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

inline std::string serialize_scenario(const ScenarioFile& f) {
    nlohmann::ordered_json root;
    root["state"]["kind"] = f.state.kind;
    if (f.state.kind == "raw") {
        auto& amps = root["state"]["amplitudes"];
        amps = nlohmann::ordered_json::array();
        for (const auto& c : f.state.amplitudes) amps.push_back({c[0], c[1]});
    }
    root["model"]["kind"] = f.model.kind;
    if (f.model.kind == "preferred_frame") {
        root["model"]["frame_velocity_mps"] = {f.model.frame_velocity_mps.x,
                                               f.model.frame_velocity_mps.y,
                                               f.model.frame_velocity_mps.z};
        root["model"]["v_qi_c"] = f.model.v_qi_c;
    } else if (f.model.kind == "lhv_detection_loophole") {
        root["model"]["tau"] = f.model.tau;
    }
    root["settings"] = {{"a_rad", f.settings.a_rad},
                        {"a_prime_rad", f.settings.a_prime_rad},
                        {"b_rad", f.settings.b_rad},
                        {"b_prime_rad", f.settings.b_prime_rad}};
    root["geometry"]["separation_m"] = f.geometry.separation_m;
    root["geometry"]["timing_jitter_s"] = f.geometry.timing_jitter_s;
    root["geometry"]["alignment_uncertainty_m"] = f.geometry.alignment_uncertainty_m;
    for (const auto& [key, st] :
         {std::pair<const char*, const StationSpec*>{"station_a", &f.geometry.station_a},
          std::pair<const char*, const StationSpec*>{"station_b", &f.geometry.station_b}}) {
        root["geometry"][key]["choice_velocity_mps"] = {st->choice_velocity_mps.x,
                                                        st->choice_velocity_mps.y,
                                                        st->choice_velocity_mps.z};
        root["geometry"][key]["trigger_velocity_mps"] = {st->trigger_velocity_mps.x,
                                                         st->trigger_velocity_mps.y,
                                                         st->trigger_velocity_mps.z};
    }
    root["efficiency"] = {{"a", f.efficiency.a}, {"b", f.efficiency.b}};
    root["trials"] = f.trials;
    root["seed"] = f.seed;
    return root.dump(2) + "\n";
}

/// Concrete bench layout: stations on one axis, A at the origin and B at
/// +separation along x. The combined timing slack (jitter plus alignment
/// converted at c) is applied as a worst-case shift of station B's events,
/// so verdict margins work off exact coordinates.
inline Scenario to_scenario(const ScenarioFile& f, std::string name = {}) {
    Scenario s;
    s.name = std::move(name);

    if (f.state.kind == "singlet") {
        s.state = TwoQubitState::singlet();
    } else {
        std::array<Complex, 4> amps;
        for (int k = 0; k < 4; ++k) amps[k] = Complex(f.state.amplitudes[k][0], f.state.amplitudes[k][1]);
        s.state = TwoQubitState::from_amplitudes(amps);
    }

    if (f.model.kind == "lhv_deterministic_sign") {
        s.model = LhvModel{LhvModelKind::deterministic_sign, 0.0};
    } else if (f.model.kind == "lhv_detection_loophole") {
        if (!(f.model.tau >= 0.0 && f.model.tau <= 1.0))
            throw ScenarioFormatError("model: 'tau' must be in [0, 1]");
        s.model = LhvModel{LhvModelKind::detection_loophole, f.model.tau};
    } else {
        CollapseModel cm;
        if (f.model.kind == "standard_qm") {
            cm.kind = CollapseModelKind::standard_qm;
        } else if (f.model.kind == "preferred_frame") {
            cm.kind = CollapseModelKind::preferred_frame;
            cm.preferred_frame = Frame(f.model.frame_velocity_mps);
            if (!(f.model.v_qi_c > 1.0))
                throw ScenarioFormatError("model: 'v_qi_c' must exceed 1");
            cm.v_qi_c = f.model.v_qi_c;
        } else if (f.model.kind == "trigger_device_frame") {
            cm.kind = CollapseModelKind::trigger_device_frame;
        } else if (f.model.kind == "choice_device_frame") {
            cm.kind = CollapseModelKind::choice_device_frame;
        } else {
            cm.kind = CollapseModelKind::per_frame_state_vector;
        }
        s.model = cm;
    }

    s.quad = {AnalyzerSetting(f.settings.a_rad), AnalyzerSetting(f.settings.a_prime_rad),
              AnalyzerSetting(f.settings.b_rad), AnalyzerSetting(f.settings.b_prime_rad)};

    const double slack_s =
        f.geometry.timing_jitter_s + f.geometry.alignment_uncertainty_m / speed_of_light_mps;
    const double dwell_s = 1e-9;  // setting choice to detection, same at both stations
    const Vec3 xa{0.0, 0.0, 0.0};
    const Vec3 xb{f.geometry.separation_m, 0.0, 0.0};
    s.station_a.choice_event = {0.0, xa};
    s.station_a.trigger_event = {dwell_s, xa};
    s.station_b.choice_event = {slack_s, xb};
    s.station_b.trigger_event = {dwell_s + slack_s, xb};
    s.station_a.choice_frame = Frame(f.geometry.station_a.choice_velocity_mps);
    s.station_a.trigger_frame = Frame(f.geometry.station_a.trigger_velocity_mps);
    s.station_b.choice_frame = Frame(f.geometry.station_b.choice_velocity_mps);
    s.station_b.trigger_frame = Frame(f.geometry.station_b.trigger_velocity_mps);
    s.station_a.alignment_uncertainty_s = 0.0;
    s.station_b.alignment_uncertainty_s = 0.0;

    s.efficiency_a = f.efficiency.a;
    s.efficiency_b = f.efficiency.b;
    s.trials = f.trials;
    s.seed = f.seed;
    validate_scenario(s);
    return s;
}

} // namespace bellsim
