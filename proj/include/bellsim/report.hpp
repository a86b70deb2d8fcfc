#pragma once

// Text renderers for run summaries and bound sweeps. Formatting is pinned
// (scientific, six significant digits, fixed key order) so identical
// invocations produce byte-identical files.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "bellsim/engine.hpp"
#include "bellsim/spacetime.hpp"

namespace bellsim {

/// Scientific notation with six significant digits. Infinities render as
/// "inf"/"-inf" (callers quote or replace them where the format forbids it).
inline std::string sci6(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.5e", v);
    return buf;
}

namespace detail {

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

} // namespace detail

inline std::string summary_to_json(const Summary& sum) {
    std::string o;
    o += "{\n";
    o += "  \"scenario\": \"" + detail::json_escape(sum.scenario) + "\",\n";
    o += "  \"model\": \"" + sum.model + "\",\n";
    o += "  \"seed\": " + std::to_string(sum.seed) + ",\n";
    o += "  \"trials\": " + std::to_string(sum.trials) + ",\n";
    o += "  \"pairs\": [\n";
    for (int p = 0; p < 4; ++p) {
        const PairSummary& ps = sum.pairs[p];
        o += "    {\"label\": \"" + ps.label + "\", \"setting_a_rad\": " + sci6(ps.setting_a_rad) +
             ", \"setting_b_rad\": " + sci6(ps.setting_b_rad) +
             ", \"n\": " + std::to_string(ps.coincidences) + ", \"e\": " + sci6(ps.e) +
             ", \"stderr\": " + sci6(ps.stderr_) +
             ", \"undersampled\": " + (ps.undersampled ? "true" : "false") + "}";
        o += p < 3 ? ",\n" : "\n";
    }
    o += "  ],\n";
    o += "  \"s\": " + sci6(sum.s) + ",\n";
    o += "  \"abs_s\": " + sci6(sum.abs_s) + ",\n";
    o += "  \"stderr_s\": " + sci6(sum.stderr_s) + ",\n";
    o += std::string("  \"violates_local\": ") + (sum.violates_local ? "true" : "false") + ",\n";
    o += "  \"z\": " + (sum.z_defined ? sci6(sum.z) : std::string("null")) + ",\n";
    o += "  \"coincidences\": " + std::to_string(sum.coincidences) + ",\n";
    o += "  \"detected_pair_fraction\": " + sci6(sum.detected_pair_fraction) + ",\n";
    o += "  \"singles_a\": {\"plus\": " + std::to_string(sum.singles_a[0]) +
         ", \"minus\": " + std::to_string(sum.singles_a[1]) +
         ", \"no_detection\": " + std::to_string(sum.singles_a[2]) + "},\n";
    o += "  \"singles_b\": {\"plus\": " + std::to_string(sum.singles_b[0]) +
         ", \"minus\": " + std::to_string(sum.singles_b[1]) +
         ", \"no_detection\": " + std::to_string(sum.singles_b[2]) + "},\n";
    o += "  \"verdicts\": {";
    for (std::size_t k = 0; k < sum.verdicts.size(); ++k) {
        o += "\"" + sum.verdicts[k].first + "\": " + std::to_string(sum.verdicts[k].second);
        if (k + 1 < sum.verdicts.size()) o += ", ";
    }
    o += "}";
    if (sum.multi_psi) {
        o += ",\n  \"multi_psi\": {\"trials\": " + std::to_string(sum.multi.trials) +
             ", \"double_detections\": " + std::to_string(sum.multi.double_detections) +
             ", \"zero_detections\": " + std::to_string(sum.multi.zero_detections) +
             ", \"moving_fired\": " + std::to_string(sum.multi.moving_fired) +
             ", \"partner_fired\": " + std::to_string(sum.multi.partner_fired) + "}";
    }
    o += "\n}\n";
    return o;
}

inline std::string summary_to_csv(const Summary& sum) {
    static constexpr const char* pair_keys[4] = {"ab", "abp", "apb", "apbp"};
    std::string o = "key,value\n";
    const auto row = [&o](const std::string& k, const std::string& v) { o += k + "," + v + "\n"; };
    row("scenario", sum.scenario);
    row("model", sum.model);
    row("seed", std::to_string(sum.seed));
    row("trials", std::to_string(sum.trials));
    for (int p = 0; p < 4; ++p) {
        const std::string base = std::string("pair_") + pair_keys[p];
        row(base + "_setting_a_rad", sci6(sum.pairs[p].setting_a_rad));
        row(base + "_setting_b_rad", sci6(sum.pairs[p].setting_b_rad));
        row(base + "_n", std::to_string(sum.pairs[p].coincidences));
        row(base + "_e", sci6(sum.pairs[p].e));
        row(base + "_stderr", sci6(sum.pairs[p].stderr_));
        row(base + "_undersampled", sum.pairs[p].undersampled ? "1" : "0");
    }
    row("s", sci6(sum.s));
    row("abs_s", sci6(sum.abs_s));
    row("stderr_s", sci6(sum.stderr_s));
    row("violates_local", sum.violates_local ? "1" : "0");
    row("z", sum.z_defined ? sci6(sum.z) : "");
    row("coincidences", std::to_string(sum.coincidences));
    row("detected_pair_fraction", sci6(sum.detected_pair_fraction));
    row("singles_a_plus", std::to_string(sum.singles_a[0]));
    row("singles_a_minus", std::to_string(sum.singles_a[1]));
    row("singles_a_no_detection", std::to_string(sum.singles_a[2]));
    row("singles_b_plus", std::to_string(sum.singles_b[0]));
    row("singles_b_minus", std::to_string(sum.singles_b[1]));
    row("singles_b_no_detection", std::to_string(sum.singles_b[2]));
    for (const auto& [label, count] : sum.verdicts) row("verdict_" + label, std::to_string(count));
    if (sum.multi_psi) {
        row("multi_psi_trials", std::to_string(sum.multi.trials));
        row("multi_psi_double_detections", std::to_string(sum.multi.double_detections));
        row("multi_psi_zero_detections", std::to_string(sum.multi.zero_detections));
        row("multi_psi_moving_fired", std::to_string(sum.multi.moving_fired));
        row("multi_psi_partner_fired", std::to_string(sum.multi.partner_fired));
    }
    return o;
}

inline std::string sweep_to_csv(const std::vector<RhoBound>& sweep) {
    std::string o = "rho_rad,bound_c,divergent\n";
    for (const RhoBound& r : sweep)
        o += sci6(r.rho_rad) + "," + sci6(r.bound_c) + "," + (r.divergent ? "1" : "0") + "\n";
    return o;
}

inline std::string bound_to_json(const VqiBound& b, const BoundInput& in) {
    std::string o = "{\n";
    o += "  \"length_m\": " + sci6(in.length_m) + ",\n";
    o += "  \"jitter_s\": " + sci6(in.jitter_s) + ",\n";
    o += "  \"beta\": " + sci6(in.beta) + ",\n";
    o += "  \"rho_rad\": " + sci6(in.rho_rad) + ",\n";
    o += "  \"bound_c\": " + (b.divergent ? std::string("null") : sci6(b.bound_c)) + ",\n";
    o += std::string("  \"divergent\": ") + (b.divergent ? "true" : "false") + "\n";
    o += "}\n";
    return o;
}

} // namespace bellsim
