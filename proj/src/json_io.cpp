#include "maserlab/json_io.hpp"

namespace maserlab {

using nlohmann::json;

json to_json(const PhaseLabel& label) {
    const auto& e = label.evidence;
    json j{{"kind", to_string(label.kind)},
           {"omega_s", label.omega_s ? json(*label.omega_s) : json(nullptr)},
           {"rules", label.rules},
           {"evidence",
            {{"amplitude", e.amplitude},
             {"lambda", e.lambda},
             {"lambda_error", e.lambda_error},
             {"peak_count", e.peak_count},
             {"peak_hz", e.peak_hz},
             {"section_points", e.section_points},
             {"cluster_radius", e.cluster_radius},
             {"section_statistic", e.section_statistic},
             {"unclassified", e.unclassified},
             {"note", e.note}}}};
    return j;
}

PhaseLabel label_from_json(const json& j) {
    PhaseLabel label;
    const auto kind = phase_from_string(j.at("kind").get<std::string>());
    if (!kind) throw Error("label: unknown kind " + j.at("kind").dump());
    label.kind = *kind;
    if (j.contains("omega_s") && !j.at("omega_s").is_null()) label.omega_s = j.at("omega_s").get<double>();
    label.rules = j.value("rules", std::string(kClassifierVersion));
    if (j.contains("evidence")) {
        const auto& v = j.at("evidence");
        auto& e = label.evidence;
        e.amplitude = v.value("amplitude", 0.0);
        e.lambda = v.value("lambda", 0.0);
        e.lambda_error = v.value("lambda_error", 0.0);
        e.peak_count = v.value("peak_count", std::size_t{0});
        e.peak_hz = v.value("peak_hz", 0.0);
        e.section_points = v.value("section_points", std::size_t{0});
        e.cluster_radius = v.value("cluster_radius", 0.0);
        e.section_statistic = v.value("section_statistic", 0.0);
        e.unclassified = v.value("unclassified", false);
        e.note = v.value("note", std::string{});
    }
    return label;
}

json to_json(const LyapunovResult& r) {
    return {{"lambda", r.lambda},   {"std_error", r.std_error}, {"k_steps", r.k_steps},
            {"tau", r.tau},         {"retries", r.retries}};
}

json to_json(const LimitCycleSolution& sol) {
    return {{"omega_s_hz", rad_to_hz(sol.omega_s)},
            {"amp", sol.amplitude()},
            {"amp2", sol.amp2},
            {"residuals", {sol.residuals[0], sol.residuals[1]}},
            {"iterations", sol.iterations},
            {"pinned", sol.pinned},
            {"warnings", sol.warnings}};
}

json to_json(const StabilityVerdict& v) {
    json j{{"stable", v.stable},
           {"leading_beta_re", v.leading_beta.real()},
           {"leading_beta_im", v.leading_beta.imag()},
           {"method", to_string(v.method)},
           {"zero_mode_residual", v.zero_mode_residual},
           {"agreement", v.agreement}};
    if (v.unstable_root_count) j["unstable_root_count"] = *v.unstable_root_count;
    if (v.characteristic_stable) j["characteristic_stable"] = *v.characteristic_stable;
    if (v.jacobian_stable) j["jacobian_stable"] = *v.jacobian_stable;
    if (v.jacobian_zero_mode) j["jacobian_zero_mode"] = {v.jacobian_zero_mode->real(), v.jacobian_zero_mode->imag()};
    if (!v.diagnostics.empty()) j["diagnostics"] = v.diagnostics;
    return j;
}

}  // namespace maserlab
