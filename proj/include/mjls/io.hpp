#pragma once

#include "mjls/matrix_field.hpp"
#include "mjls/model_config.hpp"
#include "mjls/riccati.hpp"
#include "mjls/stability.hpp"

#include <json.hpp>

#include <ostream>

namespace mjls {

/// Flattened per-entry rows: label, t, i, j, value (1-based entry indices).
inline void write_field_csv(std::ostream& os, const MatrixField& f) {
    os << "label,t,i,j,value\n";
    for (long l = 0; l < f.size(); ++l) {
        const Node& nd = f.grid()->node(l);
        for (long i = 0; i < f.rows(); ++i)
            for (long j = 0; j < f.cols(); ++j)
                os << nd.label << "," << nd.t << "," << i + 1 << "," << j + 1 << ","
                   << f[l](i, j) << "\n";
    }
}

inline nlohmann::json field_to_json(const MatrixField& f) {
    nlohmann::json nodes = nlohmann::json::array();
    for (long l = 0; l < f.size(); ++l) {
        const Node& nd = f.grid()->node(l);
        nodes.push_back({{"label", nd.label}, {"t", nd.t}, {"value", matrix_to_json(f[l])}});
    }
    return nodes;
}

inline nlohmann::json stability_report_to_json(const StabilityReport& rep) {
    nlohmann::json j;
    j["emss_c_verdict"] =
        rep.emss_c_verdict ? nlohmann::json(*rep.emss_c_verdict) : nlohmann::json("inconclusive");
    j["emss_verdict"] =
        rep.emss_verdict ? nlohmann::json(*rep.emss_verdict) : nlohmann::json("inconclusive");
    if (std::isfinite(rep.r_sigma_T)) j["r_sigma_T"] = rep.r_sigma_T;
    if (std::isfinite(rep.r_sigma_L)) j["r_sigma_L"] = rep.r_sigma_L;
    if (std::isfinite(rep.lyapunov_margin)) j["lyapunov_margin"] = rep.lyapunov_margin;
    j["method_tags"] = rep.method_tags;
    return j;
}

inline nlohmann::json are_solution_to_json(const AreSolution& sol, bool include_field = false) {
    nlohmann::json j;
    j["gamma"] = sol.gamma;
    j["iterations"] = sol.iterations;
    j["residual_inf"] = sol.residual_inf;
    j["sign_margin"] = sol.sign_margin;
    j["closed_loop_radius"] = sol.closed_loop_radius;
    j["stabilizing"] = sol.stabilizing;
    if (include_field) j["K"] = field_to_json(sol.K);
    return j;
}

inline nlohmann::json brl_verdict_to_json(const BrlVerdict& v) {
    nlohmann::json j;
    j["verdict"] = v.verdict;
    j["residual_inf"] = v.residual_inf;
    j["psd_margin"] = v.psd_margin;
    j["sign_margin"] = v.sign_margin;
    j["closed_loop_radius"] = v.closed_loop_radius;
    j["detail"] = v.detail;
    return j;
}

}  // namespace mjls
