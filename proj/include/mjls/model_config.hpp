#pragma once

#include "mjls/grid.hpp"
#include "mjls/matrix_field.hpp"
#include "mjls/simulate.hpp"
#include "mjls/system.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mjls {

/// Per-mode coefficient: constant, or affine in the coordinate,
/// M(i, t) = M_at_0 + t (M_at_1 - M_at_0).
struct CoefficientSpec {
    Eigen::MatrixXd at0;
    Eigen::MatrixXd at1;
    bool constant = false;

    Eigen::MatrixXd eval(double t) const {
        return constant ? at0 : (at0 + t * (at1 - at0)).eval();
    }
};

/// Parsed model description; builds the grid system used for analysis and
/// the analytic jump model used for simulation.
struct ModelConfig {
    std::vector<Component> components;
    std::string measure = "lebesgue";  // "lebesgue" or "counting"
    Eigen::MatrixXd mode_matrix;
    std::string quadrature = "midpoint";
    std::map<std::string, std::map<int, CoefficientSpec>> coefficients;  // A, B, C, D by label
    long n = 0, r = 0, m = 0;
    Eigen::VectorXd x0;
    std::optional<double> gamma;
    std::optional<double> epsilon;
    std::optional<int> horizon;
    std::optional<std::uint64_t> seed;
    double time_step = 1.0;

    Eigen::MatrixXd eval_coefficient(const std::string& name, int label, double t) const {
        auto it = coefficients.find(name);
        if (it == coefficients.end() || it->second.find(label) == it->second.end()) {
            if (name == "B") return Eigen::MatrixXd::Zero(n, r);
            if (name == "C") return Eigen::MatrixXd::Zero(m, n);
            if (name == "D") return Eigen::MatrixXd::Zero(m, r);
            throw std::invalid_argument("config: coefficient A missing for label " +
                                        std::to_string(label));
        }
        return it->second.at(label).eval(t);
    }

    GridPtr build_grid(std::optional<int> node_override = std::nullopt,
                       std::optional<std::string> quad_override = std::nullopt) const {
        if (measure == "counting") {
            std::vector<Component> comps;
            for (const Component& c : components) comps.push_back({c.label, 0.0, 1.0, 1});
            return GridSpace::build(std::move(comps), QuadratureRule::Midpoint);
        }
        std::vector<Component> comps = components;
        if (node_override)
            for (Component& c : comps) c.node_count = *node_override;
        return GridSpace::build(std::move(comps),
                                parse_quadrature(quad_override.value_or(quadrature)));
    }

    MjlsSystem build_system(std::optional<int> node_override = std::nullopt,
                            std::optional<std::string> quad_override = std::nullopt) const {
        GridPtr grid = build_grid(node_override, quad_override);
        KernelPtr kernel = build_mode_block_kernel(grid, mode_matrix);
        auto field = [&](const std::string& name) {
            return MatrixField::sample(
                grid, [&](int label, double t) { return eval_coefficient(name, label, t); });
        };
        return MjlsSystem(kernel, field("A"), field("B"), field("C"), field("D"));
    }

    JumpModel build_jump_model() const {
        JumpModel model;
        model.mode_matrix = mode_matrix;
        model.continuous_coordinate = measure != "counting";
        if (measure == "counting")
            for (const Component& c : components) model.components.push_back({c.label, 0.0, 1.0, 1});
        else
            model.components = components;
        // Uniform initial density: component mass proportional to its measure.
        Eigen::VectorXd probs(long(model.components.size()));
        for (std::size_t c = 0; c < model.components.size(); ++c)
            probs[long(c)] = measure == "counting" ? 1.0 : model.components[c].measure();
        model.initial_mode_probs = probs / probs.sum();
        // Capture by value so the model outlives the config it came from.
        auto eval = [coeffs = coefficients, n = n, r = r, m = m](const std::string& name, int label,
                                                                double t) -> Eigen::MatrixXd {
            auto it = coeffs.find(name);
            if (it == coeffs.end() || it->second.find(label) == it->second.end()) {
                if (name == "B") return Eigen::MatrixXd::Zero(n, r);
                if (name == "C") return Eigen::MatrixXd::Zero(m, n);
                if (name == "D") return Eigen::MatrixXd::Zero(m, r);
                throw std::invalid_argument("config: coefficient A missing for label " +
                                            std::to_string(label));
            }
            return it->second.at(label).eval(t);
        };
        model.A = [eval](int label, double t) { return eval("A", label, t); };
        model.B = [eval](int label, double t) { return eval("B", label, t); };
        model.C = [eval](int label, double t) { return eval("C", label, t); };
        model.D = [eval](int label, double t) { return eval("D", label, t); };
        return model;
    }
};

// --- JSON (de)serialization ---

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("config: matrix must be a non-empty array of rows");
    const long rows = long(j.size());
    const long cols = long(j.at(0).size());
    Eigen::MatrixXd M(rows, cols);
    for (long i = 0; i < rows; ++i) {
        if (long(j.at(std::size_t(i)).size()) != cols)
            throw std::invalid_argument("config: ragged matrix rows");
        for (long k = 0; k < cols; ++k) M(i, k) = j.at(std::size_t(i)).at(std::size_t(k)).get<double>();
    }
    return M;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (long i = 0; i < M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (long k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
        rows.push_back(row);
    }
    return rows;
}

inline ModelConfig parse_model_config(const nlohmann::json& j) {
    ModelConfig cfg;
    if (!j.contains("components")) throw std::invalid_argument("config: missing \"components\"");
    for (const auto& jc : j.at("components")) {
        Component c;
        c.label = jc.at("label").get<int>();
        if (jc.contains("interval")) {
            c.lo = jc.at("interval").at(0).get<double>();
            c.hi = jc.at("interval").at(1).get<double>();
        }
        c.node_count = jc.value("nodes", 1);
        cfg.components.push_back(c);
    }
    cfg.measure = j.value("measure", std::string("lebesgue"));
    if (cfg.measure != "lebesgue" && cfg.measure != "counting")
        throw std::invalid_argument("config: measure must be \"lebesgue\" or \"counting\"");
    if (!j.contains("mode_matrix")) throw std::invalid_argument("config: missing \"mode_matrix\"");
    cfg.mode_matrix = matrix_from_json(j.at("mode_matrix"));
    check_row_stochastic(cfg.mode_matrix);
    if (cfg.mode_matrix.rows() != long(cfg.components.size()))
        throw std::invalid_argument("config: mode_matrix size does not match component count");
    cfg.quadrature = j.value("quadrature", std::string("midpoint"));
    parse_quadrature(cfg.quadrature);  // validate the tag

    if (!j.contains("coefficients") || !j.at("coefficients").contains("A"))
        throw std::invalid_argument("config: missing \"coefficients\" with at least \"A\"");
    for (const auto& [name, per_mode] : j.at("coefficients").items()) {
        if (name != "A" && name != "B" && name != "C" && name != "D")
            throw std::invalid_argument("config: unknown coefficient \"" + name + "\"");
        for (const auto& [label_str, spec_json] : per_mode.items()) {
            CoefficientSpec spec;
            if (spec_json.contains("const")) {
                spec.at0 = matrix_from_json(spec_json.at("const"));
                spec.at1 = spec.at0;
                spec.constant = true;
            } else {
                spec.at0 = matrix_from_json(spec_json.at("at0"));
                spec.at1 = matrix_from_json(spec_json.at("at1"));
                if (spec.at0.rows() != spec.at1.rows() || spec.at0.cols() != spec.at1.cols())
                    throw std::invalid_argument("config: at0/at1 shape mismatch for " + name);
            }
            cfg.coefficients[name][std::stoi(label_str)] = std::move(spec);
        }
    }
    const auto& A0 = cfg.coefficients.at("A").begin()->second.at0;
    if (A0.rows() != A0.cols()) throw std::invalid_argument("config: A must be square");
    cfg.n = A0.rows();
    cfg.r = cfg.coefficients.count("B") ? cfg.coefficients.at("B").begin()->second.at0.cols() : 1;
    cfg.m = cfg.coefficients.count("C") ? cfg.coefficients.at("C").begin()->second.at0.rows() : 1;

    if (j.contains("x0")) {
        const auto& jx = j.at("x0");
        cfg.x0 = Eigen::VectorXd(long(jx.size()));
        for (long i = 0; i < cfg.x0.size(); ++i) cfg.x0[i] = jx.at(std::size_t(i)).get<double>();
    } else {
        cfg.x0 = Eigen::VectorXd::Zero(cfg.n);
    }
    if (j.contains("gamma")) cfg.gamma = j.at("gamma").get<double>();
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.time_step = j.value("time_step", 1.0);
    return cfg;
}

inline nlohmann::json dump_model_config(const ModelConfig& cfg) {
    nlohmann::json j;
    j["components"] = nlohmann::json::array();
    for (const Component& c : cfg.components)
        j["components"].push_back({{"label", c.label},
                                   {"interval", {c.lo, c.hi}},
                                   {"nodes", c.node_count}});
    j["measure"] = cfg.measure;
    j["mode_matrix"] = matrix_to_json(cfg.mode_matrix);
    j["quadrature"] = cfg.quadrature;
    nlohmann::json coeffs;
    for (const auto& [name, per_mode] : cfg.coefficients) {
        nlohmann::json jm;
        for (const auto& [label, spec] : per_mode) {
            if (spec.constant)
                jm[std::to_string(label)] = {{"const", matrix_to_json(spec.at0)}};
            else
                jm[std::to_string(label)] = {{"at0", matrix_to_json(spec.at0)},
                                             {"at1", matrix_to_json(spec.at1)}};
        }
        coeffs[name] = jm;
    }
    j["coefficients"] = coeffs;
    j["x0"] = std::vector<double>(cfg.x0.data(), cfg.x0.data() + cfg.x0.size());
    if (cfg.gamma) j["gamma"] = *cfg.gamma;
    if (cfg.epsilon) j["epsilon"] = *cfg.epsilon;
    if (cfg.horizon) j["horizon"] = *cfg.horizon;
    if (cfg.seed) j["seed"] = *cfg.seed;
    j["time_step"] = cfg.time_step;
    return j;
}

}  // namespace mjls
