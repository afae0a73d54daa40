// Command-line front end: model ingestion, analysis orchestration, and
// CSV/JSON result emission.
//
// Exit codes: 0 success / stable / verified, 1 usage or input error,
// 2 unstable verdict or sign-condition failure, 3 non-convergence.

#include "mjls/mjls.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

namespace {

using nlohmann::json;

struct CommonOpts {
    std::string config_path;
    std::string out;
    std::optional<int> grid_nodes;
    std::optional<std::string> quadrature;
    bool dump_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("config", opts.config_path, "model config JSON")->required();
    cmd->add_option("--out", opts.out, "write the final JSON report to this file instead of stdout");
    cmd->add_option("--grid-nodes", opts.grid_nodes, "override per-component node count");
    cmd->add_option("--quadrature", opts.quadrature, "override quadrature rule (midpoint|trapezoid)");
    cmd->add_flag("--dump-config", opts.dump_config, "print the parsed config JSON and exit");
}

mjls::ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in " + path + ": " + e.what());
    }
    return mjls::parse_model_config(j);
}

void emit(const CommonOpts& opts, const json& report) {
    if (!opts.out.empty()) {
        std::ofstream out(opts.out);
        if (!out) throw std::invalid_argument("cannot open output file: " + opts.out);
        out << report.dump(2) << "\n";
    } else {
        std::cout << report.dump(2) << "\n";
    }
}

// Returns true when the dump-config path handled the command.
bool maybe_dump(const CommonOpts& opts, const mjls::ModelConfig& cfg) {
    if (!opts.dump_config) return false;
    emit(opts, mjls::dump_model_config(cfg));
    return true;
}

mjls::DisturbanceFn parse_disturbance(const std::string& tag, long r) {
    std::smatch m;
    if (tag == "zero") return mjls::zero_disturbance(r);
    if (std::regex_match(tag, m, std::regex(R"(exp\(([-+0-9.eE]+)\))")))
        return mjls::exp_disturbance(r, std::stod(m[1]));
    if (std::regex_match(tag, m, std::regex(R"(impulse\((\d+)\))")))
        return mjls::impulse_disturbance(r, std::stoi(m[1]));
    if (std::regex_match(tag, m, std::regex(R"(file\((.+)\))"))) {
        std::ifstream in(m[1].str());
        if (!in) throw std::invalid_argument("disturbance file not found: " + m[1].str());
        auto samples = std::make_shared<std::vector<double>>();
        double x;
        while (in >> x) samples->push_back(x);
        return [samples, r](int k) {
            const double v = std::size_t(k) < samples->size() ? (*samples)[std::size_t(k)] : 0.0;
            return (v * Eigen::VectorXd::Ones(r)).eval();
        };
    }
    throw std::invalid_argument("unknown disturbance tag: " + tag +
                                " (expected zero | exp(rate) | impulse(k0) | file(path))");
}

int cmd_analyze_stability(const CommonOpts& opts) {
    mjls::ModelConfig cfg = load_config(opts.config_path);
    if (maybe_dump(opts, cfg)) return 0;
    mjls::MjlsSystem sys = cfg.build_system(opts.grid_nodes, opts.quadrature);
    mjls::StabilityReport rep_c = mjls::check_emss_c(sys);
    mjls::StabilityReport rep_l = mjls::check_emss(sys);
    mjls::StabilityReport rep;
    rep.emss_c_verdict = rep_c.emss_c_verdict;
    rep.emss_verdict = rep_l.emss_verdict;
    rep.r_sigma_T = rep_c.r_sigma_T;
    rep.r_sigma_L = rep_l.r_sigma_L;
    rep.method_tags = {"spectral_T", "spectral_L"};
    json j = mjls::stability_report_to_json(rep);
    for (const auto& w : sys.kernel->warnings()) j["warnings"].push_back(w);
    emit(opts, j);
    const bool stable = rep.emss_c_verdict.value_or(false) && rep.emss_verdict.value_or(false);
    return stable ? 0 : 2;
}

int cmd_solve_are(const CommonOpts& opts, std::optional<double> gamma, std::optional<double> eps,
                  const std::string& csv_path, bool fidelity) {
    mjls::ModelConfig cfg = load_config(opts.config_path);
    if (maybe_dump(opts, cfg)) return 0;
    const std::optional<double> g = gamma ? gamma : cfg.gamma;
    if (!g) throw std::invalid_argument("no --gamma given and the config has no default");
    const double e = eps.value_or(cfg.epsilon.value_or(1e-5));
    mjls::MjlsSystem sys = cfg.build_system(opts.grid_nodes, opts.quadrature);
    try {
        mjls::AreSolution sol = mjls::solve_are(sys, *g, e, 100000, fidelity);
        mjls::BrlVerdict verdict = mjls::verify_brl_infinite(sys, *g, sol);
        json j = mjls::are_solution_to_json(sol);
        j["brl"] = mjls::brl_verdict_to_json(verdict);
        if (!csv_path.empty()) {
            std::ofstream csv(csv_path);
            if (!csv) throw std::invalid_argument("cannot open CSV output: " + csv_path);
            mjls::write_field_csv(csv, sol.K);
            j["csv"] = csv_path;
        }
        emit(opts, j);
        return verdict.verdict ? 0 : 2;
    } catch (const mjls::SignConditionViolation& e_sign) {
        json j;
        j["error"] = e_sign.what();
        j["indication"] = "attenuation norm >= gamma";
        emit(opts, j);
        return 2;
    } catch (const std::runtime_error& e_run) {
        json j;
        j["error"] = e_run.what();
        emit(opts, j);
        return 3;
    }
}

int cmd_simulate(const CommonOpts& opts, int n_traj, int steps, std::optional<std::uint64_t> seed,
                 const std::string& disturbance_tag, const std::string& prefix) {
    mjls::ModelConfig cfg = load_config(opts.config_path);
    if (maybe_dump(opts, cfg)) return 0;
    mjls::JumpModel model = cfg.build_jump_model();
    const std::uint64_t s = seed ? *seed : cfg.seed.value_or(0);
    const int horizon = steps > 0 ? steps : cfg.horizon.value_or(100);
    mjls::DisturbanceFn v = parse_disturbance(disturbance_tag, cfg.r);
    mjls::TrajectoryBatch batch =
        mjls::simulate_phi(model, s, cfg.x0, v, horizon, n_traj, cfg.time_step);

    const std::string traj_path = prefix + "_trajectories.csv";
    const std::string energy_path = prefix + "_energy.csv";
    const std::string moments_path = prefix + "_moments.csv";
    {
        std::ofstream f(traj_path);
        mjls::write_trajectories_csv(f, batch);
    }
    auto curve = mjls::energy_ratio_curve(batch);
    {
        std::ofstream f(energy_path);
        mjls::write_energy_csv(f, curve);
    }
    {
        std::ofstream f(moments_path);
        mjls::write_moments_csv(f, mjls::empirical_second_moment(batch));
    }
    json j;
    j["trajectories"] = n_traj;
    j["steps"] = horizon;
    j["seed"] = s;
    j["disturbance"] = disturbance_tag;
    j["files"] = {traj_path, energy_path, moments_path};
    double max_ratio = 0;
    bool any_ratio = false;
    for (const auto& p : curve)
        if (p.ratio) {
            max_ratio = std::max(max_ratio, *p.ratio);
            any_ratio = true;
        }
    if (any_ratio) j["max_energy_ratio"] = max_ratio;
    emit(opts, j);
    return 0;
}

int cmd_hinf_bound(const CommonOpts& opts, double lo, double hi, double tol) {
    mjls::ModelConfig cfg = load_config(opts.config_path);
    if (maybe_dump(opts, cfg)) return 0;
    mjls::MjlsSystem sys = cfg.build_system(opts.grid_nodes, opts.quadrature);
    mjls::BisectionResult res =
        mjls::hinf_bisection(sys, lo, hi, tol, cfg.epsilon.value_or(1e-5));
    json j;
    j["gamma_lo"] = res.lo;
    j["gamma_hi"] = res.hi;
    j["width"] = res.hi - res.lo;
    j["evaluations"] = res.evaluations;
    emit(opts, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability and H-infinity analysis of Markov jump linear systems "
                 "with modes on a gridded Borel space"};
    app.require_subcommand(1);

    CommonOpts stab_opts;
    CLI::App* stab = app.add_subcommand("analyze-stability", "spectral stability verdicts");
    add_common(stab, stab_opts);

    CommonOpts are_opts;
    std::optional<double> gamma, eps;
    std::string csv_path = "K.csv";
    bool fidelity = false;
    CLI::App* are = app.add_subcommand("solve-are", "coupled ARE solve + BRL verification");
    add_common(are, are_opts);
    are->add_option("--gamma", gamma, "attenuation level");
    are->add_option("--eps", eps, "computational accuracy (default 1e-5)");
    are->add_option("--csv", csv_path, "CSV output path for the solution field K");
    are->add_flag("--fidelity-algorithm1", fidelity,
                  "recompute both compared iterates from zero each round");

    CommonOpts sim_opts;
    int n_traj = 100, steps = 0;
    std::optional<std::uint64_t> seed;
    std::string disturbance_tag = "zero", prefix = "sim";
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo trajectory simulation");
    add_common(sim, sim_opts);
    sim->add_option("--traj", n_traj, "number of trajectories");
    sim->add_option("--steps", steps, "horizon (default from config)");
    sim->add_option("--seed", seed, "master RNG seed");
    sim->add_option("--disturbance", disturbance_tag, "zero | exp(rate) | impulse(k0) | file(path)");
    sim->add_option("--prefix", prefix, "CSV output path prefix");

    CommonOpts bound_opts;
    double lo = 0, hi = 0, tol = 1e-3;
    CLI::App* bound = app.add_subcommand("hinf-bound", "bisection bound on the attenuation norm");
    add_common(bound, bound_opts);
    bound->add_option("--lo", lo, "infeasible lower gamma")->required();
    bound->add_option("--hi", hi, "feasible upper gamma")->required();
    bound->add_option("--tol", tol, "interval width tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (stab->parsed()) return cmd_analyze_stability(stab_opts);
        if (are->parsed()) return cmd_solve_are(are_opts, gamma, eps, csv_path, fidelity);
        if (sim->parsed())
            return cmd_simulate(sim_opts, n_traj, steps, seed, disturbance_tag, prefix);
        if (bound->parsed()) return cmd_hinf_bound(bound_opts, lo, hi, tol);
    } catch (const std::invalid_argument& e) {
        nlohmann::json j;
        j["error"] = e.what();
        std::cout << j.dump(2) << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json j;
        j["error"] = e.what();
        std::cout << j.dump(2) << "\n";
        return 1;
    }
    return 1;
}
