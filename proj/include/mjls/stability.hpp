#pragma once

#include "mjls/operators.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mjls {

/// Verdicts and diagnostics from a stability analysis.
struct StabilityReport {
    std::optional<bool> emss_c_verdict;  // empty when inconclusive at this resolution
    std::optional<bool> emss_verdict;
    double r_sigma_T = std::numeric_limits<double>::quiet_NaN();
    double r_sigma_L = std::numeric_limits<double>::quiet_NaN();
    std::optional<MatrixField> lyapunov_solution;
    double lyapunov_margin = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> method_tags;
};

/// Spectral estimates within [1 - eps_spec, 1 + eps_spec] stay inconclusive.
inline constexpr double kSpectralVerdictMargin = 1e-9;

inline std::optional<bool> spectral_verdict(double r_sigma, double eps_spec = kSpectralVerdictMargin) {
    if (r_sigma < 1.0 - eps_spec) return true;
    if (r_sigma > 1.0 + eps_spec) return false;
    return std::nullopt;
}

/// EMSS with conditioning: r_sigma(T_A) < 1.
inline StabilityReport check_emss_c(const MjlsSystem& sys, double tol = 1e-10,
                                    int max_iter = 5000) {
    StabilityReport rep;
    auto sr = spectral_radius_checked(make_T(sys.kernel, sys.A), sys.n(), tol, max_iter);
    rep.r_sigma_T = sr.estimate;
    rep.emss_c_verdict = spectral_verdict(sr.estimate);
    rep.method_tags.push_back("spectral_T");
    return rep;
}

/// EMSS: r_sigma(L_A) < 1.
inline StabilityReport check_emss(const MjlsSystem& sys, double tol = 1e-10, int max_iter = 5000) {
    StabilityReport rep;
    auto sr = spectral_radius_checked(make_L(sys.kernel, sys.A), sys.n(), tol, max_iter);
    rep.r_sigma_L = sr.estimate;
    rep.emss_verdict = spectral_verdict(sr.estimate);
    rep.method_tags.push_back("spectral_L");
    return rep;
}

/// Solve U - T_A(U) = V by the Neumann series U = sum_k T_A^k(V).
/// Requires r_sigma(T_A) < 1; the residual is verified after truncation.
inline MatrixField solve_lyapunov_T(const MjlsSystem& sys, const MatrixField& V, double tol = 1e-12,
                                    int max_iter = 100000) {
    auto sr = spectral_radius_checked(make_T(sys.kernel, sys.A), sys.n());
    if (!(sr.estimate < 1.0 - kSpectralVerdictMargin))
        throw std::runtime_error(
            "solve_lyapunov_T: r_sigma(T_A) = " + std::to_string(sr.estimate) +
            " >= 1; unstable, Lyapunov equation has no positive solution in the Neumann sense");
    MatrixField term = V;
    MatrixField U = V;
    int it = 0;
    for (; it < max_iter; ++it) {
        term = apply_T(*sys.kernel, sys.A, term);
        U += term;
        if (norm_inf(term) < tol) break;
    }
    if (it == max_iter)
        throw std::runtime_error("solve_lyapunov_T: Neumann series not converged");
    U = symmetrize(U);
    const double residual = norm_inf(U - apply_T(*sys.kernel, sys.A, U) - V);
    if (residual > 10 * std::max(tol, 1e-14) * std::max(1.0, norm_inf(V)))
        throw std::runtime_error("solve_lyapunov_T: residual " + std::to_string(residual) +
                                 " exceeds tolerance");
    return U;
}

/// Certificate for U - T_A(U) >= xi I at every node.
inline OrderingCertificate check_lyapunov_inequality(const MjlsSystem& sys, const MatrixField& U,
                                                     double xi) {
    MatrixField lhs = symmetrize(U - apply_T(*sys.kernel, sys.A, U));
    return uniform_psd_margin(lhs, xi);
}

/// Maximal xi for which the inequality holds: the margin of U - T_A(U) itself.
inline double max_lyapunov_xi(const MjlsSystem& sys, const MatrixField& U) {
    return check_lyapunov_inequality(sys, U, 0.0).min_eigenvalue_over_nodes;
}

/// Solve U - T_A(U) = C'C. Solution is PSD but not necessarily uniformly positive.
inline MatrixField solve_output_lyapunov(const MjlsSystem& sys, double tol = 1e-12,
                                         int max_iter = 100000) {
    std::vector<Eigen::MatrixXd> ctc;
    ctc.reserve(std::size_t(sys.grid->size()));
    for (long l = 0; l < sys.grid->size(); ++l)
        ctc.push_back((sys.C[l].transpose() * sys.C[l]).eval());
    MatrixField V(sys.grid, std::move(ctc), true);
    return solve_lyapunov_T(sys, V, tol, max_iter);
}

/// ||T_A^k(I)||_inf for k = 0..k_max; log-linear decay certifies stability.
inline std::vector<double> decay_profile_T(const MjlsSystem& sys, int k_max) {
    std::vector<double> profile;
    profile.reserve(std::size_t(k_max) + 1);
    MatrixField f = MatrixField::identity(sys.grid, sys.n());
    profile.push_back(norm_inf(f));
    for (int k = 0; k < k_max; ++k) {
        f = apply_T(*sys.kernel, sys.A, f);
        profile.push_back(norm_inf(f));
    }
    return profile;
}

/// Least-squares slope of log(profile) over k in [k_lo, k_hi]; negative
/// slope means fitted geometric decay rate alpha = exp(slope) < 1.
inline double log_decay_slope(const std::vector<double>& profile, int k_lo = 0, int k_hi = -1) {
    if (k_hi < 0) k_hi = int(profile.size()) - 1;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int k = k_lo; k <= k_hi; ++k) {
        if (profile[std::size_t(k)] <= 0) continue;
        const double x = k, y = std::log(profile[std::size_t(k)]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++cnt;
    }
    if (cnt < 2) throw std::invalid_argument("log_decay_slope: too few positive samples");
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

}  // namespace mjls
