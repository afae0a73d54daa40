#pragma once

#include "mjls/grid.hpp"
#include "mjls/matrix_field.hpp"
#include "mjls/system.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mjls {

/// E(U)(l) = integral of g(s|l) U(s) mu(ds).
inline MatrixField apply_E(const TransitionKernel& kernel, const MatrixField& U) {
    const GridPtr& grid = kernel.grid();
    if (U.grid() != grid) throw std::invalid_argument("apply_E: grid mismatch");
    const long N = grid->size();
    std::vector<Eigen::MatrixXd> out(std::size_t(N), Eigen::MatrixXd::Zero(U.rows(), U.cols()));
    for (long l = 0; l < N; ++l) {
        for (long s = 0; s < N; ++s) {
            const double c = kernel.density()(l, s) * grid->weight(s);
            if (c != 0) out[std::size_t(l)] += c * U[s];
        }
    }
    return MatrixField(grid, std::move(out), U.symmetric());
}

/// T_K(U)(l) = K(l)' E(U)(l) K(l).
inline MatrixField apply_T(const TransitionKernel& kernel, const MatrixField& K,
                           const MatrixField& U) {
    if (U.rows() != K.rows() || U.cols() != K.rows())
        throw std::invalid_argument("apply_T: shapes do not compose");
    MatrixField EU = apply_E(kernel, U);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(std::size_t(K.size()));
    for (long l = 0; l < K.size(); ++l)
        out.push_back((K[l].transpose() * EU[l] * K[l]).eval());
    MatrixField res(K.grid(), std::move(out), false);
    return U.symmetric() ? symmetrize(res) : res;
}

/// L_K(V)(l) = integral of g(l|s) K(s) V(s) K(s)' mu(ds).
inline MatrixField apply_L(const TransitionKernel& kernel, const MatrixField& K,
                           const MatrixField& V) {
    const GridPtr& grid = kernel.grid();
    if (V.grid() != grid || K.grid() != grid) throw std::invalid_argument("apply_L: grid mismatch");
    if (V.rows() != K.cols() || V.cols() != K.cols())
        throw std::invalid_argument("apply_L: shapes do not compose");
    const long N = grid->size();
    const long n = K.rows();
    std::vector<Eigen::MatrixXd> kvk;
    kvk.reserve(std::size_t(N));
    for (long s = 0; s < N; ++s)
        kvk.push_back((K[s] * V[s] * K[s].transpose()).eval());
    std::vector<Eigen::MatrixXd> out(std::size_t(N), Eigen::MatrixXd::Zero(n, n));
    for (long l = 0; l < N; ++l) {
        for (long s = 0; s < N; ++s) {
            const double c = kernel.density()(s, l) * grid->weight(s);
            if (c != 0) out[std::size_t(l)] += c * kvk[std::size_t(s)];
        }
    }
    MatrixField res(grid, std::move(out), false);
    return V.symmetric() ? symmetrize(res) : res;
}

/// Handle on one of the structured linear operators acting on symmetric
/// fields; kind E carries no coefficient field.
struct OperatorHandle {
    enum class Kind { L, T, E };

    Kind kind;
    KernelPtr kernel;
    std::optional<MatrixField> coefficient;

    long dim() const {
        if (kind == Kind::L) return coefficient->rows();
        if (kind == Kind::T) return coefficient->cols();
        return -1;  // E acts on any square shape
    }

    MatrixField apply(const MatrixField& f) const {
        switch (kind) {
            case Kind::L: return apply_L(*kernel, *coefficient, f);
            case Kind::T: return apply_T(*kernel, *coefficient, f);
            default: return apply_E(*kernel, f);
        }
    }
};

inline OperatorHandle make_L(KernelPtr kernel, MatrixField K) {
    return {OperatorHandle::Kind::L, std::move(kernel), std::move(K)};
}
inline OperatorHandle make_T(KernelPtr kernel, MatrixField K) {
    return {OperatorHandle::Kind::T, std::move(kernel), std::move(K)};
}
inline OperatorHandle make_E(KernelPtr kernel) {
    return {OperatorHandle::Kind::E, std::move(kernel), std::nullopt};
}

struct SpectralRadiusResult {
    double estimate = 0.0;
    int iterations = 0;
    bool converged = false;
    double last_quotient = 0.0;
    double prev_quotient = 0.0;
};

/// Power iteration seeded with the identity field (interior point of the
/// positive cone; L_K and T_K are positive operators, so the Perron value
/// dominates there). Rayleigh quotients use the mu-weighted pairing.
inline SpectralRadiusResult spectral_radius(const OperatorHandle& op, long n, double tol = 1e-10,
                                            int max_iter = 5000) {
    SpectralRadiusResult res;
    MatrixField f = MatrixField::identity(op.kernel->grid(), n);
    f *= 1.0 / std::sqrt(pairing(f, f));
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int it = 1; it <= max_iter; ++it) {
        MatrixField g = op.apply(f);
        const double quotient = pairing(f, g);  // f has unit pairing norm
        const double gnorm = std::sqrt(pairing(g, g));
        res.iterations = it;
        res.prev_quotient = prev;
        res.last_quotient = quotient;
        if (gnorm == 0) {
            res.estimate = 0.0;
            res.converged = true;
            return res;
        }
        if (it >= 10 && std::isfinite(prev) &&
            std::abs(quotient - prev) < tol * std::max(1.0, std::abs(quotient))) {
            res.estimate = quotient;
            res.converged = true;
            return res;
        }
        prev = quotient;
        g *= 1.0 / gnorm;
        f = std::move(g);
    }
    res.estimate = res.last_quotient;
    return res;
}

inline SpectralRadiusResult spectral_radius_checked(const OperatorHandle& op, long n,
                                                    double tol = 1e-10, int max_iter = 5000) {
    SpectralRadiusResult res = spectral_radius(op, n, tol, max_iter);
    if (!res.converged)
        throw std::runtime_error("spectral_radius: no convergence in " +
                                 std::to_string(res.iterations) + " iterations (last quotients " +
                                 std::to_string(res.prev_quotient) + ", " +
                                 std::to_string(res.last_quotient) + ")");
    return res;
}

/// Half-vectorization of a symmetric field, scaled so the Euclidean dot
/// product of coordinate vectors equals the mu-weighted pairing: diagonal
/// entries carry sqrt(w), off-diagonals sqrt(2 w).
inline Eigen::VectorXd hvec_encode(const MatrixField& f) {
    const long n = f.rows();
    const long per = n * (n + 1) / 2;
    Eigen::VectorXd v(f.size() * per);
    const double s2 = std::sqrt(2.0);
    long idx = 0;
    for (long l = 0; l < f.size(); ++l) {
        const double sw = std::sqrt(f.grid()->weight(l));
        for (long i = 0; i < n; ++i)
            for (long j = i; j < n; ++j)
                v[idx++] = (i == j ? f[l](i, j) : s2 * f[l](i, j)) * sw;
    }
    return v;
}

inline MatrixField hvec_decode(const GridPtr& grid, long n, const Eigen::VectorXd& v) {
    const long per = n * (n + 1) / 2;
    if (v.size() != grid->size() * per) throw std::invalid_argument("hvec_decode: size mismatch");
    const double s2 = std::sqrt(2.0);
    std::vector<Eigen::MatrixXd> vals(std::size_t(grid->size()), Eigen::MatrixXd::Zero(n, n));
    long idx = 0;
    for (long l = 0; l < grid->size(); ++l) {
        const double sw = std::sqrt(grid->weight(l));
        for (long i = 0; i < n; ++i)
            for (long j = i; j < n; ++j) {
                const double x = v[idx++] / sw;
                const double e = (i == j) ? x : x / s2;
                vals[std::size_t(l)](i, j) = e;
                vals[std::size_t(l)](j, i) = e;
            }
    }
    return MatrixField(grid, std::move(vals), true);
}

/// Explicit matrix of the operator on half-vectorized symmetric fields.
/// With the pairing-isometric encoding, densify(L_K) is exactly the
/// transpose of densify(T_K).
inline Eigen::MatrixXd densify(const OperatorHandle& op, long n, long budget_cols = 20000) {
    const GridPtr& grid = op.kernel->grid();
    const long cols = grid->size() * n * (n + 1) / 2;
    if (cols > budget_cols)
        throw std::invalid_argument("densify: " + std::to_string(cols) +
                                    " columns exceed budget " + std::to_string(budget_cols));
    Eigen::MatrixXd M(cols, cols);
    for (long c = 0; c < cols; ++c) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(cols);
        e[c] = 1.0;
        M.col(c) = hvec_encode(op.apply(hvec_decode(grid, n, e)));
    }
    return M;
}

/// X(k+1) = L_A(X(k)): conditional second-moment recursion.
inline std::vector<MatrixField> moment_recursion(const MjlsSystem& sys, const MatrixField& X0,
                                                 int steps) {
    std::vector<MatrixField> seq;
    seq.reserve(std::size_t(steps) + 1);
    seq.push_back(X0);
    for (int k = 0; k < steps; ++k) seq.push_back(apply_L(*sys.kernel, sys.A, seq.back()));
    return seq;
}

// --- Riccati building blocks ---

inline MatrixField psi1(const MjlsSystem& sys, const MatrixField& U) {
    MatrixField res = apply_T(*sys.kernel, sys.A, U);
    for (long l = 0; l < res.size(); ++l) res[l] += sys.C[l].transpose() * sys.C[l];
    return symmetrize(res);
}

inline MatrixField psi2(const MjlsSystem& sys, const MatrixField& U) {
    MatrixField EU = apply_E(*sys.kernel, U);
    std::vector<Eigen::MatrixXd> vals;
    vals.reserve(std::size_t(EU.size()));
    for (long l = 0; l < EU.size(); ++l)
        vals.push_back((sys.A[l].transpose() * EU[l] * sys.B[l]).eval());
    return MatrixField(sys.grid, std::move(vals), false);
}

inline MatrixField psi3(const MjlsSystem& sys, const MatrixField& U, double gamma) {
    MatrixField res = apply_T(*sys.kernel, sys.B, U);
    const Eigen::MatrixXd gI = gamma * gamma * Eigen::MatrixXd::Identity(sys.r(), sys.r());
    for (long l = 0; l < res.size(); ++l)
        res[l] += sys.D[l].transpose() * sys.D[l] - gI;
    return symmetrize(res);
}

/// Thrown when Psi3 fails to be negative definite at some node.
struct SignConditionViolation : std::runtime_error {
    long node;
    int step;  // backward/forward index when applicable, -1 otherwise
    double max_eigenvalue;

    SignConditionViolation(long node_, int step_, double max_eig)
        : std::runtime_error("sign condition violated at node " + std::to_string(node_) +
                             (step_ >= 0 ? " (step " + std::to_string(step_) + ")" : "") +
                             ": max eigenvalue of Psi3 is " + std::to_string(max_eig)),
          node(node_),
          step(step_),
          max_eigenvalue(max_eig) {}
};

/// Min over nodes of lambda_min(-Psi3); positive iff Psi3 < 0 everywhere.
inline double sign_margin(const MatrixField& psi3_field) {
    double margin = std::numeric_limits<double>::infinity();
    for (long l = 0; l < psi3_field.size(); ++l) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-psi3_field[l], Eigen::EigenvaluesOnly);
        margin = std::min(margin, es.eigenvalues()(0));
    }
    return margin;
}

/// F(U)(l) = -Psi3(U)(l)^{-1} Psi2(U)(l)'; solved via Cholesky of -Psi3.
inline MatrixField gain_F(const MjlsSystem& sys, const MatrixField& U, double gamma,
                          double eps_sign = 0.0, int step = -1) {
    MatrixField p2 = psi2(sys, U);
    MatrixField p3 = psi3(sys, U, gamma);
    std::vector<Eigen::MatrixXd> vals;
    vals.reserve(std::size_t(p3.size()));
    for (long l = 0; l < p3.size(); ++l) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p3[l], Eigen::EigenvaluesOnly);
        const double max_eig = es.eigenvalues().maxCoeff();
        if (max_eig >= -eps_sign) throw SignConditionViolation(l, step, max_eig);
        Eigen::LLT<Eigen::MatrixXd> llt((-p3[l]).eval());
        vals.push_back(llt.solve(p2[l].transpose()).eval());  // F = (-Psi3)^{-1} Psi2'
    }
    return MatrixField(sys.grid, std::move(vals), false);
}

/// The BRL residual block W = [[Psi1(Y+) - Y, Psi2(Y+)], [Psi2(Y+)', Psi3(Y+)]].
inline MatrixField brl_residual_block(const MjlsSystem& sys, const MatrixField& Y_next,
                                      const MatrixField& Y_now, double gamma) {
    MatrixField p1 = psi1(sys, Y_next);
    MatrixField p2 = psi2(sys, Y_next);
    MatrixField p3 = psi3(sys, Y_next, gamma);
    const long n = sys.n(), r = sys.r();
    std::vector<Eigen::MatrixXd> vals;
    vals.reserve(std::size_t(p1.size()));
    for (long l = 0; l < p1.size(); ++l) {
        Eigen::MatrixXd w(n + r, n + r);
        w.topLeftCorner(n, n) = p1[l] - Y_now[l];
        w.topRightCorner(n, r) = p2[l];
        w.bottomLeftCorner(r, n) = p2[l].transpose();
        w.bottomRightCorner(r, r) = p3[l];
        vals.push_back(std::move(w));
    }
    return MatrixField(sys.grid, std::move(vals), true);
}

}  // namespace mjls
