#pragma once

#include "mjls/mjls.hpp"

#include <json.hpp>

#include <fstream>
#include <random>
#include <string>

namespace mjls::testing {

inline ModelConfig load_fixture(const std::string& name) {
    const std::string path = std::string(MJLS_FIXTURE_DIR) + "/" + name;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("fixture not found: " + path);
    return parse_model_config(nlohmann::json::parse(in));
}

/// Scalar one-node system with a self-loop kernel: a, b, c, d as 1x1 fields.
inline MjlsSystem scalar_system(double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    auto [grid, kernel] = finite_grid({1}, Eigen::MatrixXd::Ones(1, 1));
    auto one = [&](double v) {
        return MatrixField::constant(grid, Eigen::MatrixXd::Constant(1, 1, v), true);
    };
    return MjlsSystem(kernel, one(a), one(b), one(c), one(d));
}

/// Random row-stochastic kernel on a grid with the given node counts.
inline KernelPtr random_kernel(const GridPtr& grid, std::mt19937_64& rng) {
    const long N = grid->size();
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd density(N, N);
    for (long i = 0; i < N; ++i)
        for (long j = 0; j < N; ++j) density(i, j) = u(rng);
    Eigen::VectorXd nu(N);
    for (long i = 0; i < N; ++i) nu[i] = u(rng);
    return std::make_shared<TransitionKernel>(grid, std::move(density), std::move(nu));
}

inline MatrixField random_field(const GridPtr& grid, long rows, long cols, std::mt19937_64& rng,
                                bool symmetric = false, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Eigen::MatrixXd> vals;
    for (long l = 0; l < grid->size(); ++l) {
        Eigen::MatrixXd m(rows, cols);
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) m(i, j) = scale * u(rng);
        if (symmetric) m = ((m + m.transpose()) / 2).eval();
        vals.push_back(std::move(m));
    }
    return MatrixField(grid, std::move(vals), symmetric);
}

inline MatrixField random_psd_field(const GridPtr& grid, long n, std::mt19937_64& rng,
                                    double scale = 1.0) {
    MatrixField f = random_field(grid, n, n, rng, false, scale);
    std::vector<Eigen::MatrixXd> vals;
    for (long l = 0; l < f.size(); ++l) vals.push_back((f[l] * f[l].transpose()).eval());
    return MatrixField(grid, std::move(vals), true);
}

/// Small random system with a contractive A; suitable for Riccati fixtures
/// with gamma around 1.
inline MjlsSystem random_stable_system(long n, long r, long m, int nodes_per_comp,
                                       std::mt19937_64& rng, double a_scale = 0.3) {
    GridPtr grid = GridSpace::build({{1, 0.0, 1.0, nodes_per_comp}, {2, 0.0, 1.0, nodes_per_comp}});
    KernelPtr kernel = random_kernel(grid, rng);
    MatrixField A = random_field(grid, n, n, rng, false, a_scale);
    MatrixField B = random_field(grid, n, r, rng, false, 0.2);
    MatrixField C = random_field(grid, m, n, rng, false, 0.3);
    MatrixField D = MatrixField::zero(grid, m, r);
    return MjlsSystem(kernel, std::move(A), std::move(B), std::move(C), std::move(D));
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// E||x(k)||^4 for k = 0..steps when x starts at x0 and the mode at nu:
/// the field E[x x' (x) x x' ; mode] evolves under L with coefficient
/// A (x) A, and vec(I)' Z vec(I) integrates to the fourth moment.
inline std::vector<double> fourth_moment_trace(const MjlsSystem& sys, const Eigen::VectorXd& x0,
                                               int steps) {
    const long n = x0.size();
    std::vector<Eigen::MatrixXd> a4;
    for (long l = 0; l < sys.grid->size(); ++l) a4.push_back(kron(sys.A[l], sys.A[l]));
    MatrixField A4(sys.grid, std::move(a4));
    const Eigen::MatrixXd xxt = x0 * x0.transpose();
    std::vector<Eigen::MatrixXd> z0;
    for (long l = 0; l < sys.grid->size(); ++l)
        z0.push_back((kron(xxt, xxt) * sys.kernel->initial_density()[l]).eval());
    MatrixField Z(sys.grid, std::move(z0), true);
    Eigen::VectorXd vec_i = Eigen::VectorXd::Zero(n * n);
    for (long i = 0; i < n; ++i) vec_i[i * n + i] = 1.0;
    std::vector<double> out;
    for (int k = 0; k <= steps; ++k) {
        double fourth = 0;
        for (long l = 0; l < sys.grid->size(); ++l)
            fourth += vec_i.dot(Z[l] * vec_i) * sys.grid->weight(l);
        out.push_back(fourth);
        if (k < steps) Z = apply_L(*sys.kernel, A4, Z);
    }
    return out;
}

}  // namespace mjls::testing
