#pragma once

#include "mjls/grid.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace mjls {

/// Matrix-valued function on the mode space, sampled at grid nodes.
/// All values share one shape; symmetric fields carry a flag checked at
/// construction (tolerance 1e-12).
class MatrixField {
  public:
    MatrixField() = default;

    MatrixField(GridPtr grid, std::vector<Eigen::MatrixXd> values, bool symmetric = false)
        : grid_(std::move(grid)), values_(std::move(values)), symmetric_(symmetric) {
        if (long(values_.size()) != grid_->size())
            throw std::invalid_argument("field: one value per grid node required");
        const long r = values_.front().rows(), c = values_.front().cols();
        for (const auto& m : values_) {
            if (m.rows() != r || m.cols() != c)
                throw std::invalid_argument("field: non-uniform value shape");
            if (symmetric_ && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
                throw std::invalid_argument("field: symmetric flag set on asymmetric value");
        }
    }

    static MatrixField constant(GridPtr grid, const Eigen::MatrixXd& value, bool symmetric = false) {
        std::vector<Eigen::MatrixXd> vals(std::size_t(grid->size()), value);
        return MatrixField(std::move(grid), std::move(vals), symmetric);
    }

    static MatrixField identity(GridPtr grid, long n) {
        return constant(std::move(grid), Eigen::MatrixXd::Identity(n, n), true);
    }

    static MatrixField zero(GridPtr grid, long rows, long cols) {
        return constant(std::move(grid), Eigen::MatrixXd::Zero(rows, cols), rows == cols);
    }

    /// Sample an analytic parameterization f(label, t) at every node.
    static MatrixField sample(GridPtr grid,
                              const std::function<Eigen::MatrixXd(int, double)>& f,
                              bool symmetric = false) {
        std::vector<Eigen::MatrixXd> vals;
        vals.reserve(std::size_t(grid->size()));
        for (long i = 0; i < grid->size(); ++i) {
            const Node& nd = grid->node(i);
            vals.push_back(f(nd.label, nd.t));
        }
        return MatrixField(std::move(grid), std::move(vals), symmetric);
    }

    const GridPtr& grid() const { return grid_; }
    long size() const { return long(values_.size()); }
    long rows() const { return values_.front().rows(); }
    long cols() const { return values_.front().cols(); }
    bool symmetric() const { return symmetric_; }

    const Eigen::MatrixXd& operator[](long i) const { return values_[std::size_t(i)]; }
    Eigen::MatrixXd& operator[](long i) { return values_[std::size_t(i)]; }
    const std::vector<Eigen::MatrixXd>& values() const { return values_; }

    MatrixField& operator+=(const MatrixField& o) {
        check_same_shape(o);
        for (long i = 0; i < size(); ++i) values_[std::size_t(i)] += o[i];
        symmetric_ = symmetric_ && o.symmetric_;
        return *this;
    }
    MatrixField& operator-=(const MatrixField& o) {
        check_same_shape(o);
        for (long i = 0; i < size(); ++i) values_[std::size_t(i)] -= o[i];
        symmetric_ = symmetric_ && o.symmetric_;
        return *this;
    }
    MatrixField& operator*=(double c) {
        for (auto& m : values_) m *= c;
        return *this;
    }

    friend MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
    friend MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }
    friend MatrixField operator*(double c, MatrixField a) { return a *= c; }

    void check_same_shape(const MatrixField& o) const {
        if (grid_ != o.grid_ || rows() != o.rows() || cols() != o.cols())
            throw std::invalid_argument("field: shape or grid mismatch");
    }

  private:
    GridPtr grid_;
    std::vector<Eigen::MatrixXd> values_;
    bool symmetric_ = false;
};

inline double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

/// Re-symmetrize and mark symmetric; suppresses arithmetic drift.
inline MatrixField symmetrize(const MatrixField& f) {
    std::vector<Eigen::MatrixXd> vals;
    vals.reserve(std::size_t(f.size()));
    for (long i = 0; i < f.size(); ++i)
        vals.push_back(((f[i] + f[i].transpose()) / 2).eval());
    return MatrixField(f.grid(), std::move(vals), true);
}

/// ||P||_1 = integral of the per-node spectral norm against mu.
inline double norm_one(const MatrixField& f) {
    double s = 0;
    for (long i = 0; i < f.size(); ++i) s += spectral_norm(f[i]) * f.grid()->weight(i);
    return s;
}

/// ||P||_inf = sup over nodes of the spectral norm.
inline double norm_inf(const MatrixField& f) {
    double s = 0;
    for (long i = 0; i < f.size(); ++i) s = std::max(s, spectral_norm(f[i]));
    return s;
}

/// <V;U> = integral of tr(V' U) against mu.
inline double pairing(const MatrixField& v, const MatrixField& u) {
    v.check_same_shape(u);
    double s = 0;
    for (long i = 0; i < v.size(); ++i)
        s += (v[i].transpose() * u[i]).trace() * v.grid()->weight(i);
    return s;
}

/// Node-wise minimum eigenvalue certificate for the ordering P >= threshold*I.
struct OrderingCertificate {
    double min_eigenvalue_over_nodes = 0.0;
    long argmin_node = 0;
    double threshold = 0.0;

    double margin() const { return min_eigenvalue_over_nodes - threshold; }
    bool holds() const { return margin() >= 0; }
};

inline OrderingCertificate uniform_psd_margin(const MatrixField& f, double threshold = 0.0) {
    if (!f.symmetric())
        throw std::invalid_argument("uniform_psd_margin requires a symmetric field");
    OrderingCertificate cert;
    cert.threshold = threshold;
    cert.min_eigenvalue_over_nodes = std::numeric_limits<double>::infinity();
    for (long i = 0; i < f.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f[i], Eigen::EigenvaluesOnly);
        const double lam = es.eigenvalues()(0);
        if (lam < cert.min_eigenvalue_over_nodes) {
            cert.min_eigenvalue_over_nodes = lam;
            cert.argmin_node = i;
        }
    }
    return cert;
}

}  // namespace mjls
