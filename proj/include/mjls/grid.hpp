#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace mjls {

/// A labeled one-dimensional piece of the mode space: {label} x [lo, hi].
struct Component {
    int label = 0;
    double lo = 0.0;
    double hi = 1.0;
    int node_count = 1;

    double measure() const { return hi - lo; }
};

/// One quadrature node: (label, t) with t inside the component interval.
struct Node {
    int label = 0;
    double t = 0.0;
    int component = 0;  // index into GridSpace::components()
};

enum class QuadratureRule { Midpoint, Trapezoid };

inline QuadratureRule parse_quadrature(const std::string& tag) {
    if (tag == "midpoint") return QuadratureRule::Midpoint;
    if (tag == "trapezoid") return QuadratureRule::Trapezoid;
    throw std::invalid_argument("unknown quadrature rule: " + tag);
}

inline std::string quadrature_tag(QuadratureRule rule) {
    return rule == QuadratureRule::Midpoint ? "midpoint" : "trapezoid";
}

/// Finite quadrature representation of the mode space and its measure.
/// Nodes are ordered component by component; weights carry the measure,
/// so sums of weight*f(node) approximate integrals against mu.
class GridSpace {
  public:
    static std::shared_ptr<const GridSpace> build(std::vector<Component> components,
                                                  QuadratureRule rule = QuadratureRule::Midpoint) {
        if (components.empty()) throw std::invalid_argument("grid: empty component list");
        auto grid = std::make_shared<GridSpace>();
        grid->components_ = std::move(components);
        grid->rule_ = rule;
        std::vector<double> weights;
        for (std::size_t c = 0; c < grid->components_.size(); ++c) {
            const Component& comp = grid->components_[c];
            if (comp.node_count < 1)
                throw std::invalid_argument("grid: component " + std::to_string(comp.label) +
                                            " has non-positive node_count");
            if (!(comp.lo < comp.hi))
                throw std::invalid_argument("grid: component " + std::to_string(comp.label) +
                                            " has degenerate interval");
            const double len = comp.hi - comp.lo;
            if (rule == QuadratureRule::Midpoint) {
                const double h = len / comp.node_count;
                for (int j = 0; j < comp.node_count; ++j) {
                    grid->nodes_.push_back({comp.label, comp.lo + (j + 0.5) * h, int(c)});
                    weights.push_back(h);
                }
            } else {
                if (comp.node_count < 2)
                    throw std::invalid_argument("grid: trapezoid rule needs node_count >= 2");
                const double h = len / (comp.node_count - 1);
                for (int j = 0; j < comp.node_count; ++j) {
                    grid->nodes_.push_back({comp.label, comp.lo + j * h, int(c)});
                    const bool endpoint = (j == 0 || j == comp.node_count - 1);
                    weights.push_back(endpoint ? h / 2 : h);
                }
            }
        }
        grid->weights_ = Eigen::Map<const Eigen::VectorXd>(weights.data(), long(weights.size()));
        return grid;
    }

    const std::vector<Component>& components() const { return components_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    QuadratureRule rule() const { return rule_; }

    long size() const { return long(nodes_.size()); }
    double weight(long i) const { return weights_[i]; }
    const Node& node(long i) const { return nodes_[std::size_t(i)]; }

    double total_measure() const { return weights_.sum(); }

    double component_measure(int comp_index) const {
        double s = 0;
        for (long i = 0; i < size(); ++i)
            if (nodes_[std::size_t(i)].component == comp_index) s += weights_[i];
        return s;
    }

    int component_index_of_label(int label) const {
        for (std::size_t c = 0; c < components_.size(); ++c)
            if (components_[c].label == label) return int(c);
        throw std::invalid_argument("grid: unknown component label " + std::to_string(label));
    }

  private:
    std::vector<Component> components_;
    std::vector<Node> nodes_;
    Eigen::VectorXd weights_;
    QuadratureRule rule_ = QuadratureRule::Midpoint;
};

using GridPtr = std::shared_ptr<const GridSpace>;

/// Discretized stochastic kernel g(s|l) plus initial density nu.
/// density_(l, s) stores g(s|l): row = source node, column = target node.
/// Rows are rescaled at construction so that sum_s g(s|l) w(s) = 1 exactly.
class TransitionKernel {
  public:
    TransitionKernel(GridPtr grid, Eigen::MatrixXd density, Eigen::VectorXd initial_density)
        : grid_(std::move(grid)),
          density_(std::move(density)),
          initial_(std::move(initial_density)) {
        const long N = grid_->size();
        if (density_.rows() != N || density_.cols() != N)
            throw std::invalid_argument("kernel: density must be N x N over grid nodes");
        if (initial_.size() != N)
            throw std::invalid_argument("kernel: initial density size mismatch");
        if ((density_.array() < 0).any())
            throw std::invalid_argument("kernel: negative density entry");
        const Eigen::VectorXd& w = grid_->weights();
        for (long l = 0; l < N; ++l) {
            const double mass = density_.row(l).dot(w);
            if (mass <= 0)
                throw std::invalid_argument("kernel: all-zero density row at node " +
                                            std::to_string(l));
            if (std::abs(mass - 1.0) > 1e-3)
                warnings_.push_back("kernel: row " + std::to_string(l) +
                                    " rescaled by factor " + std::to_string(1.0 / mass));
            density_.row(l) /= mass;
        }
        // Discrete analogue of the nondegeneracy assumption on the chain:
        // every target node must be reachable with positive density mass.
        for (long l = 0; l < N; ++l) {
            if (density_.col(l).dot(w) <= 0)
                throw std::invalid_argument("kernel: target node " + std::to_string(l) +
                                            " is unreachable (zero incoming density)");
        }
        if ((initial_.array() <= 0).any())
            throw std::invalid_argument("kernel: initial density must be positive at every node");
        const double nu_mass = initial_.dot(w);
        if (std::abs(nu_mass - 1.0) > 1e-3)
            warnings_.push_back("kernel: initial density rescaled by factor " +
                                std::to_string(1.0 / nu_mass));
        initial_ /= nu_mass;
    }

    const GridPtr& grid() const { return grid_; }
    const Eigen::MatrixXd& density() const { return density_; }
    const Eigen::VectorXd& initial_density() const { return initial_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// g(s|l) with l the source node index and s the target node index.
    double g(long target, long source) const { return density_(source, target); }

  private:
    GridPtr grid_;
    Eigen::MatrixXd density_;
    Eigen::VectorXd initial_;
    std::vector<std::string> warnings_;
};

using KernelPtr = std::shared_ptr<const TransitionKernel>;

inline void check_row_stochastic(const Eigen::MatrixXd& mode_matrix, double tol = 1e-10) {
    if (mode_matrix.rows() != mode_matrix.cols())
        throw std::invalid_argument("mode matrix must be square");
    if ((mode_matrix.array() < 0).any())
        throw std::invalid_argument("mode matrix has negative entries");
    for (long i = 0; i < mode_matrix.rows(); ++i)
        if (std::abs(mode_matrix.row(i).sum() - 1.0) > tol)
            throw std::invalid_argument("mode matrix row " + std::to_string(i) +
                                        " does not sum to 1");
}

/// Kernel whose density is constant in the target coordinate: jump to
/// component j with probability P_{ij}, then land uniformly in j.
/// Initial density is uniform over the whole grid.
inline KernelPtr build_mode_block_kernel(const GridPtr& grid, const Eigen::MatrixXd& mode_matrix) {
    check_row_stochastic(mode_matrix);
    const auto& comps = grid->components();
    if (long(comps.size()) != mode_matrix.rows())
        throw std::invalid_argument("mode matrix size does not match component count");
    const long N = grid->size();
    Eigen::MatrixXd density(N, N);
    for (long l = 0; l < N; ++l) {
        const int ci = grid->node(l).component;
        for (long s = 0; s < N; ++s) {
            const int cj = grid->node(s).component;
            density(l, s) = mode_matrix(ci, cj) / comps[std::size_t(cj)].measure();
        }
    }
    Eigen::VectorXd nu = Eigen::VectorXd::Constant(N, 1.0 / grid->total_measure());
    return std::make_shared<TransitionKernel>(grid, std::move(density), std::move(nu));
}

/// Counting-measure representation of a finite mode set: one node per
/// label with unit weight, density equal to the transition probabilities.
inline std::pair<GridPtr, KernelPtr> finite_grid(const std::vector<int>& labels,
                                                 const Eigen::MatrixXd& mode_matrix) {
    if (labels.empty()) throw std::invalid_argument("finite_grid: empty label list");
    std::vector<Component> comps;
    comps.reserve(labels.size());
    for (int label : labels) comps.push_back({label, 0.0, 1.0, 1});
    GridPtr grid = GridSpace::build(std::move(comps), QuadratureRule::Midpoint);
    KernelPtr kernel = build_mode_block_kernel(grid, mode_matrix);
    return {grid, kernel};
}

}  // namespace mjls
