#pragma once

#include "mjls/grid.hpp"
#include "mjls/matrix_field.hpp"
#include "mjls/system.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mjls {

/// Mode of the chain at one step: component label plus coordinate.
struct ModeState {
    int label = 0;
    double t = 0.0;
};

/// Analytic jump model used by the simulator: the chain jumps between
/// labeled components with mode-block probabilities and lands uniformly in
/// the target interval; coefficients are evaluated from the parameterization
/// the system was built from (continuous in t), not snapped to grid nodes.
struct JumpModel {
    std::vector<Component> components;
    Eigen::MatrixXd mode_matrix;         // row-stochastic over components
    Eigen::VectorXd initial_mode_probs;  // integral of nu over each component
    std::function<Eigen::MatrixXd(int, double)> A, B, C, D;
    bool continuous_coordinate = true;   // false: coordinate pinned to interval midpoint

    int component_of_label(int label) const {
        for (std::size_t c = 0; c < components.size(); ++c)
            if (components[c].label == label) return int(c);
        throw std::invalid_argument("jump model: unknown label " + std::to_string(label));
    }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Per-stream RNG derivation: stream i is a pure function of (seed, i).
inline std::mt19937_64 stream_rng(std::uint64_t master_seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(master_seed ^ splitmix64(stream)));
}

struct ChainSampler {
    const JumpModel* model;
    std::uint64_t master_seed = 0;
};

inline double sample_coordinate(const Component& comp, bool continuous, std::mt19937_64& rng) {
    if (!continuous) return (comp.lo + comp.hi) / 2;
    std::uniform_real_distribution<double> u(comp.lo, comp.hi);
    return u(rng);
}

inline int sample_categorical(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng) * probs.sum();
    for (long i = 0; i < probs.size(); ++i) {
        x -= probs[i];
        if (x <= 0) return int(i);
    }
    return int(probs.size()) - 1;
}

/// Mode path of length horizon+1; theta0 drawn from the initial density
/// when unspecified.
inline std::vector<ModeState> sample_chain(const JumpModel& model, std::mt19937_64& rng,
                                           int horizon,
                                           std::optional<ModeState> theta0 = std::nullopt) {
    std::vector<ModeState> path;
    path.reserve(std::size_t(horizon) + 1);
    int comp;
    if (theta0) {
        comp = model.component_of_label(theta0->label);
        path.push_back(*theta0);
    } else {
        comp = sample_categorical(model.initial_mode_probs, rng);
        path.push_back({model.components[std::size_t(comp)].label,
                        sample_coordinate(model.components[std::size_t(comp)],
                                          model.continuous_coordinate, rng)});
    }
    for (int k = 0; k < horizon; ++k) {
        comp = sample_categorical(model.mode_matrix.row(comp).transpose(), rng);
        path.push_back({model.components[std::size_t(comp)].label,
                        sample_coordinate(model.components[std::size_t(comp)],
                                          model.continuous_coordinate, rng)});
    }
    return path;
}

struct Trajectory {
    std::vector<ModeState> modes;          // length horizon+1
    std::vector<Eigen::VectorXd> states;   // length horizon+1
    std::vector<Eigen::VectorXd> outputs;  // length horizon+1
};

struct TrajectoryBatch {
    std::vector<Trajectory> trajectories;
    std::vector<Eigen::VectorXd> disturbance;  // v(k), shared across trajectories
    int horizon = 0;
    double time_step = 1.0;  // presentation scale for the time axis only
};

/// Disturbance signal as a function of the step index.
using DisturbanceFn = std::function<Eigen::VectorXd(int)>;

inline DisturbanceFn zero_disturbance(long r) {
    return [r](int) { return Eigen::VectorXd::Zero(r).eval(); };
}
inline DisturbanceFn exp_disturbance(long r, double rate) {
    return [r, rate](int k) { return (std::exp(-rate * k) * Eigen::VectorXd::Ones(r)).eval(); };
}
inline DisturbanceFn impulse_disturbance(long r, int k0) {
    return [r, k0](int k) {
        return (k == k0 ? Eigen::VectorXd::Ones(r) : Eigen::VectorXd::Zero(r)).eval();
    };
}

inline unsigned worker_count(int n_tasks) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("MJLS_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && unsigned(cap) < hw) hw = unsigned(cap);
    }
    return std::min<unsigned>(hw, unsigned(std::max(n_tasks, 1)));
}

/// Simulate n_traj independent trajectories of x(k+1) = A x + B v,
/// y = C x + D v along sampled mode paths. Trajectory i uses RNG stream i
/// of the master seed, so batches are reproducible bit for bit.
inline TrajectoryBatch simulate_phi(const JumpModel& model, std::uint64_t master_seed,
                                    const Eigen::VectorXd& x0, const DisturbanceFn& disturbance,
                                    int horizon, int n_traj, double time_step = 1.0) {
    TrajectoryBatch batch;
    batch.horizon = horizon;
    batch.time_step = time_step;
    batch.disturbance.reserve(std::size_t(horizon) + 1);
    for (int k = 0; k <= horizon; ++k) batch.disturbance.push_back(disturbance(k));
    batch.trajectories.resize(std::size_t(n_traj));

    auto run_one = [&](int i) {
        std::mt19937_64 rng = stream_rng(master_seed, std::uint64_t(i));
        Trajectory& traj = batch.trajectories[std::size_t(i)];
        traj.modes = sample_chain(model, rng, horizon);
        traj.states.reserve(std::size_t(horizon) + 1);
        traj.outputs.reserve(std::size_t(horizon) + 1);
        Eigen::VectorXd x = x0;
        for (int k = 0; k <= horizon; ++k) {
            const ModeState& mode = traj.modes[std::size_t(k)];
            const Eigen::VectorXd& v = batch.disturbance[std::size_t(k)];
            traj.states.push_back(x);
            traj.outputs.push_back(model.C(mode.label, mode.t) * x +
                                   model.D(mode.label, mode.t) * v);
            x = model.A(mode.label, mode.t) * x + model.B(mode.label, mode.t) * v;
        }
    };

    const unsigned workers = worker_count(n_traj);
    if (workers <= 1) {
        for (int i = 0; i < n_traj; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int i = int(w); i < n_traj; i += int(workers)) run_one(i);
            });
        for (auto& th : pool) th.join();
    }
    return batch;
}

struct EnergyPoint {
    int k = 0;
    double time = 0.0;
    double output_energy = 0.0;       // MC average of sum_{j<=k} ||y(j)||^2
    double disturbance_energy = 0.0;  // sum_{j<=k} ||v(j)||^2
    std::optional<double> ratio;      // sqrt(yE / vE); absent when vE = 0
};

/// Cumulative energy curve matching the l2(0,s) ratio experiment.
inline std::vector<EnergyPoint> energy_ratio_curve(const TrajectoryBatch& batch) {
    std::vector<EnergyPoint> curve;
    curve.reserve(std::size_t(batch.horizon) + 1);
    double ve = 0;
    std::vector<double> ye_per_traj(batch.trajectories.size(), 0.0);
    for (int k = 0; k <= batch.horizon; ++k) {
        ve += batch.disturbance[std::size_t(k)].squaredNorm();
        double ye = 0;
        for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
            ye_per_traj[i] += batch.trajectories[i].outputs[std::size_t(k)].squaredNorm();
            ye += ye_per_traj[i];
        }
        ye /= double(batch.trajectories.size());
        EnergyPoint p;
        p.k = k;
        p.time = k * batch.time_step;
        p.output_energy = ye;
        p.disturbance_energy = ve;
        if (ve > 0) p.ratio = std::sqrt(ye / ve);
        curve.push_back(p);
    }
    return curve;
}

/// Per-step average of x(k) x(k)', optionally restricted to trajectories
/// whose initial mode label matches the bucket.
inline std::vector<Eigen::MatrixXd> empirical_second_moment(
    const TrajectoryBatch& batch, std::optional<int> initial_label_bucket = std::nullopt) {
    const long n = batch.trajectories.front().states.front().size();
    std::vector<Eigen::MatrixXd> moments(std::size_t(batch.horizon) + 1,
                                         Eigen::MatrixXd::Zero(n, n));
    long count = 0;
    for (const Trajectory& traj : batch.trajectories) {
        if (initial_label_bucket && traj.modes.front().label != *initial_label_bucket) continue;
        ++count;
        for (int k = 0; k <= batch.horizon; ++k)
            moments[std::size_t(k)] +=
                traj.states[std::size_t(k)] * traj.states[std::size_t(k)].transpose();
    }
    if (count == 0) throw std::invalid_argument("empirical_second_moment: empty bucket");
    for (auto& m : moments) m /= double(count);
    return moments;
}

// --- CSV emitters ---

inline void write_trajectories_csv(std::ostream& os, const TrajectoryBatch& batch) {
    const long n = batch.trajectories.front().states.front().size();
    const long m = batch.trajectories.front().outputs.front().size();
    const long r = batch.disturbance.front().size();
    os << "traj_id,k,time,label,t";
    for (long i = 1; i <= n; ++i) os << ",x" << i;
    for (long i = 1; i <= m; ++i) os << ",y" << i;
    for (long i = 1; i <= r; ++i) os << ",v" << i;
    os << "\n";
    for (std::size_t id = 0; id < batch.trajectories.size(); ++id) {
        const Trajectory& traj = batch.trajectories[id];
        for (int k = 0; k <= batch.horizon; ++k) {
            os << id << "," << k << "," << k * batch.time_step << ","
               << traj.modes[std::size_t(k)].label << "," << traj.modes[std::size_t(k)].t;
            for (long i = 0; i < n; ++i) os << "," << traj.states[std::size_t(k)][i];
            for (long i = 0; i < m; ++i) os << "," << traj.outputs[std::size_t(k)][i];
            for (long i = 0; i < r; ++i) os << "," << batch.disturbance[std::size_t(k)][i];
            os << "\n";
        }
    }
}

inline void write_energy_csv(std::ostream& os, const std::vector<EnergyPoint>& curve) {
    os << "k,time,disturbance_energy,output_energy,ratio\n";
    for (const EnergyPoint& p : curve) {
        os << p.k << "," << p.time << "," << p.disturbance_energy << "," << p.output_energy << ",";
        if (p.ratio) os << *p.ratio;
        os << "\n";
    }
}

inline void write_moments_csv(std::ostream& os, const std::vector<Eigen::MatrixXd>& moments) {
    os << "k,i,j,value\n";
    for (std::size_t k = 0; k < moments.size(); ++k)
        for (long i = 0; i < moments[k].rows(); ++i)
            for (long j = 0; j < moments[k].cols(); ++j)
                os << k << "," << i + 1 << "," << j + 1 << "," << moments[k](i, j) << "\n";
}

}  // namespace mjls
