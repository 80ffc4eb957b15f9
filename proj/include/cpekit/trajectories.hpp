#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cpekit/linalg.hpp"

namespace cpekit {

// Time-indexed vector signal z(0..T-1), stored column-wise as a dim x T matrix.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(Matrix samples, std::string label = {});

    Index dim() const { return samples_.rows(); }
    Index length() const { return samples_.cols(); }
    const Matrix& samples() const { return samples_; }
    Vector at(Index k) const { return samples_.col(k); }
    const std::string& label() const { return label_; }

    Trajectory slice(Index begin, Index count) const;

private:
    Matrix samples_;
    std::string label_;
};

// Weighted, ordered collection of trajectories sharing a signal dimension.
class TrajectoryBundle {
public:
    TrajectoryBundle() = default;
    TrajectoryBundle(std::vector<Trajectory> members, std::vector<double> weights,
                     std::size_t shared_prefix_count = 0);
    // all weights 1
    explicit TrajectoryBundle(std::vector<Trajectory> members, std::size_t shared_prefix_count = 0);

    std::size_t size() const { return members_.size(); }
    Index dim() const { return members_.empty() ? 0 : members_.front().dim(); }
    const std::vector<Trajectory>& members() const { return members_; }
    const Trajectory& member(std::size_t i) const { return members_.at(i); }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t shared_prefix_count() const { return shared_prefix_count_; }
    std::vector<Index> lengths() const;

    TrajectoryBundle with_weights(std::vector<double> weights) const;
    TrajectoryBundle with_shared_prefix(std::size_t count) const;

private:
    std::vector<Trajectory> members_;
    std::vector<double> weights_;
    std::size_t shared_prefix_count_ = 0;
};

struct LtiSystem {
    Matrix a;
    Matrix b;

    LtiSystem() = default;
    LtiSystem(Matrix a_matrix, Matrix b_matrix);

    Index n() const { return a.rows(); }
    Index m() const { return b.cols(); }
    Matrix controllability_matrix() const;
    Index controllability_rank() const;
    // [A B], the identification target
    Matrix ab() const;
};

// Rollout record: inputs u(0..T-1) and states x(0..T).
class IoRecord {
public:
    IoRecord() = default;
    IoRecord(Trajectory inputs, Trajectory states);

    Index n() const { return states_.dim(); }
    Index m() const { return inputs_.dim(); }
    Index length() const { return inputs_.length(); }
    const Trajectory& inputs() const { return inputs_; }
    const Trajectory& states() const { return states_; }

    const Matrix& u() const { return inputs_.samples(); }
    Matrix x_minus() const { return states_.samples().leftCols(length()); }
    Matrix x_plus() const { return states_.samples().rightCols(length()); }

    // ||X+ - A X- - B U||_F
    double dynamics_residual(const LtiSystem& sys) const;

private:
    Trajectory inputs_;
    Trajectory states_;
};

class GraphTopology {
public:
    GraphTopology() = default;
    GraphTopology(std::size_t node_count, std::vector<std::pair<std::size_t, std::size_t>> edges);

    static GraphTopology ring(std::size_t n);
    static GraphTopology path(std::size_t n);
    static GraphTopology complete(std::size_t n);
    // 5-node path 0-1-2-3-4 plus chord 0-2 (nodes 1 and 3 in one-based numbering)
    static GraphTopology path_with_chord();

    std::size_t node_count() const { return node_count_; }
    const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
    const Matrix& laplacian() const { return laplacian_; }
    std::vector<std::size_t> neighbors(std::size_t i) const;
    double lambda_max() const;
    double algebraic_connectivity() const;
    bool is_connected(double tol = 1e-9) const;

private:
    std::size_t node_count_ = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    Matrix laplacian_;
};

// x(k+1) = A x(k) + B u(k) + w(k), w ~ N(0, noise_std^2 I). Gaussian draws come from
// std::mt19937_64 seeded with rng_seed, transformed by std::normal_distribution.
IoRecord simulate_lti(const LtiSystem& sys, const Vector& x0, const Trajectory& inputs, double noise_std,
                      std::uint64_t rng_seed);

using InputPolicy = std::function<Vector(Index k, const Vector& x)>;

// Closed-loop variant: u(k) = policy(k, x(k)).
IoRecord simulate_policy(const LtiSystem& sys, const Vector& x0, const InputPolicy& policy, Index steps,
                         double noise_std, std::uint64_t rng_seed);

// "voltage_converter" or "batch_reactor"
LtiSystem builtin_system(const std::string& name);
std::vector<std::string> builtin_system_names();

}  // namespace cpekit
