#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpekit/hankel.hpp"
#include "cpekit/linalg.hpp"
#include "cpekit/trajectories.hpp"

namespace cpekit {

// r(k) = I_n (x) [x; u], an n(n+m) x n matrix, so that x(k+1) = r(k)' theta.
Matrix make_regressor(const Vector& x, const Vector& u);
// theta = rows of [A B] stacked into one column.
Vector vectorize_rows(const Matrix& ab);
Matrix unvectorize_rows(const Vector& theta, Index n, Index m);

struct LsResult {
    Matrix g_hat;  // estimate of [A B]
    bool unique = false;
    double residual = 0.0;
    RankReport rank_report;
    CompositionMode mode;
    std::string warning;
};

// G = H1(X+) [H1(X-); H1(U)]^dagger with all three blocks composed in `mode` (depth 1).
LsResult ls_identify(const std::vector<IoRecord>& records, CompositionMode mode, const std::vector<double>& weights,
                     double rel_tol = 0.0);

struct IdentifierGains {
    double alpha = 1.0;  // (0, 2]
    double xi = 2.0;     // > 0
};

struct IdentifierState {
    Vector theta;
    IdentifierGains gains;
    Index k = 0;

    static IdentifierState make(Vector theta, IdentifierGains gains);
};

// theta(k+1) = theta(k) + alpha r (r'r + xi I)^{-1} (x(k+1) - r' theta(k))
IdentifierState adaptive_step(const IdentifierState& state, const Matrix& r, const Vector& x_next);

struct AdaptiveRun {
    std::vector<double> errors;  // ||theta(k) - theta||, k = 0..steps
    IdentifierState final_state;
    IoRecord record;
};

AdaptiveRun run_adaptive(const LtiSystem& sys, const Vector& x0, const InputPolicy& input, const IdentifierState& state0,
                         double noise_std, Index steps, std::uint64_t seed);
AdaptiveRun run_adaptive(const LtiSystem& sys, const Vector& x0, const Trajectory& inputs,
                         const IdentifierState& state0, double noise_std, std::uint64_t seed);

struct DistributedGains {
    double alpha = 1.0;
    double gamma = 0.25;  // (0, 1/lambda_max(Laplacian))
    double xi = 2.0;
};

struct DistributedState {
    std::vector<Vector> thetas;
    DistributedGains gains;
    GraphTopology topology;
    Index k = 0;

    // Validates gain ranges and connectivity.
    static DistributedState make(std::vector<Vector> thetas, DistributedGains gains, GraphTopology topology);
};

// Synchronous update of all agents:
// theta_i += alpha r_i (r_i' r_i + xi I)^{-1} eps_i - gamma sum_{j in N_i} (theta_i - theta_j)
DistributedState distributed_step(const DistributedState& state, const std::vector<Matrix>& regressors,
                                  const std::vector<Vector>& x_next);

struct DistributedRun {
    Matrix errors;  // (steps+1) x N, ||theta_i(k) - theta||
    std::vector<double> consensus_spread;  // max_{i,j} ||theta_i - theta_j|| per step
    DistributedState final_state;
    std::vector<IoRecord> records;
};

DistributedRun run_distributed(const LtiSystem& sys, const std::vector<Vector>& x0s,
                               const std::vector<InputPolicy>& inputs, const DistributedState& state0,
                               double noise_std, Index steps, std::uint64_t seed);

struct ConvergenceReport {
    bool bounded = false;
    bool alpha_ok = false;
    bool xi_ok = false;
    std::optional<bool> gamma_ok;   // distributed only
    std::optional<bool> connected;  // distributed only
    bool excitation_ok = false;
    Index windows_checked = 0;
    Index deficient_window = -1;  // start index k of the first window failing condition iii
    bool all_ok() const;
};

// Gain ranges, finiteness of data, and windowed excitation of the inputs of order n+1 (mosaic
// composition of the members' windows [k, k+l-1] for k = 0, l, 2l, ...).
ConvergenceReport check_convergence_conditions(double alpha, double xi, const std::optional<double>& gamma,
                                               const std::optional<GraphTopology>& topology,
                                               const TrajectoryBundle& inputs, Index n, Index window_l);

struct LogLinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    Index points = 0;
};

// Least-squares fit of log(err_k) against k over the leading samples that stay above
// floor_ratio * err_0 (the machine-precision floor would otherwise flatten the fit).
LogLinearFit fit_log_linear(const std::vector<double>& errors, double floor_ratio = 1e-12);

}  // namespace cpekit
