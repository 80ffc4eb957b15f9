#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpekit/control.hpp"
#include "cpekit/trajectories.hpp"

namespace cpekit {

// Receding-horizon problem over a behavioral basis of depth N+n. The first n window
// positions are pinned to the history buffer (pairs u(k-n+1..k), x(k-n+1..k)); the
// remaining N positions are the predictions x_1..x_N, u_1..u_N, and u_1 is applied as u(k+1).
struct MpcProblem {
    Index horizon = 5;
    Matrix q_cost;      // n x n, PSD
    Matrix r_cost;      // m x m, PD
    Vector setpoint;    // x*
    BehavioralBasis basis;
    Matrix history_u;   // m x n, oldest first
    Matrix history_x;   // n x n, oldest first
    std::optional<Vector> u_lower;
    std::optional<Vector> u_upper;
    double g_regularization = 0.0;  // weight on ||g||^2

    Index n() const { return basis.n; }
    Index m() const { return basis.m; }
    // Checks dimensions, depth = N+n, Q PSD, R PD, bounds ordered.
    void validate() const;
    // Drops the oldest pair and appends (u, x).
    void push_history(const Vector& u, const Vector& x);
};

struct MpcSolution {
    Vector u_first;        // u_1
    Matrix u_pred;         // m x N
    Matrix x_pred;         // n x N
    Vector g;
    double cost = 0.0;
    double constraint_residual = 0.0;  // history pinning residual
    double solve_seconds = 0.0;
};

MpcSolution mpc_step(const MpcProblem& problem);

struct MpcRun {
    IoRecord record;                    // closed-loop inputs and states
    std::vector<double> state_norms;    // ||x(k)||, k = 0..T
    std::vector<double> solve_seconds;  // one per QP
    std::vector<double> constraint_residuals;  // history pinning residual per QP
    Index warmup_steps = 0;
};

// Applies the user-supplied warm-up inputs (m x n: u(0..n-1)) from x0 to fill the history,
// then runs `steps` receding-horizon iterations on the true system. The history buffer of
// `problem` is overwritten.
MpcRun mpc_run(const LtiSystem& sys, MpcProblem problem, const Vector& x0, const Matrix& warmup_inputs, Index steps,
               double noise_std = 0.0, std::uint64_t seed = 0);

}  // namespace cpekit
