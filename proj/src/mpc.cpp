#include "cpekit/mpc.hpp"

#include <chrono>
#include <random>

#include "cpekit/errors.hpp"
#include "cpekit/qp.hpp"

namespace cpekit {

void MpcProblem::validate() const {
    const Index nn = n(), mm = m();
    if (horizon < 1) throw InputError("mpc: horizon must be >= 1");
    if (basis.depth != horizon + nn)
        throw InputError("mpc: basis depth " + std::to_string(basis.depth) + " must equal N+n = " +
                         std::to_string(horizon + nn));
    if (q_cost.rows() != nn || q_cost.cols() != nn || !is_symmetric(q_cost) || symmetric_eig_min(q_cost) < -1e-12)
        throw InputError("mpc: Q must be a symmetric positive semidefinite n x n matrix");
    if (r_cost.rows() != mm || r_cost.cols() != mm || !is_symmetric(r_cost) || !(symmetric_eig_min(r_cost) > 0.0))
        throw InputError("mpc: R must be a symmetric positive definite m x m matrix");
    if (setpoint.size() != nn) throw InputError("mpc: setpoint dimension must be n");
    if (history_u.rows() != mm || history_u.cols() != nn || history_x.rows() != nn || history_x.cols() != nn)
        throw InputError("mpc: history buffer must hold exactly n input-state pairs");
    if (u_lower.has_value() != u_upper.has_value()) throw InputError("mpc: give both input bounds or neither");
    if (u_lower && (u_lower->size() != mm || u_upper->size() != mm || (u_lower->array() > u_upper->array()).any()))
        throw InputError("mpc: input bounds must be m-vectors with lower <= upper");
    if (g_regularization < 0.0) throw InputError("mpc: regularization weight must be nonnegative");
}

void MpcProblem::push_history(const Vector& u, const Vector& x) {
    const Index nn = n();
    if (nn > 1) {
        history_u.leftCols(nn - 1) = history_u.rightCols(nn - 1).eval();
        history_x.leftCols(nn - 1) = history_x.rightCols(nn - 1).eval();
    }
    history_u.col(nn - 1) = u;
    history_x.col(nn - 1) = x;
}

MpcSolution mpc_step(const MpcProblem& pr) {
    pr.validate();
    const auto start = std::chrono::steady_clock::now();
    const BehavioralBasis& b = pr.basis;
    const Index n = pr.n(), m = pr.m(), big_n = pr.horizon, cols = b.cols();
    const Matrix& h = b.matrix;

    Matrix hess = pr.g_regularization * 2.0 * Matrix::Identity(cols, cols);
    Vector f = Vector::Zero(cols);
    for (Index j = n; j < n + big_n; ++j) {
        const auto sx = h.middleRows(b.state_row(j), n);
        const auto su = h.middleRows(b.input_row(j), m);
        hess.noalias() += 2.0 * sx.transpose() * pr.q_cost * sx;
        hess.noalias() += 2.0 * su.transpose() * pr.r_cost * su;
        f.noalias() -= 2.0 * sx.transpose() * (pr.q_cost * pr.setpoint);
    }
    Matrix a_eq((n + m) * n, cols);
    Vector b_eq((n + m) * n);
    for (Index j = 0; j < n; ++j) {
        a_eq.middleRows(j * (n + m), n) = h.middleRows(b.state_row(j), n);
        a_eq.middleRows(j * (n + m) + n, m) = h.middleRows(b.input_row(j), m);
        b_eq.segment(j * (n + m), n) = pr.history_x.col(j);
        b_eq.segment(j * (n + m) + n, m) = pr.history_u.col(j);
    }
    Vector g;
    try {
        if (pr.u_lower) {
            Matrix c(m * big_n, cols);
            Vector lo(m * big_n), hi(m * big_n);
            for (Index j = 0; j < big_n; ++j) {
                c.middleRows(j * m, m) = h.middleRows(b.input_row(n + j), m);
                lo.segment(j * m, m) = *pr.u_lower;
                hi.segment(j * m, m) = *pr.u_upper;
            }
            g = qp_solve_box(hess, f, a_eq, b_eq, c, lo, hi);
        } else {
            g = qp_solve_eq(hess, f, a_eq, b_eq);
        }
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(std::string("mpc: history not representable by the basis (basis rank ") +
                              std::to_string(numeric_rank(h).numeric_rank) + "): " + e.what());
    }
    MpcSolution sol;
    sol.g = g;
    const Vector traj = h * g;
    sol.u_pred.resize(m, big_n);
    sol.x_pred.resize(n, big_n);
    for (Index j = 0; j < big_n; ++j) {
        sol.x_pred.col(j) = traj.segment(b.state_row(n + j), n);
        sol.u_pred.col(j) = traj.segment(b.input_row(n + j), m);
        const Vector dx = sol.x_pred.col(j) - pr.setpoint;
        sol.cost += dx.dot(pr.q_cost * dx) + sol.u_pred.col(j).dot(pr.r_cost * sol.u_pred.col(j));
    }
    sol.u_first = sol.u_pred.col(0);
    sol.constraint_residual = (a_eq * g - b_eq).norm();
    sol.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
}

MpcRun mpc_run(const LtiSystem& sys, MpcProblem problem, const Vector& x0, const Matrix& warmup_inputs, Index steps,
               double noise_std, std::uint64_t seed) {
    const Index n = sys.n(), m = sys.m();
    if (problem.n() != n || problem.m() != m) throw InputError("mpc_run: basis dimensions do not match the system");
    if (warmup_inputs.rows() != m || warmup_inputs.cols() != n)
        throw InputError("mpc_run: warm-up inputs must be an m x n matrix (one input per history slot)");
    if (x0.size() != n) throw InputError("mpc_run: x0 dimension must be n");
    if (steps < 0) throw InputError("mpc_run: steps must be nonnegative");
    problem.history_u = Matrix::Zero(m, n);
    problem.history_x = Matrix::Zero(n, n);
    problem.validate();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index total = n - 1 + steps;  // transitions applied
    Matrix us(m, total + 1), xs(n, total + 1);
    xs.col(0) = x0;
    MpcRun run;
    run.warmup_steps = n;
    auto advance = [&](Index k) {
        Vector next = sys.a * xs.col(k) + sys.b * us.col(k);
        if (noise_std > 0.0)
            for (Index i = 0; i < n; ++i) next(i) += noise_std * normal(rng);
        xs.col(k + 1) = next;
    };
    for (Index k = 0; k < n; ++k) {
        us.col(k) = warmup_inputs.col(k);
        problem.push_history(us.col(k), xs.col(k));
        if (k + 1 < n) advance(k);
    }
    // History now covers times 0..n-1. Each solve decides u(k+1).
    for (Index k = n - 1; k < total; ++k) {
        const MpcSolution sol = mpc_step(problem);
        run.solve_seconds.push_back(sol.solve_seconds);
        run.constraint_residuals.push_back(sol.constraint_residual);
        advance(k);
        us.col(k + 1) = sol.u_first;
        problem.push_history(us.col(k + 1), xs.col(k + 1));
    }
    // The last decided input is kept as the record's final input; states cover 0..total+1.
    Matrix xs_full(n, total + 2);
    xs_full.leftCols(total + 1) = xs;
    xs_full.col(total + 1) = sys.a * xs.col(total) + sys.b * us.col(total);
    run.record = IoRecord(Trajectory(us, "u"), Trajectory(xs_full, "x"));
    for (Index k = 0; k <= total + 1; ++k) run.state_norms.push_back(xs_full.col(k).norm());
    return run;
}

}  // namespace cpekit
