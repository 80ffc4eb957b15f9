#include "cpekit/identification.hpp"

#include <cmath>

#include "cpekit/errors.hpp"
#include "cpekit/informativity.hpp"

namespace cpekit {

Matrix make_regressor(const Vector& x, const Vector& u) {
    const Index n = x.size();
    Vector phi(x.size() + u.size());
    phi << x, u;
    return kron(Matrix::Identity(n, n), phi);
}

Vector vectorize_rows(const Matrix& ab) {
    Vector theta(ab.size());
    for (Index i = 0; i < ab.rows(); ++i) theta.segment(i * ab.cols(), ab.cols()) = ab.row(i).transpose();
    return theta;
}

Matrix unvectorize_rows(const Vector& theta, Index n, Index m) {
    if (theta.size() != n * (n + m)) throw InputError("theta length does not match n(n+m)");
    Matrix ab(n, n + m);
    for (Index i = 0; i < n; ++i) ab.row(i) = theta.segment(i * (n + m), n + m).transpose();
    return ab;
}

LsResult ls_identify(const std::vector<IoRecord>& records, CompositionMode mode, const std::vector<double>& weights,
                     double rel_tol) {
    if (records.empty()) throw InputError("ls_identify: no records");
    if (weights.size() != records.size()) throw InputError("ls_identify: one weight per record required");
    const Index n = records.front().n(), m = records.front().m();
    std::vector<Matrix> data, next;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const IoRecord& r = records[i];
        if (r.n() != n || r.m() != m) throw InputError("ls_identify: record " + std::to_string(i) + " dimension mismatch");
        Matrix d(n + m, r.length());
        d << r.x_minus(), r.u();
        data.push_back(std::move(d));
        next.push_back(r.x_plus());
    }
    const Matrix hd = compose_blocks(data, weights, mode, 1).matrix;
    const Matrix hp = compose_blocks(next, weights, mode, 1).matrix;
    LsResult res;
    res.mode = mode;
    const double tol = rel_tol > 0.0 ? rel_tol : default_rel_tol(hd);
    res.rank_report = numeric_rank(hd, tol);
    res.unique = res.rank_report.numeric_rank == n + m;
    res.g_hat = hp * pseudo_inverse(hd, tol);
    res.residual = (hp - res.g_hat * hd).norm();
    if (!res.unique)
        res.warning = "composite data matrix has rank " + std::to_string(res.rank_report.numeric_rank) + " < n+m = " +
                      std::to_string(n + m) + "; the estimate is not unique (minimum-norm solution returned)";
    return res;
}

namespace {

void check_gains(double alpha, double xi) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw InputError("identifier gain alpha must lie in (0, 2]");
    if (!(xi > 0.0) || !std::isfinite(xi)) throw InputError("identifier gain xi must be positive");
}

Vector correction(const Matrix& r, const Vector& eps, double alpha, double xi) {
    Matrix s = r.transpose() * r;
    s.diagonal().array() += xi;
    return alpha * (r * s.ldlt().solve(eps));
}

}  // namespace

IdentifierState IdentifierState::make(Vector theta, IdentifierGains gains) {
    check_gains(gains.alpha, gains.xi);
    if (!theta.allFinite()) throw InputError("identifier theta must be finite");
    return {std::move(theta), gains, 0};
}

IdentifierState adaptive_step(const IdentifierState& state, const Matrix& r, const Vector& x_next) {
    if (r.rows() != state.theta.size() || r.cols() != x_next.size())
        throw InputError("adaptive_step: regressor dimensions do not match theta / x_next");
    check_gains(state.gains.alpha, state.gains.xi);
    IdentifierState out = state;
    const Vector eps = x_next - r.transpose() * state.theta;
    out.theta += correction(r, eps, state.gains.alpha, state.gains.xi);
    ++out.k;
    return out;
}

AdaptiveRun run_adaptive(const LtiSystem& sys, const Vector& x0, const InputPolicy& input,
                         const IdentifierState& state0, double noise_std, Index steps, std::uint64_t seed) {
    const Vector truth = vectorize_rows(sys.ab());
    if (state0.theta.size() != truth.size()) throw InputError("run_adaptive: theta length does not match the system");
    AdaptiveRun run;
    run.record = simulate_policy(sys, x0, input, steps, noise_std, seed);
    IdentifierState st = state0;
    run.errors.push_back((st.theta - truth).norm());
    const Matrix& x = run.record.states().samples();
    for (Index k = 0; k < steps; ++k) {
        st = adaptive_step(st, make_regressor(x.col(k), run.record.u().col(k)), x.col(k + 1));
        run.errors.push_back((st.theta - truth).norm());
    }
    run.final_state = st;
    return run;
}

AdaptiveRun run_adaptive(const LtiSystem& sys, const Vector& x0, const Trajectory& inputs,
                         const IdentifierState& state0, double noise_std, std::uint64_t seed) {
    if (inputs.dim() != sys.m()) throw InputError("run_adaptive: input dimension mismatch");
    const Matrix& u = inputs.samples();
    return run_adaptive(sys, x0, [&u](Index k, const Vector&) { return Vector(u.col(k)); }, state0, noise_std,
                        inputs.length(), seed);
}

DistributedState DistributedState::make(std::vector<Vector> thetas, DistributedGains gains, GraphTopology topology) {
    check_gains(gains.alpha, gains.xi);
    if (thetas.size() != topology.node_count()) throw InputError("distributed identifier: one theta per graph node");
    if (!topology.is_connected())
        throw InputError("distributed identifier: communication graph must be connected");
    const double lmax = topology.lambda_max();
    if (!(gains.gamma > 0.0) || !(gains.gamma * lmax < 1.0))
        throw InputError("distributed identifier: gamma must satisfy 0 < gamma < 1/lambda_max(L) = " +
                         std::to_string(lmax > 0.0 ? 1.0 / lmax : 0.0));
    for (const auto& t : thetas)
        if (t.size() != thetas.front().size() || !t.allFinite())
            throw InputError("distributed identifier: thetas must be finite and equally sized");
    return {std::move(thetas), gains, std::move(topology), 0};
}

DistributedState distributed_step(const DistributedState& state, const std::vector<Matrix>& regressors,
                                  const std::vector<Vector>& x_next) {
    const std::size_t agents = state.thetas.size();
    if (regressors.size() != agents || x_next.size() != agents)
        throw InputError("distributed_step: one regressor and one successor state per agent required");
    DistributedState out = state;
    const Matrix& lap = state.topology.laplacian();
    for (std::size_t i = 0; i < agents; ++i) {
        const Vector& th = state.thetas[i];
        const Matrix& r = regressors[i];
        if (r.rows() != th.size() || r.cols() != x_next[i].size())
            throw InputError("distributed_step: regressor dimension mismatch for agent " + std::to_string(i));
        const Vector eps = x_next[i] - r.transpose() * th;
        Vector consensus = Vector::Zero(th.size());
        for (std::size_t j = 0; j < agents; ++j)
            if (j != i && lap(static_cast<Index>(i), static_cast<Index>(j)) != 0.0)
                consensus += th - state.thetas[j];
        out.thetas[i] = th + correction(r, eps, state.gains.alpha, state.gains.xi) - state.gains.gamma * consensus;
    }
    ++out.k;
    return out;
}

DistributedRun run_distributed(const LtiSystem& sys, const std::vector<Vector>& x0s,
                               const std::vector<InputPolicy>& inputs, const DistributedState& state0,
                               double noise_std, Index steps, std::uint64_t seed) {
    const std::size_t agents = state0.thetas.size();
    if (x0s.size() != agents || inputs.size() != agents)
        throw InputError("run_distributed: one initial state and input policy per agent required");
    const Vector truth = vectorize_rows(sys.ab());
    DistributedRun run;
    for (std::size_t i = 0; i < agents; ++i)
        run.records.push_back(simulate_policy(sys, x0s[i], inputs[i], steps, noise_std, seed + 7919 * (i + 1)));
    run.errors = Matrix(steps + 1, static_cast<Index>(agents));
    DistributedState st = state0;
    auto record = [&](Index k) {
        double spread = 0.0;
        for (std::size_t i = 0; i < agents; ++i) {
            run.errors(k, static_cast<Index>(i)) = (st.thetas[i] - truth).norm();
            for (std::size_t j = i + 1; j < agents; ++j) spread = std::max(spread, (st.thetas[i] - st.thetas[j]).norm());
        }
        run.consensus_spread.push_back(spread);
    };
    record(0);
    std::vector<Matrix> regs(agents);
    std::vector<Vector> nexts(agents);
    for (Index k = 0; k < steps; ++k) {
        for (std::size_t i = 0; i < agents; ++i) {
            const Matrix& x = run.records[i].states().samples();
            regs[i] = make_regressor(x.col(k), run.records[i].u().col(k));
            nexts[i] = x.col(k + 1);
        }
        st = distributed_step(st, regs, nexts);
        record(k + 1);
    }
    run.final_state = st;
    return run;
}

bool ConvergenceReport::all_ok() const {
    return bounded && alpha_ok && xi_ok && gamma_ok.value_or(true) && connected.value_or(true) && excitation_ok;
}

ConvergenceReport check_convergence_conditions(double alpha, double xi, const std::optional<double>& gamma,
                                               const std::optional<GraphTopology>& topology,
                                               const TrajectoryBundle& inputs, Index n, Index window_l) {
    ConvergenceReport rep;
    rep.alpha_ok = alpha > 0.0 && alpha <= 2.0;
    rep.xi_ok = xi > 0.0 && std::isfinite(xi);
    if (topology) {
        rep.connected = topology->is_connected();
        if (gamma) rep.gamma_ok = *gamma > 0.0 && *gamma * topology->lambda_max() < 1.0;
    } else if (gamma) {
        rep.gamma_ok = false;  // a consensus gain without a graph cannot be validated
    }
    rep.bounded = true;
    Index shortest = inputs.member(0).length();
    for (const auto& t : inputs.members()) {
        rep.bounded = rep.bounded && t.samples().allFinite();
        shortest = std::min(shortest, t.length());
    }
    const Index order = n + 1;
    rep.excitation_ok = true;
    if (window_l < order || window_l > shortest) {
        rep.excitation_ok = false;
        rep.deficient_window = 0;
        return rep;
    }
    for (Index k = 0; k + window_l <= shortest; k += window_l) {
        std::vector<Trajectory> win;
        for (const auto& t : inputs.members()) win.push_back(t.slice(k, window_l));
        const TrajectoryBundle b(win, inputs.weights());
        ++rep.windows_checked;
        if (!check_cpe(b, order, CompositionMode::mosaic()).verdict) {
            rep.excitation_ok = false;
            rep.deficient_window = k;
            break;
        }
    }
    return rep;
}

LogLinearFit fit_log_linear(const std::vector<double>& errors, double floor_ratio) {
    LogLinearFit fit;
    if (errors.empty() || !(errors.front() > 0.0)) return fit;
    const double floor = floor_ratio * errors.front();
    std::vector<double> ks, ys;
    for (std::size_t k = 0; k < errors.size(); ++k) {
        if (!(errors[k] > floor)) break;
        ks.push_back(static_cast<double>(k));
        ys.push_back(std::log(errors[k]));
    }
    fit.points = static_cast<Index>(ks.size());
    if (ks.size() < 2) return fit;
    const double nk = static_cast<double>(ks.size());
    double mk = 0, my = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) { mk += ks[i]; my += ys[i]; }
    mk /= nk;
    my /= nk;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sxy += (ks[i] - mk) * (ys[i] - my);
        sxx += (ks[i] - mk) * (ks[i] - mk);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mk;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

}  // namespace cpekit
