#include "cpekit/control.hpp"

#include <sstream>

#include "cpekit/errors.hpp"
#include "cpekit/informativity.hpp"

namespace cpekit {

ImpulseOperators build_impulse_operators(const LtiSystem& sys, Index depth) {
    if (depth < 1) throw InputError("impulse operators need L >= 1");
    const Index n = sys.n(), m = sys.m();
    ImpulseOperators ops;
    ops.toeplitz = Matrix::Zero(n * depth, m * depth);
    ops.observability = Matrix::Zero(n * depth, n);
    std::vector<Matrix> markov;  // A^k B
    Matrix power = Matrix::Identity(n, n);
    for (Index i = 0; i < depth; ++i) {
        ops.observability.block(i * n, 0, n, n) = power;
        markov.push_back(power * sys.b);
        power = sys.a * power;
    }
    for (Index i = 1; i < depth; ++i)
        for (Index j = 0; j < i; ++j) ops.toeplitz.block(i * n, j * m, n, m) = markov[i - j - 1];
    return ops;
}

BehavioralBasis build_behavioral_basis(const std::vector<IoRecord>& records, Index depth, CompositionMode mode,
                                       const std::vector<double>& weights, const std::optional<LtiSystem>& truth,
                                       double dynamics_tol) {
    if (records.empty()) throw InputError("behavioral basis: no records");
    if (depth < 1) throw InputError("behavioral basis: depth must be >= 1");
    const Index n = records.front().n(), m = records.front().m();
    std::vector<Matrix> blocks;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const IoRecord& r = records[i];
        const std::string who = "record " + std::to_string(i);
        if (r.n() != n || r.m() != m) throw InputError("behavioral basis: " + who + " has mismatched dimensions");
        if (r.length() < depth)
            throw InsufficientLengthError("behavioral basis: " + who + " has length " + std::to_string(r.length()) +
                                          " < depth " + std::to_string(depth));
        if (truth) {
            const double scale = 1.0 + r.states().samples().norm() + r.u().norm();
            if (r.dynamics_residual(*truth) > dynamics_tol * scale)
                throw InputError("behavioral basis: " + who + " does not satisfy the system dynamics");
        }
        const Matrix hx = hankel_matrix(r.x_minus(), depth);
        const Matrix hu = hankel_matrix(r.u(), depth);
        Matrix stacked(hx.rows() + hu.rows(), hx.cols());
        stacked << hx, hu;
        blocks.push_back(std::move(stacked));
    }
    HankelMatrix h = compose_blocks(blocks, weights, mode, depth);
    BehavioralBasis b;
    b.matrix = std::move(h.matrix);
    b.depth = depth;
    b.n = n;
    b.m = m;
    b.mode = mode;
    b.column_blocks = std::move(h.column_blocks);
    b.weights = std::move(h.weights_used);
    return b;
}

Representation represent_trajectory(const BehavioralBasis& basis, const Matrix& x_window, const Matrix& u_window,
                                    double rel_tol) {
    if (x_window.rows() != basis.n || x_window.cols() != basis.depth || u_window.rows() != basis.m ||
        u_window.cols() != basis.depth)
        throw InputError("represent_trajectory: target window does not match the basis shape");
    Vector target(basis.matrix.rows());
    for (Index j = 0; j < basis.depth; ++j) {
        target.segment(basis.state_row(j), basis.n) = x_window.col(j);
        target.segment(basis.input_row(j), basis.m) = u_window.col(j);
    }
    Representation rep;
    const RankReport rr = numeric_rank(basis.matrix);
    rep.basis_rank = rr.numeric_rank;
    rep.expected_rank = basis.n + basis.m * basis.depth;
    rep.g = pseudo_inverse(basis.matrix) * target;
    rep.residual = (basis.matrix * rep.g - target).norm();
    rep.tolerance = rel_tol * (1.0 + target.norm());
    rep.ok = rep.residual <= rep.tolerance;
    if (!rep.ok) {
        std::ostringstream os;
        os << "representation failed: residual " << rep.residual << " exceeds " << rep.tolerance << "; basis rank "
           << rep.basis_rank << " (n + mL = " << rep.expected_rank << ")";
        if (rep.basis_rank < rep.expected_rank) os << ", the data is not sufficiently exciting";
        rep.message = os.str();
    }
    return rep;
}

namespace {

std::string spectrum_text(const Vector& s) {
    std::ostringstream os;
    os << "[";
    for (Index i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s(i);
    os << "]";
    return os.str();
}

}  // namespace

GainSynthesisResult synthesize_gain(const std::vector<IoRecord>& records, CompositionMode mode,
                                    const std::vector<double>& weights, double rel_tol,
                                    const std::optional<LtiSystem>& truth, const LmiOptions& lmi) {
    if (records.empty()) throw InputError("synthesize_gain: no records");
    if (weights.size() != records.size()) throw InputError("synthesize_gain: one weight per record required");
    const Index n = records.front().n(), m = records.front().m();
    std::vector<Matrix> xm, xp, us;
    std::vector<Trajectory> inputs;
    for (const auto& r : records) {
        if (r.n() != n || r.m() != m) throw InputError("synthesize_gain: records have mismatched dimensions");
        xm.push_back(r.x_minus());
        xp.push_back(r.x_plus());
        us.push_back(r.u());
        inputs.push_back(r.inputs());
    }
    const Matrix x_minus = compose_blocks(xm, weights, mode).matrix;
    const Matrix x_plus = compose_blocks(xp, weights, mode).matrix;
    const Matrix u = compose_blocks(us, weights, mode).matrix;
    Matrix d(n + m, x_minus.cols());
    d << x_minus, u;

    GainSynthesisResult res;
    const double tol = rel_tol > 0.0 ? rel_tol : default_rel_tol(d);
    res.data_rank = numeric_rank(d, tol);
    res.informative = res.data_rank.numeric_rank == n + m;
    if (!res.informative)
        res.warnings.push_back("data matrix [X-; U] has rank " + std::to_string(res.data_rank.numeric_rank) +
                               " < n+m = " + std::to_string(n + m));
    try {
        const TrajectoryBundle bundle(inputs, weights, mode.prefix_count);
        if (!check_cpe(bundle, n + 1, mode).verdict)
            res.warnings.push_back("inputs are not collectively persistently exciting of order n+1 in mode " +
                                   mode.name());
    } catch (const InputError& e) {
        res.warnings.push_back(std::string("excitation check skipped: ") + e.what());
    }

    // Decision variables v = (entries of symmetric P, entries of Y); Q = D^+ [P; Y].
    const Matrix d_pinv = pseudo_inverse(d, tol);
    const Matrix m_map = x_plus * d_pinv;  // n x (n+m)
    auto block = [&](const Matrix& p, const Matrix& y) {
        Matrix py(n + m, n);
        py << p, y;
        const Matrix off = m_map * py;
        Matrix f(2 * n, 2 * n);
        f << p, off, off.transpose(), p;
        return f;
    };
    AffineSymmetricMap map;
    map.constant = Matrix::Zero(2 * n, 2 * n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j) {
            Matrix e = Matrix::Zero(n, n);
            e(i, j) = e(j, i) = 1.0;
            map.basis.push_back(block(e, Matrix::Zero(m, n)));
        }
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
            Matrix e = Matrix::Zero(m, n);
            e(i, j) = 1.0;
            map.basis.push_back(block(Matrix::Zero(n, n), e));
        }
    res.certificate = lmi_feasibility(map, lmi);
    if (!res.certificate.feasible) {
        const RankReport sx = numeric_rank(x_minus), su = numeric_rank(u);
        res.diagnostic = "gain LMI " + to_string(res.certificate.status) + " (" + res.certificate.message +
                         "); singular values of [X-; U]: " + spectrum_text(res.data_rank.singular_values) +
                         ", X-: " + spectrum_text(sx.singular_values) + ", U: " + spectrum_text(su.singular_values);
        return res;
    }
    const Vector& v = res.certificate.decision;
    Matrix p = Matrix::Zero(n, n), y = Matrix::Zero(m, n);
    Index idx = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j, ++idx) p(i, j) = p(j, i) = v(idx);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j, ++idx) y(i, j) = v(idx);
    Matrix py(n + m, n);
    py << p, y;
    res.q = d_pinv * py;
    // With rank-deficient data D^+ only projects [P; Y] onto range(D): the LMI point then
    // describes a fitted model rather than the data, and K would not be certified.
    const double realization_gap = (d * res.q - py).norm();
    if (realization_gap > 1e-8 * py.norm()) {
        res.diagnostic = "LMI point is not realizable by the data (||[X-; U] Q - [P; Y]|| = " +
                         std::to_string(realization_gap) + "); singular values of [X-; U]: " +
                         spectrum_text(res.data_rank.singular_values);
        return res;
    }
    res.p = x_minus * res.q;
    const Eigen::FullPivLU<Matrix> lu(res.p);
    if (!lu.isInvertible()) {
        res.diagnostic = "X- Q is singular; no gain can be formed";
        return res;
    }
    res.k = (u * res.q) * lu.inverse();
    res.success = res.k.allFinite();
    if (truth) res.closed_loop_radius = spectral_radius(truth->a + truth->b * res.k);
    return res;
}

}  // namespace cpekit
