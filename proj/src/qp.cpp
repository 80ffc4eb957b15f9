#include "cpekit/qp.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cpekit/errors.hpp"

namespace cpekit {

Vector qp_solve_eq(const Matrix& h, const Vector& f, const Matrix& a_eq, const Vector& b_eq,
                   const QpOptions& opts) {
    const Index n = h.rows();
    if (h.cols() != n || f.size() != n) throw InputError("qp_solve_eq: H must be n x n and f of length n");
    if (a_eq.rows() > 0 && a_eq.cols() != n) throw InputError("qp_solve_eq: A_eq column count must equal n");
    if (a_eq.rows() != b_eq.size()) throw InputError("qp_solve_eq: A_eq rows must match b_eq");
    if (!h.allFinite() || !f.allFinite() || !a_eq.allFinite() || !b_eq.allFinite())
        throw InputError("qp_solve_eq: non-finite data");
    if (!is_symmetric(h, 1e-9)) throw InputError("qp_solve_eq: H is not symmetric");

    Vector g_p = Vector::Zero(n);
    Matrix z;
    if (a_eq.rows() > 0) {
        Eigen::BDCSVD<Matrix> svd(a_eq, Eigen::ComputeThinU | Eigen::ComputeFullV);
        const Vector& s = svd.singularValues();
        const double rel = opts.rel_tol > 0.0 ? opts.rel_tol : default_rel_tol(a_eq);
        const double cut = s.size() && s(0) > 0.0 ? rel * s(0) : 0.0;
        Index r = 0;
        for (Index i = 0; i < s.size(); ++i)
            if (s(i) > cut && s(i) > 0.0) ++r;
        if (r > 0) {
            const Vector coef = svd.matrixU().leftCols(r).transpose() * b_eq;
            g_p = svd.matrixV().leftCols(r) * coef.cwiseQuotient(s.head(r));
        }
        const double viol = (a_eq * g_p - b_eq).norm();
        if (viol > opts.feasibility_tol * (1.0 + b_eq.norm()))
            throw InfeasibleError("qp_solve_eq: equality constraints are inconsistent (residual " +
                                  std::to_string(viol) + ")");
        z = svd.matrixV().rightCols(n - r);
    } else {
        z = Matrix::Identity(n, n);
    }
    if (z.cols() == 0) return g_p;

    Matrix hr = z.transpose() * h * z;
    hr = 0.5 * (hr + hr.transpose());
    const Vector fr = z.transpose() * (h * g_p + f);

    Eigen::SelfAdjointEigenSolver<Matrix> es(hr);
    const Vector& lam = es.eigenvalues();
    const double lmax = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    if (lam.minCoeff() < -1e-9 * lmax)
        throw DegenerateProblemError("qp_solve_eq: Hessian is indefinite on ker(A_eq)");

    auto solve_reduced = [&](double shift) {
        Vector inv = Vector::Zero(lam.size());
        const double cut = 1e-12 * lmax;
        for (Index i = 0; i < lam.size(); ++i) {
            const double l = lam(i) + shift;
            if (l > cut) inv(i) = 1.0 / l;
        }
        return Vector(-(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * fr));
    };
    auto stationary = [&](const Vector& y) {
        const double res = (hr * y + fr).norm();
        // roundoff in fr scales with ||H|| ||g_p|| and ||f||, not only with ||fr||
        return res <= 1e-8 * (1.0 + fr.norm() + f.norm() + h.norm() * g_p.norm() + lmax * y.norm());
    };

    Vector y = solve_reduced(0.0);
    if (!stationary(y)) {
        y = solve_reduced(1e-12 * lmax);
        if (!stationary(y) || !y.allFinite())
            throw DegenerateProblemError("qp_solve_eq: objective unbounded below on the feasible set");
    }
    return g_p + z * y;
}

Vector qp_solve_box(const Matrix& h, const Vector& f, const Matrix& a_eq, const Vector& b_eq,
                    const Matrix& c, const Vector& lo, const Vector& hi, int max_iterations,
                    const QpOptions& opts) {
    const Index n = h.rows();
    const Index nc = c.rows();
    if (nc > 0 && c.cols() != n) throw InputError("qp_solve_box: C column count must equal n");
    if (lo.size() != nc || hi.size() != nc) throw InputError("qp_solve_box: bound vectors must match C rows");
    for (Index j = 0; j < nc; ++j)
        if (!(lo(j) <= hi(j))) throw InputError("qp_solve_box: lower bound exceeds upper bound");

    // working set entries: (row of C, +1 for upper, -1 for lower)
    std::vector<std::pair<Index, int>> working;
    const double tol = 1e-9;
    for (int iter = 0; iter < max_iterations; ++iter) {
        const Index w = static_cast<Index>(working.size());
        Matrix a(a_eq.rows() + w, n);
        Vector b(a_eq.rows() + w);
        if (a_eq.rows() > 0) {
            a.topRows(a_eq.rows()) = a_eq;
            b.head(a_eq.rows()) = b_eq;
        }
        for (Index k = 0; k < w; ++k) {
            const auto [row, side] = working[static_cast<size_t>(k)];
            a.row(a_eq.rows() + k) = c.row(row);
            b(a_eq.rows() + k) = side > 0 ? hi(row) : lo(row);
        }
        const Vector g = qp_solve_eq(h, f, a, b, opts);

        const Vector cg = nc > 0 ? Vector(c * g) : Vector();
        Index worst = -1;
        int worst_side = 0;
        double worst_v = 0.0;
        for (Index j = 0; j < nc; ++j) {
            const double scale = tol * (1.0 + std::abs(hi(j)) + std::abs(lo(j)));
            const double up = cg(j) - hi(j);
            const double dn = lo(j) - cg(j);
            if (up > scale && up > worst_v) { worst = j; worst_side = 1; worst_v = up; }
            if (dn > scale && dn > worst_v) { worst = j; worst_side = -1; worst_v = dn; }
        }
        if (worst >= 0) {
            working.emplace_back(worst, worst_side);
            continue;
        }
        if (w == 0) return g;

        // multipliers: H g + f + A_eq' nu + sum side_j mu_j c_j = 0, mu >= 0
        Matrix kt(n, a_eq.rows() + w);
        if (a_eq.rows() > 0) kt.leftCols(a_eq.rows()) = a_eq.transpose();
        for (Index k = 0; k < w; ++k) {
            const auto [row, side] = working[static_cast<size_t>(k)];
            kt.col(a_eq.rows() + k) = static_cast<double>(side) * c.row(row).transpose();
        }
        const Vector mult = pseudo_inverse(kt) * (-(h * g + f));
        const Vector mu = mult.tail(w);
        Index drop = -1;
        double most_negative = -1e-9 * (1.0 + mu.cwiseAbs().maxCoeff());
        for (Index k = 0; k < w; ++k)
            if (mu(k) < most_negative) { most_negative = mu(k); drop = k; }
        if (drop < 0) return g;
        working.erase(working.begin() + drop);
    }
    throw ComputationError("qp_solve_box: active-set iteration cap reached (bound-handling failure)");
}

}  // namespace cpekit
