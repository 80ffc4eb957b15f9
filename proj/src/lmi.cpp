#include "cpekit/lmi.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cpekit/errors.hpp"

namespace cpekit {

Matrix AffineSymmetricMap::evaluate(const Vector& v) const {
    if (v.size() != dim()) throw InputError("AffineSymmetricMap: decision vector has wrong length");
    Matrix out = constant;
    for (Index i = 0; i < dim(); ++i) out += v(i) * basis[static_cast<size_t>(i)];
    return out;
}

bool AffineSymmetricMap::homogeneous() const {
    return constant.size() == 0 || constant.cwiseAbs().maxCoeff() == 0.0;
}

std::string to_string(LmiStatus s) {
    switch (s) {
        case LmiStatus::Feasible: return "feasible";
        case LmiStatus::Infeasible: return "infeasible";
        case LmiStatus::Unknown: return "unknown";
    }
    return "unknown";
}

namespace {

double trace_product(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b.transpose()).sum(); }

// Central-path solver for  max t  s.t.  sum_j w_j G_j - tI > 0,  c'w = 1  (c_j = tr G_j).
struct BarrierResult {
    Vector w;
    double t = -std::numeric_limits<double>::infinity();
    double dual_nu = std::numeric_limits<double>::infinity();
    bool dual_certified = false;
    bool converged = false;
    int iterations = 0;
};

BarrierResult solve_phase_one(const std::vector<Matrix>& g, const LmiOptions& opts) {
    // a dual bound nu caps the relative margin of any point at nu * size
    const double nu_cap = opts.margin / static_cast<double>(g.front().rows());
    BarrierResult res;
    const Index d = static_cast<Index>(g.size());
    const Index nsz = g.front().rows();
    Vector c(d);
    for (Index j = 0; j < d; ++j) c(j) = g[static_cast<size_t>(j)].trace();
    if (c.norm() <= 1e-14) {
        // every F(v) is traceless, hence never positive definite (certificate Z = I)
        res.dual_nu = 0.0;
        res.dual_certified = true;
        res.w = Vector::Zero(d);
        res.t = 0.0;
        return res;
    }
    const Vector w0 = c / c.squaredNorm();
    Matrix nbasis = null_space(c.transpose(), 1e-12);
    const Index k = nbasis.cols();
    std::vector<Matrix> b(static_cast<size_t>(k), Matrix::Zero(nsz, nsz));
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < d; ++j)
            b[static_cast<size_t>(i)] += nbasis(j, i) * g[static_cast<size_t>(j)];
    Matrix g0 = Matrix::Zero(nsz, nsz);
    for (Index j = 0; j < d; ++j) g0 += w0(j) * g[static_cast<size_t>(j)];

    auto assemble = [&](const Vector& y) {
        Matrix s = g0;
        for (Index i = 0; i < k; ++i) s += y(i) * b[static_cast<size_t>(i)];
        return s;
    };

    Vector y = Vector::Zero(k);
    Eigen::SelfAdjointEigenSolver<Matrix> es0(g0, Eigen::EigenvaluesOnly);
    double t = es0.eigenvalues().minCoeff() - 1.0;
    const double n_d = static_cast<double>(nsz);
    double tau = 1.0;

    auto barrier = [&](const Vector& yy, double tt, double tau_) -> double {
        Matrix s = assemble(yy);
        s.diagonal().array() -= tt;
        Eigen::LLT<Matrix> llt(s);
        if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
        const Matrix& l = llt.matrixL();
        double logdet = 0.0;
        for (Index i = 0; i < nsz; ++i) {
            const double dii = l(i, i);
            if (!(dii > 0.0)) return std::numeric_limits<double>::infinity();
            logdet += 2.0 * std::log(dii);
        }
        return -tau_ * tt - logdet;
    };

    for (int outer = 0; outer < opts.max_outer; ++outer) {
        bool centered = false;
        for (int it = 0; it < opts.max_newton; ++it) {
            ++res.iterations;
            Matrix s = assemble(y);
            s.diagonal().array() -= t;
            Eigen::LLT<Matrix> llt(s);
            const Matrix winv = llt.solve(Matrix::Identity(nsz, nsz));
            std::vector<Matrix> m(static_cast<size_t>(k));
            for (Index i = 0; i < k; ++i) m[static_cast<size_t>(i)] = winv * b[static_cast<size_t>(i)];
            Vector grad(k + 1);
            Matrix hess(k + 1, k + 1);
            for (Index i = 0; i < k; ++i) {
                grad(i) = -m[static_cast<size_t>(i)].trace();
                for (Index j = 0; j <= i; ++j) {
                    const double v = trace_product(m[static_cast<size_t>(i)], m[static_cast<size_t>(j)]);
                    hess(i, j) = v;
                    hess(j, i) = v;
                }
                const double v = -trace_product(m[static_cast<size_t>(i)], winv);
                hess(i, k) = v;
                hess(k, i) = v;
            }
            grad(k) = -tau + winv.trace();
            hess(k, k) = trace_product(winv, winv);
            const double damp = 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
            hess.diagonal().array() += damp;
            const Vector step = -hess.ldlt().solve(grad);
            const double decrement = -grad.dot(step);
            if (!std::isfinite(decrement)) break;
            if (decrement / 2.0 < 1e-10) {
                centered = true;
                break;
            }
            const double f0 = barrier(y, t, tau);
            double alpha = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls) {
                const Vector yn = y + alpha * step.head(k);
                const double tn = t + alpha * step(k);
                const double fn = barrier(yn, tn, tau);
                if (std::isfinite(fn) && fn <= f0 - 0.25 * alpha * decrement) {
                    y = yn;
                    t = tn;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) {
                centered = true;  // no further progress possible at this precision
                break;
            }
        }

        // dual iterate Z = S^{-1}/tau, normalized to unit trace; it satisfies
        // tr(Z G_j) = nu c_j on the central path, giving t* <= nu.
        Matrix s = assemble(y);
        s.diagonal().array() -= t;
        Eigen::LLT<Matrix> llt(s);
        Matrix z = llt.solve(Matrix::Identity(nsz, nsz));
        z /= z.trace();
        Vector a(d);
        for (Index j = 0; j < d; ++j) a(j) = trace_product(z, g[static_cast<size_t>(j)]);
        const double nu = a.dot(c) / c.squaredNorm();
        const double resid = (a - nu * c).norm();
        const double scale = a.norm() + std::abs(nu) * c.norm() + 1e-300;
        res.dual_nu = nu;
        // on the central path the duality gap is size/tau, so t* <= t + size/tau
        const double path_bound = centered ? t + n_d / tau : std::numeric_limits<double>::infinity();
        res.dual_certified = (resid <= 1e-7 * scale && nu < nu_cap) || path_bound < nu_cap;
        if (path_bound < res.dual_nu) res.dual_nu = path_bound;
        res.t = t;
        res.w = w0 + nbasis * y;
        if (res.dual_certified) return res;
        const double gap = n_d / tau;
        if (centered && t > 0.0 && gap < 0.1 * t) {
            res.converged = true;
            return res;
        }
        if (centered && gap < 1e-10 / n_d) {
            res.converged = true;
            return res;
        }
        tau *= 8.0;
    }
    return res;
}

}  // namespace

LmiCertificate lmi_feasibility(const AffineSymmetricMap& map, const LmiOptions& opts) {
    if (!(opts.margin > 0.0)) throw InputError("lmi_feasibility: margin must be positive");
    if (map.dim() < 1) throw InputError("lmi_feasibility: at least one decision variable required");
    const Index nsz = map.basis.front().rows();
    Matrix f0 = map.constant.size() ? map.constant : Matrix::Zero(nsz, nsz);
    if (f0.rows() != nsz || f0.cols() != nsz) throw InputError("lmi_feasibility: inconsistent matrix sizes");
    if (!is_symmetric(f0, 1e-9)) throw ContractViolation("lmi_feasibility: constant term is not symmetric");
    for (const Matrix& fi : map.basis) {
        if (fi.rows() != nsz || fi.cols() != nsz) throw InputError("lmi_feasibility: inconsistent matrix sizes");
        if (!fi.allFinite()) throw InputError("lmi_feasibility: non-finite basis matrix");
        if (!is_symmetric(fi, 1e-9)) throw ContractViolation("lmi_feasibility: basis matrix is not symmetric");
    }

    // Homogenize: variables (s, v) with blkdiag(s F0 + sum v_i F_i, s).
    const bool homog = map.homogeneous();
    const Index big = homog ? nsz : nsz + 1;
    std::vector<Matrix> g;
    std::vector<double> colscale;
    auto push = [&](const Matrix& m) {
        const double nrm = m.norm();
        const double sc = nrm > 0.0 ? 1.0 / nrm : 1.0;
        g.push_back(m * sc);
        colscale.push_back(sc);
    };
    if (!homog) {
        Matrix e = Matrix::Zero(big, big);
        e.topLeftCorner(nsz, nsz) = f0;
        e(nsz, nsz) = 1.0;
        push(e);
    }
    for (const Matrix& fi : map.basis) {
        Matrix e = Matrix::Zero(big, big);
        e.topLeftCorner(nsz, nsz) = 0.5 * (fi + fi.transpose());
        push(e);
    }

    const BarrierResult br = solve_phase_one(g, opts);
    LmiCertificate cert;
    cert.iterations = br.iterations;
    cert.dual_bound = br.dual_nu;

    Vector v(map.dim());
    bool usable = br.w.size() == static_cast<Index>(g.size());
    if (usable) {
        Vector w = br.w;
        for (Index j = 0; j < w.size(); ++j) w(j) *= colscale[static_cast<size_t>(j)];
        if (homog) {
            v = w;
        } else if (w(0) > 0.0) {
            v = w.tail(map.dim()) / w(0);
        } else {
            usable = false;
        }
    }
    if (usable) {
        if (homog && v.norm() > 0.0) v /= v.norm();
        const Matrix fv = map.evaluate(v);
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (fv + fv.transpose()), Eigen::EigenvaluesOnly);
        cert.min_eig_achieved = es.eigenvalues().minCoeff();
        const double nrm = es.eigenvalues().cwiseAbs().maxCoeff();
        cert.relative_margin = nrm > 0.0 ? cert.min_eig_achieved / nrm : 0.0;
        cert.decision = v;
        cert.q_matrix = v;
    }

    if (usable && br.t > 0.0 && cert.relative_margin >= opts.margin) {
        cert.feasible = true;
        cert.status = LmiStatus::Feasible;
        cert.message = "strictly feasible point found";
    } else if (br.dual_certified) {
        cert.status = LmiStatus::Infeasible;
        cert.message = "dual certificate: no strictly feasible point exists";
    } else if (br.converged) {
        cert.status = LmiStatus::Unknown;
        cert.message = "optimal margin below the requested strictness margin";
    } else {
        cert.status = LmiStatus::Unknown;
        cert.message = "iteration cap reached without certificate";
    }
    return cert;
}

Matrix symmetric_from_vector(const Vector& v, Index q_dim) {
    Matrix q = Matrix::Zero(q_dim, q_dim);
    Index idx = 0;
    for (Index i = 0; i < q_dim; ++i)
        for (Index j = i; j < q_dim; ++j) {
            q(i, j) = v(idx);
            q(j, i) = v(idx);
            ++idx;
        }
    return q;
}

LmiCertificate lmi_feasibility(const std::function<Matrix(const Matrix&)>& assemble, Index q_dim,
                               double margin) {
    if (q_dim < 1) throw InputError("lmi_feasibility: q_dim must be >= 1");
    const Index nvar = q_dim * (q_dim + 1) / 2;
    AffineSymmetricMap map;
    map.constant = assemble(Matrix::Zero(q_dim, q_dim));
    if (!map.constant.allFinite()) throw ContractViolation("lmi_feasibility: assembly produced non-finite values");
    if (!is_symmetric(map.constant, 1e-9)) throw ContractViolation("lmi_feasibility: assembly output is not symmetric");
    for (Index k = 0; k < nvar; ++k) {
        Vector e = Vector::Zero(nvar);
        e(k) = 1.0;
        Matrix fk = assemble(symmetric_from_vector(e, q_dim));
        if (fk.rows() != map.constant.rows() || fk.cols() != map.constant.cols())
            throw ContractViolation("lmi_feasibility: assembly output size varies with Q");
        if (!is_symmetric(fk, 1e-9)) throw ContractViolation("lmi_feasibility: assembly output is not symmetric");
        map.basis.push_back(fk - map.constant);
    }
    // affinity probe at a fixed pseudo-random point
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector probe(nvar);
    for (Index k = 0; k < nvar; ++k) probe(k) = unif(rng);
    const Matrix direct = assemble(symmetric_from_vector(probe, q_dim));
    const Matrix interp = map.evaluate(probe);
    if ((direct - interp).norm() > 1e-8 * (1.0 + direct.norm()))
        throw ContractViolation("lmi_feasibility: assembly is not affine in Q");

    LmiOptions opts;
    opts.margin = margin;
    LmiCertificate cert = lmi_feasibility(map, opts);
    if (cert.decision.size() == nvar) {
        cert.q_matrix = symmetric_from_vector(cert.decision, q_dim);
        if (map.homogeneous()) {
            const double fro = cert.q_matrix.norm();
            if (fro > 0.0) {
                cert.q_matrix /= fro;
                cert.decision /= fro;
                const Matrix fv = map.evaluate(cert.decision);
                Eigen::SelfAdjointEigenSolver<Matrix> es(fv, Eigen::EigenvaluesOnly);
                cert.min_eig_achieved = es.eigenvalues().minCoeff();
            }
        }
    }
    return cert;
}

}  // namespace cpekit
