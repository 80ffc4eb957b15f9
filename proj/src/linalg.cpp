#include "cpekit/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cpekit/errors.hpp"

namespace cpekit {

namespace {

void require_nonempty_finite(const Matrix& m, const char* what) {
    if (m.size() == 0) throw InputError(std::string(what) + ": empty matrix");
    if (!all_finite(m)) throw InputError(std::string(what) + ": non-finite entries");
}

void require_rel_tol(double rel_tol) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InputError("rel_tol must lie in (0, 1)");
}

}  // namespace

double RankReport::relative_singular_value(Index k) const {
    if (k < 1 || k > singular_values.size() || singular_values.size() == 0) return 0.0;
    const double s1 = singular_values(0);
    return s1 > 0.0 ? singular_values(k - 1) / s1 : 0.0;
}

double default_rel_tol(Index rows, Index cols) {
    const double tol = 1e-9 * static_cast<double>(std::max<Index>({rows, cols, 1}));
    return std::min(tol, 0.5);
}

double default_rel_tol(const Matrix& m) { return default_rel_tol(m.rows(), m.cols()); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

RankReport numeric_rank(const Matrix& m, double rel_tol) {
    require_nonempty_finite(m, "numeric_rank");
    require_rel_tol(rel_tol);
    RankReport rep;
    Eigen::BDCSVD<Matrix> svd(m);
    rep.singular_values = svd.singularValues();
    const double smax = rep.singular_values.size() ? rep.singular_values(0) : 0.0;
    rep.tolerance_used = rel_tol * smax;
    if (smax <= 0.0) return rep;
    for (Index i = 0; i < rep.singular_values.size(); ++i)
        if (rep.singular_values(i) > rep.tolerance_used) ++rep.numeric_rank;
    return rep;
}

RankReport numeric_rank(const Matrix& m) { return numeric_rank(m, default_rel_tol(m)); }

Matrix pseudo_inverse(const Matrix& m, double rel_tol) {
    require_nonempty_finite(m, "pseudo_inverse");
    require_rel_tol(rel_tol);
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cut = s.size() ? rel_tol * s(0) : 0.0;
    Vector inv = Vector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > cut && s(i) > 0.0) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix pseudo_inverse(const Matrix& m) { return pseudo_inverse(m, default_rel_tol(m)); }

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) throw InputError("spectral_radius: matrix must be square");
    require_nonempty_finite(m, "spectral_radius");
    Eigen::EigenSolver<Matrix> es(m, false);
    if (es.info() != Eigen::Success) throw ComputationError("spectral_radius: eigensolver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Index subspace_intersection_dim(const Matrix& u_basis, const Matrix& v_basis, double rel_tol) {
    if (u_basis.rows() != v_basis.rows())
        throw InputError("subspace_intersection_dim: ambient dimensions differ");
    if (u_basis.cols() == 0 || v_basis.cols() == 0) return 0;
    Matrix joint(u_basis.rows(), u_basis.cols() + v_basis.cols());
    joint << u_basis, v_basis;
    const Index ru = numeric_rank(u_basis, rel_tol).numeric_rank;
    const Index rv = numeric_rank(v_basis, rel_tol).numeric_rank;
    const Index rj = numeric_rank(joint, rel_tol).numeric_rank;
    return std::max<Index>(0, ru + rv - rj);
}

Index subspace_intersection_dim(const Matrix& u_basis, const Matrix& v_basis) {
    const Index rows = u_basis.rows();
    return subspace_intersection_dim(u_basis, v_basis,
                                     default_rel_tol(rows, u_basis.cols() + v_basis.cols()));
}

bool is_symmetric(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double symmetric_eig_max(const Matrix& m) {
    require_nonempty_finite(m, "symmetric_eig_max");
    if (!is_symmetric(m)) throw InputError("symmetric_eig_max: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double symmetric_eig_min(const Matrix& m) {
    require_nonempty_finite(m, "symmetric_eig_min");
    if (!is_symmetric(m)) throw InputError("symmetric_eig_min: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Matrix null_space(const Matrix& m, double rel_tol) {
    if (m.rows() == 0) return Matrix::Identity(m.cols(), m.cols());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double cut = s.size() && s(0) > 0.0 ? rel_tol * s(0) : 0.0;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > cut && s(i) > 0.0) ++r;
    return svd.matrixV().rightCols(m.cols() - r);
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace cpekit
