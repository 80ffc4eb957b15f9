#pragma once

#include <Eigen/Dense>

namespace cpekit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct RankReport {
    Index numeric_rank = 0;
    Vector singular_values;  // descending
    double tolerance_used = 0.0;  // absolute threshold: rel_tol * sigma_max

    // sigma_k / sigma_1 for k = 1-based position; 0 when out of range or the matrix is zero.
    double relative_singular_value(Index k) const;
};

// 1e-9 * max(rows, cols), clamped into (0, 1).
double default_rel_tol(Index rows, Index cols);
double default_rel_tol(const Matrix& m);

bool all_finite(const Matrix& m);

RankReport numeric_rank(const Matrix& m, double rel_tol);
RankReport numeric_rank(const Matrix& m);

Matrix pseudo_inverse(const Matrix& m, double rel_tol);
Matrix pseudo_inverse(const Matrix& m);

double spectral_radius(const Matrix& m);

Index subspace_intersection_dim(const Matrix& u_basis, const Matrix& v_basis, double rel_tol);
Index subspace_intersection_dim(const Matrix& u_basis, const Matrix& v_basis);

double symmetric_eig_max(const Matrix& m);
double symmetric_eig_min(const Matrix& m);
bool is_symmetric(const Matrix& m, double tol = 1e-10);

// Orthonormal basis of ker(m) (columns), using the same relative tolerance as numeric_rank.
Matrix null_space(const Matrix& m, double rel_tol);

Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace cpekit
