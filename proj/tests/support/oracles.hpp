#pragma once

// Independent reference computations used to check library results. They deliberately
// avoid the code paths under test (no SVD-based rank, no pseudo-inverse).

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Rank by Gaussian elimination with full pivoting; pivots below tol * max|entry| count as zero.
inline Index gauss_rank(Matrix m, double tol = 1e-9) {
    const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
    if (scale == 0.0) return 0;
    Index rank = 0;
    const Index rows = m.rows(), cols = m.cols();
    for (Index k = 0; k < std::min(rows, cols); ++k) {
        Index pi = k, pj = k;
        double best = 0.0;
        for (Index i = k; i < rows; ++i)
            for (Index j = k; j < cols; ++j)
                if (std::abs(m(i, j)) > best) { best = std::abs(m(i, j)); pi = i; pj = j; }
        if (best <= tol * scale) break;
        m.row(k).swap(m.row(pi));
        m.col(k).swap(m.col(pj));
        for (Index i = k + 1; i < rows; ++i) {
            const double f = m(i, k) / m(k, k);
            m.row(i).tail(cols - k) -= f * m.row(k).tail(cols - k);
        }
        ++rank;
    }
    return rank;
}

// Explicit block Hankel matrix from samples (dim x T), written out index by index.
inline Matrix hankel(const Matrix& z, Index depth) {
    const Index m = z.rows(), t = z.cols();
    Matrix h(m * depth, t - depth + 1);
    for (Index r = 0; r < depth; ++r)
        for (Index c = 0; c < t - depth + 1; ++c)
            for (Index i = 0; i < m; ++i) h(r * m + i, c) = z(i, r + c);
    return h;
}

// Largest eigenvalue of a symmetric matrix by shifted power iteration.
inline double power_lambda_max(const Matrix& s, int iters = 5000) {
    const double shift = s.cwiseAbs().rowwise().sum().maxCoeff();
    Matrix a = s + shift * Matrix::Identity(s.rows(), s.cols());
    Vector v = Vector::Ones(s.rows()) + 0.1 * Vector::LinSpaced(s.rows(), 0.0, 1.0);
    v.normalize();
    double lam = 0.0;
    for (int i = 0; i < iters; ++i) {
        Vector w = a * v;
        lam = v.dot(w);
        v = w.normalized();
    }
    return lam - shift;
}

// Noise-free rollout x(k+1) = A x(k) + B u(k); u is m x T, returns n x (T+1).
inline Matrix rollout(const Matrix& a, const Matrix& b, const Vector& x0, const Matrix& u) {
    Matrix x(a.rows(), u.cols() + 1);
    x.col(0) = x0;
    for (Index k = 0; k < u.cols(); ++k) x.col(k + 1) = a * x.col(k) + b * u.col(k);
    return x;
}

inline Matrix random_matrix(Index r, Index c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
}

}  // namespace oracle
