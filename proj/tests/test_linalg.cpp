#include <doctest.h>

#include <random>

#include "cpekit/errors.hpp"
#include "cpekit/linalg.hpp"
#include "cpekit/lmi.hpp"
#include "cpekit/qp.hpp"
#include "support/oracles.hpp"

using namespace cpekit;

TEST_CASE("numeric_rank basics") {
    CHECK(numeric_rank(Matrix::Zero(3, 3), 1e-10).numeric_rank == 0);
    const RankReport id = numeric_rank(Matrix::Identity(2, 2), 1e-10);
    CHECK(id.numeric_rank == 2);
    CHECK(id.singular_values(0) == doctest::Approx(1.0));
    CHECK(id.singular_values(1) == doctest::Approx(1.0));

    Matrix h(2, 3);
    h << 1, 2, 3, 2, 3, 4;
    CHECK(numeric_rank(h, 1e-10).numeric_rank == oracle::gauss_rank(h));
    CHECK(numeric_rank(h, 1e-10).numeric_rank == 2);

    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(numeric_rank(bad, 1e-9), InputError);
    CHECK_THROWS_AS(numeric_rank(h, 1.5), InputError);
}

TEST_CASE("numeric_rank is invariant under column scaling") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> expo(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix m = oracle::random_matrix(6, 4, rng) * oracle::random_matrix(4, 9, rng);
        const Index r0 = numeric_rank(m).numeric_rank;
        CHECK(r0 == 4);
        for (Index j = 0; j < m.cols(); ++j) m.col(j) *= std::pow(10.0, expo(rng));
        CHECK(numeric_rank(m).numeric_rank == r0);
    }
}

TEST_CASE("pseudo_inverse satisfies the Penrose identities") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    const Matrix dp = pseudo_inverse(d, 1e-10);
    CHECK(dp(0, 0) == doctest::Approx(0.5));
    CHECK(dp(1, 1) == doctest::Approx(0.0));
    CHECK(pseudo_inverse(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));

    std::mt19937_64 rng(11);
    for (Index size : {4, 12, 33, 60}) {
        const Matrix m = oracle::random_matrix(size, size + 2, rng) *
                         oracle::random_matrix(size + 2, size + 5, rng);
        const Matrix p = pseudo_inverse(m);
        const double s = m.norm();
        CHECK((m * p * m - m).norm() <= 1e-9 * s);
        CHECK((p * m * p - p).norm() <= 1e-9 * p.norm());
        CHECK((m * p - (m * p).transpose()).norm() <= 1e-9 * (m * p).norm());
        CHECK((p * m - (p * m).transpose()).norm() <= 1e-9 * (p * m).norm());
    }
}

TEST_CASE("spectral_radius") {
    Matrix nil(2, 2);
    nil << 0, 1, 0, 0;
    CHECK(spectral_radius(nil) == doctest::Approx(0.0));
    CHECK(spectral_radius(Matrix::Identity(3, 3)) == doctest::Approx(1.0));
    Matrix rot(2, 2);
    rot << 0, -2, 2, 0;  // eigenvalues +-2i
    CHECK(spectral_radius(rot) == doctest::Approx(2.0));
    CHECK_THROWS_AS(spectral_radius(Matrix::Zero(2, 3)), InputError);
}

TEST_CASE("subspace_intersection_dim") {
    const Matrix e = Matrix::Identity(3, 3);
    CHECK(subspace_intersection_dim(e.topLeftCorner(2, 1), e.block(0, 1, 2, 1)) == 0);
    CHECK(subspace_intersection_dim(e.col(0), e.col(0)) == 1);
    Matrix u(3, 2);
    u << 1, 0, 1, 0, 0, 1;
    Matrix v(3, 1);
    v << 1, 1, 0;
    CHECK(subspace_intersection_dim(u, v) == 1);
    CHECK_THROWS_AS(subspace_intersection_dim(u, Matrix::Ones(2, 1)), InputError);

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> small(-2, 2);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix a(5, 3), b(5, 2);
        for (Index i = 0; i < 5; ++i) {
            for (Index j = 0; j < 3; ++j) a(i, j) = small(rng);
            for (Index j = 0; j < 2; ++j) b(i, j) = small(rng);
        }
        Matrix ab(5, 5);
        ab << a, b;
        CHECK(subspace_intersection_dim(a, b) + oracle::gauss_rank(ab) ==
              oracle::gauss_rank(a) + oracle::gauss_rank(b));
    }
}

TEST_CASE("symmetric_eig_max on graph Laplacians") {
    CHECK(symmetric_eig_max(Matrix::Identity(3, 3)) == doctest::Approx(1.0));
    Matrix p3(3, 3);
    p3 << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    CHECK(symmetric_eig_max(p3) == doctest::Approx(oracle::power_lambda_max(p3)));
    CHECK(symmetric_eig_max(p3) == doctest::Approx(3.0));
    Matrix k5 = 5.0 * Matrix::Identity(5, 5) - Matrix::Ones(5, 5);
    CHECK(symmetric_eig_max(k5) == doctest::Approx(oracle::power_lambda_max(k5)));
    CHECK(symmetric_eig_max(k5) == doctest::Approx(5.0));
    Matrix asym(2, 2);
    asym << 1, 2, 0, 1;
    CHECK_THROWS_AS(symmetric_eig_max(asym), InputError);
}

TEST_CASE("qp_solve_eq examples") {
    Matrix h = 2.0 * Matrix::Identity(1, 1);
    Vector g = qp_solve_eq(h, Vector::Zero(1), Matrix::Ones(1, 1), Vector::Ones(1));
    CHECK(g(0) == doctest::Approx(1.0));

    g = qp_solve_eq(2.0 * Matrix::Identity(2, 2), Vector::Zero(2), Matrix::Ones(1, 2), Vector::Constant(1, 2.0));
    CHECK(g(0) == doctest::Approx(1.0));
    CHECK(g(1) == doctest::Approx(1.0));

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix r = oracle::random_matrix(6, 6, rng);
        const Matrix hh = r * r.transpose() + 0.1 * Matrix::Identity(6, 6);
        const Vector f = oracle::random_matrix(6, 1, rng);
        const Matrix a = oracle::random_matrix(2, 6, rng);
        const Vector b = oracle::random_matrix(2, 1, rng);
        const Vector x = qp_solve_eq(hh, f, a, b);
        CHECK((a * x - b).norm() <= 1e-10);
        // stationarity: H x + f lies in the row space of A
        const Vector grad = hh * x + f;
        const Vector lam = a.transpose().colPivHouseholderQr().solve(grad);
        CHECK((a.transpose() * lam - grad).norm() <= 1e-10 * (1.0 + grad.norm()));
    }
}

TEST_CASE("qp_solve_eq handles redundant rows and reports failures") {
    Matrix a(3, 3);
    a << 1, 1, 0, 2, 2, 0, 0, 0, 1;  // row 2 = 2 * row 1
    Vector b(3);
    b << 1, 2, 3;
    const Vector x = qp_solve_eq(Matrix::Identity(3, 3), Vector::Zero(3), a, b);
    CHECK((a * x - b).norm() <= 1e-10);
    CHECK(x(0) == doctest::Approx(0.5));

    b(1) = 5.0;
    CHECK_THROWS_AS(qp_solve_eq(Matrix::Identity(3, 3), Vector::Zero(3), a, b), InfeasibleError);

    // unbounded: linear objective along a free direction
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 1.0;
    Vector f(2);
    f << 0, 1;
    CHECK_THROWS_AS(qp_solve_eq(h, f, Matrix(0, 2), Vector(0)), DegenerateProblemError);

    // PSD Hessian with a consistent linear term: the minimum-norm minimizer is returned
    f << -1, 0;
    const Vector y = qp_solve_eq(h, f, Matrix(0, 2), Vector(0));
    CHECK(y(0) == doctest::Approx(1.0));
    CHECK(y(1) == doctest::Approx(0.0));
}

TEST_CASE("qp_solve_eq projected stationarity on random kernels") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix r = oracle::random_matrix(4, 10, rng);
        const Matrix h = r.transpose() * r;  // PSD, rank 4
        const Matrix a = oracle::random_matrix(6, 10, rng);
        const Vector b = oracle::random_matrix(6, 1, rng);
        const Vector f = h * oracle::random_matrix(10, 1, rng);
        const Vector x = qp_solve_eq(h, f, a, b);
        CHECK((a * x - b).norm() <= 1e-8 * (1.0 + b.norm()));
        const Matrix z = null_space(a, 1e-12);
        CHECK((z.transpose() * (h * x + f)).norm() <= 1e-8 * (1.0 + f.norm()));
    }
}

TEST_CASE("qp_solve_box respects bounds") {
    // min (g1-3)^2 + (g2+3)^2 with |g_i| <= 1 -> (1, -1)
    Matrix h = 2.0 * Matrix::Identity(2, 2);
    Vector f(2);
    f << -6, 6;
    const Vector g = qp_solve_box(h, f, Matrix(0, 2), Vector(0), Matrix::Identity(2, 2),
                                  Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
    CHECK(g(0) == doctest::Approx(1.0));
    CHECK(g(1) == doctest::Approx(-1.0));

    // inactive bounds: unconstrained optimum inside the box
    const Vector g2 = qp_solve_box(h, Vector::Zero(2), Matrix::Ones(1, 2), Vector::Constant(1, 0.5),
                                   Matrix::Identity(2, 2), Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
    CHECK(g2(0) == doctest::Approx(0.25));
    CHECK(g2(1) == doctest::Approx(0.25));
}

TEST_CASE("lmi_feasibility scalar family") {
    for (int i = 1; i <= 9; ++i) {
        const double a = 0.1 * i;
        auto assemble = [a](const Matrix& q) {
            Matrix f(2, 2);
            f << q(0, 0), a * q(0, 0), a * q(0, 0), q(0, 0);
            return f;
        };
        const LmiCertificate c = lmi_feasibility(assemble, 1);
        CHECK(c.feasible);
        CHECK(c.status == LmiStatus::Feasible);
        CHECK(c.min_eig_achieved > 0.0);
        CHECK(c.q_matrix(0, 0) > 0.0);
    }
    for (int i = 11; i <= 20; ++i) {
        const double a = 0.1 * i;
        auto assemble = [a](const Matrix& q) {
            Matrix f(2, 2);
            f << q(0, 0), a * q(0, 0), a * q(0, 0), q(0, 0);
            return f;
        };
        const LmiCertificate c = lmi_feasibility(assemble, 1);
        CHECK_FALSE(c.feasible);
        CHECK(c.status == LmiStatus::Infeasible);
    }
}

TEST_CASE("lmi_feasibility Lyapunov inequality") {
    // A'PA - P < 0 with P > 0 is feasible iff A is Schur stable
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix a = oracle::random_matrix(3, 3, rng);
        const double rho = spectral_radius(a);
        const bool stable = trial % 2 == 0;
        a *= (stable ? 0.9 : 1.1) / rho;
        auto assemble = [&a](const Matrix& p) {
            Matrix f = Matrix::Zero(6, 6);
            f.topLeftCorner(3, 3) = p;
            f.bottomRightCorner(3, 3) = p - a.transpose() * p * a;
            return f;
        };
        const LmiCertificate c = lmi_feasibility(assemble, 3);
        CHECK(c.feasible == stable);
        if (!stable) CHECK(c.status == LmiStatus::Infeasible);
        if (stable) {
            const Matrix f = assemble(c.q_matrix);
            CHECK(symmetric_eig_min(0.5 * (f + f.transpose())) > 0.0);
        }
    }
}

TEST_CASE("lmi_feasibility affine map and contract checks") {
    // F(v) = [[1, v],[v, 1]] - 2 I * 0 : constant term nonzero, feasible at v = 0
    AffineSymmetricMap map;
    map.constant = Matrix::Identity(2, 2);
    Matrix b(2, 2);
    b << 0, 1, 1, 0;
    map.basis.push_back(b);
    CHECK(lmi_feasibility(map).feasible);

    // F(v) = diag(v, -1 - v^2...) cannot use nonlinear; use diag(v, -1 - v): never PD
    AffineSymmetricMap bad;
    bad.constant = Matrix::Zero(2, 2);
    bad.constant(1, 1) = -1.0;
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = -1.0;
    bad.basis.push_back(d);
    const LmiCertificate c = lmi_feasibility(bad);
    CHECK_FALSE(c.feasible);
    CHECK(c.status == LmiStatus::Infeasible);

    auto asym = [](const Matrix& q) {
        Matrix f(2, 2);
        f << q(0, 0), 1.0, 0.0, q(0, 0);
        return f;
    };
    CHECK_THROWS_AS(lmi_feasibility(asym, 1), ContractViolation);
    auto nonlinear = [](const Matrix& q) {
        Matrix f(1, 1);
        f << q(0, 0) * q(0, 0);
        return f;
    };
    CHECK_THROWS_AS(lmi_feasibility(nonlinear, 1), ContractViolation);
}
