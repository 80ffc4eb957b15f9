#pragma once

#include "cpekit/linalg.hpp"

namespace cpekit {

struct QpOptions {
    double rel_tol = 0.0;  // redundancy threshold for A_eq; 0 selects default_rel_tol(A_eq)
    double feasibility_tol = 1e-8;
};

// min 1/2 g'Hg + f'g  s.t.  A_eq g = b_eq.
// Null-space method: redundant constraint rows are dropped via the SVD of A_eq, the
// reduced Hessian is solved with a pseudo-inverse, so among all minimizers the one of
// minimum norm is returned. A_eq may have zero rows.
Vector qp_solve_eq(const Matrix& h, const Vector& f, const Matrix& a_eq, const Vector& b_eq,
                   const QpOptions& opts = {});

// Adds two-sided bounds lo <= C g <= hi through an active-set loop over qp_solve_eq.
// Throws ComputationError when the working set does not settle within max_iterations.
Vector qp_solve_box(const Matrix& h, const Vector& f, const Matrix& a_eq, const Vector& b_eq,
                    const Matrix& c, const Vector& lo, const Vector& hi,
                    int max_iterations = 200, const QpOptions& opts = {});

}  // namespace cpekit
