#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cpekit/linalg.hpp"

namespace cpekit {

// F(v) = constant + sum_i v_i basis[i], all symmetric of equal size.
struct AffineSymmetricMap {
    Matrix constant;
    std::vector<Matrix> basis;

    Index size() const { return constant.rows(); }
    Index dim() const { return static_cast<Index>(basis.size()); }
    Matrix evaluate(const Vector& v) const;
    bool homogeneous() const;
};

enum class LmiStatus { Feasible, Infeasible, Unknown };
std::string to_string(LmiStatus s);

struct LmiOptions {
    double margin = 1e-6;  // required lambda_min(F) / ||F||_2 at the returned point
    int max_outer = 60;
    int max_newton = 100;
};

struct LmiCertificate {
    Matrix q_matrix;        // decision variable as a symmetric matrix (callback form), else v as a column
    Vector decision;        // raw decision vector v
    double min_eig_achieved = 0.0;
    double relative_margin = 0.0;  // min_eig_achieved / ||F(v)||_2
    bool feasible = false;
    LmiStatus status = LmiStatus::Unknown;
    double dual_bound = 0.0;  // upper bound on the normalized margin implied by the dual iterate
    int iterations = 0;
    std::string message;
};

// Strict feasibility of F(v) > 0. A log-barrier Newton method maximizes t subject to
// F(v) - tI > 0 on the trace-normalized (homogenized) problem. "Infeasible" is only
// reported with a dual certificate; hitting the iteration cap yields "Unknown".
LmiCertificate lmi_feasibility(const AffineSymmetricMap& map, const LmiOptions& opts = {});

// Callback form: assemble maps a symmetric q_dim x q_dim matrix Q affinely to a symmetric
// block matrix. The affine structure is recovered by probing and then checked.
LmiCertificate lmi_feasibility(const std::function<Matrix(const Matrix&)>& assemble, Index q_dim,
                               double margin = 1e-6);

// Coordinates of the symmetric basis used by the callback form.
Matrix symmetric_from_vector(const Vector& v, Index q_dim);

}  // namespace cpekit
