#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpekit/hankel.hpp"
#include "cpekit/linalg.hpp"
#include "cpekit/lmi.hpp"
#include "cpekit/trajectories.hpp"

namespace cpekit {

// x^[0,L-1] = T_L u^[0,L-1] + O_L x(0), both stacked time-major.
struct ImpulseOperators {
    Matrix toeplitz;       // nL x mL, block (i, j) = A^{i-j-1} B for i > j, else 0
    Matrix observability;  // nL x n, block i = A^i
};

ImpulseOperators build_impulse_operators(const LtiSystem& sys, Index depth);

// Stacked [H_L(states); H_L(inputs)] composed across records, state rows first.
struct BehavioralBasis {
    Matrix matrix;
    Index depth = 0;
    Index n = 0;
    Index m = 0;
    CompositionMode mode;
    std::vector<ColumnBlock> column_blocks;
    std::vector<double> weights;

    Index cols() const { return matrix.cols(); }
    // rows of x(j) / u(j) inside a window, j = 0..depth-1
    Index state_row(Index j) const { return j * n; }
    Index input_row(Index j) const { return n * depth + j * m; }
    Matrix states_part() const { return matrix.topRows(n * depth); }
    Matrix inputs_part() const { return matrix.bottomRows(m * depth); }
};

// Uses x(0..T-1) and u(0..T-1) of every record. When `truth` is given the records must
// satisfy its dynamics to dynamics_tol (relative to the data scale).
BehavioralBasis build_behavioral_basis(const std::vector<IoRecord>& records, Index depth, CompositionMode mode,
                                       const std::vector<double>& weights,
                                       const std::optional<LtiSystem>& truth = std::nullopt,
                                       double dynamics_tol = 1e-8);

struct Representation {
    Vector g;
    double residual = 0.0;  // ||basis g - target||
    double tolerance = 0.0;
    bool ok = false;
    Index basis_rank = 0;
    Index expected_rank = 0;  // n + mL
    std::string message;
};

// Least-squares (minimum-norm) g with [x-window; u-window] = basis g.
// x_window: n x L, u_window: m x L. ok when residual <= rel_tol * (1 + ||target||).
Representation represent_trajectory(const BehavioralBasis& basis, const Matrix& x_window, const Matrix& u_window,
                                    double rel_tol = 1e-8);

struct GainSynthesisResult {
    bool success = false;
    Matrix k;         // m x n
    Matrix q;         // decision Q with X- Q = P, U Q = Y
    Matrix p;         // X- Q
    LmiCertificate certificate;
    std::optional<double> closed_loop_radius;  // when the true system is supplied
    bool informative = false;                  // rank [X-; U] = n+m
    RankReport data_rank;
    std::vector<std::string> warnings;
    std::string diagnostic;
};

// Data-driven stabilizing gain: find Q with X-Q = (X-Q)' and
// [[X-Q, X+Q], [(X+Q)', X-Q]] > 0, then K = (UQ)(X-Q)^{-1}. All data matrices are the
// depth-1 composites of the records in `mode`.
GainSynthesisResult synthesize_gain(const std::vector<IoRecord>& records, CompositionMode mode,
                                    const std::vector<double>& weights, double rel_tol = 0.0,
                                    const std::optional<LtiSystem>& truth = std::nullopt,
                                    const LmiOptions& lmi = {});

}  // namespace cpekit
