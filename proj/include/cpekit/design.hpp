#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cpekit/hankel.hpp"
#include "cpekit/informativity.hpp"
#include "cpekit/trajectories.hpp"

namespace cpekit {

struct DesignRequest {
    Index dim_m = 1;
    Index order_L = 1;
    CompositionMode mode = CompositionMode::mosaic();
    std::vector<Index> lengths;  // one per member; cumulative: all equal T0; hybrid: first p_bar equal T0
    std::vector<double> weights;  // empty means all ones
    std::uint64_t seed = 0;

    std::size_t p() const { return lengths.size(); }
    std::vector<double> effective_weights() const;

    static DesignRequest mosaic(Index m, Index l, std::vector<Index> lengths, std::uint64_t seed = 0);
    static DesignRequest cumulative(Index m, Index l, std::size_t p, Index t0, std::uint64_t seed = 0);
    static DesignRequest hybrid(Index m, Index l, std::size_t p_bar, Index t0, std::vector<Index> tail_lengths,
                                std::uint64_t seed = 0);
};

struct LengthBound {
    std::string inequality;  // human-readable minimal-length condition
    Index required = 0;      // right-hand side
    Index achieved = -1;     // left-hand side for given lengths (-1 when not evaluated)
    bool satisfied = false;
};

// mosaic: sum T_i >= mL + p(L-1); cumulative: T0 >= (m+1)L-1;
// hybrid: T0 + sum_{i>p_bar} T_i >= mL + (p-p_bar+1)(L-1).
LengthBound minimal_lengths(CompositionMode mode, Index m, Index l, std::size_t p, std::size_t p_bar = 0);
LengthBound evaluate_lengths(CompositionMode mode, Index m, Index l, const std::vector<Index>& lengths);

struct DesignLedger {
    // Mosaic recipe bookkeeping over the virtual concatenation (mosaic members, or the
    // hybrid prefix sum followed by the tails): Delta_i and T_i^s.
    std::vector<Index> diagonal_indices;
    std::vector<Index> offsets;
    Matrix diagonal_vectors;  // m x m; column k is the impulse placed at virtual time (k+1)L-1
    // Cumulative recipe: Z_i^0 per member and w_i = (Z_i^0)^{-1} z_i(mL-1).
    std::vector<Matrix> extension_base;
    std::vector<Vector> extension_coefficients;
    // (member, time) in the order entries were fixed.
    std::vector<std::pair<std::size_t, Index>> construction_order;
    std::string recipe;
    std::vector<std::string> notes;
    int resamples = 0;
};

struct DesignResult {
    TrajectoryBundle bundle;
    DesignLedger ledger;
};

// Synthesizes a bundle whose composite of order L has full row rank mL while every
// member alone is not PE of order L. Throws BoundViolationError / UnsupportedCaseError.
DesignResult design_signals(const DesignRequest& req);

struct DesignVerification {
    bool ok = false;
    CpeReport report;
};

DesignVerification verify_design(const TrajectoryBundle& bundle, const DesignRequest& req);

}  // namespace cpekit
