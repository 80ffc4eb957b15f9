#pragma once

#include <string>
#include <vector>

#include "cpekit/linalg.hpp"
#include "cpekit/trajectories.hpp"

namespace cpekit {

enum class CompositionKind { Single, Mosaic, Cumulative, Hybrid };

struct CompositionMode {
    CompositionKind kind = CompositionKind::Single;
    std::size_t prefix_count = 0;  // p-bar, hybrid only

    static CompositionMode single() { return {CompositionKind::Single, 0}; }
    static CompositionMode mosaic() { return {CompositionKind::Mosaic, 0}; }
    static CompositionMode cumulative() { return {CompositionKind::Cumulative, 0}; }
    static CompositionMode hybrid(std::size_t p_bar) { return {CompositionKind::Hybrid, p_bar}; }

    // "single", "mosaic", "cumulative", "hybrid"
    std::string kind_name() const;
    // kind_name(), with "(p_bar)" appended for hybrid
    std::string name() const;
    // "mosaic" | "cumulative" | "single" | "hybrid" (prefix from argument) | "hybrid:3"
    static CompositionMode parse(const std::string& text, std::size_t prefix_count = 0);

    bool operator==(const CompositionMode& o) const { return kind == o.kind && prefix_count == o.prefix_count; }
};

// Contiguous column range of a composite and the bundle members that contribute to it.
struct ColumnBlock {
    Index first_column = 0;
    Index count = 0;
    std::vector<std::size_t> members;
};

struct HankelMatrix {
    Matrix matrix;
    Index depth = 0;
    CompositionMode mode;
    std::vector<ColumnBlock> column_blocks;
    std::vector<double> weights_used;

    std::vector<Index> block_column_counts() const;
};

// Raw depth-L block Hankel matrix of a dim x T sample matrix: mL x (T-L+1).
Matrix hankel_matrix(const Matrix& samples, Index depth);

HankelMatrix build_hankel(const Trajectory& traj, Index depth);

// mosaic: [a_1 H(z_1) ... a_p H(z_p)]; cumulative: sum a_i H(z_i);
// hybrid(p_bar): [sum_{i<=p_bar} a_i H(z_i) | a_{p_bar+1} H(z_{p_bar+1}) ...]; single: a_1 H(z_1), p = 1.
HankelMatrix build_composite(const TrajectoryBundle& bundle, Index depth, CompositionMode mode);

// Same composition applied to arbitrary per-member blocks with a common row count
// (e.g. windowed state data). depth is recorded as metadata only.
HankelMatrix compose_blocks(const std::vector<Matrix>& blocks, const std::vector<double>& weights,
                            CompositionMode mode, Index depth = 1);

// Checks the composition preconditions on column counts, naming the offending member.
void check_composition(const std::vector<Index>& column_counts, CompositionMode mode);

}  // namespace cpekit
