#include "cpekit/hankel.hpp"

#include "cpekit/errors.hpp"

namespace cpekit {

std::string CompositionMode::kind_name() const {
    switch (kind) {
        case CompositionKind::Single: return "single";
        case CompositionKind::Mosaic: return "mosaic";
        case CompositionKind::Cumulative: return "cumulative";
        case CompositionKind::Hybrid: return "hybrid";
    }
    return "single";
}

std::string CompositionMode::name() const {
    if (kind == CompositionKind::Hybrid) return "hybrid(" + std::to_string(prefix_count) + ")";
    return kind_name();
}

CompositionMode CompositionMode::parse(const std::string& text, std::size_t prefix_count) {
    if (text == "single") return single();
    if (text == "mosaic") return mosaic();
    if (text == "cumulative") return cumulative();
    if (text == "hybrid") return hybrid(prefix_count);
    if (text.rfind("hybrid:", 0) == 0) {
        try {
            return hybrid(static_cast<std::size_t>(std::stoul(text.substr(7))));
        } catch (const std::exception&) {
            throw InputError("cannot parse hybrid prefix count in '" + text + "'");
        }
    }
    throw InputError("unknown composition mode '" + text + "' (expected single, mosaic, cumulative or hybrid)");
}

std::vector<Index> HankelMatrix::block_column_counts() const {
    std::vector<Index> out;
    for (const auto& b : column_blocks) out.push_back(b.count);
    return out;
}

Matrix hankel_matrix(const Matrix& samples, Index depth) {
    const Index m = samples.rows(), t = samples.cols();
    if (depth < 1) throw InputError("Hankel depth must be >= 1");
    if (t < depth)
        throw InsufficientLengthError("trajectory length " + std::to_string(t) + " is shorter than depth " +
                                      std::to_string(depth));
    const Index cols = t - depth + 1;
    Matrix h(m * depth, cols);
    for (Index r = 0; r < depth; ++r) h.middleRows(r * m, m) = samples.middleCols(r, cols);
    return h;
}

HankelMatrix build_hankel(const Trajectory& traj, Index depth) {
    HankelMatrix out;
    out.matrix = hankel_matrix(traj.samples(), depth);
    out.depth = depth;
    out.mode = CompositionMode::single();
    out.column_blocks.push_back({0, out.matrix.cols(), {0}});
    out.weights_used = {1.0};
    return out;
}

void check_composition(const std::vector<Index>& cols, CompositionMode mode) {
    const std::size_t p = cols.size();
    if (p == 0) throw InputError("composition needs at least one member");
    switch (mode.kind) {
        case CompositionKind::Single:
            if (p != 1) throw InputError("single mode requires exactly one trajectory, got " + std::to_string(p));
            break;
        case CompositionKind::Mosaic:
            break;
        case CompositionKind::Cumulative:
            for (std::size_t i = 1; i < p; ++i)
                if (cols[i] != cols[0])
                    throw InputError("cumulative mode requires equal lengths; member " + std::to_string(i) +
                                     " differs from member 0");
            break;
        case CompositionKind::Hybrid:
            if (mode.prefix_count < 1 || mode.prefix_count > p)
                throw InputError("hybrid mode requires 1 <= p_bar <= p (p_bar = " + std::to_string(mode.prefix_count) +
                                 ", p = " + std::to_string(p) + ")");
            for (std::size_t i = 1; i < mode.prefix_count; ++i)
                if (cols[i] != cols[0])
                    throw InputError("hybrid mode requires the first p_bar members to share a length; member " +
                                     std::to_string(i) + " differs from member 0");
            break;
    }
}

HankelMatrix compose_blocks(const std::vector<Matrix>& blocks, const std::vector<double>& weights,
                            CompositionMode mode, Index depth) {
    if (blocks.size() != weights.size()) throw InputError("compose_blocks: one weight per block required");
    std::vector<Index> cols;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].rows() != blocks.front().rows())
            throw InputError("compose_blocks: member " + std::to_string(i) + " has a different row count");
        if (weights[i] == 0.0) throw InputError("compose_blocks: zero weight for member " + std::to_string(i));
        cols.push_back(blocks[i].cols());
    }
    check_composition(cols, mode);
    const std::size_t p = blocks.size();
    const Index rows = blocks.front().rows();

    HankelMatrix out;
    out.depth = depth;
    out.mode = mode;
    out.weights_used = weights;

    std::size_t summed = 0;  // members folded into the leading cumulative block
    if (mode.kind == CompositionKind::Cumulative) summed = p;
    else if (mode.kind == CompositionKind::Hybrid) summed = mode.prefix_count;

    Index total = 0;
    if (summed > 0) total += cols[0];
    for (std::size_t i = summed; i < p; ++i) total += cols[i];
    out.matrix = Matrix::Zero(rows, total);

    Index at = 0;
    if (summed > 0) {
        ColumnBlock blk{0, cols[0], {}};
        for (std::size_t i = 0; i < summed; ++i) {
            out.matrix.leftCols(cols[0]) += weights[i] * blocks[i];
            blk.members.push_back(i);
        }
        out.column_blocks.push_back(blk);
        at = cols[0];
    }
    for (std::size_t i = summed; i < p; ++i) {
        out.matrix.middleCols(at, cols[i]) = weights[i] * blocks[i];
        out.column_blocks.push_back({at, cols[i], {i}});
        at += cols[i];
    }
    return out;
}

HankelMatrix build_composite(const TrajectoryBundle& bundle, Index depth, CompositionMode mode) {
    if (depth < 1) throw InputError("Hankel depth must be >= 1");
    std::vector<Matrix> blocks;
    for (std::size_t i = 0; i < bundle.size(); ++i) {
        const Trajectory& t = bundle.member(i);
        if (t.length() < depth)
            throw InsufficientLengthError(mode.kind_name() + " composition: member " + std::to_string(i) +
                                          (t.label().empty() ? "" : " ('" + t.label() + "')") + " has length " +
                                          std::to_string(t.length()) + " < L = " + std::to_string(depth));
        blocks.push_back(hankel_matrix(t.samples(), depth));
    }
    return compose_blocks(blocks, bundle.weights(), mode, depth);
}

}  // namespace cpekit
