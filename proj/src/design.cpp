#include "cpekit/design.hpp"

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "cpekit/errors.hpp"

namespace cpekit {

std::vector<double> DesignRequest::effective_weights() const {
    return weights.empty() ? std::vector<double>(lengths.size(), 1.0) : weights;
}

DesignRequest DesignRequest::mosaic(Index m, Index l, std::vector<Index> lengths, std::uint64_t seed) {
    return {m, l, CompositionMode::mosaic(), std::move(lengths), {}, seed};
}

DesignRequest DesignRequest::cumulative(Index m, Index l, std::size_t p, Index t0, std::uint64_t seed) {
    return {m, l, CompositionMode::cumulative(), std::vector<Index>(p, t0), {}, seed};
}

DesignRequest DesignRequest::hybrid(Index m, Index l, std::size_t p_bar, Index t0, std::vector<Index> tail_lengths,
                                    std::uint64_t seed) {
    std::vector<Index> lengths(p_bar, t0);
    lengths.insert(lengths.end(), tail_lengths.begin(), tail_lengths.end());
    return {m, l, CompositionMode::hybrid(p_bar), std::move(lengths), {}, seed};
}

LengthBound minimal_lengths(CompositionMode mode, Index m, Index l, std::size_t p, std::size_t p_bar) {
    LengthBound b;
    const Index pp = static_cast<Index>(p);
    switch (mode.kind) {
        case CompositionKind::Single:
            b.required = (m + 1) * l - 1;
            b.inequality = "T >= (m+1)L-1 = " + std::to_string(b.required);
            break;
        case CompositionKind::Mosaic:
            b.required = m * l + pp * (l - 1);
            b.inequality = "sum T_i >= mL + p(L-1) = " + std::to_string(b.required);
            break;
        case CompositionKind::Cumulative:
            b.required = (m + 1) * l - 1;
            b.inequality = "T0 >= (m+1)L-1 = " + std::to_string(b.required);
            break;
        case CompositionKind::Hybrid: {
            const std::size_t pb = p_bar ? p_bar : mode.prefix_count;
            b.required = m * l + (pp - static_cast<Index>(pb) + 1) * (l - 1);
            b.inequality = "T0 + sum_{i>p_bar} T_i >= mL + (p-p_bar+1)(L-1) = " + std::to_string(b.required);
            break;
        }
    }
    return b;
}

LengthBound evaluate_lengths(CompositionMode mode, Index m, Index l, const std::vector<Index>& lengths) {
    LengthBound b = minimal_lengths(mode, m, l, lengths.size(), mode.prefix_count);
    if (lengths.empty()) return b;
    switch (mode.kind) {
        case CompositionKind::Single:
        case CompositionKind::Cumulative:
            b.achieved = lengths.front();
            break;
        case CompositionKind::Mosaic:
            b.achieved = 0;
            for (Index t : lengths) b.achieved += t;
            break;
        case CompositionKind::Hybrid:
            b.achieved = lengths.front();
            for (std::size_t i = mode.prefix_count; i < lengths.size(); ++i) b.achieved += lengths[i];
            break;
    }
    b.satisfied = b.achieved >= b.required;
    return b;
}

namespace {

using Rng = std::mt19937_64;

Matrix uniform_block(Index r, Index c, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix out(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) out(i, j) = u(rng);
    return out;
}

// Column k: the smallest-index unit vector outside the span of the unit vectors chosen so
// far, plus a 0.01 uniform perturbation, re-drawn until the rank of the collection grows.
Matrix impulse_vectors(Index m, Rng& rng) {
    Matrix v(m, 0);
    Matrix chosen(m, 0);
    for (Index k = 0; k < m; ++k) {
        Index j = 0;
        for (; j < m; ++j) {
            Matrix trial(m, k + 1);
            trial << chosen, Vector::Unit(m, j);
            if (numeric_rank(trial, 1e-8).numeric_rank == k + 1) break;
        }
        Matrix grown(m, k + 1);
        grown << chosen, Vector::Unit(m, j);
        chosen = grown;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100) throw ComputationError("design: could not select independent impulse vectors");
            Matrix trial(m, k + 1);
            trial << v, Vector(Vector::Unit(m, j) + 0.01 * uniform_block(m, 1, rng));
            if (numeric_rank(trial, 1e-8).numeric_rank == k + 1) {
                v = trial;
                break;
            }
        }
    }
    return v;
}

// Mosaic recipe over a virtual concatenation: member i occupies virtual columns starting at
// T_i^s = sum_{j<i}(T_j - L + 1); impulses v_k sit at virtual time (k+1)L - 1 (k < m), the
// first Delta_i entries of each member are free, all remaining entries are zero.
std::vector<Matrix> mosaic_members(Index m, Index l, const std::vector<Index>& lengths, const Matrix& v, Rng& rng,
                                   DesignLedger& ledger, std::size_t member_base) {
    std::vector<Matrix> out;
    Index offset = 0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        const Index t_len = lengths[i];
        const Index delta = l - 1 - (offset % l);
        ledger.offsets.push_back(offset);
        ledger.diagonal_indices.push_back(delta);
        Matrix z = Matrix::Zero(m, t_len);
        for (Index t = 0; t < t_len; ++t) {
            const Index virt = offset + t;
            if (t < delta) z.col(t) = uniform_block(m, 1, rng);
            if ((virt + 1) % l == 0) {
                const Index k = (virt + 1) / l - 1;
                if (k >= 0 && k < m) z.col(t) = v.col(k);
            }
            ledger.construction_order.emplace_back(member_base + i, t);
        }
        out.push_back(std::move(z));
        offset += t_len - l + 1;
    }
    return out;
}

Matrix extension_base(const Matrix& z, Index start, Index m, Index l) {
    Matrix zb(m, m);
    for (Index c = 0; c < m; ++c) zb.col(c) = z.col(start + c * l);
    return zb;
}

double max_row_l1(const Vector& w, std::size_t p, Index m) {
    double best = 0.0;
    for (std::size_t i = 0; i < p; ++i) best = std::max(best, w.segment(static_cast<Index>(i) * m, m).lpNorm<1>());
    return best;
}

// Cumulative recipe. For k < mL-1 the weighted sum equals the impulse signal (v_k at
// k = (k'+1)L-1, zero elsewhere): members 0..p-2 are free, the last member is solved.
// At k = mL-1 each member gets z_i(mL-1) = Z_i^0 w_i with sum a_i Z_i^0 w_i = v_m, and
// afterwards the tail law z_i(k) = Z_i^{(k-mL+1)} w_i. The w_i are chosen with
// max_i ||w_i||_1 <= 0.9 so the tail recursion stays bounded.
std::vector<Matrix> cumulative_members(Index m, Index l, const std::vector<double>& alpha, Index t0, const Matrix& v,
                                       Rng& rng, DesignLedger& ledger, std::size_t member_base) {
    const std::size_t p = alpha.size();
    const Index ml = m * l;
    const double rho = 0.9;
    auto target = [&](Index k) -> Vector {
        if ((k + 1) % l == 0) {
            const Index idx = (k + 1) / l - 1;
            if (idx < m) return v.col(idx);
        }
        return Vector::Zero(m);
    };
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double scale = 1.0 + 0.1 * attempt;  // larger free entries shrink the extension coefficients
        std::vector<Matrix> zs(p, Matrix::Zero(m, t0));
        std::vector<std::pair<std::size_t, Index>> order;
        for (Index k = 0; k < ml - 1; ++k) {
            Vector rest = target(k);
            for (std::size_t i = 0; i + 1 < p; ++i) {
                zs[i].col(k) = scale * uniform_block(m, 1, rng);
                rest -= alpha[i] * zs[i].col(k);
                order.emplace_back(member_base + i, k);
            }
            zs[p - 1].col(k) = rest / alpha[p - 1];
            order.emplace_back(member_base + p - 1, k);
        }
        std::vector<Matrix> z0(p);
        bool well_posed = true;
        for (std::size_t i = 0; i < p; ++i) {
            z0[i] = extension_base(zs[i], 0, m, l);
            Eigen::JacobiSVD<Matrix> svd(z0[i]);
            const Vector s = svd.singularValues();
            if (!(s(m - 1) > 0.0) || s(0) / s(m - 1) > 1e8) well_posed = false;
        }
        if (!well_posed) {
            ++ledger.resamples;
            continue;
        }
        Matrix big(m, static_cast<Index>(p) * m);
        for (std::size_t i = 0; i < p; ++i) big.middleCols(static_cast<Index>(i) * m, m) = alpha[i] * z0[i];
        const Vector vm = target(ml - 1);
        const Vector wmin = pseudo_inverse(big, 1e-12) * vm;
        if (max_row_l1(wmin, p, m) > rho) {
            ++ledger.resamples;
            continue;
        }
        // spread the solution over members with a random null-space direction, as far as the bound allows
        const Matrix nb = null_space(big, 1e-12);
        Vector w = wmin;
        if (nb.cols() > 0) {
            const Vector dir = nb * uniform_block(nb.cols(), 1, rng);
            double lo = 0.0, hi = 1.0;
            while (max_row_l1(wmin + hi * dir, p, m) < rho && hi < 1e6) hi *= 2.0;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (max_row_l1(wmin + mid * dir, p, m) <= rho) lo = mid;
                else hi = mid;
            }
            w = wmin + 0.5 * lo * dir;
        }
        ledger.extension_base.clear();
        ledger.extension_coefficients.clear();
        for (std::size_t i = 0; i < p; ++i) {
            const Vector wi = w.segment(static_cast<Index>(i) * m, m);
            zs[i].col(ml - 1) = z0[i] * wi;
            order.emplace_back(member_base + i, ml - 1);
            ledger.extension_base.push_back(z0[i]);
            ledger.extension_coefficients.push_back(wi);
        }
        for (Index k = ml; k < t0; ++k)
            for (std::size_t i = 0; i < p; ++i) {
                zs[i].col(k) = extension_base(zs[i], k - ml + 1, m, l) * ledger.extension_coefficients[i];
                order.emplace_back(member_base + i, k);
            }
        ledger.construction_order.insert(ledger.construction_order.end(), order.begin(), order.end());
        return zs;
    }
    throw ComputationError("cumulative design: resample cap (100) reached without a well-conditioned extension");
}

void validate(const DesignRequest& req) {
    const Index m = req.dim_m, l = req.order_L;
    const std::size_t p = req.p();
    if (m < 1) throw InputError("design: dim_m must be >= 1");
    if (l < 1) throw InputError("design: order L must be >= 1");
    if (p < 2)
        throw UnsupportedCaseError("design: at least two members are required; a single member meeting the "
                                   "length bound is itself PE, so the non-PE guarantee would be vacuous");
    if (!req.weights.empty() && req.weights.size() != p) throw InputError("design: one weight per member required");
    for (double w : req.effective_weights())
        if (w == 0.0 || !std::isfinite(w)) throw InputError("design: weights must be finite and nonzero");
    const Index cap = (m + 1) * l - 2;  // longest member that cannot be PE on its own
    auto check_member = [&](std::size_t i, const char* what) {
        const Index t = req.lengths[i];
        if (t < l)
            throw InputError(std::string("design: ") + what + " member " + std::to_string(i) + " has length " +
                             std::to_string(t) + " < L = " + std::to_string(l));
        if (t > cap)
            throw UnsupportedCaseError(std::string("design: ") + what + " member " + std::to_string(i) +
                                       " has length " + std::to_string(t) + " >= (m+1)L-1 = " + std::to_string(cap + 1) +
                                       "; such members are not covered by the mosaic recipe");
    };
    const LengthBound bound = evaluate_lengths(req.mode, m, l, req.lengths);
    switch (req.mode.kind) {
        case CompositionKind::Single:
            throw UnsupportedCaseError("design: single mode has no multi-member recipe");
        case CompositionKind::Mosaic:
            for (std::size_t i = 0; i < p; ++i) check_member(i, "mosaic");
            break;
        case CompositionKind::Cumulative:
            for (std::size_t i = 1; i < p; ++i)
                if (req.lengths[i] != req.lengths[0])
                    throw InputError("design: cumulative members must share one length T0");
            if (l < 2)
                throw UnsupportedCaseError("design: cumulative recipe needs L >= 2 (the tail law is circular for L = 1)");
            break;
        case CompositionKind::Hybrid: {
            const std::size_t pb = req.mode.prefix_count;
            if (pb < 1 || pb > p) throw InputError("design: hybrid requires 1 <= p_bar <= p");
            for (std::size_t i = 1; i < pb; ++i)
                if (req.lengths[i] != req.lengths[0]) throw InputError("design: hybrid prefix members must share T0");
            for (std::size_t i = pb; i < p; ++i) check_member(i, "hybrid tail");
            const Index t0 = req.lengths[0];
            if (t0 < l) throw InputError("design: hybrid prefix length T0 < L");
            if (t0 > cap && (pb < 2 || l < 2))
                throw UnsupportedCaseError("design: a hybrid prefix with T0 >= (m+1)L-1 is designed cumulatively and "
                                           "needs p_bar >= 2 and L >= 2");
            break;
        }
    }
    if (!bound.satisfied)
        throw BoundViolationError("design: lengths violate the minimal-length bound " + bound.inequality +
                                  " (got " + std::to_string(bound.achieved) + ")");
}

}  // namespace

DesignResult design_signals(const DesignRequest& req) {
    validate(req);
    Rng rng(req.seed);
    const Index m = req.dim_m, l = req.order_L;
    const std::size_t p = req.p();
    const std::vector<double> alpha = req.effective_weights();
    DesignLedger ledger;
    ledger.diagonal_vectors = impulse_vectors(m, rng);
    std::vector<Matrix> zs;

    switch (req.mode.kind) {
        case CompositionKind::Mosaic:
            ledger.recipe = "mosaic";
            zs = mosaic_members(m, l, req.lengths, ledger.diagonal_vectors, rng, ledger, 0);
            break;
        case CompositionKind::Cumulative:
            ledger.recipe = "cumulative";
            zs = cumulative_members(m, l, alpha, req.lengths[0], ledger.diagonal_vectors, rng, ledger, 0);
            break;
        case CompositionKind::Hybrid: {
            const std::size_t pb = req.mode.prefix_count;
            const Index t0 = req.lengths[0];
            std::vector<Index> virt{t0};
            virt.insert(virt.end(), req.lengths.begin() + static_cast<std::ptrdiff_t>(pb), req.lengths.end());
            if (t0 <= (m + 1) * l - 2) {
                ledger.recipe = "hybrid/mosaic-prefix";
                ledger.notes.push_back(
                    "T0 < (m+1)L-1: the weighted prefix sum is the first member of a virtual mosaic design; the "
                    "full-rank requirement is enforced on the diagonal impulse collection of that virtual mosaic");
                DesignLedger virt_ledger;
                const std::vector<Matrix> vm =
                    mosaic_members(m, l, virt, ledger.diagonal_vectors, rng, virt_ledger, 0);
                ledger.offsets = virt_ledger.offsets;
                ledger.diagonal_indices = virt_ledger.diagonal_indices;
                Matrix rest = vm[0];
                for (std::size_t i = 0; i + 1 < pb; ++i) {
                    zs.push_back(uniform_block(m, t0, rng));
                    rest -= alpha[i] * zs.back();
                }
                zs.push_back(rest / alpha[pb - 1]);
                for (Index t = 0; t < t0; ++t)
                    for (std::size_t i = 0; i < pb; ++i) ledger.construction_order.emplace_back(i, t);
                for (std::size_t i = 1; i < vm.size(); ++i) {
                    zs.push_back(vm[i]);
                    for (Index t = 0; t < vm[i].cols(); ++t) ledger.construction_order.emplace_back(pb + i - 1, t);
                }
            } else {
                ledger.recipe = "hybrid/cumulative-prefix";
                ledger.notes.push_back(
                    "T0 >= (m+1)L-1: the prefix alone is designed to full cumulative rank; tail members are non-PE "
                    "fillers (free first Delta_i entries, zeros elsewhere) aligned to the mosaic offsets");
                const std::vector<double> pre_alpha(alpha.begin(), alpha.begin() + static_cast<std::ptrdiff_t>(pb));
                zs = cumulative_members(m, l, pre_alpha, t0, ledger.diagonal_vectors, rng, ledger, 0);
                Index offset = 0;
                for (std::size_t i = 0; i < virt.size(); ++i) {
                    const Index delta = l - 1 - (offset % l);
                    ledger.offsets.push_back(offset);
                    ledger.diagonal_indices.push_back(delta);
                    if (i > 0) {
                        Matrix z = Matrix::Zero(m, virt[i]);
                        z.leftCols(delta) = uniform_block(m, delta, rng);
                        zs.push_back(z);
                        for (Index t = 0; t < virt[i]; ++t) ledger.construction_order.emplace_back(pb + i - 1, t);
                    }
                    offset += virt[i] - l + 1;
                }
            }
            break;
        }
        case CompositionKind::Single:
            break;
    }

    std::vector<Trajectory> members;
    for (std::size_t i = 0; i < p; ++i) members.emplace_back(zs[i], "z" + std::to_string(i + 1));
    const std::size_t prefix = req.mode.kind == CompositionKind::Hybrid ? req.mode.prefix_count : 0;
    return {TrajectoryBundle(members, alpha, prefix), ledger};
}

DesignVerification verify_design(const TrajectoryBundle& bundle, const DesignRequest& req) {
    DesignVerification out;
    CompositionMode mode = req.mode;
    if (mode.kind == CompositionKind::Hybrid && mode.prefix_count == 0) mode.prefix_count = bundle.shared_prefix_count();
    try {
        out.report = check_cpe(bundle, req.order_L, mode, AlphaPolicy::fixed());
    } catch (const InputError&) {
        out.ok = false;
        return out;
    }
    bool any_pe = false;
    for (bool b : out.report.per_member_pe) any_pe = any_pe || b;
    out.ok = out.report.verdict && !any_pe;
    return out;
}

}  // namespace cpekit
