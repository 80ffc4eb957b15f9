#include "cpekit/informativity.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "cpekit/errors.hpp"

namespace cpekit {

std::string AlphaPolicy::describe() const {
    if (kind == Kind::Fixed) return "fixed";
    return "randomized(" + std::to_string(trials) + " trials, seed " + std::to_string(seed) + ")";
}

namespace {

double tol_for(const Matrix& m, double rel_tol) { return rel_tol > 0.0 ? rel_tol : default_rel_tol(m); }

bool member_pe(const Trajectory& t, Index depth, double rel_tol) {
    if (t.length() < depth) return false;
    if (t.length() - depth + 1 < t.dim() * depth) return false;  // too few columns for full row rank
    return check_pe(t, depth, rel_tol);
}

}  // namespace

bool check_pe(const Trajectory& traj, Index depth, double rel_tol) {
    const Matrix h = hankel_matrix(traj.samples(), depth);
    return numeric_rank(h, tol_for(h, rel_tol)).numeric_rank == traj.dim() * depth;
}

std::vector<double> draw_random_weights(std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> expo(-2.0, 2.0);
    std::bernoulli_distribution sign(0.5);
    std::vector<double> w(p);
    for (auto& x : w) x = (sign(rng) ? -1.0 : 1.0) * std::pow(10.0, expo(rng));
    return w;
}

CpeReport check_cpe(const TrajectoryBundle& bundle, Index depth, CompositionMode mode, const AlphaPolicy& policy,
                    double rel_tol) {
    CpeReport rep;
    rep.mode = mode;
    rep.order_L = depth;
    rep.alpha_policy = policy;
    rep.required_rank = bundle.dim() * depth;
    for (const auto& t : bundle.members()) rep.per_member_pe.push_back(member_pe(t, depth, rel_tol));

    auto evaluate = [&](const std::vector<double>& w) {
        const HankelMatrix h = build_composite(bundle.with_weights(w), depth, mode);
        return numeric_rank(h.matrix, tol_for(h.matrix, rel_tol));
    };

    if (policy.kind == AlphaPolicy::Kind::Fixed) {
        rep.weights_used = policy.weights.empty() ? bundle.weights() : policy.weights;
        if (rep.weights_used.size() != bundle.size()) throw InputError("fixed alpha policy needs one weight per member");
        rep.rank_report = evaluate(rep.weights_used);
        rep.trials_run = 1;
        rep.verdict = rep.rank_report.numeric_rank == rep.required_rank;
    } else {
        if (policy.trials < 1) throw InputError("randomized alpha policy needs at least one trial");
        rep.verdict = true;
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < policy.trials; ++k) {
            const auto w = draw_random_weights(bundle.size(), policy.seed + 0x9e3779b97f4a7c15ULL * (k + 1));
            const RankReport r = evaluate(w);
            const double score = r.relative_singular_value(rep.required_rank);
            const bool pass = r.numeric_rank == rep.required_rank;
            if (!pass) rep.verdict = false;
            if (k == 0 || score < worst || (!pass && rep.rank_report.numeric_rank == rep.required_rank)) {
                worst = score;
                rep.rank_report = r;
                rep.weights_used = w;
            }
        }
        rep.trials_run = policy.trials;
    }
    rep.conditioning_score = rep.rank_report.relative_singular_value(rep.required_rank);
    return rep;
}

Matrix rank_condition_matrix(const std::vector<IoRecord>& records, Index depth, CompositionMode mode,
                             const std::vector<double>& weights) {
    if (records.empty()) throw InputError("rank condition needs at least one record");
    if (weights.size() != records.size()) throw InputError("rank condition needs one weight per record");
    const Index n = records.front().n(), m = records.front().m();
    std::vector<Matrix> blocks;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const IoRecord& r = records[i];
        if (r.n() != n || r.m() != m) throw InputError("record " + std::to_string(i) + " has inconsistent dimensions");
        if (r.length() < depth)
            throw InsufficientLengthError("record " + std::to_string(i) + " is shorter than depth " + std::to_string(depth));
        const Index cols = r.length() - depth + 1;
        Matrix blk(n + m * depth, cols);
        blk.topRows(n) = r.x_minus().leftCols(cols);
        blk.bottomRows(m * depth) = hankel_matrix(r.u(), depth);
        blocks.push_back(std::move(blk));
    }
    return compose_blocks(blocks, weights, mode, depth).matrix;
}

RankConditionReport check_rank_condition(const std::vector<IoRecord>& records, Index depth, CompositionMode mode,
                                         const std::vector<double>& weights, double rel_tol) {
    RankConditionReport rep;
    rep.mode = mode;
    rep.order_L = depth;
    const Matrix s = rank_condition_matrix(records, depth, mode, weights);
    rep.expected_rank = records.front().n() + records.front().m() * depth;
    rep.rank_report = numeric_rank(s, tol_for(s, rel_tol));
    rep.verdict = rep.rank_report.numeric_rank == rep.expected_rank;
    rep.conditioning_score = rep.rank_report.relative_singular_value(rep.expected_rank);
    return rep;
}

std::string to_string(Applicability a) {
    switch (a) {
        case Applicability::Holds: return "holds";
        case Applicability::Fails: return "fails";
        case Applicability::NotApplicable: return "not_applicable";
    }
    return "not_applicable";
}

namespace {

Applicability from_bool(bool b) { return b ? Applicability::Holds : Applicability::Fails; }

// Columns span ker(S') for a selector S given as a matrix.
Matrix left_kernel_basis(const Matrix& selector) { return null_space(selector.transpose(), 1e-12); }

Matrix ones_kron_identity(Index copies, Index c) {
    Matrix s = Matrix::Zero(copies * c, c);
    for (Index k = 0; k < copies; ++k) s.middleRows(k * c, c).setIdentity();
    return s;
}

}  // namespace

TransformationReport verify_transformations(const TrajectoryBundle& bundle, Index depth, double rel_tol) {
    TransformationReport rep;
    const std::size_t p = bundle.size();
    const Index req = bundle.dim() * depth;
    const HankelMatrix mos = build_composite(bundle, depth, CompositionMode::mosaic());
    auto full = [&](const Matrix& m) { return numeric_rank(m, tol_for(m, rel_tol)).numeric_rank == req; };
    auto inter = [&](const Matrix& h, const Matrix& selector) {
        const Matrix ht = h.transpose();
        const Matrix k = left_kernel_basis(selector);
        if (k.cols() == 0) return Index(0);
        const double rel = rel_tol > 0.0 ? rel_tol : default_rel_tol(ht.rows(), ht.cols() + k.cols());
        return subspace_intersection_dim(ht, k, rel);
    };

    const bool mcpe = full(mos.matrix);
    rep.mcpe_holds = from_bool(mcpe);

    const auto lengths = bundle.lengths();
    bool equal = true;
    for (Index l : lengths) equal = equal && l == lengths.front();
    const std::size_t pbar = bundle.shared_prefix_count();
    const Index c0 = lengths.front() - depth + 1;

    bool ccpe = false, hcpe = false;
    if (equal) {
        ccpe = full(build_composite(bundle, depth, CompositionMode::cumulative()).matrix);
        rep.ccpe_holds = from_bool(ccpe);
        rep.intersection_dim_1 = inter(mos.matrix, ones_kron_identity(static_cast<Index>(p), c0));
        rep.kernel_condition_1 = from_bool(rep.intersection_dim_1 == 0);
    }
    if (pbar >= 1) {
        const HankelMatrix hyb = build_composite(bundle, depth, CompositionMode::hybrid(pbar));
        hcpe = full(hyb.matrix);
        rep.hcpe_holds = from_bool(hcpe);
        // mosaic -> hybrid selector blkdiag(1_pbar (x) I_C0, I_rest)
        const Index tail = mos.matrix.cols() - static_cast<Index>(pbar) * c0;
        Matrix sel = Matrix::Zero(mos.matrix.cols(), hyb.matrix.cols());
        sel.topLeftCorner(static_cast<Index>(pbar) * c0, c0) = ones_kron_identity(static_cast<Index>(pbar), c0);
        sel.bottomRightCorner(tail, tail).setIdentity();
        rep.intersection_dim_2 = inter(mos.matrix, sel);
        rep.kernel_condition_2 = from_bool(rep.intersection_dim_2 == 0);
        if (equal) {
            const Index blocks = static_cast<Index>(p - pbar) + 1;
            rep.intersection_dim_3 = inter(hyb.matrix, ones_kron_identity(blocks, c0));
            rep.kernel_condition_3 = from_bool(rep.intersection_dim_3 == 0);
        }
    }

    auto holds = [](Applicability a) { return a == Applicability::Holds; };
    auto fails = [](Applicability a) { return a == Applicability::Fails; };
    if (holds(rep.ccpe_holds) && !mcpe) rep.violations.push_back("CCPE holds but MCPE fails");
    if (holds(rep.ccpe_holds) && fails(rep.hcpe_holds)) rep.violations.push_back("CCPE holds but HCPE fails");
    if (holds(rep.hcpe_holds) && !mcpe) rep.violations.push_back("HCPE holds but MCPE fails");
    if (mcpe && holds(rep.kernel_condition_1) && fails(rep.ccpe_holds))
        rep.violations.push_back("MCPE with trivial intersection (1) but CCPE fails");
    if (mcpe && holds(rep.kernel_condition_2) && fails(rep.hcpe_holds))
        rep.violations.push_back("MCPE with trivial intersection (2) but HCPE fails");
    if (holds(rep.hcpe_holds) && holds(rep.kernel_condition_3) && fails(rep.ccpe_holds))
        rep.violations.push_back("HCPE with trivial intersection (3) but CCPE fails");
    return rep;
}

double excitation_lower_bound(const TrajectoryBundle& bundle, Index depth) {
    const HankelMatrix mos = build_composite(bundle, depth, CompositionMode::mosaic());
    if (mos.matrix.cols() < mos.matrix.rows()) return 0.0;
    const RankReport r = numeric_rank(mos.matrix, 0.5);
    const double smin = r.singular_values(r.singular_values.size() - 1);
    return smin * smin;
}

}  // namespace cpekit
