#include <doctest.h>

#include <random>

#include "cpekit/design.hpp"
#include "cpekit/errors.hpp"
#include "cpekit/experiments.hpp"
#include "support/oracles.hpp"

using namespace cpekit;

namespace {

// Independent verdict: composite rank by elimination and per-member rank below mL.
bool oracle_ok(const TrajectoryBundle& b, const DesignRequest& req) {
    const Index need = req.dim_m * req.order_L;
    const TrajectoryBundle w = b.with_weights(req.effective_weights());
    const Matrix comp = build_composite(w.with_shared_prefix(req.mode.prefix_count), req.order_L, req.mode).matrix;
    if (oracle::gauss_rank(comp, 1e-10) != need) return false;
    for (const auto& t : b.members())
        if (t.length() >= req.order_L && oracle::gauss_rank(oracle::hankel(t.samples(), req.order_L), 1e-10) == need)
            return false;
    return true;
}

}  // namespace

TEST_CASE("minimal length bounds") {
    CHECK(minimal_lengths(CompositionMode::mosaic(), 2, 5, 10).required == 50);
    CHECK(minimal_lengths(CompositionMode::cumulative(), 2, 5, 10).required == 14);
    CHECK(minimal_lengths(CompositionMode::hybrid(3), 2, 5, 10, 3).required == 42);
    const LengthBound b = evaluate_lengths(CompositionMode::mosaic(), 2, 5, {7, 7, 6, 6, 5});
    CHECK(b.achieved == 31);
    CHECK(b.required == 30);
    CHECK(b.satisfied);
    CHECK_FALSE(evaluate_lengths(CompositionMode::mosaic(), 2, 5, {7, 6, 6, 5, 5}).satisfied);
}

TEST_CASE("mosaic example design") {
    const DesignRequest req = DesignRequest::mosaic(2, 5, {7, 7, 6, 6, 5}, 1);
    const DesignResult d = design_signals(req);
    CHECK(d.bundle.lengths() == std::vector<Index>{7, 7, 6, 6, 5});
    CHECK(verify_design(d.bundle, req).ok);
    CHECK(oracle_ok(d.bundle, req));
    CHECK(d.ledger.diagonal_vectors.rows() == 2);
    CHECK_FALSE(d.ledger.construction_order.empty());
}

TEST_CASE("cumulative example design") {
    const DesignRequest req = DesignRequest::cumulative(2, 5, 2, 14, 4);
    const DesignResult d = design_signals(req);
    CHECK(verify_design(d.bundle, req).ok);
    CHECK(oracle_ok(d.bundle, req));
}

TEST_CASE("design rejections") {
    CHECK_THROWS_AS(design_signals(DesignRequest::cumulative(2, 5, 1, 14)), UnsupportedCaseError);
    CHECK_THROWS_AS(design_signals(DesignRequest::cumulative(2, 5, 3, 13)), BoundViolationError);
    CHECK_THROWS_AS(design_signals(DesignRequest::cumulative(2, 1, 3, 5)), UnsupportedCaseError);
    CHECK_THROWS_AS(design_signals(DesignRequest::mosaic(2, 5, {7, 6, 6, 5, 5})), BoundViolationError);
    CHECK_THROWS_AS(design_signals(DesignRequest::mosaic(2, 5, {14, 5})), UnsupportedCaseError);
    CHECK_THROWS_AS(design_signals(DesignRequest::mosaic(2, 5, {4, 13, 13})), InputError);
    DesignRequest zero = DesignRequest::mosaic(2, 5, {7, 7, 6, 6, 5});
    zero.weights = {1, 1, 0, 1, 1};
    CHECK_THROWS_AS(design_signals(zero), InputError);
}

TEST_CASE("verify_design rejects PE members and zero data") {
    std::mt19937_64 rng(3);
    const DesignRequest req = DesignRequest::cumulative(1, 3, 2, 12);
    const TrajectoryBundle pe({Trajectory(oracle::random_matrix(1, 12, rng)), Trajectory(oracle::random_matrix(1, 12, rng))});
    const DesignVerification v = verify_design(pe, req);
    CHECK(v.report.verdict);
    CHECK_FALSE(v.ok);
    const TrajectoryBundle zeros({Trajectory(Matrix::Zero(1, 12)), Trajectory(Matrix::Zero(1, 12))});
    CHECK_FALSE(verify_design(zeros, req).ok);
}

TEST_CASE("randomized design requests are sound and deterministic") {
    for (std::uint64_t s = 0; s < 120; ++s) {
        const DesignRequest req = experiments::random_design_request(s);
        const DesignResult d = design_signals(req);
        CHECK(verify_design(d.bundle, req).ok);
        CHECK(oracle_ok(d.bundle, req));
        if (s % 20 == 0) {
            const DesignResult again = design_signals(req);
            for (std::size_t i = 0; i < d.bundle.size(); ++i)
                CHECK(again.bundle.member(i).samples() == d.bundle.member(i).samples());
        }
    }
}
