// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cpekit/bench.hpp"
#include "cpekit/control.hpp"
#include "cpekit/design.hpp"
#include "cpekit/errors.hpp"
#include "cpekit/experiments.hpp"
#include "cpekit/hankel.hpp"
#include "cpekit/identification.hpp"
#include "cpekit/informativity.hpp"
#include "support/oracles.hpp"

using namespace cpekit;
namespace ex = cpekit::experiments;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const std::vector<CompositionKind> kKinds = {CompositionKind::Mosaic, CompositionKind::Cumulative,
                                             CompositionKind::Hybrid};

std::string kind_name(CompositionKind k) {
    switch (k) {
        case CompositionKind::Mosaic: return "mosaic";
        case CompositionKind::Cumulative: return "cumulative";
        case CompositionKind::Hybrid: return "hybrid";
        default: return "single";
    }
}

// Independent check of a design: elimination rank of the composite and of every member.
bool oracle_design_ok(const TrajectoryBundle& b, const DesignRequest& req) {
    const Index need = req.dim_m * req.order_L;
    const HankelMatrix comp =
        build_composite(b.with_weights(req.effective_weights()).with_shared_prefix(req.mode.prefix_count), req.order_L,
                        req.mode);
    if (oracle::gauss_rank(comp.matrix, 1e-10) != need) return false;
    for (const auto& t : b.members())
        if (t.length() >= req.order_L && oracle::gauss_rank(oracle::hankel(t.samples(), req.order_L), 1e-10) == need)
            return false;
    return true;
}

Outcome criterion_1() {
    const auto t0 = Clock::now();
    int fails = 0, oracle_fails = 0, errors = 0;
    for (std::uint64_t s = 0; s < 500; ++s) {
        try {
            const DesignRequest req = ex::random_design_request(s);
            const DesignResult d = design_signals(req);
            if (!verify_design(d.bundle, req).ok) ++fails;
            if (!oracle_design_ok(d.bundle, req)) ++oracle_fails;
        } catch (const std::exception&) {
            ++errors;
        }
    }
    const double secs = seconds_since(t0);
    return {fails == 0 && oracle_fails == 0 && errors == 0 && secs < 60.0,
            "500 requests: verify failures " + std::to_string(fails) + ", oracle failures " +
                std::to_string(oracle_fails) + ", exceptions " + std::to_string(errors) + ", " + fmt(secs) + " s"};
}

Outcome criterion_2() {
    const std::vector<Index> lengths = {7, 7, 6, 6, 5};
    const auto cols = columns_from_lengths(lengths, 5);
    Index c = 0;
    for (Index x : cols) c += x;
    const DesignRequest req = DesignRequest::mosaic(2, 5, lengths, 1);
    const DesignResult d = design_signals(req);
    const HankelMatrix h = build_composite(d.bundle, 5, CompositionMode::mosaic());
    const Index rank = oracle::gauss_rank(h.matrix, 1e-10);
    const Index kth = crossover_threshold(c, 10);
    const bool ok = c == 11 && h.matrix.cols() == 11 && rank == 10 && kth == 2 && verify_design(d.bundle, req).ok;
    return {ok, "C = " + std::to_string(c) + ", rank " + std::to_string(rank) + ", K_th = " + std::to_string(kth)};
}

Outcome criterion_3() {
    const auto t0 = Clock::now();
    int violations = 0, ccpe = 0, mcpe = 0, hcpe = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        Index l = 0;
        const TrajectoryBundle b = ex::random_equal_length_bundle(s, &l);
        const TransformationReport r = verify_transformations(b, l);
        if (!r.consistent()) ++violations;
        // Independent recheck of the unconditional implications with the elimination oracle.
        const Index need = b.dim() * l;
        const bool c = oracle::gauss_rank(build_composite(b, l, CompositionMode::cumulative()).matrix, 1e-9) == need;
        const bool mo = oracle::gauss_rank(build_composite(b, l, CompositionMode::mosaic()).matrix, 1e-9) == need;
        const bool hy =
            oracle::gauss_rank(build_composite(b, l, CompositionMode::hybrid(b.shared_prefix_count())).matrix, 1e-9) ==
            need;
        if ((c && !mo) || (c && !hy) || (hy && !mo)) ++violations;
        ccpe += c;
        mcpe += mo;
        hcpe += hy;
    }
    const double secs = seconds_since(t0);
    return {violations == 0 && secs < 120.0,
            "1000 bundles: counterexamples " + std::to_string(violations) + " (CCPE " + std::to_string(ccpe) +
                ", MCPE " + std::to_string(mcpe) + ", HCPE " + std::to_string(hcpe) + " hold), " + fmt(secs) + " s"};
}

// Designed inputs of excitation order `order` for the batch reactor (m = 2), in each mode.
DesignRequest rank_lemma_request(CompositionKind kind, Index order, std::uint64_t seed) {
    const Index m = 2, cap = (m + 1) * order - 2;
    switch (kind) {
        case CompositionKind::Mosaic: return DesignRequest::mosaic(m, order, {cap, cap, cap}, seed);
        case CompositionKind::Cumulative: return DesignRequest::cumulative(m, order, 3, cap + 1, seed);
        default: return DesignRequest::hybrid(m, order, 2, cap, {cap, cap}, seed);
    }
}

Outcome criterion_4() {
    const LtiSystem sys = builtin_system("batch_reactor");
    const Index n = sys.n(), m = sys.m();
    int total = 0, passed = 0;
    double worst = 1.0;
    for (Index l : {1, 3, 5})
        for (auto kind : kKinds)
            for (std::uint64_t s = 0; s < 50; ++s) {
                const DesignRequest req = rank_lemma_request(kind, l + n, s);
                const auto recs = ex::simulate_bundle(sys, design_signals(req).bundle, s + 1000);
                const RankConditionReport r = check_rank_condition(recs, l, req.mode, req.effective_weights());
                const Matrix mat = rank_condition_matrix(recs, l, req.mode, req.effective_weights());
                const Vector sv = Eigen::JacobiSVD<Matrix>(mat).singularValues();
                const Index need = n + m * l;
                const double ratio = sv.size() >= need ? sv(need - 1) / sv(0) : 0.0;
                const bool exact = sv.size() == need || (sv.size() > need && sv(need) <= 1e-9 * sv(0));
                worst = std::min(worst, ratio);
                ++total;
                if (r.verdict && r.rank_report.numeric_rank == need && ratio > 1e-9 && exact) ++passed;
            }
    return {passed == total, std::to_string(passed) + "/" + std::to_string(total) +
                                 " designs reach rank n+mL exactly; worst sigma_(n+mL)/sigma_1 = " + fmt(worst)};
}

Outcome criterion_5() {
    const LtiSystem sys = builtin_system("batch_reactor");
    const Index depth = 9;
    double worst = 0.0;
    int trials = 0, ok = 0;
    for (auto kind : kKinds)
        for (std::uint64_t s = 0; s < 10; ++s) {
            const DesignRequest req = ex::mpc_prior_request(kind, s);
            const auto recs = ex::simulate_bundle(sys, design_signals(req).bundle, s + 17);
            const BehavioralBasis b = build_behavioral_basis(recs, depth, req.mode, req.effective_weights(), sys);
            std::mt19937_64 rng(s * 31 + 5);
            for (int t = 0; t < 20; ++t) {
                const Matrix u = oracle::random_matrix(sys.m(), depth, rng);
                const Matrix x = oracle::rollout(sys.a, sys.b, oracle::random_matrix(sys.n(), 1, rng), u).leftCols(depth);
                const Representation r = represent_trajectory(b, x, u);
                worst = std::max(worst, r.residual);
                ++trials;
                if (r.residual <= 1e-8 && r.basis_rank == r.expected_rank) ++ok;
            }
        }
    return {ok == trials, std::to_string(ok) + "/" + std::to_string(trials) +
                              " fresh trajectories represented (200 per mode); worst residual " + fmt(worst)};
}

Outcome criterion_6() {
    const LtiSystem sys = builtin_system("batch_reactor");
    std::ostringstream d;
    bool ok = true;
    double worst = 0.0;
    for (auto kind : kKinds) {
        const DesignRequest req = ex::ls_request(kind, true, 1);
        Index total = 0;
        for (Index t : req.lengths) total += t;
        const auto recs = ex::simulate_bundle(sys, design_signals(req).bundle, 2);
        const LsResult r = ls_identify(recs, req.mode, req.effective_weights());
        const double err = (r.g_hat - sys.ab()).norm();
        worst = std::max(worst, err);
        ok = ok && err <= 1e-8;
        d << kind_name(kind) << " total length " << total << "; ";
    }
    d << "noise-free worst error " << fmt(worst) << "; ";
    const std::vector<double> sigmas = {0.0, 0.02, 0.04, 0.06, 0.08, 0.1};
    const ex::LsSweep sweep = ex::ls_noise_sweep(sigmas, 100, 0, 4);
    for (Index j = 0; j < sweep.mean_error.cols(); ++j) {
        bool mono = true;
        for (Index i = 1; i < sweep.mean_error.rows(); ++i)
            mono = mono && sweep.mean_error(i, j) >= sweep.mean_error(i - 1, j);
        ok = ok && mono;
        d << sweep.modes[j] << (mono ? " monotone " : " NOT monotone ") << fmt(sweep.mean_error(0, j)) << " -> "
          << fmt(sweep.mean_error(sweep.mean_error.rows() - 1, j)) << "; ";
    }
    return {ok, d.str()};
}

Outcome criterion_7() {
    int wins = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const ex::WeightingTrial t = ex::weighting_trial(s);
        if (t.error_compensated <= t.error_ones) ++wins;
    }
    return {wins >= 90, std::to_string(wins) + "/100 seeds with compensated error <= all-ones error"};
}

bool controllable_random_system(std::mt19937_64& rng, LtiSystem* out) {
    std::uniform_int_distribution<Index> dn(1, 5);
    const Index n = dn(rng);
    const Index m = std::uniform_int_distribution<Index>(1, std::min<Index>(n, 3))(rng);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix a(n, n), b(n, m);
    for (Index i = 0; i < a.size(); ++i) a(i) = g(rng) / std::sqrt(static_cast<double>(n)) * 1.3;
    for (Index i = 0; i < b.size(); ++i) b(i) = g(rng);
    *out = LtiSystem(a, b);
    return out->controllability_rank() == n;
}

Outcome criterion_8() {
    const LtiSystem reactor = builtin_system("batch_reactor");
    int ok = 0, total = 0;
    double worst = 0.0;
    for (auto kind : kKinds)
        for (std::uint64_t s = 0; s < 50; ++s) {
            const DesignRequest req = ex::ls_request(kind, true, s);
            const auto recs = ex::simulate_bundle(reactor, design_signals(req).bundle, s + 3);
            const GainSynthesisResult g = synthesize_gain(recs, req.mode, req.effective_weights(), 0.0, reactor);
            const double rho = g.success ? spectral_radius(reactor.a + reactor.b * g.k) : 2.0;
            worst = std::max(worst, rho);
            ++total;
            if (g.success && rho < 1.0) ++ok;
        }
    std::mt19937_64 rng(2024);
    int sys_ok = 0, sys_informative = 0, unstable = 0;
    for (int i = 0; i < 100; ++i) {
        LtiSystem sys;
        while (!controllable_random_system(rng, &sys)) {
        }
        if (spectral_radius(sys.a) >= 1.0) ++unstable;
        const Index l = sys.n() + 1, m = sys.m();
        const DesignRequest req = DesignRequest::cumulative(m, l, 3, (m + 1) * l - 1, rng());
        const auto recs = ex::simulate_bundle(sys, design_signals(req).bundle, rng());
        const GainSynthesisResult g = synthesize_gain(recs, req.mode, req.effective_weights(), 0.0, sys);
        if (!g.informative) continue;
        ++sys_informative;
        if (g.success && spectral_radius(sys.a + sys.b * g.k) < 1.0) ++sys_ok;
    }
    return {ok == total && sys_ok == sys_informative && sys_informative > 0,
            "batch reactor " + std::to_string(ok) + "/" + std::to_string(total) + " stabilized (worst radius " +
                fmt(worst) + "); random systems " + std::to_string(sys_ok) + "/" + std::to_string(sys_informative) +
                " informative stabilized (" + std::to_string(unstable) + " open-loop unstable)"};
}

Outcome criterion_9() {
    std::ostringstream d;
    bool ok = true;
    for (auto kind : kKinds) {
        const ex::MpcBenchmark b = ex::mpc_benchmark(kind, 0, 40);
        const auto& norms = b.run.state_norms;
        Index hit = -1;
        for (std::size_t k = 0; k < norms.size(); ++k)
            if (norms[k] < 1e-2 * norms.front()) {
                hit = static_cast<Index>(k);
                break;
            }
        const double worst_solve = *std::max_element(b.run.solve_seconds.begin(), b.run.solve_seconds.end());
        const bool mode_ok = hit >= 0 && hit <= 40 && worst_solve < 1.0;
        ok = ok && mode_ok;
        d << kind_name(kind) << " (" << b.basis_columns << " cols) below 1e-2 at k=" << hit << ", max QP "
          << fmt(worst_solve) << " s; ";
    }
    // The reference table times the MPC optimization; the ordering is judged on repeated timings
    // of one benchmark QP per mode, sampled round-robin (exact rank-sum test p < 0.01 and a > 10% median gap).
    const RankBenchReport solves =
        ex::timed_mpc_steps({CompositionKind::Cumulative, CompositionKind::Hybrid, CompositionKind::Mosaic}, 0,
                            RankBenchOptions{2, 7, 0.1});
    const OrderingVerdict v = solves.ordering({"cumulative", "hybrid", "mosaic"});
    ok = ok && v == OrderingVerdict::Confirmed;
    d << "QP solve ordering " << to_string(v) << " (";
    for (const auto& r : solves.rows) d << r.mode << " " << fmt(r.median_seconds * 1e3) << " ms ";
    // Rank-check timings on the matched data are reported for information only.
    const RankBenchReport rank = timed_rank_bench(matched_rank_scenarios(2, 9, 10, 30, 3, 0));
    d << "); rank-check timing ordering " << to_string(rank.ordering({"cumulative", "hybrid", "mosaic"})) << " (";
    for (const auto& r : rank.rows) d << r.mode << " " << fmt(r.median_seconds * 1e6) << " us ";
    d << ")";
    return {ok, d.str()};
}

Outcome criterion_10() {
    const ex::DistributedExperiment e = ex::distributed_experiment(5000, 0);
    const Matrix& err = e.run.errors;
    const Index last = err.rows() - 1;
    bool all_below = true;
    for (Index i = 0; i < err.cols(); ++i) all_below = all_below && err(last, i) < 1e-2 * err(0, i);
    std::vector<double> worst(err.rows());
    for (Index k = 0; k < err.rows(); ++k) worst[k] = err.row(k).maxCoeff();
    const LogLinearFit fit = fit_log_linear(worst);
    const AdaptiveRun fb = ex::feedback_only_identifier(5000, 0);
    const double plateau = fb.errors.back() / fb.errors.front();
    // Converged level: the 1e-2 relative threshold the agents must reach.
    const bool neg = plateau > 10.0 * 1e-2;
    return {all_below && fit.slope < 0 && fit.r_squared > 0.9 && neg,
            "worst final/initial " + fmt(worst.back() / worst.front()) + ", log fit slope " + fmt(fit.slope) +
                " R^2 " + fmt(fit.r_squared) + "; feedback-only single identifier plateau " + fmt(plateau) +
                " of initial"};
}

Outcome criterion_11() {
    const LtiSystem sys = builtin_system("voltage_converter");
    const Vector truth = vectorize_rows(sys.ab());
    int violations = 0;
    long steps_checked = 0;
    double worst_growth = -1e300;
    for (std::uint64_t s = 0; s < 50; ++s) {
        std::mt19937_64 rng(s + 77);
        const double alpha = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
        const double xi = std::exp(std::uniform_real_distribution<double>(-3.0, 3.0)(rng));
        const Trajectory in(oracle::random_matrix(1, 500, rng, -10, 10));
        const IdentifierState st0 = IdentifierState::make(oracle::random_matrix(6, 1, rng, -5, 5), {alpha, xi});
        const AdaptiveRun run = run_adaptive(sys, oracle::random_matrix(2, 1, rng), in, st0, 0.0, s);
        for (std::size_t k = 1; k < run.errors.size(); ++k) {
            const double growth = run.errors[k] - run.errors[k - 1];
            worst_growth = std::max(worst_growth, growth);
            ++steps_checked;
            if (growth > 1e-12) ++violations;
        }
    }
    return {violations == 0, std::to_string(steps_checked) + " steps over 50 seeds (random alpha in (0,2], xi > 0): " +
                                 std::to_string(violations) + " violations, largest increase " + fmt(worst_growth)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 design soundness", criterion_1},
        {"2 numeric example (C, rank, K_th)", criterion_2},
        {"3 implication suite", criterion_3},
        {"4 rank lemma (batch reactor)", criterion_4},
        {"5 extended fundamental lemma", criterion_5},
        {"6 least-squares identification", criterion_6},
        {"7 weighting effect", criterion_7},
        {"8 gain synthesis", criterion_8},
        {"9 MPC benchmark", criterion_9},
        {"10 distributed identification", criterion_10},
        {"11 identifier non-expansiveness", criterion_11},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("[%s] criterion %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
