#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpekit/hankel.hpp"
#include "cpekit/linalg.hpp"
#include "cpekit/trajectories.hpp"

namespace cpekit {

// How weights are chosen when judging a composite: the given weights, or random draws
// with magnitudes log-uniform in [1e-2, 1e2] and random signs.
struct AlphaPolicy {
    enum class Kind { Fixed, Randomized };
    Kind kind = Kind::Fixed;
    std::vector<double> weights;  // Fixed: empty means "use the bundle's weights"
    int trials = 32;
    std::uint64_t seed = 0;

    static AlphaPolicy fixed(std::vector<double> w = {}) { return {Kind::Fixed, std::move(w), 0, 0}; }
    static AlphaPolicy randomized(int trials = 32, std::uint64_t seed = 0) { return {Kind::Randomized, {}, trials, seed}; }
    std::string describe() const;
};

struct CpeReport {
    CompositionMode mode;
    Index order_L = 0;
    Index required_rank = 0;  // dim_m * L
    RankReport rank_report;   // randomized policy: the worst-conditioned trial
    bool verdict = false;
    std::vector<bool> per_member_pe;
    AlphaPolicy alpha_policy;
    int trials_run = 0;
    std::vector<double> weights_used;  // weights of the reported trial
    double conditioning_score = 0.0;   // sigma_{mL} / sigma_1
};

// rel_tol <= 0 selects default_rel_tol of the matrix being tested.
bool check_pe(const Trajectory& traj, Index depth, double rel_tol = 0.0);

CpeReport check_cpe(const TrajectoryBundle& bundle, Index depth, CompositionMode mode,
                    const AlphaPolicy& policy = AlphaPolicy::fixed(), double rel_tol = 0.0);

std::vector<double> draw_random_weights(std::size_t p, std::uint64_t seed);

struct RankConditionReport {
    CompositionMode mode;
    Index order_L = 0;
    Index expected_rank = 0;  // n + mL
    RankReport rank_report;
    bool verdict = false;
    double conditioning_score = 0.0;  // sigma_{n+mL} / sigma_1
};

// Per record i: [x_i(0..T_i-L) ; H_L(u_i(0..T_i-1))], composed across records in the given mode.
Matrix rank_condition_matrix(const std::vector<IoRecord>& records, Index depth, CompositionMode mode,
                             const std::vector<double>& weights);
RankConditionReport check_rank_condition(const std::vector<IoRecord>& records, Index depth, CompositionMode mode,
                                         const std::vector<double>& weights, double rel_tol = 0.0);

enum class Applicability { Holds, Fails, NotApplicable };
std::string to_string(Applicability a);

struct TransformationReport {
    Applicability mcpe_holds = Applicability::NotApplicable;
    Applicability ccpe_holds = Applicability::NotApplicable;
    Applicability hcpe_holds = Applicability::NotApplicable;
    // im(H_mos') meets leftker(1_p (x) I) trivially (cumulative from mosaic)
    Applicability kernel_condition_1 = Applicability::NotApplicable;
    // im(H_mos') meets leftker(blkdiag(1_pbar (x) I, I)) trivially (hybrid from mosaic)
    Applicability kernel_condition_2 = Applicability::NotApplicable;
    // im(H_hyb') meets leftker(1_(p-pbar+1) (x) I) trivially (cumulative from hybrid)
    Applicability kernel_condition_3 = Applicability::NotApplicable;
    Index intersection_dim_1 = -1, intersection_dim_2 = -1, intersection_dim_3 = -1;
    std::vector<std::string> violations;  // implications observed to fail; empty when consistent

    bool consistent() const { return violations.empty(); }
};

// Evaluates the three CPE conditions with the bundle's weights (hybrid uses the bundle's
// shared_prefix_count) and the kernel-intersection side conditions, then checks
// CCPE=>MCPE, CCPE=>HCPE, HCPE=>MCPE and the three conditional implications.
TransformationReport verify_transformations(const TrajectoryBundle& bundle, Index depth, double rel_tol = 0.0);

// lambda_min( sum_i a_i^2 H_L(z_i) H_L(z_i)' ) = sigma_min(H_mos)^2 (0 if H_mos is wide-deficient).
double excitation_lower_bound(const TrajectoryBundle& bundle, Index depth);

}  // namespace cpekit
