#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cpekit/bench.hpp"
#include "cpekit/control.hpp"
#include "cpekit/design.hpp"
#include "cpekit/identification.hpp"
#include "cpekit/mpc.hpp"

// Reference scenarios on the built-in systems, shared by the CLI `repro` command and the
// acceptance suite.
namespace cpekit::experiments {

// Runs body(i) for i in [0, count) on up to `jobs` threads (jobs <= 1: sequential).
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

// Simulates every member as an input sequence from x0 ~ U[-1,1]^n (drawn from x0_seed).
std::vector<IoRecord> simulate_bundle(const LtiSystem& sys, const TrajectoryBundle& inputs, std::uint64_t x0_seed,
                                      double noise_std = 0.0, std::uint64_t noise_seed = 0);

// Batch reactor least-squares data, order L = n+1 = 5, p = 10.
// Minimal: mosaic 10 x 5 (sum 50), cumulative T0 = 14, hybrid(3) T0 = 7 with 7 tails of 5 (total 42).
// Reference-style: mosaic lengths ~ U{5..13}, cumulative T0 = 25, hybrid(3) T0 = 10 with tails ~ U{5..13}.
DesignRequest ls_request(CompositionKind kind, bool minimal, std::uint64_t seed);

struct LsSweep {
    std::vector<double> sigmas;
    std::vector<std::string> modes;
    Matrix mean_error;  // sigmas x modes, mean ||G_hat - [A B]||_F over seeds
    int seeds = 0;
};

// Common random numbers: seed s uses the same design, initial states and noise directions for
// every sigma, so only the noise scale changes along a row.
LsSweep ls_noise_sweep(const std::vector<double>& sigmas, int seeds, std::uint64_t base_seed, int jobs = 1);
std::string ls_sweep_to_csv(const LsSweep& sweep);

struct WeightingTrial {
    double error_compensated = 0.0;  // alpha_1 = 1e-3, others 1
    double error_ones = 0.0;         // all alpha = 1
};

// Mosaic LS on reference-style data with sigma_w = 0.05 where record 1 (inputs and states) is
// scaled by 1e3 after recording.
WeightingTrial weighting_trial(std::uint64_t seed, double sigma = 0.05, double scale = 1e3);

// Static feedback u = Kx that turns the voltage converter into a rotation by omega rad/step
// (closed-loop eigenvalues exp(+-i omega)): marginally stable, never PE on its own.
Matrix rotation_gain(double omega);

struct DistributedExperiment {
    DistributedRun run;
    std::vector<double> omegas;
    GraphTopology topology;
};

// Five agents on a ring, alpha = 1, xi = 2, gamma = 0.25, theta(0) = 0, rotation feedback
// omega_i in {0.002, ..., 0.010}, x_i(0) ~ U[-1,1]^2.
DistributedExperiment distributed_experiment(Index steps, std::uint64_t seed, double noise_std = 0.0);

// Single adaptive identifier under pure rotation feedback (omega = 0.006): plateaus.
AdaptiveRun feedback_only_identifier(Index steps, std::uint64_t seed);

// Single adaptive identifier with i.i.d. N(0, amplitude^2) input: converges.
AdaptiveRun random_input_identifier(Index steps, std::uint64_t seed, double amplitude = 10.0);

// Prior data for the batch-reactor MPC benchmark: 10 designed trajectories of 30 steps.
// cumulative order 9, mosaic and hybrid(3) order 11.
DesignRequest mpc_prior_request(CompositionKind kind, std::uint64_t seed);

struct MpcBenchmark {
    MpcRun run;
    Index basis_columns = 0;
};

struct MpcBenchmarkSetup {
    LtiSystem sys;
    MpcProblem problem;  // history filled with the warm-up segment
    Vector x0;
    Matrix warmup;
};

// N = 5, Q = 3I, R = 1e-2 I, x* = 0, x(0) and the warm-up inputs ~ U[-1,1].
MpcBenchmarkSetup mpc_benchmark_setup(CompositionKind kind, std::uint64_t seed);
MpcBenchmark mpc_benchmark(CompositionKind kind, std::uint64_t seed, Index steps = 40);

// Repeated timing of the first receding-horizon QP of the benchmark (the optimization whose
// running time the reference table compares across modes).
// Several modes are sampled round-robin (time_operations), so their timings are comparable.
RankBenchReport timed_mpc_steps(const std::vector<CompositionKind>& kinds, std::uint64_t seed,
                                const RankBenchOptions& opts = {});
RankBenchRow timed_mpc_step(CompositionKind kind, std::uint64_t seed, const RankBenchOptions& opts = {});

// Valid randomized design request: m in {1,2,3}, L in {2..6}, p in {2..8}, mode cycling
// mosaic / cumulative / hybrid by seed, random nonzero weights, lengths meeting the bound.
DesignRequest random_design_request(std::uint64_t seed);

// Randomized equal-length bundle for implication checks: m in {1,2,3}, L in {1..4},
// p in {2..6}, T near the excitation thresholds, some members of low complexity, random
// shared prefix count for the hybrid condition.
TrajectoryBundle random_equal_length_bundle(std::uint64_t seed, Index* order_L);

}  // namespace cpekit::experiments
