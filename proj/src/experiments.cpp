#include "cpekit/experiments.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "cpekit/errors.hpp"
#include "cpekit/io.hpp"

namespace cpekit::experiments {

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<IoRecord> simulate_bundle(const LtiSystem& sys, const TrajectoryBundle& inputs, std::uint64_t x0_seed,
                                      double noise_std, std::uint64_t noise_seed) {
    std::mt19937_64 rng(x0_seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<IoRecord> out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        Vector x0(sys.n());
        for (Index j = 0; j < x0.size(); ++j) x0(j) = unif(rng);
        out.push_back(simulate_lti(sys, x0, inputs.member(i), noise_std, noise_seed + 104729 * (i + 1)));
    }
    return out;
}

DesignRequest ls_request(CompositionKind kind, bool minimal, std::uint64_t seed) {
    constexpr Index m = 2, order = 5;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<Index> len(5, 13);
    auto draws = [&](std::size_t k) {
        std::vector<Index> v(k);
        for (auto& x : v) x = len(rng);
        return v;
    };
    switch (kind) {
        case CompositionKind::Mosaic:
            return DesignRequest::mosaic(m, order, minimal ? std::vector<Index>(10, 5) : draws(10), seed);
        case CompositionKind::Cumulative:
            return DesignRequest::cumulative(m, order, 10, minimal ? 14 : 25, seed);
        case CompositionKind::Hybrid:
            return minimal ? DesignRequest::hybrid(m, order, 3, 7, std::vector<Index>(7, 5), seed)
                           : DesignRequest::hybrid(m, order, 3, 10, draws(7), seed);
        default:
            throw InputError("ls_request: mode must be mosaic, cumulative or hybrid");
    }
}

namespace {

const CompositionKind kModes[] = {CompositionKind::Mosaic, CompositionKind::Cumulative, CompositionKind::Hybrid};

double ls_error(const LtiSystem& sys, const DesignRequest& req, std::uint64_t seed, double sigma) {
    const DesignResult d = design_signals(req);
    const auto records = simulate_bundle(sys, d.bundle, seed + 17, sigma, seed + 31);
    const LsResult ls = ls_identify(records, req.mode, d.bundle.weights());
    return (ls.g_hat - sys.ab()).norm();
}

}  // namespace

LsSweep ls_noise_sweep(const std::vector<double>& sigmas, int seeds, std::uint64_t base_seed, int jobs) {
    if (seeds < 1) throw InputError("ls_noise_sweep: need at least one seed");
    const LtiSystem sys = builtin_system("batch_reactor");
    LsSweep out;
    out.sigmas = sigmas;
    out.seeds = seeds;
    for (auto k : kModes) out.modes.push_back(CompositionMode{k, 0}.kind_name());
    const auto ns = static_cast<Index>(sigmas.size());
    // per seed: sigmas x modes
    std::vector<Matrix> per_seed(static_cast<std::size_t>(seeds), Matrix::Zero(ns, 3));
    parallel_for(static_cast<std::size_t>(seeds), jobs, [&](std::size_t s) {
        const std::uint64_t seed = base_seed + s;
        for (Index j = 0; j < 3; ++j) {
            const DesignRequest req = ls_request(kModes[j], false, seed);
            for (Index i = 0; i < ns; ++i) per_seed[s](i, j) = ls_error(sys, req, seed, sigmas[static_cast<std::size_t>(i)]);
        }
    });
    out.mean_error = Matrix::Zero(ns, 3);
    for (const auto& e : per_seed) out.mean_error += e;
    out.mean_error /= static_cast<double>(seeds);
    return out;
}

std::string ls_sweep_to_csv(const LsSweep& sweep) {
    std::ostringstream os;
    os << "sigma_w";
    for (const auto& m : sweep.modes) os << ",mean_error_" << m;
    os << '\n';
    for (Index i = 0; i < sweep.mean_error.rows(); ++i) {
        os << format_double(sweep.sigmas[static_cast<std::size_t>(i)]);
        for (Index j = 0; j < sweep.mean_error.cols(); ++j) os << ',' << format_double(sweep.mean_error(i, j));
        os << '\n';
    }
    return os.str();
}

WeightingTrial weighting_trial(std::uint64_t seed, double sigma, double scale) {
    const LtiSystem sys = builtin_system("batch_reactor");
    const DesignRequest req = ls_request(CompositionKind::Mosaic, false, seed);
    const DesignResult d = design_signals(req);
    auto records = simulate_bundle(sys, d.bundle, seed + 17, sigma, seed + 31);
    records[0] = IoRecord(Trajectory(scale * records[0].u()), Trajectory(scale * records[0].states().samples()));
    std::vector<double> ones(records.size(), 1.0), comp = ones;
    comp[0] = 1.0 / scale;
    WeightingTrial t;
    t.error_ones = (ls_identify(records, req.mode, ones).g_hat - sys.ab()).norm();
    t.error_compensated = (ls_identify(records, req.mode, comp).g_hat - sys.ab()).norm();
    return t;
}

Matrix rotation_gain(double omega) {
    // A + BK = [[1 + 0.0125 k1, -0.05 + 0.0125 k2], [0.0004, 0.9998]] with trace 2cos(omega), det 1.
    const double k1 = (2.0 * std::cos(omega) - 1.9998) / 0.0125;
    const double a11 = 1.0 + 0.0125 * k1;
    const double k2 = ((a11 * 0.9998 - 1.0) / 0.0004 + 0.05) / 0.0125;
    Matrix k(1, 2);
    k << k1, k2;
    return k;
}

DistributedExperiment distributed_experiment(Index steps, std::uint64_t seed, double noise_std) {
    const LtiSystem sys = builtin_system("voltage_converter");
    DistributedExperiment ex;
    ex.omegas = {0.002, 0.004, 0.006, 0.008, 0.010};
    ex.topology = GraphTopology::ring(5);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<Vector> x0s;
    std::vector<InputPolicy> policies;
    for (double w : ex.omegas) {
        Vector x0(2);
        x0 << unif(rng), unif(rng);
        x0s.push_back(x0);
        const Matrix k = rotation_gain(w);
        policies.push_back([k](Index, const Vector& x) { return Vector(k * x); });
    }
    const Index dim = sys.n() * (sys.n() + sys.m());
    const DistributedState st =
        DistributedState::make(std::vector<Vector>(5, Vector::Zero(dim)), DistributedGains{1.0, 0.25, 2.0}, ex.topology);
    ex.run = run_distributed(sys, x0s, policies, st, noise_std, steps, seed + 1);
    return ex;
}

AdaptiveRun feedback_only_identifier(Index steps, std::uint64_t seed) {
    const LtiSystem sys = builtin_system("voltage_converter");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector x0(2);
    x0 << unif(rng), unif(rng);
    const Matrix k = rotation_gain(0.006);
    const IdentifierState st = IdentifierState::make(Vector::Zero(6), IdentifierGains{1.0, 2.0});
    return run_adaptive(sys, x0, [k](Index, const Vector& x) { return Vector(k * x); }, st, 0.0, steps, seed + 1);
}

AdaptiveRun random_input_identifier(Index steps, std::uint64_t seed, double amplitude) {
    const LtiSystem sys = builtin_system("voltage_converter");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, amplitude);
    Matrix u(1, steps);
    for (Index k = 0; k < steps; ++k) u(0, k) = normal(rng);
    Vector x0 = Vector::Zero(2);
    const IdentifierState st = IdentifierState::make(Vector::Zero(6), IdentifierGains{1.0, 2.0});
    return run_adaptive(sys, x0, Trajectory(u), st, 0.0, seed + 1);
}

DesignRequest mpc_prior_request(CompositionKind kind, std::uint64_t seed) {
    switch (kind) {
        case CompositionKind::Cumulative: return DesignRequest::cumulative(2, 9, 10, 30, seed);
        case CompositionKind::Mosaic: return DesignRequest::mosaic(2, 11, std::vector<Index>(10, 30), seed);
        case CompositionKind::Hybrid: return DesignRequest::hybrid(2, 11, 3, 30, std::vector<Index>(7, 30), seed);
        default: throw InputError("mpc_prior_request: mode must be mosaic, cumulative or hybrid");
    }
}

MpcBenchmarkSetup mpc_benchmark_setup(CompositionKind kind, std::uint64_t seed) {
    MpcBenchmarkSetup st;
    st.sys = builtin_system("batch_reactor");
    const Index n = st.sys.n(), m = st.sys.m();
    const DesignRequest req = mpc_prior_request(kind, seed);
    const DesignResult d = design_signals(req);
    const auto records = simulate_bundle(st.sys, d.bundle, seed + 17);
    MpcProblem& pr = st.problem;
    pr.horizon = 5;
    pr.q_cost = 3.0 * Matrix::Identity(n, n);
    pr.r_cost = 1e-2 * Matrix::Identity(m, m);
    pr.setpoint = Vector::Zero(n);
    pr.basis = build_behavioral_basis(records, pr.horizon + n, req.mode, d.bundle.weights(), st.sys);
    std::mt19937_64 rng(seed + 23);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    st.x0.resize(n);
    for (Index i = 0; i < n; ++i) st.x0(i) = unif(rng);
    st.warmup.resize(m, n);
    for (Index i = 0; i < st.warmup.size(); ++i) st.warmup(i) = unif(rng);
    // History after the warm-up: u(0..n-1) and the states x(0..n-1) they produce.
    pr.history_u = st.warmup;
    pr.history_x.resize(n, n);
    pr.history_x.col(0) = st.x0;
    for (Index k = 0; k + 1 < n; ++k)
        pr.history_x.col(k + 1) = st.sys.a * pr.history_x.col(k) + st.sys.b * st.warmup.col(k);
    return st;
}

MpcBenchmark mpc_benchmark(CompositionKind kind, std::uint64_t seed, Index steps) {
    const MpcBenchmarkSetup st = mpc_benchmark_setup(kind, seed);
    MpcBenchmark b;
    b.basis_columns = st.problem.basis.cols();
    b.run = mpc_run(st.sys, st.problem, st.x0, st.warmup, steps);
    return b;
}

RankBenchReport timed_mpc_steps(const std::vector<CompositionKind>& kinds, std::uint64_t seed,
                                const RankBenchOptions& opts) {
    std::vector<MpcBenchmarkSetup> setups;
    for (CompositionKind kind : kinds) setups.push_back(mpc_benchmark_setup(kind, seed));
    volatile double sink = 0.0;
    std::vector<TimedOperation> ops;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const MpcProblem& problem = setups[i].problem;
        ops.push_back({CompositionMode{kinds[i], 0}.kind_name(), problem.basis.matrix.rows(), problem.basis.cols(),
                       [&sink, &problem] { sink = sink + mpc_step(problem).cost; }});
    }
    return time_operations(ops, opts);
}

RankBenchRow timed_mpc_step(CompositionKind kind, std::uint64_t seed, const RankBenchOptions& opts) {
    return timed_mpc_steps({kind}, seed, opts).rows.front();
}

DesignRequest random_design_request(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x2545F4914F6CDD1DULL + 7);
    auto pick = [&](Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); };
    const Index m = pick(1, 3), l = pick(2, 6);
    const auto p = static_cast<std::size_t>(pick(2, 8));
    const Index cap = (m + 1) * l - 2;
    std::vector<double> w(p);
    for (auto& x : w)
        x = (rng() % 2 ? 1.0 : -1.0) * std::exp(std::uniform_real_distribution<double>(-1.0, 1.0)(rng));
    DesignRequest req;
    switch (seed % 3) {
        case 0: {
            // members in [L, cap]; raise short members until the bound holds (p*cap always suffices)
            std::vector<Index> ls(p);
            for (auto& t : ls) t = pick(l, cap);
            const Index need = minimal_lengths(CompositionMode::mosaic(), m, l, p).required;
            Index sum = 0;
            for (Index t : ls) sum += t;
            for (std::size_t i = 0; sum < need; i = (i + 1) % p)
                if (ls[i] < cap) {
                    ++ls[i];
                    ++sum;
                }
            req = DesignRequest::mosaic(m, l, ls, seed);
            break;
        }
        case 1:
            req = DesignRequest::cumulative(m, l, p, (m + 1) * l - 1 + pick(0, 9), seed);
            break;
        default: {
            const auto pb = static_cast<std::size_t>(pick(1, static_cast<Index>(p) - 1));
            std::vector<Index> tails(p - pb);
            for (auto& t : tails) t = pick(l, cap);
            const bool big = pb >= 2 && rng() % 2;
            Index t0 = big ? (m + 1) * l - 1 + pick(0, 5) : pick(l, cap);
            req = DesignRequest::hybrid(m, l, pb, t0, tails, seed);
            // lengthen tails (or, when all tails are at the cap, the prefix) until the bound holds
            while (!evaluate_lengths(req.mode, m, l, req.lengths).satisfied) {
                bool grown = false;
                for (std::size_t i = pb; i < p && !grown; ++i)
                    if (req.lengths[i] < cap) {
                        ++req.lengths[i];
                        grown = true;
                    }
                if (!grown) {
                    const Index t = req.lengths[0] < cap || pb >= 2 ? req.lengths[0] + 1 : req.lengths[0];
                    if (t == req.lengths[0]) break;
                    for (std::size_t i = 0; i < pb; ++i) req.lengths[i] = t;
                }
            }
            break;
        }
    }
    req.weights = w;
    return req;
}

TrajectoryBundle random_equal_length_bundle(std::uint64_t seed, Index* order_L) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 11);
    auto pick = [&](Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); };
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index m = pick(1, 3), l = pick(1, 4);
    const auto p = static_cast<std::size_t>(pick(2, 6));
    const Index t = pick(l, (m + 1) * l + 2);
    std::vector<Trajectory> members;
    std::vector<double> w(p);
    for (std::size_t i = 0; i < p; ++i) {
        Matrix z(m, t);
        switch (pick(0, 3)) {
            case 0: {  // constant
                Vector c(m);
                for (Index r = 0; r < m; ++r) c(r) = normal(rng);
                z = c.replicate(1, t);
                break;
            }
            case 1: {  // sparse impulses
                z.setZero();
                for (Index k = 0; k < t; ++k)
                    if (rng() % 3 == 0) z(pick(0, m - 1), k) = normal(rng);
                break;
            }
            default:
                for (Index k = 0; k < z.size(); ++k) z(k) = normal(rng);
        }
        members.emplace_back(z);
        w[i] = (rng() % 2 ? 1.0 : -1.0) * std::exp(std::uniform_real_distribution<double>(-1.0, 1.0)(rng));
    }
    if (order_L) *order_L = l;
    return TrajectoryBundle(members, w, static_cast<std::size_t>(pick(1, static_cast<Index>(p) - 1)));
}

}  // namespace cpekit::experiments
