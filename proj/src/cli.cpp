#include "cpekit/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "cpekit/bench.hpp"
#include "cpekit/control.hpp"
#include "cpekit/design.hpp"
#include "cpekit/errors.hpp"
#include "cpekit/experiments.hpp"
#include "cpekit/identification.hpp"
#include "cpekit/informativity.hpp"
#include "cpekit/io.hpp"
#include "cpekit/json_io.hpp"
#include "cpekit/mpc.hpp"

namespace cpekit::cli {

namespace fs = std::filesystem;

namespace {

std::uint64_t default_seed() {
    const char* env = std::getenv("CPEKIT_SEED");
    if (!env || !*env) return 0;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw InputError(std::string("CPEKIT_SEED must be a nonnegative integer, got '") + env + "'");
    }
}

// Writes <out>/<name>.json and <out>/<name>.txt; text is also echoed to `out`.
struct Artifacts {
    fs::path dir;
    std::ostream* echo = nullptr;

    void emit(const std::string& name, const Json& json, const std::string& text) const {
        fs::create_directories(dir);
        write_file_atomic(dir / (name + ".json"), json.dump(2) + "\n");
        write_file_atomic(dir / (name + ".txt"), text);
        if (echo) *echo << text;
    }
    void file(const std::string& name, const std::string& content) const {
        fs::create_directories(dir);
        write_file_atomic(dir / name, content);
    }
};

std::string fmt(double v) { return format_double(v); }

std::string matrix_text(const Matrix& m) {
    std::ostringstream os;
    for (Index i = 0; i < m.rows(); ++i) {
        os << "  ";
        for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << fmt(m(i, j));
        os << "\n";
    }
    return os.str();
}

LtiSystem load_system(const std::string& name, const std::string& a_path, const std::string& b_path) {
    if (!a_path.empty() || !b_path.empty()) {
        if (a_path.empty() || b_path.empty()) throw InputError("give both --a-matrix and --b-matrix");
        return LtiSystem(matrix_from_csv(read_file(a_path)), matrix_from_csv(read_file(b_path)));
    }
    return builtin_system(name);
}

struct LoadedRecords {
    std::vector<IoRecord> records;
    std::vector<double> weights;
    std::size_t shared_prefix_count = 0;
};

// Each path is an IoRecord CSV or a records manifest {"shared_prefix_count", "records":[{"file","weight"}]}.
LoadedRecords load_records(const std::vector<std::string>& paths, const std::vector<double>& weights_override) {
    LoadedRecords out;
    for (const auto& p : paths) {
        const fs::path path(p);
        if (path.extension() == ".json") {
            Json j;
            try {
                j = Json::parse(read_file(path));
            } catch (const Json::exception& e) {
                throw InputError("records manifest " + p + ": " + e.what());
            }
            if (!j.contains("records") || !j["records"].is_array())
                throw InputError("records manifest " + p + " has no 'records' array");
            out.shared_prefix_count = j.value("shared_prefix_count", std::size_t{0});
            for (const auto& r : j["records"]) {
                out.records.push_back(io_record_from_csv(read_file(path.parent_path() / r.at("file").get<std::string>())));
                out.weights.push_back(r.value("weight", 1.0));
            }
        } else {
            out.records.push_back(io_record_from_csv(read_file(path)));
            out.weights.push_back(1.0);
        }
    }
    if (out.records.empty()) throw InputError("no records given");
    if (!weights_override.empty()) {
        if (weights_override.size() != out.records.size())
            throw InputError("--weights needs one value per record (" + std::to_string(out.records.size()) + ")");
        out.weights = weights_override;
    }
    return out;
}

CompositionMode resolve_mode(const std::string& text, std::size_t prefix) {
    CompositionMode mode = CompositionMode::parse(text, prefix);
    return mode;
}

Vector parse_vector(const std::vector<double>& v) {
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = v[i];
    return out;
}

std::string records_manifest(const std::vector<std::string>& files, const std::vector<double>& weights,
                             std::size_t prefix) {
    Json rec = Json::array();
    for (std::size_t i = 0; i < files.size(); ++i) rec.push_back({{"file", files[i]}, {"weight", weights[i]}});
    return Json{{"shared_prefix_count", prefix}, {"records", rec}}.dump(2) + "\n";
}

std::string error_trace_csv(const Matrix& errors) {
    std::ostringstream os;
    os << "k";
    for (Index j = 0; j < errors.cols(); ++j) os << ",err_" << (j + 1);
    os << "\n";
    for (Index k = 0; k < errors.rows(); ++k) {
        os << k;
        for (Index j = 0; j < errors.cols(); ++j) os << ',' << fmt(errors(k, j));
        os << "\n";
    }
    return os.str();
}

Matrix column_matrix(const std::vector<double>& v) {
    Matrix m(static_cast<Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Index>(i), 0) = v[i];
    return m;
}

std::vector<double> row_max(const Matrix& m) {
    std::vector<double> out;
    for (Index k = 0; k < m.rows(); ++k) out.push_back(m.row(k).maxCoeff());
    return out;
}

// ---------------------------------------------------------------- subcommand state

struct Common {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
};

struct DesignArgs {
    std::string mode = "mosaic";
    std::size_t prefix = 0;
    Index m = 1, order = 1;
    std::vector<Index> lengths;
    std::vector<double> weights;
};

struct CheckArgs {
    std::string bundle, mode = "mosaic", alpha = "fixed";
    std::size_t prefix = 0;
    Index order = 1;
    int trials = 32;
    double rel_tol = 0.0;
    bool transformations = false;
};

struct SimulateArgs {
    std::string system = "batch_reactor", a_path, b_path, inputs;
    std::vector<double> x0;
    double noise = 0.0;
};

struct IdentifyArgs {
    std::vector<std::string> records;
    std::string mode = "mosaic", system, a_path, b_path, input_csv, topology = "ring";
    std::size_t prefix = 0;
    std::vector<double> weights, omegas{0.002, 0.004, 0.006, 0.008, 0.010};
    double rel_tol = 0.0, alpha = 1.0, xi = 2.0, gamma = 0.25, noise = 0.0, amplitude = 10.0,
           agent_amplitude = 0.0;
    Index steps = 2000;
    std::size_t agents = 5;
    Index window = 0;
};

struct GainArgs {
    std::vector<std::string> records;
    std::string mode = "mosaic", system, a_path, b_path;
    std::size_t prefix = 0;
    std::vector<double> weights;
    double rel_tol = 0.0, margin = 1e-6;
};

struct MpcArgs {
    std::vector<std::string> records;
    std::string mode = "mosaic", system = "batch_reactor", a_path, b_path;
    std::size_t prefix = 0;
    std::vector<double> weights, x0, warmup, u_min, u_max;
    Index horizon = 5, steps = 40;
    double q_scale = 3.0, r_scale = 1e-2, regularization = 0.0, noise = 0.0;
};

struct BenchArgs {
    Index m = 2, order = 5, depth = 9, length = 30;
    std::vector<Index> lengths, trial_columns;
    std::size_t trajectories = 10, prefix = 3;
    int runs = 7, warmups = 2;
};

struct ReproArgs {
    std::string name;
    double noise = 0.1, noise_step = 0.02;
    int seeds = 100, trials = 1000;
    Index steps = 0;
};

// ---------------------------------------------------------------- commands

int cmd_design(const DesignArgs& a, const Common& c, const Artifacts& art) {
    DesignRequest req;
    req.dim_m = a.m;
    req.order_L = a.order;
    req.mode = resolve_mode(a.mode, a.prefix);
    req.lengths = a.lengths;
    req.weights = a.weights;
    req.seed = c.seed;
    if (req.lengths.empty()) throw InputError("design: --lengths is required");
    const DesignResult d = design_signals(req);
    const DesignVerification v = verify_design(d.bundle, req);
    save_bundle(d.bundle, art.dir);
    const LengthBound bound = evaluate_lengths(req.mode, req.dim_m, req.order_L, req.lengths);
    Json j = {{"mode", req.mode.name()},
              {"m", req.dim_m},
              {"L", req.order_L},
              {"lengths", req.lengths},
              {"weights", req.effective_weights()},
              {"seed", req.seed},
              {"length_bound", to_json(bound)},
              {"ledger", to_json(d.ledger)},
              {"verification", {{"ok", v.ok}, {"report", to_json(v.report)}}},
              {"manifest", "manifest.json"}};
    std::ostringstream t;
    t << "design " << req.mode.name() << " m=" << req.dim_m << " L=" << req.order_L << " p=" << req.p() << "\n"
      << "length bound: " << bound.inequality << " (achieved " << bound.achieved << ")\n"
      << "composite rank " << v.report.rank_report.numeric_rank << " / " << v.report.required_rank
      << ", members PE: " << std::count(v.report.per_member_pe.begin(), v.report.per_member_pe.end(), true)
      << ", verified: " << (v.ok ? "yes" : "no") << "\n"
      << "bundle written to " << (art.dir / "manifest.json").string() << "\n";
    art.emit("design", j, t.str());
    return v.ok ? kExitOk : kExitComputation;
}

int cmd_check(const CheckArgs& a, const Common& c, const Artifacts& art) {
    TrajectoryBundle bundle = load_bundle(a.bundle);
    CompositionMode mode = resolve_mode(a.mode, a.prefix);
    if (mode.kind == CompositionKind::Hybrid && mode.prefix_count == 0) mode.prefix_count = bundle.shared_prefix_count();
    if (mode.kind == CompositionKind::Hybrid) bundle = bundle.with_shared_prefix(mode.prefix_count);
    AlphaPolicy policy;
    if (a.alpha == "fixed")
        policy = AlphaPolicy::fixed();
    else if (a.alpha == "randomized")
        policy = AlphaPolicy::randomized(a.trials, c.seed);
    else
        throw InputError("--alpha must be 'fixed' or 'randomized'");
    const CpeReport r = check_cpe(bundle, a.order, mode, policy, a.rel_tol);
    Json j = to_json(r);
    std::ostringstream t;
    t << "CPE check " << mode.name() << " L=" << a.order << ": rank " << r.rank_report.numeric_rank << " / "
      << r.required_rank << " -> " << (r.verdict ? "collectively persistently exciting" : "not exciting") << "\n"
      << "conditioning sigma_mL/sigma_1 = " << fmt(r.conditioning_score) << " (" << policy.describe() << ")\n";
    if (a.transformations) {
        const TransformationReport tr = verify_transformations(bundle, a.order, a.rel_tol);
        j["transformations"] = to_json(tr);
        t << "implications: " << (tr.consistent() ? "consistent" : "VIOLATED") << "\n";
    }
    art.emit("check", j, t.str());
    return kExitOk;
}

int cmd_simulate(const SimulateArgs& a, const Common& c, const Artifacts& art) {
    const LtiSystem sys = load_system(a.system, a.a_path, a.b_path);
    const TrajectoryBundle inputs = load_bundle(a.inputs);
    if (inputs.dim() != sys.m()) throw InputError("simulate: input dimension does not match the system");
    std::vector<IoRecord> records;
    if (!a.x0.empty()) {
        if (static_cast<Index>(a.x0.size()) != sys.n()) throw InputError("simulate: --x0 needs n values");
        for (std::size_t i = 0; i < inputs.size(); ++i)
            records.push_back(simulate_lti(sys, parse_vector(a.x0), inputs.member(i), a.noise, c.seed + 104729 * (i + 1)));
    } else {
        records = experiments::simulate_bundle(sys, inputs, c.seed + 17, a.noise, c.seed + 31);
    }
    std::vector<std::string> files;
    Json per = Json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        files.push_back("record_" + std::to_string(i + 1) + ".csv");
        art.file(files.back(), io_record_to_csv(records[i]));
        per.push_back({{"file", files.back()}, {"length", records[i].length()},
                       {"dynamics_residual", records[i].dynamics_residual(sys)}});
    }
    art.file("records.json", records_manifest(files, inputs.weights(), inputs.shared_prefix_count()));
    Json j = {{"records", per}, {"noise_std", a.noise}, {"seed", c.seed}, {"manifest", "records.json"}};
    std::ostringstream t;
    t << "simulated " << records.size() << " records (n=" << sys.n() << ", m=" << sys.m() << ", noise " << fmt(a.noise)
      << ")\n";
    art.emit("simulate", j, t.str());
    return kExitOk;
}

int cmd_identify_ls(const IdentifyArgs& a, const Artifacts& art) {
    const LoadedRecords recs = load_records(a.records, a.weights);
    CompositionMode mode = resolve_mode(a.mode, a.prefix ? a.prefix : recs.shared_prefix_count);
    const LsResult r = ls_identify(recs.records, mode, recs.weights, a.rel_tol);
    Json j = to_json(r);
    std::ostringstream t;
    t << "least-squares identification (" << mode.name() << "), unique: " << (r.unique ? "yes" : "no")
      << ", residual " << fmt(r.residual) << "\n[A B] estimate:\n" << matrix_text(r.g_hat);
    if (!r.warning.empty()) t << "warning: " << r.warning << "\n";
    if (!a.system.empty() || !a.a_path.empty()) {
        const LtiSystem sys = load_system(a.system, a.a_path, a.b_path);
        const double e = (r.g_hat - sys.ab()).norm();
        j["error_fro"] = e;
        t << "||G_hat - [A B]||_F = " << fmt(e) << "\n";
    }
    art.file("G_hat.csv", matrix_to_csv(r.g_hat));
    art.emit("identify_ls", j, t.str());
    return kExitOk;
}

int cmd_identify_adaptive(const IdentifyArgs& a, const Common& c, const Artifacts& art) {
    const LtiSystem sys = load_system(a.system.empty() ? "voltage_converter" : a.system, a.a_path, a.b_path);
    const Index n = sys.n(), m = sys.m();
    Matrix u;
    if (!a.input_csv.empty()) {
        u = load_bundle(a.input_csv).member(0).samples();
        if (u.rows() != m) throw InputError("identify adaptive: input dimension mismatch");
    } else {
        if (a.steps < 1) throw InputError("identify adaptive: --steps must be positive");
        std::mt19937_64 rng(c.seed);
        std::normal_distribution<double> normal(0.0, a.amplitude);
        u.resize(m, a.steps);
        for (Index k = 0; k < u.size(); ++k) u(k) = normal(rng);
    }
    const IdentifierState st = IdentifierState::make(Vector::Zero(n * (n + m)), {a.alpha, a.xi});
    const AdaptiveRun run = run_adaptive(sys, Vector::Zero(n), Trajectory(u), st, a.noise, c.seed + 1);
    const LogLinearFit fit = fit_log_linear(run.errors);
    const Index window = a.window > 0 ? a.window : 10 * (n + 1);
    const ConvergenceReport cr = check_convergence_conditions(a.alpha, a.xi, std::nullopt, std::nullopt,
                                                              TrajectoryBundle({Trajectory(u)}), n, window);
    art.file("errors.csv", error_trace_csv(column_matrix(run.errors)));
    Json j = {{"final_error", run.errors.back()},
              {"initial_error", run.errors.front()},
              {"theta", vector_to_json(run.final_state.theta)},
              {"fit", to_json(fit)},
              {"conditions", to_json(cr)},
              {"trace", "errors.csv"}};
    std::ostringstream t;
    t << "adaptive identifier: error " << fmt(run.errors.front()) << " -> " << fmt(run.errors.back()) << " after "
      << run.errors.size() - 1 << " steps; log-linear slope " << fmt(fit.slope) << " (R^2 " << fmt(fit.r_squared)
      << ")\n";
    art.emit("identify_adaptive", j, t.str());
    return kExitOk;
}

GraphTopology make_topology(const std::string& name, std::size_t agents) {
    if (name == "ring") return GraphTopology::ring(agents);
    if (name == "path") return GraphTopology::path(agents);
    if (name == "complete") return GraphTopology::complete(agents);
    if (name == "path-chord") {
        if (agents != 5) throw InputError("path-chord topology is defined for 5 agents");
        return GraphTopology::path_with_chord();
    }
    throw InputError("unknown topology '" + name + "' (ring, path, complete, path-chord)");
}

int cmd_identify_distributed(const IdentifyArgs& a, const Common& c, const Artifacts& art) {
    const std::string sys_name = a.system.empty() ? "voltage_converter" : a.system;
    const LtiSystem sys = load_system(sys_name, a.a_path, a.b_path);
    const Index n = sys.n(), m = sys.m();
    const Index steps = a.steps;
    const bool rotation = sys_name == "voltage_converter" && a.a_path.empty() && a.agent_amplitude <= 0.0;
    std::size_t agents = rotation ? a.omegas.size() : a.agents;
    const GraphTopology topo = make_topology(a.topology, agents);
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<Vector> x0s;
    std::vector<InputPolicy> policies;
    std::vector<Trajectory> input_traces;
    for (std::size_t i = 0; i < agents; ++i) {
        Vector x0(n);
        for (Index j = 0; j < n; ++j) x0(j) = unif(rng);
        x0s.push_back(x0);
        if (rotation) {
            const Matrix k = experiments::rotation_gain(a.omegas[i]);
            policies.push_back([k](Index, const Vector& x) { return Vector(k * x); });
        } else {
            Matrix u(m, steps);
            std::normal_distribution<double> normal(0.0, a.agent_amplitude > 0.0 ? a.agent_amplitude : 1.0);
            for (Index k = 0; k < u.size(); ++k) u(k) = normal(rng);
            policies.push_back([u](Index k, const Vector&) { return Vector(u.col(k)); });
        }
    }
    const DistributedState st = DistributedState::make(std::vector<Vector>(agents, Vector::Zero(n * (n + m))),
                                                       {a.alpha, a.gamma, a.xi}, topo);
    const DistributedRun run = run_distributed(sys, x0s, policies, st, a.noise, steps, c.seed + 1);
    for (const auto& r : run.records) input_traces.push_back(r.inputs());
    const Index window = a.window > 0 ? a.window : 10 * (n + 1);
    const ConvergenceReport cr =
        check_convergence_conditions(a.alpha, a.xi, a.gamma, topo, TrajectoryBundle(input_traces), n, window);
    const LogLinearFit fit = fit_log_linear(row_max(run.errors));
    art.file("errors.csv", error_trace_csv(run.errors));
    Json j = {{"agents", agents},
              {"topology", a.topology},
              {"lambda_max", topo.lambda_max()},
              {"final_errors", vector_to_json(run.errors.row(run.errors.rows() - 1).transpose())},
              {"initial_errors", vector_to_json(run.errors.row(0).transpose())},
              {"consensus_spread", run.consensus_spread.back()},
              {"fit", to_json(fit)},
              {"conditions", to_json(cr)},
              {"trace", "errors.csv"}};
    std::ostringstream t;
    t << "distributed identifier, " << agents << " agents on " << a.topology << ": max error "
      << fmt(run.errors.row(0).maxCoeff()) << " -> " << fmt(run.errors.row(run.errors.rows() - 1).maxCoeff())
      << " after " << steps << " steps; slope " << fmt(fit.slope) << " (R^2 " << fmt(fit.r_squared) << ")\n";
    art.emit("identify_distributed", j, t.str());
    return kExitOk;
}

int cmd_gain(const GainArgs& a, const Artifacts& art) {
    const LoadedRecords recs = load_records(a.records, a.weights);
    const CompositionMode mode = resolve_mode(a.mode, a.prefix ? a.prefix : recs.shared_prefix_count);
    std::optional<LtiSystem> truth;
    if (!a.system.empty() || !a.a_path.empty()) truth = load_system(a.system, a.a_path, a.b_path);
    LmiOptions lmi;
    lmi.margin = a.margin;
    const GainSynthesisResult g = synthesize_gain(recs.records, mode, recs.weights, a.rel_tol, truth, lmi);
    std::ostringstream t;
    if (g.success) {
        t << "stabilizing gain (" << mode.name() << "), LMI " << to_string(g.certificate.status) << ":\n"
          << matrix_text(g.k);
        if (g.closed_loop_radius) t << "closed-loop spectral radius " << fmt(*g.closed_loop_radius) << "\n";
        art.file("K.csv", matrix_to_csv(g.k));
    } else {
        t << "gain synthesis failed: " << g.diagnostic << "\n";
    }
    for (const auto& w : g.warnings) t << "warning: " << w << "\n";
    art.emit("gain", to_json(g, mode, recs.weights), t.str());
    return g.success ? kExitOk : kExitComputation;
}

int cmd_mpc(const MpcArgs& a, const Common& c, const Artifacts& art) {
    const LtiSystem sys = load_system(a.system, a.a_path, a.b_path);
    const Index n = sys.n(), m = sys.m();
    const LoadedRecords recs = load_records(a.records, a.weights);
    const CompositionMode mode = resolve_mode(a.mode, a.prefix ? a.prefix : recs.shared_prefix_count);
    MpcProblem pr;
    pr.horizon = a.horizon;
    pr.q_cost = a.q_scale * Matrix::Identity(n, n);
    pr.r_cost = a.r_scale * Matrix::Identity(m, m);
    pr.setpoint = Vector::Zero(n);
    pr.g_regularization = a.regularization;
    if (!a.u_min.empty() || !a.u_max.empty()) {
        pr.u_lower = parse_vector(a.u_min);
        pr.u_upper = parse_vector(a.u_max);
    }
    pr.basis = build_behavioral_basis(recs.records, a.horizon + n, mode, recs.weights);
    std::mt19937_64 rng(c.seed + 23);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector x0(n);
    if (!a.x0.empty()) {
        if (static_cast<Index>(a.x0.size()) != n) throw InputError("mpc: --x0 needs n values");
        x0 = parse_vector(a.x0);
    } else {
        for (Index i = 0; i < n; ++i) x0(i) = unif(rng);
    }
    Matrix warm(m, n);
    if (!a.warmup.empty()) {
        if (static_cast<Index>(a.warmup.size()) != m * n)
            throw InputError("mpc: --warmup needs m*n values (n inputs of dimension m, time-major)");
        for (Index k = 0; k < n; ++k)
            for (Index i = 0; i < m; ++i) warm(i, k) = a.warmup[static_cast<std::size_t>(k * m + i)];
    } else {
        for (Index i = 0; i < warm.size(); ++i) warm(i) = unif(rng);
    }
    const MpcRun run = mpc_run(sys, pr, x0, warm, a.steps, a.noise, c.seed + 1);
    std::vector<double> sorted = run.solve_seconds;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
    art.file("closed_loop.csv", io_record_to_csv(run.record));
    Json j = {{"mode", mode.name()},
              {"basis_rows", pr.basis.matrix.rows()},
              {"basis_cols", pr.basis.cols()},
              {"warmup_steps", run.warmup_steps},
              {"state_norms", run.state_norms},
              {"solve_seconds", run.solve_seconds},
              {"median_solve_seconds", median},
              {"max_constraint_residual",
               run.constraint_residuals.empty()
                   ? 0.0
                   : *std::max_element(run.constraint_residuals.begin(), run.constraint_residuals.end())},
              {"record", "closed_loop.csv"}};
    std::ostringstream t;
    t << "MPC (" << mode.name() << ", basis " << pr.basis.matrix.rows() << "x" << pr.basis.cols() << "): ||x|| "
      << fmt(run.state_norms.front()) << " -> " << fmt(run.state_norms.back()) << ", median solve " << fmt(median)
      << " s\n";
    art.emit("mpc", j, t.str());
    return kExitOk;
}

int cmd_bench_flops(const BenchArgs& a, const Artifacts& art) {
    FlopModel model;
    model.m = a.m;
    model.order_L = a.order;
    model.mosaic_columns = columns_from_lengths(a.lengths, a.order);
    model.pe_trial_columns = a.trial_columns;
    const FlopCosts costs = flop_costs(model);
    Json j = {{"costs", to_json(costs)}, {"C", model.total_mosaic_columns()}, {"mosaic_columns", model.mosaic_columns}};
    std::ostringstream t;
    t << "mosaic columns C = " << model.total_mosaic_columns() << ", MCPE cost " << costs.mcpe << "\n";
    if (!a.trial_columns.empty()) {
        const double cbar = model.mean_trial_columns();
        const auto cbar_int = static_cast<Index>(std::ceil(cbar - 1e-12));
        const Index kth = crossover_threshold(model.total_mosaic_columns(), cbar_int);
        j["c_bar"] = cbar;
        j["K_th"] = kth;
        t << "repeated PE cost " << costs.pe_repeated << ", c_bar " << fmt(cbar) << ", K_th " << kth << "\n";
    }
    art.emit("bench_flops", j, t.str());
    return kExitOk;
}

int cmd_bench_timed(const BenchArgs& a, const Common& c, const Artifacts& art) {
    const auto scenarios = matched_rank_scenarios(a.m, a.depth, a.trajectories, a.length,
                                                                      a.prefix, c.seed);
    RankBenchOptions opts;
    opts.runs = a.runs;
    opts.warmups = a.warmups;
    const RankBenchReport rep = timed_rank_bench(scenarios, opts);
    const OrderingVerdict v = rep.ordering({"cumulative", "hybrid", "mosaic"});
    art.file("bench.csv", rep.to_csv());
    Json j = to_json(rep);
    j["ordering_cumulative_hybrid_mosaic"] = to_string(v);
    art.emit("bench_timed", j, rep.to_csv() + "ordering cumulative < hybrid < mosaic: " + to_string(v) + "\n");
    return kExitOk;
}

int repro_ls(const ReproArgs& a, const Common& c, int jobs, const Artifacts& art) {
    std::vector<double> sigmas;
    if (!(a.noise_step > 0.0) || a.noise < 0.0) throw InputError("repro: need --noise >= 0 and --noise-step > 0");
    for (int i = 0; i * a.noise_step <= a.noise + 1e-12; ++i) sigmas.push_back(i * a.noise_step);
    const experiments::LsSweep sweep = experiments::ls_noise_sweep(sigmas, a.seeds, c.seed, jobs);
    art.file("ls_noise.csv", experiments::ls_sweep_to_csv(sweep));
    Json j = {{"sigmas", sigmas}, {"modes", sweep.modes}, {"mean_error", to_json(sweep.mean_error)}, {"seeds", a.seeds},
              {"table", "ls_noise.csv"}};
    art.emit("repro_ls", j, experiments::ls_sweep_to_csv(sweep));
    return kExitOk;
}

int repro_weighting(const ReproArgs& a, const Common& c, int jobs, const Artifacts& art) {
    std::vector<experiments::WeightingTrial> trials(static_cast<std::size_t>(a.seeds));
    experiments::parallel_for(trials.size(), jobs, [&](std::size_t i) {
        trials[i] = experiments::weighting_trial(c.seed + i);
    });
    std::ostringstream csv;
    csv << "seed,error_compensated,error_ones\n";
    int wins = 0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        csv << c.seed + i << ',' << fmt(trials[i].error_compensated) << ',' << fmt(trials[i].error_ones) << '\n';
        wins += trials[i].error_compensated <= trials[i].error_ones;
    }
    art.file("weighting.csv", csv.str());
    Json j = {{"seeds", a.seeds}, {"compensated_not_worse", wins}, {"table", "weighting.csv"}};
    std::ostringstream t;
    t << "compensating weights not worse in " << wins << " / " << a.seeds << " seeds\n";
    art.emit("repro_weighting", j, t.str());
    return kExitOk;
}

int repro_gain(const ReproArgs& a, const Common& c, const Artifacts& art) {
    const LtiSystem sys = builtin_system("batch_reactor");
    std::ostringstream csv;
    csv << "mode,seed,feasible,radius\n";
    Json per = Json::object();
    for (auto kind : {CompositionKind::Cumulative, CompositionKind::Mosaic, CompositionKind::Hybrid}) {
        int stable = 0;
        for (int s = 0; s < a.seeds; ++s) {
            const DesignRequest req = experiments::ls_request(kind, true, c.seed + s);
            const DesignResult d = design_signals(req);
            const auto recs = experiments::simulate_bundle(sys, d.bundle, c.seed + s + 17);
            const GainSynthesisResult g = synthesize_gain(recs, req.mode, d.bundle.weights(), 0.0, sys);
            const double rho = g.closed_loop_radius.value_or(std::numeric_limits<double>::infinity());
            stable += g.success && rho < 1.0;
            csv << req.mode.name() << ',' << c.seed + s << ',' << g.success << ',' << fmt(rho) << '\n';
        }
        per[CompositionMode{kind, 0}.kind_name()] = stable;
    }
    art.file("gain_radii.csv", csv.str());
    art.emit("repro_gain", {{"stable_counts", per}, {"seeds", a.seeds}, {"table", "gain_radii.csv"}},
             "stable gains per mode: " + per.dump() + "\n");
    return kExitOk;
}

int repro_mpc(const ReproArgs& a, const Common& c, const Artifacts& art) {
    Json j = Json::object();
    std::ostringstream t;
    const Index steps = a.steps > 0 ? a.steps : 40;
    const std::vector<CompositionKind> kinds{CompositionKind::Cumulative, CompositionKind::Hybrid,
                                             CompositionKind::Mosaic};
    const RankBenchReport solves = experiments::timed_mpc_steps(kinds, c.seed, RankBenchOptions{2, 7, 0.1});
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const experiments::MpcBenchmark b = experiments::mpc_benchmark(kinds[i], c.seed, steps);
        const std::string name = CompositionMode{kinds[i], 0}.kind_name();
        const RankBenchRow& row = solves.rows[i];
        art.file("mpc_" + name + ".csv", io_record_to_csv(b.run.record));
        j[name] = {{"basis_cols", b.basis_columns}, {"state_norms", b.run.state_norms},
                   {"median_solve_seconds", row.median_seconds}, {"iqr_solve_seconds", row.spread_seconds},
                   {"record", "mpc_" + name + ".csv"}};
        t << name << ": columns " << b.basis_columns << ", ||x|| " << fmt(b.run.state_norms.front()) << " -> "
          << fmt(b.run.state_norms.back()) << ", median solve " << fmt(row.median_seconds) << " s (IQR "
          << fmt(row.spread_seconds) << ")\n";
    }
    const OrderingVerdict v = solves.ordering({"cumulative", "hybrid", "mosaic"});
    j["solve_ordering"] = to_string(v);
    t << "solve-time ordering cumulative < hybrid < mosaic: " << to_string(v) << "\n";
    art.emit("repro_mpc", j, t.str());
    return kExitOk;
}

int repro_distributed(const ReproArgs& a, const Common& c, const Artifacts& art) {
    const Index steps = a.steps > 0 ? a.steps : 5000;
    const auto ex = experiments::distributed_experiment(steps, c.seed);
    const AdaptiveRun single = experiments::feedback_only_identifier(steps, c.seed);
    art.file("distributed_errors.csv", error_trace_csv(ex.run.errors));
    art.file("feedback_only_errors.csv", error_trace_csv(column_matrix(single.errors)));
    const LogLinearFit fit = fit_log_linear(row_max(ex.run.errors));
    Json j = {{"final_errors", vector_to_json(ex.run.errors.row(steps).transpose())},
              {"fit", to_json(fit)},
              {"feedback_only_final", single.errors.back()},
              {"omegas", ex.omegas}};
    std::ostringstream t;
    t << "distributed: max error " << fmt(ex.run.errors.row(0).maxCoeff()) << " -> "
      << fmt(ex.run.errors.row(steps).maxCoeff()) << " (slope " << fmt(fit.slope) << ", R^2 " << fmt(fit.r_squared)
      << "); single feedback-only identifier ends at " << fmt(single.errors.back()) << "\n";
    art.emit("repro_distributed", j, t.str());
    return kExitOk;
}

int repro_design_example(const Common& c, const Artifacts& art) {
    const DesignRequest req = DesignRequest::mosaic(2, 5, {7, 7, 6, 6, 5}, c.seed);
    const DesignResult d = design_signals(req);
    const DesignVerification v = verify_design(d.bundle, req);
    save_bundle(d.bundle, art.dir);
    FlopModel model;
    model.m = 2;
    model.order_L = 5;
    model.mosaic_columns = columns_from_lengths(req.lengths, 5);
    model.pe_trial_columns = {10};
    const Index c_total = model.total_mosaic_columns();
    Json j = {{"C", c_total},       {"rank", v.report.rank_report.numeric_rank}, {"verified", v.ok},
              {"K_th", crossover_threshold(c_total, 10)}, {"costs", to_json(flop_costs(model))}};
    std::ostringstream t;
    t << "mosaic (7,7,6,6,5), L=5: C = " << c_total << ", rank " << v.report.rank_report.numeric_rank
      << ", K_th = " << crossover_threshold(c_total, 10) << "\n";
    art.emit("repro_design_example", j, t.str());
    return v.ok ? kExitOk : kExitComputation;
}

int repro_implications(const ReproArgs& a, const Common& c, int jobs, const Artifacts& art) {
    std::vector<int> violated(static_cast<std::size_t>(a.trials), 0);
    experiments::parallel_for(violated.size(), jobs, [&](std::size_t i) {
        Index order = 1;
        const TrajectoryBundle b = experiments::random_equal_length_bundle(c.seed + i, &order);
        violated[i] = verify_transformations(b, order).consistent() ? 0 : 1;
    });
    const int total = std::accumulate(violated.begin(), violated.end(), 0);
    art.emit("repro_implications", {{"trials", a.trials}, {"counterexamples", total}},
             "implication counterexamples: " + std::to_string(total) + " / " + std::to_string(a.trials) + "\n");
    return total == 0 ? kExitOk : kExitComputation;
}

int repro_design_soundness(const ReproArgs& a, const Common& c, int jobs, const Artifacts& art) {
    std::vector<int> failed(static_cast<std::size_t>(a.trials), 0);
    experiments::parallel_for(failed.size(), jobs, [&](std::size_t i) {
        const DesignRequest req = experiments::random_design_request(c.seed + i);
        failed[i] = verify_design(design_signals(req).bundle, req).ok ? 0 : 1;
    });
    const int total = std::accumulate(failed.begin(), failed.end(), 0);
    art.emit("repro_design_soundness", {{"requests", a.trials}, {"failures", total}},
             "design failures: " + std::to_string(total) + " / " + std::to_string(a.trials) + "\n");
    return total == 0 ? kExitOk : kExitComputation;
}

const char* kReproNames =
    "ls-batch-reactor, weighting, gain-batch-reactor, mpc-batch-reactor, distributed-voltage-converter, "
    "design-example, implications, design-soundness";

int cmd_repro(const ReproArgs& a, const Common& c, int jobs, const Artifacts& art) {
    if (a.name == "ls-batch-reactor") return repro_ls(a, c, jobs, art);
    if (a.name == "weighting") return repro_weighting(a, c, jobs, art);
    if (a.name == "gain-batch-reactor") return repro_gain(a, c, art);
    if (a.name == "mpc-batch-reactor") return repro_mpc(a, c, art);
    if (a.name == "distributed-voltage-converter") return repro_distributed(a, c, art);
    if (a.name == "design-example") return repro_design_example(c, art);
    if (a.name == "implications") return repro_implications(a, c, jobs, art);
    if (a.name == "design-soundness") return repro_design_soundness(a, c, jobs, art);
    throw InputError("unknown repro scenario '" + a.name + "' (one of: " + kReproNames + ")");
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("-o,--out", c.out_dir, "Output directory for artifacts")->capture_default_str();
    sub->add_option("--seed", c.seed, "Random seed (default: $CPEKIT_SEED or 0)");
}

void add_mode(CLI::App* sub, std::string& mode, std::size_t& prefix) {
    sub->add_option("--mode", mode, "single | mosaic | cumulative | hybrid | hybrid:<p_bar>")->capture_default_str();
    sub->add_option("--prefix", prefix, "Hybrid shared-prefix count p_bar");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Collective persistency of excitation toolkit: design, check and use multi-trajectory data"};
    app.require_subcommand(1);
    Common common;
    int jobs = 1;
    app.add_option("--jobs", jobs, "Worker threads for independent seeds/trials")->capture_default_str();
    app.fallthrough();  // global options may follow the subcommand

    DesignArgs da;
    auto* design = app.add_subcommand("design", "Synthesize non-PE trajectories whose composite is exciting");
    add_common(design, common);
    add_mode(design, da.mode, da.prefix);
    design->add_option("-m,--dim", da.m, "Signal dimension m")->required();
    design->add_option("-L,--order", da.order, "Excitation order L")->required();
    design->add_option("--lengths", da.lengths, "Member lengths (comma separated)")->delimiter(',')->required();
    design->add_option("--weights", da.weights, "Member weights alpha_i")->delimiter(',');

    CheckArgs ca;
    auto* check = app.add_subcommand("check", "Check (collective) persistency of excitation of a bundle");
    add_common(check, common);
    add_mode(check, ca.mode, ca.prefix);
    check->add_option("-L,--order", ca.order, "Excitation order L")->required();
    check->add_option("--bundle", ca.bundle, "Bundle manifest or trajectory CSV")->required();
    check->add_option("--alpha", ca.alpha, "Weight policy: fixed | randomized")->capture_default_str();
    check->add_option("--trials", ca.trials, "Randomized weight trials")->capture_default_str();
    check->add_option("--rel-tol", ca.rel_tol, "Relative rank tolerance (0: default)");
    check->add_flag("--transformations", ca.transformations, "Also verify the implications between conditions");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Simulate input trajectories through an LTI system");
    add_common(simulate, common);
    simulate->add_option("--system", sa.system, "Built-in system: voltage_converter | batch_reactor")
        ->capture_default_str();
    simulate->add_option("--a-matrix", sa.a_path, "CSV file with A");
    simulate->add_option("--b-matrix", sa.b_path, "CSV file with B");
    simulate->add_option("--inputs", sa.inputs, "Input bundle manifest or trajectory CSV")->required();
    simulate->add_option("--x0", sa.x0, "Initial state (default: random in [-1,1])")->delimiter(',');
    simulate->add_option("--noise", sa.noise, "Process noise standard deviation")->capture_default_str();

    IdentifyArgs ia;
    auto* identify = app.add_subcommand("identify", "Identify [A B] from data");
    identify->require_subcommand(1);
    auto* ls = identify->add_subcommand("ls", "Least squares from composite data");
    add_common(ls, common);
    add_mode(ls, ia.mode, ia.prefix);
    ls->add_option("--records", ia.records, "Record CSVs or records manifests")->required();
    ls->add_option("--weights", ia.weights, "Record weights")->delimiter(',');
    ls->add_option("--system", ia.system, "True built-in system, to report the error");
    ls->add_option("--a-matrix", ia.a_path, "CSV file with the true A");
    ls->add_option("--b-matrix", ia.b_path, "CSV file with the true B");
    ls->add_option("--rel-tol", ia.rel_tol, "Relative rank tolerance (0: default)");
    auto* adaptive = identify->add_subcommand("adaptive", "Single normalized-gradient adaptive identifier");
    add_common(adaptive, common);
    adaptive->add_option("--system", ia.system, "Built-in system (default voltage_converter)");
    adaptive->add_option("--a-matrix", ia.a_path, "CSV file with A");
    adaptive->add_option("--b-matrix", ia.b_path, "CSV file with B");
    adaptive->add_option("--input", ia.input_csv, "Input trajectory CSV (default: Gaussian input)");
    adaptive->add_option("--amplitude", ia.amplitude, "Std of the default Gaussian input")->capture_default_str();
    adaptive->add_option("--steps", ia.steps, "Steps for the default input")->capture_default_str();
    adaptive->add_option("--alpha", ia.alpha, "Gain alpha in (0, 2]")->capture_default_str();
    adaptive->add_option("--xi", ia.xi, "Normalization xi > 0")->capture_default_str();
    adaptive->add_option("--noise", ia.noise, "Process noise standard deviation")->capture_default_str();
    adaptive->add_option("--window", ia.window, "Excitation window length (default 10(n+1))");
    auto* distributed = identify->add_subcommand("distributed", "Consensus-based distributed identifier");
    add_common(distributed, common);
    distributed->add_option("--system", ia.system, "Built-in system (default voltage_converter)");
    distributed->add_option("--a-matrix", ia.a_path, "CSV file with A");
    distributed->add_option("--b-matrix", ia.b_path, "CSV file with B");
    distributed->add_option("--topology", ia.topology, "ring | path | complete | path-chord")->capture_default_str();
    distributed->add_option("--agents", ia.agents, "Agents for random inputs")->capture_default_str();
    distributed->add_option("--omegas", ia.omegas, "Rotation rates of the per-agent feedback (voltage converter)")
        ->delimiter(',');
    distributed->add_option("--amplitude", ia.agent_amplitude,
                            "Use per-agent Gaussian inputs of this std instead of rotation feedback");
    distributed->add_option("--steps", ia.steps, "Steps")->capture_default_str();
    distributed->add_option("--alpha", ia.alpha, "Gain alpha in (0, 2]")->capture_default_str();
    distributed->add_option("--gamma", ia.gamma, "Consensus gain, 0 < gamma < 1/lambda_max")->capture_default_str();
    distributed->add_option("--xi", ia.xi, "Normalization xi > 0")->capture_default_str();
    distributed->add_option("--noise", ia.noise, "Process noise standard deviation")->capture_default_str();
    distributed->add_option("--window", ia.window, "Excitation window length (default 10(n+1))");

    GainArgs ga;
    auto* gain = app.add_subcommand("gain", "Data-driven stabilizing state feedback via an LMI");
    add_common(gain, common);
    add_mode(gain, ga.mode, ga.prefix);
    gain->add_option("--records", ga.records, "Record CSVs or records manifests")->required();
    gain->add_option("--weights", ga.weights, "Record weights")->delimiter(',');
    gain->add_option("--system", ga.system, "True built-in system, to report the closed-loop radius");
    gain->add_option("--a-matrix", ga.a_path, "CSV file with the true A");
    gain->add_option("--b-matrix", ga.b_path, "CSV file with the true B");
    gain->add_option("--rel-tol", ga.rel_tol, "Relative rank tolerance (0: default)");
    gain->add_option("--margin", ga.margin, "Relative LMI strictness margin")->capture_default_str();

    MpcArgs ma;
    auto* mpc = app.add_subcommand("mpc", "Receding-horizon control from a Hankel basis");
    add_common(mpc, common);
    add_mode(mpc, ma.mode, ma.prefix);
    mpc->add_option("--records", ma.records, "Prior record CSVs or records manifests")->required();
    mpc->add_option("--weights", ma.weights, "Record weights")->delimiter(',');
    mpc->add_option("--system", ma.system, "Built-in plant to control")->capture_default_str();
    mpc->add_option("--a-matrix", ma.a_path, "CSV file with A");
    mpc->add_option("--b-matrix", ma.b_path, "CSV file with B");
    mpc->add_option("--horizon", ma.horizon, "Prediction horizon N")->capture_default_str();
    mpc->add_option("--steps", ma.steps, "Receding-horizon iterations")->capture_default_str();
    mpc->add_option("--q-scale", ma.q_scale, "Q = q I")->capture_default_str();
    mpc->add_option("--r-scale", ma.r_scale, "R = r I")->capture_default_str();
    mpc->add_option("--regularization", ma.regularization, "Weight on ||g||^2")->capture_default_str();
    mpc->add_option("--x0", ma.x0, "Initial state")->delimiter(',');
    mpc->add_option("--warmup", ma.warmup, "Warm-up inputs u(0..n-1), time-major")->delimiter(',');
    mpc->add_option("--u-min", ma.u_min, "Input lower bounds")->delimiter(',');
    mpc->add_option("--u-max", ma.u_max, "Input upper bounds")->delimiter(',');
    mpc->add_option("--noise", ma.noise, "Process noise standard deviation")->capture_default_str();

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Flop model and rank-check timings");
    bench->require_subcommand(1);
    auto* flops = bench->add_subcommand("flops", "Unit-constant flop costs and the crossover threshold");
    add_common(flops, common);
    flops->add_option("-m,--dim", ba.m, "Signal dimension m")->capture_default_str();
    flops->add_option("-L,--order", ba.order, "Order L")->capture_default_str();
    flops->add_option("--lengths", ba.lengths, "Mosaic member lengths")->delimiter(',')->required();
    flops->add_option("--trial-columns", ba.trial_columns, "Column counts of repeated PE trials")->delimiter(',');
    auto* timed = bench->add_subcommand("timed", "Median rank-check timings on matched designed data");
    add_common(timed, common);
    timed->add_option("-m,--dim", ba.m, "Signal dimension m")->capture_default_str();
    timed->add_option("--depth", ba.depth, "Hankel depth")->capture_default_str();
    timed->add_option("--trajectories", ba.trajectories, "Trajectories per mode")->capture_default_str();
    timed->add_option("--length", ba.length, "Trajectory length")->capture_default_str();
    timed->add_option("--prefix", ba.prefix, "Hybrid shared-prefix count")->capture_default_str();
    timed->add_option("--runs", ba.runs, "Timed runs")->capture_default_str();
    timed->add_option("--warmups", ba.warmups, "Untimed warm-up runs")->capture_default_str();

    ReproArgs ra;
    auto* repro = app.add_subcommand("repro", "Regenerate a reference experiment end-to-end");
    add_common(repro, common);
    repro->add_option("name", ra.name, std::string("Scenario: ") + kReproNames)->required();
    repro->add_option("--noise", ra.noise, "Largest noise level (ls-batch-reactor)")->capture_default_str();
    repro->add_option("--noise-step", ra.noise_step, "Noise grid step (ls-batch-reactor)")->capture_default_str();
    repro->add_option("--seeds", ra.seeds, "Seeds for Monte Carlo scenarios")->capture_default_str();
    repro->add_option("--trials", ra.trials, "Randomized trials (implications, design-soundness)")
        ->capture_default_str();
    repro->add_option("--steps", ra.steps, "Steps (mpc / distributed; 0: scenario default)");

    std::string active;
    try {
        common.seed = default_seed();
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInput;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    if (jobs < 1) {
        err << "error: --jobs must be >= 1\n";
        return kExitInput;
    }

    const Artifacts art{fs::path(common.out_dir), &out};
    try {
        if (*design) {
            active = "design";
            return cmd_design(da, common, art);
        }
        if (*check) {
            active = "check";
            return cmd_check(ca, common, art);
        }
        if (*simulate) {
            active = "simulate";
            return cmd_simulate(sa, common, art);
        }
        if (*ls) {
            active = "identify_ls";
            return cmd_identify_ls(ia, art);
        }
        if (*adaptive) {
            active = "identify_adaptive";
            return cmd_identify_adaptive(ia, common, art);
        }
        if (*distributed) {
            active = "identify_distributed";
            return cmd_identify_distributed(ia, common, art);
        }
        if (*gain) {
            active = "gain";
            return cmd_gain(ga, art);
        }
        if (*mpc) {
            active = "mpc";
            return cmd_mpc(ma, common, art);
        }
        if (*flops) {
            active = "bench_flops";
            return cmd_bench_flops(ba, art);
        }
        if (*timed) {
            active = "bench_timed";
            return cmd_bench_timed(ba, common, art);
        }
        if (*repro) {
            active = "repro";
            return cmd_repro(ra, common, jobs, art);
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "computation failed: " << e.what() << "\n";
        try {
            fs::create_directories(art.dir);
            write_file_atomic(art.dir / ((active.empty() ? std::string("error") : active) + ".json"),
                              Json{{"status", "error"}, {"message", e.what()}}.dump(2) + "\n");
        } catch (const std::exception&) {
        }
        return kExitComputation;
    }
    return kExitInput;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace cpekit::cli
