#include "cpekit/trajectories.hpp"

#include <random>

#include <Eigen/Eigenvalues>

#include "cpekit/errors.hpp"

namespace cpekit {

Trajectory::Trajectory(Matrix samples, std::string label) : samples_(std::move(samples)), label_(std::move(label)) {
    if (samples_.rows() < 1) throw InputError("trajectory dimension must be >= 1");
    if (samples_.cols() < 1) throw InputError("trajectory must contain at least one sample");
    if (!samples_.allFinite()) throw InputError("trajectory '" + label_ + "' contains non-finite values");
}

Trajectory Trajectory::slice(Index begin, Index count) const {
    if (begin < 0 || count < 1 || begin + count > length())
        throw InputError("trajectory slice out of range");
    return Trajectory(samples_.middleCols(begin, count), label_);
}

TrajectoryBundle::TrajectoryBundle(std::vector<Trajectory> members, std::vector<double> weights,
                                   std::size_t shared_prefix_count)
    : members_(std::move(members)), weights_(std::move(weights)), shared_prefix_count_(shared_prefix_count) {
    if (members_.empty()) throw InputError("bundle must contain at least one trajectory");
    if (weights_.size() != members_.size()) throw InputError("bundle needs exactly one weight per member");
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (members_[i].dim() != members_.front().dim())
            throw InputError("bundle member " + std::to_string(i) + " has a different signal dimension");
        if (weights_[i] == 0.0) throw InputError("zero weight for bundle member " + std::to_string(i));
        if (!std::isfinite(weights_[i])) throw InputError("non-finite weight for bundle member " + std::to_string(i));
    }
    if (shared_prefix_count_ > members_.size()) throw InputError("shared prefix count exceeds member count");
    for (std::size_t i = 1; i < shared_prefix_count_; ++i)
        if (members_[i].length() != members_.front().length())
            throw InputError("shared-prefix member " + std::to_string(i) + " differs in length from member 0");
}

TrajectoryBundle::TrajectoryBundle(std::vector<Trajectory> members, std::size_t shared_prefix_count)
    : TrajectoryBundle(members, std::vector<double>(members.size(), 1.0), shared_prefix_count) {}

std::vector<Index> TrajectoryBundle::lengths() const {
    std::vector<Index> out;
    for (const auto& t : members_) out.push_back(t.length());
    return out;
}

TrajectoryBundle TrajectoryBundle::with_weights(std::vector<double> weights) const {
    return TrajectoryBundle(members_, std::move(weights), shared_prefix_count_);
}

TrajectoryBundle TrajectoryBundle::with_shared_prefix(std::size_t count) const {
    return TrajectoryBundle(members_, weights_, count);
}

LtiSystem::LtiSystem(Matrix a_matrix, Matrix b_matrix) : a(std::move(a_matrix)), b(std::move(b_matrix)) {
    if (a.rows() < 1 || a.rows() != a.cols()) throw InputError("A must be square and non-empty");
    if (b.rows() != a.rows() || b.cols() < 1) throw InputError("B must have n rows and at least one column");
    if (!a.allFinite() || !b.allFinite()) throw InputError("system matrices contain non-finite values");
}

Matrix LtiSystem::controllability_matrix() const {
    Matrix c(n(), n() * m());
    Matrix blk = b;
    for (Index i = 0; i < n(); ++i) {
        c.middleCols(i * m(), m()) = blk;
        blk = a * blk;
    }
    return c;
}

Index LtiSystem::controllability_rank() const { return numeric_rank(controllability_matrix()).numeric_rank; }

Matrix LtiSystem::ab() const {
    Matrix out(n(), n() + m());
    out << a, b;
    return out;
}

IoRecord::IoRecord(Trajectory inputs, Trajectory states) : inputs_(std::move(inputs)), states_(std::move(states)) {
    if (states_.length() != inputs_.length() + 1)
        throw InputError("IoRecord: state trajectory must be exactly one sample longer than the inputs");
}

double IoRecord::dynamics_residual(const LtiSystem& sys) const {
    if (sys.n() != n() || sys.m() != m()) throw InputError("IoRecord: system dimensions do not match the record");
    return (x_plus() - sys.a * x_minus() - sys.b * u()).norm();
}

GraphTopology::GraphTopology(std::size_t node_count, std::vector<std::pair<std::size_t, std::size_t>> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
    if (node_count_ < 1) throw InputError("graph needs at least one node");
    const Index n = static_cast<Index>(node_count_);
    laplacian_ = Matrix::Zero(n, n);
    for (const auto& [i, j] : edges_) {
        if (i >= node_count_ || j >= node_count_) throw InputError("graph edge references an unknown node");
        if (i == j) throw InputError("graph self-loops are not allowed");
        const Index a = static_cast<Index>(i), b = static_cast<Index>(j);
        if (laplacian_(a, b) != 0.0) throw InputError("duplicate graph edge");
        laplacian_(a, b) = -1.0;
        laplacian_(b, a) = -1.0;
        laplacian_(a, a) += 1.0;
        laplacian_(b, b) += 1.0;
    }
}

GraphTopology GraphTopology::ring(std::size_t n) {
    if (n < 3) return path(n);
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return GraphTopology(n, e);
}

GraphTopology GraphTopology::path(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return GraphTopology(n, e);
}

GraphTopology GraphTopology::complete(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return GraphTopology(n, e);
}

GraphTopology GraphTopology::path_with_chord() {
    return GraphTopology(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2}});
}

std::vector<std::size_t> GraphTopology::neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < node_count_; ++j)
        if (j != i && laplacian_(static_cast<Index>(i), static_cast<Index>(j)) != 0.0) out.push_back(j);
    return out;
}

double GraphTopology::lambda_max() const { return symmetric_eig_max(laplacian_); }

double GraphTopology::algebraic_connectivity() const {
    if (node_count_ < 2) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(laplacian_, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(1);
}

bool GraphTopology::is_connected(double tol) const {
    return node_count_ == 1 || algebraic_connectivity() > tol;
}

namespace {

void check_x0(const LtiSystem& sys, const Vector& x0) {
    if (x0.size() != sys.n()) throw InputError("x0 length does not match the system order");
    if (!x0.allFinite()) throw InputError("x0 contains non-finite values");
}

}  // namespace

IoRecord simulate_lti(const LtiSystem& sys, const Vector& x0, const Trajectory& inputs, double noise_std,
                      std::uint64_t rng_seed) {
    check_x0(sys, x0);
    if (inputs.dim() != sys.m()) throw InputError("input dimension does not match the system");
    const Matrix& u = inputs.samples();
    return simulate_policy(sys, x0, [&u](Index k, const Vector&) { return Vector(u.col(k)); }, inputs.length(),
                           noise_std, rng_seed);
}

IoRecord simulate_policy(const LtiSystem& sys, const Vector& x0, const InputPolicy& policy, Index steps,
                         double noise_std, std::uint64_t rng_seed) {
    check_x0(sys, x0);
    if (steps < 1) throw InputError("simulation needs at least one step");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw InputError("noise_std must be a finite non-negative value");
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix x(sys.n(), steps + 1);
    Matrix u(sys.m(), steps);
    x.col(0) = x0;
    for (Index k = 0; k < steps; ++k) {
        const Vector uk = policy(k, x.col(k));
        if (uk.size() != sys.m()) throw InputError("input policy returned a vector of the wrong size");
        u.col(k) = uk;
        Vector next = sys.a * x.col(k) + sys.b * uk;
        if (noise_std > 0.0)
            for (Index i = 0; i < sys.n(); ++i) next(i) += noise_std * gauss(rng);
        x.col(k + 1) = next;
    }
    return IoRecord(Trajectory(u, "u"), Trajectory(x, "x"));
}

LtiSystem builtin_system(const std::string& name) {
    if (name == "voltage_converter") {
        Matrix a(2, 2), b(2, 1);
        a << 1.0000, -0.0500,
             0.0004, 0.9998;
        b << 0.0125, 0.0000;
        return LtiSystem(a, b);
    }
    if (name == "batch_reactor") {
        Matrix a(4, 4), b(4, 2);
        a << 1.178, 0.001, 0.511, -0.403,
             -0.051, 0.661, -0.011, 0.061,
             0.076, 0.335, 0.560, 0.382,
             0.000, 0.335, 0.089, 0.849;
        b << 0.004, -0.087,
             0.467, 0.001,
             0.213, -0.235,
             0.213, -0.016;
        return LtiSystem(a, b);
    }
    throw InputError("unknown builtin system '" + name + "' (expected voltage_converter or batch_reactor)");
}

std::vector<std::string> builtin_system_names() { return {"voltage_converter", "batch_reactor"}; }

}  // namespace cpekit
