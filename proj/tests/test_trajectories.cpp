#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "cpekit/errors.hpp"
#include "cpekit/io.hpp"
#include "cpekit/trajectories.hpp"
#include "support/oracles.hpp"

using namespace cpekit;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cpekit_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("trajectory validation and slicing") {
    CHECK_THROWS_AS(Trajectory(Matrix(0, 3)), InputError);
    CHECK_THROWS_AS(Trajectory(Matrix(2, 0)), InputError);
    Matrix bad = Matrix::Zero(1, 3);
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(Trajectory{bad}, InputError);

    Matrix z(1, 5);
    z << 1, 2, 3, 4, 5;
    const Trajectory t(z);
    CHECK(t.slice(1, 3).samples() == (Matrix(1, 3) << 2, 3, 4).finished());
    CHECK_THROWS_AS(t.slice(3, 3), InputError);
}

TEST_CASE("bundle invariants") {
    const Trajectory a(Matrix::Ones(2, 4)), b(Matrix::Ones(2, 5)), c(Matrix::Ones(1, 4));
    CHECK(TrajectoryBundle({a, b}).weights() == std::vector<double>{1.0, 1.0});
    CHECK_THROWS_AS(TrajectoryBundle({a, c}), InputError);
    CHECK_THROWS_WITH_AS(TrajectoryBundle({a, b}, {1.0, 0.0}), doctest::Contains("zero weight"), InputError);
    CHECK_THROWS_AS(TrajectoryBundle({a, b}, std::vector<double>{1.0}), InputError);
    CHECK_THROWS_AS(TrajectoryBundle({a, b}, {1.0, 1.0}, 2), InputError);  // prefix lengths differ
    CHECK(TrajectoryBundle({a, a, b}, {1.0, -2.0, 0.5}, 2).shared_prefix_count() == 2);
}

TEST_CASE("simulate_lti on a shift system") {
    const LtiSystem sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
    Matrix u = Matrix::Zero(2, 4);
    u.row(0).setOnes();
    const IoRecord r = simulate_lti(sys, Vector::Zero(2), Trajectory(u), 0.0, 0);
    for (Index k = 1; k <= 4; ++k) CHECK(r.states().samples().col(k) == Vector::Unit(2, 0));
    CHECK(r.dynamics_residual(sys) == 0.0);
}

TEST_CASE("simulate_lti matches an independent rollout and has the requested noise") {
    const LtiSystem sys = builtin_system("batch_reactor");
    std::mt19937_64 rng(5);
    const Matrix u = oracle::random_matrix(2, 40, rng);
    const Vector x0 = oracle::random_matrix(4, 1, rng);
    const IoRecord r = simulate_lti(sys, x0, Trajectory(u), 0.0, 0);
    CHECK((r.states().samples() - oracle::rollout(sys.a, sys.b, x0, u)).norm() < 1e-12);
    CHECK(r.dynamics_residual(sys) < 1e-12);

    // A contractive system keeps the states small, so the residual is the noise itself.
    const LtiSystem calm(0.5 * Matrix::Identity(4, 4), sys.b);
    const IoRecord noisy = simulate_lti(calm, Vector::Zero(4), Trajectory(oracle::random_matrix(2, 250, rng)), 0.05, 9);
    const Matrix w = noisy.x_plus() - calm.a * noisy.x_minus() - calm.b * noisy.u();
    const double sd = std::sqrt(w.squaredNorm() / static_cast<double>(w.size()));
    CHECK(sd > 0.03);
    CHECK(sd < 0.07);
    // same seed, same noise
    const IoRecord again = simulate_lti(calm, Vector::Zero(4), noisy.inputs(), 0.05, 9);
    CHECK(again.states().samples() == noisy.states().samples());
}

TEST_CASE("builtin systems") {
    const LtiSystem br = builtin_system("batch_reactor");
    CHECK(br.n() == 4);
    CHECK(br.m() == 2);
    CHECK(br.a(0, 0) == 1.178);
    CHECK(oracle::gauss_rank(br.controllability_matrix()) == 4);
    CHECK(br.controllability_rank() == 4);
    const LtiSystem vc = builtin_system("voltage_converter");
    CHECK(vc.n() == 2);
    CHECK(vc.m() == 1);
    CHECK(vc.b(0, 0) == 0.0125);
    CHECK(vc.b(1, 0) == 0.0);
    CHECK_THROWS_AS(builtin_system("nope"), InputError);
}

TEST_CASE("graph topologies") {
    const GraphTopology k5 = GraphTopology::complete(5);
    CHECK(k5.lambda_max() == doctest::Approx(5.0));
    CHECK(k5.lambda_max() == doctest::Approx(oracle::power_lambda_max(k5.laplacian())));
    const GraphTopology ring = GraphTopology::ring(5);
    CHECK(ring.is_connected());
    CHECK(ring.lambda_max() == doctest::Approx(oracle::power_lambda_max(ring.laplacian())).epsilon(1e-6));
    CHECK(ring.neighbors(0) == std::vector<std::size_t>{1, 4});
    const GraphTopology split(4, {{0, 1}, {2, 3}});
    CHECK_FALSE(split.is_connected());
    CHECK_THROWS_AS(GraphTopology(3, {{0, 0}}), InputError);
    CHECK(GraphTopology::path_with_chord().lambda_max() > 4.0);
}

TEST_CASE("numbers and CSV round-trip exactly") {
    for (double v : {0.1, -1e-300, 1.0 / 3.0, 6.02214076e23}) CHECK(parse_double(format_double(v), "t") == v);
    CHECK_THROWS_AS(parse_double("abc", "t"), InputError);

    std::mt19937_64 rng(1);
    const Trajectory t(oracle::random_matrix(3, 7, rng));
    CHECK(trajectory_from_csv(trajectory_to_csv(t)).samples() == t.samples());

    const IoRecord r = simulate_lti(builtin_system("batch_reactor"), Vector::Ones(4), Trajectory(oracle::random_matrix(2, 6, rng)), 0.0, 0);
    const IoRecord back = io_record_from_csv(io_record_to_csv(r));
    CHECK(back.u() == r.u());
    CHECK(back.states().samples() == r.states().samples());
    CHECK_THROWS_AS(trajectory_from_csv("k,z1\n0,1,2\n"), InputError);
}

TEST_CASE("bundle manifest save and load") {
    const fs::path dir = scratch_dir("bundle");
    Matrix z1(1, 3), z2(1, 4), z3(1, 3);
    z1 << 1, 2, 3;
    z2 << 4, 5, 6, 7;
    z3 << 0.5, 0.25, 0.125;
    const TrajectoryBundle b({Trajectory(z1), Trajectory(z2), Trajectory(z3)}, {1.0, -2.0, 0.5});
    save_bundle(b, dir);
    const TrajectoryBundle loaded = load_bundle(dir / "manifest.json");
    REQUIRE(loaded.size() == 3);
    CHECK(loaded.weights() == std::vector<double>{1.0, -2.0, 0.5});
    CHECK(loaded.member(1).samples() == z2);

    write_file_atomic(dir / "single.csv", trajectory_to_csv(Trajectory(z1)));
    const TrajectoryBundle single = load_bundle(dir / "single.csv");
    CHECK(single.size() == 1);
    CHECK(single.weights() == std::vector<double>{1.0});

    std::string text = read_file(dir / "manifest.json");
    const auto pos = text.find("-2");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 2, "0");
    write_file_atomic(dir / "manifest.json", text);
    CHECK_THROWS_WITH_AS(load_bundle(dir / "manifest.json"), doctest::Contains("zero weight"), InputError);
    fs::remove_all(dir);
}
