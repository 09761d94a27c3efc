#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dense_oracle.hpp"
#include "seirdiff/sensitivity.hpp"
#include "seirdiff/verify.hpp"
#include "test_util.hpp"

using namespace seirdiff;
using testutil::make_scenario;
using testutil::mixed_controls;
using testutil::ScenarioSpec;

namespace {
const CgOptions tight{1e-14, 0};

ControlVector direction(int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_direction(m, rng);
}
} // namespace

TEST_CASE("coefficient rows 3 and 4 carry the rate constants") {
    ScenarioSpec spec;
    Scenario sc = make_scenario(spec);
    const Trajectory traj = simulate(sc, mixed_controls(spec.regions));
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    for (int k = 0; k < lc.steps; ++k) {
        for (double v : lc.B3(k)) REQUIRE(v == -spec.sigma);
        for (double v : lc.C3(k)) REQUIRE(v == spec.phi_r);
        for (double v : lc.A3(k)) REQUIRE(v == 0.0);
        for (double v : lc.D3(k)) REQUIRE(v == 0.0);
        for (double v : lc.B4(k)) REQUIRE(v == -spec.phi_e);
        for (double v : lc.C4(k)) REQUIRE(v == -spec.phi_r);
        for (double v : lc.D4(k)) REQUIRE(v == spec.gamma);
    }
}

TEST_CASE("row-2 coefficients are exact negatives of row 1, shifted by the rates") {
    ScenarioSpec spec;
    spec.steps = 6;
    Scenario sc = make_scenario(spec);
    const Trajectory traj = simulate(sc, mixed_controls(spec.regions));
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    for (int k = 0; k < lc.steps; ++k) {
        const Field a1 = lc.A1(k), a2 = lc.A2(k), b1 = lc.B1(k), b2 = lc.B2(k);
        const Field c1 = lc.C1(k), c2 = lc.C2(k), d1 = lc.D1(k), d2 = lc.D2(k);
        for (int c = 0; c < sc.cell_count(); ++c) {
            REQUIRE(a2[c] == -a1[c]);
            REQUIRE(c2[c] == -c1[c]);
            REQUIRE(b2[c] == -b1[c] + spec.sigma + spec.phi_e);
            REQUIRE(d2[c] == -d1[c] - lc.gamma_next[k]);
        }
    }
}

TEST_CASE("constant-rate form collapses B1 to beta_e times the implicit state") {
    ScenarioSpec spec;
    spec.form = TransmissionRate::Form::constant;
    spec.beta_i0 = 0.3;
    spec.beta_e0 = 0.2;
    Scenario sc = make_scenario(spec);
    const Trajectory traj = simulate(sc, mixed_controls(spec.regions));
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    for (int k = 0; k < lc.steps; ++k) {
        const Field b1 = lc.B1(k);
        for (int c = 0; c < sc.cell_count(); ++c)
            REQUIRE(b1[c] == Catch::Approx(0.2 * traj.level[k + 1][SP_S][c]).epsilon(1e-14));
    }
}

TEST_CASE("assemble_coeffs rejects state-dependent trajectories") {
    ScenarioSpec spec;
    spec.regions = 1;
    Scenario sc = make_scenario(spec);
    NonlinearDiffusion laws;
    for (int sp = 0; sp < 4; ++sp) laws.law[sp].base = 0.1;
    const Trajectory traj = simulate(sc, laws);
    REQUIRE_THROWS_AS(assemble_coeffs(sc, traj), std::logic_error);
}

TEST_CASE("one-step linearization matches finite differences of the step map") {
    ScenarioSpec spec;
    spec.nx = 4;
    spec.steps = 4;
    Scenario sc = make_scenario(spec);
    const ControlVector u = mixed_controls(spec.regions);
    const Trajectory traj = simulate(sc, u, {tight});
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    const int k = 2;

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uv(-1.0, 1.0);

    SECTION("state direction") {
        Quad Y;
        for (int sp = 0; sp < 4; ++sp) {
            Y[sp].resize(sc.cell_count());
            for (double& v : Y[sp]) v = uv(rng);
        }
        ControlVector zero(spec.regions, 0.0);
        const Quad lin = tangent_step(sc, traj, lc, k, Y, zero, tight);

        const double eps = 1e-6;
        Quad plus = traj.level[k], minus = traj.level[k];
        for (int sp = 0; sp < 4; ++sp)
            for (int c = 0; c < sc.cell_count(); ++c) {
                plus[sp][c] += eps * Y[sp][c];
                minus[sp][c] -= eps * Y[sp][c];
            }
        const Quad sp_next = step_forward(sc, plus, k, traj.kappa, tight);
        const Quad sm_next = step_forward(sc, minus, k, traj.kappa, tight);
        for (int sp = 0; sp < 4; ++sp)
            for (int c = 0; c < sc.cell_count(); ++c) {
                const double fd = (sp_next[sp][c] - sm_next[sp][c]) / (2.0 * eps);
                REQUIRE(fd == Catch::Approx(lin[sp][c]).epsilon(1e-5).margin(1e-9));
            }
    }

    SECTION("control direction") {
        const ControlVector delta = direction(spec.regions, 77);
        Quad zero = {Field(sc.cell_count(), 0.0), Field(sc.cell_count(), 0.0),
                     Field(sc.cell_count(), 0.0), Field(sc.cell_count(), 0.0)};
        const Quad lin = tangent_step(sc, traj, lc, k, zero, delta, tight);

        const double eps = 1e-6;
        ControlVector up = u, dn = u;
        for (int sp = 0; sp < 4; ++sp)
            for (int j = 0; j < spec.regions; ++j) {
                up.u[sp][j] += eps * delta.u[sp][j];
                dn.u[sp][j] -= eps * delta.u[sp][j];
            }
        const Quad p = step_forward(sc, traj.level[k], k, expand_controls(up, sc.partition), tight);
        const Quad q = step_forward(sc, traj.level[k], k, expand_controls(dn, sc.partition), tight);
        for (int sp = 0; sp < 4; ++sp)
            for (int c = 0; c < sc.cell_count(); ++c) {
                const double fd = (p[sp][c] - q[sp][c]) / (2.0 * eps);
                REQUIRE(fd == Catch::Approx(lin[sp][c]).epsilon(1e-5).margin(1e-9));
            }
    }
}

TEST_CASE("zero direction gives an identically zero tangent") {
    ScenarioSpec spec;
    Scenario sc = make_scenario(spec);
    const Trajectory traj = simulate(sc, mixed_controls(spec.regions));
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    const TangentFields tf = solve_tangent(sc, traj, lc, ControlVector(spec.regions, 0.0));
    for (const auto& level : tf.level)
        for (const auto& f : level)
            for (double v : f) REQUIRE(v == 0.0);
}

TEST_CASE("tangent matches centered state differences at second order") {
    ScenarioSpec spec;
    spec.nx = 8;
    spec.steps = 10;
    Scenario sc = make_scenario(spec);
    const ControlVector u = mixed_controls(spec.regions);
    const Trajectory traj = simulate(sc, u, {tight});
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    const ControlVector delta = direction(spec.regions, 5);
    const TangentFields tf = solve_tangent(sc, traj, lc, delta, tight);

    auto fd_error = [&](double eps) {
        ControlVector up = u, dn = u;
        for (int sp = 0; sp < 4; ++sp)
            for (int j = 0; j < spec.regions; ++j) {
                up.u[sp][j] += eps * delta.u[sp][j];
                dn.u[sp][j] -= eps * delta.u[sp][j];
            }
        const Trajectory tp = simulate(sc, up, {tight});
        const Trajectory tm = simulate(sc, dn, {tight});
        std::vector<Quad> fd(tp.level.size());
        for (std::size_t k = 0; k < fd.size(); ++k)
            for (int sp = 0; sp < 4; ++sp) {
                fd[k][sp].resize(sc.cell_count());
                for (int c = 0; c < sc.cell_count(); ++c)
                    fd[k][sp][c] =
                        (tp.level[k][sp][c] - tm.level[k][sp][c]) / (2.0 * eps);
            }
        return testutil::trajectory_l2(sc, fd, tf.level);
    };

    const double e3 = fd_error(1e-3);
    const double e4 = fd_error(1e-4);
    INFO("e(1e-3) = " << e3 << ", e(1e-4) = " << e4 << ", ratio = " << e3 / e4);
    REQUIRE(e3 / e4 >= 50.0);
    REQUIRE(e3 / e4 <= 200.0);
}

TEST_CASE("tangent is linear and superposes") {
    ScenarioSpec spec;
    spec.nx = 6;
    spec.steps = 6;
    Scenario sc = make_scenario(spec);
    const Trajectory traj = simulate(sc, mixed_controls(spec.regions), {tight});
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    const ControlVector d1 = direction(spec.regions, 1);
    const ControlVector d2 = direction(spec.regions, 2);
    ControlVector twice = d1, sum = d1;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < spec.regions; ++j) {
            twice.u[sp][j] *= 2.0;
            sum.u[sp][j] += d2.u[sp][j];
        }

    const TangentFields t1 = solve_tangent(sc, traj, lc, d1, tight);
    const TangentFields t2 = solve_tangent(sc, traj, lc, d2, tight);
    const TangentFields tt = solve_tangent(sc, traj, lc, twice, tight);
    const TangentFields ts = solve_tangent(sc, traj, lc, sum, tight);

    double scale = 0.0;
    for (const auto& level : t1.level)
        for (const auto& f : level)
            for (double v : f) scale = std::max(scale, std::abs(v));

    for (std::size_t k = 0; k < t1.level.size(); ++k)
        for (int sp = 0; sp < 4; ++sp)
            for (int c = 0; c < sc.cell_count(); ++c) {
                REQUIRE(std::abs(tt.level[k][sp][c] - 2.0 * t1.level[k][sp][c]) <=
                        1e-12 * std::max(scale, 1.0));
                REQUIRE(std::abs(ts.level[k][sp][c] - t1.level[k][sp][c] -
                                 t2.level[k][sp][c]) <= 1e-12 * std::max(scale, 1.0));
            }
}

TEST_CASE("adjoint vanishes for an empty control region and at the terminal level") {
    ScenarioSpec spec;
    Scenario sc = make_scenario(spec);
    const Trajectory traj = simulate(sc, mixed_controls(spec.regions));
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);

    SECTION("terminal level is exactly zero") {
        const AdjointFields af = solve_adjoint(sc, traj, lc);
        for (const auto& f : af.level.back())
            for (double v : f) REQUIRE(v == 0.0);
    }

    SECTION("empty control region gives an identically zero adjoint") {
        SubdomainPartition empty = sc.partition;
        empty.control_mask.assign(sc.cell_count(), 0);
        empty.control_measure = 0.0;
        Scenario esc(sc.domain, empty, sc.time, sc.params, sc.rates, sc.init);
        const Trajectory etraj = simulate(esc, mixed_controls(spec.regions));
        const AdjointFields af = solve_adjoint(esc, etraj, assemble_coeffs(esc, etraj));
        for (const auto& level : af.level)
            for (const auto& f : level)
                for (double v : f) REQUIRE(v == 0.0);
    }
}

TEST_CASE("dense transpose oracle on the 4-cell, 5-step instance") {
    ScenarioSpec spec;
    spec.nx = 4;
    spec.regions = 2;
    spec.steps = 5;
    spec.T = 0.25;
    Scenario sc = make_scenario(spec);
    const ControlVector u = mixed_controls(2);
    const Trajectory traj = simulate(sc, u, {tight});
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    const ControlVector delta = direction(2, 123);

    const auto dense = dense_oracle::run(sc, traj, delta);

    // production tangent against the dense LU solve
    const TangentFields tf = solve_tangent(sc, traj, lc, delta, tight);
    const int N = sc.cell_count();
    double tscale = 0.0;
    for (const auto& lv : dense.tangent)
        for (double v : lv) tscale = std::max(tscale, std::abs(v));
    for (int k = 0; k <= traj.steps(); ++k)
        for (int sp = 0; sp < 4; ++sp)
            for (int c = 0; c < N; ++c)
                REQUIRE(std::abs(tf.level[k][sp][c] - dense.tangent[k][sp * N + c]) <=
                        1e-10 * tscale);

    // production adjoint against the transposed dense multipliers
    const AdjointFields af = solve_adjoint(sc, traj, lc, tight);
    const double rescale = sc.dt() * sc.domain.cell_volume();
    double ascale = 0.0;
    for (const auto& lv : dense.multiplier)
        for (double v : lv) ascale = std::max(ascale, std::abs(v));
    for (int k = 0; k < traj.steps(); ++k)
        for (int sp = 0; sp < 4; ++sp)
            for (int c = 0; c < N; ++c)
                REQUIRE(std::abs(af.level[k][sp][c] * rescale -
                                 dense.multiplier[k][sp * N + c]) <= 1e-10 * ascale);

    // duality identity, both in production and against the dense routes
    const double via_tangent = tracking_pairing(sc, traj, tf);
    const ControlVector G = control_pairing(sc, traj, af);
    double via_adjoint = 0.0;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < 2; ++j) via_adjoint -= G.u[sp][j] * delta.u[sp][j];

    REQUIRE(testutil::rel_diff(via_tangent, dense.via_tangent) <= 1e-10);
    REQUIRE(testutil::rel_diff(via_adjoint, dense.via_adjoint) <= 1e-10);
    REQUIRE(testutil::rel_diff(dense.via_tangent, dense.via_adjoint) <= 1e-12);
    REQUIRE(duality_gap(sc, traj, lc, delta, tight) <= 1e-10);

    // control pairing entries match the dense tracking gradient coordinatewise
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < 2; ++j)
            REQUIRE(testutil::rel_diff(-G.u[sp][j],
                                       dense.tracking_gradient[sp * 2 + j]) <= 1e-9);
}

TEST_CASE("dense transpose oracle on a 2D quadrant instance") {
    ScenarioSpec spec;
    spec.dim = 2;
    spec.nx = spec.ny = 3;
    spec.regions = 4;
    spec.steps = 4;
    spec.T = 0.25;
    Scenario sc = make_scenario(spec);
    const ControlVector u = mixed_controls(4);
    const Trajectory traj = simulate(sc, u, {tight});
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    const ControlVector delta = direction(4, 321);

    const auto dense = dense_oracle::run(sc, traj, delta);
    const TangentFields tf = solve_tangent(sc, traj, lc, delta, tight);
    const AdjointFields af = solve_adjoint(sc, traj, lc, tight);
    const ControlVector G = control_pairing(sc, traj, af);
    const double via_tangent = tracking_pairing(sc, traj, tf);
    double via_adjoint = 0.0;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < 4; ++j) via_adjoint -= G.u[sp][j] * delta.u[sp][j];

    REQUIRE(testutil::rel_diff(via_tangent, dense.via_tangent) <= 1e-10);
    REQUIRE(testutil::rel_diff(via_adjoint, dense.via_adjoint) <= 1e-10);
    REQUIRE(testutil::rel_diff(dense.via_tangent, dense.via_adjoint) <= 1e-12);
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < 4; ++j)
            REQUIRE(testutil::rel_diff(-G.u[sp][j], dense.tracking_gradient[sp * 4 + j]) <=
                    1e-9);
}

TEST_CASE("duality gap properties") {
    ScenarioSpec spec;
    spec.nx = 4;
    spec.regions = 2;
    spec.steps = 5;
    Scenario sc = make_scenario(spec);
    const Trajectory traj = simulate(sc, mixed_controls(2), {tight});
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);

    REQUIRE(duality_gap(sc, traj, lc, ControlVector(2, 0.0), tight) == 0.0);

    const ControlVector delta = direction(2, 9);
    REQUIRE(duality_gap(sc, traj, lc, delta, tight) <= 1e-10);
    ControlVector twice = delta;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < 2; ++j) twice.u[sp][j] *= 2.0;
    REQUIRE(duality_gap(sc, traj, lc, twice, tight) <= 1e-10);
}

TEST_CASE("adjoint reduced gradient matches per-coordinate finite differences") {
    ScenarioSpec spec;
    spec.nx = 16;
    spec.regions = 2;
    spec.steps = 20;
    Scenario sc = make_scenario(spec);
    const CheckResult res = gradient_check(sc, mixed_controls(2), 0.1, tight);
    INFO(dump_json(res.details));
    REQUIRE(res.pass);
}
