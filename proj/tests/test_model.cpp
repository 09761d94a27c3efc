#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "seirdiff/grid.hpp"
#include "seirdiff/model.hpp"

using namespace seirdiff;

namespace {
TransmissionRate make_rate(TransmissionRate::Form form, double bi0 = 0.4, double be0 = 0.25,
                           Field mult = {}) {
    TransmissionRate::Shape shape;
    shape.n_sat = 1.0;
    shape.midpoint = 1.5;
    shape.width = 0.4;
    return TransmissionRate(form, bi0, be0, shape, std::move(mult));
}
} // namespace

TEST_CASE("expand_controls: uniform, halves, and quadrature") {
    const Domain d = Domain::line(1.0, 4);
    const auto part1 = build_partition(d, {Box{{0.0, 0.0}, {1.0, 1.0}}}, {});
    ControlVector one(1);
    one.u[SP_S] = {0.7};
    auto kappa = expand_controls(one, part1);
    for (double v : kappa[SP_S]) REQUIRE(v == 0.7);

    const auto part2 =
        build_partition(d, {Box{{0.0, 0.0}, {0.5, 1.0}}, Box{{0.5, 0.0}, {1.0, 1.0}}}, {});
    ControlVector two(2);
    two.u[SP_I] = {0.1, 0.5};
    kappa = expand_controls(two, part2);
    REQUIRE(kappa[SP_I][0] == 0.1);
    REQUIRE(kappa[SP_I][1] == 0.1);
    REQUIRE(kappa[SP_I][2] == 0.5);
    REQUIRE(kappa[SP_I][3] == 0.5);

    two.u[SP_S] = {0.3, 0.9};
    kappa = expand_controls(two, part2);
    const double expected = 0.3 * part2.region_measure[0] + 0.9 * part2.region_measure[1];
    REQUIRE(integrate(d, kappa[SP_S]) == Catch::Approx(expected));

    ControlVector wrong(3);
    REQUIRE_THROWS_AS(expand_controls(wrong, part2), validation_error);
}

TEST_CASE("beta evaluation: constant, saturating, spatial multiplier") {
    Field n(4, 1.0);
    Field bi, be;

    make_rate(TransmissionRate::Form::constant, 0.3, 0.2).eval(n, 0.0, bi, be);
    for (double v : bi) REQUIRE(v == Catch::Approx(0.3));

    make_rate(TransmissionRate::Form::saturating, 0.4, 0.2).eval(n, 0.0, bi, be);
    for (double v : bi) REQUIRE(v == Catch::Approx(0.2));  // 0.4 / (1 + 1/1)

    Field mult{1.0, 0.0, 0.5, 1.0};
    make_rate(TransmissionRate::Form::saturating, 0.4, 0.2, mult).eval(n, 0.0, bi, be);
    REQUIRE(bi[1] == 0.0);
    REQUIRE(be[1] == 0.0);
    REQUIRE(bi[2] == Catch::Approx(0.1));
}

TEST_CASE("beta derivative: constant form and saturating at zero") {
    Field n{0.0, 0.5, 2.0};
    Field bip, bep;
    make_rate(TransmissionRate::Form::constant).eval_prime(n, 0.0, bip, bep);
    for (double v : bip) REQUIRE(v == 0.0);

    const auto sat = make_rate(TransmissionRate::Form::saturating, 0.4, 0.25);
    sat.eval_prime(n, 0.0, bip, bep);
    REQUIRE(bip[0] == Catch::Approx(-0.4 / 1.0));  // -beta0 / n_sat at n = 0
    REQUIRE(bep[0] == Catch::Approx(-0.25 / 1.0));
}

TEST_CASE("built-in forms: bounds, Lipschitz, derivative consistency over samples") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> pos(0.05, 6.0), sign(0.0, 1.0);
    const TransmissionRate::Form forms[] = {TransmissionRate::Form::constant,
                                            TransmissionRate::Form::saturating,
                                            TransmissionRate::Form::logistic_capped};
    for (const auto form : forms) {
        const auto rate = make_rate(form);
        const double bstar = rate.bound();
        const double lip = rate.lipschitz();
        for (int s = 0; s < 1200; ++s) {
            const double z1 = (sign(rng) < 0.25 ? -1.0 : 1.0) * pos(rng);
            const double z2 = (sign(rng) < 0.25 ? -1.0 : 1.0) * pos(rng);

            const double b_i1 = rate.beta_i(0, 0.0, z1), b_e1 = rate.beta_e(0, 0.0, z1);
            REQUIRE(b_i1 >= 0.0);
            REQUIRE(b_e1 >= 0.0);
            REQUIRE(b_i1 <= bstar + 1e-15);
            REQUIRE(b_e1 <= bstar + 1e-15);

            const double gap = std::abs(rate.beta_i(0, 0.0, z1) - rate.beta_i(0, 0.0, z2)) +
                               std::abs(rate.beta_e(0, 0.0, z1) - rate.beta_e(0, 0.0, z2));
            REQUIRE(gap <= lip * std::abs(z1 - z2) + 1e-14);

            // centered finite differences of the analytic derivative, sampled
            // over population values (positive range, where the derivative is
            // well above the cancellation floor of the difference quotient)
            const double h = 1e-5;
            const double zp = pos(rng);
            const double fd =
                (rate.shape_value(zp + h) - rate.shape_value(zp - h)) / (2.0 * h);
            const double an = rate.shape_derivative(zp);
            const double scale = std::max({std::abs(fd), std::abs(an), 1e-8});
            REQUIRE(std::abs(fd - an) / scale <= 1e-6);
        }
    }
}

TEST_CASE("gamma table lookup is left-continuous") {
    const GammaTable g({0.0, 0.5, 1.0}, {0.1, 0.2, 0.3});
    REQUIRE(g(0.0) == 0.1);
    REQUIRE(g(0.3) == 0.1);
    REQUIRE(g(0.5) == 0.1);       // value from the left at the breakpoint
    REQUIRE(g(0.500001) == 0.2);
    REQUIRE(g(1.0) == 0.2);
    REQUIRE(g(1.5) == 0.3);
    REQUIRE(g.max_value() == 0.3);

    REQUIRE_THROWS_AS(GammaTable({0.5}, {0.1}), validation_error);       // must start at 0
    REQUIRE_THROWS_AS(GammaTable({0.0, 0.0}, {0.1, 0.2}), validation_error);
    REQUIRE_THROWS_AS(GammaTable({0.0}, {-0.1}), validation_error);
}

TEST_CASE("control bounds validation") {
    Parameters p;
    p.sigma = p.phi_e = p.phi_r = 0.1;
    p.kappa_min = 0.01;
    p.kappa_max = 1.0;

    ControlBounds ok;
    for (int sp = 0; sp < 4; ++sp) {
        ok.lower[sp] = {0.05, 0.1};
        ok.upper[sp] = {0.5, 0.9};
    }
    REQUIRE_NOTHROW(ok.validate(p));

    ControlBounds empty = ok;
    empty.lower[SP_I][1] = 0.5;
    empty.upper[SP_I][1] = 0.2;
    REQUIRE_THROWS_WITH(empty.validate(p), Catch::Matchers::ContainsSubstring("empty control interval"));

    ControlBounds outside = ok;
    outside.upper[SP_E][0] = 1.5;
    REQUIRE_THROWS_WITH(outside.validate(p), Catch::Matchers::ContainsSubstring("kappa"));
}

TEST_CASE("admissible controls expand within the global diffusion bracket") {
    const Domain d = Domain::line(1.0, 6);
    const auto part =
        build_partition(d, {Box{{0.0, 0.0}, {0.5, 1.0}}, Box{{0.5, 0.0}, {1.0, 1.0}}}, {});
    Parameters p;
    p.sigma = p.phi_e = p.phi_r = 0.1;
    p.kappa_min = 0.01;
    p.kappa_max = 1.0;
    ControlBounds b;
    for (int sp = 0; sp < 4; ++sp) {
        b.lower[sp] = {0.05, 0.1};
        b.upper[sp] = {0.5, 0.9};
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        ControlVector cv(2);
        for (int sp = 0; sp < 4; ++sp)
            for (int j = 0; j < 2; ++j)
                cv.u[sp][j] = b.lower[sp][j] + unit(rng) * (b.upper[sp][j] - b.lower[sp][j]);
        const auto kappa = expand_controls(cv, part);
        for (int sp = 0; sp < 4; ++sp)
            for (double v : kappa[sp]) {
                REQUIRE(v >= p.kappa_min);
                REQUIRE(v <= p.kappa_max);
            }
    }
}

TEST_CASE("dt_safe guard formula") {
    Parameters p;
    p.sigma = 0.3;
    p.phi_e = 0.2;
    p.phi_r = 0.25;
    p.gamma = GammaTable::constant(0.05);
    p.kappa_min = 0.01;
    p.kappa_max = 1.0;
    const auto rate = make_rate(TransmissionRate::Form::constant, 0.5, 0.3);
    const double expected = 0.5 / (0.5 * 2.0 + 0.3 + 0.2 + 0.25 + 0.05);
    REQUIRE(dt_safe_bound(p, rate, 2.0) == Catch::Approx(expected));
}
