#pragma once

// Verification harness: finite-difference gradient check, tangent/adjoint
// duality check, conservation check, reduced-ODE comparison, and the
// continuous-dependence trend check. Thresholds are pinned here.

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "seirdiff/control.hpp"
#include "seirdiff/forward.hpp"
#include "seirdiff/io.hpp"
#include "seirdiff/scenario.hpp"
#include "seirdiff/sensitivity.hpp"

namespace seirdiff {

namespace thresholds {
inline constexpr double gradient_rel_error = 1e-6;
inline constexpr double gradient_fd_epsilon = 1e-4;
inline constexpr double duality_gap = 1e-9;
inline constexpr double conservation_drift = 1e-10;
inline constexpr double ode_rel_error = 1e-5;
inline constexpr double contdep_ratio_lo = 1.8;
inline constexpr double contdep_ratio_hi = 2.2;
} // namespace thresholds

struct CheckResult {
    bool pass = false;
    ordered_json details;
};

inline Scenario with_time_grid(const Scenario& sc, int steps) {
    return Scenario(sc.domain, sc.partition, TimeGrid(sc.time.final_time, steps), sc.params,
                    sc.rates, sc.init);
}

// Fourth-order Runge-Kutta on the spatially reduced system
//   s' = -(beta_i(n) i + beta_e(n) e) s + gamma(t) r
//   e' = +(beta_i(n) i + beta_e(n) e) s - (sigma + phi_e) e
//   i' = sigma e - phi_r i
//   r' = phi_e e + phi_r i - gamma(t) r
// integrated piecewise between gamma breakpoints so the table discontinuities
// never cross a step.
inline std::array<double, 4> ode_reference(const Parameters& params, const TransmissionRate& rates,
                                           std::array<double, 4> y, double T,
                                           int steps_per_unit_time = 200000) {
    auto rhs = [&](double t, const std::array<double, 4>& v) {
        const double n = v[0] + v[1] + v[2] + v[3];
        const double bi = rates.beta_i(0, t, n);
        const double be = rates.beta_e(0, t, n);
        const double g = params.gamma(t);
        const double infect = (bi * v[2] + be * v[1]) * v[0];
        return std::array<double, 4>{
            -infect + g * v[3],
            infect - (params.sigma + params.phi_e) * v[1],
            params.sigma * v[1] - params.phi_r * v[2],
            params.phi_e * v[1] + params.phi_r * v[2] - g * v[3]};
    };

    std::vector<double> knots{0.0};
    for (double t : params.gamma.times)
        if (t > 0.0 && t < T) knots.push_back(t);
    knots.push_back(T);

    for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
        const double a = knots[seg], b = knots[seg + 1];
        const int steps = std::max(1, static_cast<int>((b - a) * steps_per_unit_time));
        const double h = (b - a) / steps;
        double t = a;
        for (int s = 0; s < steps; ++s) {
            // gamma is constant on (a, b]; evaluate strictly inside
            const double tm = t + 0.5 * h;
            const auto k1 = rhs(tm, y);
            std::array<double, 4> y2, y3, y4;
            for (int c = 0; c < 4; ++c) y2[c] = y[c] + 0.5 * h * k1[c];
            const auto k2 = rhs(tm, y2);
            for (int c = 0; c < 4; ++c) y3[c] = y[c] + 0.5 * h * k2[c];
            const auto k3 = rhs(tm, y3);
            for (int c = 0; c < 4; ++c) y4[c] = y[c] + h * k3[c];
            const auto k4 = rhs(tm, y4);
            for (int c = 0; c < 4; ++c)
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            t += h;
        }
    }
    return y;
}

// Adjoint reduced gradient against per-coordinate centered differences of the
// discrete cost.
inline CheckResult gradient_check(const Scenario& sc, const ControlVector& u, double alpha,
                                  const CgOptions& cg = {},
                                  double eps = thresholds::gradient_fd_epsilon) {
    const CostConfig cost{alpha};
    const Trajectory traj = simulate(sc, u, {cg});
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
    const AdjointFields adj = solve_adjoint(sc, traj, lc, cg);
    const ControlVector g = reduced_gradient(sc, traj, adj, u, cost);

    CheckResult res;
    ordered_json coords = ordered_json::array();
    double max_rel = 0.0;
    for (int sp = 0; sp < 4; ++sp) {
        for (int j = 0; j < u.region_count(); ++j) {
            ControlVector up = u, dn = u;
            up.u[sp][j] += eps;
            dn.u[sp][j] -= eps;
            const double jp = evaluate_cost(sc, simulate(sc, up, {cg}), up, cost);
            const double jm = evaluate_cost(sc, simulate(sc, dn, {cg}), dn, cost);
            const double fd = (jp - jm) / (2.0 * eps);
            const double ga = g.u[sp][j];
            const double scale = std::max(std::abs(fd), std::abs(ga));
            const double rel = scale < 1e-30 ? 0.0 : std::abs(fd - ga) / scale;
            max_rel = std::max(max_rel, rel);
            ordered_json entry;
            entry["species"] = species_names[sp];
            entry["region"] = j + 1;
            entry["adjoint"] = ga;
            entry["fd"] = fd;
            entry["relative_error"] = rel;
            coords.push_back(entry);
        }
    }
    res.pass = max_rel <= thresholds::gradient_rel_error;
    res.details["epsilon"] = eps;
    res.details["threshold"] = thresholds::gradient_rel_error;
    res.details["max_relative_error"] = max_rel;
    res.details["coordinates"] = coords;
    return res;
}

inline ControlVector random_direction(int regions, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> span(-1.0, 1.0);
    ControlVector d(regions);
    double norm = 0.0;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < regions; ++j) {
            d.u[sp][j] = span(rng);
            norm = std::max(norm, std::abs(d.u[sp][j]));
        }
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < regions; ++j) d.u[sp][j] /= norm;
    return d;
}

inline CheckResult duality_check(const Scenario& sc, const ControlVector& u, std::uint64_t seed,
                                 const CgOptions& cg = {}) {
    std::mt19937_64 rng(seed);
    const ControlVector delta = random_direction(u.region_count(), rng);
    const Trajectory traj = simulate(sc, u, {cg});
    const LinearizedCoefficients lc = assemble_coeffs(sc, traj);

    const TangentFields tf = solve_tangent(sc, traj, lc, delta, cg);
    const AdjointFields af = solve_adjoint(sc, traj, lc, cg);
    const ControlVector G = control_pairing(sc, traj, af);
    const double via_tangent = tracking_pairing(sc, traj, tf);
    double via_adjoint = 0.0;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < G.region_count(); ++j)
            via_adjoint -= G.u[sp][j] * delta.u[sp][j];
    const double scale = std::max({std::abs(via_tangent), std::abs(via_adjoint), 1e-300});
    const double gap = via_tangent == via_adjoint ? 0.0
                                                  : std::abs(via_tangent - via_adjoint) / scale;

    CheckResult res;
    res.pass = gap <= thresholds::duality_gap;
    res.details["threshold"] = thresholds::duality_gap;
    res.details["gap"] = gap;
    res.details["tracking_pairing"] = via_tangent;
    res.details["control_pairing"] = via_adjoint;
    return res;
}

inline CheckResult conservation_check(const Scenario& sc, const Trajectory& traj) {
    const double drift = conservation_drift(sc.domain, traj);
    CheckResult res;
    res.pass = drift <= thresholds::conservation_drift;
    res.details["threshold"] = thresholds::conservation_drift;
    res.details["max_relative_drift"] = drift;
    const auto mass = mass_history(sc.domain, traj);
    res.details["initial_total"] = mass.front();
    res.details["final_total"] = mass.back();
    return res;
}

// Homogenizes the initial data (spatial means) and compares the PDE solver at
// the configured step count against the high-accuracy reduced-ODE integrator.
inline CheckResult ode_check(const Scenario& sc, const ControlVector& u, const CgOptions& cg = {}) {
    if (sc.rates.has_multiplier()) {
        const Field& mlt = sc.rates.multiplier();
        for (double v : mlt)
            require(v == mlt.front(),
                    "ode check requires a spatially uniform transmission multiplier");
    }
    InitialData homog;
    std::array<double, 4> y0{};
    for (int sp = 0; sp < 4; ++sp) {
        y0[sp] = integrate(sc.domain, sc.init.fields[sp]) / sc.domain.measure();
        homog.fields[sp].assign(sc.cell_count(), y0[sp]);
    }
    Scenario hsc(sc.domain, sc.partition, sc.time, sc.params, sc.rates, homog);
    const Trajectory traj = simulate(hsc, u, {cg});

    std::array<double, 4> pde;
    for (int sp = 0; sp < 4; ++sp)
        pde[sp] = integrate(sc.domain, traj.level.back()[sp]) / sc.domain.measure();
    const std::array<double, 4> ode =
        ode_reference(sc.params, sc.rates, y0, sc.time.final_time);

    double num = 0.0, den = 0.0;
    for (int sp = 0; sp < 4; ++sp) {
        num += (pde[sp] - ode[sp]) * (pde[sp] - ode[sp]);
        den += ode[sp] * ode[sp];
    }
    const double rel = std::sqrt(num) / std::sqrt(den);

    CheckResult res;
    res.pass = rel <= thresholds::ode_rel_error;
    res.details["threshold"] = thresholds::ode_rel_error;
    res.details["relative_error"] = rel;
    res.details["pde"] = ordered_json::array({pde[0], pde[1], pde[2], pde[3]});
    res.details["ode"] = ordered_json::array({ode[0], ode[1], ode[2], ode[3]});
    return res;
}

// Discrete L2(0,T; H1) norm of the difference of two trajectories.
inline double trajectory_difference_norm(const Scenario& sc, const Trajectory& a,
                                         const Trajectory& b) {
    const double dt = sc.dt();
    const int K = a.steps();
    Field unit_kappa(sc.cell_count(), 1.0);
    const DiffusionOperator grad_form(sc.domain, sc.faces, unit_kappa);
    double total = 0.0;
    Field diff(sc.cell_count());
    for (int k = 0; k <= K; ++k) {
        const double w = (k == 0 || k == K) ? 0.5 * dt : dt;
        for (int sp = 0; sp < 4; ++sp) {
            double l2 = 0.0;
            for (int c = 0; c < sc.cell_count(); ++c) {
                diff[c] = a.level[k][sp][c] - b.level[k][sp][c];
                l2 += diff[c] * diff[c];
            }
            total += w * (l2 * sc.domain.cell_volume() + grad_form.bilinear(diff, diff));
        }
    }
    return std::sqrt(total);
}

// Trajectory differences for control perturbations h, h/2, h/4 scale linearly
// in the perturbation size: successive norm ratios near 2.
inline CheckResult contdep_check(const Scenario& sc, const ControlVector& u, std::uint64_t seed,
                                 const CgOptions& cg = {}, double h_fraction = 0.05) {
    std::mt19937_64 rng(seed);
    const ControlVector dir = random_direction(u.region_count(), rng);
    double u_min = u.u[0][0];
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < u.region_count(); ++j) u_min = std::min(u_min, u.u[sp][j]);
    const double h0 = h_fraction * u_min;

    const Trajectory base = simulate(sc, u, {cg});
    std::vector<double> sizes{h0, 0.5 * h0, 0.25 * h0};
    std::vector<double> norms;
    for (double h : sizes) {
        ControlVector pert = u;
        for (int sp = 0; sp < 4; ++sp)
            for (int j = 0; j < u.region_count(); ++j) pert.u[sp][j] += h * dir.u[sp][j];
        norms.push_back(trajectory_difference_norm(sc, simulate(sc, pert, {cg}), base));
    }
    const double r1 = norms[0] / norms[1];
    const double r2 = norms[1] / norms[2];

    CheckResult res;
    res.pass = r1 >= thresholds::contdep_ratio_lo && r1 <= thresholds::contdep_ratio_hi &&
               r2 >= thresholds::contdep_ratio_lo && r2 <= thresholds::contdep_ratio_hi;
    res.details["range"] =
        ordered_json::array({thresholds::contdep_ratio_lo, thresholds::contdep_ratio_hi});
    res.details["sizes"] = ordered_json::array({sizes[0], sizes[1], sizes[2]});
    res.details["norms"] = ordered_json::array({norms[0], norms[1], norms[2]});
    res.details["ratios"] = ordered_json::array({r1, r2});
    return res;
}

} // namespace seirdiff
