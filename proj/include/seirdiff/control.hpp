#pragma once

// Cost functional, reduced gradient over the 4m control scalars, projection
// onto the box constraints, projected-gradient descent with Armijo
// backtracking, and the projection form of the first-order optimality
// condition u* = clamp(mu(u*) / alpha).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "seirdiff/control_types.hpp"
#include "seirdiff/forward.hpp"
#include "seirdiff/sensitivity.hpp"

namespace seirdiff {

struct CostConfig {
    double alpha = 1.0;  // control-penalty weight, > 0

    void validate() const { require(alpha > 0.0, "alpha must be positive"); }
};

// J = 1/2 int_{Q_C} (e^2 + i^2) + alpha/2 int_Q sum_species kappa^2.
// Tracking term by the trapezoid rule over time levels; the control term is
// exact for piecewise-constant fields: alpha/2 * T * sum_j |Omega_j| sum_sp u_j^2.
inline double evaluate_cost(const Scenario& sc, const Trajectory& traj, const ControlVector& u,
                            const CostConfig& cfg) {
    cfg.validate();
    const int K = traj.steps();
    const double dt = sc.dt();
    double tracking = 0.0;
    Field integrand(sc.cell_count());
    for (int k = 0; k <= K; ++k) {
        const double w = (k == 0 || k == K) ? 0.5 * dt : dt;
        for (int c = 0; c < sc.cell_count(); ++c) {
            const double e = traj.level[k][SP_E][c];
            const double i = traj.level[k][SP_I][c];
            integrand[c] = e * e + i * i;
        }
        tracking += w * integrate(sc.domain, integrand, sc.partition.control_mask);
    }
    double penalty = 0.0;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < u.region_count(); ++j)
            penalty += sc.partition.region_measure[j] * u.u[sp][j] * u.u[sp][j];
    return 0.5 * tracking + 0.5 * cfg.alpha * sc.time.final_time * penalty;
}

// g_j^sp = alpha u_j^sp |Omega_j| T - int_{Q_j} grad(state_sp) . grad(adjoint_sp)
inline ControlVector reduced_gradient(const Scenario& sc, const Trajectory& traj,
                                      const AdjointFields& adj, const ControlVector& u,
                                      const CostConfig& cfg) {
    cfg.validate();
    ControlVector g = control_pairing(sc, traj, adj);
    const double T = sc.time.final_time;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < g.region_count(); ++j)
            g.u[sp][j] = cfg.alpha * u.u[sp][j] * sc.partition.region_measure[j] * T - g.u[sp][j];
    return g;
}

// mu_j^sp = int_{Q_j} grad(state_sp) . grad(adjoint_sp) / (|Omega_j| T), so
// g_j = alpha |Omega_j| T (u_j - mu_j / alpha) holds identically.
inline ControlVector weighted_means(const Scenario& sc, const Trajectory& traj,
                                    const AdjointFields& adj) {
    ControlVector mu = control_pairing(sc, traj, adj);
    const double T = sc.time.final_time;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < mu.region_count(); ++j)
            mu.u[sp][j] /= sc.partition.region_measure[j] * T;
    return mu;
}

inline ControlVector project(const ControlVector& values, const ControlBounds& bounds) {
    require(values.region_count() == bounds.region_count(),
            "projection: region count mismatch");
    ControlVector out = values;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < out.region_count(); ++j)
            out.u[sp][j] = std::max(bounds.lower[sp][j],
                                    std::min(bounds.upper[sp][j], values.u[sp][j]));
    return out;
}

// ||u - clamp(mu/alpha)||_inf: zero exactly at controls satisfying the
// projection optimality condition.
inline double optimality_residual(const ControlVector& u, const ControlVector& mu, double alpha,
                                  const ControlBounds& bounds) {
    ControlVector target = mu;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < target.region_count(); ++j) target.u[sp][j] /= alpha;
    target = project(target, bounds);
    double res = 0.0;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < target.region_count(); ++j)
            res = std::max(res, std::abs(u.u[sp][j] - target.u[sp][j]));
    return res;
}

inline ControlVector random_admissible(const ControlBounds& bounds, std::mt19937_64& rng) {
    ControlVector cv(bounds.region_count());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < bounds.region_count(); ++j)
            cv.u[sp][j] = bounds.lower[sp][j] +
                          unit(rng) * (bounds.upper[sp][j] - bounds.lower[sp][j]);
    return cv;
}

// Smallest <g, v - u> over random admissible v; nonnegative (up to noise) at
// a stationary point.
inline double variational_inequality_min(const ControlVector& u, const ControlVector& g,
                                         const ControlBounds& bounds, std::mt19937_64& rng,
                                         int samples = 100) {
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        const ControlVector v = random_admissible(bounds, rng);
        double inner = 0.0;
        for (int sp = 0; sp < 4; ++sp)
            for (int j = 0; j < u.region_count(); ++j)
                inner += g.u[sp][j] * (v.u[sp][j] - u.u[sp][j]);
        worst = std::min(worst, inner);
    }
    return worst;
}

inline std::pair<ControlVector, OptimalityReport> optimize(
    const Scenario& sc, const ControlBounds& bounds, const CostConfig& cfg,
    const OptimizeOptions& opts = {}, std::optional<ControlVector> start = std::nullopt,
    const CgOptions& cg = {}) {
    cfg.validate();
    opts.validate();
    bounds.validate(sc.params);

    std::mt19937_64 rng(opts.seed);
    OptimalityReport best;
    ControlVector best_u;
    bool have_best = false;
    std::vector<RestartSummary> summaries;

    for (int restart = 0; restart < opts.restarts; ++restart) {
        ControlVector u = restart == 0 ? (start ? *start : ControlVector::midpoints(bounds))
                                       : random_admissible(bounds, rng);
        u.check_admissible(bounds);

        OptimalityReport report;
        report.restart_index = restart;
        report.start = u;

        Trajectory traj = simulate(sc, u, {cg});
        double cost = evaluate_cost(sc, traj, u, cfg);
        double step = opts.initial_step;
        report.forward_solves = 1;

        for (int it = 0; it <= opts.max_iterations; ++it) {
            const LinearizedCoefficients lc = assemble_coeffs(sc, traj);
            const AdjointFields adj = solve_adjoint(sc, traj, lc, cg);
            const ControlVector g = reduced_gradient(sc, traj, adj, u, cfg);
            const ControlVector mu = weighted_means(sc, traj, adj);
            const double residual = optimality_residual(u, mu, cfg.alpha, bounds);

            double gnorm = 0.0;
            for (int sp = 0; sp < 4; ++sp)
                for (int j = 0; j < u.region_count(); ++j)
                    gnorm += g.u[sp][j] * g.u[sp][j];
            gnorm = std::sqrt(gnorm);

            report.history.push_back({it, cost, gnorm, residual, it == 0 ? 0.0 : step});
            report.u = u;
            report.mu = mu;
            report.gradient = g;
            report.residual = residual;
            report.final_cost = cost;

            if (residual <= opts.tolerance) {
                report.converged = true;
                break;
            }
            if (it == opts.max_iterations) break;

            if (opts.mode == OptimizeOptions::Mode::fixed_point) {
                ControlVector target = mu;
                for (int sp = 0; sp < 4; ++sp)
                    for (int j = 0; j < u.region_count(); ++j) target.u[sp][j] /= cfg.alpha;
                u = project(target, bounds);
                traj = simulate(sc, u, {cg});
                cost = evaluate_cost(sc, traj, u, cfg);
                ++report.forward_solves;
                continue;
            }

            // projected gradient with Armijo backtracking
            bool accepted = false;
            double tau = std::min(step, opts.max_step);
            for (int half = 0; half <= opts.max_backtracks; ++half) {
                ControlVector trial = u;
                for (int sp = 0; sp < 4; ++sp)
                    for (int j = 0; j < u.region_count(); ++j)
                        trial.u[sp][j] = u.u[sp][j] - tau * g.u[sp][j];
                trial = project(trial, bounds);

                double directional = 0.0;
                for (int sp = 0; sp < 4; ++sp)
                    for (int j = 0; j < u.region_count(); ++j)
                        directional += g.u[sp][j] * (trial.u[sp][j] - u.u[sp][j]);

                Trajectory trial_traj = simulate(sc, trial, {cg});
                const double trial_cost = evaluate_cost(sc, trial_traj, trial, cfg);
                ++report.forward_solves;

                if (trial_cost <= cost + opts.armijo_c * directional) {
                    u = trial;
                    traj = std::move(trial_traj);
                    cost = trial_cost;
                    step = tau * opts.step_growth;
                    accepted = true;
                    break;
                }
                tau *= opts.backtrack_factor;
            }
            if (!accepted)
                throw optimizer_error(
                    "line search failed after " + std::to_string(opts.max_backtracks) +
                    " halvings at iteration " + std::to_string(it) + " (cost " +
                    std::to_string(cost) + ", residual " + std::to_string(report.residual) + ")");
        }

        report.vi_min_inner =
            variational_inequality_min(report.u, report.gradient, bounds, rng);
        summaries.push_back({restart, report.final_cost, report.residual,
                             report.history.empty() ? 0 : report.history.back().iteration,
                             report.converged});

        if (!have_best || report.final_cost < best.final_cost) {
            best = report;
            best_u = report.u;
            have_best = true;
        }
    }
    best.restarts = std::move(summaries);
    return {best_u, best};
}

} // namespace seirdiff
