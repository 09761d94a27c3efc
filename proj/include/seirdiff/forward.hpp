#pragma once

// Time integration of the state system: backward Euler with implicit
// diffusion and semi-implicit reactions. Every reaction product is assembled
// once and added with opposite signs to exactly two equations, so the total
// population is conserved up to the linear-solver residual.
//
// Step k -> k+1, species solved in the order s, e, i, r:
//   s: (1/dt + beta_i(n^k) i^k + beta_e(n^k) e^k - div ks grad) s+ = s^k/dt + g r^k
//   e: (1/dt + sigma + phi_e - div ke grad) e+ = e^k/dt + P,  P = (bi i^k + be e^k) s+
//   i: (1/dt + phi_r - div ki grad) i+ = i^k/dt + sigma e+
//   r: (1/dt - div kr grad) r+ = r^k/dt + phi_r i+ + phi_e e+ - g r^k
// with g = gamma(t^{k+1}); the products P and g r^k reappear verbatim with
// the opposite sign, which is what makes the mass identity exact.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "seirdiff/errors.hpp"
#include "seirdiff/grid.hpp"
#include "seirdiff/linsolve.hpp"
#include "seirdiff/model.hpp"
#include "seirdiff/scenario.hpp"

namespace seirdiff {

enum class DiffusionMode { fixed_controls, state_dependent };

struct SimulateOptions {
    CgOptions cg;
    bool picard = false;        // state-dependent mode only
    int picard_max = 20;
    double picard_tolerance = 1e-10;
};

struct Trajectory {
    TimeGrid time;
    DiffusionMode mode = DiffusionMode::fixed_controls;
    std::vector<Quad> level;          // K+1 states
    std::array<Field, 4> kappa;       // expanded control fields (fixed mode only)
    bool negativity_warning = false;
    double min_value = 0.0;
    long total_cg_iterations = 0;
    double max_cg_residual = 0.0;

    int steps() const { return time.steps; }
};

namespace detail {

struct StepWork {
    Field n, bi, be, react, base, rhs, product;
};

// One backward-Euler step with the given operators; appends solver stats.
// frozen_n, when given, replaces n^k in the reaction coefficients (Picard).
inline Quad step_forward(const Scenario& sc, const Quad& cur, int k,
                         const std::array<DiffusionOperator, 4>& ops,
                         const CgOptions& cg, StepWork& w, Trajectory& stats,
                         const Field* frozen_n = nullptr) {
    const double dt = sc.dt();
    const double inv_dt = 1.0 / dt;
    const double t_k = sc.time.time(k);
    const double gamma_next = sc.params.gamma(sc.time.time(k + 1));
    const std::size_t n = cur[0].size();

    w.n = frozen_n ? *frozen_n : total_population(cur);
    sc.rates.eval(w.n, t_k, w.bi, w.be);
    w.react.resize(n);
    for (std::size_t c = 0; c < n; ++c)
        w.react[c] = w.bi[c] * cur[SP_I][c] + w.be[c] * cur[SP_E][c];

    Quad next = cur;  // warm start for CG
    auto solve = [&](Species sp, const char* label) {
        const CgResult res = cg_solve_checked(
            w.base, ops[sp], w.rhs, next[sp], cg,
            std::string(label) + " equation at step " + std::to_string(k + 1));
        stats.total_cg_iterations += res.iterations;
        stats.max_cg_residual = std::max(stats.max_cg_residual, res.relative_residual);
    };

    // s
    w.base.resize(n);
    w.rhs.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        w.base[c] = inv_dt + w.react[c];
        w.rhs[c] = cur[SP_S][c] * inv_dt + gamma_next * cur[SP_R][c];
    }
    solve(SP_S, "susceptible");

    // infection products, reused verbatim in the e equation
    w.product.resize(n);
    for (std::size_t c = 0; c < n; ++c) w.product[c] = w.react[c] * next[SP_S][c];

    // e
    for (std::size_t c = 0; c < n; ++c) {
        w.base[c] = inv_dt + sc.params.sigma + sc.params.phi_e;
        w.rhs[c] = cur[SP_E][c] * inv_dt + w.product[c];
    }
    solve(SP_E, "exposed");

    // i
    for (std::size_t c = 0; c < n; ++c) {
        w.base[c] = inv_dt + sc.params.phi_r;
        w.rhs[c] = cur[SP_I][c] * inv_dt + sc.params.sigma * next[SP_E][c];
    }
    solve(SP_I, "infected");

    // r
    for (std::size_t c = 0; c < n; ++c) {
        w.base[c] = inv_dt;
        w.rhs[c] = cur[SP_R][c] * inv_dt + sc.params.phi_r * next[SP_I][c] +
                   sc.params.phi_e * next[SP_E][c] - gamma_next * cur[SP_R][c];
    }
    solve(SP_R, "recovered");

    return next;
}

inline void track_min(Trajectory& traj, const Quad& state) {
    for (const auto& f : state)
        for (double v : f) {
            if (!std::isfinite(v))
                throw solver_error("non-finite state value at level " +
                                   std::to_string(traj.level.size() - 1));
            traj.min_value = std::min(traj.min_value, v);
        }
}

} // namespace detail

// Exposed single step with fixed diffusion fields; used by simulate and handy
// for scheme-level tests.
inline Quad step_forward(const Scenario& sc, const Quad& current, int k,
                         const std::array<Field, 4>& kappa, const CgOptions& cg = {}) {
    std::array<DiffusionOperator, 4> ops{
        DiffusionOperator(sc.domain, sc.faces, kappa[SP_S]),
        DiffusionOperator(sc.domain, sc.faces, kappa[SP_E]),
        DiffusionOperator(sc.domain, sc.faces, kappa[SP_I]),
        DiffusionOperator(sc.domain, sc.faces, kappa[SP_R])};
    detail::StepWork w;
    Trajectory stats;
    return detail::step_forward(sc, current, k, ops, cg, w, stats);
}

// Fixed piecewise-constant diffusion given by an admissible control vector.
inline Trajectory simulate(const Scenario& sc, const ControlVector& controls,
                           const SimulateOptions& opts = {}) {
    Trajectory traj;
    traj.time = sc.time;
    traj.mode = DiffusionMode::fixed_controls;
    // admissibility (values inside their intervals, intervals inside
    // [kappa_min, kappa_max]) is the caller's contract; the operator only
    // needs positivity, which lets finite-difference probes step outside
    traj.kappa = expand_controls(controls, sc.partition);

    std::array<DiffusionOperator, 4> ops{
        DiffusionOperator(sc.domain, sc.faces, traj.kappa[SP_S]),
        DiffusionOperator(sc.domain, sc.faces, traj.kappa[SP_E]),
        DiffusionOperator(sc.domain, sc.faces, traj.kappa[SP_I]),
        DiffusionOperator(sc.domain, sc.faces, traj.kappa[SP_R])};

    traj.level.reserve(sc.time.steps + 1);
    traj.level.push_back(sc.init.fields);
    detail::track_min(traj, traj.level.back());

    detail::StepWork w;
    for (int k = 0; k < sc.time.steps; ++k) {
        traj.level.push_back(detail::step_forward(sc, traj.level.back(), k, ops, opts.cg, w, traj));
        detail::track_min(traj, traj.level.back());
    }
    traj.negativity_warning = traj.min_value < -1e-10;
    return traj;
}

// State-dependent diffusion kappa(n), evaluated lazily at the previous
// level's n (lagged Nemytskii evaluation); the optional Picard loop refreshes
// both kappa and beta at the running iterate of n^{k+1}.
inline Trajectory simulate(const Scenario& sc, const NonlinearDiffusion& laws,
                           const SimulateOptions& opts = {}) {
    for (int sp = 0; sp < 4; ++sp)
        laws.law[sp].validate(sc.params.kappa_min, sc.params.kappa_max,
                              std::string("kappa law for ") + species_names[sp]);

    Trajectory traj;
    traj.time = sc.time;
    traj.mode = DiffusionMode::state_dependent;
    traj.level.reserve(sc.time.steps + 1);
    traj.level.push_back(sc.init.fields);
    detail::track_min(traj, traj.level.back());

    const int ncell = sc.cell_count();
    std::array<Field, 4> kappa;
    for (auto& f : kappa) f.resize(ncell);
    detail::StepWork w;

    for (int k = 0; k < sc.time.steps; ++k) {
        Field n_eval = total_population(traj.level.back());
        Quad next;
        const int sweeps = opts.picard ? opts.picard_max : 1;
        for (int it = 0; it < sweeps; ++it) {
            for (int sp = 0; sp < 4; ++sp)
                for (int c = 0; c < ncell; ++c) kappa[sp][c] = laws.law[sp](n_eval[c]);
            std::array<DiffusionOperator, 4> ops{
                DiffusionOperator(sc.domain, sc.faces, kappa[SP_S]),
                DiffusionOperator(sc.domain, sc.faces, kappa[SP_E]),
                DiffusionOperator(sc.domain, sc.faces, kappa[SP_I]),
                DiffusionOperator(sc.domain, sc.faces, kappa[SP_R])};
            // Frozen-coefficient solve from the level-k state; beta is frozen
            // at the same n as kappa.
            next = detail::step_forward(sc, traj.level.back(), k, ops, opts.cg, w, traj,
                                        &n_eval);
            if (!opts.picard) break;
            const Field n_new = total_population(next);
            double delta = 0.0;
            for (int c = 0; c < ncell; ++c)
                delta = std::max(delta, std::abs(n_new[c] - n_eval[c]));
            n_eval = n_new;
            if (delta <= opts.picard_tolerance) break;
        }
        traj.level.push_back(std::move(next));
        detail::track_min(traj, traj.level.back());
    }
    traj.negativity_warning = traj.min_value < -1e-10;
    return traj;
}

// Total population per level.
inline std::vector<double> mass_history(const Domain& domain, const Trajectory& traj) {
    std::vector<double> mass;
    mass.reserve(traj.level.size());
    for (const auto& q : traj.level) mass.push_back(integrate(domain, total_population(q)));
    return mass;
}

// Largest relative deviation of the total population from its initial value.
inline double conservation_drift(const Domain& domain, const Trajectory& traj) {
    const std::vector<double> mass = mass_history(domain, traj);
    const double m0 = mass.front();
    const double scale = std::max(std::abs(m0), 1e-300);
    double drift = 0.0;
    for (double m : mass) drift = std::max(drift, std::abs(m - m0) / scale);
    return drift;
}

} // namespace seirdiff
