#pragma once

// Exact linearization of the discrete forward map (tangent), its transpose
// (discrete adjoint), and the duality identity between them.
//
// The tangent is the derivative of the forward step: the same four linear
// systems with differentiated reaction couplings and source terms
// div(delta_kappa grad state^{k+1}), where delta_kappa is the directional
// derivative of the face transmissibilities (harmonic means included) with
// respect to the region controls. The adjoint runs the transposed step
// blocks backward in time (order r, i, e, s), so the reduced gradient it
// produces is the exact derivative of the discrete cost up to the linear
// solver tolerance.
//
// Adjoint scaling: the stored fields are the step multipliers divided by
// (cell volume * dt), which recovers the continuous-scale adjoint; level K
// is identically zero (terminal condition).

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "seirdiff/forward.hpp"
#include "seirdiff/grid.hpp"
#include "seirdiff/linsolve.hpp"
#include "seirdiff/model.hpp"
#include "seirdiff/scenario.hpp"

namespace seirdiff {

// Per-step reaction linearization around a fixed-diffusion trajectory.
// Products mix the levels exactly as the forward scheme does:
//   react = beta_i(n^k) i^k + beta_e(n^k) e^k            (implicit, on xi^{k+1})
//   dterm = (beta_i'(n^k) i^k + beta_e'(n^k) e^k) s^{k+1} (on all level-k vars)
//   bi_s  = beta_i(n^k) s^{k+1}                           (on iota^k)
//   be_s  = beta_e(n^k) s^{k+1}                           (on eta^k)
struct LinearizedCoefficients {
    int steps = 0;
    double sigma = 0.0, phi_e = 0.0, phi_r = 0.0;
    std::vector<Field> react, dterm, bi_s, be_s;  // one field per step
    std::vector<double> gamma_next;               // gamma(t^{k+1}) per step

    // Coefficient fields of the linearized reaction matrix, one accessor per
    // matrix entry. Rows 2-4 are derived from row 1 and the rate constants,
    // so their identities hold exactly by construction.
    Field A1(int k) const { return add(dterm[k], react[k]); }
    Field B1(int k) const { return add(dterm[k], be_s[k]); }
    Field C1(int k) const { return add(dterm[k], bi_s[k]); }
    Field D1(int k) const { return shift(dterm[k], -gamma_next[k]); }
    Field A2(int k) const { return negate(A1(k)); }
    Field B2(int k) const { return shift(negate(B1(k)), sigma + phi_e); }
    Field C2(int k) const { return negate(C1(k)); }
    Field D2(int k) const { return shift(negate(D1(k)), -gamma_next[k]); }
    Field A3(int k) const { return constant(k, 0.0); }
    Field B3(int k) const { return constant(k, -sigma); }
    Field C3(int k) const { return constant(k, phi_r); }
    Field D3(int k) const { return constant(k, 0.0); }
    Field A4(int k) const { return constant(k, 0.0); }
    Field B4(int k) const { return constant(k, -phi_e); }
    Field C4(int k) const { return constant(k, -phi_r); }
    Field D4(int k) const { return constant(k, gamma_next[k]); }

private:
    static Field add(const Field& a, const Field& b) {
        Field out(a.size());
        for (std::size_t c = 0; c < a.size(); ++c) out[c] = a[c] + b[c];
        return out;
    }
    static Field negate(Field a) {
        for (double& v : a) v = -v;
        return a;
    }
    static Field shift(Field a, double s) {
        for (double& v : a) v += s;
        return a;
    }
    Field constant(int k, double v) const { return Field(react[k].size(), v); }
};

struct TangentFields {
    std::vector<Quad> level;  // K+1, level 0 identically zero
};

struct AdjointFields {
    std::vector<Quad> level;  // K+1, level K identically zero
};

namespace detail {
inline void require_fixed_mode(const Trajectory& traj, const char* op) {
    if (traj.mode != DiffusionMode::fixed_controls)
        throw std::logic_error(std::string(op) +
                               " requires a trajectory from the fixed-diffusion forward mode");
}
} // namespace detail

inline LinearizedCoefficients assemble_coeffs(const Scenario& sc, const Trajectory& traj) {
    detail::require_fixed_mode(traj, "assemble_coeffs");
    const int K = traj.steps();
    const std::size_t n = sc.cell_count();
    LinearizedCoefficients lc;
    lc.steps = K;
    lc.sigma = sc.params.sigma;
    lc.phi_e = sc.params.phi_e;
    lc.phi_r = sc.params.phi_r;
    lc.react.resize(K);
    lc.dterm.resize(K);
    lc.bi_s.resize(K);
    lc.be_s.resize(K);
    lc.gamma_next.resize(K);

    Field bi, be, bip, bep;
    for (int k = 0; k < K; ++k) {
        const Quad& cur = traj.level[k];
        const Field& s_next = traj.level[k + 1][SP_S];
        const double t_k = sc.time.time(k);
        const Field nk = total_population(cur);
        sc.rates.eval(nk, t_k, bi, be);
        sc.rates.eval_prime(nk, t_k, bip, bep);
        lc.gamma_next[k] = sc.params.gamma(sc.time.time(k + 1));
        lc.react[k].resize(n);
        lc.dterm[k].resize(n);
        lc.bi_s[k].resize(n);
        lc.be_s[k].resize(n);
        for (std::size_t c = 0; c < n; ++c) {
            lc.react[k][c] = bi[c] * cur[SP_I][c] + be[c] * cur[SP_E][c];
            lc.dterm[k][c] = (bip[c] * cur[SP_I][c] + bep[c] * cur[SP_E][c]) * s_next[c];
            lc.bi_s[k][c] = bi[c] * s_next[c];
            lc.be_s[k][c] = be[c] * s_next[c];
        }
    }
    return lc;
}

namespace detail {

// Directional derivative of the face transmissibility with respect to the
// region controls: both harmonic-mean partials, attributed to the regions of
// the two adjacent cells.
struct FaceControlWeights {
    // per species, per face: weight toward left cell's region and right cell's region
    std::array<std::vector<double>, 4> w_left, w_right;
};

inline FaceControlWeights face_control_weights(const Scenario& sc, const Trajectory& traj) {
    FaceControlWeights fw;
    const std::size_t nf = sc.faces.size();
    for (int sp = 0; sp < 4; ++sp) {
        fw.w_left[sp].resize(nf);
        fw.w_right[sp].resize(nf);
        const Field& kap = traj.kappa[sp];
        for (std::size_t f = 0; f < nf; ++f) {
            const double a = kap[sc.faces[f].left];
            const double b = kap[sc.faces[f].right];
            const double den = (a + b) * (a + b);
            fw.w_left[sp][f] = sc.faces[f].geom * 2.0 * b * b / den;
            fw.w_right[sp][f] = sc.faces[f].geom * 2.0 * a * a / den;
        }
    }
    return fw;
}

inline std::array<DiffusionOperator, 4> trajectory_operators(const Scenario& sc,
                                                             const Trajectory& traj) {
    return {DiffusionOperator(sc.domain, sc.faces, traj.kappa[SP_S]),
            DiffusionOperator(sc.domain, sc.faces, traj.kappa[SP_E]),
            DiffusionOperator(sc.domain, sc.faces, traj.kappa[SP_I]),
            DiffusionOperator(sc.domain, sc.faces, traj.kappa[SP_R])};
}

// div(delta_kappa grad .) for the direction delta in control space.
inline std::array<DiffusionOperator, 4> delta_operators(const Scenario& sc,
                                                        const Trajectory& traj,
                                                        const ControlVector& delta) {
    require(delta.region_count() == sc.partition.region_count,
            "control direction region count does not match partition");
    const FaceControlWeights fw = face_control_weights(sc, traj);
    std::array<std::vector<double>, 4> tv;
    for (int sp = 0; sp < 4; ++sp) {
        tv[sp].resize(sc.faces.size());
        for (std::size_t f = 0; f < sc.faces.size(); ++f) {
            const int jl = sc.partition.label[sc.faces[f].left];
            const int jr = sc.partition.label[sc.faces[f].right];
            tv[sp][f] = fw.w_left[sp][f] * delta.u[sp][jl] + fw.w_right[sp][f] * delta.u[sp][jr];
        }
    }
    return {DiffusionOperator::from_face_values(sc.domain, sc.faces, std::move(tv[SP_S])),
            DiffusionOperator::from_face_values(sc.domain, sc.faces, std::move(tv[SP_E])),
            DiffusionOperator::from_face_values(sc.domain, sc.faces, std::move(tv[SP_I])),
            DiffusionOperator::from_face_values(sc.domain, sc.faces, std::move(tv[SP_R]))};
}

inline Quad zero_quad(std::size_t n) {
    return {Field(n, 0.0), Field(n, 0.0), Field(n, 0.0), Field(n, 0.0)};
}

inline Quad tangent_step_impl(const Scenario& sc, const Trajectory& traj,
                              const LinearizedCoefficients& lc, int k, const Quad& X,
                              const std::array<DiffusionOperator, 4>& ops,
                              const std::array<DiffusionOperator, 4>& dops,
                              const CgOptions& cg) {
    const std::size_t n = sc.cell_count();
    const double inv_dt = 1.0 / sc.dt();
    const double g = lc.gamma_next[k];
    Quad next = zero_quad(n);
    Field base(n), rhs(n), expl(n), src(n);

    auto solve = [&](Species sp, const char* label) {
        cg_solve_checked(base, ops[sp], rhs, next[sp], cg,
                         std::string("tangent ") + label + " at step " + std::to_string(k + 1));
    };

    // shared explicit reaction linearization, paired between xi and eta
    for (std::size_t c = 0; c < n; ++c) {
        const double dn = X[SP_S][c] + X[SP_E][c] + X[SP_I][c] + X[SP_R][c];
        expl[c] = lc.dterm[k][c] * dn + lc.be_s[k][c] * X[SP_E][c] + lc.bi_s[k][c] * X[SP_I][c];
    }

    dops[SP_S].apply(traj.level[k + 1][SP_S], src);
    for (std::size_t c = 0; c < n; ++c) {
        base[c] = inv_dt + lc.react[k][c];
        rhs[c] = X[SP_S][c] * inv_dt + g * X[SP_R][c] - expl[c] + src[c];
    }
    solve(SP_S, "xi");

    dops[SP_E].apply(traj.level[k + 1][SP_E], src);
    for (std::size_t c = 0; c < n; ++c) {
        base[c] = inv_dt + lc.sigma + lc.phi_e;
        rhs[c] = X[SP_E][c] * inv_dt + expl[c] + lc.react[k][c] * next[SP_S][c] + src[c];
    }
    solve(SP_E, "eta");

    dops[SP_I].apply(traj.level[k + 1][SP_I], src);
    for (std::size_t c = 0; c < n; ++c) {
        base[c] = inv_dt + lc.phi_r;
        rhs[c] = X[SP_I][c] * inv_dt + lc.sigma * next[SP_E][c] + src[c];
    }
    solve(SP_I, "iota");

    dops[SP_R].apply(traj.level[k + 1][SP_R], src);
    for (std::size_t c = 0; c < n; ++c) {
        base[c] = inv_dt;
        rhs[c] = X[SP_R][c] * inv_dt + lc.phi_r * next[SP_I][c] + lc.phi_e * next[SP_E][c] -
                 g * X[SP_R][c] + src[c];
    }
    solve(SP_R, "rho");

    return next;
}

} // namespace detail

// Derivative of one forward step applied to (X at level k, control direction).
inline Quad tangent_step(const Scenario& sc, const Trajectory& traj,
                         const LinearizedCoefficients& lc, int k, const Quad& X,
                         const ControlVector& delta, const CgOptions& cg = {}) {
    detail::require_fixed_mode(traj, "tangent_step");
    const auto ops = detail::trajectory_operators(sc, traj);
    const auto dops = detail::delta_operators(sc, traj, delta);
    return detail::tangent_step_impl(sc, traj, lc, k, X, ops, dops, cg);
}

// Forward-in-time sweep of the exact linearization in direction delta.
inline TangentFields solve_tangent(const Scenario& sc, const Trajectory& traj,
                                   const LinearizedCoefficients& lc, const ControlVector& delta,
                                   const CgOptions& cg = {}) {
    detail::require_fixed_mode(traj, "solve_tangent");
    const auto ops = detail::trajectory_operators(sc, traj);
    const auto dops = detail::delta_operators(sc, traj, delta);
    TangentFields tf;
    tf.level.reserve(traj.steps() + 1);
    tf.level.push_back(detail::zero_quad(sc.cell_count()));
    for (int k = 0; k < traj.steps(); ++k)
        tf.level.push_back(
            detail::tangent_step_impl(sc, traj, lc, k, tf.level.back(), ops, dops, cg));
    return tf;
}

// Backward sweep of the transposed step blocks. Sources are the tracking
// integrands e^k, i^k on the control region (trapezoidal cost weights, so the
// terminal level carries weight 1/2 into the last solve).
inline AdjointFields solve_adjoint(const Scenario& sc, const Trajectory& traj,
                                   const LinearizedCoefficients& lc, const CgOptions& cg = {}) {
    detail::require_fixed_mode(traj, "solve_adjoint");
    const auto ops = detail::trajectory_operators(sc, traj);
    const int K = traj.steps();
    const std::size_t n = sc.cell_count();
    const double inv_dt = 1.0 / sc.dt();

    AdjointFields af;
    af.level.assign(K + 1, detail::zero_quad(n));

    Quad rhs = detail::zero_quad(n);
    Field base(n);
    for (int k = K; k >= 1; --k) {
        const double weight = (k == K) ? 0.5 : 1.0;
        // tracking sources at level k
        for (std::size_t c = 0; c < n; ++c) {
            const double chi = sc.partition.control_mask[c] ? weight : 0.0;
            rhs[SP_S][c] = 0.0;
            rhs[SP_E][c] = chi * traj.level[k][SP_E][c];
            rhs[SP_I][c] = chi * traj.level[k][SP_I][c];
            rhs[SP_R][c] = 0.0;
        }
        if (k < K) {
            // transposed explicit couplings of step k, applied to level-k adjoint
            const Quad& P = af.level[k];
            for (std::size_t c = 0; c < n; ++c) {
                const double pq = P[SP_S][c] - P[SP_E][c];
                const double d = lc.dterm[k][c];
                rhs[SP_S][c] += P[SP_S][c] * inv_dt - d * pq;
                rhs[SP_E][c] += P[SP_E][c] * inv_dt - (d + lc.be_s[k][c]) * pq;
                rhs[SP_I][c] += P[SP_I][c] * inv_dt - (d + lc.bi_s[k][c]) * pq;
                rhs[SP_R][c] += P[SP_R][c] * inv_dt +
                                lc.gamma_next[k] * (P[SP_S][c] - P[SP_R][c]) - d * pq;
            }
        }

        Quad& out = af.level[k - 1];
        auto solve = [&](Species sp, const Field& b, const char* label) {
            cg_solve_checked(base, ops[sp], b, out[sp], cg,
                             std::string("adjoint ") + label + " at step " + std::to_string(k));
        };

        // transposed implicit couplings: solve order r, i, e, s
        base.assign(n, inv_dt);
        solve(SP_R, rhs[SP_R], "z");

        Field b(n);
        for (std::size_t c = 0; c < n; ++c) {
            base[c] = inv_dt + lc.phi_r;
            b[c] = rhs[SP_I][c] + lc.phi_r * out[SP_R][c];
        }
        solve(SP_I, b, "w");

        for (std::size_t c = 0; c < n; ++c) {
            base[c] = inv_dt + lc.sigma + lc.phi_e;
            b[c] = rhs[SP_E][c] + lc.sigma * out[SP_I][c] + lc.phi_e * out[SP_R][c];
        }
        solve(SP_E, b, "q");

        for (std::size_t c = 0; c < n; ++c) {
            base[c] = inv_dt + lc.react[k - 1][c];
            b[c] = rhs[SP_S][c] + lc.react[k - 1][c] * out[SP_E][c];
        }
        solve(SP_S, b, "p");
    }
    return af;
}

// Directional derivative of the tracking term through the tangent:
// sum_k w_k int_{Omega_C} (e^k eta^k + i^k iota^k).
inline double tracking_pairing(const Scenario& sc, const Trajectory& traj,
                               const TangentFields& tf) {
    const int K = traj.steps();
    const double dt = sc.dt();
    double sum = 0.0;
    Field integrand(sc.cell_count());
    for (int k = 1; k <= K; ++k) {
        const double w = (k == K) ? 0.5 * dt : dt;
        for (int c = 0; c < sc.cell_count(); ++c)
            integrand[c] = traj.level[k][SP_E][c] * tf.level[k][SP_E][c] +
                           traj.level[k][SP_I][c] * tf.level[k][SP_I][c];
        sum += w * integrate(sc.domain, integrand, sc.partition.control_mask);
    }
    return sum;
}

// Face-based space-time inner products int_{Q_j} grad(state) . grad(adjoint),
// one entry per control coordinate, weighted so the entries are the exact
// partial derivatives of the diffusion bilinear form along the trajectory.
inline ControlVector control_pairing(const Scenario& sc, const Trajectory& traj,
                                     const AdjointFields& adj) {
    detail::require_fixed_mode(traj, "control_pairing");
    const detail::FaceControlWeights fw = detail::face_control_weights(sc, traj);
    const int K = traj.steps();
    const double dt = sc.dt();
    ControlVector G(sc.partition.region_count, 0.0);
    for (int sp = 0; sp < 4; ++sp) {
        for (std::size_t f = 0; f < sc.faces.size(); ++f) {
            const Face& face = sc.faces[f];
            const int jl = sc.partition.label[face.left];
            const int jr = sc.partition.label[face.right];
            double acc = 0.0;
            for (int k = 0; k < K; ++k) {
                const Field& st = traj.level[k + 1][sp];
                const Field& ad = adj.level[k][sp];
                acc += (st[face.right] - st[face.left]) * (ad[face.right] - ad[face.left]);
            }
            acc *= dt;
            G.u[sp][jl] += fw.w_left[sp][f] * acc;
            G.u[sp][jr] += fw.w_right[sp][f] * acc;
        }
    }
    return G;
}

// |tangent route - adjoint route| of the tracking derivative in direction
// delta, normalized by the larger magnitude. Exactly zero in exact
// arithmetic; bounded by the linear-solver tolerance in practice.
inline double duality_gap(const Scenario& sc, const Trajectory& traj,
                          const LinearizedCoefficients& lc, const ControlVector& delta,
                          const CgOptions& cg = {}) {
    const TangentFields tf = solve_tangent(sc, traj, lc, delta, cg);
    const AdjointFields af = solve_adjoint(sc, traj, lc, cg);
    const ControlVector G = control_pairing(sc, traj, af);
    const double via_tangent = tracking_pairing(sc, traj, tf);
    double via_adjoint = 0.0;
    for (int sp = 0; sp < 4; ++sp)
        for (int j = 0; j < G.region_count(); ++j)
            via_adjoint -= G.u[sp][j] * delta.u[sp][j];
    const double scale = std::max({std::abs(via_tangent), std::abs(via_adjoint), 1e-300});
    const double gap = std::abs(via_tangent - via_adjoint);
    return gap == 0.0 ? 0.0 : gap / scale;
}

} // namespace seirdiff
