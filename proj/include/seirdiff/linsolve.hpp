#pragma once

// Conjugate gradient with Jacobi preconditioning for the per-species systems
// (diag(base) - div(kappa grad .)) x = b, which are symmetric positive
// definite whenever base > 0.

#include <cmath>
#include <string>
#include <vector>

#include "seirdiff/errors.hpp"
#include "seirdiff/grid.hpp"

namespace seirdiff {

struct CgOptions {
    double tolerance = 1e-12;   // relative residual, against ||b||
    int max_iterations = 0;     // 0: max(200, 4N)
};

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = true;
};

namespace detail {
inline double dot(const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
} // namespace detail

// Solves (diag(base) - L) x = b; x holds the initial guess on entry.
inline CgResult cg_solve(const Field& base, const DiffusionOperator& L, const Field& b,
                         Field& x, const CgOptions& opts = {}) {
    const std::size_t n = b.size();
    const int max_it = opts.max_iterations > 0 ? opts.max_iterations
                                               : std::max<int>(200, 4 * static_cast<int>(n));
    Field r(n), z(n), p(n), Ap(n), tmp(n);

    const Field& Ldiag = L.neg_diagonal();
    auto apply = [&](const Field& v, Field& out) {
        L.apply(v, tmp);
        for (std::size_t i = 0; i < n; ++i) out[i] = base[i] * v[i] - tmp[i];
    };

    const double bnorm = std::sqrt(detail::dot(b, b));
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        return {0, 0.0, true};
    }

    apply(x, Ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];

    auto precondition = [&](const Field& v, Field& out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = v[i] / (base[i] + Ldiag[i]);
    };

    precondition(r, z);
    p = z;
    double rz = detail::dot(r, z);
    double rnorm = std::sqrt(detail::dot(r, r));

    CgResult res;
    while (rnorm > opts.tolerance * bnorm && res.iterations < max_it) {
        apply(p, Ap);
        const double alpha = rz / detail::dot(p, Ap);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        precondition(r, z);
        const double rz_new = detail::dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rnorm = std::sqrt(detail::dot(r, r));
        ++res.iterations;
    }
    res.relative_residual = rnorm / bnorm;
    res.converged = rnorm <= opts.tolerance * bnorm;
    return res;
}

// As cg_solve, but non-convergence is an error with diagnostics.
inline CgResult cg_solve_checked(const Field& base, const DiffusionOperator& L, const Field& b,
                                 Field& x, const CgOptions& opts, const std::string& what) {
    const CgResult res = cg_solve(base, L, b, x, opts);
    if (!res.converged)
        throw solver_error("linear solve did not converge: " + what + " (relative residual " +
                           std::to_string(res.relative_residual) + " after " +
                           std::to_string(res.iterations) + " iterations, tolerance " +
                           std::to_string(opts.tolerance) + ")");
    return res;
}

} // namespace seirdiff
