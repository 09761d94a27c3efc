#pragma once

// Model data: rate constants, transmission-rate and diffusion-law evaluators
// (pointwise Nemytskii evaluation), initial data, and the per-region control
// vector with its expansion to cellwise diffusion fields.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "seirdiff/errors.hpp"
#include "seirdiff/grid.hpp"

namespace seirdiff {

enum Species : int { SP_S = 0, SP_E = 1, SP_I = 2, SP_R = 3 };
inline constexpr std::array<const char*, 4> species_names{"s", "e", "i", "r"};

using Quad = std::array<Field, 4>;

inline Field total_population(const Quad& state) {
    Field n(state[SP_S].size());
    for (std::size_t c = 0; c < n.size(); ++c)
        n[c] = state[SP_S][c] + state[SP_E][c] + state[SP_I][c] + state[SP_R][c];
    return n;
}

// Piecewise-constant-in-time table with left-continuous lookup:
// gamma(t) = value_i on (t_i, t_{i+1}], gamma(0) = value_0.
struct GammaTable {
    std::vector<double> times;   // breakpoints, times[0] == 0
    std::vector<double> values;

    GammaTable() : times{0.0}, values{0.0} {}
    GammaTable(std::vector<double> t, std::vector<double> v)
        : times(std::move(t)), values(std::move(v)) {
        require(!times.empty() && times.size() == values.size(), "gamma table is empty or ragged");
        require(times.front() == 0.0, "gamma table must start at t = 0");
        for (std::size_t i = 1; i < times.size(); ++i)
            require(times[i] > times[i - 1], "gamma table breakpoints must be increasing");
        for (double v2 : values)
            require(v2 >= 0.0 && std::isfinite(v2), "gamma values must be nonnegative");
    }

    static GammaTable constant(double v) { return GammaTable({0.0}, {v}); }

    double operator()(double t) const {
        std::size_t i = 0;
        while (i + 1 < times.size() && times[i + 1] < t) ++i;
        return values[i];
    }

    double max_value() const { return *std::max_element(values.begin(), values.end()); }
};

struct Parameters {
    double sigma = 0.0;   // exposure-to-infection rate
    double phi_e = 0.0;   // exposed removal rate
    double phi_r = 0.0;   // infected removal rate
    GammaTable gamma;     // loss-of-immunity rate, bounded by gamma*
    double kappa_min = 0.0;  // global diffusion lower bound kappa_*
    double kappa_max = 0.0;  // global diffusion upper bound kappa^*

    void validate() const {
        require(sigma > 0.0, "sigma must be positive");
        require(phi_e > 0.0, "phi_e must be positive");
        require(phi_r > 0.0, "phi_r must be positive");
        require(kappa_min > 0.0, "kappa_min must be positive");
        require(kappa_max >= kappa_min, "kappa_max must be >= kappa_min");
    }
};

struct TransmissionShape {
    double n_sat = 1.0;     // saturating: beta0 / (1 + n / n_sat)
    double midpoint = 1.0;  // logistic-capped: beta0 / (1 + exp((n - midpoint) / width))
    double width = 0.25;
};

// Transmission rates beta_i, beta_e as functions of (x, t, n): a closed
// registry of shape functions with analytic derivatives, scaled per species
// and optionally by a per-cell multiplier in [0, 1]. Every form is total on R,
// bounded, and Lipschitz in the last argument.
class TransmissionRate {
public:
    enum class Form { constant, saturating, logistic_capped };
    using Shape = TransmissionShape;

    TransmissionRate(Form form, double beta_i0, double beta_e0, Shape shape = {},
                     Field multiplier = {})
        : form_(form), base_{beta_i0, beta_e0}, shape_(shape), mult_(std::move(multiplier)) {
        require(beta_i0 >= 0.0 && beta_e0 >= 0.0, "transmission base rates must be nonnegative");
        if (form_ == Form::saturating) require(shape_.n_sat > 0.0, "n_sat must be positive");
        if (form_ == Form::logistic_capped) require(shape_.width > 0.0, "logistic width must be positive");
        for (double m : mult_)
            require(m >= 0.0 && m <= 1.0, "spatial multiplier must lie in [0, 1]");
    }

    Form form() const { return form_; }
    double base_i() const { return base_[0]; }
    double base_e() const { return base_[1]; }
    bool has_multiplier() const { return !mult_.empty(); }
    const Field& multiplier() const { return mult_; }

    // Dimensionless shape in (0, bound_factor]; the saturating form is
    // extended below zero with 1 - tanh so it stays bounded and C^1 at 0.
    double shape_value(double zeta) const {
        switch (form_) {
            case Form::constant: return 1.0;
            case Form::saturating:
                return zeta >= 0.0 ? 1.0 / (1.0 + zeta / shape_.n_sat)
                                   : 1.0 - std::tanh(zeta / shape_.n_sat);
            case Form::logistic_capped: return sigmoid(-(zeta - shape_.midpoint) / shape_.width);
        }
        return 1.0;
    }

    double shape_derivative(double zeta) const {
        switch (form_) {
            case Form::constant: return 0.0;
            case Form::saturating: {
                if (zeta >= 0.0) {
                    const double d = 1.0 + zeta / shape_.n_sat;
                    return -1.0 / (shape_.n_sat * d * d);
                }
                const double c = std::cosh(zeta / shape_.n_sat);
                return -1.0 / (shape_.n_sat * c * c);
            }
            case Form::logistic_capped: {
                const double g = sigmoid(-(zeta - shape_.midpoint) / shape_.width);
                return -g * (1.0 - g) / shape_.width;
            }
        }
        return 0.0;
    }

    double beta_i(int cell, double /*t*/, double zeta) const {
        return base_[0] * mult(cell) * shape_value(zeta);
    }
    double beta_e(int cell, double /*t*/, double zeta) const {
        return base_[1] * mult(cell) * shape_value(zeta);
    }

    // beta(x, t, n(x)) cellwise for both species at once
    void eval(const Field& n, double /*t*/, Field& bi, Field& be) const {
        bi.resize(n.size());
        be.resize(n.size());
        for (std::size_t c = 0; c < n.size(); ++c) {
            const double phi = shape_value(n[c]) * mult(static_cast<int>(c));
            bi[c] = base_[0] * phi;
            be[c] = base_[1] * phi;
        }
    }

    void eval_prime(const Field& n, double /*t*/, Field& bip, Field& bep) const {
        bip.resize(n.size());
        bep.resize(n.size());
        for (std::size_t c = 0; c < n.size(); ++c) {
            const double dphi = shape_derivative(n[c]) * mult(static_cast<int>(c));
            bip[c] = base_[0] * dphi;
            bep[c] = base_[1] * dphi;
        }
    }

    // Declared bound beta*: sup over x and zeta of max(beta_i, beta_e).
    double bound() const {
        const double peak = form_ == Form::saturating ? 2.0 : 1.0;
        return std::max(base_[0], base_[1]) * peak;
    }

    // Declared Lipschitz constant for |beta_i(.,z1)-beta_i(.,z2)| + |beta_e ...|.
    double lipschitz() const {
        double slope = 0.0;
        switch (form_) {
            case Form::constant: slope = 0.0; break;
            case Form::saturating: slope = 1.0 / shape_.n_sat; break;
            case Form::logistic_capped: slope = 0.25 / shape_.width; break;
        }
        return (base_[0] + base_[1]) * slope;
    }

private:
    static double sigmoid(double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    }

    double mult(int cell) const { return mult_.empty() ? 1.0 : mult_[cell]; }

    Form form_;
    std::array<double, 2> base_;
    Shape shape_;
    Field mult_;
};

// State-dependent diffusion law kappa(n), one per species; bounded inside
// [lo(), hi()] by construction.
struct DiffusionLaw {
    enum class Form { constant, monod };
    Form form = Form::constant;
    double base = 0.1;
    double gain = 0.0;    // monod: base + gain * n+ / (n_ref + n+)
    double n_ref = 1.0;

    double operator()(double zeta) const {
        if (form == Form::constant) return base;
        const double zp = std::max(zeta, 0.0);
        return base + gain * zp / (n_ref + zp);
    }
    double lo() const { return gain >= 0.0 ? base : base + gain; }
    double hi() const { return gain >= 0.0 ? base + gain : base; }

    void validate(double kappa_min, double kappa_max, const std::string& who) const {
        if (form == Form::monod) require(n_ref > 0.0, who + ": n_ref must be positive");
        require(lo() > 0.0, who + ": diffusion law must stay positive");
        require(lo() >= kappa_min && hi() <= kappa_max,
                who + ": diffusion law range not contained in [kappa_min, kappa_max]");
    }
};

struct NonlinearDiffusion {
    std::array<DiffusionLaw, 4> law;
};

struct InitialData {
    Quad fields;

    void validate(int cell_count) const {
        for (int sp = 0; sp < 4; ++sp) {
            require(static_cast<int>(fields[sp].size()) == cell_count,
                    std::string("initial data for ") + species_names[sp] + " does not match grid");
            for (double v : fields[sp])
                require(v >= 0.0 && std::isfinite(v),
                        std::string("initial data for ") + species_names[sp] +
                            " must be nonnegative and finite");
        }
    }
};

// Per-entry closed intervals for the 4m control scalars, all inside
// [kappa_min, kappa_max].
struct ControlBounds {
    std::array<std::vector<double>, 4> lower, upper;

    int region_count() const { return static_cast<int>(lower[0].size()); }

    void validate(const Parameters& params) const {
        const std::size_t m = lower[0].size();
        require(m > 0, "control bounds are empty");
        for (int sp = 0; sp < 4; ++sp) {
            require(lower[sp].size() == m && upper[sp].size() == m,
                    "control bounds must cover every species and region");
            for (std::size_t j = 0; j < m; ++j) {
                const std::string who = std::string("control interval for species ") +
                                        species_names[sp] + ", region " + std::to_string(j + 1);
                require(lower[sp][j] <= upper[sp][j], "empty control interval: " + who);
                require(lower[sp][j] >= params.kappa_min && upper[sp][j] <= params.kappa_max,
                        who + " not contained in [kappa_min, kappa_max]");
            }
        }
    }
};

// The 4m scalars u_j^s, u_j^e, u_j^i, u_j^r. Also used for directions and
// gradients, where no admissibility is implied.
struct ControlVector {
    std::array<std::vector<double>, 4> u;

    ControlVector() = default;
    explicit ControlVector(int regions, double fill = 0.0) {
        for (auto& v : u) v.assign(regions, fill);
    }

    static ControlVector midpoints(const ControlBounds& bounds) {
        ControlVector cv(bounds.region_count());
        for (int sp = 0; sp < 4; ++sp)
            for (int j = 0; j < bounds.region_count(); ++j)
                cv.u[sp][j] = 0.5 * (bounds.lower[sp][j] + bounds.upper[sp][j]);
        return cv;
    }

    int region_count() const { return static_cast<int>(u[0].size()); }

    void check_admissible(const ControlBounds& bounds) const {
        require(region_count() == bounds.region_count(),
                "control vector region count does not match bounds");
        for (int sp = 0; sp < 4; ++sp)
            for (int j = 0; j < region_count(); ++j)
                require(u[sp][j] >= bounds.lower[sp][j] && u[sp][j] <= bounds.upper[sp][j],
                        std::string("control value for species ") + species_names[sp] +
                            ", region " + std::to_string(j + 1) + " outside its interval");
    }

};

// kappa_sp(x) = u_j^sp on region j; fields are time-independent.
inline std::array<Field, 4> expand_controls(const ControlVector& cv,
                                            const SubdomainPartition& part) {
    require(cv.region_count() == part.region_count,
            "control vector region count does not match partition");
    std::array<Field, 4> kappa;
    for (int sp = 0; sp < 4; ++sp) {
        kappa[sp].resize(part.label.size());
        for (std::size_t c = 0; c < part.label.size(); ++c)
            kappa[sp][c] = cv.u[sp][part.label[c]];
    }
    return kappa;
}

// Heuristic positivity guard for the time step:
// dt <= 0.5 / (beta* n_max + sigma + phi_e + phi_r + gamma*).
inline double dt_safe_bound(const Parameters& params, const TransmissionRate& rates,
                            double n_max) {
    return 0.5 / (rates.bound() * n_max + params.sigma + params.phi_e + params.phi_r +
                  params.gamma.max_value());
}

} // namespace seirdiff
