#pragma once

#include <cstdint>
#include <vector>

#include "seirdiff/errors.hpp"
#include "seirdiff/model.hpp"

namespace seirdiff {

struct OptimizeOptions {
    int max_iterations = 500;
    double tolerance = 1e-6;        // on ||u - clamp(mu/alpha)||_inf
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    int max_backtracks = 40;
    double initial_step = 1.0;
    double step_growth = 2.0;
    double max_step = 1e6;
    enum class Mode { projected_gradient, fixed_point };
    Mode mode = Mode::projected_gradient;
    int restarts = 1;
    std::uint64_t seed = 0;

    void validate() const {
        require(max_iterations >= 0, "optimizer iteration cap must be nonnegative");
        require(tolerance >= 0.0, "optimizer tolerance must be nonnegative");
        require(armijo_c > 0.0 && armijo_c < 1.0, "armijo_c must lie in (0, 1)");
        require(backtrack_factor > 0.0 && backtrack_factor < 1.0,
                "backtrack factor must lie in (0, 1)");
        require(max_backtracks >= 1, "max_backtracks must be at least 1");
        require(initial_step > 0.0, "initial step must be positive");
        require(step_growth >= 1.0, "step growth must be >= 1");
        require(restarts >= 1, "restarts must be at least 1");
    }
};

struct IterationRecord {
    int iteration = 0;
    double cost = 0.0;
    double gradient_norm = 0.0;
    double residual = 0.0;
    double step = 0.0;
};

struct RestartSummary {
    int index = 0;
    double final_cost = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct OptimalityReport {
    ControlVector u;            // reported controls
    ControlVector mu;           // weighted space-time means per control entry
    ControlVector gradient;     // reduced gradient at u
    double residual = 0.0;      // ||u - clamp(mu/alpha)||_inf
    double final_cost = 0.0;
    bool converged = false;
    std::vector<IterationRecord> history;
    ControlVector start;
    int restart_index = 0;
    int forward_solves = 0;
    double vi_min_inner = 0.0;  // min <g, v-u> over sampled admissible v
    std::vector<RestartSummary> restarts;
};

} // namespace seirdiff
