#pragma once

// Command implementations behind the CLI: configuration ingestion, the
// simulate / optimize / verify workflows, and deterministic result emission.
// Exit codes: 0 ok, 2 parse, 3 validation, 4 solver, 5 optimizer,
// 6 verification threshold violation.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "seirdiff/config.hpp"
#include "seirdiff/control.hpp"
#include "seirdiff/forward.hpp"
#include "seirdiff/io.hpp"
#include "seirdiff/verify.hpp"
#include "seirdiff/version.hpp"

namespace seirdiff {

struct CommandOptions {
    std::string output_dir;              // empty: take from config
    std::optional<std::uint64_t> seed;   // overrides config seed
    bool quiet = false;
};

namespace cli_detail {

inline int run_guarded(const std::function<int()>& body, bool quiet) {
    try {
        return body();
    } catch (const parse_error& e) {
        if (!quiet) std::cerr << "error (parse): " << e.what() << "\n";
        return 2;
    } catch (const validation_error& e) {
        if (!quiet) std::cerr << "error (validation): " << e.what() << "\n";
        return 3;
    } catch (const solver_error& e) {
        if (!quiet) std::cerr << "error (solver): " << e.what() << "\n";
        return 4;
    } catch (const optimizer_error& e) {
        if (!quiet) std::cerr << "error (optimizer): " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        if (!quiet) std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline ScenarioConfig load_with_overrides(const std::string& path, const CommandOptions& opts) {
    ScenarioConfig cfg = load_config(path);
    if (!opts.output_dir.empty()) cfg.output.directory = opts.output_dir;
    if (opts.seed) cfg.seed = *opts.seed;
    if (cfg.dt_exceeds_safe && !opts.quiet)
        std::cerr << "warning: dt = " << format_double(cfg.sc().dt())
                  << " exceeds the positivity guideline dt_safe = "
                  << format_double(cfg.dt_safe) << "\n";
    return cfg;
}

inline ordered_json metadata_block(const ScenarioConfig& cfg, const std::string& command) {
    const Scenario& sc = cfg.sc();
    ordered_json md;
    md["tool"] = "seirdiff";
    md["version"] = version;
    md["command"] = command;
    md["config_hash"] = cfg.config_hash;
    ordered_json grid;
    grid["dimension"] = sc.domain.dim;
    ordered_json cells = ordered_json::array(), extent = ordered_json::array();
    for (int a = 0; a < sc.domain.dim; ++a) {
        cells.push_back(sc.domain.cells[a]);
        extent.push_back(sc.domain.extent[a]);
    }
    grid["cells"] = cells;
    grid["extent"] = extent;
    md["grid"] = grid;
    md["time_grid"] = ordered_json{{"final", sc.time.final_time}, {"steps", sc.time.steps}};
    md["regions"] = sc.partition.region_count;
    md["seed"] = cfg.seed;
    md["config"] = cfg.echo;
    return md;
}

inline void csv_metadata(CsvWriter& csv, const ScenarioConfig& cfg, const std::string& what) {
    const Scenario& sc = cfg.sc();
    csv.comment("seirdiff " + what);
    csv.comment("version: " + std::string(version));
    csv.comment("config_hash: " + cfg.config_hash);
    std::string grid = std::to_string(sc.domain.dim) + "d cells=";
    for (int a = 0; a < sc.domain.dim; ++a)
        grid += (a ? "x" : "") + std::to_string(sc.domain.cells[a]);
    csv.comment("grid: " + grid);
    csv.comment("steps: " + std::to_string(sc.time.steps));
    csv.comment("regions: " + std::to_string(sc.partition.region_count));
    csv.comment("seed: " + std::to_string(cfg.seed));
}

inline Trajectory run_forward(const ScenarioConfig& cfg) {
    SimulateOptions opts;
    opts.cg = cfg.solver.cg;
    opts.picard = cfg.picard;
    if (cfg.mode == DiffusionMode::fixed_controls) return simulate(cfg.sc(), cfg.controls, opts);
    return simulate(cfg.sc(), cfg.laws, opts);
}

inline void write_trajectory_csv(const std::string& path, const ScenarioConfig& cfg,
                                 const Trajectory& traj) {
    const Scenario& sc = cfg.sc();
    const int m = sc.partition.region_count;
    CsvWriter csv;
    csv_metadata(csv, cfg, "trajectory (region-mean densities)");
    csv.header("time,region_id,s,e,i,r,n");
    std::vector<double> acc(m);
    for (int k = 0; k <= traj.steps(); ++k) {
        const double t = sc.time.time(k);
        std::array<std::vector<double>, 4> mean;
        for (int sp = 0; sp < 4; ++sp) {
            mean[sp].assign(m, 0.0);
            for (int c = 0; c < sc.cell_count(); ++c)
                mean[sp][sc.partition.label[c]] += traj.level[k][sp][c];
        }
        for (int j = 0; j < m; ++j) {
            const double cells_in_region =
                sc.partition.region_measure[j] / sc.domain.cell_volume();
            csv.begin_row();
            csv.cell(t);
            csv.cell(j + 1);
            double n = 0.0;
            for (int sp = 0; sp < 4; ++sp) {
                const double v = mean[sp][j] / cells_in_region;
                csv.cell(v);
                n += v;
            }
            csv.cell(n);
            csv.end_row();
        }
    }
    csv.save(path);
}

inline void write_mass_csv(const std::string& path, const ScenarioConfig& cfg,
                           const Trajectory& traj) {
    const Scenario& sc = cfg.sc();
    const auto mass = mass_history(sc.domain, traj);
    const double m0 = mass.front();
    const double scale = std::max(std::abs(m0), 1e-300);
    CsvWriter csv;
    csv_metadata(csv, cfg, "total population per time level");
    csv.header("time,total_n,relative_drift");
    for (int k = 0; k <= traj.steps(); ++k) {
        csv.begin_row();
        csv.cell(sc.time.time(k));
        csv.cell(mass[k]);
        csv.cell((mass[k] - m0) / scale);
        csv.end_row();
    }
    csv.save(path);
}

inline void write_snapshots(const std::string& dir, const ScenarioConfig& cfg,
                            const Trajectory& traj) {
    if (cfg.output.snapshot_every <= 0) return;
    const Scenario& sc = cfg.sc();
    for (int k = 0; k <= traj.steps(); ++k) {
        if (k % cfg.output.snapshot_every != 0 && k != traj.steps()) continue;
        CsvWriter csv;
        csv_metadata(csv, cfg, "field snapshot at level " + std::to_string(k));
        csv.header("cell,x,y,s,e,i,r,n");
        for (int c = 0; c < sc.cell_count(); ++c) {
            const auto x = sc.domain.center(c);
            csv.begin_row();
            csv.cell(c);
            csv.cell(x[0]);
            csv.cell(sc.domain.dim == 2 ? x[1] : 0.0);
            double n = 0.0;
            for (int sp = 0; sp < 4; ++sp) {
                csv.cell(traj.level[k][sp][c]);
                n += traj.level[k][sp][c];
            }
            csv.cell(n);
            csv.end_row();
        }
        char name[32];
        std::snprintf(name, sizeof(name), "fields_%06d.csv", k);
        csv.save(dir + "/" + name);
    }
}

inline ordered_json simulation_summary(const ScenarioConfig& cfg, const Trajectory& traj,
                                       double runtime_seconds, const std::string& command) {
    const Scenario& sc = cfg.sc();
    ordered_json summary;
    summary["metadata"] = metadata_block(cfg, command);
    ordered_json final_mass;
    double total = 0.0;
    for (int sp = 0; sp < 4; ++sp) {
        const double msp = integrate(sc.domain, traj.level.back()[sp]);
        final_mass[species_names[sp]] = msp;
        total += msp;
    }
    final_mass["total"] = total;
    summary["final_mass"] = final_mass;
    ordered_json min_values;
    for (int sp = 0; sp < 4; ++sp) {
        double mn = traj.level[0][sp][0];
        for (const auto& level : traj.level)
            for (double v : level[sp]) mn = std::min(mn, v);
        min_values[species_names[sp]] = mn;
    }
    summary["min_values"] = min_values;
    const auto mass = mass_history(sc.domain, traj);
    summary["conservation"] =
        ordered_json{{"initial_total", mass.front()},
                     {"max_relative_drift", conservation_drift(sc.domain, traj)}};
    summary["negativity_warning"] = traj.negativity_warning;
    summary["cg"] = ordered_json{{"total_iterations", traj.total_cg_iterations},
                                 {"max_relative_residual", traj.max_cg_residual}};
    summary["runtime_seconds"] = runtime_seconds;
    return summary;
}

inline void emit_simulation_files(const ScenarioConfig& cfg, const Trajectory& traj,
                                  double runtime_seconds, const std::string& command) {
    const std::string dir = cfg.output.directory;
    std::filesystem::create_directories(dir);
    write_trajectory_csv(dir + "/trajectory.csv", cfg, traj);
    write_mass_csv(dir + "/mass.csv", cfg, traj);
    write_snapshots(dir, cfg, traj);
    write_json_file(dir + "/summary.json",
                    simulation_summary(cfg, traj, runtime_seconds, command));
}

} // namespace cli_detail

inline int cmd_simulate(const std::string& config_path, const CommandOptions& opts = {}) {
    return cli_detail::run_guarded(
        [&]() {
            ScenarioConfig cfg = cli_detail::load_with_overrides(config_path, opts);
            const auto t0 = std::chrono::steady_clock::now();
            const Trajectory traj = cli_detail::run_forward(cfg);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            cli_detail::emit_simulation_files(cfg, traj, secs, "simulate");
            if (!opts.quiet) {
                std::cout << "simulate: " << cfg.sc().time.steps << " steps, drift "
                          << format_double(conservation_drift(cfg.sc().domain, traj))
                          << ", outputs in " << cfg.output.directory << "\n";
                if (traj.negativity_warning)
                    std::cerr << "warning: fields dipped below -1e-10 (min "
                              << format_double(traj.min_value) << ")\n";
            }
            return 0;
        },
        opts.quiet);
}

inline int cmd_optimize(const std::string& config_path, const CommandOptions& opts = {}) {
    return cli_detail::run_guarded(
        [&]() {
            ScenarioConfig cfg = cli_detail::load_with_overrides(config_path, opts);
            require(cfg.mode == DiffusionMode::fixed_controls,
                    "optimize requires diffusion.mode \"controls\"");
            const Scenario& sc = cfg.sc();
            const std::string dir = cfg.output.directory;
            std::filesystem::create_directories(dir);

            OptimizeOptions oopts = cfg.optimizer;
            oopts.seed = cfg.seed;
            const CostConfig cost{cfg.alpha};

            const auto t0 = std::chrono::steady_clock::now();
            auto [u_star, report] =
                optimize(sc, cfg.bounds, cost, oopts, cfg.controls, cfg.solver.cg);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            // controls.json
            ordered_json cj;
            cj["metadata"] = cli_detail::metadata_block(cfg, "optimize");
            cj["alpha"] = cfg.alpha;
            cj["converged"] = report.converged;
            cj["iterations"] =
                report.history.empty() ? 0 : report.history.back().iteration;
            cj["final_cost"] = report.final_cost;
            cj["residual"] = report.residual;
            cj["vi_min_inner_product"] = report.vi_min_inner;
            cj["forward_solves"] = report.forward_solves;
            cj["runtime_seconds"] = secs;
            ordered_json entries = ordered_json::array();
            for (int sp = 0; sp < 4; ++sp) {
                for (int j = 0; j < u_star.region_count(); ++j) {
                    const double lo = cfg.bounds.lower[sp][j], hi = cfg.bounds.upper[sp][j];
                    const double target =
                        std::max(lo, std::min(hi, report.mu.u[sp][j] / cfg.alpha));
                    ordered_json e;
                    e["species"] = species_names[sp];
                    e["region"] = j + 1;
                    e["lower"] = lo;
                    e["upper"] = hi;
                    e["u"] = u_star.u[sp][j];
                    e["mu"] = report.mu.u[sp][j];
                    e["clamp_target"] = target;
                    e["active_bound"] = u_star.u[sp][j] <= lo   ? "lower"
                                        : u_star.u[sp][j] >= hi ? "upper"
                                                                : "interior";
                    entries.push_back(e);
                }
            }
            cj["entries"] = entries;
            ordered_json restarts = ordered_json::array();
            for (const auto& r : report.restarts)
                restarts.push_back(ordered_json{{"index", r.index},
                                                {"final_cost", r.final_cost},
                                                {"residual", r.residual},
                                                {"iterations", r.iterations},
                                                {"converged", r.converged}});
            cj["restarts"] = restarts;
            write_json_file(dir + "/controls.json", cj);

            // history.csv
            CsvWriter hist;
            cli_detail::csv_metadata(hist, cfg, "optimizer history");
            hist.header("iteration,cost,gradient_norm,residual,step_size");
            for (const auto& rec : report.history) {
                hist.begin_row();
                hist.cell(rec.iteration);
                hist.cell(rec.cost);
                hist.cell(rec.gradient_norm);
                hist.cell(rec.residual);
                hist.cell(rec.step);
                hist.end_row();
            }
            hist.save(dir + "/history.csv");

            // simulation outputs at the reported controls
            ScenarioConfig at_optimum = cfg;
            at_optimum.controls = u_star;
            const auto t1 = std::chrono::steady_clock::now();
            const Trajectory traj = cli_detail::run_forward(at_optimum);
            const double sim_secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
            cli_detail::emit_simulation_files(at_optimum, traj, sim_secs, "optimize");

            if (!opts.quiet)
                std::cout << "optimize: " << (report.converged ? "converged" : "iteration cap")
                          << ", cost " << format_double(report.final_cost) << ", residual "
                          << format_double(report.residual) << ", outputs in " << dir << "\n";
            return 0;
        },
        opts.quiet);
}

inline int cmd_verify(const std::string& config_path, const std::string& check,
                      const CommandOptions& opts = {}) {
    return cli_detail::run_guarded(
        [&]() {
            ScenarioConfig cfg = cli_detail::load_with_overrides(config_path, opts);
            const Scenario& sc = cfg.sc();
            const std::string dir = cfg.output.directory;
            std::filesystem::create_directories(dir);

            const bool fixed = cfg.mode == DiffusionMode::fixed_controls;
            CheckResult result;
            if (check == "gradient") {
                require(fixed, "gradient check requires diffusion.mode \"controls\"");
                result = gradient_check(sc, cfg.controls, cfg.alpha, cfg.solver.cg);
            } else if (check == "duality") {
                require(fixed, "duality check requires diffusion.mode \"controls\"");
                result = duality_check(sc, cfg.controls, cfg.seed, cfg.solver.cg);
            } else if (check == "conservation") {
                result = conservation_check(sc, cli_detail::run_forward(cfg));
            } else if (check == "ode") {
                require(fixed, "ode check requires diffusion.mode \"controls\"");
                result = ode_check(sc, cfg.controls, cfg.solver.cg);
            } else if (check == "contdep") {
                require(fixed, "contdep check requires diffusion.mode \"controls\"");
                result = contdep_check(sc, cfg.controls, cfg.seed, cfg.solver.cg);
            } else {
                throw validation_error(
                    "unknown check \"" + check +
                    "\" (expected gradient, duality, conservation, ode, or contdep)");
            }

            ordered_json report;
            report["metadata"] = cli_detail::metadata_block(cfg, "verify");
            report["check"] = check;
            report["pass"] = result.pass;
            report["details"] = result.details;
            write_json_file(dir + "/verify_" + check + ".json", report);

            if (!opts.quiet)
                std::cout << (result.pass ? "[PASS] " : "[FAIL] ") << check << ": "
                          << dump_json(result.details);
            return result.pass ? 0 : 6;
        },
        opts.quiet);
}

} // namespace seirdiff
