#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "seirdiff/driver.hpp"

using namespace seirdiff;
namespace fs = std::filesystem;

namespace {

int dir_counter = 0;

fs::path fresh_dir() {
    fs::path p = fs::temp_directory_path() /
                 ("seirdiff_cli_" + std::to_string(::getpid()) + "_" +
                  std::to_string(dir_counter++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path write_config(const nlohmann::json& j) {
    const fs::path dir = fresh_dir();
    const fs::path p = dir / "config.json";
    std::ofstream f(p);
    f << j.dump(2);
    return p;
}

nlohmann::json tiny_config() {
    return nlohmann::json::parse(R"({
      "domain": {"dimension": 1, "extent": [1.0], "cells": [8]},
      "time": {"final": 0.5, "steps": 10},
      "regions": [
        {"box": [[0.0], [0.5]]},
        {"box": [[0.5], [1.0]]}
      ],
      "control_region": [{"box": [[0.0], [0.5]]}],
      "parameters": {
        "sigma": 0.3, "phi_e": 0.2, "phi_r": 0.25, "gamma": 0.05,
        "kappa_min": 0.01, "kappa_max": 1.0
      },
      "beta": {"form": "saturating", "beta_i0": 0.5, "beta_e0": 0.3, "n_sat": 1.5},
      "initial": {
        "s": {"uniform": 0.9},
        "e": {"regions": [0.05, 0.1]},
        "i": {"regions": [0.0, 0.08]},
        "r": {"uniform": 0.0}
      },
      "controls": {
        "bounds": {"s": [0.05, 0.8], "e": [0.05, 0.8], "i": [0.05, 0.8], "r": [0.05, 0.8]}
      },
      "cost": {"alpha": 0.1},
      "seed": 5
    })");
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(SEIRDIFF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("cmd_simulate writes trajectory, mass, and summary files") {
    const fs::path cfg = write_config(tiny_config());
    const fs::path out = fresh_dir();
    CommandOptions opts;
    opts.output_dir = out.string();
    opts.quiet = true;
    REQUIRE(cmd_simulate(cfg.string(), opts) == 0);
    REQUIRE(fs::exists(out / "trajectory.csv"));
    REQUIRE(fs::exists(out / "mass.csv"));
    REQUIRE(fs::exists(out / "summary.json"));

    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    REQUIRE(summary["conservation"]["max_relative_drift"].get<double>() <= 1e-10);
    REQUIRE(summary["negativity_warning"].get<bool>() == false);
    REQUIRE(summary["metadata"]["config"]["parameters"]["sigma"].get<double>() == 0.3);
}

TEST_CASE("zero initial data produces an all-zero trajectory file") {
    nlohmann::json j = tiny_config();
    j["initial"]["s"] = {{"uniform", 0.0}};
    j["initial"]["e"] = {{"uniform", 0.0}};
    j["initial"]["i"] = {{"uniform", 0.0}};
    j["initial"]["r"] = {{"uniform", 0.0}};
    const fs::path cfg = write_config(j);
    const fs::path out = fresh_dir();
    CommandOptions opts;
    opts.output_dir = out.string();
    opts.quiet = true;
    REQUIRE(cmd_simulate(cfg.string(), opts) == 0);

    std::istringstream rows(slurp(out / "trajectory.csv"));
    std::string line;
    bool seen_data = false;
    while (std::getline(rows, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("time,", 0) == 0) continue;
        seen_data = true;
        // every value column after time and region_id must be exactly 0
        std::size_t field = 0, pos = 0;
        while (pos <= line.size()) {
            const std::size_t next = line.find(',', pos);
            const std::string cell = line.substr(pos, next - pos);
            if (field >= 2) REQUIRE(cell == "0");
            if (next == std::string::npos) break;
            pos = next + 1;
            ++field;
        }
    }
    REQUIRE(seen_data);
}

TEST_CASE("reruns with the same config and seed are byte-identical") {
    const fs::path cfg = write_config(tiny_config());
    const fs::path out1 = fresh_dir(), out2 = fresh_dir();
    CommandOptions o1, o2;
    o1.output_dir = out1.string();
    o2.output_dir = out2.string();
    o1.quiet = o2.quiet = true;
    REQUIRE(cmd_simulate(cfg.string(), o1) == 0);
    REQUIRE(cmd_simulate(cfg.string(), o2) == 0);
    REQUIRE(slurp(out1 / "trajectory.csv") == slurp(out2 / "trajectory.csv"));
    REQUIRE(slurp(out1 / "mass.csv") == slurp(out2 / "mass.csv"));

    // summary differs only in the runtime field
    auto s1 = nlohmann::json::parse(slurp(out1 / "summary.json"));
    auto s2 = nlohmann::json::parse(slurp(out2 / "summary.json"));
    s1.erase("runtime_seconds");
    s2.erase("runtime_seconds");
    REQUIRE(s1 == s2);
}

TEST_CASE("snapshots are emitted at the configured cadence") {
    nlohmann::json j = tiny_config();
    j["output"] = {{"snapshot_every", 5}};
    const fs::path cfg = write_config(j);
    const fs::path out = fresh_dir();
    CommandOptions opts;
    opts.output_dir = out.string();
    opts.quiet = true;
    REQUIRE(cmd_simulate(cfg.string(), opts) == 0);
    REQUIRE(fs::exists(out / "fields_000000.csv"));
    REQUIRE(fs::exists(out / "fields_000005.csv"));
    REQUIRE(fs::exists(out / "fields_000010.csv"));
}

TEST_CASE("cmd_optimize on a pure-penalty scenario hits the lower bounds") {
    nlohmann::json j = tiny_config();
    j["initial"]["e"] = {{"uniform", 0.0}};
    j["initial"]["i"] = {{"uniform", 0.0}};
    const fs::path cfg = write_config(j);
    const fs::path out = fresh_dir();
    CommandOptions opts;
    opts.output_dir = out.string();
    opts.quiet = true;
    REQUIRE(cmd_optimize(cfg.string(), opts) == 0);

    const auto controls = nlohmann::json::parse(slurp(out / "controls.json"));
    REQUIRE(controls["converged"].get<bool>());
    REQUIRE(controls["residual"].get<double>() <= 1e-6);
    for (const auto& e : controls["entries"]) {
        REQUIRE(e["u"].get<double>() == Catch::Approx(0.05).margin(1e-9));
        REQUIRE(e["active_bound"].get<std::string>() == "lower");
    }

    // history costs nonincreasing
    std::istringstream rows(slurp(out / "history.csv"));
    std::string line;
    double prev = 0.0;
    bool first = true;
    while (std::getline(rows, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("iteration,", 0) == 0) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const double cost = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        if (!first) REQUIRE(cost <= prev + 1e-15);
        prev = cost;
        first = false;
    }
    REQUIRE(fs::exists(out / "summary.json"));  // simulation at the optimum
}

TEST_CASE("cmd_verify passes its checks on suitable scenarios") {
    const fs::path cfg = write_config(tiny_config());
    const fs::path out = fresh_dir();
    CommandOptions opts;
    opts.output_dir = out.string();
    opts.quiet = true;
    REQUIRE(cmd_verify(cfg.string(), "gradient", opts) == 0);
    REQUIRE(cmd_verify(cfg.string(), "duality", opts) == 0);
    REQUIRE(cmd_verify(cfg.string(), "conservation", opts) == 0);
    REQUIRE(cmd_verify(cfg.string(), "contdep", opts) == 0);
    REQUIRE(fs::exists(out / "verify_gradient.json"));
    REQUIRE(fs::exists(out / "verify_duality.json"));

    // coarse time grid fails the ode threshold -> exit 6
    REQUIRE(cmd_verify(cfg.string(), "ode", opts) == 6);
    const auto rep = nlohmann::json::parse(slurp(out / "verify_ode.json"));
    REQUIRE(rep["pass"].get<bool>() == false);

    REQUIRE(cmd_verify(cfg.string(), "no-such-check", opts) == 3);
}

TEST_CASE("state-dependent diffusion configs are limited to simulation checks") {
    nlohmann::json j = tiny_config();
    j["diffusion"] = nlohmann::json::parse(R"({
      "mode": "state-dependent",
      "kappa": {
        "s": {"form": "constant", "value": 0.1},
        "e": {"form": "constant", "value": 0.1},
        "i": {"form": "constant", "value": 0.1},
        "r": {"form": "constant", "value": 0.1}
      }
    })");
    const fs::path cfg = write_config(j);
    const fs::path out = fresh_dir();
    CommandOptions opts;
    opts.output_dir = out.string();
    opts.quiet = true;
    REQUIRE(cmd_simulate(cfg.string(), opts) == 0);
    REQUIRE(cmd_verify(cfg.string(), "conservation", opts) == 0);
    REQUIRE(cmd_optimize(cfg.string(), opts) == 3);
    REQUIRE(cmd_verify(cfg.string(), "gradient", opts) == 3);
}

TEST_CASE("exit codes through the binary") {
    REQUIRE(run_binary("simulate /nonexistent/config.json") == 2);

    nlohmann::json bad = tiny_config();
    bad["parameters"].erase("sigma");
    const fs::path badcfg = write_config(bad);
    REQUIRE(run_binary("simulate " + badcfg.string()) == 3);

    const fs::path cfg = write_config(tiny_config());
    const fs::path out = fresh_dir();
    REQUIRE(run_binary("simulate " + cfg.string() + " --output-dir " + out.string() +
                       " --quiet") == 0);
    REQUIRE(run_binary("verify " + cfg.string() + " --check conservation --output-dir " +
                       out.string() + " --quiet") == 0);

    // malformed JSON -> parse error
    const fs::path dir = fresh_dir();
    const fs::path mal = dir / "broken.json";
    std::ofstream f(mal);
    f << "{ not json";
    f.close();
    REQUIRE(run_binary("simulate " + mal.string()) == 2);

    // starved linear solver -> solver error
    nlohmann::json starved = tiny_config();
    starved["solver"] = {{"cg_tolerance", 1e-14}, {"cg_max_iterations", 1}};
    const fs::path scfg = write_config(starved);
    REQUIRE(run_binary("simulate " + scfg.string() + " --quiet") == 4);
}
