#pragma once

// Scenario configuration: JSON ingestion, strict validation against every
// module invariant, default resolution, and a canonical echo whose dump is
// byte-stable (the echo reparses to the same configuration).

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seirdiff/control_types.hpp"
#include "seirdiff/errors.hpp"
#include "seirdiff/forward.hpp"
#include "seirdiff/io.hpp"
#include "seirdiff/model.hpp"
#include "seirdiff/scenario.hpp"

namespace seirdiff {

struct OutputOptions {
    std::string directory = "out";
    int snapshot_every = 0;  // 0: no field snapshots
};

struct SolverOptions {
    CgOptions cg;
};

struct ScenarioConfig {
    std::optional<Scenario> scenario;
    ControlBounds bounds;
    ControlVector controls;       // starting / simulation values
    double alpha = 1.0;           // control-penalty weight
    OptimizeOptions optimizer;
    SolverOptions solver;
    DiffusionMode mode = DiffusionMode::fixed_controls;
    NonlinearDiffusion laws;      // state-dependent mode only
    bool picard = false;          // optional inner iteration in kappa(n) mode
    OutputOptions output;
    std::uint64_t seed = 0;

    ordered_json echo;            // canonical resolved configuration
    std::string config_hash;      // FNV-1a over the canonical dump
    double dt_safe = 0.0;
    bool dt_exceeds_safe = false;

    const Scenario& sc() const { return *scenario; }
};

namespace cfg_detail {

using nlohmann::json;

inline std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline void expect_object(const json& j, const std::string& path) {
    if (!j.is_object())
        throw validation_error("field \"" + path + "\" must be an object");
}

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& path) {
    expect_object(j, path.empty() ? "<root>" : path);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw validation_error("unknown field \"" + join_path(path, it.key()) + "\"");
}

inline const json& get(const json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end())
        throw validation_error("missing required field \"" + join_path(path, key) + "\"");
    return *it;
}

inline const json* opt(const json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline double as_double(const json& j, const std::string& path) {
    if (!j.is_number())
        throw validation_error("field \"" + path + "\" must be a number");
    return j.get<double>();
}

inline int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer())
        throw validation_error("field \"" + path + "\" must be an integer");
    return j.get<int>();
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string())
        throw validation_error("field \"" + path + "\" must be a string");
    return j.get<std::string>();
}

inline double num(const json& j, const std::string& key, const std::string& path) {
    return as_double(get(j, key, path), join_path(path, key));
}

inline double num_or(const json& j, const std::string& key, const std::string& path,
                     double fallback) {
    const json* p = opt(j, key);
    return p ? as_double(*p, join_path(path, key)) : fallback;
}

inline int int_or(const json& j, const std::string& key, const std::string& path, int fallback) {
    const json* p = opt(j, key);
    return p ? as_int(*p, join_path(path, key)) : fallback;
}

inline Box parse_box(const json& j, int dim, const std::string& path) {
    if (!j.is_array() || j.size() != 2)
        throw validation_error("field \"" + path + "\" must be [[lo...],[hi...]]");
    Box b;
    b.lo = {0.0, 0.0};
    b.hi = {1.0, 1.0};
    for (int side = 0; side < 2; ++side) {
        const json& corner = j[side];
        if (!corner.is_array() || static_cast<int>(corner.size()) != dim)
            throw validation_error("field \"" + path + "\" corners must have " +
                                   std::to_string(dim) + " coordinate(s)");
        for (int a = 0; a < dim; ++a) {
            const double v = as_double(corner[a], path);
            (side == 0 ? b.lo : b.hi)[a] = v;
        }
    }
    for (int a = 0; a < dim; ++a)
        require(b.lo[a] < b.hi[a], "box \"" + path + "\" must have lo < hi per axis");
    return b;
}

inline ordered_json echo_box(const Box& b, int dim) {
    ordered_json lo = ordered_json::array(), hi = ordered_json::array();
    for (int a = 0; a < dim; ++a) {
        lo.push_back(b.lo[a]);
        hi.push_back(b.hi[a]);
    }
    return ordered_json::array({lo, hi});
}

inline std::vector<Box> parse_box_list(const json& j, int dim, const std::string& path) {
    if (!j.is_array())
        throw validation_error("field \"" + path + "\" must be an array of {\"box\": ...}");
    std::vector<Box> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        check_keys(j[i], {"box"}, p);
        out.push_back(parse_box(get(j[i], "box", p), dim, join_path(p, "box")));
    }
    return out;
}

// field spec: {"uniform": v} | {"regions": [v...]} | {"background": b, "gaussians": [...]}
inline Field parse_field_spec(const json& j, const Domain& domain,
                              const SubdomainPartition& part, const std::string& path) {
    expect_object(j, path);
    const int n = domain.cell_count();
    if (const json* u = opt(j, "uniform")) {
        check_keys(j, {"uniform"}, path);
        return Field(n, as_double(*u, join_path(path, "uniform")));
    }
    if (const json* r = opt(j, "regions")) {
        check_keys(j, {"regions"}, path);
        if (!r->is_array() || static_cast<int>(r->size()) != part.region_count)
            throw validation_error("field \"" + join_path(path, "regions") + "\" must list " +
                                   std::to_string(part.region_count) + " values");
        Field f(n);
        for (int c = 0; c < n; ++c)
            f[c] = as_double((*r)[part.label[c]], join_path(path, "regions"));
        return f;
    }
    if (opt(j, "gaussians")) {
        check_keys(j, {"background", "gaussians"}, path);
        const double bg = num_or(j, "background", path, 0.0);
        Field f(n, bg);
        const json& list = get(j, "gaussians", path);
        if (!list.is_array())
            throw validation_error("field \"" + join_path(path, "gaussians") + "\" must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string p = join_path(path, "gaussians[" + std::to_string(i) + "]");
            check_keys(list[i], {"center", "width", "amplitude"}, p);
            const json& ctr = get(list[i], "center", p);
            if (!ctr.is_array() || static_cast<int>(ctr.size()) != domain.dim)
                throw validation_error("field \"" + join_path(p, "center") + "\" must have " +
                                       std::to_string(domain.dim) + " coordinate(s)");
            std::array<double, 2> center{0.5, 0.5};
            for (int a = 0; a < domain.dim; ++a) center[a] = as_double(ctr[a], p);
            const double width = num(list[i], "width", p);
            const double amp = num(list[i], "amplitude", p);
            require(width > 0.0, "gaussian width in \"" + p + "\" must be positive");
            for (int c = 0; c < n; ++c) {
                const auto x = domain.center(c);
                double r2 = 0.0;
                for (int a = 0; a < domain.dim; ++a)
                    r2 += (x[a] - center[a]) * (x[a] - center[a]);
                f[c] += amp * std::exp(-r2 / (2.0 * width * width));
            }
        }
        return f;
    }
    throw validation_error("field \"" + path +
                           "\" must provide \"uniform\", \"regions\", or \"gaussians\"");
}

inline std::vector<std::array<double, 2>> parse_species_bounds(const json& j, int m,
                                                               const std::string& path) {
    std::vector<std::array<double, 2>> out;
    if (!j.is_array() || j.empty())
        throw validation_error("field \"" + path + "\" must be [lo, hi] or a list of [lo, hi]");
    if (j[0].is_number()) {
        if (j.size() != 2)
            throw validation_error("field \"" + path + "\" must be [lo, hi]");
        const double lo = as_double(j[0], path), hi = as_double(j[1], path);
        out.assign(m, {lo, hi});
        return out;
    }
    if (static_cast<int>(j.size()) != m)
        throw validation_error("field \"" + path + "\" must list one interval per region (" +
                               std::to_string(m) + ")");
    for (int i = 0; i < m; ++i) {
        const json& pair = j[i];
        if (!pair.is_array() || pair.size() != 2)
            throw validation_error("field \"" + path + "\" entries must be [lo, hi]");
        out.push_back({as_double(pair[0], path), as_double(pair[1], path)});
    }
    return out;
}

inline std::vector<double> parse_species_values(const json& j, int m, const std::string& path) {
    if (j.is_number()) return std::vector<double>(m, j.get<double>());
    if (!j.is_array() || static_cast<int>(j.size()) != m)
        throw validation_error("field \"" + path + "\" must be a number or a list of " +
                               std::to_string(m) + " values");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(as_double(v, path));
    return out;
}

inline DiffusionLaw parse_law(const json& j, const std::string& path) {
    DiffusionLaw law;
    const std::string form = as_string(get(j, "form", path), join_path(path, "form"));
    if (form == "constant") {
        check_keys(j, {"form", "value"}, path);
        law.form = DiffusionLaw::Form::constant;
        law.base = num(j, "value", path);
    } else if (form == "monod") {
        check_keys(j, {"form", "base", "gain", "n_ref"}, path);
        law.form = DiffusionLaw::Form::monod;
        law.base = num(j, "base", path);
        law.gain = num(j, "gain", path);
        law.n_ref = num(j, "n_ref", path);
    } else {
        throw validation_error("field \"" + join_path(path, "form") +
                               "\" must be \"constant\" or \"monod\"");
    }
    return law;
}

} // namespace cfg_detail

inline ScenarioConfig parse_config(const nlohmann::json& root) {
    using namespace cfg_detail;
    check_keys(root,
               {"domain", "time", "regions", "control_region", "parameters", "beta", "initial",
                "diffusion", "controls", "cost", "optimizer", "solver", "output", "seed"},
               "");

    ScenarioConfig out;

    // domain
    const json& jd = get(root, "domain", "");
    check_keys(jd, {"dimension", "extent", "cells"}, "domain");
    const int dim = as_int(get(jd, "dimension", "domain"), "domain.dimension");
    require(dim == 1 || dim == 2, "domain.dimension must be 1 or 2");
    const json& je = get(jd, "extent", "domain");
    const json& jc = get(jd, "cells", "domain");
    if (!je.is_array() || static_cast<int>(je.size()) != dim)
        throw validation_error("domain.extent must list one length per dimension");
    if (!jc.is_array() || static_cast<int>(jc.size()) != dim)
        throw validation_error("domain.cells must list one count per dimension");
    Domain domain = dim == 1 ? Domain::line(as_double(je[0], "domain.extent"),
                                            as_int(jc[0], "domain.cells"))
                             : Domain::rectangle(as_double(je[0], "domain.extent"),
                                                 as_double(je[1], "domain.extent"),
                                                 as_int(jc[0], "domain.cells"),
                                                 as_int(jc[1], "domain.cells"));

    // time
    const json& jt = get(root, "time", "");
    check_keys(jt, {"final", "steps"}, "time");
    TimeGrid time(num(jt, "final", "time"), as_int(get(jt, "steps", "time"), "time.steps"));

    // regions and control region
    const std::vector<Box> region_boxes = parse_box_list(get(root, "regions", ""), dim, "regions");
    std::vector<Box> control_boxes;
    bool control_whole_domain = true;
    if (const json* jcr = opt(root, "control_region")) {
        control_whole_domain = false;
        control_boxes = parse_box_list(*jcr, dim, "control_region");
    } else {
        // every cell center is strictly inside [0, extent)
        Box whole;
        whole.lo = {0.0, 0.0};
        whole.hi = {domain.extent[0], domain.extent[1]};
        control_boxes.push_back(whole);
    }
    SubdomainPartition partition = build_partition(domain, region_boxes, control_boxes);
    const int m = partition.region_count;

    // parameters
    const json& jp = get(root, "parameters", "");
    check_keys(jp, {"sigma", "phi_e", "phi_r", "gamma", "kappa_min", "kappa_max"}, "parameters");
    Parameters params;
    params.sigma = num(jp, "sigma", "parameters");
    params.phi_e = num(jp, "phi_e", "parameters");
    params.phi_r = num(jp, "phi_r", "parameters");
    params.kappa_min = num(jp, "kappa_min", "parameters");
    params.kappa_max = num(jp, "kappa_max", "parameters");
    const json& jg = get(jp, "gamma", "parameters");
    if (jg.is_number()) {
        params.gamma = GammaTable::constant(jg.get<double>());
    } else if (jg.is_array()) {
        std::vector<double> ts, vs;
        for (std::size_t i = 0; i < jg.size(); ++i) {
            const json& entry = jg[i];
            if (!entry.is_array() || entry.size() != 2)
                throw validation_error("parameters.gamma entries must be [t, value]");
            ts.push_back(as_double(entry[0], "parameters.gamma"));
            vs.push_back(as_double(entry[1], "parameters.gamma"));
        }
        params.gamma = GammaTable(std::move(ts), std::move(vs));
    } else {
        throw validation_error("parameters.gamma must be a number or a [t, value] table");
    }
    params.validate();

    // beta
    const json& jb = get(root, "beta", "");
    check_keys(jb, {"form", "beta_i0", "beta_e0", "n_sat", "midpoint", "width", "multiplier"},
               "beta");
    const std::string form_name = as_string(get(jb, "form", "beta"), "beta.form");
    TransmissionRate::Form form;
    TransmissionRate::Shape shape;
    if (form_name == "constant") {
        form = TransmissionRate::Form::constant;
    } else if (form_name == "saturating") {
        form = TransmissionRate::Form::saturating;
        shape.n_sat = num(jb, "n_sat", "beta");
    } else if (form_name == "logistic-capped") {
        form = TransmissionRate::Form::logistic_capped;
        shape.midpoint = num(jb, "midpoint", "beta");
        shape.width = num(jb, "width", "beta");
    } else {
        throw validation_error(
            "beta.form must be \"constant\", \"saturating\", or \"logistic-capped\"");
    }
    Field multiplier;
    double mult_background = 1.0;
    std::vector<std::pair<Box, double>> mult_boxes;
    if (const json* jm = opt(jb, "multiplier")) {
        check_keys(*jm, {"background", "boxes"}, "beta.multiplier");
        mult_background = num_or(*jm, "background", "beta.multiplier", 1.0);
        multiplier.assign(domain.cell_count(), mult_background);
        if (const json* jboxes = opt(*jm, "boxes")) {
            if (!jboxes->is_array())
                throw validation_error("beta.multiplier.boxes must be an array");
            for (std::size_t i = 0; i < jboxes->size(); ++i) {
                const std::string p = "beta.multiplier.boxes[" + std::to_string(i) + "]";
                check_keys((*jboxes)[i], {"box", "value"}, p);
                const Box b = parse_box(get((*jboxes)[i], "box", p), dim, p + ".box");
                const double v = num((*jboxes)[i], "value", p);
                mult_boxes.emplace_back(b, v);
                for (int c = 0; c < domain.cell_count(); ++c)
                    if (b.contains(domain.center(c), dim)) multiplier[c] = v;
            }
        }
    }
    TransmissionRate rates(form, num(jb, "beta_i0", "beta"), num(jb, "beta_e0", "beta"), shape,
                           multiplier);

    // initial data
    const json& ji = get(root, "initial", "");
    check_keys(ji, {"s", "e", "i", "r"}, "initial");
    InitialData init;
    ordered_json initial_echo;
    for (int sp = 0; sp < 4; ++sp) {
        const json& spec = get(ji, species_names[sp], "initial");
        init.fields[sp] = parse_field_spec(spec, domain, partition,
                                           std::string("initial.") + species_names[sp]);
        initial_echo[species_names[sp]] = ordered_json(spec);
    }
    init.validate(domain.cell_count());

    // diffusion mode
    ordered_json diffusion_echo;
    if (const json* jdm = opt(root, "diffusion")) {
        check_keys(*jdm, {"mode", "kappa", "picard"}, "diffusion");
        const std::string mode_name = as_string(get(*jdm, "mode", "diffusion"), "diffusion.mode");
        if (mode_name == "controls") {
            out.mode = DiffusionMode::fixed_controls;
            diffusion_echo["mode"] = "controls";
        } else if (mode_name == "state-dependent") {
            out.mode = DiffusionMode::state_dependent;
            const json& jk = get(*jdm, "kappa", "diffusion");
            check_keys(jk, {"s", "e", "i", "r"}, "diffusion.kappa");
            ordered_json kappa_echo;
            for (int sp = 0; sp < 4; ++sp) {
                const std::string p = std::string("diffusion.kappa.") + species_names[sp];
                out.laws.law[sp] = parse_law(get(jk, species_names[sp], "diffusion.kappa"), p);
                out.laws.law[sp].validate(params.kappa_min, params.kappa_max, p);
                kappa_echo[species_names[sp]] = ordered_json(get(jk, species_names[sp], p));
            }
            if (const json* jpic = opt(*jdm, "picard")) {
                if (!jpic->is_boolean())
                    throw validation_error("diffusion.picard must be a boolean");
                out.picard = jpic->get<bool>();
            }
            diffusion_echo["mode"] = "state-dependent";
            diffusion_echo["kappa"] = kappa_echo;
            diffusion_echo["picard"] = out.picard;
        } else {
            throw validation_error("diffusion.mode must be \"controls\" or \"state-dependent\"");
        }
    } else {
        diffusion_echo["mode"] = "controls";
    }

    // controls
    const json& jctl = get(root, "controls", "");
    check_keys(jctl, {"bounds", "values"}, "controls");
    const json& jbnd = get(jctl, "bounds", "controls");
    check_keys(jbnd, {"s", "e", "i", "r"}, "controls.bounds");
    for (int sp = 0; sp < 4; ++sp) {
        const auto pairs = parse_species_bounds(get(jbnd, species_names[sp], "controls.bounds"),
                                                m, std::string("controls.bounds.") +
                                                       species_names[sp]);
        out.bounds.lower[sp].clear();
        out.bounds.upper[sp].clear();
        for (const auto& pr : pairs) {
            out.bounds.lower[sp].push_back(pr[0]);
            out.bounds.upper[sp].push_back(pr[1]);
        }
    }
    out.bounds.validate(params);
    if (const json* jv = opt(jctl, "values")) {
        check_keys(*jv, {"s", "e", "i", "r"}, "controls.values");
        out.controls = ControlVector(m);
        for (int sp = 0; sp < 4; ++sp)
            out.controls.u[sp] = parse_species_values(
                get(*jv, species_names[sp], "controls.values"), m,
                std::string("controls.values.") + species_names[sp]);
        out.controls.check_admissible(out.bounds);
    } else {
        out.controls = ControlVector::midpoints(out.bounds);
    }

    // cost
    const json& jcost = get(root, "cost", "");
    check_keys(jcost, {"alpha"}, "cost");
    out.alpha = num(jcost, "alpha", "cost");
    require(out.alpha > 0.0, "cost.alpha must be positive");

    // optimizer
    if (const json* jo = opt(root, "optimizer")) {
        check_keys(*jo,
                   {"max_iterations", "tolerance", "armijo_c", "backtrack_factor",
                    "max_backtracks", "initial_step", "step_growth", "mode", "restarts"},
                   "optimizer");
        out.optimizer.max_iterations =
            int_or(*jo, "max_iterations", "optimizer", out.optimizer.max_iterations);
        out.optimizer.tolerance = num_or(*jo, "tolerance", "optimizer", out.optimizer.tolerance);
        out.optimizer.armijo_c = num_or(*jo, "armijo_c", "optimizer", out.optimizer.armijo_c);
        out.optimizer.backtrack_factor =
            num_or(*jo, "backtrack_factor", "optimizer", out.optimizer.backtrack_factor);
        out.optimizer.max_backtracks =
            int_or(*jo, "max_backtracks", "optimizer", out.optimizer.max_backtracks);
        out.optimizer.initial_step =
            num_or(*jo, "initial_step", "optimizer", out.optimizer.initial_step);
        out.optimizer.step_growth =
            num_or(*jo, "step_growth", "optimizer", out.optimizer.step_growth);
        out.optimizer.restarts = int_or(*jo, "restarts", "optimizer", out.optimizer.restarts);
        if (const json* jmode = opt(*jo, "mode")) {
            const std::string mode_name = as_string(*jmode, "optimizer.mode");
            if (mode_name == "projected-gradient")
                out.optimizer.mode = OptimizeOptions::Mode::projected_gradient;
            else if (mode_name == "fixed-point")
                out.optimizer.mode = OptimizeOptions::Mode::fixed_point;
            else
                throw validation_error(
                    "optimizer.mode must be \"projected-gradient\" or \"fixed-point\"");
        }
    }
    out.optimizer.validate();

    // solver
    if (const json* js = opt(root, "solver")) {
        check_keys(*js, {"cg_tolerance", "cg_max_iterations"}, "solver");
        out.solver.cg.tolerance =
            num_or(*js, "cg_tolerance", "solver", out.solver.cg.tolerance);
        out.solver.cg.max_iterations =
            int_or(*js, "cg_max_iterations", "solver", out.solver.cg.max_iterations);
        require(out.solver.cg.tolerance > 0.0 && out.solver.cg.tolerance < 1.0,
                "solver.cg_tolerance must lie in (0, 1)");
        require(out.solver.cg.max_iterations >= 0,
                "solver.cg_max_iterations must be nonnegative");
    }

    // output
    if (const json* jout = opt(root, "output")) {
        check_keys(*jout, {"directory", "snapshot_every"}, "output");
        if (const json* jdir = opt(*jout, "directory"))
            out.output.directory = as_string(*jdir, "output.directory");
        out.output.snapshot_every =
            int_or(*jout, "snapshot_every", "output", out.output.snapshot_every);
        require(out.output.snapshot_every >= 0, "output.snapshot_every must be nonnegative");
    }

    // seed
    if (const json* jseed = opt(root, "seed")) {
        if (!jseed->is_number_integer() || jseed->get<std::int64_t>() < 0)
            throw validation_error("seed must be a nonnegative integer");
        out.seed = jseed->get<std::uint64_t>();
    }

    out.scenario.emplace(domain, std::move(partition), time, params, std::move(rates),
                         std::move(init));
    out.dt_safe = out.scenario->dt_safe();
    out.dt_exceeds_safe = time.dt() > out.dt_safe;

    // canonical echo, in fixed key order; reparses to the same configuration
    ordered_json& echo = out.echo;
    echo["domain"] = ordered_json{{"dimension", dim}};
    {
        ordered_json ext = ordered_json::array(), cl = ordered_json::array();
        for (int a = 0; a < dim; ++a) {
            ext.push_back(domain.extent[a]);
            cl.push_back(domain.cells[a]);
        }
        echo["domain"]["extent"] = ext;
        echo["domain"]["cells"] = cl;
    }
    echo["time"] = ordered_json{{"final", time.final_time}, {"steps", time.steps}};
    {
        ordered_json regions = ordered_json::array();
        for (const Box& b : region_boxes) regions.push_back(ordered_json{{"box", echo_box(b, dim)}});
        echo["regions"] = regions;
        if (!control_whole_domain) {
            ordered_json ctrl = ordered_json::array();
            for (const Box& b : control_boxes) ctrl.push_back(ordered_json{{"box", echo_box(b, dim)}});
            echo["control_region"] = ctrl;
        }
    }
    {
        ordered_json gp;
        gp["sigma"] = params.sigma;
        gp["phi_e"] = params.phi_e;
        gp["phi_r"] = params.phi_r;
        ordered_json gt = ordered_json::array();
        for (std::size_t i = 0; i < params.gamma.times.size(); ++i)
            gt.push_back(ordered_json::array({params.gamma.times[i], params.gamma.values[i]}));
        gp["gamma"] = gt;
        gp["kappa_min"] = params.kappa_min;
        gp["kappa_max"] = params.kappa_max;
        echo["parameters"] = gp;
    }
    {
        ordered_json bj;
        bj["form"] = form_name;
        bj["beta_i0"] = out.scenario->rates.base_i();
        bj["beta_e0"] = out.scenario->rates.base_e();
        if (form == TransmissionRate::Form::saturating) bj["n_sat"] = shape.n_sat;
        if (form == TransmissionRate::Form::logistic_capped) {
            bj["midpoint"] = shape.midpoint;
            bj["width"] = shape.width;
        }
        if (!multiplier.empty()) {
            ordered_json mj;
            mj["background"] = mult_background;
            ordered_json boxes = ordered_json::array();
            for (const auto& [b, v] : mult_boxes)
                boxes.push_back(ordered_json{{"box", echo_box(b, dim)}, {"value", v}});
            mj["boxes"] = boxes;
            bj["multiplier"] = mj;
        }
        echo["beta"] = bj;
    }
    echo["initial"] = initial_echo;
    echo["diffusion"] = diffusion_echo;
    {
        ordered_json cj, bnd, val;
        for (int sp = 0; sp < 4; ++sp) {
            ordered_json pairs = ordered_json::array();
            ordered_json vals = ordered_json::array();
            for (int j = 0; j < m; ++j) {
                pairs.push_back(
                    ordered_json::array({out.bounds.lower[sp][j], out.bounds.upper[sp][j]}));
                vals.push_back(out.controls.u[sp][j]);
            }
            bnd[species_names[sp]] = pairs;
            val[species_names[sp]] = vals;
        }
        cj["bounds"] = bnd;
        cj["values"] = val;
        echo["controls"] = cj;
    }
    echo["cost"] = ordered_json{{"alpha", out.alpha}};
    {
        ordered_json oj;
        oj["max_iterations"] = out.optimizer.max_iterations;
        oj["tolerance"] = out.optimizer.tolerance;
        oj["armijo_c"] = out.optimizer.armijo_c;
        oj["backtrack_factor"] = out.optimizer.backtrack_factor;
        oj["max_backtracks"] = out.optimizer.max_backtracks;
        oj["initial_step"] = out.optimizer.initial_step;
        oj["step_growth"] = out.optimizer.step_growth;
        oj["mode"] = out.optimizer.mode == OptimizeOptions::Mode::projected_gradient
                         ? "projected-gradient"
                         : "fixed-point";
        oj["restarts"] = out.optimizer.restarts;
        echo["optimizer"] = oj;
    }
    echo["solver"] = ordered_json{{"cg_tolerance", out.solver.cg.tolerance},
                                  {"cg_max_iterations", out.solver.cg.max_iterations}};
    echo["output"] = ordered_json{{"directory", out.output.directory},
                                  {"snapshot_every", out.output.snapshot_every}};
    echo["seed"] = out.seed;

    out.config_hash = hex64(fnv1a(dump_json(out.echo)));
    return out;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw parse_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error("config parse error in " + path + ": " + e.what());
    }
    return parse_config(root);
}

} // namespace seirdiff
