// hflow: scenario runner over the library.  Each scenario is one JSON config;
// defaults are merged in, echoed as config.resolved.json and the results are
// written next to it as CSV (numeric tables) and JSON lines (reports).
//
// Exit codes: 0 all checks pass, 1 property failure, 2 config error,
// 3 solver non-convergence.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "hflow/hflow.hpp"

namespace fs = std::filesystem;
using namespace hflow;
using io::json;

namespace {

enum Exit : int { ok = 0, property_failure = 1, config_error = 2, solver_failure = 3 };

struct Options {
    std::vector<std::string> configs;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string out;
    std::vector<std::string> sets;
    // verify only
    std::string suite;
    std::string space;
};

Error config_error_at(const std::string& path, const std::string& what)
{
    return Error(Errc::invalid_config, path + ": " + what);
}

// ---------------------------------------------------------------------------
// Config plumbing

json parse_value(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return text;
    }
}

/// key=value with a dotted key; numeric segments index arrays.
void apply_set(json& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw config_error_at("--set", "expected key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    json* node = &cfg;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty())
            throw config_error_at("--set " + key, "empty path segment");
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(part);
            } catch (const std::exception&) {
                throw config_error_at("--set " + key, "'" + part + "' is not an array index");
            }
            if (idx >= node->size())
                throw config_error_at("--set " + key, "index " + part + " out of range");
            node = &(*node)[idx];
        } else {
            if (!node->is_object())
                *node = json::object();
            node = &(*node)[part];
        }
    }
    *node = parse_value(assignment.substr(eq + 1));
}

/// Rejects keys that the defaults do not know; nested objects of the
/// defaults are checked recursively; null defaults and descriptors (objects
/// with a "kind") are free-form.
void check_keys(const json& user, const json& defaults, const std::string& path)
{
    if (!user.is_object())
        throw config_error_at(path, "object expected");
    for (const auto& [k, v] : user.items()) {
        const std::string here = path.empty() ? k : path + "." + k;
        if (!defaults.contains(k))
            throw config_error_at(here, "unknown field");
        const auto& d = defaults.at(k);
        if (d.is_object() && !d.empty() && !d.contains("kind") && !v.is_null())
            check_keys(v, d, here);
    }
}

json resolve(const json& user, const json& defaults, const std::vector<std::string>& required)
{
    check_keys(user, defaults, "");
    json out = defaults;
    out.merge_patch(user);
    for (const auto& r : required)
        if (!out.contains(r) || out.at(r).is_null())
            throw config_error_at(r, "missing");
    return out;
}

template <class T>
T field(const json& j, const std::string& path)
{
    const json* node = &j;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!node->is_object() || !node->contains(part))
            throw config_error_at(path, "missing");
        node = &node->at(part);
    }
    try {
        return node->get<T>();
    } catch (const json::exception& e) {
        throw config_error_at(path, e.what());
    }
}

json common_defaults()
{
    return {{"name", nullptr}, {"seed", 42}, {"output", {{"dir", "out"}, {"stride", 1}}}};
}

json with_common(json d)
{
    const json common = common_defaults();
    for (const auto& [k, v] : common.items())
        d[k] = v;
    return d;
}

json solver_defaults()
{
    const KSOptions k;
    return {{"sweep_tol", k.sweep_tol},
            {"max_sweeps", k.max_sweeps},
            {"harmonic_budget", k.harmonic_budget},
            {"selection",
             {{"h", k.selection.h_schedule},
              {"steps_per_h", k.selection.steps_per_h},
              {"cauchy_tol", k.selection.cauchy_tol}}}};
}

KSOptions solver_options(const json& s)
{
    KSOptions k;
    k.sweep_tol = field<double>(s, "sweep_tol");
    k.max_sweeps = field<int>(s, "max_sweeps");
    k.harmonic_budget = field<int>(s, "harmonic_budget");
    k.selection.h_schedule = field<std::vector<double>>(s, "selection.h");
    k.selection.steps_per_h = field<long>(s, "selection.steps_per_h");
    k.selection.cauchy_tol = field<double>(s, "selection.cauchy_tol");
    return k;
}

// ---------------------------------------------------------------------------
// Descriptors

SpaceFunctional functional_from_json(const SpaceGeometry& geo, const json& j, const std::string& path)
{
    const auto kind = io::detail::get_field<std::string>(j, "kind", path);
    if (kind == "half_squared_distance")
        return half_squared_distance(geo, io::point_from_json(geo.space, j.at("z"), path + ".z"));
    if (kind == "distance")
        return distance_functional(geo, io::point_from_json(geo.space, j.at("z"), path + ".z"));
    if (kind == "sum_of_distances" || kind == "weighted_half_squared") {
        if (!j.contains("points") || !j.at("points").is_array())
            throw config_error_at(path + ".points", "array of {weight, point} expected");
        std::vector<WeightedPoint> pts;
        for (std::size_t i = 0; i < j.at("points").size(); ++i) {
            const auto& e = j.at("points")[i];
            const std::string here = path + ".points[" + std::to_string(i) + "]";
            const double w = io::detail::get_field<double>(e, "weight", here);
            if (!(w > 0.0))
                throw config_error_at(here + ".weight", "must be positive");
            pts.push_back({w, io::point_from_json(geo.space, e.at("point"), here + ".point")});
        }
        return kind == "sum_of_distances" ? sum_of_distances(geo, std::move(pts))
                                          : weighted_half_squared(geo, std::move(pts));
    }
    throw config_error_at(path + ".kind", "unknown functional '" + kind + "'");
}

/// Fills the explicit parameters of path / cycle domains into `j`.
Domain domain_from_config(json& j, const std::string& path = "domain")
{
    const std::string kind = j.value("kind", "graph");
    if (kind == "graph")
        return io::domain_from_json(j, path);
    if (kind != "path" && kind != "cycle")
        throw config_error_at(path + ".kind", "unknown domain '" + kind + "'");
    const int N = io::detail::get_field<int>(j, "nodes", path);
    if (N < 2)
        throw config_error_at(path + ".nodes", "at least 2 nodes expected");
    const double h = kind == "path" ? 1.0 / (N - 1) : 1.0 / N;
    if (!j.contains("mass"))
        j["mass"] = h;
    if (!j.contains("weight"))
        j["weight"] = kind == "path" ? 1.0 / h : 1.0;
    if (!j.contains("scale"))
        j["scale"] = h;
    const double m = io::detail::get_field<double>(j, "mass", path);
    const double w = io::detail::get_field<double>(j, "weight", path);
    const double r = io::detail::get_field<double>(j, "scale", path);
    Domain d = kind == "path" ? Domain::path(N, m, w, r) : Domain::cycle(N, m, w, r);
    if (j.contains("boundary"))
        d.boundary = io::detail::get_field<std::vector<int>>(j, "boundary", path);
    j["boundary"] = d.boundary;
    try {
        d.validate();
    } catch (const Error& e) {
        throw config_error_at(path, e.what());
    }
    return d;
}

L2Map map_from_config(const MapSpace& ms, const json& j, Generator& gen, const std::string& path)
{
    if (j.is_array())
        return io::map_from_json(ms, j, path);
    const auto kind = io::detail::get_field<std::string>(j, "kind", path);
    if (kind == "constant")
        return constant_map(ms, io::point_from_json(ms.target, j.at("point"), path + ".point"));
    if (kind == "random")
        return gen.map(ms);
    if (kind == "circle") {
        const auto* e = std::get_if<Euclidean>(&ms.target.kind);
        if (!e || e->dim != 2)
            throw config_error_at(path, "circle maps need a euclidean(2) target");
        const double radius = j.value("radius", 1.0);
        const auto c = j.value("center", std::vector<double>{0.0, 0.0});
        L2Map u;
        const auto n = static_cast<double>(ms.size());
        for (std::size_t x = 0; x < ms.size(); ++x) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(x) / n;
            u.values.push_back(euclidean_point({c.at(0) + radius * std::cos(th), c.at(1) + radius * std::sin(th)}));
        }
        return u;
    }
    throw config_error_at(path + ".kind", "unknown map '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Output

struct Scenario {
    std::string name;
    json cfg;
    fs::path dir;
};

std::ofstream open_out(const Scenario& sc, const std::string& file)
{
    std::ofstream os(sc.dir / file);
    if (!os)
        throw config_error_at("output.dir", "cannot write " + (sc.dir / file).string());
    return os;
}

void write_table(const Scenario& sc, const std::string& file, const io::Table& t)
{
    auto os = open_out(sc, file);
    io::write_csv(os, t);
    spdlog::info("[{}] wrote {} ({} rows)", sc.name, (sc.dir / file).string(), t.rows.size());
}

void echo_config(const Scenario& sc)
{
    auto os = open_out(sc, "config.resolved.json");
    os << sc.cfg.dump(2) << '\n';
}

/// `node,point...,e_density,lap_norm,lap_dir...`
io::Table node_table(const KSEnergy& E, const L2Map& u, const Section& lap)
{
    const auto& ms = E.space();
    const std::size_t k = io::flat_size(ms.target);
    io::Table t;
    t.header = {"node"};
    for (auto& c : io::columns("point", k))
        t.header.push_back(c);
    t.header.insert(t.header.end(), {"e_density", "lap_norm"});
    for (auto& c : io::columns("lap_dir", k))
        t.header.push_back(c);
    const auto e = E.density(u);
    const auto norms = section_pointwise_norms(ms, lap);
    const SpaceGeometry pg(ms.target);
    for (std::size_t x = 0; x < ms.size(); ++x) {
        std::vector<double> row{static_cast<double>(x)};
        io::flatten(u.values[x], row);
        row.push_back(e[x]);
        row.push_back(norms[x]);
        const std::size_t before = row.size();
        if (!lap.nodes[x].is_zero())
            io::flatten(u.values[x], to_tangent(pg, lap.nodes[x]), row);
        row.resize(before + k, 0.0);
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Subcommands

int run_flow(Scenario& sc)
{
    auto& c = sc.cfg;
    const Space space = io::space_from_json(c.at("space"));
    const SpaceGeometry geo(space);
    const auto E = functional_from_json(geo, c.at("functional"), "functional");
    const auto y0 = io::point_from_json(space, c.at("start"), "start");
    const double T = field<double>(c, "flow.T");
    if (!(T > 0.0))
        throw config_error_at("flow.T", "must be positive");
    long N = field<long>(c, "flow.N");
    if (!c["flow"]["tau"].is_null()) {
        const double tau = field<double>(c, "flow.tau");
        if (!(tau > 0.0))
            throw config_error_at("flow.tau", "must be positive");
        N = std::max(1L, std::lround(T / tau));
    }
    if (N <= 0)
        throw config_error_at("flow.N", "must be positive");
    c["flow"]["N"] = N;
    c["flow"]["tau"] = T / static_cast<double>(N);
    const auto seed = field<std::uint64_t>(c, "seed");
    Generator gen(seed, props::branching_config(space));
    if (c["verify"]["compare_start"].is_null())
        c["verify"]["compare_start"] = io::to_json(gen.point(space));
    const auto w0 = io::point_from_json(space, c["verify"]["compare_start"], "verify.compare_start");
    std::vector<SpacePoint> tests;
    for (int i = 0; i < field<int>(c, "verify.tests"); ++i)
        tests.push_back(gen.point(space));
    const double tol = field<double>(c, "verify.tol");
    const long stride = std::max(1L, field<long>(c, "output.stride"));
    echo_config(sc);

    spdlog::info("[{}] flow of {} on {}: T={} N={}", sc.name, E.descriptor, space.name(), T, N);
    const auto ty = flow(geo, E, y0, T, N);
    const auto tw = flow(geo, E, w0, T, N);
    auto table = io::trajectory_table(space, ty, [&](std::size_t k) {
        return k % stride == 0 || k + 1 == ty.points.size() ? slope(geo, E, ty.points[k]).value : 0.0;
    });
    io::Table thinned{table.header, {}};
    for (std::size_t k = 0; k < table.rows.size(); ++k)
        if (k % stride == 0 || k + 1 == table.rows.size())
            thinned.rows.push_back(std::move(table.rows[k]));
    write_table(sc, "trajectory.csv", thinned);

    const std::vector<Violation> report{verify_evi(geo, ty, E, E.lambda, tests),
                                        verify_contraction(geo, ty, tw, E.lambda),
                                        verify_apriori(geo, ty, w0, E, E.lambda),
                                        verify_regularization(geo, ty, E, E.lambda)};
    auto os = open_out(sc, "report.jsonl");
    bool pass = true;
    for (const auto& v : report) {
        os << io::record_line(v) << '\n';
        const bool p = v.max_violation <= tol;
        pass = pass && p;
        spdlog::info("[{}] {} max_violation={} {}", sc.name, v.check, io::fmt(v.max_violation), p ? "pass" : "FAIL");
    }
    return pass ? ok : property_failure;
}

int run_slope(Scenario& sc)
{
    const auto& c = sc.cfg;
    const Space space = io::space_from_json(c.at("space"));
    const SpaceGeometry geo(space);
    const auto E = functional_from_json(geo, c.at("functional"), "functional");
    const bool with_selection = field<bool>(c, "selection");
    if (!c.at("points").is_array() || c.at("points").empty())
        throw config_error_at("points", "nonempty array of points expected");
    std::vector<SpacePoint> pts;
    for (std::size_t i = 0; i < c.at("points").size(); ++i)
        pts.push_back(io::point_from_json(space, c.at("points")[i], "points[" + std::to_string(i) + "]"));
    echo_config(sc);

    io::Table t;
    t.header = {"index"};
    for (auto& col : io::columns("point", io::flat_size(space)))
        t.header.push_back(col);
    t.header.insert(t.header.end(), {"energy", "slope", "sampled", "samples"});
    if (with_selection)
        t.header.push_back("selection_norm");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto s = slope(geo, E, pts[i]);
        std::vector<double> row{static_cast<double>(i)};
        io::flatten(pts[i], row);
        row.insert(row.end(), {E.eval(pts[i]), s.value, s.method == SlopeMethod::global_sup_sampled ? 1.0 : 0.0,
                               static_cast<double>(s.sample_count)});
        if (with_selection)
            row.push_back(norm(geo, minimal_selection(geo, E, pts[i])));
        spdlog::info("[{}] point {}: slope={} ({})", sc.name, i, io::fmt(s.value), to_string(s.method));
        t.rows.push_back(std::move(row));
    }
    write_table(sc, "slopes.csv", t);
    return ok;
}

struct MapProblem {
    std::shared_ptr<KSEnergy> E;
    L2Map u;
};

MapProblem map_problem(Scenario& sc, bool harmonic_problem)
{
    auto& c = sc.cfg;
    const Domain d = domain_from_config(c["domain"]);
    const Space target = io::space_from_json(c.at("target"), "target");
    const MapSpace ms(d, target);
    Generator gen(field<std::uint64_t>(c, "seed"), props::branching_config(target));
    KSOptions opt = solver_options(c.at("solver"));
    if (!harmonic_problem) {
        auto u = map_from_config(ms, c.at("map"), gen, "map");
        std::optional<L2Map> data;
        if (!d.boundary.empty())
            data = u;
        return {std::make_shared<KSEnergy>(ms, data, opt), u};
    }
    auto init = map_from_config(ms, c.at("init"), gen, "init");
    L2Map data = init;
    const auto& bv = c.at("boundary_values");
    if (!bv.is_array())
        throw config_error_at("boundary_values", "array of {node, point} expected");
    std::vector<char> seen(d.nodes, 0);
    for (std::size_t i = 0; i < bv.size(); ++i) {
        const std::string here = "boundary_values[" + std::to_string(i) + "]";
        const int node = io::detail::get_field<int>(bv[i], "node", here);
        if (node < 0 || node >= d.nodes || !d.is_boundary(node))
            throw config_error_at(here + ".node", "not a boundary node of the domain");
        data.values[node] = io::point_from_json(target, bv[i].at("point"), here + ".point");
        seen[node] = 1;
    }
    for (int b : d.boundary)
        if (!seen[b])
            throw config_error_at("boundary_values", "no value for boundary node " + std::to_string(b));
    return {std::make_shared<KSEnergy>(ms, data, opt), init};
}

int run_harmonic(Scenario& sc)
{
    auto problem = map_problem(sc, true);
    echo_config(sc);
    // stream the convergence log so that a failing solve leaves it behind
    auto log = open_out(sc, "convergence.csv");
    log << "iter,energy,slope_est\n";
    KSOptions opt = problem.E->options();
    opt.on_progress = [&](const ConvergenceRow& r) {
        log << r.iter << ',' << io::fmt(r.energy) << ',' << io::fmt(r.slope_est) << '\n' << std::flush;
        spdlog::debug("[{}] iter {} energy {} slope {}", sc.name, r.iter, r.energy, r.slope_est);
    };
    const KSEnergy E(problem.E->space(), problem.E->boundary_data(), opt);
    spdlog::info("[{}] harmonic map: {} nodes into {}", sc.name, E.domain().nodes, E.space().target.name());
    const auto res = harmonic_solve(E, problem.u);
    write_table(sc, "harmonic.csv", node_table(E, res.map, laplacian(E, res.map)));
    auto os = open_out(sc, "report.jsonl");
    os << json{{"energy", E.energy(res.map)},
               {"slope", res.slope},
               {"laplacian_norm", res.laplacian_norm},
               {"iterations", res.log.size()}}
              .dump()
       << '\n';
    spdlog::info("[{}] energy={} slope={} |laplacian|={}", sc.name, io::fmt(E.energy(res.map)), io::fmt(res.slope),
                 io::fmt(res.laplacian_norm));
    return ok;
}

int run_laplacian(Scenario& sc)
{
    auto problem = map_problem(sc, false);
    const double tol = field<double>(sc.cfg, "check_tol");
    echo_config(sc);
    const KSEnergy& E = *problem.E;
    const auto& u = problem.u;
    const auto& ms = E.space();
    const auto lap = laplacian(E, u);
    write_table(sc, "laplacian.csv", node_table(E, u, lap));
    const double ln = section_norm(ms, lap);
    const double sl = slope(ms, E.functional(), u).value;
    const bool pass = std::abs(sl - ln) <= tol * std::max(1.0, ln);
    json rec{{"laplacian_norm", ln}, {"slope", sl}, {"gap", std::abs(sl - ln)}, {"pass", pass}};
    if (const auto& m = sc.cfg.at("map"); m.is_object() && m.value("kind", "") == "circle") {
        // cosine between each node's section and the inward radius
        const auto cen = m.value("center", std::vector<double>{0.0, 0.0});
        const SpaceGeometry pg(ms.target);
        double align = 1.0;
        for (std::size_t x = 0; x < ms.size(); ++x) {
            const auto& p = std::get<EuclideanPoint>(u.values[x].v).x;
            std::vector<double> v(2, 0.0);
            if (!lap.nodes[x].is_zero())
                v = std::get<LinearTangent>(to_tangent(pg, lap.nodes[x]).v).v;
            const double rx = cen[0] - p[0], ry = cen[1] - p[1];
            const double den = std::hypot(v[0], v[1]) * std::hypot(rx, ry);
            align = std::min(align, den > 0 ? (v[0] * rx + v[1] * ry) / den : 0.0);
        }
        rec["min_radial_alignment"] = align;
        spdlog::info("[{}] min radial alignment {}", sc.name, io::fmt(align));
    }
    auto os = open_out(sc, "report.jsonl");
    os << rec.dump() << '\n';
    spdlog::info("[{}] |laplacian|={} slope={} {}", sc.name, io::fmt(ln), io::fmt(sl), pass ? "pass" : "FAIL");
    return pass ? ok : property_failure;
}

int run_verify(Scenario& sc)
{
    const auto& c = sc.cfg;
    SuiteConfig cfg;
    cfg.space = io::space_from_json(c.at("space"));
    cfg.seed = field<std::uint64_t>(c, "seed");
    cfg.samples = field<std::size_t>(c, "samples");
    cfg.tau = field<double>(c, "tau");
    cfg.T = field<double>(c, "T");
    cfg.nodes = field<int>(c, "nodes");
    const auto suite = field<std::string>(c, "suite");
    std::vector<std::string> names;
    if (suite == "all")
        names = suite_names();
    else
        names = {suite};
    for (const auto& n : names)
        if (std::find(suite_names().begin(), suite_names().end(), n) == suite_names().end())
            throw Error(Errc::unknown_suite, "no suite named '" + n + "'");
    echo_config(sc);
    auto os = open_out(sc, "report.jsonl");
    bool pass = true;
    for (const auto& n : names) {
        for (const auto& r : run_suite(n, cfg)) {
            PropertyReport named = r;
            named.name = n + "/" + r.name;
            os << io::report_line(named) << '\n';
            pass = pass && r.pass;
            spdlog::info("[{}] {} samples={} max_violation={} {}", sc.name, named.name, r.samples,
                         io::fmt(r.max_violation), r.pass ? "pass" : "FAIL");
        }
    }
    return pass ? ok : property_failure;
}

int run_bench(Scenario& sc)
{
    const auto& c = sc.cfg;
    const double scale = field<double>(c, "scale");
    if (!(scale > 0.0))
        throw config_error_at("scale", "must be positive");
    echo_config(sc);
    auto os = open_out(sc, "bench.jsonl");
    auto time = [&](const std::string& name, long reps, const std::function<void()>& body) {
        reps = std::max(1L, std::lround(static_cast<double>(reps) * scale));
        const auto t0 = std::chrono::steady_clock::now();
        for (long i = 0; i < reps; ++i)
            body();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        os << json{{"name", name}, {"reps", reps}, {"seconds", secs}, {"ns_per_op", 1e9 * secs / reps}}.dump() << '\n';
        spdlog::info("[{}] {:<28} {:>10} reps {:>12.1f} ns/op", sc.name, name, reps, 1e9 * secs / reps);
    };
    Generator gen(field<std::uint64_t>(c, "seed"));
    volatile double sink = 0.0;
    for (const auto& s : {Space::euclidean(2), Space::spider(3), Space::hyperbolic2(), Space::sphere2(1.0)}) {
        const auto a = gen.point(s), b = gen.point(s);
        time("distance " + s.name(), 200000, [&] { sink = sink + distance(s, a, b); });
        time("geodesic " + s.name(), 200000, [&] { sink = sink + coordinate_scale(geodesic_point(s, a, b, 0.3)); });
    }
    {
        const auto s = Space::hyperbolic2();
        const SpaceGeometry geo(s);
        const auto E = half_squared_distance(geo, gen.point(s));
        const auto y = gen.point(s);
        time("flow hyperbolic2 1e4 steps", 5, [&] { sink = sink + flow(geo, E, y, 1.0, 10000).energies.back(); });
        time("minimal_selection hyperbolic2", 50, [&] { sink = sink + norm(geo, minimal_selection(geo, E, y)); });
    }
    {
        const MapSpace ms(Domain::cycle(64, 1.0 / 64, 1.0, 1.0 / 64), Space::euclidean(2));
        Generator g2(1);
        const KSEnergy E(ms);
        L2Map u;
        for (int i = 0; i < 64; ++i)
            u.values.push_back(euclidean_point({std::cos(i * std::numbers::pi / 32), std::sin(i * std::numbers::pi / 32)}));
        time("laplacian circle N=64", 5, [&] { sink = sink + section_norm(ms, laplacian(E, u)); });
    }
    {
        const MapSpace ms(Domain::path(17, 1.0, 1.0, 1.0), Space::hyperbolic2());
        const auto data = gen.map(ms);
        const KSEnergy E(ms, data);
        time("harmonic path(17)->hyperbolic2", 3, [&] { sink = sink + E.energy(harmonic(E, data)); });
    }
    time("cone_calculus spider(3) x1000", 3,
         [&] { sink = sink + props::cone_calculus(Space::spider(3), 1000, 1).front().max_violation; });
    return ok;
}

// ---------------------------------------------------------------------------
// Driver

struct Command {
    json defaults;
    std::vector<std::string> required;
    int (*run)(Scenario&);
};

const std::map<std::string, Command>& commands()
{
    static const std::map<std::string, Command> c{
        {"flow",
         {with_common({{"space", nullptr},
                       {"functional", nullptr},
                       {"start", nullptr},
                       {"flow", {{"T", 2.0}, {"N", 20000}, {"tau", nullptr}}},
                       {"verify", {{"tests", 8}, {"tol", 1e-2}, {"compare_start", nullptr}}}}),
          {"space", "functional", "start"},
          run_flow}},
        {"slope",
         {with_common({{"space", nullptr}, {"functional", nullptr}, {"points", nullptr}, {"selection", false}}),
          {"space", "functional", "points"},
          run_slope}},
        {"harmonic",
         {with_common({{"domain", nullptr},
                       {"target", nullptr},
                       {"boundary_values", nullptr},
                       {"init", {{"kind", "random"}}},
                       {"solver", solver_defaults()}}),
          {"domain", "target", "boundary_values"},
          run_harmonic}},
        {"laplacian",
         {with_common({{"domain", nullptr},
                       {"target", nullptr},
                       {"map", nullptr},
                       {"check_tol", 1e-3},
                       {"solver", solver_defaults()}}),
          {"domain", "target", "map"},
          run_laplacian}},
        {"verify",
         {with_common({{"suite", "all"},
                       {"space", {{"kind", "euclidean"}, {"dim", 2}}},
                       {"samples", 1000},
                       {"tau", 1e-4},
                       {"T", 2.0},
                       {"nodes", 8}}),
          {},
          run_verify}},
        {"bench", {with_common({{"scale", 1.0}}), {}, run_bench}},
    };
    return c;
}

/// "spider3", "euclidean(2)", "hyperbolic2", "sphere2", or a JSON descriptor.
json space_shorthand(const std::string& s)
{
    static const std::regex re(R"(^(euclidean|spider|hyperbolic|sphere)\(?(\d*)\)?$)");
    std::smatch m;
    if (std::regex_match(s, m, re)) {
        const std::string kind = m[1];
        const std::string n = m[2];
        if (kind == "euclidean" && !n.empty())
            return {{"kind", "euclidean"}, {"dim", std::stoi(n)}};
        if (kind == "spider" && !n.empty())
            return {{"kind", "spider"}, {"rays", std::stoi(n)}};
        if (kind == "hyperbolic" && (n.empty() || n == "2"))
            return {{"kind", "hyperbolic2"}};
        if (kind == "sphere" && (n.empty() || n == "2"))
            return {{"kind", "sphere2"}, {"kappa", 1.0}};
    }
    try {
        return json::parse(s);
    } catch (const json::exception&) {
        throw config_error_at("--space", "unrecognized space '" + s + "'");
    }
}

int exit_code_for(const Error& e)
{
    switch (e.code()) {
    case Errc::no_convergence:
    case Errc::prox_failure:
        return solver_failure;
    default:
        return config_error;
    }
}

/// Loads, overrides, resolves and runs one scenario; never throws.
int run_scenario(const std::string& cmd, const Options& opt, const std::string& config_path, std::size_t index)
{
    std::string label = config_path.empty() ? cmd : config_path;
    try {
        json user = json::object();
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is)
                throw config_error_at("--config", "cannot read " + config_path);
            try {
                user = json::parse(is);
            } catch (const json::exception& e) {
                throw config_error_at(config_path, e.what());
            }
        }
        if (opt.seed)
            user["seed"] = *opt.seed;
        if (!opt.suite.empty())
            user["suite"] = opt.suite;
        if (!opt.space.empty())
            user["space"] = space_shorthand(opt.space);
        if (!opt.out.empty())
            user["output"]["dir"] = opt.out;
        for (const auto& s : opt.sets)
            apply_set(user, s);

        const auto& command = commands().at(cmd);
        Scenario sc;
        sc.cfg = resolve(user, command.defaults, command.required);
        if (sc.cfg["name"].is_null()) {
            std::string name = config_path.empty() ? cmd : fs::path(config_path).stem().string();
            if (cmd == "verify" && config_path.empty())
                name = "verify-" + sc.cfg.value("suite", "all") + "-" + io::space_from_json(sc.cfg["space"]).name();
            if (opt.configs.size() > 1)
                name += "-" + std::to_string(index);
            sc.cfg["name"] = name;
        }
        sc.name = sc.cfg["name"].get<std::string>();
        label = sc.name;
        sc.dir = fs::path(field<std::string>(sc.cfg, "output.dir")) / sc.name;
        std::error_code ec;
        fs::create_directories(sc.dir, ec);
        if (ec)
            throw config_error_at("output.dir", "cannot create " + sc.dir.string() + ": " + ec.message());
        spdlog::debug("[{}] resolved config: {}", sc.name, sc.cfg.dump());
        const int code = command.run(sc);
        spdlog::info("[{}] {} -> {}", sc.name, cmd, code == ok ? "ok" : "property failure");
        return code;
    } catch (const Error& e) {
        spdlog::error("[{}] {}", label, e.what());
        return exit_code_for(e);
    } catch (const json::exception& e) {
        spdlog::error("[{}] invalid-config: {}", label, e.what());
        return config_error;
    } catch (const std::exception& e) {
        spdlog::error("[{}] {}", label, e.what());
        return config_error;
    }
}

void setup_logging()
{
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("HFLOW_LOG");
    const std::string level = env ? env : "info";
    if (level == "error")
        spdlog::set_level(spdlog::level::err);
    else if (level == "debug")
        spdlog::set_level(spdlog::level::debug);
    else {
        spdlog::set_level(spdlog::level::info);
        if (level != "info")
            spdlog::warn("HFLOW_LOG='{}' not in {{error,info,debug}}; using info", level);
    }
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();
    CLI::App app{"Gradient flows, tangent cones and harmonic maps on CAT(k) model spaces"};
    app.require_subcommand(1);
    Options opt;
    std::map<std::string, CLI::App*> subs;
    const std::map<std::string, std::string> help{
        {"flow", "minimizing-movement trajectory and verifier report"},
        {"slope", "slope estimates at listed points"},
        {"harmonic", "harmonic map with boundary values and convergence log"},
        {"laplacian", "Laplacian section of a map and slope-vs-norm report"},
        {"verify", "run a property suite (or 'all')"},
        {"bench", "micro-benchmarks of the main operations"},
    };
    for (const auto& [name, text] : help) {
        auto* sub = app.add_subcommand(name, text);
        sub->add_option("--config", opt.configs, "scenario JSON file (repeatable)");
        sub->add_option("--seed", opt.seed, "override the seed");
        sub->add_option("--jobs", opt.jobs, "run scenarios on K workers")->check(CLI::PositiveNumber);
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--set", opt.sets, "override a config field: dotted.key=value (repeatable)");
        if (name == "verify") {
            sub->add_option("suite", opt.suite, "suite name or 'all'");
            sub->add_option("--space", opt.space, "space, e.g. spider3, euclidean(2), hyperbolic2");
        }
        subs[name] = sub;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }
    std::string cmd;
    for (const auto& [name, sub] : subs)
        if (sub->parsed())
            cmd = name;

    std::vector<std::string> configs = opt.configs;
    if (configs.empty())
        configs.push_back("");
    std::vector<int> codes(configs.size(), ok);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++)
            codes[i] = run_scenario(cmd, opt, configs[i], i);
    };
    const int jobs = std::min<int>(opt.jobs, static_cast<int>(configs.size()));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    return *std::max_element(codes.begin(), codes.end());
}
