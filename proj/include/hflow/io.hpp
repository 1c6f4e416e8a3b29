#pragma once
/*
 * JSON descriptors for spaces, points, directions, domains and maps;
 * flat coordinate rows and round-trip CSV helpers.
 */

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "harness.hpp"

namespace hflow::io {

using json = nlohmann::json;

/// Shortest text that reads back to the same double.
inline std::string fmt(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s)
{
    if (s == "inf")
        return kInf;
    if (s == "-inf")
        return -kInf;
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size())
        throw Error(Errc::invalid_config, "not a number: '" + s + "'");
    return v;
}

// ---------------------------------------------------------------------------
// Spaces

namespace detail {

template <class T>
T get_field(const json& j, const std::string& key, const std::string& path)
{
    if (!j.is_object() || !j.contains(key))
        throw Error(Errc::invalid_config, path + "." + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_config, path + "." + key + ": " + e.what());
    }
}

} // namespace detail

inline Space space_from_json(const json& j, const std::string& path = "space")
{
    const auto kind = detail::get_field<std::string>(j, "kind", path);
    if (kind == "euclidean") {
        const int dim = detail::get_field<int>(j, "dim", path);
        if (dim <= 0)
            throw Error(Errc::invalid_config, path + ".dim: must be positive");
        return Space::euclidean(dim);
    }
    if (kind == "spider") {
        const int rays = detail::get_field<int>(j, "rays", path);
        if (rays < 1)
            throw Error(Errc::invalid_config, path + ".rays: must be >= 1");
        return Space::spider(rays);
    }
    if (kind == "hyperbolic2")
        return Space::hyperbolic2();
    if (kind == "sphere2") {
        const double k = j.contains("kappa") ? detail::get_field<double>(j, "kappa", path) : 1.0;
        if (!(k > 0.0))
            throw Error(Errc::invalid_config, path + ".kappa: must be positive");
        return Space::sphere2(k);
    }
    if (kind == "product") {
        const auto& f = j.at("factors");
        if (!f.is_array() || f.empty())
            throw Error(Errc::invalid_config, path + ".factors: nonempty array expected");
        std::vector<Space> factors;
        for (std::size_t i = 0; i < f.size(); ++i)
            factors.push_back(space_from_json(f[i], path + ".factors[" + std::to_string(i) + "]"));
        return Space::product(std::move(factors));
    }
    throw Error(Errc::invalid_config, path + ".kind: unknown space '" + kind + "'");
}

inline json to_json(const Space& s)
{
    return std::visit(overloaded{
                          [](const Euclidean& e) { return json{{"kind", "euclidean"}, {"dim", e.dim}}; },
                          [](const Spider& e) { return json{{"kind", "spider"}, {"rays", e.rays}}; },
                          [](const Hyperbolic2&) { return json{{"kind", "hyperbolic2"}}; },
                          [](const Sphere2& e) { return json{{"kind", "sphere2"}, {"kappa", e.kappa}}; },
                          [](const Product& p) {
                              json f = json::array();
                              for (const auto& s : p.factors)
                                  f.push_back(to_json(s));
                              return json{{"kind", "product"}, {"factors", f}};
                          },
                      },
                      s.kind);
}

// ---------------------------------------------------------------------------
// Points

inline json to_json(const SpacePoint& p)
{
    return std::visit(overloaded{
                          [](const EuclideanPoint& q) { return json{{"x", q.x}}; },
                          [](const SpiderPoint& q) { return json{{"ray", q.ray}, {"t", q.t}}; },
                          [](const HyperboloidPoint& q) { return json{{"x", q.x}}; },
                          [](const SpherePoint& q) { return json{{"x", q.x}}; },
                          [](const ProductPoint& q) {
                              json f = json::array();
                              for (const auto& s : q.factors)
                                  f.push_back(to_json(s));
                              return json{{"factors", f}};
                          },
                      },
                      p.v);
}

/// Hyperboloid and sphere points may be given by the full ambient "x" or,
/// for the hyperboloid, by the spatial part only (two numbers).
inline SpacePoint point_from_json(const Space& space, const json& j, const std::string& path = "point")
{
    SpacePoint p = std::visit(
        overloaded{
            [&](const Euclidean&) { return euclidean_point(detail::get_field<std::vector<double>>(j, "x", path)); },
            [&](const Spider&) {
                return spider_point(detail::get_field<int>(j, "ray", path), detail::get_field<double>(j, "t", path));
            },
            [&](const Hyperbolic2&) {
                const auto x = detail::get_field<std::vector<double>>(j, "x", path);
                if (x.size() == 2)
                    return SpacePoint{HyperboloidPoint{hflow::detail::lift_hyperboloid(x[0], x[1])}};
                if (x.size() != 3)
                    throw Error(Errc::invalid_config, path + ".x: 2 or 3 coordinates expected");
                return SpacePoint{HyperboloidPoint{{x[0], x[1], x[2]}}};
            },
            [&](const Sphere2&) {
                const auto x = detail::get_field<std::vector<double>>(j, "x", path);
                if (x.size() != 3)
                    throw Error(Errc::invalid_config, path + ".x: 3 coordinates expected");
                return SpacePoint{SpherePoint{{x[0], x[1], x[2]}}};
            },
            [&](const Product& pr) {
                const auto& f = j.at("factors");
                if (f.size() != pr.factors.size())
                    throw Error(Errc::invalid_config, path + ".factors: arity mismatch");
                std::vector<SpacePoint> out;
                for (std::size_t i = 0; i < f.size(); ++i)
                    out.push_back(point_from_json(pr.factors[i], f[i], path + ".factors[" + std::to_string(i) + "]"));
                return product_point(std::move(out));
            },
        },
        space.kind);
    try {
        validate(space, p);
    } catch (const Error& e) {
        throw Error(Errc::invalid_config, path + ": " + e.what());
    }
    return p;
}

inline json to_json(const PointDirection& d)
{
    if (d.is_zero())
        return json{{"base", to_json(d.base)}, {"zero", true}};
    return json{{"base", to_json(d.base)}, {"target", to_json(d.germ->target)}, {"alpha", d.germ->alpha}};
}

inline PointDirection direction_from_json(const Space& space, const json& j, const std::string& path = "direction")
{
    const auto base = point_from_json(space, j.at("base"), path + ".base");
    if (j.value("zero", false))
        return zero_direction<SpaceGeometry>(base);
    return make_direction(SpaceGeometry(space), base, point_from_json(space, j.at("target"), path + ".target"),
                          detail::get_field<double>(j, "alpha", path));
}

// ---------------------------------------------------------------------------
// Domains and maps

inline Domain domain_from_json(const json& j, const std::string& path = "domain")
{
    Domain d;
    d.nodes = detail::get_field<int>(j, "nodes", path);
    if (j.contains("m") && j.at("m").is_number())
        d.m.assign(std::max(d.nodes, 0), j.at("m").get<double>());
    else
        d.m = detail::get_field<std::vector<double>>(j, "m", path);
    for (const auto& e : j.value("edges", json::array())) {
        if (!e.is_array() || e.size() < 2)
            throw Error(Errc::invalid_config, path + ".edges: [i, j, w] triples expected");
        d.edges.push_back({e[0].get<int>(), e[1].get<int>(), e.size() > 2 ? e[2].get<double>() : 1.0});
    }
    d.r = detail::get_field<double>(j, "r", path);
    d.boundary = j.value("boundary", std::vector<int>{});
    d.validate();
    return d;
}

inline json to_json(const Domain& d)
{
    json edges = json::array();
    for (const auto& e : d.edges)
        edges.push_back({e.i, e.j, e.w});
    return json{{"nodes", d.nodes}, {"m", d.m}, {"edges", edges}, {"r", d.r}, {"boundary", d.boundary}};
}

inline json to_json(const L2Map& u)
{
    json out = json::array();
    for (const auto& p : u.values)
        out.push_back(to_json(p));
    return out;
}

inline L2Map map_from_json(const MapSpace& ms, const json& j, const std::string& path = "map")
{
    if (!j.is_array() || j.size() != ms.size())
        throw Error(Errc::invalid_config, path + ": one point per node expected");
    L2Map u;
    for (std::size_t x = 0; x < j.size(); ++x)
        u.values.push_back(point_from_json(ms.target, j[x], path + "[" + std::to_string(x) + "]"));
    return u;
}

// ---------------------------------------------------------------------------
// Flat coordinates (CSV columns)

/// Number of flat coordinates of a point: euclidean n, spider 2 (ray, t),
/// hyperboloid / sphere 3, products concatenated.
inline std::size_t flat_size(const Space& s)
{
    return std::visit(overloaded{
                          [](const Euclidean& e) { return static_cast<std::size_t>(e.dim); },
                          [](const Spider&) { return std::size_t{2}; },
                          [](const Product& p) {
                              std::size_t n = 0;
                              for (const auto& f : p.factors)
                                  n += flat_size(f);
                              return n;
                          },
                          [](const auto&) { return std::size_t{3}; },
                      },
                      s.kind);
}

inline void flatten(const SpacePoint& p, std::vector<double>& out)
{
    std::visit(overloaded{
                   [&](const EuclideanPoint& q) { out.insert(out.end(), q.x.begin(), q.x.end()); },
                   [&](const SpiderPoint& q) {
                       out.push_back(q.ray);
                       out.push_back(q.t);
                   },
                   [&](const HyperboloidPoint& q) { out.insert(out.end(), q.x.begin(), q.x.end()); },
                   [&](const SpherePoint& q) { out.insert(out.end(), q.x.begin(), q.x.end()); },
                   [&](const ProductPoint& q) {
                       for (const auto& f : q.factors)
                           flatten(f, out);
                   },
               },
               p.v);
}

inline std::vector<double> flatten(const SpacePoint& p)
{
    std::vector<double> out;
    flatten(p, out);
    return out;
}

inline SpacePoint unflatten(const Space& s, std::span<const double> c, std::size_t& pos)
{
    auto take = [&](std::size_t n) {
        if (pos + n > c.size())
            throw Error(Errc::invalid_config, "flat point row too short");
        std::span<const double> out = c.subspan(pos, n);
        pos += n;
        return out;
    };
    return std::visit(overloaded{
                          [&](const Euclidean& e) {
                              auto x = take(e.dim);
                              return euclidean_point({x.begin(), x.end()});
                          },
                          [&](const Spider&) {
                              auto x = take(2);
                              return spider_point(static_cast<int>(x[0]), x[1]);
                          },
                          [&](const Hyperbolic2&) {
                              auto x = take(3);
                              return SpacePoint{HyperboloidPoint{{x[0], x[1], x[2]}}};
                          },
                          [&](const Sphere2&) {
                              auto x = take(3);
                              return SpacePoint{SpherePoint{{x[0], x[1], x[2]}}};
                          },
                          [&](const Product& p) {
                              std::vector<SpacePoint> f;
                              for (const auto& s : p.factors)
                                  f.push_back(unflatten(s, c, pos));
                              return product_point(std::move(f));
                          },
                      },
                      s.kind);
}

inline SpacePoint unflatten(const Space& s, std::span<const double> c)
{
    std::size_t pos = 0;
    return unflatten(s, c, pos);
}

/// Flat tangent coordinates, sized like the base's flat coordinates:
/// linear components; (ray, signed length) on a spider; products concatenated.
inline void flatten(const SpacePoint& base, const TangentVector& t, std::vector<double>& out)
{
    std::visit(overloaded{
                   [&](const LinearTangent& l) {
                       if (const auto* sp = std::get_if<SpiderPoint>(&base.v))
                           out.push_back(sp->ray);
                       out.insert(out.end(), l.v.begin(), l.v.end());
                   },
                   [&](const BranchTangent& b) {
                       out.push_back(b.ray);
                       out.push_back(b.len);
                   },
                   [&](const ProductTangent& p) {
                       const auto& q = std::get<ProductPoint>(base.v);
                       for (std::size_t i = 0; i < p.factors.size(); ++i)
                           flatten(q.factors.at(i), p.factors[i], out);
                   },
               },
               t.v);
}

inline std::vector<std::string> columns(const std::string& prefix, std::size_t n)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(prefix + std::to_string(i));
    return out;
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        throw Error(Errc::invalid_config, "no CSV column '" + name + "'");
    }
};

inline void write_csv(std::ostream& os, const Table& t)
{
    for (std::size_t i = 0; i < t.header.size(); ++i)
        os << (i ? "," : "") << t.header[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << fmt(row[i]);
        os << '\n';
    }
}

inline Table read_csv(std::istream& is)
{
    Table t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ','))
            out.push_back(cell);
        return out;
    };
    if (!std::getline(is, line))
        throw Error(Errc::invalid_config, "empty CSV");
    t.header = split(line);
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        for (const auto& c : split(line))
            row.push_back(parse_double(c));
        if (row.size() != t.header.size())
            throw Error(Errc::invalid_config, "CSV row width does not match the header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// `t,point...,energy,speed,slope`
template <class SlopeFn>
Table trajectory_table(const Space& space, const Trajectory<SpaceGeometry>& tr, SlopeFn&& slope_at)
{
    Table t;
    t.header = {"t"};
    for (auto& c : columns("point", flat_size(space)))
        t.header.push_back(c);
    t.header.insert(t.header.end(), {"energy", "speed", "slope"});
    for (std::size_t k = 0; k < tr.points.size(); ++k) {
        std::vector<double> row{tr.times[k]};
        flatten(tr.points[k], row);
        row.push_back(tr.energies[k]);
        row.push_back(tr.speeds[k]);
        row.push_back(slope_at(k));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline json to_json(const Violation& v)
{
    return json{{"check", v.check}, {"max_violation", v.max_violation}, {"tau", v.tau}, {"samples", v.samples}};
}

inline json to_json(const PropertyReport& r)
{
    return json{{"name", r.name}, {"samples", r.samples}, {"max_violation", r.max_violation}, {"pass", r.pass}};
}

/// One record per line, numbers at full precision for byte-stable reports.
inline std::string report_line(const PropertyReport& r)
{
    return "{\"name\":\"" + r.name + "\",\"samples\":" + std::to_string(r.samples) +
           ",\"max_violation\":" + fmt(r.max_violation) + ",\"pass\":" + (r.pass ? "true" : "false") + "}";
}

inline std::string record_line(const Violation& v)
{
    return "{\"check\":\"" + v.check + "\",\"max_violation\":" + fmt(v.max_violation) + ",\"tau\":" + fmt(v.tau) +
           ",\"samples\":" + std::to_string(v.samples) + "}";
}

} // namespace hflow::io
