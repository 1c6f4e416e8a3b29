#pragma once
/*
 * L^2(Omega, Y) over a finite weighted domain: the space of maps, its
 * pointwise geodesics and tangent cones, and the correspondence iota
 * between L^2 directions and per-node sections of the pullback cone.
 */

#include <memory>

#include "tangent.hpp"

namespace hflow {

struct Edge {
    int i = 0;
    int j = 0;
    double w = 1.0;
};

/// Finite weighted graph with node measure m, symmetric edge weights,
/// averaging scale r and a boundary node set.
struct Domain {
    int nodes = 0;
    std::vector<double> m;
    std::vector<Edge> edges;
    double r = 1.0;
    std::vector<int> boundary;

    /// Adjacency lists (neighbour, accumulated weight), built by validate().
    std::vector<std::vector<std::pair<int, double>>> adj;
    std::vector<char> on_boundary;

    void validate()
    {
        if (nodes <= 0)
            throw Error(Errc::invalid_config, "domain needs at least one node");
        if (static_cast<int>(m.size()) != nodes)
            throw Error(Errc::invalid_config, "domain: m must list one measure per node");
        for (double v : m)
            if (!(v > 0.0) || !std::isfinite(v))
                throw Error(Errc::invalid_config, "domain: node measures must be positive");
        if (!(r > 0.0))
            throw Error(Errc::invalid_config, "domain: scale r must be positive");
        adj.assign(nodes, {});
        for (const auto& e : edges) {
            if (e.i < 0 || e.j < 0 || e.i >= nodes || e.j >= nodes || e.i == e.j)
                throw Error(Errc::invalid_config, "domain: edge endpoints out of range");
            if (!(e.w >= 0.0))
                throw Error(Errc::invalid_config, "domain: edge weights must be nonnegative");
            auto add = [&](int a, int b) {
                for (auto& [n, w] : adj[a])
                    if (n == b) {
                        w += e.w;
                        return;
                    }
                adj[a].emplace_back(b, e.w);
            };
            add(e.i, e.j);
            add(e.j, e.i);
        }
        for (auto& list : adj)
            std::sort(list.begin(), list.end());
        on_boundary.assign(nodes, 0);
        for (int b : boundary) {
            if (b < 0 || b >= nodes)
                throw Error(Errc::invalid_config, "domain: boundary node out of range");
            on_boundary[b] = 1;
        }
    }

    /// W_x = sum of edge weights at x.
    double weight_sum(int x) const
    {
        double s = 0.0;
        for (const auto& [n, w] : adj.at(x))
            s += w;
        return s;
    }

    double total_mass() const { return std::accumulate(m.begin(), m.end(), 0.0); }

    bool is_boundary(int x) const { return on_boundary.at(x) != 0; }

    /// Cycle 0-1-...-(N-1)-0 with the given measure, weight and scale.
    static Domain cycle(int N, double mass, double weight, double scale)
    {
        Domain d;
        d.nodes = N;
        d.m.assign(N, mass);
        for (int i = 0; i < N; ++i)
            d.edges.push_back({i, (i + 1) % N, weight});
        d.r = scale;
        d.validate();
        return d;
    }

    /// Path 0-1-...-(N-1) with both ends on the boundary.  The end nodes
    /// carry half the interior mass (trapezoid rule), which makes every edge
    /// coupling equal so that discrete harmonic maps interpolate linearly.
    static Domain path(int N, double mass, double weight, double scale)
    {
        Domain d;
        d.nodes = N;
        d.m.assign(N, mass);
        d.m.front() *= 0.5;
        d.m.back() *= 0.5;
        for (int i = 0; i + 1 < N; ++i)
            d.edges.push_back({i, i + 1, weight});
        d.r = scale;
        d.boundary = {0, N - 1};
        d.validate();
        return d;
    }
};

struct L2Map {
    std::vector<SpacePoint> values;
};

struct MapTangent {
    std::vector<TangentVector> nodes;
};

/// Geometry of L^2(Omega, Y): distances and cone operations are
/// measure-weighted aggregates of the pointwise ones.
struct MapSpace {
    using Point = L2Map;
    using Tangent = MapTangent;

    std::shared_ptr<const Domain> domain;
    Space target;

    MapSpace(Domain d, Space y) : target(std::move(y))
    {
        if (d.adj.size() != static_cast<std::size_t>(d.nodes))
            d.validate();
        domain = std::make_shared<const Domain>(std::move(d));
    }

    std::size_t size() const { return static_cast<std::size_t>(domain->nodes); }
    double mass(std::size_t x) const { return domain->m[x]; }

    void validate(const L2Map& u) const
    {
        if (u.values.size() != size())
            throw Error(Errc::invalid_point, "map must assign one value per node");
        for (const auto& p : u.values)
            hflow::validate(target, p);
    }

    void require_shape(const L2Map& u) const
    {
        if (u.values.size() != size())
            throw Error(Errc::invalid_point, "map does not match the domain");
    }

    double distance(const L2Map& u, const L2Map& v) const
    {
        require_shape(u);
        require_shape(v);
        double s = 0.0;
        for (std::size_t x = 0; x < size(); ++x)
            s += mass(x) * distance_sq(target, u.values[x], v.values[x]);
        return std::sqrt(s);
    }

    L2Map geodesic(const L2Map& u, const L2Map& v, double t) const
    {
        require_shape(u);
        require_shape(v);
        L2Map out;
        out.values.reserve(size());
        for (std::size_t x = 0; x < size(); ++x)
            out.values.push_back(geodesic_point(target, u.values[x], v.values[x], t));
        return out;
    }

    MapTangent log(const L2Map& u, const L2Map& v) const
    {
        require_shape(u);
        require_shape(v);
        MapTangent out;
        for (std::size_t x = 0; x < size(); ++x)
            out.nodes.push_back(log_map(target, u.values[x], v.values[x]));
        return out;
    }

    L2Map exp(const L2Map& u, const MapTangent& v) const
    {
        L2Map out;
        for (std::size_t x = 0; x < size(); ++x)
            out.values.push_back(exp_point(target, u.values[x], v.nodes.at(x)));
        return out;
    }

    double exp_alpha(const L2Map& u, const MapTangent& v) const
    {
        double a = 1.0;
        for (std::size_t x = 0; x < size(); ++x)
            a = std::max(a, hflow::exp_alpha(target, u.values[x], v.nodes.at(x)));
        return a;
    }

    bool same(const L2Map& u, const L2Map& v) const
    {
        if (u.values.size() != v.values.size())
            return false;
        for (std::size_t x = 0; x < u.values.size(); ++x)
            if (!same_point(u.values[x], v.values[x]))
                return false;
        return true;
    }

    double inner(const MapTangent& v, const MapTangent& w) const
    {
        double s = 0.0;
        for (std::size_t x = 0; x < size(); ++x)
            s += mass(x) * tangent_inner(target, v.nodes.at(x), w.nodes.at(x));
        return s;
    }

    double norm(const MapTangent& v) const { return std::sqrt(std::max(0.0, inner(v, v))); }

    double cone_distance(const MapTangent& v, const MapTangent& w) const
    {
        double s = 0.0;
        for (std::size_t x = 0; x < size(); ++x) {
            const double d = tangent_distance(target, v.nodes.at(x), w.nodes.at(x));
            s += mass(x) * d * d;
        }
        return std::sqrt(s);
    }

    MapTangent oplus(const MapTangent& v, const MapTangent& w) const
    {
        MapTangent out;
        for (std::size_t x = 0; x < size(); ++x)
            out.nodes.push_back(tangent_oplus(v.nodes.at(x), w.nodes.at(x)));
        return out;
    }

    MapTangent scale(double c, const MapTangent& v) const
    {
        MapTangent out;
        for (const auto& t : v.nodes)
            out.nodes.push_back(tangent_scale(c, t));
        return out;
    }

    std::optional<MapTangent> combine(std::span<const double> c, std::span<const MapTangent> vs) const
    {
        MapTangent out;
        std::vector<TangentVector> comp(vs.size());
        for (std::size_t x = 0; x < size(); ++x) {
            for (std::size_t k = 0; k < vs.size(); ++k)
                comp[k] = vs[k].nodes.at(x);
            auto r = tangent_combine(c, comp);
            if (!r)
                return std::nullopt;
            out.nodes.push_back(std::move(*r));
        }
        return out;
    }

    bool is_zero(const MapTangent& v) const
    {
        return std::all_of(v.nodes.begin(), v.nodes.end(), [](const TangentVector& t) { return hflow::is_zero(t); });
    }

    MapTangent zero(const L2Map& u) const
    {
        MapTangent out;
        for (const auto& p : u.values)
            out.nodes.push_back(zero_tangent(target, p));
        return out;
    }

    bool cat0() const { return target.is_cat0(); }
};

inline double l2_distance(const MapSpace& ms, const L2Map& u, const L2Map& v) { return ms.distance(u, v); }

inline L2Map l2_geodesic(const MapSpace& ms, const L2Map& u, const L2Map& v, double t) { return ms.geodesic(u, v, t); }

inline L2Map constant_map(const MapSpace& ms, const SpacePoint& p) { return L2Map{std::vector<SpacePoint>(ms.size(), p)}; }

// ---------------------------------------------------------------------------
// Sections of the pullback cone

using PointDirection = Direction<SpaceGeometry>;
using MapDirection = Direction<MapSpace>;

struct Section {
    L2Map base;
    std::vector<PointDirection> nodes;
};

/// Node x of the section: alpha * germ(u(x) -> w(x)).
inline Section iota(const MapSpace& ms, const MapDirection& v)
{
    ms.require_shape(v.base);
    const SpaceGeometry pg(ms.target);
    Section out{v.base, {}};
    for (std::size_t x = 0; x < ms.size(); ++x) {
        if (v.is_zero())
            out.nodes.push_back(zero_direction<SpaceGeometry>(v.base.values[x]));
        else
            out.nodes.push_back(make_direction(pg, v.base.values[x], v.germ->target.values[x], v.germ->alpha));
    }
    return out;
}

/// Inverse of iota on germ sections; germs with a common scale keep their targets.
inline MapDirection iota_inv(const MapSpace& ms, const Section& s)
{
    ms.require_shape(s.base);
    if (s.nodes.size() != ms.size())
        throw Error(Errc::mixed_base, "section does not match the domain");
    std::optional<double> alpha;
    bool common = true;
    for (std::size_t x = 0; x < ms.size(); ++x) {
        if (!same_point(s.nodes[x].base, s.base.values[x]))
            throw Error(Errc::mixed_base, "section node is not based at the base map");
        if (s.nodes[x].is_zero())
            continue;
        if (!alpha)
            alpha = s.nodes[x].germ->alpha;
        else if (*alpha != s.nodes[x].germ->alpha)
            common = false;
    }
    if (!alpha)
        return zero_direction<MapSpace>(s.base);
    if (common) {
        L2Map target = s.base;
        for (std::size_t x = 0; x < ms.size(); ++x)
            if (!s.nodes[x].is_zero())
                target.values[x] = s.nodes[x].germ->target;
        return make_direction(ms, s.base, target, *alpha);
    }
    const SpaceGeometry pg(ms.target);
    MapTangent t;
    for (const auto& d : s.nodes)
        t.nodes.push_back(to_tangent(pg, d));
    return from_tangent(ms, s.base, t);
}

inline std::vector<double> section_pointwise_norms(const MapSpace& ms, const Section& s)
{
    const SpaceGeometry pg(ms.target);
    std::vector<double> out;
    for (const auto& d : s.nodes)
        out.push_back(norm(pg, d));
    return out;
}

inline double section_norm(const MapSpace& ms, const Section& s)
{
    const auto n = section_pointwise_norms(ms, s);
    double acc = 0.0;
    for (std::size_t x = 0; x < n.size(); ++x)
        acc += ms.mass(x) * n[x] * n[x];
    return std::sqrt(acc);
}

inline double section_inner(const MapSpace& ms, const Section& a, const Section& b)
{
    const SpaceGeometry pg(ms.target);
    double acc = 0.0;
    for (std::size_t x = 0; x < ms.size(); ++x)
        acc += ms.mass(x) * inner(pg, a.nodes.at(x), b.nodes.at(x));
    return acc;
}

inline double section_distance(const MapSpace& ms, const Section& a, const Section& b)
{
    const SpaceGeometry pg(ms.target);
    double acc = 0.0;
    for (std::size_t x = 0; x < ms.size(); ++x) {
        const double d = cone_distance(pg, a.nodes.at(x), b.nodes.at(x)).value;
        acc += ms.mass(x) * d * d;
    }
    return std::sqrt(acc);
}

inline Section section_oplus(const MapSpace& ms, const Section& a, const Section& b)
{
    const SpaceGeometry pg(ms.target);
    Section out{a.base, {}};
    for (std::size_t x = 0; x < ms.size(); ++x)
        out.nodes.push_back(oplus(pg, a.nodes.at(x), b.nodes.at(x)));
    return out;
}

/// (f S)_x = f(x) S_x for a nonnegative function f.
inline Section section_scale(const MapSpace& ms, const std::vector<double>& f, const Section& s)
{
    const SpaceGeometry pg(ms.target);
    Section out{s.base, {}};
    for (std::size_t x = 0; x < ms.size(); ++x)
        out.nodes.push_back(scale(pg, f.at(x), s.nodes.at(x)));
    return out;
}

inline Section zero_section(const MapSpace& ms, const L2Map& u)
{
    Section out{u, {}};
    for (std::size_t x = 0; x < ms.size(); ++x)
        out.nodes.push_back(zero_direction<SpaceGeometry>(u.values[x]));
    return out;
}

} // namespace hflow
