#pragma once
/*
 * Seeded generators and the property suites built on them.
 */

#include <cstdint>
#include <cstdio>
#include <random>

#include "functionals.hpp"
#include "ks.hpp"

namespace hflow {

struct GenConfig {
    double range = 2.0;              // coordinate range / spider distance bound
    double spider_origin_prob = 0.0; // mass put on the spider origin
    double hyperbolic_radius = 3.0;  // radius of the tangent disk at (1,0,0)
    double sphere_cap = std::numbers::pi; // polar angle bound around the north pole
    double zero_direction_prob = 0.0;
};

class Generator {
public:
    explicit Generator(std::uint64_t seed, GenConfig cfg = {}) : rng_(seed), cfg_(cfg) {}

    const GenConfig& config() const { return cfg_; }
    std::mt19937_64& engine() { return rng_; }

    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
    bool chance(double p) { return p > 0.0 && uniform(0.0, 1.0) < p; }

    SpacePoint point(const Space& space)
    {
        return std::visit(
            overloaded{
                [&](const Euclidean& e) {
                    std::vector<double> x(static_cast<std::size_t>(e.dim));
                    for (auto& c : x)
                        c = uniform(-cfg_.range, cfg_.range);
                    return euclidean_point(std::move(x));
                },
                [&](const Spider& s) {
                    if (chance(cfg_.spider_origin_prob))
                        return spider_origin();
                    const int ray = integer(1, s.rays);
                    double t = 0.0;
                    while (t == 0.0)
                        t = uniform(0.0, cfg_.range);
                    return spider_point(ray, t);
                },
                [&](const Hyperbolic2&) {
                    const double r = cfg_.hyperbolic_radius * std::sqrt(uniform(0.0, 1.0));
                    const double th = uniform(0.0, 2.0 * std::numbers::pi);
                    return SpacePoint{
                        HyperboloidPoint{detail::lift_hyperboloid(std::sinh(r) * std::cos(th), std::sinh(r) * std::sin(th))}};
                },
                [&](const Sphere2& s) {
                    // uniform on the cap {polar angle <= sphere_cap}
                    const double zmin = std::cos(std::min(cfg_.sphere_cap, std::numbers::pi));
                    const double z = uniform(zmin, 1.0);
                    const double ph = uniform(0.0, 2.0 * std::numbers::pi);
                    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                    return SpacePoint{SpherePoint{detail::to_sphere({rho * std::cos(ph), rho * std::sin(ph), z}, s.radius())}};
                },
                [&](const Product& p) {
                    std::vector<SpacePoint> f;
                    for (const auto& s : p.factors)
                        f.push_back(point(s));
                    return product_point(std::move(f));
                },
            },
            space.kind);
    }

    /// alpha * germ toward a generated point, alpha uniform in [0.5, 2].
    PointDirection direction(const Space& space, const SpacePoint& y)
    {
        const SpaceGeometry geo(space);
        if (chance(cfg_.zero_direction_prob))
            return zero_direction<SpaceGeometry>(y);
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto z = point(space);
            if (const auto* s = std::get_if<Sphere2>(&space.kind))
                if (distance(space, y, z) > 0.9 * std::numbers::pi * s->radius())
                    continue;
            auto d = make_direction(geo, y, z, uniform(0.5, 2.0));
            if (!d.is_zero())
                return d;
        }
        return zero_direction<SpaceGeometry>(y);
    }

    L2Map map(const MapSpace& ms)
    {
        L2Map u;
        for (std::size_t x = 0; x < ms.size(); ++x)
            u.values.push_back(point(ms.target));
        return u;
    }

    /// Connected random domain: a spanning path plus random chords.
    Domain domain(int nodes, int extra_edges = 0)
    {
        Domain d;
        d.nodes = nodes;
        for (int i = 0; i < nodes; ++i)
            d.m.push_back(uniform(0.5, 2.0));
        for (int i = 0; i + 1 < nodes; ++i)
            d.edges.push_back({i, i + 1, uniform(0.5, 2.0)});
        for (int k = 0; k < extra_edges && nodes > 2; ++k) {
            const int a = integer(0, nodes - 1);
            int b = integer(0, nodes - 1);
            if (a == b)
                b = (a + 1) % nodes;
            d.edges.push_back({a, b, uniform(0.5, 2.0)});
        }
        d.r = 1.0;
        d.validate();
        return d;
    }

private:
    std::mt19937_64 rng_;
    GenConfig cfg_;
};

inline SpacePoint gen_point(const Space& space, std::uint64_t seed, GenConfig cfg = {})
{
    return Generator(seed, cfg).point(space);
}

inline PointDirection gen_direction(const Space& space, const SpacePoint& y, std::uint64_t seed, GenConfig cfg = {})
{
    return Generator(seed, cfg).direction(space, y);
}

inline L2Map gen_map(const MapSpace& ms, std::uint64_t seed, GenConfig cfg = {}) { return Generator(seed, cfg).map(ms); }

// ---------------------------------------------------------------------------
// Property reports

struct PropertyReport {
    std::string name;
    std::size_t samples = 0;
    double max_violation = 0.0;
    bool pass = true;
};

struct SuiteConfig {
    Space space = Space::euclidean(2);
    std::uint64_t seed = 42;
    std::size_t samples = 1000;
    double tau = 1e-4;
    double T = 2.0;
    int nodes = 8;
};

namespace props {

inline PropertyReport finish(std::string name, std::size_t n, double worst, double tol)
{
    if (n == 0)
        worst = 0.0;
    return {std::move(name), n, worst, worst <= tol};
}

inline GenConfig branching_config(const Space& space)
{
    GenConfig g;
    g.spider_origin_prob = 0.25;
    if (std::holds_alternative<Sphere2>(space.kind))
        g.sphere_cap = 0.2 * std::numbers::pi; // keeps triangles below the perimeter bound
    return g;
}

/// -min cat_defect over random triples (positive = comparison failure).
inline PropertyReport cat_comparison(const Space& space, std::size_t samples, std::uint64_t seed, double tol = 1e-9)
{
    Generator gen(seed, branching_config(space));
    double worst = -kInf;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto a = gen.point(space), b = gen.point(space), c = gen.point(space);
        worst = std::max(worst, -cat_defect(space, a, b, c, gen.uniform(0.0, 1.0)));
    }
    return finish("cat_comparison", samples, worst, tol);
}

/// | d(g_t, g_s) - |t-s| d(a,b) |.
inline PropertyReport geodesic_consistency(const Space& space, std::size_t samples, std::uint64_t seed,
                                           double tol = 1e-10)
{
    Generator gen(seed, branching_config(space));
    double worst = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto a = gen.point(space), b = gen.point(space);
        const double t = gen.uniform(0.0, 1.0), s = gen.uniform(0.0, 1.0);
        const double d = distance(space, a, b);
        const double err = std::abs(distance(space, geodesic_point(space, a, b, t), geodesic_point(space, a, b, s)) -
                                    std::abs(t - s) * d);
        worst = std::max(worst, err / std::max(1.0, d));
    }
    return finish("geodesic_consistency", samples, worst, tol);
}

/// d(P a, P b) - d(a, b) for projections onto random balls.
inline PropertyReport projection_lipschitz(const Space& space, std::size_t samples, std::uint64_t seed,
                                           double tol = 1e-8)
{
    Generator gen(seed, branching_config(space));
    double worst = -kInf;
    const double rmax = std::min(1.0, 0.45 * space.curvature().diameter());
    for (std::size_t i = 0; i < samples; ++i) {
        const ConvexSet C{Ball{gen.point(space), gen.uniform(0.0, rmax)}};
        const auto a = gen.point(space), b = gen.point(space);
        worst = std::max(worst, distance(space, metric_projection(space, C, a), metric_projection(space, C, b)) -
                                    distance(space, a, b));
    }
    return finish("projection_lipschitz", samples, worst, tol);
}

/// Cone-calculus inequalities on random direction pairs; a fifth of the
/// pairs are collinear so that the Cauchy-Schwarz equality case is exercised.
inline std::vector<PropertyReport> cone_calculus(const Space& space, std::size_t samples, std::uint64_t seed,
                                                 double tol = 1e-8, double limit_tol = 1e-6)
{
    const SpaceGeometry geo(space);
    GenConfig cfg = branching_config(space);
    cfg.zero_direction_prob = 0.05;
    Generator gen(seed, cfg);
    double cs = -kInf, cseq = 0.0, pi = -kInf, concav = -kInf, mono = 0.0, dyad = 0.0, dyad_sum = 0.0;
    std::size_t n_eq = 0, n_dyadic = 0;
    const bool bracket = space.is_cat0();
    for (std::size_t i = 0; i < samples; ++i) {
        const auto y = gen.point(space);
        const auto v = gen.direction(space, y);
        PointDirection w = gen.direction(space, y);
        if (gen.chance(0.2) && !v.is_zero())
            w = make_direction(geo, y, geodesic_point(space, y, v.germ->target, gen.uniform(0.1, 1.0)),
                               gen.uniform(0.5, 2.0));
        const auto u = gen.direction(space, y);
        const double nv = norm(geo, v), nw = norm(geo, w);
        const double ip = inner(geo, v, w);
        const double sc = std::max(1.0, nv * nw);
        cs = std::max(cs, (std::abs(ip) - nv * nw) / sc);
        if (std::abs(ip - nv * nw) < 1e-10 * sc) {
            ++n_eq;
            cseq = std::max(cseq, cone_distance(geo, scale(geo, nw, v), scale(geo, nv, w)).value / sc);
        }
        const auto s = oplus(geo, v, w);
        const double dvw = cone_distance(geo, v, w).value;
        const double ns = norm(geo, s);
        pi = std::max(pi, (dvw * dvw + ns * ns - 2.0 * (nv * nv + nw * nw)) / std::max(1.0, nv * nv + nw * nw));
        const auto s2 = oplus(geo, v, u);
        concav = std::max(concav, (inner(geo, v, w) + inner(geo, u, w) - inner(geo, s2, w)) /
                                      std::max(1.0, (nv + norm(geo, u)) * nw));
        if (bracket) {
            // monotone dyadic quotients and agreement with the closed forms
            // nondecreasing up to 1e-12 plus the rounding floor of chart
            // coordinates at the smallest sampled t
            const auto q = dyadic_quotients(geo, v, w);
            const double t_min = std::ldexp(1.0, -(detail::first_dyadic(v, w, 20)));
            const double floor = dyadic_rounding_floor(y, t_min);
            for (std::size_t k = 1; k < q.size(); ++k)
                mono = std::max(mono, q[k] - q[k - 1] - 1e-12 * std::max(1.0, q[k - 1]) - floor);
            const auto dv = dyadic_cone_distance(geo, v, w);
            const double lo = dv.value - dv.error_bound.value_or(0.0);
            dyad = std::max(dyad, (std::max(lo - dvw - floor, dvw - dv.value - floor)) / std::max(1.0, dvw));
            const auto ds = dyadic_oplus(geo, v, w);
            dyad_sum = std::max(dyad_sum, cone_distance(geo, ds, s).value / std::max(1.0, nv + nw));
            ++n_dyadic;
        }
    }
    std::vector<PropertyReport> out{
        finish("cauchy_schwarz", samples, cs, tol),
        finish("cauchy_schwarz_equality", n_eq, cseq, limit_tol),
        finish("parallelogram", samples, pi, tol),
        finish("oplus_concavity", samples, concav, tol),
    };
    if (bracket) {
        out.push_back(finish("monotone_bracket", n_dyadic, std::max(0.0, mono), 0.0));
        out.push_back(finish("dyadic_distance", n_dyadic, dyad, limit_tol));
        out.push_back(finish("dyadic_oplus", n_dyadic, dyad_sum, limit_tol));
    }
    return out;
}

/// Flow verifiers for E = 1/2 d^2(., z) from a random start.
inline std::vector<PropertyReport> flow_inequalities(const Space& space, double tau, double T, std::uint64_t seed,
                                                     std::size_t tests = 8, double tol = 1e-2)
{
    const SpaceGeometry geo(space);
    GenConfig cfg;
    cfg.sphere_cap = 0.2 * std::numbers::pi;
    Generator gen(seed, cfg);
    const auto z = gen.point(space);
    const auto E = half_squared_distance(geo, z);
    const long N = std::lround(T / tau);
    const auto y0 = gen.point(space), w0 = gen.point(space);
    const auto ty = flow(geo, E, y0, T, N);
    const auto tw = flow(geo, E, w0, T, N);
    std::vector<SpacePoint> zs;
    for (std::size_t i = 0; i < tests; ++i)
        zs.push_back(gen.point(space));
    std::vector<PropertyReport> out;
    for (const auto& v : {verify_evi(geo, ty, E, E.lambda, zs), verify_contraction(geo, ty, tw, E.lambda),
                          verify_apriori(geo, ty, w0, E, E.lambda), verify_regularization(geo, ty, E, E.lambda)})
        out.push_back(finish(v.check, v.samples, v.max_violation, tol));
    return out;
}

/// d(J a, J b) - d(a, b) / (1 + lambda tau).
inline PropertyReport prox_firmness(const Space& space, std::size_t samples, std::uint64_t seed, double tol = 1e-8)
{
    const SpaceGeometry geo(space);
    Generator gen(seed, branching_config(space));
    double worst = -kInf;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto E = half_squared_distance(geo, gen.point(space));
        const double tau = gen.uniform(0.01, 2.0);
        const auto a = gen.point(space), b = gen.point(space);
        worst = std::max(worst, distance(space, prox(geo, E, tau, a), prox(geo, E, tau, b)) -
                                    distance(space, a, b) / (1.0 + E.lambda * tau));
    }
    return finish("prox_firmness", samples, worst, tol);
}

/// Comparison defect of L^2(Omega, Y) and the iota isometry residuals.
inline std::vector<PropertyReport> l2_structure(const Space& target, std::size_t samples, std::uint64_t seed,
                                                int min_nodes = 5, int max_nodes = 20)
{
    Generator gen(seed, branching_config(target));
    const SpaceGeometry pg(target);
    double cat = -kInf, e1 = 0.0, e2 = 0.0, e3 = 0.0, e4 = 0.0, e5 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const MapSpace ms(gen.domain(gen.integer(min_nodes, max_nodes)), target);
        const auto u = gen.map(ms), v = gen.map(ms), w = gen.map(ms);
        const double t = gen.uniform(0.0, 1.0);
        const double duv = ms.distance(u, v), dvw = ms.distance(v, w), dwu = ms.distance(w, u);
        const double dg = ms.distance(u, ms.geodesic(v, w, t));
        cat = std::max(cat, dg * dg - ((1 - t) * duv * duv + t * dwu * dwu - t * (1 - t) * dvw * dvw));

        const auto a = make_direction(ms, u, v, gen.uniform(0.5, 2.0));
        const auto b = make_direction(ms, u, w, gen.uniform(0.5, 2.0));
        const auto Sa = iota(ms, a), Sb = iota(ms, b);
        const double na = norm(ms, a), nb = norm(ms, b);
        const double sc = std::max(1.0, na * nb);
        e1 = std::max(e1, std::abs(na * na - std::pow(section_norm(ms, Sa), 2)) / std::max(1.0, na * na));
        e2 = std::max(e2, std::abs(inner(ms, a, b) - section_inner(ms, Sa, Sb)) / sc);
        // distance through the metric of L^2 alone (dyadic germ quotients)
        const auto dd = dyadic_cone_distance(ms, a, b);
        const double pointwise = section_distance(ms, Sa, Sb);
        const double lo = dd.value - dd.error_bound.value_or(0.0);
        e3 = std::max(e3, std::max(0.0, std::max(lo - pointwise, pointwise - dd.value) - 1e-8) /
                              std::max(1.0, pointwise));
        const double c = gen.uniform(0.0, 3.0);
        e4 = std::max(e4, section_distance(ms, iota(ms, scale(ms, c, a)),
                                           section_scale(ms, std::vector<double>(ms.size(), c), Sa)) /
                              std::max(1.0, c * na));
        e5 = std::max(e5, section_distance(ms, iota(ms, dyadic_oplus(ms, a, b)), section_oplus(ms, Sa, Sb)) /
                              std::max(1.0, na + nb));
    }
    return {finish("l2_comparison", samples, cat, 1e-9), finish("iota_e1", samples, e1, 1e-8),
            finish("iota_e2", samples, e2, 1e-8),        finish("iota_e3", samples, e3, 1e-8),
            finish("iota_e4", samples, e4, 1e-6),        finish("iota_e5", samples, e5, 1e-6)};
}

/// Convexity of the discrete energy and its improved form along L^2 geodesics.
inline std::vector<PropertyReport> ks_convexity(const Space& target, std::size_t samples, std::uint64_t seed,
                                                int nodes = 8)
{
    Generator gen(seed, branching_config(target));
    double conv = -kInf, impr = -kInf;
    for (std::size_t i = 0; i < samples; ++i) {
        const KSEnergy E(MapSpace(gen.domain(nodes, nodes / 2), target));
        const auto u = gen.map(E.space()), v = gen.map(E.space());
        const double t = gen.chance(0.5) ? 0.5 : gen.uniform(0.0, 1.0);
        const double Eg = E.energy(E.space().geodesic(u, v, t));
        const double sc = std::max(1.0, E.energy(u) + E.energy(v));
        conv = std::max(conv, (Eg - (1 - t) * E.energy(u) - t * E.energy(v)) / sc);
        impr = std::max(impr, improved_convexity_check(E, u, v, t) / sc);
    }
    return {finish("ks_convexity", samples, conv, 1e-9), finish("ks_improved_convexity", samples, impr, 1e-8)};
}

} // namespace props

inline const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"cat0_comparison", "geodesics",    "projection", "cone_calculus",
                                                "evi",             "prox_firmness", "l2_structure", "ks_convexity"};
    return names;
}

/// Runs a named suite; throws unknown_suite for other names.
inline std::vector<PropertyReport> run_suite(const std::string& name, const SuiteConfig& cfg)
{
    if (name == "cat0_comparison")
        return {props::cat_comparison(cfg.space, cfg.samples, cfg.seed)};
    if (name == "geodesics")
        return {props::geodesic_consistency(cfg.space, cfg.samples, cfg.seed)};
    if (name == "projection")
        return {props::projection_lipschitz(cfg.space, cfg.samples, cfg.seed)};
    if (name == "cone_calculus")
        return props::cone_calculus(cfg.space, cfg.samples, cfg.seed);
    if (name == "evi")
        return props::flow_inequalities(cfg.space, cfg.tau, cfg.T, cfg.seed);
    if (name == "prox_firmness")
        return {props::prox_firmness(cfg.space, cfg.samples, cfg.seed)};
    if (name == "l2_structure")
        return props::l2_structure(cfg.space, cfg.samples, cfg.seed);
    if (name == "ks_convexity")
        return props::ks_convexity(cfg.space, cfg.samples, cfg.seed, cfg.nodes);
    throw Error(Errc::unknown_suite, "no suite named '" + name + "'");
}

inline bool all_pass(const std::vector<PropertyReport>& reports)
{
    return std::all_of(reports.begin(), reports.end(), [](const PropertyReport& r) { return r.pass; });
}

} // namespace hflow
