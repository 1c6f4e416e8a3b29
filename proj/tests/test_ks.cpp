#include <gtest/gtest.h>

#include "hflow/harness.hpp"
#include "oracles.hpp"

using namespace hflow;

namespace {

Errc code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return Errc::unsupported;
}

double x0(const SpacePoint& p) { return std::get<EuclideanPoint>(p.v).x[0]; }

L2Map line_map(std::initializer_list<double> vals)
{
    L2Map u;
    for (double v : vals)
        u.values.push_back(euclidean_point({v}));
    return u;
}

/// L^2 gradient of the discrete energy written out from the definitions:
/// dE/du_x = sum_y w_xy (m_x/W_x + m_y/W_y)/r^2 (u_x - u_y), divided by m_x.
std::vector<std::vector<double>> gradient_oracle(const Domain& d, const L2Map& u)
{
    std::vector<double> W(d.nodes, 0.0);
    for (const auto& e : d.edges) {
        W[e.i] += e.w;
        W[e.j] += e.w;
    }
    const std::size_t dim = std::get<EuclideanPoint>(u.values[0].v).x.size();
    std::vector<std::vector<double>> g(d.nodes, std::vector<double>(dim, 0.0));
    for (const auto& e : d.edges) {
        const double a = e.w * (d.m[e.i] / W[e.i] + d.m[e.j] / W[e.j]) / (d.r * d.r);
        const auto& ui = std::get<EuclideanPoint>(u.values[e.i].v).x;
        const auto& uj = std::get<EuclideanPoint>(u.values[e.j].v).x;
        for (std::size_t c = 0; c < dim; ++c) {
            g[e.i][c] += a * (ui[c] - uj[c]) / d.m[e.i];
            g[e.j][c] += a * (uj[c] - ui[c]) / d.m[e.j];
        }
    }
    for (int b : d.boundary)
        std::fill(g[b].begin(), g[b].end(), 0.0);
    return g;
}

/// Path 0-1-2 with unit measures and weights, boundary at both ends.
Domain unit_path()
{
    Domain d;
    d.nodes = 3;
    d.m = {1, 1, 1};
    d.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
    d.boundary = {0, 2};
    d.validate();
    return d;
}

Domain star(int legs)
{
    Domain d;
    d.nodes = legs + 1;
    d.m.assign(d.nodes, 1.0);
    for (int k = 1; k <= legs; ++k) {
        d.edges.push_back({0, k, 1.0});
        d.boundary.push_back(k);
    }
    d.validate();
    return d;
}

} // namespace

TEST(KS, DensityAndEnergyExamples)
{
    const KSEnergy E(MapSpace(unit_path(), Space::euclidean(1)));
    const auto u = line_map({0, 1, 2});
    const auto e = E.density(u);
    for (double v : e)
        EXPECT_DOUBLE_EQ(v, 1.0);
    EXPECT_DOUBLE_EQ(E.energy(u), 1.5);
    EXPECT_EQ(E.energy(line_map({3, 3, 3})), 0.0);
    Domain iso;
    iso.nodes = 3;
    iso.m = {1, 1, 1};
    iso.edges = {{0, 1, 1.0}};
    const KSEnergy F(MapSpace(iso, Space::euclidean(1)));
    EXPECT_EQ(F.density(line_map({0, 1, 5}))[2], 0.0);
}

TEST(KS, BoundaryEnergy)
{
    const MapSpace ms(unit_path(), Space::euclidean(1));
    const KSEnergy E(ms, line_map({0, 7, 2}));
    EXPECT_DOUBLE_EQ(E.energy_b(line_map({0, 1, 2})), 1.5);
    EXPECT_TRUE(std::isinf(E.energy_b(line_map({0, 1, 2.5}))));
    EXPECT_FALSE(E.is_free(0));
    EXPECT_TRUE(E.is_free(1));
}

TEST(KS, HarmonicExamples)
{
    const MapSpace ms(Domain::path(3, 1.0, 1.0, 1.0), Space::euclidean(1));
    const KSEnergy E(ms, line_map({0, 0, 2}));
    const auto h = harmonic(E, line_map({0, 5, 2}));
    EXPECT_NEAR(x0(h.values[1]), 1.0, 1e-12);

    const MapSpace sp(star(3), Space::spider(3));
    const L2Map data{{spider_origin(), spider_point(1, 1), spider_point(2, 1), spider_point(3, 1)}};
    const KSEnergy S(sp, data);
    const L2Map init{{spider_point(2, 0.7), spider_point(1, 1), spider_point(2, 1), spider_point(3, 1)}};
    const auto res = harmonic_solve(S, init);
    EXPECT_NEAR(distance(sp.target, res.map.values[0], spider_origin()), 0.0, 1e-9);
    EXPECT_LE(res.slope, 1e-6);
    EXPECT_LE(res.laplacian_norm, 1e-4);

    Domain all;
    all.nodes = 2;
    all.m = {1, 1};
    all.edges = {{0, 1, 1}};
    all.boundary = {0, 1};
    all.validate();
    const MapSpace am(all, Space::euclidean(1));
    const KSEnergy A(am, line_map({3, 4}));
    EXPECT_TRUE(am.same(harmonic(A, line_map({3, 4})), line_map({3, 4})));

    const KSEnergy free(ms);
    EXPECT_EQ(code_of([&] { harmonic(free, line_map({0, 1, 2})); }), Errc::domain_error);
}

TEST(KS, HarmonicIntoHyperbolicIsGlobalMinimizer)
{
    const auto target = Space::hyperbolic2();
    Generator gen(3);
    Domain d = Domain::path(6, 1.0, 1.0, 1.0);
    const MapSpace ms(d, target);
    const auto data = gen.map(ms);
    const KSEnergy E(ms, data);
    const auto h = harmonic(E, data);
    const auto F = E.functional();
    std::vector<L2Map> tests;
    for (int i = 0; i < 200; ++i) {
        auto v = gen.map(ms);
        for (int b : d.boundary)
            v.values[b] = data.values[b];
        tests.push_back(l2_geodesic(ms, h, v, gen.uniform(0.0, 1.0)));
    }
    EXPECT_LE(check_subdifferential(ms, F, h, zero_direction<MapSpace>(h), tests), 1e-10);
}

TEST(KS, LaplacianMatchesGradientOracle)
{
    Generator gen(4);
    Domain d = gen.domain(7, 3);
    d.boundary = {0, 6};
    d.validate();
    const MapSpace ms(d, Space::euclidean(2));
    const auto u = gen.map(ms);
    const KSEnergy E(ms, u);
    const auto lap = laplacian(E, u);
    const auto g = gradient_oracle(d, u);
    const SpaceGeometry pg(ms.target);
    for (int x = 0; x < d.nodes; ++x) {
        const auto& n = lap.nodes[x];
        std::vector<double> v(2, 0.0);
        if (!n.is_zero())
            v = std::get<LinearTangent>(to_tangent(pg, n).v).v;
        const double scale = std::max(1.0, std::hypot(g[x][0], g[x][1]));
        EXPECT_NEAR(v[0], -g[x][0], 1e-3 * scale) << x;
        EXPECT_NEAR(v[1], -g[x][1], 1e-3 * scale) << x;
    }
    for (int b : d.boundary)
        EXPECT_TRUE(lap.nodes[b].is_zero());
    // the library's own flat formula agrees with the oracle
    const auto fl = flat_laplacian(E, u);
    for (int x = 0; x < d.nodes; ++x)
        for (int c = 0; c < 2; ++c)
            EXPECT_NEAR(fl[x][c], -g[x][c], 1e-12);
}

TEST(KS, LaplacianOfHarmonicVanishes)
{
    const MapSpace ms(Domain::path(9, 0.1, 10.0, 0.1), Space::euclidean(2));
    L2Map data;
    for (int i = 0; i < 9; ++i)
        data.values.push_back(euclidean_point({0.0, 0.0}));
    data.values[8] = euclidean_point({1.0, 2.0});
    const KSEnergy E(ms, data);
    const auto res = harmonic_solve(E, data);
    EXPECT_LE(res.laplacian_norm, 1e-4);
    for (int i = 0; i < 9; ++i) {
        EXPECT_NEAR(std::get<EuclideanPoint>(res.map.values[i].v).x[0], i / 8.0, 1e-12);
        EXPECT_NEAR(std::get<EuclideanPoint>(res.map.values[i].v).x[1], 2 * i / 8.0, 1e-12);
    }
}

TEST(KS, SlopeEqualsLaplacianNormOnSpiderTarget)
{
    Generator gen(5, props::branching_config(Space::spider(3)));
    Domain d = Domain::path(5, 1.0, 1.0, 1.0);
    const MapSpace ms(d, Space::spider(3));
    auto u = gen.map(ms);
    const KSEnergy E(ms, u);
    const auto F = E.functional();
    const auto tr = flow(ms, F, u, 0.05, 50);
    const auto& y = tr.points.back();
    const double sl = slope(ms, F, y).value;
    const double ln = section_norm(ms, laplacian(E, y));
    EXPECT_NEAR(sl, ln, 1e-3 * std::max(1.0, ln));
}

TEST(KS, FirstVariation)
{
    // flat case: equality
    Generator gen(6);
    Domain d = gen.domain(6, 2);
    d.boundary = {0};
    d.validate();
    const MapSpace ms(d, Space::euclidean(2));
    const auto u = gen.map(ms);
    const KSEnergy E(ms, u);
    auto v = gen.map(ms);
    v.values[0] = u.values[0];
    const auto lap = laplacian(E, u);
    const auto fv = first_variation_check(E, u, lap, v);
    EXPECT_NEAR(fv.lhs, fv.rhs, 1e-6 * std::max(1.0, std::abs(fv.rhs)));
    const auto same = first_variation_check(E, u, lap, u);
    EXPECT_EQ(same.lhs, 0.0);
    EXPECT_EQ(same.rhs, 0.0);

    // spider target: inequality
    Generator sg(7, props::branching_config(Space::spider(3)));
    Domain sd = Domain::path(5, 1.0, 1.0, 1.0);
    const MapSpace sm(sd, Space::spider(3));
    const auto su = sg.map(sm);
    const KSEnergy S(sm, su);
    const auto slap = laplacian(S, su);
    for (int i = 0; i < 5; ++i) {
        auto sv = sg.map(sm);
        for (int b : sd.boundary)
            sv.values[b] = su.values[b];
        EXPECT_LE(first_variation_check(S, su, slap, sv).violation, 1e-4);
    }
}

TEST(KS, ImprovedConvexity)
{
    Generator gen(8);
    const KSEnergy E(MapSpace(gen.domain(6, 3), Space::euclidean(2)));
    const auto u = gen.map(E.space()), v = gen.map(E.space());
    EXPECT_NEAR(improved_convexity_check(E, u, u, 0.5), 0.0, 1e-14);
    // flat case: E(u_t) = (1-t)E(u) + tE(v) - t(1-t)E(u - v) exactly, and
    // E(|u - v|) <= E(u - v) pointwise-triangle, so the defect is <= 0
    const double t = 0.3;
    L2Map diff;
    for (std::size_t x = 0; x < E.space().size(); ++x) {
        const auto& a = std::get<EuclideanPoint>(u.values[x].v).x;
        const auto& b = std::get<EuclideanPoint>(v.values[x].v).x;
        diff.values.push_back(euclidean_point({a[0] - b[0], a[1] - b[1]}));
    }
    const double Eg = E.energy(E.space().geodesic(u, v, t));
    EXPECT_NEAR(Eg, (1 - t) * E.energy(u) + t * E.energy(v) - t * (1 - t) * E.energy(diff), 1e-10);
    EXPECT_LE(improved_convexity_check(E, u, v, t), 1e-10);
    for (const auto& r : props::ks_convexity(Space::spider(3), 300, 9))
        EXPECT_TRUE(r.pass) << r.name << " " << r.max_violation;
    for (const auto& r : props::ks_convexity(Space::hyperbolic2(), 300, 9))
        EXPECT_TRUE(r.pass) << r.name << " " << r.max_violation;
}

TEST(KS, ChainRule)
{
    const int N = 32;
    const double delta = 1.0 / N;
    Domain d = Domain::path(N + 1, delta, 1.0 / delta, delta);
    const MapSpace ms(d, Space::euclidean(2));
    L2Map data;
    for (int i = 0; i <= N; ++i)
        data.values.push_back(euclidean_point({0.0, 0.0}));
    data.values[N] = euclidean_point({1.0, -0.5});
    const KSEnergy E(ms, data);
    const auto h = harmonic(E, data);
    std::vector<double> g(N + 1), zero(N + 1, 0.0);
    for (int i = 0; i <= N; ++i)
        g[i] = std::sin(std::numbers::pi * i / N);
    const double kn = calibrate_kappa_norm(d);
    EXPECT_NEAR(kn, 1.0 / (delta * delta), 1e-9);
    auto coord = [](const SpacePoint& p) { return std::get<EuclideanPoint>(p.v).x[0]; };
    EXPECT_NEAR(chain_rule_check(E, h, coord, 0.0, g, kn), 0.0, 1e-8);
    const auto p = euclidean_point({0.3, 0.2});
    auto f = [&](const SpacePoint& y) { return 0.5 * distance_sq(ms.target, y, p); };
    EXPECT_EQ(chain_rule_check(E, h, f, 1.0, zero, kn), 0.0);
    EXPECT_GE(chain_rule_check(E, h, f, 1.0, g, kn), -1e-2);
}

TEST(KS, EnergyIsConvexAlongGeodesics)
{
    for (const auto& r : props::ks_convexity(Space::euclidean(2), 300, 10))
        EXPECT_TRUE(r.pass) << r.name;
}
