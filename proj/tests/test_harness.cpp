#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "hflow/io.hpp"

using namespace hflow;

TEST(Harness, SameSeedSameStream)
{
    for (const auto& s : {Space::euclidean(3), Space::spider(4), Space::hyperbolic2(), Space::sphere2(2.0),
                          Space::product({Space::euclidean(1), Space::spider(3)})}) {
        EXPECT_TRUE(same_point(gen_point(s, 42), gen_point(s, 42))) << s.name();
        Generator a(7), b(7);
        for (int i = 0; i < 50; ++i)
            EXPECT_EQ(io::flatten(a.point(s)), io::flatten(b.point(s))) << s.name();
    }
    EXPECT_FALSE(same_point(gen_point(Space::euclidean(3), 1), gen_point(Space::euclidean(3), 2)));
}

TEST(Harness, PointsStayInRange)
{
    GenConfig cfg;
    cfg.range = 1.5;
    Generator gen(3, cfg);
    for (int i = 0; i < 1000; ++i) {
        const auto e = std::get<EuclideanPoint>(gen.point(Space::euclidean(4)).v);
        for (double c : e.x)
            EXPECT_LE(std::abs(c), 1.5);
        const auto p = gen.point(Space::hyperbolic2());
        validate(Space::hyperbolic2(), p);
        EXPECT_LE(distance(Space::hyperbolic2(), p, SpacePoint{HyperboloidPoint{{1.0, 0.0, 0.0}}}), 3.0 + 1e-9);
        const auto sp = std::get<SpiderPoint>(gen.point(Space::spider(5)).v);
        EXPECT_GE(sp.ray, 1);
        EXPECT_LE(sp.ray, 5);
        EXPECT_GT(sp.t, 0.0);
        EXPECT_LE(sp.t, 1.5);
    }
}

// Spider points are uniform over (ray, t in [0, R]).
TEST(Harness, SpiderDistributionChiSquare)
{
    constexpr int rays = 3, bins = 10, draws = 10000;
    Generator gen(42);
    std::vector<int> count(rays * bins, 0);
    for (int i = 0; i < draws; ++i) {
        const auto p = std::get<SpiderPoint>(gen.point(Space::spider(rays)).v);
        const int b = std::min(bins - 1, static_cast<int>(p.t / gen.config().range * bins));
        ++count[(p.ray - 1) * bins + b];
    }
    const double expected = static_cast<double>(draws) / (rays * bins);
    double chi2 = 0.0;
    for (int c : count)
        chi2 += (c - expected) * (c - expected) / expected;
    const boost::math::chi_squared dist(rays * bins - 1);
    EXPECT_LT(chi2, boost::math::quantile(dist, 0.999)) << chi2;
}

TEST(Harness, OriginProbability)
{
    GenConfig cfg;
    cfg.spider_origin_prob = 0.25;
    Generator gen(9, cfg);
    int origin = 0;
    for (int i = 0; i < 10000; ++i)
        origin += std::get<SpiderPoint>(gen.point(Space::spider(3)).v).ray == 0;
    EXPECT_NEAR(origin / 10000.0, 0.25, 0.02);
    Generator plain(9);
    for (int i = 0; i < 1000; ++i)
        EXPECT_NE(std::get<SpiderPoint>(plain.point(Space::spider(3)).v).ray, 0);
}

TEST(Harness, DirectionNormIsAlphaTimesDistance)
{
    for (const auto& s : {Space::euclidean(2), Space::spider(3), Space::hyperbolic2()}) {
        const SpaceGeometry geo(s);
        Generator gen(11);
        for (int i = 0; i < 100; ++i) {
            const auto y = gen.point(s);
            const auto d = gen.direction(s, y);
            ASSERT_FALSE(d.is_zero());
            EXPECT_NEAR(norm(geo, d), d.germ->alpha * distance(s, y, d.germ->target), 1e-12) << s.name();
            EXPECT_GE(d.germ->alpha, 0.5);
            EXPECT_LE(d.germ->alpha, 2.0);
        }
    }
    GenConfig cfg;
    cfg.zero_direction_prob = 1.0;
    EXPECT_TRUE(gen_direction(Space::euclidean(2), euclidean_point({0, 0}), 1, cfg).is_zero());
}

TEST(Harness, MapsAndDomains)
{
    Generator gen(5);
    const auto d = gen.domain(10, 4);
    EXPECT_EQ(d.nodes, 10);
    EXPECT_EQ(d.edges.size(), 13u);
    const MapSpace ms(d, Space::spider(3));
    const auto u = gen_map(ms, 8), v = gen_map(ms, 8);
    EXPECT_TRUE(ms.same(u, v));
    EXPECT_EQ(u.values.size(), 10u);
}

TEST(Harness, SuiteNamesAndErrors)
{
    EXPECT_EQ(suite_names().size(), 8u);
    try {
        run_suite("nope", {});
        FAIL() << "no error raised";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::unknown_suite);
    }
}

TEST(Harness, SuiteExamples)
{
    SuiteConfig cfg;
    cfg.samples = 300;
    auto r = run_suite("cat0_comparison", cfg);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_TRUE(r[0].pass);
    EXPECT_LE(r[0].max_violation, 1e-12);
    EXPECT_EQ(r[0].samples, 300u);

    cfg.space = Space::spider(3);
    r = run_suite("cone_calculus", cfg);
    EXPECT_TRUE(all_pass(r));
    for (const auto& p : r)
        EXPECT_LE(p.max_violation, 1e-8) << p.name;

    cfg.space = Space::euclidean(2);
    cfg.tau = 1e-4;
    r = run_suite("evi", cfg);
    EXPECT_TRUE(all_pass(r));
}

TEST(Harness, EverySuiteRunsOnSpider)
{
    SuiteConfig cfg;
    cfg.space = Space::spider(3);
    cfg.samples = 50;
    cfg.T = 0.5;
    for (const auto& name : suite_names()) {
        const auto r = run_suite(name, cfg);
        EXPECT_FALSE(r.empty()) << name;
        for (const auto& p : r)
            EXPECT_TRUE(p.pass) << name << "/" << p.name << " " << p.max_violation;
    }
}

TEST(Harness, ReportsAreByteIdentical)
{
    SuiteConfig cfg;
    cfg.space = Space::hyperbolic2();
    cfg.samples = 200;
    std::string a, b;
    for (const auto& r : run_suite("cone_calculus", cfg))
        a += io::report_line(r) + "\n";
    for (const auto& r : run_suite("cone_calculus", cfg))
        b += io::report_line(r) + "\n";
    EXPECT_EQ(a, b);
}

TEST(Harness, AllPass)
{
    EXPECT_TRUE(all_pass({}));
    EXPECT_TRUE(all_pass({{"a", 1, 0.0, true}}));
    EXPECT_FALSE(all_pass({{"a", 1, 0.0, true}, {"b", 1, 1.0, false}}));
}
