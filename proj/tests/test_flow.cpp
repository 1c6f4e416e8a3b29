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

std::vector<double> xs(const SpacePoint& p) { return std::get<EuclideanPoint>(p.v).x; }

/// Brute-force resolvent on a spider: per-ray grid search of the objective.
SpacePoint spider_prox_oracle(const Space& s, const SpaceFunctional& E, double tau, const SpacePoint& y, double reach)
{
    const int rays = std::get<Spider>(s.kind).rays;
    SpacePoint best = spider_origin();
    double bv = kInf;
    for (int r = 1; r <= rays; ++r) {
        auto phi = [&](double t) {
            const auto p = spider_point(r, t);
            const double d = distance(s, p, y);
            return E.eval(p) + d * d / (2 * tau);
        };
        const double t = oracle::grid_argmin(phi, 0.0, reach, 2000);
        if (phi(t) < bv) {
            bv = phi(t);
            best = spider_point(r, t);
        }
    }
    return best;
}

} // namespace

TEST(Flow, ProxHalfSquaredMatchesLineOracle)
{
    for (const auto& s : {Space::euclidean(3), Space::spider(3), Space::hyperbolic2()}) {
        const SpaceGeometry geo(s);
        Generator gen(2, props::branching_config(s));
        for (int i = 0; i < 50; ++i) {
            const auto z = gen.point(s), y = gen.point(s);
            const auto E = half_squared_distance(geo, z);
            const double tau = gen.uniform(0.05, 3.0);
            const double d = distance(s, y, z);
            if (d < 1e-3)
                continue;
            auto phi = [&](double t) {
                const auto p = geodesic_point(s, y, z, t);
                const double dy = distance(s, p, y);
                return E.eval(p) + dy * dy / (2 * tau);
            };
            const double t_or = oracle::grid_argmin(phi, 0.0, 1.0);
            const auto p = prox(geo, E, tau, y);
            EXPECT_NEAR(distance(s, p, geodesic_point(s, y, z, t_or)), 0.0, 1e-6 * std::max(1.0, d)) << s.name();
            // global optimality against random competitors
            for (int k = 0; k < 20; ++k) {
                const auto q = gen.point(s);
                const double dq = distance(s, q, y), dp = distance(s, p, y);
                EXPECT_LE(E.eval(p) + dp * dp / (2 * tau), E.eval(q) + dq * dq / (2 * tau) + 1e-12);
            }
        }
    }
}

TEST(Flow, ProxDistanceIsShrinkage)
{
    const SpaceGeometry geo(Space::euclidean(2));
    const auto z = euclidean_point({0, 0});
    const auto E = distance_functional(geo, z);
    const auto p = xs(prox(geo, E, 1.0, euclidean_point({3, 4})));
    EXPECT_NEAR(p[0], 2.4, 1e-14);
    EXPECT_NEAR(p[1], 3.2, 1e-14);
    EXPECT_TRUE(same_point(prox(geo, E, 6.0, euclidean_point({3, 4})), z));
    EXPECT_TRUE(same_point(prox(geo, E, 0.5, z), z));
}

TEST(Flow, ProxRejectsBadSteps)
{
    const SpaceGeometry geo(Space::euclidean(1));
    auto E = half_squared_distance(geo, euclidean_point({0}));
    EXPECT_EQ(code_of([&] { prox(geo, E, 0.0, euclidean_point({1})); }), Errc::domain_error);
    E.lambda = -1.0;
    EXPECT_EQ(code_of([&] { prox(geo, E, 2.0, euclidean_point({1})); }), Errc::domain_error);
    SpaceFunctional bare;
    bare.eval = [](const SpacePoint&) { return 0.0; };
    EXPECT_EQ(code_of([&] { prox(geo, bare, 1.0, euclidean_point({1})); }), Errc::prox_failure);
}

TEST(Flow, GenericProxAgreesWithExact)
{
    for (const auto& s : {Space::euclidean(2), Space::hyperbolic2(), Space::spider(3)}) {
        const SpaceGeometry geo(s);
        Generator gen(9, props::branching_config(s));
        for (int i = 0; i < 20; ++i) {
            const auto z = gen.point(s), y = gen.point(s);
            const auto exact = half_squared_distance(geo, z);
            auto generic = exact;
            generic.prox = nullptr;
            const double tau = gen.uniform(0.1, 2.0);
            EXPECT_NEAR(distance(s, prox(geo, exact, tau, y), prox(geo, generic, tau, y)), 0.0, 1e-6) << s.name();
        }
    }
}

TEST(Flow, EuclideanClosedFormFlow)
{
    const SpaceGeometry geo(Space::euclidean(2));
    const auto z = euclidean_point({1, -1});
    const auto y0 = euclidean_point({3, 2});
    const auto E = half_squared_distance(geo, z);
    double prev_err = 0;
    for (long N : {1000L, 2000L}) {
        const auto tr = flow(geo, E, y0, 2.0, N);
        double err = 0;
        for (std::size_t k = 0; k < tr.points.size(); ++k) {
            const double f = std::exp(-tr.times[k]);
            const std::vector<double> ex{1 + f * 2, -1 + f * 3};
            err = std::max(err, oracle::euclid(xs(tr.points[k]), ex));
            if (k) {
                EXPECT_LE(tr.energies[k], tr.energies[k - 1] + 1e-10);
            }
        }
        EXPECT_LE(err, 2.0 / static_cast<double>(N) * 2.0 * std::sqrt(13.0));
        if (prev_err > 0) {
            EXPECT_NEAR(prev_err / err, 2.0, 0.1);
        }
        prev_err = err;
    }
}

TEST(Flow, SpiderDistanceFlowThroughOrigin)
{
    const auto s = Space::spider(3);
    const SpaceGeometry geo(s);
    const auto E = distance_functional(geo, spider_point(1, 2));
    const auto tr = flow(geo, E, spider_point(2, 3), 6.0, 6000);
    for (std::size_t k = 0; k < tr.points.size(); k += 250) {
        const double t = tr.times[k];
        const auto& p = std::get<SpiderPoint>(tr.points[k].v);
        if (t < 3 - 1e-9) {
            EXPECT_EQ(p.ray, 2);
            EXPECT_NEAR(p.t, 3 - t, 1e-9);
        } else if (t <= 5) {
            EXPECT_NEAR(p.t, t - 3, 1e-9);
            if (t > 3 + 1e-9) {
                EXPECT_EQ(p.ray, 1);
            }
        } else {
            EXPECT_TRUE(same_point(tr.points[k], spider_point(1, 2)));
        }
    }
}

TEST(Flow, MinimizerGivesConstantTrajectory)
{
    const auto s = Space::hyperbolic2();
    const SpaceGeometry geo(s);
    const auto z = gen_point(s, 4);
    const auto E = half_squared_distance(geo, z);
    const auto tr = flow(geo, E, z, 1.0, 100);
    for (const auto& p : tr.points)
        EXPECT_TRUE(same_point(p, z));
    for (const auto& v : {verify_evi(geo, tr, E, E.lambda, {gen_point(s, 5)}), verify_contraction(geo, tr, tr, 1.0),
                          verify_regularization(geo, tr, E, E.lambda)})
        EXPECT_LE(v.max_violation, 1e-10) << v.check;
}

TEST(Flow, SlopeExamples)
{
    const auto s = Space::spider(4);
    const SpaceGeometry geo(s);
    const auto z = spider_point(1, 1), y = spider_point(3, 2);
    EXPECT_DOUBLE_EQ(slope(geo, half_squared_distance(geo, z), y).value, 3.0);
    EXPECT_EQ(slope(geo, half_squared_distance(geo, z), z).value, 0.0);
    EXPECT_EQ(slope(geo, distance_functional(geo, z), y).value, 1.0);
    EXPECT_EQ(slope(geo, distance_functional(geo, z), z).value, 0.0);
    EXPECT_EQ(slope(geo, distance_functional(geo, z), y).method, SlopeMethod::closed_form);
    // the global formula alone, without the closed form
    auto E = half_squared_distance(geo, z);
    E.closed_slope = nullptr;
    const auto est = slope(geo, E, y);
    EXPECT_EQ(est.method, SlopeMethod::global_sup_sampled);
    EXPECT_GT(est.sample_count, 0u);
    EXPECT_NEAR(est.value, 3.0, 1e-6);
    SpaceFunctional inf;
    inf.eval = [](const SpacePoint&) { return kInf; };
    EXPECT_EQ(code_of([&] { slope(geo, inf, y); }), Errc::domain_error);
}

TEST(Flow, SampledSlopeOfFrechetFunctional)
{
    // E = sum w/2 |y - p|^2 in R^2: slope = W |y - mean|
    const SpaceGeometry geo(Space::euclidean(2));
    const std::vector<WeightedPoint> pts{{1.0, euclidean_point({0, 0})}, {2.0, euclidean_point({3, 0})},
                                         {0.5, euclidean_point({0, 4})}};
    const auto E = weighted_half_squared(geo, pts);
    const auto y = euclidean_point({-1, 2});
    const double W = 3.5;
    const std::vector<double> mean{6.0 / W, 2.0 / W};
    EXPECT_NEAR(slope(geo, E, y).value, W * oracle::euclid(xs(y), mean), 1e-6);
    const auto m = frechet_mean(geo.space, pts);
    EXPECT_NEAR(oracle::euclid(xs(m), mean), 0.0, 1e-14);
}

TEST(Flow, MinimalSelectionEuclidean)
{
    const SpaceGeometry geo(Space::euclidean(2));
    const auto z = euclidean_point({1, 2});
    const auto y = euclidean_point({4, -2});
    const auto E = half_squared_distance(geo, z);
    const auto v = minimal_selection(geo, E, y);
    EXPECT_NEAR(norm(geo, v), 5.0, 1e-3);
    const auto toward = make_direction(geo, y, z);
    EXPECT_NEAR(inner(geo, v, toward), 25.0, 5e-3);
    EXPECT_TRUE(minimal_selection(geo, E, z).is_zero());
    Generator gen(6);
    std::vector<SpacePoint> tests;
    for (int i = 0; i < 1000; ++i)
        tests.push_back(gen.point(geo.space));
    EXPECT_LE(check_subdifferential(geo, E, y, v, tests), 1e-6);
    EXPECT_LE(check_subdifferential(geo, E, z, zero_direction<SpaceGeometry>(z), tests), 0.0);
    // long vector pointing away: detected
    const auto wrong = make_direction(geo, y, euclidean_point({40, -2}), 3.0);
    EXPECT_GT(check_subdifferential(geo, E, y, wrong, tests), 1.0);
}

TEST(Flow, MinimalSelectionOnSpiderMatchesBruteForceProx)
{
    // E = d(., p1) + 2 d(., p2) at the origin: the flow leaves along ray 2
    const auto s = Space::spider(3);
    const SpaceGeometry geo(s);
    const auto E = sum_of_distances(geo, {{1.0, spider_point(1, 1)}, {2.0, spider_point(2, 1)}});
    const auto o = spider_origin();
    const auto v = minimal_selection(geo, E, o);
    // brute-force minimizing movement from the origin with tau = 1e-5
    const double tau = 1e-5;
    auto p = o;
    for (int k = 0; k < 10; ++k)
        p = spider_prox_oracle(s, E, tau, p, 1e-3);
    const auto oracle_dir = make_direction(geo, o, p, 1.0 / (10 * tau));
    EXPECT_NEAR(cone_distance(geo, v, oracle_dir).value, 0.0, 1e-3);
    EXPECT_NEAR(norm(geo, v), 1.0, 1e-3);
    EXPECT_NEAR(norm(geo, v), slope(geo, E, o).value, 1e-3);
    std::vector<SpacePoint> tests;
    Generator gen(8, props::branching_config(s));
    for (int i = 0; i < 1000; ++i)
        tests.push_back(gen.point(s));
    EXPECT_LE(check_subdifferential(geo, E, o, v, tests), 1e-6);
}

TEST(Flow, SlopeEqualsMinimalNormAlongFlows)
{
    for (const auto& s : {Space::euclidean(2), Space::hyperbolic2(), Space::spider(3)}) {
        const SpaceGeometry geo(s);
        Generator gen(12, props::branching_config(s));
        const auto z = gen.point(s);
        for (const auto& E : {half_squared_distance(geo, z), distance_functional(geo, z)}) {
            const auto tr = flow(geo, E, gen.point(s), 0.5, 500);
            for (std::size_t k : {std::size_t{0}, std::size_t{100}, std::size_t{400}}) {
                const auto& y = tr.points[k];
                if (E.descriptor == "distance" && distance(s, y, z) < 0.05)
                    continue;
                if (const auto* sp = std::get_if<SpiderPoint>(&y.v); sp && sp->t > 0 && sp->t < 0.2)
                    continue;
                EXPECT_NEAR(norm(geo, minimal_selection(geo, E, y)), slope(geo, E, y).value, 1e-3)
                    << s.name() << " " << E.descriptor;
            }
        }
    }
}

TEST(Flow, VerifiersOnEuclideanQuadratic)
{
    const auto s = Space::euclidean(2);
    const SpaceGeometry geo(s);
    const auto z = euclidean_point({0.5, -0.5});
    const auto E = half_squared_distance(geo, z);
    const auto a = flow(geo, E, euclidean_point({2, 1}), 2.0, 20000);
    const auto b = flow(geo, E, euclidean_point({-1, 1.5}), 2.0, 20000);
    const std::vector<SpacePoint> tests{euclidean_point({1, 1}), euclidean_point({-2, 0}), z};
    EXPECT_LE(verify_evi(geo, a, E, 1.0, tests).max_violation, 1e-2);
    EXPECT_LE(verify_contraction(geo, a, b, 1.0).max_violation, 1e-3);
    EXPECT_LE(verify_apriori(geo, a, euclidean_point({-1, 1.5}), E, 1.0).max_violation, 1e-2);
    EXPECT_LE(verify_regularization(geo, a, E, 1.0).max_violation, 1e-2);
}

TEST(Flow, FlowInequalitySuites)
{
    for (const auto& s : {Space::spider(3), Space::hyperbolic2(), Space::product({Space::euclidean(1), Space::spider(3)})})
        for (const auto& r : props::flow_inequalities(s, 1e-3, 2.0, 3))
            EXPECT_TRUE(r.pass) << s.name() << " " << r.name << " " << r.max_violation;
}

TEST(Flow, EnergyDissipationIdentity)
{
    for (const auto& s : {Space::euclidean(2), Space::hyperbolic2()}) {
        const SpaceGeometry geo(s);
        Generator gen(14);
        const auto E = half_squared_distance(geo, gen.point(s));
        const auto tr = flow(geo, E, gen.point(s), 1.0, 10000);
        for (std::size_t k = 1000; k < tr.points.size(); k += 2000) {
            const double dE = -(tr.energies[k + 1] - tr.energies[k - 1]) / (tr.times[k + 1] - tr.times[k - 1]);
            const double sl = slope(geo, E, tr.points[k]).value;
            EXPECT_NEAR(dE, sl * sl, 0.05 * sl * sl) << s.name();
            EXPECT_NEAR(tr.speeds[k], sl, 0.05 * sl) << s.name();
        }
    }
}

TEST(Flow, RefinementSelfConsistency)
{
    const auto s = Space::hyperbolic2();
    const SpaceGeometry geo(s);
    Generator gen(15);
    const auto E = half_squared_distance(geo, gen.point(s));
    const auto y0 = gen.point(s);
    const double d1 = distance(s, flow_endpoint(geo, E, y0, 1.0, 1000), flow_endpoint(geo, E, y0, 1.0, 2000));
    EXPECT_LE(d1, 5.0 * 1e-3);
}

TEST(Flow, BuiltinsAreLambdaConvex)
{
    for (const auto& s : {Space::spider(3), Space::hyperbolic2(), Space::euclidean(2)}) {
        const SpaceGeometry geo(s);
        Generator gen(16, props::branching_config(s));
        std::vector<SpaceFunctional> fs{half_squared_distance(geo, gen.point(s)), distance_functional(geo, gen.point(s)),
                                        sum_of_distances(geo, {{1.0, gen.point(s)}, {0.5, gen.point(s)}}),
                                        weighted_half_squared(geo, {{1.0, gen.point(s)}, {0.5, gen.point(s)}})};
        for (const auto& E : fs)
            for (int i = 0; i < 300; ++i) {
                const auto a = gen.point(s), b = gen.point(s);
                const double t = gen.uniform(0, 1), d = distance(s, a, b);
                EXPECT_LE(E.eval(geodesic_point(s, a, b, t)),
                          (1 - t) * E.eval(a) + t * E.eval(b) - 0.5 * E.lambda * t * (1 - t) * d * d + 1e-8)
                    << s.name() << " " << E.descriptor;
            }
    }
}

TEST(Flow, ExtrapolationWeights)
{
    const std::vector<double> h{1e-2, 1e-3, 1e-4};
    const auto w = detail::extrapolation_weights(h);
    // reproduces quadratics at h = 0
    double s0 = 0, s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        s0 += w[i];
        s1 += w[i] * h[i];
        s2 += w[i] * h[i] * h[i];
    }
    EXPECT_NEAR(s0, 1.0, 1e-12);
    EXPECT_NEAR(s1, 0.0, 1e-14);
    EXPECT_NEAR(s2, 0.0, 1e-16);
}

TEST(Flow, ProxFirmness)
{
    for (const auto& s : {Space::euclidean(2), Space::spider(4), Space::hyperbolic2()})
        EXPECT_TRUE(props::prox_firmness(s, 1000, 21).pass) << s.name();
}
