#pragma once
/*
 * Concrete CAT(kappa) model spaces: flat space, spiders (k half-lines glued
 * at an origin), the hyperbolic plane in the hyperboloid model, round
 * 2-spheres and finite l2-products of these.
 *
 * Every operation is a pure function of immutable values.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "error.hpp"

namespace hflow {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Curvature bound

struct CurvatureBound {
    double kappa = 0.0;

    /// Diameter of the model surface M_kappa.
    double diameter() const { return kappa > 0.0 ? std::numbers::pi / std::sqrt(kappa) : kInf; }
};

// ---------------------------------------------------------------------------
// Spaces

struct Euclidean {
    int dim = 2;
};
struct Spider {
    int rays = 3;
};
struct Hyperbolic2 {};
struct Sphere2 {
    double kappa = 1.0;
    double radius() const { return 1.0 / std::sqrt(kappa); }
};
struct Space;
struct Product {
    std::vector<Space> factors;
};

struct Space {
    std::variant<Euclidean, Spider, Hyperbolic2, Sphere2, Product> kind;

    static Space euclidean(int dim) { return {Euclidean{dim}}; }
    static Space spider(int rays) { return {Spider{rays}}; }
    static Space hyperbolic2() { return {Hyperbolic2{}}; }
    static Space sphere2(double kappa) { return {Sphere2{kappa}}; }
    static Space product(std::vector<Space> factors) { return {Product{std::move(factors)}}; }

    CurvatureBound curvature() const
    {
        return std::visit(overloaded{
                              [](const Sphere2& s) { return CurvatureBound{s.kappa}; },
                              [](const Product& p) {
                                  double k = -kInf;
                                  for (const auto& f : p.factors)
                                      k = std::max(k, f.curvature().kappa);
                                  return CurvatureBound{p.factors.empty() ? 0.0 : k};
                              },
                              [](const auto&) { return CurvatureBound{0.0}; },
                          },
                          kind);
    }

    bool is_cat0() const { return curvature().kappa <= 0.0; }


    std::string name() const
    {
        return std::visit(overloaded{
                              [](const Euclidean& e) { return "euclidean(" + std::to_string(e.dim) + ")"; },
                              [](const Spider& s) { return "spider(" + std::to_string(s.rays) + ")"; },
                              [](const Hyperbolic2&) { return std::string("hyperbolic2"); },
                              [](const Sphere2& s) { return "sphere2(" + std::to_string(s.kappa) + ")"; },
                              [](const Product& p) {
                                  std::string out = "product(";
                                  for (std::size_t i = 0; i < p.factors.size(); ++i)
                                      out += (i ? "," : "") + p.factors[i].name();
                                  return out + ")";
                              },
                          },
                          kind);
    }
};

// ---------------------------------------------------------------------------
// Points

struct EuclideanPoint {
    std::vector<double> x;
};
/// Ray indices run 1..k; the origin is stored as ray 0, distance 0.
struct SpiderPoint {
    int ray = 0;
    double t = 0.0;
};
/// Upper sheet of x0^2 - x1^2 - x2^2 = 1.
struct HyperboloidPoint {
    std::array<double, 3> x{1.0, 0.0, 0.0};
};
/// Point of the sphere of radius 1/sqrt(kappa) centred at 0 in R^3.
struct SpherePoint {
    std::array<double, 3> x{0.0, 0.0, 1.0};
};
struct SpacePoint;
struct ProductPoint {
    std::vector<SpacePoint> factors;
};

struct SpacePoint {
    std::variant<EuclideanPoint, SpiderPoint, HyperboloidPoint, SpherePoint, ProductPoint> v;
};

inline SpacePoint euclidean_point(std::vector<double> x) { return {EuclideanPoint{std::move(x)}}; }
inline SpacePoint spider_point(int ray, double t)
{
    if (t == 0.0)
        ray = 0;
    return {SpiderPoint{ray, t}};
}
inline SpacePoint spider_origin() { return {SpiderPoint{0, 0.0}}; }
inline SpacePoint product_point(std::vector<SpacePoint> f) { return {ProductPoint{std::move(f)}}; }

namespace detail {

inline double minkowski(const std::array<double, 3>& a, const std::array<double, 3>& b)
{
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline std::array<double, 3> cross3(const std::array<double, 3>& a, const std::array<double, 3>& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline std::array<double, 3> lift_hyperboloid(double x1, double x2)
{
    return {std::sqrt(1.0 + x1 * x1 + x2 * x2), x1, x2};
}

inline std::array<double, 3> to_sphere(std::array<double, 3> x, double radius)
{
    const double n = std::sqrt(dot3(x, x));
    for (auto& c : x)
        c *= radius / n;
    return x;
}

template <class T>
const T& as(const Space& s)
{
    if (const auto* p = std::get_if<T>(&s.kind))
        return *p;
    throw Error(Errc::unsupported, "operation not available for " + s.name());
}

template <class T>
const T& as(const SpacePoint& p, const Space& s)
{
    if (const auto* q = std::get_if<T>(&p.v))
        return *q;
    throw Error(Errc::invalid_point, "point chart does not match " + s.name());
}

} // namespace detail

/// Throws invalid_point when p violates the chart constraints of s.
inline void validate(const Space& space, const SpacePoint& p)
{
    std::visit(overloaded{
                   [&](const Euclidean& e) {
                       const auto& q = detail::as<EuclideanPoint>(p, space);
                       if (static_cast<int>(q.x.size()) != e.dim)
                           throw Error(Errc::invalid_point, "euclidean dimension mismatch");
                       for (double c : q.x)
                           if (!std::isfinite(c))
                               throw Error(Errc::invalid_point, "non-finite coordinate");
                   },
                   [&](const Spider& s) {
                       const auto& q = detail::as<SpiderPoint>(p, space);
                       if (!(q.t >= 0.0) || !std::isfinite(q.t))
                           throw Error(Errc::invalid_point, "spider distance must be finite and >= 0");
                       if (q.ray < 0 || q.ray > s.rays)
                           throw Error(Errc::invalid_point, "spider ray index out of range");
                       if ((q.ray == 0) != (q.t == 0.0))
                           throw Error(Errc::invalid_point, "spider origin must be (ray 0, 0)");
                   },
                   [&](const Hyperbolic2&) {
                       const auto& q = detail::as<HyperboloidPoint>(p, space).x;
                       const double form = -detail::minkowski(q, q);
                       if (!(q[0] > 0.0) || std::abs(form - 1.0) > 1e-9 * (1.0 + q[0] * q[0]))
                           throw Error(Errc::invalid_point, "point is off the hyperboloid");
                   },
                   [&](const Sphere2& s) {
                       const auto& q = detail::as<SpherePoint>(p, space).x;
                       const double r = std::sqrt(detail::dot3(q, q));
                       if (!std::isfinite(r) || std::abs(r - s.radius()) > 1e-9 * s.radius())
                           throw Error(Errc::invalid_point, "point is off the sphere");
                   },
                   [&](const Product& pr) {
                       const auto& q = detail::as<ProductPoint>(p, space);
                       if (q.factors.size() != pr.factors.size())
                           throw Error(Errc::invalid_point, "product arity mismatch");
                       for (std::size_t i = 0; i < q.factors.size(); ++i)
                           validate(pr.factors[i], q.factors[i]);
                   },
               },
               space.kind);
}

/// Projects a slightly perturbed point back onto its chart.
inline SpacePoint renormalize(const Space& space, SpacePoint p)
{
    std::visit(overloaded{
                   [&](const Spider&) {
                       auto& q = std::get<SpiderPoint>(p.v);
                       if (q.t <= 0.0)
                           q = SpiderPoint{0, 0.0};
                   },
                   [&](const Hyperbolic2&) {
                       auto& q = std::get<HyperboloidPoint>(p.v).x;
                       q = detail::lift_hyperboloid(q[1], q[2]);
                   },
                   [&](const Sphere2& s) {
                       auto& q = std::get<SpherePoint>(p.v).x;
                       q = detail::to_sphere(q, s.radius());
                   },
                   [&](const Product& pr) {
                       auto& q = std::get<ProductPoint>(p.v);
                       for (std::size_t i = 0; i < q.factors.size(); ++i)
                           q.factors[i] = renormalize(pr.factors[i], std::move(q.factors[i]));
                   },
                   [](const Euclidean&) {},
               },
               space.kind);
    return p;
}

/// Largest absolute chart coordinate; sets the rounding floor of small distances.
inline double coordinate_scale(const SpacePoint& p)
{
    return std::visit(overloaded{
                          [](const EuclideanPoint& q) {
                              double m = 0.0;
                              for (double c : q.x)
                                  m = std::max(m, std::abs(c));
                              return m;
                          },
                          [](const SpiderPoint& q) { return q.t; },
                          [](const HyperboloidPoint& q) { return std::abs(q.x[0]); },
                          [](const SpherePoint& q) {
                              return std::max({std::abs(q.x[0]), std::abs(q.x[1]), std::abs(q.x[2])});
                          },
                          [](const ProductPoint& q) {
                              double m = 0.0;
                              for (const auto& f : q.factors)
                                  m = std::max(m, coordinate_scale(f));
                              return m;
                          },
                      },
                      p.v);
}

/// Exact chart equality (spider points are canonical, so this is point equality).
inline bool same_point(const SpacePoint& a, const SpacePoint& b)
{
    if (a.v.index() != b.v.index())
        return false;
    return std::visit(overloaded{
                          [&](const EuclideanPoint& p) { return p.x == std::get<EuclideanPoint>(b.v).x; },
                          [&](const SpiderPoint& p) {
                              const auto& q = std::get<SpiderPoint>(b.v);
                              return p.ray == q.ray && p.t == q.t;
                          },
                          [&](const HyperboloidPoint& p) { return p.x == std::get<HyperboloidPoint>(b.v).x; },
                          [&](const SpherePoint& p) { return p.x == std::get<SpherePoint>(b.v).x; },
                          [&](const ProductPoint& p) {
                              const auto& q = std::get<ProductPoint>(b.v);
                              if (p.factors.size() != q.factors.size())
                                  return false;
                              for (std::size_t i = 0; i < p.factors.size(); ++i)
                                  if (!same_point(p.factors[i], q.factors[i]))
                                      return false;
                              return true;
                          },
                      },
                      a.v);
}

// ---------------------------------------------------------------------------
// Metric and geodesics

inline double distance(const Space& space, const SpacePoint& a, const SpacePoint& b)
{
    return std::visit(
        overloaded{
            [&](const Euclidean&) {
                const auto& x = detail::as<EuclideanPoint>(a, space).x;
                const auto& y = detail::as<EuclideanPoint>(b, space).x;
                if (x.size() != y.size())
                    throw Error(Errc::invalid_point, "euclidean dimension mismatch");
                double s = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i)
                    s += (x[i] - y[i]) * (x[i] - y[i]);
                return std::sqrt(s);
            },
            [&](const Spider&) {
                const auto& p = detail::as<SpiderPoint>(a, space);
                const auto& q = detail::as<SpiderPoint>(b, space);
                if (p.ray == q.ray || p.ray == 0 || q.ray == 0)
                    return std::abs(p.t - q.t);
                return p.t + q.t;
            },
            [&](const Hyperbolic2&) {
                const auto& x = detail::as<HyperboloidPoint>(a, space).x;
                const auto& y = detail::as<HyperboloidPoint>(b, space).x;
                const std::array<double, 3> diff{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
                // <x-y,x-y>_L = 4 sinh^2(d/2); stable for nearby points
                const double chord = std::sqrt(std::max(0.0, detail::minkowski(diff, diff)));
                return 2.0 * std::asinh(0.5 * chord);
            },
            [&](const Sphere2& s) {
                const auto& x = detail::as<SpherePoint>(a, space).x;
                const auto& y = detail::as<SpherePoint>(b, space).x;
                const auto c = detail::cross3(x, y);
                const double angle = std::atan2(std::sqrt(detail::dot3(c, c)), detail::dot3(x, y));
                return s.radius() * angle;
            },
            [&](const Product& pr) {
                const auto& p = detail::as<ProductPoint>(a, space);
                const auto& q = detail::as<ProductPoint>(b, space);
                double s = 0.0;
                for (std::size_t i = 0; i < pr.factors.size(); ++i) {
                    const double d = distance(pr.factors[i], p.factors[i], q.factors[i]);
                    s += d * d;
                }
                return std::sqrt(s);
            },
        },
        space.kind);
}

inline double distance_sq(const Space& space, const SpacePoint& a, const SpacePoint& b)
{
    const double d = distance(space, a, b);
    return d * d;
}

/// Constant-speed geodesic from a (t=0) to b (t=1), evaluated at t.
/// Zero-length geodesics return a for every t.
inline SpacePoint geodesic_point(const Space& space, const SpacePoint& a, const SpacePoint& b, double t)
{
    return std::visit(
        overloaded{
            [&](const Euclidean&) {
                const auto& x = detail::as<EuclideanPoint>(a, space).x;
                const auto& y = detail::as<EuclideanPoint>(b, space).x;
                std::vector<double> out(x.size());
                for (std::size_t i = 0; i < x.size(); ++i)
                    out[i] = t == 1.0 ? y[i] : x[i] + t * (y[i] - x[i]);
                return euclidean_point(std::move(out));
            },
            [&](const Spider&) {
                const auto& p = detail::as<SpiderPoint>(a, space);
                const auto& q = detail::as<SpiderPoint>(b, space);
                if (t == 1.0)
                    return SpacePoint{q};
                if (p.ray == q.ray || p.ray == 0 || q.ray == 0) {
                    const int ray = p.ray != 0 ? p.ray : q.ray;
                    return spider_point(ray, std::max(0.0, p.t + t * (q.t - p.t)));
                }
                // through the origin
                const double pos = t * (p.t + q.t);
                if (pos <= p.t)
                    return spider_point(p.ray, p.t - pos);
                return spider_point(q.ray, pos - p.t);
            },
            [&](const Hyperbolic2&) {
                const auto& x = detail::as<HyperboloidPoint>(a, space).x;
                const auto& y = detail::as<HyperboloidPoint>(b, space).x;
                if (t == 1.0)
                    return SpacePoint{HyperboloidPoint{y}};
                const double d = distance(space, a, b);
                if (d == 0.0)
                    return a;
                std::array<double, 3> out{};
                if (d < 1e-8) {
                    for (int i = 0; i < 3; ++i)
                        out[i] = x[i] + t * (y[i] - x[i]);
                } else {
                    const double s0 = std::sinh((1.0 - t) * d) / std::sinh(d);
                    const double s1 = std::sinh(t * d) / std::sinh(d);
                    for (int i = 0; i < 3; ++i)
                        out[i] = s0 * x[i] + s1 * y[i];
                }
                return SpacePoint{HyperboloidPoint{detail::lift_hyperboloid(out[1], out[2])}};
            },
            [&](const Sphere2& s) {
                const auto& x = detail::as<SpherePoint>(a, space).x;
                const auto& y = detail::as<SpherePoint>(b, space).x;
                if (t == 1.0)
                    return SpacePoint{SpherePoint{y}};
                const double theta = distance(space, a, b) / s.radius();
                if (theta == 0.0)
                    return a;
                if (theta > std::numbers::pi - 1e-12)
                    throw Error(Errc::non_unique_geodesic, "antipodal points on the sphere");
                std::array<double, 3> out{};
                if (theta < 1e-8) {
                    for (int i = 0; i < 3; ++i)
                        out[i] = x[i] + t * (y[i] - x[i]);
                } else {
                    const double s0 = std::sin((1.0 - t) * theta) / std::sin(theta);
                    const double s1 = std::sin(t * theta) / std::sin(theta);
                    for (int i = 0; i < 3; ++i)
                        out[i] = s0 * x[i] + s1 * y[i];
                }
                return SpacePoint{SpherePoint{detail::to_sphere(out, s.radius())}};
            },
            [&](const Product& pr) {
                const auto& p = detail::as<ProductPoint>(a, space);
                const auto& q = detail::as<ProductPoint>(b, space);
                std::vector<SpacePoint> out;
                out.reserve(pr.factors.size());
                for (std::size_t i = 0; i < pr.factors.size(); ++i)
                    out.push_back(geodesic_point(pr.factors[i], p.factors[i], q.factors[i], t));
                return product_point(std::move(out));
            },
        },
        space.kind);
}

// ---------------------------------------------------------------------------
// Model-space trigonometry

/// Angle opposite to side `c` in the M_kappa triangle with sides a, b, c.
inline double model_angle(double kappa, double a, double b, double c)
{
    if (a <= 0.0 || b <= 0.0)
        throw Error(Errc::undefined_angle, "degenerate side");
    const double slack = 1e-12 * (a + b + c);
    if (c > a + b + slack || a > b + c + slack || b > a + c + slack)
        throw Error(Errc::undefined_angle, "side lengths violate the triangle inequality");
    double cosine = 0.0;
    if (kappa == 0.0) {
        cosine = (a * a + b * b - c * c) / (2.0 * a * b);
    } else if (kappa > 0.0) {
        const double k = std::sqrt(kappa);
        if (a + b + c >= 2.0 * std::numbers::pi / k)
            throw Error(Errc::undefined_angle, "perimeter exceeds 2 D_kappa");
        cosine = (std::cos(k * c) - std::cos(k * a) * std::cos(k * b)) / (std::sin(k * a) * std::sin(k * b));
    } else {
        const double k = std::sqrt(-kappa);
        cosine = (std::cosh(k * a) * std::cosh(k * b) - std::cosh(k * c)) / (std::sinh(k * a) * std::sinh(k * b));
    }
    return std::acos(std::clamp(cosine, -1.0, 1.0));
}

/// Third side of the M_kappa triangle with sides a, b enclosing `angle`.
inline double model_side(double kappa, double a, double b, double angle)
{
    if (kappa == 0.0)
        return std::sqrt(std::max(0.0, a * a + b * b - 2.0 * a * b * std::cos(angle)));
    if (kappa > 0.0) {
        const double k = std::sqrt(kappa);
        const double c = std::cos(k * a) * std::cos(k * b) + std::sin(k * a) * std::sin(k * b) * std::cos(angle);
        return std::acos(std::clamp(c, -1.0, 1.0)) / k;
    }
    const double k = std::sqrt(-kappa);
    const double c = std::cosh(k * a) * std::cosh(k * b) - std::sinh(k * a) * std::sinh(k * b) * std::cos(angle);
    return std::acosh(std::max(1.0, c)) / k;
}

/// Angle at y of the comparison triangle of (y, z1, z2) in M_kappa.
inline double comparison_angle(const Space& space, const SpacePoint& y, const SpacePoint& z1, const SpacePoint& z2,
                               double kappa)
{
    const double a = distance(space, y, z1);
    const double b = distance(space, y, z2);
    if (a == 0.0 || b == 0.0)
        throw Error(Errc::undefined_angle, "comparison angle needs y != z1 and y != z2");
    return model_angle(kappa, a, b, distance(space, z1, z2));
}

/// Slack in the triangle comparison at gamma_t on the geodesic b -> c.
///
/// For kappa <= 0 this is RHS - LHS of the squared-distance form
///   d^2(g_t,a) <= (1-t)d^2(b,a) + t d^2(c,a) - t(1-t) d^2(b,c);
/// for kappa > 0 it is d_kappa(abar, gbar_t) - d(a, g_t) in the model sphere.
/// Non-negative (up to rounding) exactly when the triple satisfies CAT(kappa).
inline double cat_defect(const Space& space, const SpacePoint& a, const SpacePoint& b, const SpacePoint& c, double t)
{
    const CurvatureBound bound = space.curvature();
    const double dab = distance(space, a, b);
    const double dbc = distance(space, b, c);
    const double dca = distance(space, c, a);
    if (!(dab + dbc + dca < 2.0 * bound.diameter()))
        throw Error(Errc::comparison_undefined, "triangle perimeter >= 2 D_kappa");
    const SpacePoint g = geodesic_point(space, b, c, t);
    const double dag = distance(space, a, g);
    if (bound.kappa <= 0.0)
        return (1.0 - t) * dab * dab + t * dca * dca - t * (1.0 - t) * dbc * dbc - dag * dag;
    double model = 0.0;
    if (dbc == 0.0)
        model = dab;
    else if (dab == 0.0)
        model = t * dbc;
    else
        model = model_side(bound.kappa, dab, t * dbc, model_angle(bound.kappa, dab, dbc, dca));
    return model - dag;
}

// ---------------------------------------------------------------------------
// Convex sets and metric projection

struct Ball {
    SpacePoint center;
    double radius = 0.0;
};
struct Segment {
    SpacePoint a, b;
};
struct SpiderRay {
    int ray = 1;
};
struct ConvexSet;
struct ProductSet {
    std::vector<ConvexSet> factors;
};
struct ConvexSet {
    std::variant<Ball, Segment, SpiderRay, ProductSet> shape;
};

namespace detail {

/// Minimizes a unimodal f on [lo, hi] (Brent), then compares with the endpoints.
template <class F>
double argmin_unimodal(F&& f, double lo, double hi)
{
    const auto [x, fx] = boost::math::tools::brent_find_minima(f, lo, hi, std::numeric_limits<double>::digits);
    double best = x;
    double best_val = fx;
    for (double end : {lo, hi}) {
        const double v = f(end);
        if (v < best_val) {
            best_val = v;
            best = end;
        }
    }
    return best;
}

} // namespace detail

/// Nearest point of the closed convex set C to y.
inline SpacePoint metric_projection(const Space& space, const ConvexSet& set, const SpacePoint& y)
{
    return std::visit(
        overloaded{
            [&](const Ball& ball) {
                if (!(ball.radius >= 0.0) || !(ball.radius < 0.5 * space.curvature().diameter()))
                    throw Error(Errc::unsupported, "ball radius must lie in [0, D_kappa/2)");
                const double d = distance(space, ball.center, y);
                if (d <= ball.radius)
                    return y;
                return geodesic_point(space, ball.center, y, ball.radius / d);
            },
            [&](const Segment& seg) {
                if (std::holds_alternative<Euclidean>(space.kind)) {
                    const auto& a = detail::as<EuclideanPoint>(seg.a, space).x;
                    const auto& b = detail::as<EuclideanPoint>(seg.b, space).x;
                    const auto& p = detail::as<EuclideanPoint>(y, space).x;
                    double num = 0.0, den = 0.0;
                    for (std::size_t i = 0; i < a.size(); ++i) {
                        num += (p[i] - a[i]) * (b[i] - a[i]);
                        den += (b[i] - a[i]) * (b[i] - a[i]);
                    }
                    if (den == 0.0)
                        return seg.a;
                    return geodesic_point(space, seg.a, seg.b, std::clamp(num / den, 0.0, 1.0));
                }
                const double s = detail::argmin_unimodal(
                    [&](double u) { return distance(space, y, geodesic_point(space, seg.a, seg.b, u)); }, 0.0, 1.0);
                return geodesic_point(space, seg.a, seg.b, s);
            },
            [&](const SpiderRay& r) {
                const auto& sp = detail::as<Spider>(space);
                if (r.ray < 1 || r.ray > sp.rays)
                    throw Error(Errc::unsupported, "spider ray index out of range");
                const auto& p = detail::as<SpiderPoint>(y, space);
                if (p.ray == r.ray || p.ray == 0)
                    return y;
                return spider_origin();
            },
            [&](const ProductSet& ps) {
                const auto& pr = detail::as<Product>(space);
                const auto& p = detail::as<ProductPoint>(y, space);
                if (ps.factors.size() != pr.factors.size())
                    throw Error(Errc::unsupported, "product set arity mismatch");
                std::vector<SpacePoint> out;
                for (std::size_t i = 0; i < pr.factors.size(); ++i)
                    out.push_back(metric_projection(pr.factors[i], ps.factors[i], p.factors[i]));
                return product_point(std::move(out));
            },
        },
        set.shape);
}

// ---------------------------------------------------------------------------
// Circumcenter: minimizer of y -> max_n d^2(y, y_n)

inline double circumradius_sq(const Space& space, std::span<const SpacePoint> points, const SpacePoint& y)
{
    double worst = 0.0;
    for (const auto& p : points)
        worst = std::max(worst, distance_sq(space, y, p));
    return worst;
}

namespace detail {

/// Solves the small dense system A x = b by Gaussian elimination with
/// partial pivoting. Returns false when A is (numerically) singular.
inline bool solve_dense(std::vector<std::vector<double>> A, std::vector<double> b, std::vector<double>& x)
{
    const std::size_t n = b.size();
    double scale = 0.0;
    for (const auto& row : A)
        for (double v : row)
            scale = std::max(scale, std::abs(v));
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col]))
                piv = r;
        if (std::abs(A[piv][col]) <= 1e-12 * std::max(scale, 1e-300))
            return false;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r][col] / A[col][col];
            for (std::size_t c = col; c < n; ++c)
                A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c)
            s -= A[i][c] * x[c];
        x[i] = s / A[i][i];
    }
    return true;
}

/// Calls f on every subset of {0..n-1} with 1 <= size <= max_size.
template <class F>
void for_each_subset(std::size_t n, std::size_t max_size, F&& f)
{
    std::vector<std::size_t> idx;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (!idx.empty())
            f(std::span<const std::size_t>(idx));
        if (idx.size() == max_size)
            return;
        for (std::size_t i = start; i < n; ++i) {
            idx.push_back(i);
            self(self, i + 1);
            idx.pop_back();
        }
    };
    rec(rec, 0);
}

inline SpacePoint circumcenter_enumerate(const Space& space, std::span<const SpacePoint> points)
{
    SpacePoint best = points.front();
    double best_r = circumradius_sq(space, points, best);
    auto consider = [&](const SpacePoint& cand) {
        const double r = circumradius_sq(space, points, cand);
        if (r < best_r) {
            best_r = r;
            best = cand;
        }
    };
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            consider(geodesic_point(space, points[i], points[j], 0.5));

    if (const auto* e = std::get_if<Euclidean>(&space.kind)) {
        // circumcenter of each affinely independent subset inside its affine hull
        const std::size_t max_size = std::min<std::size_t>(points.size(), static_cast<std::size_t>(e->dim) + 1);
        for_each_subset(points.size(), max_size, [&](std::span<const std::size_t> idx) {
            if (idx.size() < 3)
                return;
            const auto& p0 = std::get<EuclideanPoint>(points[idx[0]].v).x;
            const std::size_t m = idx.size() - 1;
            std::vector<std::vector<double>> dirs(m);
            for (std::size_t k = 0; k < m; ++k) {
                const auto& pk = std::get<EuclideanPoint>(points[idx[k + 1]].v).x;
                dirs[k].resize(p0.size());
                for (std::size_t c = 0; c < p0.size(); ++c)
                    dirs[k][c] = pk[c] - p0[c];
            }
            std::vector<std::vector<double>> gram(m, std::vector<double>(m));
            std::vector<double> rhs(m);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j)
                    gram[i][j] = std::inner_product(dirs[i].begin(), dirs[i].end(), dirs[j].begin(), 0.0);
                rhs[i] = 0.5 * gram[i][i];
            }
            std::vector<double> lam;
            if (!solve_dense(gram, rhs, lam))
                return;
            std::vector<double> x = p0;
            for (std::size_t k = 0; k < m; ++k)
                for (std::size_t c = 0; c < x.size(); ++c)
                    x[c] += lam[k] * dirs[k][c];
            consider(euclidean_point(std::move(x)));
        });
        return best;
    }

    // two-dimensional models: the equidistant point of a triple
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            for (std::size_t k = j + 1; k < points.size(); ++k) {
                if (std::holds_alternative<Hyperbolic2>(space.kind)) {
                    const auto& a = std::get<HyperboloidPoint>(points[i].v).x;
                    const auto& b = std::get<HyperboloidPoint>(points[j].v).x;
                    const auto& c = std::get<HyperboloidPoint>(points[k].v).x;
                    // <x, a-b>_L = <x, a-c>_L = 0  <=>  x is euclidean-orthogonal to J(a-b), J(a-c)
                    const std::array<double, 3> u{-(a[0] - b[0]), a[1] - b[1], a[2] - b[2]};
                    const std::array<double, 3> v{-(a[0] - c[0]), a[1] - c[1], a[2] - c[2]};
                    auto x = cross3(u, v);
                    const double form = -minkowski(x, x);
                    if (!(form > 0.0))
                        continue;
                    const double s = (x[0] > 0.0 ? 1.0 : -1.0) / std::sqrt(form);
                    consider(SpacePoint{HyperboloidPoint{lift_hyperboloid(x[1] * s, x[2] * s)}});
                } else if (const auto* sph = std::get_if<Sphere2>(&space.kind)) {
                    const auto& a = std::get<SpherePoint>(points[i].v).x;
                    const auto& b = std::get<SpherePoint>(points[j].v).x;
                    const auto& c = std::get<SpherePoint>(points[k].v).x;
                    const auto x = cross3({a[0] - b[0], a[1] - b[1], a[2] - b[2]},
                                          {a[0] - c[0], a[1] - c[1], a[2] - c[2]});
                    if (dot3(x, x) == 0.0)
                        continue;
                    const auto p = to_sphere(x, sph->radius());
                    consider(SpacePoint{SpherePoint{p}});
                    consider(SpacePoint{SpherePoint{{-p[0], -p[1], -p[2]}}});
                }
            }
    return best;
}

inline SpacePoint circumcenter_spider(const Spider& sp, std::span<const SpacePoint> points)
{
    SpacePoint best = spider_origin();
    double best_val = kInf;
    for (int ray = 1; ray <= sp.rays; ++ray) {
        // signed coordinate of each point along the line (ray <- origin -> others)
        double lo = kInf, hi = -kInf;
        for (const auto& p : points) {
            const auto& q = std::get<SpiderPoint>(p.v);
            const double c = (q.ray == ray || q.ray == 0) ? q.t : -q.t;
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        const double s = std::max(0.0, 0.5 * (lo + hi));
        const double val = std::max((s - lo) * (s - lo), (hi - s) * (hi - s));
        if (val < best_val) {
            best_val = val;
            best = spider_point(ray, s);
        }
    }
    return best;
}

/// Geodesic line searches toward the points and toward midpoints of pairs
/// that are (nearly) active in the max, until no search improves.
inline SpacePoint circumcenter_line_search(const Space& space, std::span<const SpacePoint> points, SpacePoint x)
{
    double fx = circumradius_sq(space, points, x);
    for (int pass = 0; pass < 10000; ++pass) {
        std::vector<SpacePoint> targets;
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (distance_sq(space, x, points[i]) >= fx - 1e-9 * (1.0 + fx))
                active.push_back(i);
        for (std::size_t i : active)
            targets.push_back(points[i]);
        for (std::size_t i = 0; i < active.size(); ++i)
            for (std::size_t j = i + 1; j < active.size(); ++j)
                targets.push_back(geodesic_point(space, points[active[i]], points[active[j]], 0.5));
        const double before = fx;
        for (const auto& target : targets) {
            auto along = [&](double s) { return circumradius_sq(space, points, geodesic_point(space, x, target, s)); };
            const double s = argmin_unimodal(along, 0.0, 1.0);
            const double val = along(s);
            if (val < fx) {
                x = geodesic_point(space, x, target, s);
                fx = val;
            }
        }
        if (before - fx <= 1e-15 * (1.0 + fx))
            break;
    }
    return x;
}

} // namespace detail

} // namespace hflow
