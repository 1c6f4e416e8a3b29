#pragma once
/*
 * Concrete coordinates for tangent cones of the model spaces.
 *
 * Flat space, the hyperbolic plane, the sphere and spider points away from
 * the origin have a linear tangent space (ambient coordinates for the
 * hyperboloid and sphere, one signed scalar on a spider ray, positive =
 * away from the origin).  At the spider origin the cone is the k-pod
 * itself: a ray index and a length.  Products take the product cone.
 */

#include <optional>
#include <utility>

#include "spaces.hpp"

namespace hflow {

struct LinearTangent {
    std::vector<double> v;
};
/// Element of the cone at the spider origin; ray 0 with len 0 is the apex.
struct BranchTangent {
    int ray = 0;
    double len = 0.0;
};
struct TangentVector;
struct ProductTangent {
    std::vector<TangentVector> factors;
};
struct TangentVector {
    std::variant<LinearTangent, BranchTangent, ProductTangent> v;
};

namespace detail {

inline bool is_hyperbolic(const Space& s) { return std::holds_alternative<Hyperbolic2>(s.kind); }

inline const LinearTangent& lin(const TangentVector& t)
{
    if (const auto* p = std::get_if<LinearTangent>(&t.v))
        return *p;
    throw Error(Errc::mismatched_base, "tangent vectors live in different cones");
}

inline const BranchTangent& branch(const TangentVector& t)
{
    if (const auto* p = std::get_if<BranchTangent>(&t.v))
        return *p;
    throw Error(Errc::mismatched_base, "tangent vectors live in different cones");
}

inline const ProductTangent& prod(const TangentVector& t)
{
    if (const auto* p = std::get_if<ProductTangent>(&t.v))
        return *p;
    throw Error(Errc::mismatched_base, "tangent vectors live in different cones");
}

inline double linear_inner(const Space& s, const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size())
        throw Error(Errc::mismatched_base, "tangent dimension mismatch");
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        out += (is_hyperbolic(s) && i == 0 ? -1.0 : 1.0) * a[i] * b[i];
    return out;
}

inline BranchTangent canonical(BranchTangent b)
{
    if (b.len <= 0.0)
        return BranchTangent{0, 0.0};
    return b;
}

} // namespace detail

inline TangentVector zero_tangent(const Space& space, const SpacePoint& base)
{
    return std::visit(overloaded{
                          [](const EuclideanPoint& p) { return TangentVector{LinearTangent{std::vector<double>(p.x.size())}}; },
                          [](const SpiderPoint& p) {
                              if (p.ray == 0)
                                  return TangentVector{BranchTangent{}};
                              return TangentVector{LinearTangent{{0.0}}};
                          },
                          [](const HyperboloidPoint&) { return TangentVector{LinearTangent{{0.0, 0.0, 0.0}}}; },
                          [](const SpherePoint&) { return TangentVector{LinearTangent{{0.0, 0.0, 0.0}}}; },
                          [&](const ProductPoint& p) {
                              const auto& pr = detail::as<Product>(space);
                              ProductTangent out;
                              for (std::size_t i = 0; i < p.factors.size(); ++i)
                                  out.factors.push_back(zero_tangent(pr.factors[i], p.factors[i]));
                              return TangentVector{std::move(out)};
                          },
                      },
                      base.v);
}

inline bool is_zero(const TangentVector& t)
{
    return std::visit(overloaded{
                          [](const LinearTangent& l) {
                              return std::all_of(l.v.begin(), l.v.end(), [](double c) { return c == 0.0; });
                          },
                          [](const BranchTangent& b) { return b.len == 0.0; },
                          [](const ProductTangent& p) {
                              return std::all_of(p.factors.begin(), p.factors.end(),
                                                 [](const TangentVector& f) { return is_zero(f); });
                          },
                      },
                      t.v);
}

inline double tangent_inner(const Space& space, const TangentVector& a, const TangentVector& b)
{
    return std::visit(overloaded{
                          [&](const LinearTangent& l) { return detail::linear_inner(space, l.v, detail::lin(b).v); },
                          [&](const BranchTangent& x) {
                              const auto& y = detail::branch(b);
                              if (x.len == 0.0 || y.len == 0.0)
                                  return 0.0;
                              return (x.ray == y.ray ? 1.0 : -1.0) * x.len * y.len;
                          },
                          [&](const ProductTangent& p) {
                              const auto& pr = detail::as<Product>(space);
                              const auto& q = detail::prod(b);
                              double s = 0.0;
                              for (std::size_t i = 0; i < p.factors.size(); ++i)
                                  s += tangent_inner(pr.factors[i], p.factors[i], q.factors[i]);
                              return s;
                          },
                      },
                      a.v);
}

inline double tangent_norm(const Space& space, const TangentVector& a)
{
    return std::sqrt(std::max(0.0, tangent_inner(space, a, a)));
}

/// Cone distance, evaluated without the cancellation of the polarization formula.
inline double tangent_distance(const Space& space, const TangentVector& a, const TangentVector& b)
{
    return std::visit(overloaded{
                          [&](const LinearTangent& l) {
                              const auto& m = detail::lin(b).v;
                              if (m.size() != l.v.size())
                                  throw Error(Errc::mismatched_base, "tangent dimension mismatch");
                              std::vector<double> diff(m.size());
                              for (std::size_t i = 0; i < m.size(); ++i)
                                  diff[i] = l.v[i] - m[i];
                              return std::sqrt(std::max(0.0, detail::linear_inner(space, diff, diff)));
                          },
                          [&](const BranchTangent& x) {
                              const auto& y = detail::branch(b);
                              if (x.ray == y.ray || x.len == 0.0 || y.len == 0.0)
                                  return std::abs(x.len - y.len);
                              return x.len + y.len;
                          },
                          [&](const ProductTangent& p) {
                              const auto& pr = detail::as<Product>(space);
                              const auto& q = detail::prod(b);
                              double s = 0.0;
                              for (std::size_t i = 0; i < p.factors.size(); ++i) {
                                  const double d = tangent_distance(pr.factors[i], p.factors[i], q.factors[i]);
                                  s += d * d;
                              }
                              return std::sqrt(s);
                          },
                      },
                      a.v);
}

inline TangentVector tangent_scale(double c, const TangentVector& a)
{
    if (c < 0.0)
        throw Error(Errc::negative_scale, "cones admit only nonnegative scaling");
    return std::visit(overloaded{
                          [&](const LinearTangent& l) {
                              LinearTangent out = l;
                              for (auto& x : out.v)
                                  x *= c;
                              return TangentVector{std::move(out)};
                          },
                          [&](const BranchTangent& b) { return TangentVector{detail::canonical({b.ray, c * b.len})}; },
                          [&](const ProductTangent& p) {
                              ProductTangent out;
                              for (const auto& f : p.factors)
                                  out.factors.push_back(tangent_scale(c, f));
                              return TangentVector{std::move(out)};
                          },
                      },
                      a.v);
}

/// v (+) w = 2 * midpoint of v and w in the cone.
inline TangentVector tangent_oplus(const TangentVector& a, const TangentVector& b)
{
    return std::visit(overloaded{
                          [&](const LinearTangent& l) {
                              const auto& m = detail::lin(b).v;
                              if (m.size() != l.v.size())
                                  throw Error(Errc::mismatched_base, "tangent dimension mismatch");
                              LinearTangent out = l;
                              for (std::size_t i = 0; i < m.size(); ++i)
                                  out.v[i] += m[i];
                              return TangentVector{std::move(out)};
                          },
                          [&](const BranchTangent& x) {
                              const auto& y = detail::branch(b);
                              if (x.len == 0.0)
                                  return TangentVector{y};
                              if (y.len == 0.0)
                                  return TangentVector{x};
                              if (x.ray == y.ray)
                                  return TangentVector{BranchTangent{x.ray, x.len + y.len}};
                              // the midpoint of the segment through the apex
                              if (x.len == y.len)
                                  return TangentVector{BranchTangent{}};
                              return x.len > y.len ? TangentVector{BranchTangent{x.ray, x.len - y.len}}
                                                   : TangentVector{BranchTangent{y.ray, y.len - x.len}};
                          },
                          [&](const ProductTangent& p) {
                              const auto& q = detail::prod(b);
                              ProductTangent out;
                              for (std::size_t i = 0; i < p.factors.size(); ++i)
                                  out.factors.push_back(tangent_oplus(p.factors[i], q.factors[i]));
                              return TangentVector{std::move(out)};
                          },
                      },
                      a.v);
}

/// Real linear combination sum_i c_i v_i when the cone contains it
/// (linear cones, collinear branch vectors, componentwise for products).
inline std::optional<TangentVector> tangent_combine(std::span<const double> coeffs, std::span<const TangentVector> vs)
{
    if (vs.empty() || coeffs.size() != vs.size())
        return std::nullopt;
    return std::visit(
        overloaded{
            [&](const LinearTangent& first) -> std::optional<TangentVector> {
                LinearTangent out{std::vector<double>(first.v.size())};
                for (std::size_t k = 0; k < vs.size(); ++k) {
                    const auto* l = std::get_if<LinearTangent>(&vs[k].v);
                    if (!l || l->v.size() != out.v.size())
                        return std::nullopt;
                    for (std::size_t i = 0; i < out.v.size(); ++i)
                        out.v[i] += coeffs[k] * l->v[i];
                }
                return TangentVector{std::move(out)};
            },
            [&](const BranchTangent&) -> std::optional<TangentVector> {
                int ray = 0;
                double len = 0.0;
                for (std::size_t k = 0; k < vs.size(); ++k) {
                    const auto* b = std::get_if<BranchTangent>(&vs[k].v);
                    if (!b)
                        return std::nullopt;
                    if (b->len == 0.0)
                        continue;
                    if (ray != 0 && b->ray != ray)
                        return std::nullopt;
                    ray = b->ray;
                    len += coeffs[k] * b->len;
                }
                if (len < 0.0)
                    return std::nullopt;
                return TangentVector{detail::canonical({ray, len})};
            },
            [&](const ProductTangent& first) -> std::optional<TangentVector> {
                ProductTangent out;
                for (std::size_t f = 0; f < first.factors.size(); ++f) {
                    std::vector<TangentVector> comp;
                    for (const auto& v : vs) {
                        const auto* p = std::get_if<ProductTangent>(&v.v);
                        if (!p || p->factors.size() != first.factors.size())
                            return std::nullopt;
                        comp.push_back(p->factors[f]);
                    }
                    auto c = tangent_combine(coeffs, comp);
                    if (!c)
                        return std::nullopt;
                    out.factors.push_back(std::move(*c));
                }
                return TangentVector{std::move(out)};
            },
        },
        vs.front().v);
}

// ---------------------------------------------------------------------------
// log / exp

/// Initial velocity of the constant-speed geodesic y -> z on [0,1].
inline TangentVector log_map(const Space& space, const SpacePoint& y, const SpacePoint& z)
{
    return std::visit(
        overloaded{
            [&](const Euclidean&) {
                const auto& a = detail::as<EuclideanPoint>(y, space).x;
                const auto& b = detail::as<EuclideanPoint>(z, space).x;
                std::vector<double> out(a.size());
                for (std::size_t i = 0; i < a.size(); ++i)
                    out[i] = b[i] - a[i];
                return TangentVector{LinearTangent{std::move(out)}};
            },
            [&](const Spider&) {
                const auto& p = detail::as<SpiderPoint>(y, space);
                const auto& q = detail::as<SpiderPoint>(z, space);
                if (p.ray == 0)
                    return TangentVector{detail::canonical({q.ray, q.t})};
                if (q.ray == p.ray)
                    return TangentVector{LinearTangent{{q.t - p.t}}};
                return TangentVector{LinearTangent{{-(p.t + q.t)}}};
            },
            [&](const Hyperbolic2&) {
                const auto& a = detail::as<HyperboloidPoint>(y, space).x;
                const auto& b = detail::as<HyperboloidPoint>(z, space).x;
                const std::array<double, 3> diff{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
                // <a,b>_L + 1 = -<b-a,b-a>_L / 2, free of cancellation
                const double shift = -0.5 * detail::minkowski(diff, diff);
                std::array<double, 3> u{};
                for (int i = 0; i < 3; ++i)
                    u[i] = diff[i] + shift * a[i];
                const double un = std::sqrt(std::max(0.0, detail::minkowski(u, u)));
                const double d = distance(space, y, z);
                if (un == 0.0 || d == 0.0)
                    return TangentVector{LinearTangent{{0.0, 0.0, 0.0}}};
                return TangentVector{LinearTangent{{d * u[0] / un, d * u[1] / un, d * u[2] / un}}};
            },
            [&](const Sphere2& s) {
                const auto& a = detail::as<SpherePoint>(y, space).x;
                const auto& b = detail::as<SpherePoint>(z, space).x;
                const double d = distance(space, y, z);
                if (d == 0.0)
                    return TangentVector{LinearTangent{{0.0, 0.0, 0.0}}};
                if (d > s.radius() * (std::numbers::pi - 1e-12))
                    throw Error(Errc::non_unique_geodesic, "antipodal points on the sphere");
                const double c = detail::dot3(a, b) / (s.radius() * s.radius());
                std::array<double, 3> u{};
                for (int i = 0; i < 3; ++i)
                    u[i] = b[i] - c * a[i];
                const double un = std::sqrt(detail::dot3(u, u));
                return TangentVector{LinearTangent{{d * u[0] / un, d * u[1] / un, d * u[2] / un}}};
            },
            [&](const Product& pr) {
                const auto& p = detail::as<ProductPoint>(y, space);
                const auto& q = detail::as<ProductPoint>(z, space);
                ProductTangent out;
                for (std::size_t i = 0; i < pr.factors.size(); ++i)
                    out.factors.push_back(log_map(pr.factors[i], p.factors[i], q.factors[i]));
                return TangentVector{std::move(out)};
            },
        },
        space.kind);
}

/// Largest speed s such that exp_y(v / alpha) stays on a unique geodesic for
/// every alpha >= |v| / s; returns the minimal admissible alpha >= 1.
inline double exp_alpha(const Space& space, const SpacePoint& y, const TangentVector& v)
{
    return std::visit(overloaded{
                          [&](const Spider&) {
                              const auto& p = detail::as<SpiderPoint>(y, space);
                              if (p.ray == 0)
                                  return 1.0;
                              const double s = detail::lin(v).v.at(0);
                              return s < 0.0 ? std::max(1.0, 2.0 * -s / p.t) : 1.0;
                          },
                          [&](const Sphere2& s) {
                              return std::max(1.0, tangent_norm(space, v) / (s.radius() * std::numbers::pi / 2.0));
                          },
                          [&](const Product& pr) {
                              const auto& p = detail::as<ProductPoint>(y, space);
                              const auto& t = detail::prod(v);
                              double a = 1.0;
                              for (std::size_t i = 0; i < pr.factors.size(); ++i)
                                  a = std::max(a, exp_alpha(pr.factors[i], p.factors[i], t.factors[i]));
                              return a;
                          },
                          [](const auto&) { return 1.0; },
                      },
                      space.kind);
}

/// Geodesic endpoint exp_y(v).  On a spider ray the segment may not pass the
/// origin and on the sphere |v| must stay below pi R.
inline SpacePoint exp_point(const Space& space, const SpacePoint& y, const TangentVector& v)
{
    return std::visit(
        overloaded{
            [&](const Euclidean&) {
                auto x = detail::as<EuclideanPoint>(y, space).x;
                const auto& d = detail::lin(v).v;
                for (std::size_t i = 0; i < x.size(); ++i)
                    x[i] += d.at(i);
                return euclidean_point(std::move(x));
            },
            [&](const Spider&) {
                const auto& p = detail::as<SpiderPoint>(y, space);
                if (p.ray == 0) {
                    const auto& b = detail::branch(v);
                    return spider_point(b.ray, b.len);
                }
                const double t = p.t + detail::lin(v).v.at(0);
                if (t < -1e-12 * p.t)
                    throw Error(Errc::unsupported, "spider exp beyond the origin");
                return spider_point(p.ray, std::max(0.0, t));
            },
            [&](const Hyperbolic2&) {
                const auto& a = detail::as<HyperboloidPoint>(y, space).x;
                const auto& d = detail::lin(v).v;
                const std::array<double, 3> w{d.at(0), d.at(1), d.at(2)};
                const double n = std::sqrt(std::max(0.0, detail::minkowski(w, w)));
                if (n == 0.0)
                    return y;
                const double ch = std::cosh(n), sh = std::sinh(n) / n;
                return SpacePoint{HyperboloidPoint{
                    detail::lift_hyperboloid(ch * a[1] + sh * w[1], ch * a[2] + sh * w[2])}};
            },
            [&](const Sphere2& s) {
                const auto& a = detail::as<SpherePoint>(y, space).x;
                const auto& d = detail::lin(v).v;
                const std::array<double, 3> w{d.at(0), d.at(1), d.at(2)};
                const double n = std::sqrt(detail::dot3(w, w));
                if (n == 0.0)
                    return y;
                const double th = n / s.radius();
                std::array<double, 3> out{};
                for (int i = 0; i < 3; ++i)
                    out[i] = std::cos(th) * a[i] + std::sin(th) * s.radius() * w[i] / n;
                return SpacePoint{SpherePoint{detail::to_sphere(out, s.radius())}};
            },
            [&](const Product& pr) {
                const auto& p = detail::as<ProductPoint>(y, space);
                const auto& t = detail::prod(v);
                std::vector<SpacePoint> out;
                for (std::size_t i = 0; i < pr.factors.size(); ++i)
                    out.push_back(exp_point(pr.factors[i], p.factors[i], t.factors[i]));
                return product_point(std::move(out));
            },
        },
        space.kind);
}

} // namespace hflow
