#pragma once
/*
 * Directions in tangent cones, represented as scaled geodesic germs.
 *
 * The calculus is generic over a geometry G providing
 *   Point, Tangent, distance, geodesic, log, exp, exp_alpha, same,
 *   inner, cone_distance, oplus, scale, combine, is_zero, zero, cat0.
 * SpaceGeometry (below) covers the model spaces; MapSpace (maps.hpp)
 * covers L^2(Omega, Y).
 */

#include <functional>

#include "cone.hpp"

namespace hflow {

struct SpaceGeometry {
    using Point = SpacePoint;
    using Tangent = TangentVector;

    Space space;

    explicit SpaceGeometry(Space s) : space(std::move(s)) {}

    double distance(const Point& a, const Point& b) const { return hflow::distance(space, a, b); }
    Point geodesic(const Point& a, const Point& b, double t) const { return geodesic_point(space, a, b, t); }
    Tangent log(const Point& y, const Point& z) const { return log_map(space, y, z); }
    Point exp(const Point& y, const Tangent& v) const { return exp_point(space, y, v); }
    double exp_alpha(const Point& y, const Tangent& v) const { return hflow::exp_alpha(space, y, v); }
    bool same(const Point& a, const Point& b) const { return same_point(a, b); }
    void validate(const Point& p) const { hflow::validate(space, p); }

    double inner(const Tangent& v, const Tangent& w) const { return tangent_inner(space, v, w); }
    double norm(const Tangent& v) const { return tangent_norm(space, v); }
    double cone_distance(const Tangent& v, const Tangent& w) const { return tangent_distance(space, v, w); }
    Tangent oplus(const Tangent& v, const Tangent& w) const { return tangent_oplus(v, w); }
    Tangent scale(double c, const Tangent& v) const { return tangent_scale(c, v); }
    std::optional<Tangent> combine(std::span<const double> c, std::span<const Tangent> vs) const
    {
        return tangent_combine(c, vs);
    }
    bool is_zero(const Tangent& v) const { return hflow::is_zero(v); }
    Tangent zero(const Point& y) const { return zero_tangent(space, y); }
    bool cat0() const { return space.is_cat0(); }
};

template <class G>
struct Germ {
    typename G::Point target;
    double alpha = 1.0;
};

/// Element of T_base: either the apex (no germ) or alpha times the unit-time
/// germ of the geodesic base -> target.
template <class G>
struct Direction {
    typename G::Point base;
    std::optional<Germ<G>> germ;

    bool is_zero() const { return !germ.has_value(); }
};

/// Value of a cone limit; when a monotone bracket is available the exact
/// value lies in [value - error_bound, value].
struct ConeValue {
    double value = 0.0;
    std::optional<double> error_bound;
};

template <class G>
Direction<G> zero_direction(const typename G::Point& base)
{
    return Direction<G>{base, std::nullopt};
}

template <class G>
Direction<G> make_direction(const G& geo, const typename G::Point& base, const typename G::Point& target,
                            double alpha = 1.0)
{
    if (alpha < 0.0)
        throw Error(Errc::negative_scale, "germ scale must be nonnegative");
    if (alpha == 0.0 || geo.same(base, target) || geo.distance(base, target) == 0.0)
        return zero_direction<G>(base);
    return Direction<G>{base, Germ<G>{target, alpha}};
}

template <class G>
typename G::Tangent to_tangent(const G& geo, const Direction<G>& v)
{
    if (v.is_zero())
        return geo.zero(v.base);
    return geo.scale(v.germ->alpha, geo.log(v.base, v.germ->target));
}

template <class G>
Direction<G> from_tangent(const G& geo, const typename G::Point& base, const typename G::Tangent& t)
{
    if (geo.is_zero(t))
        return zero_direction<G>(base);
    const double alpha = geo.exp_alpha(base, t);
    auto target = geo.exp(base, geo.scale(1.0 / alpha, t));
    return make_direction(geo, base, target, alpha);
}

namespace detail {

template <class G>
void require_same_base(const G& geo, const Direction<G>& v, const Direction<G>& w)
{
    if (!geo.same(v.base, w.base))
        throw Error(Errc::mismatched_base, "directions are based at different points");
}

} // namespace detail

template <class G>
double norm(const G& geo, const Direction<G>& v)
{
    if (v.is_zero())
        return 0.0;
    return v.germ->alpha * geo.distance(v.base, v.germ->target);
}

template <class G>
ConeValue cone_distance(const G& geo, const Direction<G>& v, const Direction<G>& w)
{
    detail::require_same_base(geo, v, w);
    if (v.is_zero())
        return {norm(geo, w), 0.0};
    if (w.is_zero())
        return {norm(geo, v), 0.0};
    return {geo.cone_distance(to_tangent(geo, v), to_tangent(geo, w)), 0.0};
}

template <class G>
double inner(const G& geo, const Direction<G>& v, const Direction<G>& w)
{
    detail::require_same_base(geo, v, w);
    if (v.is_zero() || w.is_zero())
        return 0.0;
    return geo.inner(to_tangent(geo, v), to_tangent(geo, w));
}

template <class G>
Direction<G> scale(const G& geo, double c, const Direction<G>& v)
{
    if (c < 0.0)
        throw Error(Errc::negative_scale, "cones admit only nonnegative scaling");
    if (v.is_zero() || c == 0.0)
        return zero_direction<G>(v.base);
    return make_direction(geo, v.base, v.germ->target, c * v.germ->alpha);
}

template <class G>
Direction<G> oplus(const G& geo, const Direction<G>& v, const Direction<G>& w)
{
    detail::require_same_base(geo, v, w);
    if (w.is_zero())
        return v;
    if (v.is_zero())
        return w;
    return from_tangent(geo, v.base, geo.oplus(to_tangent(geo, v), to_tangent(geo, w)));
}

// ---------------------------------------------------------------------------
// Dyadic limits: an independent route through the metric alone

/// Point gamma_t of the germ, i.e. at parameter alpha*t on base -> target.
template <class G>
typename G::Point germ_point(const G& geo, const Direction<G>& v, double t)
{
    if (v.is_zero())
        return v.base;
    const double s = v.germ->alpha * t;
    if (s > 1.0)
        throw Error(Errc::unsupported, "germ evaluated beyond its target");
    return geo.geodesic(v.base, v.germ->target, s);
}

namespace detail {

template <class G>
int first_dyadic(const Direction<G>& v, const Direction<G>& w, int k_lo)
{
    double alpha = 1.0;
    if (!v.is_zero())
        alpha = std::max(alpha, v.germ->alpha);
    if (!w.is_zero())
        alpha = std::max(alpha, w.germ->alpha);
    return k_lo + static_cast<int>(std::ceil(std::log2(alpha)));
}

} // namespace detail

/// d(gamma_t, eta_t)/t at t = 2^-k, k = k_lo..k_hi (shifted when a germ's
/// scale exceeds one), ordered from the largest t to the smallest.
template <class G>
std::vector<double> dyadic_quotients(const G& geo, const Direction<G>& v, const Direction<G>& w, int k_lo = 10,
                                     int k_hi = 20)
{
    detail::require_same_base(geo, v, w);
    const int shift = detail::first_dyadic(v, w, k_lo) - k_lo;
    std::vector<double> out;
    for (int k = k_lo + shift; k <= k_hi + shift; ++k) {
        const double t = std::ldexp(1.0, -k);
        out.push_back(geo.distance(germ_point(geo, v, t), germ_point(geo, w, t)) / t);
    }
    return out;
}

/// Absolute rounding level of a quotient d(gamma_t, eta_t)/t computed from
/// chart coordinates of magnitude about coordinate_scale(base).
inline double dyadic_rounding_floor(const SpacePoint& base, double t)
{
    return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + coordinate_scale(base)) / t;
}

/// Cone distance from the dyadic quotients.  In CAT(0) spaces the quotients
/// are nondecreasing in t, so the smallest-t value is an upper bound and the
/// last decrement serves as the bracket width.
template <class G>
ConeValue dyadic_cone_distance(const G& geo, const Direction<G>& v, const Direction<G>& w)
{
    const auto q = dyadic_quotients(geo, v, w);
    const double value = q.back();
    if (!geo.cat0())
        return {value, std::nullopt};
    return {value, std::max(0.0, q[q.size() - 2] - q.back())};
}

/// v (+) w as 2 * germ towards the midpoint m_t of gamma_t and eta_t,
/// extrapolated from t and 2t when the cone allows linear combinations.
/// The extrapolation leaves an O(t^2) error, so t = 2^-14 balances it
/// against the rounding of chart coordinates, which grows like 1/t.
template <class G>
Direction<G> dyadic_oplus(const G& geo, const Direction<G>& v, const Direction<G>& w, int k = 14)
{
    detail::require_same_base(geo, v, w);
    k = detail::first_dyadic(v, w, k);
    auto quotient = [&](double t) {
        const auto m = geo.geodesic(germ_point(geo, v, t), germ_point(geo, w, t), 0.5);
        return geo.scale(2.0 / t, geo.log(v.base, m));
    };
    const double t = std::ldexp(1.0, -k);
    const std::array<typename G::Tangent, 2> qs{quotient(t), quotient(2.0 * t)};
    const std::array<double, 2> c{2.0, -1.0};
    if (auto r = geo.combine(c, qs))
        return from_tangent(geo, v.base, *r);
    return from_tangent(geo, v.base, qs[0]);
}

// ---------------------------------------------------------------------------
// First variation of the squared distance

/// Returns ( (1/2 d^2(y_{t+h},z) - 1/2 d^2(y_t,z)) / h ,
///           -< (1/h) germ(y_t -> y_{t+h}), germ(y_t -> z) > ).
/// A stationary step gives (difference quotient, 0).
template <class G>
std::pair<double, double> first_variation(const G& geo, const std::function<typename G::Point(double)>& curve,
                                          const typename G::Point& z, double t, double h)
{
    if (!(h > 0.0))
        throw Error(Errc::domain_error, "first variation needs h > 0");
    const auto y0 = curve(t);
    const auto y1 = curve(t + h);
    const double d0 = geo.distance(y0, z);
    const double d1 = geo.distance(y1, z);
    const double fd = 0.5 * (d1 * d1 - d0 * d0) / h;
    const auto step = make_direction(geo, y0, y1, 1.0 / h);
    if (step.is_zero())
        return {fd, 0.0};
    const auto toward = make_direction(geo, y0, z, 1.0);
    return {fd, -inner(geo, step, toward)};
}

} // namespace hflow
