#pragma once
/*
 * Built-in functionals on the model spaces, each with an exact resolvent.
 */

#include "barycenter.hpp"
#include "flow.hpp"

namespace hflow {

using SpaceFunctional = Functional<SpaceGeometry>;

/// E = 1/2 d^2(., z): 1-convex on CAT(0) spaces, declared convex (lambda 0) on spheres.
inline SpaceFunctional half_squared_distance(const SpaceGeometry& geo, const SpacePoint& z)
{
    validate(geo.space, z);
    SpaceFunctional E;
    E.descriptor = "half_squared_distance";
    E.lambda = geo.cat0() ? 1.0 : 0.0;
    E.eval = [geo, z](const SpacePoint& y) { return 0.5 * distance_sq(geo.space, y, z); };
    E.prox = [geo, z](double tau, const SpacePoint& y) { return geodesic_point(geo.space, y, z, tau / (1.0 + tau)); };
    E.closed_slope = [geo, z](const SpacePoint& y) { return distance(geo.space, y, z); };
    E.candidates = [z](const SpacePoint&) { return std::vector<SpacePoint>{z}; };
    return E;
}

/// E = d(., z): convex; the resolvent moves toward z by min(tau, d).
/// The slope is 1 away from z and 0 at z.
inline SpaceFunctional distance_functional(const SpaceGeometry& geo, const SpacePoint& z)
{
    validate(geo.space, z);
    SpaceFunctional E;
    E.descriptor = "distance";
    E.lambda = 0.0;
    E.eval = [geo, z](const SpacePoint& y) { return distance(geo.space, y, z); };
    E.prox = [geo, z](double tau, const SpacePoint& y) {
        const double d = distance(geo.space, y, z);
        if (d <= tau)
            return z;
        return geodesic_point(geo.space, y, z, tau / d);
    };
    E.closed_slope = [geo, z](const SpacePoint& y) { return distance(geo.space, y, z) > 0.0 ? 1.0 : 0.0; };
    E.candidates = [z](const SpacePoint&) { return std::vector<SpacePoint>{z}; };
    return E;
}

/// E = sum_j w_j d(., q_j): convex.  Exact resolvent on spiders, Weiszfeld
/// iteration on flat/hyperbolic/spherical targets, generic line searches on products.
inline SpaceFunctional sum_of_distances(const SpaceGeometry& geo, std::vector<WeightedPoint> pts)
{
    if (pts.empty())
        throw Error(Errc::empty_input, "sum of distances needs at least one point");
    for (const auto& p : pts)
        validate(geo.space, p.point);
    SpaceFunctional E;
    E.descriptor = "sum_of_distances";
    E.lambda = 0.0;
    E.eval = [geo, pts](const SpacePoint& y) {
        double s = 0.0;
        for (const auto& p : pts)
            s += p.weight * distance(geo.space, y, p.point);
        return s;
    };
    if (!std::holds_alternative<Product>(geo.space.kind)) {
        E.prox = [geo, pts](double tau, const SpacePoint& y) {
            PointObjective obj{{{1.0 / tau, y}}, pts};
            return minimize_point_objective(geo.space, obj, y);
        };
    }
    E.candidates = [geo, pts](const SpacePoint&) {
        std::vector<SpacePoint> out;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out.push_back(pts[i].point);
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                out.push_back(geodesic_point(geo.space, pts[i].point, pts[j].point, 0.5));
        }
        return out;
    };
    return E;
}

/// E = sum_i w_i/2 d^2(., p_i): (sum w_i)-convex on CAT(0) spaces; its
/// minimizer is the weighted Frechet mean.
inline SpaceFunctional weighted_half_squared(const SpaceGeometry& geo, std::vector<WeightedPoint> pts)
{
    if (pts.empty())
        throw Error(Errc::empty_input, "Frechet functional needs at least one point");
    double total = 0.0;
    for (const auto& p : pts) {
        validate(geo.space, p.point);
        if (p.weight < 0.0)
            throw Error(Errc::negative_scale, "Frechet weights must be nonnegative");
        total += p.weight;
    }
    SpaceFunctional E;
    E.descriptor = "frechet";
    E.lambda = geo.cat0() ? total : 0.0;
    E.eval = [geo, pts](const SpacePoint& y) {
        double s = 0.0;
        for (const auto& p : pts)
            s += 0.5 * p.weight * distance_sq(geo.space, y, p.point);
        return s;
    };
    E.prox = [geo, pts](double tau, const SpacePoint& y) {
        PointObjective obj{pts, {}};
        obj.quadratic.push_back({1.0 / tau, y});
        return minimize_point_objective(geo.space, obj, y);
    };
    E.candidates = [geo, pts](const SpacePoint&) {
        std::vector<SpacePoint> out;
        for (const auto& p : pts)
            out.push_back(p.point);
        out.push_back(frechet_mean(geo.space, pts));
        return out;
    };
    return E;
}

} // namespace hflow
