#pragma once
/*
 * Minimizers of point objectives
 *     F(x) = sum_i a_i * 1/2 d^2(x, p_i) + sum_j b_j * d(x, q_j)
 * used by the exact resolvents of the built-in functionals and by the
 * node-wise sweeps of the discrete Korevaar-Schoen solver.
 */

#include "cone.hpp"

namespace hflow {

struct WeightedPoint {
    double weight = 0.0;
    SpacePoint point;
};

struct PointObjective {
    std::vector<WeightedPoint> quadratic; // a_i * 1/2 d^2(x, p_i)
    std::vector<WeightedPoint> linear;    // b_j * d(x, q_j)

    double eval(const Space& space, const SpacePoint& x) const
    {
        double s = 0.0;
        for (const auto& q : quadratic)
            s += 0.5 * q.weight * distance_sq(space, x, q.point);
        for (const auto& l : linear)
            s += l.weight * distance(space, x, l.point);
        return s;
    }
};

namespace detail {

/// Minimizes sum a_i/2 (s-c_i)^2 + sum b_j |s-c_j| over s >= 0 exactly
/// (convex, piecewise quadratic: the minimizer is a breakpoint or a
/// stationary point of one piece).
inline double minimize_ray(const std::vector<std::pair<double, double>>& quad,
                           const std::vector<std::pair<double, double>>& lin)
{
    auto f = [&](double s) {
        double v = 0.0;
        for (const auto& [a, c] : quad)
            v += 0.5 * a * (s - c) * (s - c);
        for (const auto& [b, c] : lin)
            v += b * std::abs(s - c);
        return v;
    };
    std::vector<double> cand{0.0};
    std::vector<double> breaks;
    for (const auto& [b, c] : lin)
        if (b > 0.0)
            breaks.push_back(c);
    std::sort(breaks.begin(), breaks.end());
    double A = 0.0, Ac = 0.0;
    for (const auto& [a, c] : quad) {
        A += a;
        Ac += a * c;
    }
    cand.insert(cand.end(), breaks.begin(), breaks.end());
    if (A > 0.0) {
        // stationary point on each open piece between breakpoints
        for (std::size_t piece = 0; piece <= breaks.size(); ++piece) {
            const double probe = breaks.empty() ? 0.0
                                 : piece == 0   ? breaks.front() - 1.0
                                 : piece == breaks.size()
                                     ? breaks.back() + 1.0
                                     : 0.5 * (breaks[piece - 1] + breaks[piece]);
            double sgn = 0.0;
            for (const auto& [b, c] : lin)
                sgn += b * (probe > c ? 1.0 : -1.0);
            cand.push_back((Ac - sgn) / A);
        }
    }
    double best = 0.0, best_val = kInf;
    for (double s : cand) {
        s = std::max(0.0, s);
        const double v = f(s);
        if (v < best_val) {
            best_val = v;
            best = s;
        }
    }
    return best;
}

inline SpacePoint minimize_spider(const Spider& sp, const PointObjective& obj)
{
    SpacePoint best = spider_origin();
    double best_val = kInf;
    const Space space{sp};
    for (int ray = 1; ray <= sp.rays; ++ray) {
        auto coord = [&](const SpacePoint& p) {
            const auto& q = std::get<SpiderPoint>(p.v);
            return (q.ray == ray || q.ray == 0) ? q.t : -q.t;
        };
        std::vector<std::pair<double, double>> quad, lin;
        for (const auto& q : obj.quadratic)
            quad.emplace_back(q.weight, coord(q.point));
        for (const auto& l : obj.linear)
            lin.emplace_back(l.weight, coord(l.point));
        const SpacePoint x = spider_point(ray, minimize_ray(quad, lin));
        const double v = obj.eval(space, x);
        if (v < best_val) {
            best_val = v;
            best = x;
        }
    }
    return best;
}

/// Generalized Weiszfeld / Karcher fixed point in the linear tangent space:
///   x <- exp_x( (sum a_i log p_i + sum b_j log q_j / d_j) / (sum a_i + sum b_j / d_j) ),
/// with the Vardi-Zhang correction when x sits on one of the q_j.
inline SpacePoint minimize_linear_cone(const Space& space, const PointObjective& obj, SpacePoint x)
{
    const double scale = [&] {
        double s = 0.0;
        for (const auto& q : obj.quadratic)
            s = std::max(s, distance(space, x, q.point));
        for (const auto& l : obj.linear)
            s = std::max(s, distance(space, x, l.point));
        return std::max(s, 1.0);
    }();
    const int max_iter = obj.linear.empty() ? 2000 : 100000;
    double prev_move = kInf;
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> num;
        double den = 0.0;
        double pinned = 0.0; // weight of linear terms centred at x
        auto add = [&](const TangentVector& t, double w) {
            const auto& v = std::get<LinearTangent>(t.v).v;
            if (num.empty())
                num.assign(v.size(), 0.0);
            for (std::size_t i = 0; i < v.size(); ++i)
                num[i] += w * v[i];
        };
        for (const auto& q : obj.quadratic) {
            add(log_map(space, x, q.point), q.weight);
            den += q.weight;
        }
        for (const auto& l : obj.linear) {
            const double d = distance(space, x, l.point);
            if (d <= 1e-14 * scale) {
                pinned += l.weight;
                continue;
            }
            add(log_map(space, x, l.point), l.weight / d);
            den += l.weight / d;
        }
        if (num.empty() || den == 0.0)
            return x;
        TangentVector step{LinearTangent{num}};
        const double r = tangent_norm(space, step);
        if (pinned > 0.0) {
            if (r <= pinned)
                return x;
            step = tangent_scale((1.0 - pinned / r) / den, step);
        } else {
            step = tangent_scale(1.0 / den, step);
        }
        const double move = tangent_norm(space, step);
        x = exp_point(space, x, step);
        // stop at the tolerance or once rounding noise stops the contraction
        if (move <= 1e-15 * scale || (it > 50 && move >= prev_move && move <= 1e-12 * scale))
            return x;
        prev_move = move;
    }
    return x;
}

} // namespace detail

/// Exact (spider, flat quadratic) or iterative minimizer of the objective.
/// `start` seeds the iterative solvers.
inline SpacePoint minimize_point_objective(const Space& space, const PointObjective& obj, const SpacePoint& start)
{
    if (obj.quadratic.empty() && obj.linear.empty())
        throw Error(Errc::empty_input, "objective without terms");
    return std::visit(
        overloaded{
            [&](const Spider& sp) { return detail::minimize_spider(sp, obj); },
            [&](const Euclidean& e) {
                if (!obj.linear.empty())
                    return detail::minimize_linear_cone(space, obj, start);
                std::vector<double> x(static_cast<std::size_t>(e.dim), 0.0);
                double den = 0.0;
                for (const auto& q : obj.quadratic) {
                    const auto& p = std::get<EuclideanPoint>(q.point.v).x;
                    for (std::size_t i = 0; i < x.size(); ++i)
                        x[i] += q.weight * p[i];
                    den += q.weight;
                }
                if (den <= 0.0)
                    return start;
                for (auto& c : x)
                    c /= den;
                return euclidean_point(std::move(x));
            },
            [&](const Product& pr) {
                if (!obj.linear.empty())
                    throw Error(Errc::unsupported, "distance terms do not split over product factors");
                const auto& s = std::get<ProductPoint>(start.v);
                std::vector<SpacePoint> out;
                for (std::size_t f = 0; f < pr.factors.size(); ++f) {
                    PointObjective comp;
                    for (const auto& q : obj.quadratic)
                        comp.quadratic.push_back({q.weight, std::get<ProductPoint>(q.point.v).factors[f]});
                    out.push_back(minimize_point_objective(pr.factors[f], comp, s.factors[f]));
                }
                return product_point(std::move(out));
            },
            [&](const auto&) { return detail::minimize_linear_cone(space, obj, start); },
        },
        space.kind);
}

/// Weighted Frechet mean argmin sum_i w_i d^2(x, p_i).
inline SpacePoint frechet_mean(const Space& space, const std::vector<WeightedPoint>& points)
{
    if (points.empty())
        throw Error(Errc::empty_input, "Frechet mean of an empty list");
    PointObjective obj{points, {}};
    return minimize_point_objective(space, obj, points.front().point);
}

namespace detail {

/// Circumcenter through the dual problem max_w min_y sum_n w_n d^2(y, y_n)
/// over the simplex: Frank-Wolfe with away steps and exact line searches,
/// each dual evaluation being a weighted Frechet mean. A final geodesic line
/// search polishes the best primal iterate.
inline SpacePoint circumcenter_dual(const Space& space, std::span<const SpacePoint> points)
{
    const std::size_t n = points.size();
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    SpacePoint m = points.front();
    auto mean_of = [&](const std::vector<double>& wt) {
        PointObjective obj;
        for (std::size_t i = 0; i < n; ++i)
            if (wt[i] > 0.0)
                obj.quadratic.push_back({wt[i], points[i]});
        return minimize_point_objective(space, obj, m);
    };
    auto dual_value = [&](const std::vector<double>& wt, const SpacePoint& y) {
        double g = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            g += wt[i] * distance_sq(space, y, points[i]);
        return g;
    };
    SpacePoint best = points.front();
    double best_f = circumradius_sq(space, points, best);
    std::vector<double> d(n);
    for (int it = 0; it < 2000; ++it) {
        m = mean_of(w);
        for (std::size_t i = 0; i < n; ++i)
            d[i] = distance_sq(space, m, points[i]);
        const double f = *std::max_element(d.begin(), d.end());
        const double g = dual_value(w, m);
        if (f < best_f) {
            best_f = f;
            best = m;
        }
        if (f - g <= 1e-13 * (1.0 + f))
            break;
        const std::size_t j = static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
        std::size_t k = j;
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] > 0.0 && (k == j || d[i] < d[k]))
                k = i;
        std::vector<double> dir(n);
        double gmax = 1.0;
        if (d[j] - g >= g - d[k] || w[k] >= 1.0) {
            for (std::size_t i = 0; i < n; ++i)
                dir[i] = (i == j ? 1.0 : 0.0) - w[i];
        } else {
            for (std::size_t i = 0; i < n; ++i)
                dir[i] = w[i] - (i == k ? 1.0 : 0.0);
            gmax = w[k] / (1.0 - w[k]);
        }
        auto at = [&](double gam) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i)
                v[i] = std::max(0.0, w[i] + gam * dir[i]);
            return v;
        };
        const double gam = argmin_unimodal(
            [&](double gm) {
                const auto v = at(gm);
                return -dual_value(v, mean_of(v));
            },
            0.0, gmax);
        w = at(gam);
        if (gam == gmax)
            for (std::size_t i = 0; i < n; ++i)
                if (w[i] < 1e-15)
                    w[i] = 0.0;
    }
    return circumcenter_line_search(space, points, best);
}

} // namespace detail

/// Minimizer of y -> max_n d^2(y, y_n).
inline SpacePoint circumcenter(const Space& space, std::span<const SpacePoint> points)
{
    if (points.empty())
        throw Error(Errc::empty_input, "circumcenter of an empty list");
    for (const auto& p : points)
        validate(space, p);
    if (points.size() == 1)
        return points.front();
    const double diam = space.curvature().diameter();
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (!(distance(space, points[i], points[j]) < diam))
                throw Error(Errc::non_unique_geodesic, "pairwise distance >= D_kappa");
    return std::visit(overloaded{
                          [&](const Spider& sp) { return detail::circumcenter_spider(sp, points); },
                          [&](const Product&) { return detail::circumcenter_dual(space, points); },
                          [&](const auto&) { return detail::circumcenter_enumerate(space, points); },
                      },
                      space.kind);
}

} // namespace hflow
