#pragma once
/*
 * lambda-convex functionals, resolvents, minimizing movements, slopes,
 * the minimal element of the minus-subdifferential, and numerical
 * verifiers of the gradient-flow inequalities.
 */

#include <string>

#include "tangent.hpp"

namespace hflow {

template <class G>
struct Functional {
    using Point = typename G::Point;

    std::string descriptor;
    double lambda = 0.0;
    std::function<double(const Point&)> eval;
    /// Exact resolvent argmin E(.) + d^2(., y)/(2 tau); may be empty.
    std::function<Point(double, const Point&)> prox;
    /// Extra points used by slope suprema and by the generic resolvent; may be empty.
    std::function<std::vector<Point>(const Point&)> candidates;
    /// Closed-form slope; may be empty.
    std::function<double(const Point&)> closed_slope;
    /// Step sizes whose resolvents serve as slope candidates.
    std::vector<double> slope_taus = default_slope_taus();

    double operator()(const Point& y) const { return eval(y); }

    static std::vector<double> default_slope_taus()
    {
        std::vector<double> out;
        for (int e = -8; e <= 1; ++e)
            for (double m : {1.0, 3.0})
                out.push_back(m * std::pow(10.0, e));
        return out;
    }
};

template <class G>
struct Trajectory {
    std::vector<double> times;
    std::vector<typename G::Point> points;
    std::vector<double> energies;
    /// d(y_{k-1}, y_k) / tau_k, zero at k = 0.
    std::vector<double> speeds;
    std::vector<double> step_tau;
};

enum class SlopeMethod { closed_form, global_sup_sampled };

inline std::string to_string(SlopeMethod m)
{
    return m == SlopeMethod::closed_form ? "closed_form" : "global_sup_sampled";
}

struct SlopeEstimate {
    double value = 0.0;
    SlopeMethod method = SlopeMethod::closed_form;
    std::size_t sample_count = 0;
};

// ---------------------------------------------------------------------------
// Resolvent

namespace detail {

/// Alternating geodesic line searches toward the candidate points; a
/// heuristic for functionals that only provide evaluation.
template <class G>
typename G::Point generic_prox(const G& geo, const Functional<G>& E, double tau, const typename G::Point& y)
{
    if (!E.candidates)
        throw Error(Errc::prox_failure, "functional '" + E.descriptor + "' has neither a resolvent nor candidates");
    auto objective = [&](const typename G::Point& x) {
        const double d = geo.distance(x, y);
        return E.eval(x) + d * d / (2.0 * tau);
    };
    auto x = y;
    double fx = objective(x);
    for (int pass = 0; pass < 500; ++pass) {
        auto targets = E.candidates(x);
        targets.push_back(y);
        const double before = fx;
        for (const auto& target : targets) {
            if (geo.distance(x, target) == 0.0)
                continue;
            auto along = [&](double s) { return objective(geo.geodesic(x, target, s)); };
            const double s = argmin_unimodal(along, 0.0, 1.0);
            const double v = along(s);
            if (v < fx) {
                x = geo.geodesic(x, target, s);
                fx = v;
            }
        }
        if (before - fx < 1e-12 * (1.0 + std::abs(fx)))
            return x;
    }
    throw Error(Errc::prox_failure, "line searches did not settle for '" + E.descriptor + "'");
}

} // namespace detail

template <class G>
typename G::Point prox(const G& geo, const Functional<G>& E, double tau, const typename G::Point& y)
{
    if (!(tau > 0.0))
        throw Error(Errc::domain_error, "resolvent step must be positive");
    if (!(1.0 + E.lambda * tau > 0.0))
        throw Error(Errc::domain_error, "resolvent step violates 1 + lambda tau > 0");
    if (E.prox)
        return E.prox(tau, y);
    return detail::generic_prox(geo, E, tau, y);
}

// ---------------------------------------------------------------------------
// Minimizing movements

/// Uniform steps tau = T/N; N is doubled until 1 + lambda tau > 0.
template <class G>
Trajectory<G> flow(const G& geo, const Functional<G>& E, const typename G::Point& y0, double T, long N = 10000)
{
    if (!(T > 0.0) || N <= 0)
        throw Error(Errc::domain_error, "flow needs T > 0 and N > 0");
    while (!(1.0 + E.lambda * T / static_cast<double>(N) > 0.0))
        N *= 2;
    const double tau = T / static_cast<double>(N);
    Trajectory<G> out;
    out.times.reserve(N + 1);
    out.points.reserve(N + 1);
    out.times.push_back(0.0);
    out.points.push_back(y0);
    out.energies.push_back(E.eval(y0));
    out.speeds.push_back(0.0);
    for (long k = 1; k <= N; ++k) {
        auto next = prox(geo, E, tau, out.points.back());
        out.speeds.push_back(geo.distance(out.points.back(), next) / tau);
        out.energies.push_back(E.eval(next));
        out.points.push_back(std::move(next));
        out.times.push_back(T * static_cast<double>(k) / static_cast<double>(N));
        out.step_tau.push_back(tau);
    }
    return out;
}

/// Final point of the minimizing-movement scheme with N uniform steps.
template <class G>
typename G::Point flow_endpoint(const G& geo, const Functional<G>& E, typename G::Point y, double T, long N)
{
    const double tau = T / static_cast<double>(N);
    for (long k = 0; k < N; ++k)
        y = prox(geo, E, tau, y);
    return y;
}

// ---------------------------------------------------------------------------
// Slope

/// Global formula ((E(y) - E(z))/d + lambda/2 d)^+ at one test point.
template <class G>
double slope_quotient(const G& geo, const Functional<G>& E, const typename G::Point& y, double Ey,
                      const typename G::Point& z)
{
    const double d = geo.distance(y, z);
    if (d == 0.0)
        return 0.0;
    return std::max(0.0, (Ey - E.eval(z)) / d + 0.5 * E.lambda * d);
}

template <class G>
SlopeEstimate slope(const G& geo, const Functional<G>& E, const typename G::Point& y)
{
    const double Ey = E.eval(y);
    if (!std::isfinite(Ey))
        throw Error(Errc::domain_error, "slope requested outside the domain of the functional");
    if (E.closed_slope)
        return {E.closed_slope(y), SlopeMethod::closed_form, 0};
    std::vector<typename G::Point> pts;
    if (E.candidates)
        pts = E.candidates(y);
    if (E.prox)
        for (double tau : E.slope_taus)
            if (1.0 + E.lambda * tau > 0.0)
                pts.push_back(E.prox(tau, y));
    double scale = 1.0;
    for (const auto& z : pts)
        scale = std::max(scale, geo.distance(y, z));
    SlopeEstimate est{0.0, SlopeMethod::global_sup_sampled, 0};
    for (const auto& z : pts) {
        // very short steps only resolve rounding noise of E
        if (geo.distance(y, z) < 1e-9 * scale)
            continue;
        ++est.sample_count;
        est.value = std::max(est.value, slope_quotient(geo, E, y, Ey, z));
    }
    return est;
}

// ---------------------------------------------------------------------------
// Minimal selection of the minus-subdifferential

struct SelectionOptions {
    std::vector<double> h_schedule{1e-2, 1e-3, 1e-4};
    long steps_per_h = 100;
    double cauchy_tol = 1e-3;
};

namespace detail {

/// Lagrange weights of the polynomial through (h_i, .) evaluated at 0.
inline std::vector<double> extrapolation_weights(std::span<const double> h)
{
    std::vector<double> w(h.size(), 1.0);
    for (std::size_t i = 0; i < h.size(); ++i)
        for (std::size_t j = 0; j < h.size(); ++j)
            if (j != i)
                w[i] *= h[j] / (h[j] - h[i]);
    return w;
}

} // namespace detail

/// Difference-quotient germs (1/h) germ(y -> y_h) of the flow from y,
/// extrapolated to h = 0 when the cone admits the linear combination,
/// with a Cauchy check between the full extrapolant and the one built from
/// the two smallest h.
template <class G>
Direction<G> minimal_selection(const G& geo, const Functional<G>& E, const typename G::Point& y,
                               const SelectionOptions& opt = {})
{
    if (!std::isfinite(E.eval(y)))
        throw Error(Errc::domain_error, "minimal selection requested outside the domain of the functional");
    auto hs = opt.h_schedule;
    if (hs.size() < 2)
        throw Error(Errc::domain_error, "minimal selection needs at least two step sizes");
    std::sort(hs.begin(), hs.end(), std::greater<>());
    std::vector<typename G::Tangent> q;
    for (double h : hs) {
        const auto yh = flow_endpoint(geo, E, y, h, opt.steps_per_h);
        q.push_back(geo.scale(1.0 / h, geo.log(y, yh)));
    }
    auto extrapolate = [&](std::size_t first) -> std::optional<typename G::Tangent> {
        std::span<const double> h(hs.data() + first, hs.size() - first);
        const auto w = detail::extrapolation_weights(h);
        return geo.combine(w, std::span<const typename G::Tangent>(q.data() + first, q.size() - first));
    };
    std::optional<typename G::Tangent> best = extrapolate(0);
    std::optional<typename G::Tangent> check = hs.size() > 2 ? extrapolate(hs.size() - 2) : q[q.size() - 2];
    if (!best || !check) {
        best = q.back();
        check = q[q.size() - 2];
    }
    const double n = geo.norm(*best);
    const double gap = geo.cone_distance(*best, *check);
    if (!(gap <= opt.cauchy_tol * std::max(1.0, n)))
        throw Error(Errc::no_convergence,
                    "difference quotients are not Cauchy across the h schedule (gap " + std::to_string(gap) + ")");
    return from_tangent(geo, y, *best);
}

/// max_z E(y) - <v, germ(y -> z)> + lambda/2 d^2(y,z) - E(z); <= 0 certifies membership.
template <class G>
double check_subdifferential(const G& geo, const Functional<G>& E, const typename G::Point& y, const Direction<G>& v,
                             const std::vector<typename G::Point>& tests)
{
    if (!geo.same(v.base, y))
        throw Error(Errc::mismatched_base, "direction is not based at y");
    const double Ey = E.eval(y);
    if (!std::isfinite(Ey))
        throw Error(Errc::domain_error, "subdifferential outside the domain");
    double worst = -kInf;
    for (const auto& z : tests) {
        const double d = geo.distance(y, z);
        if (d == 0.0)
            continue;
        const double pair = inner(geo, v, make_direction(geo, y, z, 1.0));
        worst = std::max(worst, Ey - pair + 0.5 * E.lambda * d * d - E.eval(z));
    }
    return tests.empty() || worst == -kInf ? 0.0 : worst;
}

// ---------------------------------------------------------------------------
// Verifiers

struct Violation {
    std::string check;
    double max_violation = 0.0;
    double tau = 0.0;
    std::size_t samples = 0;
};

namespace detail {

template <class G>
double traj_tau(const Trajectory<G>& tr)
{
    return tr.step_tau.empty() ? 0.0 : *std::max_element(tr.step_tau.begin(), tr.step_tau.end());
}

inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t max_samples)
{
    std::vector<std::size_t> out;
    const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(1, max_samples));
    for (std::size_t i = 0; i < n; i += stride)
        out.push_back(i);
    if (n && out.back() != n - 1)
        out.push_back(n - 1);
    return out;
}

} // namespace detail

/// Central difference of 1/2 d^2(y_t, z) plus E(y_t) + lambda/2 d^2 - E(z),
/// maximized over test points and interior times.
template <class G>
Violation verify_evi(const G& geo, const Trajectory<G>& tr, const Functional<G>& E, double lambda,
                     const std::vector<typename G::Point>& tests, std::size_t max_times = 2000)
{
    Violation out{"evi", -kInf, detail::traj_tau(tr), 0};
    const std::size_t n = tr.points.size();
    if (n < 3 || tests.empty())
        return {"evi", 0.0, out.tau, 0};
    for (const auto& z : tests) {
        const double Ez = E.eval(z);
        for (std::size_t k : detail::sample_indices(n, max_times)) {
            if (k == 0 || k + 1 >= n)
                continue;
            const double dp = geo.distance(tr.points[k + 1], z);
            const double dm = geo.distance(tr.points[k - 1], z);
            const double d = geo.distance(tr.points[k], z);
            const double deriv = 0.5 * (dp * dp - dm * dm) / (tr.times[k + 1] - tr.times[k - 1]);
            out.max_violation = std::max(out.max_violation, deriv + tr.energies[k] + 0.5 * lambda * d * d - Ez);
            ++out.samples;
        }
    }
    return out;
}

/// max over sampled s <= t of d(y_t, z_t) - e^{-lambda (t-s)} d(y_s, z_s).
template <class G>
Violation verify_contraction(const G& geo, const Trajectory<G>& a, const Trajectory<G>& b, double lambda,
                             std::size_t max_times = 400)
{
    const std::size_t n = std::min(a.points.size(), b.points.size());
    Violation out{"contraction", -kInf, std::max(detail::traj_tau(a), detail::traj_tau(b)), 0};
    const auto idx = detail::sample_indices(n, max_times);
    std::vector<double> d(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        d[i] = geo.distance(a.points[idx[i]], b.points[idx[i]]);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i; j < idx.size(); ++j) {
            const double dt = a.times[idx[j]] - a.times[idx[i]];
            out.max_violation = std::max(out.max_violation, d[j] - std::exp(-lambda * dt) * d[i]);
            ++out.samples;
        }
    if (out.samples == 0)
        out.max_violation = 0.0;
    return out;
}

namespace detail {

/// theta_lambda(t) = int_0^t e^{-2 lambda r} dr and its integral over [0, T].
inline double theta(double lambda, double t)
{
    if (lambda == 0.0)
        return t;
    return -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
}

inline double theta_integral(double lambda, double T)
{
    if (lambda == 0.0)
        return 0.5 * T * T;
    return (T - theta(lambda, T)) / (2.0 * lambda);
}

} // namespace detail

/// Both sides of the a-priori estimate for d^2(y_t, z_s), t >= s > 0, where
/// (z_s) is the flow from z on the same uniform grid.
template <class G>
Violation verify_apriori(const G& geo, const Trajectory<G>& ty, const typename G::Point& z, const Functional<G>& E,
                         double lambda, std::size_t max_times = 200)
{
    const std::size_t n = ty.points.size();
    Violation out{"apriori", -kInf, detail::traj_tau(ty), 0};
    if (n < 2)
        return {"apriori", 0.0, out.tau, 0};
    const double T = ty.times.back();
    const auto tz = flow(geo, E, z, T, static_cast<long>(n - 1));
    const auto& y = ty.points.front();
    const double d0 = geo.distance(y, z);
    const double Ey = ty.energies.front();
    const double Ez = E.eval(z);
    const double sl = slope(geo, E, y).value;
    // cumulative trapezoid of d^2(y_r, z)
    std::vector<double> cum(n, 0.0);
    double prev = d0 * d0;
    for (std::size_t k = 1; k < n; ++k) {
        const double d = geo.distance(ty.points[k], z);
        cum[k] = cum[k - 1] + 0.5 * (prev + d * d) * (ty.times[k] - ty.times[k - 1]);
        prev = d * d;
    }
    const auto idx = detail::sample_indices(n, max_times);
    for (std::size_t i : idx) {
        if (i == 0)
            continue;
        for (std::size_t j : idx) {
            if (j < i)
                continue;
            const double s = ty.times[i], t = ty.times[j];
            const double lhs = std::pow(geo.distance(ty.points[j], tz.points[i]), 2);
            const double rhs = std::exp(-2.0 * lambda * s) *
                               (d0 * d0 + 2.0 * (t - s) * (Ez - Ey) +
                                2.0 * sl * sl * detail::theta_integral(lambda, t - s) - lambda * cum[j - i]);
            out.max_violation = std::max(out.max_violation, lhs - rhs);
            ++out.samples;
        }
    }
    if (out.samples == 0)
        out.max_violation = 0.0;
    return out;
}

/// Largest increase of e^{lambda t} |dE|(y_t) between consecutive samples.
template <class G>
Violation verify_regularization(const G& geo, const Trajectory<G>& tr, const Functional<G>& E, double lambda,
                                std::size_t max_times = 2000)
{
    Violation out{"regularization", 0.0, detail::traj_tau(tr), 0};
    const auto idx = detail::sample_indices(tr.points.size(), max_times);
    double prev = kInf;
    for (std::size_t k : idx) {
        const double v = std::exp(lambda * tr.times[k]) * slope(geo, E, tr.points[k]).value;
        if (prev != kInf)
            out.max_violation = std::max(out.max_violation, v - prev);
        prev = v;
        ++out.samples;
    }
    return out;
}

} // namespace hflow
