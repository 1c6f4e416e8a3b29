#pragma once
/*
 * Discrete Korevaar-Schoen energy of maps from a weighted graph into a
 * model space, its boundary-constrained version, the harmonic-map solver,
 * the Laplacian (minimal selection of the energy's flow pushed through
 * iota) and the first-variation / convexity / chain-rule checks.
 */

#include "barycenter.hpp"
#include "flow.hpp"
#include "maps.hpp"

namespace hflow {

struct ConvergenceRow {
    int iter = 0;
    double energy = 0.0;
    double slope_est = 0.0;
};

struct KSOptions {
    /// Gauss-Seidel stops once the largest node displacement in a sweep
    /// falls below sweep_tol times the map's spread.
    double sweep_tol = 1e-15;
    int max_sweeps = 200000;
    /// Step sizes for the Laplacian; the discrete energy is stiff (~N^2),
    /// so they sit one decade below the generic default.
    SelectionOptions selection{{1e-3, 1e-4, 1e-5}, 100, 1e-3};
    /// Outer resolvent iterations allowed to the harmonic solver.
    int harmonic_budget = 400;
    /// Called with every convergence-log row as it is produced, so that
    /// callers keep partial logs when the solver gives up.
    std::function<void(const ConvergenceRow&)> on_progress;
};

class KSEnergy {
public:
    KSEnergy(MapSpace ms, std::optional<L2Map> boundary_data = std::nullopt, KSOptions opt = {})
        : ms_(std::move(ms)), data_(std::move(boundary_data)), opt_(std::move(opt))
    {
        const Domain& d = *ms_.domain;
        if (data_)
            ms_.validate(*data_);
        coef_.resize(d.nodes);
        for (int x = 0; x < d.nodes; ++x) {
            const double Wx = d.weight_sum(x);
            for (const auto& [y, w] : d.adj[x]) {
                const double Wy = d.weight_sum(y);
                const double a = w * ((Wx > 0 ? d.m[x] / Wx : 0.0) + (Wy > 0 ? d.m[y] / Wy : 0.0)) / (d.r * d.r);
                coef_[x].emplace_back(y, a);
            }
        }
    }

    const MapSpace& space() const { return ms_; }
    const Domain& domain() const { return *ms_.domain; }
    const std::optional<L2Map>& boundary_data() const { return data_; }
    const KSOptions& options() const { return opt_; }

    /// Coupling a_xy of node x to neighbour y in the energy
    /// E = 1/2 sum_{edges} a_xy d^2(u_x, u_y).
    const std::vector<std::pair<int, double>>& coupling(int x) const { return coef_.at(x); }

    /// e(x) = sum_y w_xy d^2(u_x, u_y) / (W_x r^2); zero at isolated nodes.
    std::vector<double> density(const L2Map& u) const
    {
        ms_.require_shape(u);
        const Domain& d = domain();
        std::vector<double> e(d.nodes, 0.0);
        for (int x = 0; x < d.nodes; ++x) {
            const double Wx = d.weight_sum(x);
            if (Wx <= 0.0)
                continue;
            double s = 0.0;
            for (const auto& [y, w] : d.adj[x])
                s += w * distance_sq(ms_.target, u.values[x], u.values[y]);
            e[x] = s / (Wx * d.r * d.r);
        }
        return e;
    }

    double energy(const L2Map& u) const
    {
        const auto e = density(u);
        double s = 0.0;
        for (std::size_t x = 0; x < e.size(); ++x)
            s += domain().m[x] * e[x];
        return 0.5 * s;
    }

    bool matches_boundary(const L2Map& u) const
    {
        if (!data_)
            return true;
        for (int b : domain().boundary)
            if (!same_point(u.values.at(b), data_->values[b]))
                return false;
        return true;
    }

    /// Energy with the boundary condition: +inf unless u equals the data on the boundary.
    double energy_b(const L2Map& u) const { return matches_boundary(u) ? energy(u) : kInf; }

    /// max_x sum_y a_xy / m_x, the scale of the energy's Hessian in L^2.
    double stiffness() const
    {
        double s = 0.0;
        for (int x = 0; x < domain().nodes; ++x) {
            double a = 0.0;
            for (const auto& c : coef_[x])
                a += c.second;
            s = std::max(s, a / domain().m[x]);
        }
        return s;
    }

    bool is_free(int x) const { return !(data_ && domain().is_boundary(x)); }

    /// Resolvent of energy_b: node-wise Gauss-Seidel in ascending node order;
    /// each update is the weighted Frechet mean of the neighbours (a_xy) and
    /// the previous value (m_x / tau).
    L2Map prox(double tau, const L2Map& y) const
    {
        ms_.require_shape(y);
        const Domain& d = domain();
        L2Map u = y;
        if (data_)
            for (int b : d.boundary)
                u.values[b] = data_->values[b];
        double spread = 0.0;
        for (int x = 0; x < d.nodes; ++x)
            spread = std::max(spread, distance(ms_.target, u.values[x], u.values[0]));
        const double tol = opt_.sweep_tol * (1.0 + spread);
        double prev_move = kInf;
        for (int sweep = 0; sweep < opt_.max_sweeps; ++sweep) {
            double move = 0.0;
            for (int x = 0; x < d.nodes; ++x) {
                if (!is_free(x))
                    continue;
                PointObjective obj;
                for (const auto& [n, a] : coef_[x])
                    if (a > 0.0)
                        obj.quadratic.push_back({a, u.values[n]});
                obj.quadratic.push_back({d.m[x] / tau, y.values[x]});
                auto next = minimize_point_objective(ms_.target, obj, u.values[x]);
                move = std::max(move, distance(ms_.target, next, u.values[x]));
                u.values[x] = std::move(next);
            }
            if (move <= tol || (sweep > 20 && move >= prev_move && move <= 1e3 * tol))
                return u;
            prev_move = move;
        }
        throw Error(Errc::no_convergence, "Gauss-Seidel sweeps exhausted in the energy resolvent");
    }

    Functional<MapSpace> functional() const
    {
        Functional<MapSpace> E;
        E.descriptor = "korevaar_schoen";
        E.lambda = 0.0;
        auto self = std::make_shared<const KSEnergy>(*this);
        E.eval = [self](const L2Map& u) { return self->energy_b(u); };
        E.prox = [self](double tau, const L2Map& u) { return self->prox(tau, u); };
        const double k = std::max(1.0, stiffness());
        for (auto& t : E.slope_taus)
            t /= k;
        return E;
    }

private:
    MapSpace ms_;
    std::optional<L2Map> data_;
    KSOptions opt_;
    std::vector<std::vector<std::pair<int, double>>> coef_;
};

// ---------------------------------------------------------------------------
// Harmonic maps

struct HarmonicResult {
    L2Map map;
    std::vector<ConvergenceRow> log;
    double slope = 0.0;
    double laplacian_norm = 0.0;
};

Section laplacian(const KSEnergy& E, const L2Map& u);

namespace detail {

/// Conjugate gradients on the interior unknowns of the flat problem
/// sum_y a_xy (u_x - u_y) = 0, one coordinate at a time.
inline L2Map harmonic_flat(const KSEnergy& E, L2Map u, std::vector<ConvergenceRow>& log)
{
    const Domain& d = E.domain();
    const int dim = std::get<Euclidean>(E.space().target.kind).dim;
    std::vector<int> free;
    std::vector<int> index(d.nodes, -1);
    for (int x = 0; x < d.nodes; ++x)
        if (E.is_free(x)) {
            index[x] = static_cast<int>(free.size());
            free.push_back(x);
        }
    const std::size_t n = free.size();
    auto apply = [&](const std::vector<double>& p) {
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const int x = free[i];
            for (const auto& [y, a] : E.coupling(x)) {
                out[i] += a * p[i];
                if (index[y] >= 0)
                    out[i] -= a * p[index[y]];
            }
        }
        return out;
    };
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    };
    int iter = 0;
    for (int c = 0; c < dim; ++c) {
        std::vector<double> rhs(n, 0.0), sol(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int x = free[i];
            sol[i] = std::get<EuclideanPoint>(u.values[x].v).x[c];
            for (const auto& [y, a] : E.coupling(x))
                if (index[y] < 0)
                    rhs[i] += a * std::get<EuclideanPoint>(u.values[y].v).x[c];
        }
        const double bnorm = std::sqrt(dot(rhs, rhs));
        auto Ax = apply(sol);
        std::vector<double> res(n);
        for (std::size_t i = 0; i < n; ++i)
            res[i] = rhs[i] - Ax[i];
        auto p = res;
        double rr = dot(res, res);
        for (std::size_t k = 0; k < 20 * n + 100 && std::sqrt(rr) > 1e-15 * std::max(1.0, bnorm); ++k) {
            const auto Ap = apply(p);
            const double pAp = dot(p, Ap);
            if (pAp <= 0.0)
                break;
            const double alpha = rr / pAp;
            for (std::size_t i = 0; i < n; ++i) {
                sol[i] += alpha * p[i];
                res[i] -= alpha * Ap[i];
            }
            const double rr_new = dot(res, res);
            for (std::size_t i = 0; i < n; ++i)
                p[i] = res[i] + (rr_new / rr) * p[i];
            rr = rr_new;
            ++iter;
        }
        for (std::size_t i = 0; i < n; ++i)
            std::get<EuclideanPoint>(u.values[free[i]].v).x[c] = sol[i];
        log.push_back({iter, E.energy(u), std::sqrt(rr)});
    }
    return u;
}

} // namespace detail

/// Minimizer of energy_b from `init`: conjugate gradients on flat targets,
/// otherwise resolvent steps with tau growing geometrically to 1e12.
/// The result is certified by slope <= 1e-6 and |laplacian| <= 1e-4.
inline HarmonicResult harmonic_solve(const KSEnergy& E, const L2Map& init)
{
    const Domain& d = E.domain();
    if (!E.boundary_data() || d.boundary.empty())
        throw Error(Errc::domain_error, "harmonic maps need boundary nodes and boundary data");
    E.space().validate(init);
    HarmonicResult out;
    L2Map u = init;
    for (int b : d.boundary)
        u.values[b] = E.boundary_data()->values[b];
    const bool all_boundary = std::none_of(d.on_boundary.begin(), d.on_boundary.end(), [](char c) { return c == 0; });
    if (all_boundary) {
        out.map = u;
    } else if (std::holds_alternative<Euclidean>(E.space().target.kind)) {
        out.map = detail::harmonic_flat(E, u, out.log);
        if (E.options().on_progress)
            for (const auto& row : out.log)
                E.options().on_progress(row);
    } else {
        double tau = 1.0;
        bool settled = false;
        for (int it = 0; it < E.options().harmonic_budget; ++it) {
            auto next = E.prox(tau, u);
            const double step = l2_distance(E.space(), u, next);
            out.log.push_back({it, E.energy(next), step / tau});
            if (E.options().on_progress)
                E.options().on_progress(out.log.back());
            u = std::move(next);
            if (tau >= 1e12 && step <= 1e-13 * (1.0 + std::sqrt(d.total_mass()))) {
                settled = true;
                break;
            }
            tau = std::min(1e12, tau * 10.0);
        }
        if (!settled)
            throw Error(Errc::no_convergence, "harmonic solver exhausted its iteration budget");
        out.map = u;
    }
    const auto F = E.functional();
    out.slope = slope(E.space(), F, out.map).value;
    out.laplacian_norm = section_norm(E.space(), laplacian(E, out.map));
    if (!(out.slope <= 1e-6) || !(out.laplacian_norm <= 1e-4))
        throw Error(Errc::no_convergence, "harmonic certificate failed (slope " + std::to_string(out.slope) +
                                              ", laplacian " + std::to_string(out.laplacian_norm) + ")");
    return out;
}

inline L2Map harmonic(const KSEnergy& E, const L2Map& init) { return harmonic_solve(E, init).map; }

// ---------------------------------------------------------------------------
// Laplacian

/// Minimal element of -dE_b at u, as a section of the pullback cone.
inline Section laplacian(const KSEnergy& E, const L2Map& u)
{
    const auto F = E.functional();
    if (!std::isfinite(F.eval(u)))
        throw Error(Errc::domain_error, "laplacian needs u to satisfy the boundary condition");
    return iota(E.space(), minimal_selection(E.space(), F, u, E.options().selection));
}

/// The flat-target gradient oracle: -(1/m_x) sum_y a_xy (u_x - u_y), zero on the boundary.
inline std::vector<std::vector<double>> flat_laplacian(const KSEnergy& E, const L2Map& u)
{
    const Domain& d = E.domain();
    std::vector<std::vector<double>> out(d.nodes);
    for (int x = 0; x < d.nodes; ++x) {
        const auto& ux = std::get<EuclideanPoint>(u.values[x].v).x;
        out[x].assign(ux.size(), 0.0);
        if (!E.is_free(x))
            continue;
        for (const auto& [y, a] : E.coupling(x)) {
            const auto& uy = std::get<EuclideanPoint>(u.values[y].v).x;
            for (std::size_t c = 0; c < ux.size(); ++c)
                out[x][c] -= a * (ux[c] - uy[c]) / d.m[x];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checks

struct FirstVariation {
    double lhs = 0.0;       // -sum_x m_x < lap_x, germ(u_x -> v_x) >
    double rhs = 0.0;       // extrapolated one-sided derivative of E_b along u -> v
    double rhs_upper = 0.0; // smallest difference quotient (upper end of the bracket)
    double violation = 0.0; // lhs - rhs
};

inline FirstVariation first_variation_check(const KSEnergy& E, const L2Map& u, const Section& lap, const L2Map& v,
                                            std::vector<double> t_schedule = {1e-3, 1e-4, 1e-5})
{
    const MapSpace& ms = E.space();
    if (t_schedule.empty())
        throw Error(Errc::domain_error, "first variation needs a t schedule");
    FirstVariation out;
    const auto germ = iota(ms, make_direction(ms, u, v, 1.0));
    out.lhs = -section_inner(ms, lap, germ);
    const double E0 = E.energy_b(u);
    auto dq = [&](double t) { return (E.energy_b(ms.geodesic(u, v, t)) - E0) / t; };
    const double t = *std::min_element(t_schedule.begin(), t_schedule.end());
    out.rhs_upper = std::min(dq(t), [&] {
        double m = kInf;
        for (double s : t_schedule)
            m = std::min(m, dq(s));
        return m;
    }());
    out.rhs = 2.0 * dq(t) - dq(2.0 * t);
    out.violation = out.lhs - out.rhs;
    return out;
}

inline FirstVariation first_variation_check(const KSEnergy& E, const L2Map& u, const L2Map& v,
                                            std::vector<double> t_schedule = {1e-3, 1e-4, 1e-5})
{
    return first_variation_check(E, u, laplacian(E, u), v, std::move(t_schedule));
}

/// The energy's quadratic form applied to a real function on the nodes.
inline double function_energy(const Domain& d, const std::vector<double>& f)
{
    double s = 0.0;
    for (int x = 0; x < d.nodes; ++x) {
        const double Wx = d.weight_sum(x);
        if (Wx <= 0.0)
            continue;
        double acc = 0.0;
        for (const auto& [y, w] : d.adj[x])
            acc += w * (f[x] - f[y]) * (f[x] - f[y]);
        s += d.m[x] * acc / (Wx * d.r * d.r);
    }
    return 0.5 * s;
}

/// E(geo_t) + t(1-t) E(d) - (1-t) E(u) - t E(v), with d(x) = d(u(x), v(x)).
inline double improved_convexity_check(const KSEnergy& E, const L2Map& u, const L2Map& v, double t)
{
    const MapSpace& ms = E.space();
    std::vector<double> dist(ms.size());
    for (std::size_t x = 0; x < ms.size(); ++x)
        dist[x] = distance(ms.target, u.values[x], v.values[x]);
    const double lhs = E.energy(ms.geodesic(u, v, t)) + t * (1.0 - t) * function_energy(E.domain(), dist);
    return lhs - ((1.0 - t) * E.energy(u) + t * E.energy(v));
}

/// B(h, g) = 1/2 sum over ordered adjacent pairs w_xy (h_y - h_x)(g_y - g_x).
inline double dirichlet_form(const Domain& d, const std::vector<double>& h, const std::vector<double>& g)
{
    double s = 0.0;
    for (int x = 0; x < d.nodes; ++x)
        for (const auto& [y, w] : d.adj[x])
            s += w * (h[y] - h[x]) * (g[y] - g[x]);
    return 0.5 * s;
}

/// Discretization constant relating r^2 e(x) to the pointwise Laplacian of
/// a quadratic: interior mean of W_x / (2 m_x).
inline double calibrate_kappa_norm(const Domain& d)
{
    double s = 0.0;
    int n = 0;
    for (int x = 0; x < d.nodes; ++x) {
        if (d.is_boundary(x) || d.weight_sum(x) <= 0.0)
            continue;
        s += d.weight_sum(x) / (2.0 * d.m[x]);
        ++n;
    }
    return n ? s / n : 1.0;
}

/// -B(f o u, g) - lambda sum_x g(x) m_x e(x) r^2 kappa_norm.
inline double chain_rule_check(const KSEnergy& E, const L2Map& u, const std::function<double(const SpacePoint&)>& f,
                               double lambda, const std::vector<double>& g, double kappa_norm)
{
    const Domain& d = E.domain();
    if (static_cast<int>(g.size()) != d.nodes)
        throw Error(Errc::domain_error, "test function must have one value per node");
    std::vector<double> h(d.nodes);
    for (int x = 0; x < d.nodes; ++x)
        h[x] = f(u.values[x]);
    const auto e = E.density(u);
    double bulk = 0.0;
    for (int x = 0; x < d.nodes; ++x)
        bulk += g[x] * d.m[x] * e[x] * d.r * d.r * kappa_norm;
    return -dirichlet_form(d, h, g) - lambda * bulk;
}

} // namespace hflow
