#include <algorithm>
#include <cmath>

#include "internal.hpp"

namespace eigenframe::solver {

using analysis::ReducedSystem;

namespace {

struct Plan {
    std::vector<std::size_t> own;     // free directions, carry the data
    std::vector<std::size_t> active;  // prescribed, nonzero coefficient
    std::vector<std::size_t> frozen;  // prescribed zero derivative
};

long offset(std::size_t start, long k, std::size_t b, std::size_t stride)
{
    return static_cast<long>(start) + (k - static_cast<long>(b)) * static_cast<long>(stride);
}

}  // namespace

SolutionField integrate_darboux(const ReducedSystem& red, const geometry::RiemannChart& chart,
                                const InitialData& data, const Grid& grid, const Tolerances&,
                                const SolveOptions&)
{
    std::size_t n = red.n, U = red.unknowns.size(), N = grid.size();
    if (grid.dim() != n)
        throw Error("grid dimension does not match the chart");

    std::vector<Plan> plan(U);
    std::vector<Expr> batch;
    std::vector<std::vector<long>> slot(U, std::vector<long>(n, -1));
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t i = 0; i < n; ++i) {
            const auto& t = red.eq[u][i];
            if (!t.prescribed)
                plan[u].own.push_back(i);
            else if (t.coeff.is_zero())
                plan[u].frozen.push_back(i);
            else {
                plan[u].active.push_back(i);
                slot[u][i] = static_cast<long>(batch.size());
                batch.push_back(t.coeff);
            }
        }

    // Seeds: kappa_j from a function of its own coordinate, h from a constant.
    std::vector<expr::Evaluator> seed_fn;
    std::vector<double> seed_const(U, 0.0);
    std::vector<long> seed_idx(U, -1);
    for (std::size_t u = 0; u < U; ++u) {
        const std::string& name = red.unknowns[u];
        if (plan[u].own.size() > 1)
            throw NotSolvableError("unknown '" + name + "' has more than one free direction");
        if (plan[u].own.empty()) {
            auto it = data.constants.find(name);
            if (it == data.constants.end())
                throw NotSolvableError("initial data: constant '" + name + "' is required");
            seed_const[u] = it->second;
        } else {
            auto it = data.functions.find(name);
            if (it == data.functions.end())
                throw NotSolvableError("initial data: function '" + name + "(t)' is required");
            seed_idx[u] = static_cast<long>(seed_fn.size());
            seed_fn.emplace_back(std::vector<Expr>{it->second}, std::vector<std::string>{"t"});
        }
    }
    auto seed = [&](std::size_t u, const std::vector<double>& w) {
        if (seed_idx[u] < 0)
            return seed_const[u];
        double t = w[plan[u].own[0]], v;
        try {
            seed_fn[seed_idx[u]].eval(std::span<const double>(&t, 1), std::span<double>(&v, 1));
        } catch (const expr::EvalError& e) {
            throw IntegrationError(std::string("initial data '") + red.unknowns[u] + "': " + e.what());
        }
        return v;
    };

    // Coefficients at nodes and at midpoints towards the next node on each axis.
    std::size_t B = batch.size();
    std::vector<double> at_node(N * B), at_mid(N * n * B, 0.0);
    {
        expr::Evaluator ev(batch, red.vars);
        std::vector<double> out(B);
        for (std::size_t node = 0; node < N; ++node) {
            auto w = grid.point(node);
            if (B)
                detail::eval_at(ev, w, out);
            std::copy(out.begin(), out.end(), at_node.begin() + node * B);
            auto idx = grid.multi(node);
            for (std::size_t a = 0; a < n && B; ++a) {
                if (idx[a] + 1 == grid.count(a))
                    continue;
                auto wm = w;
                wm[a] = 0.5 * (grid.axes[a][idx[a]] + grid.axes[a][idx[a] + 1]);
                detail::eval_at(ev, wm, out);
                std::copy(out.begin(), out.end(), at_mid.begin() + (node * n + a) * B);
            }
        }
    }

    std::vector<std::vector<double>> V(U, std::vector<double>(N));
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t node = 0; node < N; ++node)
            V[u][node] = seed(u, grid.point(node));

    auto sweep = [&](std::size_t u) {
        std::vector<double> W(N, 0.0);
        const Plan& p = plan[u];
        std::vector<bool> fixed(n, true);
        for (std::size_t a : p.own)
            fixed[a] = false;
        for (std::size_t node = 0; node < N; ++node) {
            auto idx = grid.multi(node);
            bool on = true;
            for (std::size_t b = 0; b < n && on; ++b)
                if (fixed[b] && idx[b] != grid.base[b])
                    on = false;
            if (on)
                W[node] = seed(u, grid.point(node));
        }
        for (std::size_t a : p.active) {
            fixed[a] = false;
            std::size_t stride = grid.stride(a), m = grid.count(a), b = grid.base[a];
            std::size_t partner = red.eq[u][a].partner;
            long s = slot[u][a];
            std::vector<bool> hold = fixed;
            hold[a] = false;
            std::vector<double> P(m);
            detail::line_starts(grid, a, hold, [&](std::size_t start) {
                for (std::size_t k = 0; k < m; ++k)
                    P[k] = V[partner][offset(start, static_cast<long>(k), b, stride)];
                for (long dir : {1L, -1L}) {
                    double y = W[start];
                    for (long k = static_cast<long>(b); dir > 0 ? k + 1 < static_cast<long>(m) : k > 0; k += dir) {
                        long k1 = k + dir, lo = std::min(k, k1);
                        std::size_t n0 = offset(start, k, b, stride), n1 = offset(start, k1, b, stride);
                        std::size_t nl = offset(start, lo, b, stride);
                        double h = grid.axes[a][k1] - grid.axes[a][k];
                        double a0 = at_node[n0 * B + s], a1 = at_node[n1 * B + s], am = at_mid[(nl * n + a) * B + s];
                        double p0 = P[k], p1 = P[k1], pm = detail::mid_value(P, static_cast<std::size_t>(lo));
                        double q1 = a0 * (p0 - y);
                        double q2 = am * (pm - (y + h / 2 * q1));
                        double q3 = am * (pm - (y + h / 2 * q2));
                        double q4 = a1 * (p1 - (y + h * q3));
                        y += h / 6 * (q1 + 2 * q2 + 2 * q3 + q4);
                        W[n1] = y;
                    }
                }
            });
        }
        for (std::size_t a : p.frozen) {
            fixed[a] = false;
            std::size_t stride = grid.stride(a), m = grid.count(a), b = grid.base[a];
            std::vector<bool> hold = fixed;
            detail::line_starts(grid, a, hold, [&](std::size_t start) {
                for (std::size_t k = 0; k < m; ++k)
                    W[offset(start, static_cast<long>(k), b, stride)] = W[start];
            });
        }
        return W;
    };

    double last = 1e300;
    int it = 0, stalls = 0;
    for (;; ++it) {
        double change = 0.0, scale = 0.0;
        for (std::size_t u = 0; u < U; ++u) {
            auto W = sweep(u);
            for (std::size_t node = 0; node < N; ++node) {
                change = std::max(change, std::abs(W[node] - V[u][node]));
                scale = std::max(scale, std::abs(W[node]));
            }
            V[u] = std::move(W);
        }
        if (change <= 4e-16 * (1.0 + scale))
            break;
        stalls = change >= last ? stalls + 1 : 0;
        if (stalls >= 3 && change < 1e-12 * (1.0 + scale))
            break;
        if (it > 400)
            throw IntegrationError("Darboux iteration does not converge (last change " + std::to_string(change) + ")");
        last = change;
    }

    SolutionField sol;
    sol.grid = grid;
    sol.in_w = true;
    sol.coords = chart.wvars;
    // sets of merged indices keep h by construction; measure anyway
    double drift = 0.0;
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t a : plan[u].frozen) {
            std::size_t stride = grid.stride(a);
            for (std::size_t node = 0; node < N; ++node)
                if (grid.multi(node)[a] + 1 < grid.count(a))
                    drift = std::max(drift, std::abs(V[u][node + stride] - V[u][node]));
        }
    sol.drift = drift;
    if (drift > 1e-10)
        throw IntegrationError("h drifts inside its index set by " + std::to_string(drift));

    sol.lambda.assign(n, std::vector<double>(N));
    for (std::size_t node = 0; node < N; ++node)
        for (std::size_t a = 0; a < n; ++a) {
            double v = 0.0;
            for (const auto& [u, c] : red.lambda_of[a])
                v += c.value() * V[u][node];
            sol.lambda[red.perm[a]][node] = v;
        }
    // u stays NaN where the chart inverse is singular (edge of the chart)
    expr::Evaluator back(chart.rho_inv, chart.wvars);
    sol.u.resize(N);
    for (std::size_t node = 0; node < N; ++node) {
        sol.u[node].resize(n);
        try {
            back.eval(grid.point(node), sol.u[node]);
        } catch (const expr::EvalError&) {
            std::fill(sol.u[node].begin(), sol.u[node].end(), std::nan(""));
        }
    }
    return sol;
}

}  // namespace eigenframe::solver
