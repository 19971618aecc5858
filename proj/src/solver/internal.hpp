#pragma once

#include <cstdio>

#include "eigenframe/solver.hpp"

namespace eigenframe::solver::detail {

inline std::string format_point(const std::vector<double>& x)
{
    std::string s = "(";
    char buf[32];
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.6g", i ? ", " : "", x[i]);
        s += buf;
    }
    return s + ")";
}

// Evaluates, turning domain errors into integration errors at x.
inline void eval_at(expr::Evaluator& ev, const std::vector<double>& x, std::vector<double>& out)
{
    try {
        ev.eval(x, out);
    } catch (const expr::EvalError& e) {
        throw IntegrationError(std::string(e.what()) + " at " + format_point(x));
    }
}

// Calls f(node) for every node with idx[a] == base[a] and idx[b] == base[b]
// for every b with fixed[b]; these are the starting nodes of the lines along a.
template <class F>
void line_starts(const Grid& g, std::size_t a, const std::vector<bool>& fixed, F&& f)
{
    for (std::size_t node = 0; node < g.size(); ++node) {
        auto idx = g.multi(node);
        bool ok = idx[a] == g.base[a];
        for (std::size_t b = 0; b < g.dim() && ok; ++b)
            if (fixed[b] && idx[b] != g.base[b])
                ok = false;
        if (ok)
            f(node);
    }
}

// Value halfway between nodes k and k+1 of a uniformly sampled line, by
// cubic interpolation on the four nearest nodes.
inline double mid_value(const std::vector<double>& y, std::size_t k)
{
    std::size_t m = y.size();
    if (m < 3)
        return 0.5 * (y[k] + y[k + 1]);
    if (m == 3) {
        // quadratic through all three
        double s = k + 0.5;
        return y[0] * (s - 1) * (s - 2) / 2 - y[1] * s * (s - 2) + y[2] * s * (s - 1) / 2;
    }
    if (k == 0)
        return (5 * y[0] + 15 * y[1] - 5 * y[2] + y[3]) / 16;
    if (k + 2 == m)
        return (5 * y[m - 1] + 15 * y[m - 2] - 5 * y[m - 3] + y[m - 4]) / 16;
    return (-y[k - 1] + 9 * y[k] + 9 * y[k + 1] - y[k + 2]) / 16;
}

}  // namespace eigenframe::solver::detail

namespace eigenframe::solver::detail {

// Per-node n x n matrices stored by component: M[m*n + i][node].
using NodeMatrices = std::vector<std::vector<double>>;

// R at the state coordinates of every node.
NodeMatrices frame_at_nodes(const SolutionField& sol, const geometry::Frame& frame);

// Jacobian of the flux in grid coordinates: R diag(lambda) R^-1 on a u-grid,
// lambda^j R_j as column j on a w-grid.
NodeMatrices grid_jacobian(const SolutionField& sol, const NodeMatrices& R);

// Derivative along axis a; fourth order needs two neighbours on each side.
inline double axis_derivative(const Grid& g, const std::vector<double>& v, std::size_t node, std::size_t a,
                              bool fourth)
{
    std::size_t s = g.stride(a);
    double h = g.spacing(a);
    if (fourth)
        return (-v[node + 2 * s] + 8 * v[node + s] - 8 * v[node - s] + v[node - 2 * s]) / (12 * h);
    return (v[node + s] - v[node - s]) / (2 * h);
}

}  // namespace eigenframe::solver::detail
