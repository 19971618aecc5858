#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "internal.hpp"

namespace eigenframe::solver {

namespace detail {

NodeMatrices frame_at_nodes(const SolutionField& sol, const geometry::Frame& frame)
{
    std::size_t n = frame.n(), N = sol.u.size();
    std::vector<Expr> batch;
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t i = 0; i < n; ++i)
            batch.push_back(frame.R[m][i]);
    expr::Evaluator ev(batch, frame.vars);
    NodeMatrices R(n * n, std::vector<double>(N));
    std::vector<double> out(n * n);
    for (std::size_t node = 0; node < N; ++node) {
        eval_at(ev, sol.u[node], out);
        for (std::size_t c = 0; c < n * n; ++c)
            R[c][node] = out[c];
    }
    return R;
}

NodeMatrices grid_jacobian(const SolutionField& sol, const NodeMatrices& R)
{
    std::size_t n = sol.lambda.size(), N = sol.u.size();
    NodeMatrices J(n * n, std::vector<double>(N));
    Eigen::MatrixXd Rm(n, n), A(n, n);
    for (std::size_t node = 0; node < N; ++node) {
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t i = 0; i < n; ++i)
                Rm(m, i) = R[m * n + i][node];
        if (sol.in_w) {
            for (std::size_t m = 0; m < n; ++m)
                for (std::size_t j = 0; j < n; ++j)
                    A(m, j) = sol.lambda[j][node] * Rm(m, j);
        } else {
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(Rm);
            Eigen::MatrixXd RL = Rm;
            for (std::size_t i = 0; i < n; ++i)
                RL.col(i) *= sol.lambda[i][node];
            A = RL * lu.inverse();
        }
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t j = 0; j < n; ++j)
                J[m * n + j][node] = A(m, j);
    }
    return J;
}

}  // namespace detail

namespace {

// Integral of g over [k, k+1] on a uniform line, cubic on the nearest four nodes.
double cell_integral(const std::vector<double>& g, std::size_t k, double h)
{
    std::size_t m = g.size();
    if (m == 2)
        return h / 2 * (g[0] + g[1]);
    if (m == 3)
        return k == 0 ? h / 12 * (5 * g[0] + 8 * g[1] - g[2]) : h / 12 * (-g[0] + 8 * g[1] + 5 * g[2]);
    if (k == 0)
        return h / 24 * (9 * g[0] + 19 * g[1] - 5 * g[2] + g[3]);
    if (k + 2 == m)
        return h / 24 * (9 * g[m - 1] + 19 * g[m - 2] - 5 * g[m - 3] + g[m - 4]);
    // trapezoid with the end correction
    return h / 2 * (g[k] + g[k + 1]) - h / 24 * (g[k + 2] - g[k + 1] - g[k] + g[k - 1]);
}

std::vector<std::vector<double>> staircase(const Grid& grid, const detail::NodeMatrices& J,
                                           const std::vector<std::size_t>& order)
{
    std::size_t n = grid.dim(), N = grid.size();
    std::vector<std::vector<double>> f(n, std::vector<double>(N, 0.0));
    for (std::size_t s = 0; s < order.size(); ++s) {
        std::size_t a = order[s];
        std::vector<bool> fixed(n, false);
        for (std::size_t r = s + 1; r < order.size(); ++r)
            fixed[order[r]] = true;
        std::size_t stride = grid.stride(a), m = grid.count(a), b = grid.base[a];
        double h = grid.spacing(a);
        std::vector<double> g(m);
        detail::line_starts(grid, a, fixed, [&](std::size_t start) {
            std::size_t first = start - b * stride;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& col = J[i * n + a];
                for (std::size_t k = 0; k < m; ++k)
                    g[k] = col[first + k * stride];
                for (std::size_t k = b; k + 1 < m; ++k)
                    f[i][first + (k + 1) * stride] = f[i][first + k * stride] + cell_integral(g, k, h);
                for (std::size_t k = b; k > 0; --k)
                    f[i][first + (k - 1) * stride] = f[i][first + k * stride] - cell_integral(g, k - 1, h);
            }
        });
    }
    return f;
}

}  // namespace

void reconstruct_flux(SolutionField& sol, const geometry::Frame& frame, const Tolerances&)
{
    if (sol.lambda.size() != frame.n() || sol.u.size() != sol.grid.size())
        throw IntegrationError("flux: eigenvalue field is incomplete");
    for (std::size_t node = 0; node < sol.u.size(); ++node)
        for (double x : sol.u[node])
            if (!std::isfinite(x))
                throw IntegrationError("flux: state undefined at grid node " +
                                       detail::format_point(sol.grid.point(node)));
    auto R = detail::frame_at_nodes(sol, frame);
    auto J = detail::grid_jacobian(sol, R);
    std::vector<std::size_t> order(frame.n());
    std::iota(order.begin(), order.end(), 0);
    sol.flux = staircase(sol.grid, J, order);
    std::reverse(order.begin(), order.end());
    auto back = staircase(sol.grid, J, order);
    double gap = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i)
        for (std::size_t node = 0; node < back[i].size(); ++node)
            gap = std::max(gap, std::abs(back[i][node] - sol.flux[i][node]));
    sol.residuals.path = gap;
}

}  // namespace eigenframe::solver
